#include "coalsec/geometry.hpp"

#include "coalsec/error.hpp"
#include "coalsec/random.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <string>

namespace coalsec {

double distance(Vec2 a, Vec2 b)
{
    return std::hypot(a.x - b.x, a.y - b.y);
}

void RadioParams::validate() const
{
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw ValidationError(std::string(name) + " must be finite and > 0");
    };
    positive(total_slot_power_w, "total_slot_power_w");
    positive(noise_variance_w, "noise_variance_w");
    positive(exchange_snr_linear, "exchange_snr_linear");
    positive(carrier_wavelength_m, "carrier_wavelength_m");
    positive(pathloss_exponent, "pathloss_exponent");
    if (pathloss_exponent < 2.0)
        throw ValidationError("pathloss_exponent must be >= 2");
}

Vec2 NetworkState::position(NodeId node) const
{
    switch (node.role) {
    case Role::user: return user_positions.at(node.index);
    case Role::destination: return destination_positions.at(node.index);
    case Role::eavesdropper: return eavesdropper_positions.at(node.index);
    }
    return {};
}

void NetworkState::validate() const
{
    radio.validate();
    if (destination_positions.empty())
        throw NoDestinations("network has no destinations");
    if (assignment.size() != user_positions.size())
        throw ValidationError("assignment must map every user to a destination");
    for (std::size_t d : assignment)
        if (d >= destination_positions.size())
            throw ValidationError("assignment refers to unknown destination " + std::to_string(d));
}

namespace {

double link_phase(Vec2 a, Vec2 b, double d, const RadioParams& radio)
{
    constexpr double two_pi = 2.0 * std::numbers::pi;
    if (radio.phase_model == PhaseModel::geometric)
        return std::fmod(two_pi * d / radio.carrier_wavelength_m, two_pi);

    // Endpoint order must not matter, so hash the lexicographically smaller
    // point first.
    if (std::tie(b.x, b.y) < std::tie(a.x, a.y))
        std::swap(a, b);
    std::uint64_t h = radio.phase_seed;
    for (double c : {a.x, a.y, b.x, b.y})
        h = splitmix64(h ^ std::bit_cast<std::uint64_t>(c));
    return two_pi * unit_interval(h);
}

} // namespace

ComplexChannel channel_gain(Vec2 a, Vec2 b, const RadioParams& radio)
{
    const double d = distance(a, b);
    if (!(d > 0.0))
        throw ZeroDistance("channel endpoints coincide");
    const double magnitude = std::pow(d, -radio.pathloss_exponent / 2.0);
    return std::polar(magnitude, link_phase(a, b, d, radio));
}

double exchange_power_cost(UserId i, UserId i_hat, const NetworkState& state)
{
    const auto q = channel_gain(state.user_positions.at(i), state.user_positions.at(i_hat),
                                state.radio);
    return state.radio.exchange_snr_linear * state.radio.noise_variance_w / std::norm(q);
}

UserId farthest_member(UserId i, std::span<const UserId> coalition, const NetworkState& state)
{
    const Vec2 origin = state.user_positions.at(i);
    UserId best = i;
    double best_distance = -1.0;
    for (UserId j : coalition) {
        if (j == i)
            continue;
        const double d = distance(origin, state.user_positions.at(j));
        if (d > best_distance) {
            best_distance = d;
            best = j;
        }
    }
    if (best == i)
        throw InvalidCoalitionSize("farthest member needs a partner");
    return best;
}

double residual_power(UserId i, std::span<const UserId> coalition, const NetworkState& state)
{
    const double total = state.radio.total_slot_power_w;
    if (coalition.size() <= 1)
        return total;
    const double cost = exchange_power_cost(i, farthest_member(i, coalition, state), state);
    return std::max(total - cost, 0.0);
}

double discovery_radius(const RadioParams& radio)
{
    const double ratio =
        radio.total_slot_power_w / (radio.exchange_snr_linear * radio.noise_variance_w);
    return std::pow(ratio, 1.0 / radio.pathloss_exponent);
}

bool within_discovery(Vec2 a, Vec2 b, const RadioParams& radio)
{
    return distance(a, b) <= discovery_radius(radio) * (1.0 + 1e-9);
}

std::vector<std::size_t> assign_closest_destination(const NetworkState& state)
{
    if (state.destination_positions.empty())
        throw NoDestinations("cannot assign users without destinations");
    std::vector<std::size_t> out(state.num_users(), 0);
    for (std::size_t i = 0; i < state.num_users(); ++i) {
        double best = distance(state.user_positions[i], state.destination_positions[0]);
        for (std::size_t m = 1; m < state.num_destinations(); ++m) {
            const double d = distance(state.user_positions[i], state.destination_positions[m]);
            if (d < best) {
                best = d;
                out[i] = m;
            }
        }
    }
    return out;
}

double db_to_linear(double db)
{
    return std::pow(10.0, db / 10.0);
}

double dbm_to_watts(double dbm)
{
    return std::pow(10.0, (dbm - 30.0) / 10.0);
}

} // namespace coalsec
