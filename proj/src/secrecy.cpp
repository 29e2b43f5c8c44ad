#include "coalsec/secrecy.hpp"

#include "coalsec/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace coalsec {

Payoff Payoff::rate(double bits_per_s_hz)
{
    Payoff p;
    p.value_ = std::max(bits_per_s_hz, 0.0);
    return p;
}

std::string to_string(Payoff p)
{
    if (p.is_negative_infinity())
        return "-inf";
    std::ostringstream os;
    os.precision(12);
    os << p.value();
    return os.str();
}

ChannelTable::ChannelTable(const NetworkState& state)
    : state_(&state),
      n_(state.num_users()),
      m_(state.num_destinations()),
      k_(state.num_eavesdroppers()),
      to_destination_(n_ * m_),
      to_eavesdropper_(n_ * k_),
      between_users_(n_ * n_)
{
    const auto& radio = state.radio;
    for (std::size_t j = 0; j < n_; ++j) {
        const Vec2 pj = state.user_positions[j];
        for (std::size_t m = 0; m < m_; ++m)
            to_destination_[j * m_ + m] = channel_gain(pj, state.destination_positions[m], radio);
        for (std::size_t k = 0; k < k_; ++k)
            to_eavesdropper_[j * k_ + k] = channel_gain(pj, state.eavesdropper_positions[k], radio);
        for (std::size_t i = j + 1; i < n_; ++i) {
            const auto q = channel_gain(pj, state.user_positions[i], radio);
            between_users_[j * n_ + i] = q;
            between_users_[i * n_ + j] = q;
        }
    }
}

namespace {

// Computes channels on demand; same interface as ChannelTable.
class DirectChannels
{
public:
    explicit DirectChannels(const NetworkState& state) : state_(&state) {}

    const NetworkState& state() const { return *state_; }
    ComplexChannel user_destination(UserId j, std::size_t m) const
    {
        return channel_gain(state_->user_positions.at(j), state_->destination_positions.at(m),
                            state_->radio);
    }
    ComplexChannel user_eavesdropper(UserId j, std::size_t k) const
    {
        return channel_gain(state_->user_positions.at(j), state_->eavesdropper_positions.at(k),
                            state_->radio);
    }
    ComplexChannel user_user(UserId i, UserId j) const
    {
        return channel_gain(state_->user_positions.at(i), state_->user_positions.at(j),
                            state_->radio);
    }

private:
    const NetworkState* state_;
};

template <typename Channels>
SlotContext slot_context(UserId i, std::span<const UserId> coalition, const Channels& ch)
{
    const NetworkState& state = ch.state();
    SlotContext slot;
    slot.owner = i;
    slot.coalition.assign(coalition.begin(), coalition.end());
    if (std::find(coalition.begin(), coalition.end(), i) == coalition.end())
        throw ValidationError("slot owner must belong to the coalition");
    if (coalition.size() <= 1) {
        slot.residual_power_w = state.radio.total_slot_power_w;
        return slot;
    }
    const UserId far = farthest_member(i, coalition, state);
    slot.exchange_power_w = state.radio.exchange_snr_linear * state.radio.noise_variance_w /
                            std::norm(ch.user_user(i, far));
    slot.residual_power_w = std::max(state.radio.total_slot_power_w - slot.exchange_power_w, 0.0);
    return slot;
}

template <typename Channels>
SlotChannels slot_channels(const SlotContext& slot, const Channels& src)
{
    const NetworkState& state = src.state();
    const auto n = static_cast<Eigen::Index>(slot.coalition.size());
    const auto k = static_cast<Eigen::Index>(state.num_eavesdroppers());
    const std::size_t destination = state.assignment.at(slot.owner);
    const double exchange_amplitude = std::sqrt(slot.exchange_power_w);

    SlotChannels ch;
    ch.to_destination.resize(n);
    ch.to_eavesdroppers.resize(n, k);
    ch.af_signal.resize(n);
    ch.af_noise_gain.resize(n);
    ch.af_power_weight = RVector::Ones(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const UserId j = slot.coalition[static_cast<std::size_t>(r)];
        const ComplexChannel h = src.user_destination(j, destination);
        ch.to_destination(r) = h;
        for (Eigen::Index e = 0; e < k; ++e)
            ch.to_eavesdroppers(r, e) = src.user_eavesdropper(j, static_cast<std::size_t>(e));
        if (j == slot.owner) {
            ch.af_signal(r) = exchange_amplitude * h;
            ch.af_noise_gain(r) = 0.0;
        } else {
            const ComplexChannel q = src.user_user(slot.owner, j);
            ch.af_signal(r) = exchange_amplitude * q * h;
            ch.af_noise_gain(r) = std::norm(h);
        }
    }
    return ch;
}

template <typename Channels>
Payoff noncooperative(UserId i, const Channels& ch)
{
    const NetworkState& state = ch.state();
    const double snr_scale = state.radio.total_slot_power_w / state.radio.noise_variance_w;
    const double to_destination =
        std::log2(1.0 + snr_scale * std::norm(ch.user_destination(i, state.assignment.at(i))));
    double to_eavesdropper = 0.0;
    for (std::size_t k = 0; k < state.num_eavesdroppers(); ++k)
        to_eavesdropper = std::max(
            to_eavesdropper, std::log2(1.0 + snr_scale * std::norm(ch.user_eavesdropper(i, k))));
    return Payoff::rate(to_destination - to_eavesdropper);
}

template <typename Channels>
double leakage(UserId i, double exchange_power, const Channels& ch)
{
    const NetworkState& state = ch.state();
    double worst = 0.0;
    for (std::size_t k = 0; k < state.num_eavesdroppers(); ++k) {
        const double snr =
            exchange_power * std::norm(ch.user_eavesdropper(i, k)) / state.radio.noise_variance_w;
        worst = std::max(worst, 0.5 * std::log2(1.0 + snr));
    }
    return worst;
}

template <typename Channels>
Payoff payoff(UserId i, std::span<const UserId> coalition, Protocol protocol, const Channels& src)
{
    const NetworkState& state = src.state();
    if (coalition.size() == 1) {
        if (coalition[0] != i)
            throw ValidationError("slot owner must belong to the coalition");
        return noncooperative(i, src);
    }
    if (!legal_coalition_size(coalition.size(), state.num_eavesdroppers()))
        throw InvalidCoalitionSize("coalition of " + std::to_string(coalition.size()) +
                                   " users cannot null " +
                                   std::to_string(state.num_eavesdroppers()) + " eavesdroppers");

    const SlotContext slot = slot_context(i, coalition, src);
    if (!(slot.residual_power_w > 0.0))
        return Payoff::negative_infinity();

    const SlotChannels ch = slot_channels(slot, src);
    const double noise = state.radio.noise_variance_w;
    const double gain =
        protocol == Protocol::df
            ? solve_df(ch.to_destination, ch.to_eavesdroppers, slot.residual_power_w, noise)
                  .achieved_rate
            : solve_af(ch.af_signal, ch.af_noise_gain, ch.af_power_weight, ch.to_eavesdroppers,
                       slot.residual_power_w, noise)
                  .achieved_rate;
    return Payoff::rate(gain - leakage(i, slot.exchange_power_w, src));
}

} // namespace

SlotContext make_slot_context(UserId i, std::span<const UserId> coalition,
                              const NetworkState& state)
{
    return slot_context(i, coalition, DirectChannels(state));
}

SlotChannels make_slot_channels(const SlotContext& slot, const NetworkState& state)
{
    return slot_channels(slot, DirectChannels(state));
}

Payoff noncooperative_secrecy_rate(UserId i, const NetworkState& state)
{
    return noncooperative(i, DirectChannels(state));
}

BeamformerSolution df_beamformer(UserId i, std::span<const UserId> coalition,
                                 const NetworkState& state)
{
    const SlotContext slot = make_slot_context(i, coalition, state);
    const SlotChannels ch = make_slot_channels(slot, state);
    return solve_df(ch.to_destination, ch.to_eavesdroppers, slot.residual_power_w,
                    state.radio.noise_variance_w);
}

BeamformerSolution af_beamformer(UserId i, std::span<const UserId> coalition,
                                 const NetworkState& state)
{
    const SlotContext slot = make_slot_context(i, coalition, state);
    if (!(slot.exchange_power_w > 0.0))
        throw NoPower("AF needs a positive exchange power");
    const SlotChannels ch = make_slot_channels(slot, state);
    return solve_af(ch.af_signal, ch.af_noise_gain, ch.af_power_weight, ch.to_eavesdroppers,
                    slot.residual_power_w, state.radio.noise_variance_w);
}

double exchange_secrecy_cost(UserId i, std::span<const UserId> coalition,
                             const NetworkState& state)
{
    const DirectChannels ch(state);
    return leakage(i, slot_context(i, coalition, ch).exchange_power_w, ch);
}

Payoff coalition_payoff(UserId i, std::span<const UserId> coalition, Protocol protocol,
                        const NetworkState& state)
{
    return payoff(i, coalition, protocol, DirectChannels(state));
}

Payoff coalition_payoff(UserId i, std::span<const UserId> coalition, Protocol protocol,
                        const ChannelTable& channels)
{
    return payoff(i, coalition, protocol, channels);
}

} // namespace coalsec
