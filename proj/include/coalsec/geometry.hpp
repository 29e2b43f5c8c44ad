#pragma once

// Node placement, line-of-sight channels and information-exchange power
// accounting. Everything here works in watts and meters.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace coalsec {

using UserId = std::size_t;
using ComplexChannel = std::complex<double>;

struct Vec2
{
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Vec2&, const Vec2&) = default;
};

double distance(Vec2 a, Vec2 b);

enum class Role { user, destination, eavesdropper };

struct NodeId
{
    std::size_t index = 0;
    Role role = Role::user;

    friend bool operator==(const NodeId&, const NodeId&) = default;
};

enum class PhaseModel {
    geometric, ///< phi = 2*pi*d/lambda mod 2*pi
    uniform,   ///< seeded uniform phase, fixed per endpoint pair
};

struct RadioParams
{
    double total_slot_power_w = 0.01;
    double noise_variance_w = 1e-12;
    double pathloss_exponent = 3.0;
    double exchange_snr_linear = 10.0;
    double carrier_wavelength_m = 0.125;
    PhaseModel phase_model = PhaseModel::geometric;
    std::uint64_t phase_seed = 0;

    /// Throws ValidationError when a field is out of range.
    void validate() const;
};

struct NetworkState
{
    std::vector<Vec2> user_positions;
    std::vector<Vec2> destination_positions;
    std::vector<Vec2> eavesdropper_positions;
    RadioParams radio;
    /// assignment[i] is the destination index of user i.
    std::vector<std::size_t> assignment;

    std::size_t num_users() const { return user_positions.size(); }
    std::size_t num_destinations() const { return destination_positions.size(); }
    std::size_t num_eavesdroppers() const { return eavesdropper_positions.size(); }

    Vec2 position(NodeId node) const;

    /// Checks index ranges, assignment shape and radio parameters.
    void validate() const;
};

/// Complex baseband gain d^(-mu/2) e^{j phi} between two points.
ComplexChannel channel_gain(Vec2 a, Vec2 b, const RadioParams& radio);

/// Power user i spends so that user i_hat receives the exchange at SNR nu0.
double exchange_power_cost(UserId i, UserId i_hat, const NetworkState& state);

/// Coalition member farthest from i (lowest id on ties). Requires |coalition| >= 2.
UserId farthest_member(UserId i, std::span<const UserId> coalition, const NetworkState& state);

/// Power left for the cooperative transmission in user i's slot. For a
/// singleton this is the full slot power.
double residual_power(UserId i, std::span<const UserId> coalition, const NetworkState& state);

/// Distance at which the exchange power cost equals the slot power.
double discovery_radius(const RadioParams& radio);

/// True when two points are close enough to exchange within the slot power.
/// Allows a 1e-9 relative slack so that the exact radius counts as inside.
bool within_discovery(Vec2 a, Vec2 b, const RadioParams& radio);

/// Maps each user to its nearest destination, lowest index on ties.
std::vector<std::size_t> assign_closest_destination(const NetworkState& state);

double db_to_linear(double db);
double dbm_to_watts(double dbm);

} // namespace coalsec
