#pragma once

// Secrecy rates for a user's TDMA slot: the non-cooperative rate, the DF and
// AF nulling beamformers, the exchange-phase leakage cost and the resulting
// payoff of a user inside a coalition.

#include "coalsec/beamforming.hpp"
#include "coalsec/geometry.hpp"

#include <compare>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace coalsec {

/// Extended-real payoff in bits/s/Hz: a finite non-negative rate or the
/// negative-infinity sentinel (all slot power consumed by the exchange).
class Payoff
{
public:
    constexpr Payoff() = default;

    /// Negative inputs are clamped to zero.
    static Payoff rate(double bits_per_s_hz);
    static constexpr Payoff negative_infinity()
    {
        Payoff p;
        p.value_ = -std::numeric_limits<double>::infinity();
        return p;
    }

    constexpr bool is_negative_infinity() const { return value_ == -std::numeric_limits<double>::infinity(); }
    constexpr bool is_finite() const { return !is_negative_infinity(); }
    /// The rate, or -infinity for the sentinel.
    constexpr double value() const { return value_; }

    friend constexpr bool operator==(Payoff a, Payoff b) { return a.value_ == b.value_; }
    friend constexpr std::strong_ordering operator<=>(Payoff a, Payoff b)
    {
        if (a.value_ < b.value_)
            return std::strong_ordering::less;
        if (a.value_ > b.value_)
            return std::strong_ordering::greater;
        return std::strong_ordering::equal;
    }

private:
    double value_ = 0.0;
};

std::string to_string(Payoff p);

/// All channels of a network snapshot, precomputed. Must not outlive the
/// state it was built from.
class ChannelTable
{
public:
    explicit ChannelTable(const NetworkState& state);

    const NetworkState& state() const { return *state_; }
    ComplexChannel user_destination(UserId j, std::size_t m) const { return to_destination_[j * m_ + m]; }
    ComplexChannel user_eavesdropper(UserId j, std::size_t k) const { return to_eavesdropper_[j * k_ + k]; }
    ComplexChannel user_user(UserId i, UserId j) const { return between_users_[i * n_ + j]; }

private:
    const NetworkState* state_;
    std::size_t n_, m_, k_;
    std::vector<ComplexChannel> to_destination_, to_eavesdropper_, between_users_;
};

/// Bookkeeping for user i's slot when it belongs to coalition S.
struct SlotContext
{
    UserId owner = 0;
    std::vector<UserId> coalition;
    double residual_power_w = 0.0;
    double exchange_power_w = 0.0;
};

SlotContext make_slot_context(UserId i, std::span<const UserId> coalition,
                              const NetworkState& state);

/// Channel vectors for owner i's slot, indexed in coalition order. All
/// members beamform toward the owner's destination.
struct SlotChannels
{
    CVector to_destination; ///< h_S
    CMatrix to_eavesdroppers; ///< G_S, |S| x K
    CVector af_signal; ///< a_S^i
    RVector af_noise_gain; ///< diagonal of U_S^i
    RVector af_power_weight; ///< weight of |w_j|^2 in the power constraint; all ones
};

SlotChannels make_slot_channels(const SlotContext& slot, const NetworkState& state);

/// (C^d - max_k C^e_k)^+ over the full slot at full power.
Payoff noncooperative_secrecy_rate(UserId i, const NetworkState& state);

BeamformerSolution df_beamformer(UserId i, std::span<const UserId> coalition,
                                 const NetworkState& state);

/// Relay gains constrained by ||w||^2 = residual power, like DF.
BeamformerSolution af_beamformer(UserId i, std::span<const UserId> coalition,
                                 const NetworkState& state);

/// Leakage of the exchange broadcast: max_k 1/2 log2(1 + P_exch |g_ik|^2 / sigma^2).
double exchange_secrecy_cost(UserId i, std::span<const UserId> coalition,
                             const NetworkState& state);

/// Payoff of user i in coalition S. Singletons get the non-cooperative
/// rate; coalitions of size 2..K are rejected with InvalidCoalitionSize.
Payoff coalition_payoff(UserId i, std::span<const UserId> coalition, Protocol protocol,
                        const NetworkState& state);

Payoff coalition_payoff(UserId i, std::span<const UserId> coalition, Protocol protocol,
                        const ChannelTable& channels);

/// Sizes allowed by nulling K eavesdroppers: 1 or more than K.
constexpr bool legal_coalition_size(std::size_t size, std::size_t num_eavesdroppers)
{
    return size == 1 || size > num_eavesdroppers;
}

} // namespace coalsec
