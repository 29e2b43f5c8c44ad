#include "coalsec/error.hpp"
#include "coalsec/secrecy.hpp"
#include "support.hpp"

#include <doctest.h>

#include <random>

using namespace coalsec;
using coalsec::testing::make_state;
using coalsec::testing::random_state;

namespace {

// Unit power and noise with mu = 2 so |h|^2 = 1 / d^2.
RadioParams unit_radio()
{
    RadioParams r;
    r.total_slot_power_w = 1.0;
    r.noise_variance_w = 1.0;
    r.pathloss_exponent = 2.0;
    r.exchange_snr_linear = 1.0;
    return r;
}

} // namespace

TEST_CASE("payoff ordering and clamping")
{
    CHECK(Payoff::rate(-0.5).value() == 0.0);
    CHECK(Payoff::negative_infinity() < Payoff::rate(0.0));
    CHECK(Payoff::negative_infinity() == Payoff::negative_infinity());
    CHECK(Payoff::rate(1.0) > Payoff::rate(0.5));
    CHECK(to_string(Payoff::negative_infinity()) == "-inf");
}

TEST_CASE("non-cooperative secrecy rate")
{
    // SNR 3 at the destination, 1 at the eavesdropper: log2 4 - log2 2.
    const auto state = make_state({{0, 0}}, {{1.0 / std::sqrt(3.0), 0}}, {{0, 1}}, unit_radio());
    CHECK(noncooperative_secrecy_rate(0, state).value() == doctest::Approx(1.0).epsilon(1e-12));

    const auto exposed = make_state({{0, 0}}, {{100, 0}}, {{3, 0}});
    CHECK(noncooperative_secrecy_rate(0, exposed).value() == 0.0);

    const auto distant_eve = make_state({{0, 0}}, {{200, 0}}, {{1e9, 0}});
    const double capacity = std::log2(1.0 + 0.01 * std::pow(200.0, -3.0) / 1e-12);
    CHECK(noncooperative_secrecy_rate(0, distant_eve).value() ==
          doctest::Approx(capacity).epsilon(1e-9));
}

TEST_CASE("exchange secrecy cost")
{
    // Partner at distance 1 so the exchange power is nu0 sigma^2 / |q|^2 = 1.
    const auto one = make_state({{0, 0}, {1, 0}}, {{5, 5}}, {{0, 1.0 / std::sqrt(3.0)}},
                                unit_radio());
    const std::vector<UserId> pair{0, 1};
    CHECK(exchange_secrecy_cost(0, pair, one) == doctest::Approx(1.0).epsilon(1e-12));

    const auto two = make_state({{0, 0}, {1, 0}}, {{5, 5}},
                                {{0, 1.0 / std::sqrt(3.0)}, {0, -1.0 / std::sqrt(15.0)}},
                                unit_radio());
    CHECK(exchange_secrecy_cost(0, pair, two) == doctest::Approx(2.0).epsilon(1e-12));

    const std::vector<UserId> alone{0};
    CHECK(exchange_secrecy_cost(0, alone, two) == 0.0);
}

TEST_CASE("slot context matches channel geometry")
{
    const auto state = random_state(4, 12, 2, 1500);
    const std::vector<UserId> s{1, 4, 7};
    const auto slot = make_slot_context(4, s, state);
    CHECK(slot.residual_power_w == residual_power(4, s, state));
    CHECK(slot.exchange_power_w ==
          doctest::Approx(exchange_power_cost(4, farthest_member(4, s, state), state)));
}

TEST_CASE("coalition payoff edge cases")
{
    const auto state = make_state({{0, 0}, {1000.5, 0}, {400, 300}, {200, 10}}, {{0, 900}, {2000, 0}},
                                  {{-300, 0}, {700, -500}});
    const std::vector<UserId> alone{2};
    CHECK(coalition_payoff(2, alone, Protocol::df, state) == noncooperative_secrecy_rate(2, state));
    CHECK(coalition_payoff(2, alone, Protocol::af, state) == noncooperative_secrecy_rate(2, state));

    const std::vector<UserId> pair{0, 3};
    CHECK_THROWS_AS(coalition_payoff(0, pair, Protocol::df, state), InvalidCoalitionSize);

    // Users 0 and 1 are just beyond discovery range of each other.
    const std::vector<UserId> trio{0, 1, 2};
    CHECK(coalition_payoff(0, trio, Protocol::df, state).is_negative_infinity());
    CHECK(coalition_payoff(1, trio, Protocol::df, state).is_negative_infinity());
    CHECK(coalition_payoff(2, trio, Protocol::df, state).is_finite());
}

TEST_CASE("cost above gain clamps the payoff to zero")
{
    // Partners far apart relative to the eavesdropper: the exchange leaks
    // more than the cooperative link gains.
    const auto state = make_state({{0, 0}, {900, 0}, {0, 900}}, {{3000, 3000}}, {{5, 5}},
                                  RadioParams{});
    const std::vector<UserId> trio{0, 1, 2};
    const auto p = coalition_payoff(0, trio, Protocol::df, state);
    REQUIRE(p.is_finite());
    CHECK(exchange_secrecy_cost(0, trio, state) >= df_beamformer(0, trio, state).achieved_rate);
    CHECK(p.value() == 0.0);
}

TEST_CASE("cached and direct payoffs agree")
{
    const auto state = random_state(21, 20, 2, 1200);
    const ChannelTable table(state);
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<UserId> s;
        std::uniform_int_distribution<UserId> pick(0, 19);
        while (s.size() < 4) {
            const UserId u = pick(rng);
            if (std::find(s.begin(), s.end(), u) == s.end())
                s.push_back(u);
        }
        std::sort(s.begin(), s.end());
        for (UserId i : s)
            for (Protocol p : {Protocol::df, Protocol::af})
                CHECK(coalition_payoff(i, s, p, table) == coalition_payoff(i, s, p, state));
    }
}

TEST_CASE("payoffs are non-negative or -infinity, and beamformers null")
{
    std::mt19937_64 rng(6);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto state = random_state(seed, 15, 2, 1500);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<UserId> s;
            std::uniform_int_distribution<UserId> pick(0, 14);
            std::uniform_int_distribution<std::size_t> size(3, 6);
            const std::size_t target = size(rng);
            while (s.size() < target) {
                const UserId u = pick(rng);
                if (std::find(s.begin(), s.end(), u) == s.end())
                    s.push_back(u);
            }
            std::sort(s.begin(), s.end());
            for (UserId i : s) {
                for (Protocol p : {Protocol::df, Protocol::af}) {
                    const Payoff v = coalition_payoff(i, s, p, state);
                    CHECK((v.is_negative_infinity() || v.value() >= 0.0));
                }
                const auto slot = make_slot_context(i, s, state);
                if (!(slot.residual_power_w > 0.0))
                    continue;
                const auto ch = make_slot_channels(slot, state);
                for (const auto& sol : {df_beamformer(i, s, state), af_beamformer(i, s, state)}) {
                    for (Eigen::Index e = 0; e < ch.to_eavesdroppers.cols(); ++e)
                        CHECK(std::abs(ch.to_eavesdroppers.col(e).dot(sol.weights)) <=
                              1e-9 * sol.weights.norm() * ch.to_eavesdroppers.col(e).norm());
                    CHECK(sol.weights.squaredNorm() <= slot.residual_power_w * (1 + 1e-9));
                }
            }
        }
    }
}

TEST_CASE("members beamform toward the slot owner's destination")
{
    const auto state = make_state({{0, 0}, {30, 0}, {0, 40}}, {{-100, 0}, {130, 0}}, {{200, 200}});
    REQUIRE(state.assignment[0] == 0);
    REQUIRE(state.assignment[1] == 1);
    const std::vector<UserId> trio{0, 1, 2};
    const auto ch = make_slot_channels(make_slot_context(0, trio, state), state);
    CHECK(ch.to_destination(1) ==
          channel_gain(state.user_positions[1], state.destination_positions[0], state.radio));
}
