#include "coalsec/error.hpp"
#include "coalsec/formation.hpp"
#include "coalsec/set_partitions.hpp"
#include "support.hpp"

#include <doctest.h>

#include <set>

using namespace coalsec;
using coalsec::testing::make_state;
using coalsec::testing::random_state;

namespace {

FormationConfig df_config()
{
    return FormationConfig{};
}

std::vector<Payoff> values_of(const Coalition& s, const NetworkState& state)
{
    std::vector<Payoff> out;
    for (UserId u : s.members())
        out.push_back(coalition_payoff(u, s.span(), Protocol::df, state));
    return out;
}

// Every legal split of c that the Pareto order prefers, in enumeration order.
std::vector<std::vector<Coalition>> preferred_splits(const Coalition& c, const NetworkState& state)
{
    std::vector<std::vector<Coalition>> out;
    const auto incumbent = values_of(c, state);
    for_each_restricted_partition(
        c.size(), state.num_eavesdroppers() + 1, 2, c.size(),
        [&](std::span<const std::uint8_t> labels, std::size_t m) {
            std::vector<std::vector<UserId>> members(m);
            for (std::size_t k = 0; k < labels.size(); ++k)
                members[labels[k]].push_back(c.members()[k]);
            std::vector<Coalition> parts;
            for (auto& b : members)
                parts.emplace_back(std::move(b));
            std::vector<Payoff> split(c.size());
            for (const auto& part : parts)
                for (UserId u : part.members()) {
                    const auto pos = std::find(c.members().begin(), c.members().end(), u) -
                                     c.members().begin();
                    split[static_cast<std::size_t>(pos)] =
                        coalition_payoff(u, part.span(), Protocol::df, state);
                }
            if (pareto_improves(split, incumbent))
                out.push_back(parts);
            return false;
        });
    return out;
}

void check_event_monotone(const FormationEvent& e)
{
    bool strict = false;
    for (const auto& [u, after] : e.payoffs_after.entries()) {
        const Payoff before = e.payoffs_before.at(u);
        CHECK(after >= before);
        strict = strict || after > before;
    }
    CHECK(strict);
}

} // namespace

TEST_CASE("neighbor discovery uses the discovery radius")
{
    const auto at_radius = make_state({{0, 0}, {1000, 0}}, {{0, 500}}, {{-50, 0}});
    auto n = discover_neighbors(Partition::singletons(2), at_radius);
    CHECK(n[Coalition{0}] == std::vector<Coalition>{Coalition{1}});
    CHECK(n[Coalition{1}] == std::vector<Coalition>{Coalition{0}});

    const auto beyond = make_state({{0, 0}, {1001, 0}}, {{0, 500}}, {{-50, 0}});
    n = discover_neighbors(Partition::singletons(2), beyond);
    CHECK(n[Coalition{0}].empty());
    CHECK(n[Coalition{1}].empty());
}

TEST_CASE("neighbor relation is symmetric")
{
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto state = random_state(seed, 25);
        const auto n = discover_neighbors(Partition::singletons(25), state);
        for (const auto& [a, list] : n)
            for (const auto& b : list) {
                const auto& back = n.at(b);
                CHECK(std::find(back.begin(), back.end(), a) != back.end());
            }
    }
}

TEST_CASE("isolated users never merge")
{
    const auto state =
        make_state({{0, 0}, {1500, 0}, {0, 1500}, {1500, 1500}}, {{700, 700}}, {{10, 10}});
    const auto out = merge_pass(Partition::singletons(4), df_config(), state);
    CHECK(out.partition == Partition::singletons(4));
    CHECK(out.trace.empty());
}

TEST_CASE("a profitable three-user cluster merges in one event")
{
    const auto state = make_state({{30, 20}, {40, 25}, {35, 12}}, {{600, 600}}, {{0, 0}, {60, -40}});
    const Coalition trio{0, 1, 2};
    const auto merged = values_of(trio, state);
    for (UserId u = 0; u < 3; ++u)
        REQUIRE(merged[u] > noncooperative_secrecy_rate(u, state));

    const auto out = merge_pass(Partition::singletons(3), df_config(), state);
    REQUIRE(out.trace.events.size() == 1);
    const auto& e = out.trace.events.front();
    CHECK(e.kind == EventKind::merge);
    CHECK(e.after == std::vector<Coalition>{trio});
    CHECK(e.before.size() == 3);
    CHECK(out.partition == Partition({trio}, 3));
}

TEST_CASE("merges never try two-user coalitions when K = 2")
{
    // Evaluating a size-2 coalition with K = 2 would throw InvalidCoalitionSize.
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto state = random_state(seed, 20, 2, 1200);
        FormationResult out;
        CHECK_NOTHROW(out = run_formation(Partition::singletons(20), df_config(), state));
        for (const auto& b : out.partition.blocks())
            CHECK(b.size() != 2);
    }
}

TEST_CASE("all-singleton partitions have nothing to split")
{
    const auto state = random_state(1, 10);
    const auto out = split_pass(Partition::singletons(10), df_config(), state);
    CHECK(out.partition == Partition::singletons(10));
    CHECK(out.trace.empty());
}

TEST_CASE("a coalition with a costly far member splits")
{
    // Users 0-2 cluster near the eavesdroppers; user 3 sits 900 m away next
    // to its destination and pays almost all its power to reach them.
    const auto state = make_state({{30, 20}, {40, 25}, {35, 12}, {930, 20}},
                                  {{600, 600}, {1000, 0}}, {{0, 0}, {60, -40}});
    const Coalition all{0, 1, 2, 3};
    const auto preferred = preferred_splits(all, state);
    REQUIRE_FALSE(preferred.empty());

    const auto inside = values_of(all, state);
    CHECK(inside[3] < noncooperative_secrecy_rate(3, state));

    const auto out = split_pass(Partition({all}, 4), df_config(), state);
    REQUIRE_FALSE(out.trace.empty());
    const auto& e = out.trace.events.front();
    CHECK(e.kind == EventKind::split);
    CHECK(e.before == std::vector<Coalition>{all});
    std::vector<Coalition> expected = preferred.front();
    std::sort(expected.begin(), expected.end());
    std::vector<Coalition> got = e.after;
    std::sort(got.begin(), got.end());
    CHECK(got == expected);
    check_event_monotone(e);
}

TEST_CASE("a coalition whose every split hurts someone stays together")
{
    const auto state = make_state({{30, 20}, {40, 25}, {35, 12}, {25, 28}}, {{600, 600}},
                                  {{0, 0}, {60, -40}});
    const Coalition all{0, 1, 2, 3};
    REQUIRE(preferred_splits(all, state).empty());
    const auto out = split_pass(Partition({all}, 4), df_config(), state);
    CHECK(out.trace.empty());
    CHECK(out.partition == Partition({all}, 4));
}

TEST_CASE("single user")
{
    const auto state = make_state({{0, 0}}, {{100, 0}}, {{0, 100}});
    const auto out = run_formation(Partition::singletons(1), df_config(), state);
    CHECK(out.trace.empty());
    CHECK(out.partition.size() == 1);
}

TEST_CASE("round cap")
{
    const auto state = make_state({{30, 20}, {40, 25}, {35, 12}}, {{600, 600}}, {{0, 0}, {60, -40}});
    FormationConfig cfg = df_config();
    cfg.max_rounds = 1;
    CHECK_THROWS_AS(run_formation(Partition::singletons(3), cfg, state), RoundCapExceeded);
    cfg.max_rounds = 2;
    CHECK_NOTHROW(run_formation(Partition::singletons(3), cfg, state));
}

TEST_CASE("illegal initial partitions are rejected")
{
    const auto state = random_state(3, 5, 2, 600);
    CHECK_THROWS_AS(run_formation(Partition({{0, 1}, {2}, {3}, {4}}, 5), df_config(), state),
                    InvalidCoalitionSize);
    FormationConfig bad = df_config();
    bad.max_merge_set = 1;
    CHECK_THROWS_AS(run_formation(Partition::singletons(5), bad, state), ValidationError);
}

TEST_CASE("formation properties on random networks")
{
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const std::size_t n = 5 + seed % 16;
        const std::size_t k = 1 + seed % 3;
        const double side = seed % 2 ? 1000.0 : 2000.0;
        const auto state = random_state(seed * 7 + 1, n, k, side);
        for (Protocol p : {Protocol::df, Protocol::af}) {
            FormationConfig cfg;
            cfg.protocol = p;
            const auto start = Partition::singletons(n);
            const auto out = run_formation(start, cfg, state);

            // replay, intermediate validity and no revisits
            std::set<std::string> seen{to_string(start)};
            Partition current = start;
            for (const auto& e : out.trace.events) {
                check_event_monotone(e);
                FormationTrace one;
                one.events.push_back(e);
                current = replay(current, one);
                CHECK(seen.insert(to_string(current)).second);
                for (const auto& b : current.blocks())
                    CHECK(legal_coalition_size(b.size(), k));
                for (const auto& c : e.after) {
                    const auto v = coalition_value(c, p, state);
                    for (const auto& [u, pay] : v.entries())
                        CHECK(e.payoffs_after.at(u) == pay);
                }
            }
            CHECK(current == out.partition);
            CHECK(replay(start, out.trace) == out.partition);

            for (const auto& b : out.partition.blocks()) {
                const auto v = coalition_value(b, p, state);
                for (const auto& [u, pay] : v.entries())
                    CHECK(pay >= noncooperative_secrecy_rate(u, state));
            }

            const auto again = run_formation(start, cfg, state);
            CHECK(again.partition == out.partition);
            CHECK(again.trace.events.size() == out.trace.events.size());
        }
    }
}

TEST_CASE("replay rejects inconsistent traces")
{
    FormationTrace t;
    FormationEvent e;
    e.before = {Coalition{0, 1, 2}};
    e.after = {Coalition{0}, Coalition{1}, Coalition{2}};
    t.events.push_back(e);
    CHECK_THROWS_AS(replay(Partition::singletons(3), t), ValidationError);
}

TEST_CASE("payoff cache counts evaluations once")
{
    const auto state = random_state(5, 8, 2, 800);
    PayoffCache cache(state, Protocol::df);
    const Coalition s{1, 2, 3};
    const auto first = cache.payoffs(s);
    const auto evaluated = cache.evaluations();
    CHECK(cache.payoffs(s) == first);
    CHECK(cache.evaluations() == evaluated);
    CHECK(cache.value(s).at(2) == coalition_payoff(2, s.span(), Protocol::df, state));
}
