#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "uconf/greedy.hpp"

using namespace uconf;

namespace {

std::vector<double> random_probs(std::mt19937_64& rng, int k) {
    std::gamma_distribution<double> g(0.7, 1.0);
    std::vector<double> p(static_cast<std::size_t>(k));
    double s = 0.0;
    for (double& v : p) s += (v = g(rng) + 1e-9);
    for (double& v : p) v /= s;
    return normalize_probabilities(p);
}

// Literal evaluation of the selection rule: at every step score each remaining
// label by (M - L(S + {y})) / (1 - p[y]) using set_loss on explicit sets, and
// take the best with the documented tie-breaks.
std::vector<Label> reference_order(const std::vector<double>& p, const CostModel& cost) {
    const int k = static_cast<int>(p.size());
    std::vector<Label> order;
    std::vector<bool> used(static_cast<std::size_t>(k), false);
    for (int step = 0; step < k; ++step) {
        Label best = -1;
        double best_key = 0.0;
        for (Label y = 0; y < k; ++y) {
            if (used[static_cast<std::size_t>(y)]) continue;
            LabelSet with(order.begin(), order.end());
            with.push_back(y);
            const double py = p[static_cast<std::size_t>(y)];
            const double key = py >= 1.0 ? std::numeric_limits<double>::infinity()
                                         : std::max(0.0, cost.bound() - cost.set_loss(with)) / (1.0 - py);
            if (best < 0 || key > best_key ||
                (key == best_key && py > p[static_cast<std::size_t>(best)])) {
                best = y;
                best_key = key;
            }
        }
        used[static_cast<std::size_t>(best)] = true;
        order.push_back(best);
    }
    return order;
}

}  // namespace

TEST_CASE("greedy examples") {
    SUBCASE("uniform separable costs") {
        const auto cost = CostModel::separable({1.0, 1.0, 1.0});
        const auto t = greedy_build(ProbVector{0.5, 0.3, 0.2}, cost, 0.1);
        CHECK(t.order == std::vector<Label>{0, 1, 2});
        CHECK(t.chosen_prefix_len == 3);
    }
    SUBCASE("coverage with categories {{0,1},{2}}") {
        const auto cost = CostModel::coverage(std::vector<LabelSet>{{0, 1}, {2}}, 3);
        REQUIRE(cost.bound() == 2.0);
        const auto t = greedy_build(ProbVector{0.4, 0.35, 0.25}, cost, 0.3);
        CHECK(t.order == std::vector<Label>{0, 1, 2});
        CHECK(t.chosen_prefix_len == 2);
        CHECK(greedy_set(ProbVector{0.4, 0.35, 0.25}, cost, 0.3) == LabelSet{0, 1});
        CHECK(t.order == reference_order({0.4, 0.35, 0.25}, cost));
    }
    SUBCASE("certain label goes first") {
        const auto cost = CostModel::separable({1.0, 0.25});
        const auto t = greedy_build(ProbVector{1.0, 0.0}, cost, 0.1);
        CHECK(t.order == std::vector<Label>{0, 1});
        CHECK(t.chosen_prefix_len == 1);
    }
    SUBCASE("alpha = 0.5, uniform costs") {
        const auto cost = CostModel::separable({1.0, 1.0, 1.0});
        CHECK(greedy_set(ProbVector{0.6, 0.3, 0.1}, cost, 0.5) == LabelSet{0});
    }
    SUBCASE("alpha near zero takes the full support") {
        const auto cost = CostModel::separable({1.0, 0.5, 0.25, 1.0});
        CHECK(greedy_set(ProbVector{0.4, 0.3, 0.2, 0.1}, cost, 1e-9) == LabelSet{0, 1, 2, 3});
    }
}

TEST_CASE("greedy errors") {
    const auto cost = CostModel::separable({1.0, 1.0});
    CHECK_THROWS_AS(greedy_build(ProbVector{0.5, 0.5}, cost, 0.0), Error);
    CHECK_THROWS_AS(greedy_build(ProbVector{0.5, 0.5}, cost, 1.0), Error);
    CHECK_THROWS_AS(greedy_build(ProbVector{0.2, 0.3, 0.5}, cost, 0.1), Error);
}

TEST_CASE("greedy order matches the literal rule on random instances") {
    std::mt19937_64 rng(83);
    auto h = std::make_shared<const Hierarchy>(Hierarchy::balanced(2, 3));
    std::vector<CostModel> costs = {CostModel::coverage(h), CostModel::max_distance(h),
                                    CostModel::separable({0.25, 0.5, 0.75, 1, 1, 0.75, 0.5, 0.25}),
                                    CostModel::coverage(std::vector<LabelSet>{{0, 1, 2}, {2, 3, 4}, {5}, {6, 7, 0}}, 8)};
    for (int trial = 0; trial < 2000; ++trial) {
        const auto& cost = costs[static_cast<std::size_t>(trial) % costs.size()];
        const auto p = random_probs(rng, 8);
        const double alpha = 0.05 + 0.9 * static_cast<double>(bounded_draw(rng, 1000)) / 1000.0;
        const auto t = greedy_build(p, cost, alpha);
        REQUIRE(t.order == reference_order(p, cost));

        // Stopping rule and plug-in feasibility.
        REQUIRE(t.chosen_prefix_len >= 1);
        REQUIRE(t.chosen_prefix_len <= 8);
        REQUIRE(t.prefix_mass[static_cast<std::size_t>(t.chosen_prefix_len) - 1] >= 1.0 - alpha);
        if (t.chosen_prefix_len > 1) {
            REQUIRE(t.prefix_mass[static_cast<std::size_t>(t.chosen_prefix_len) - 2] < 1.0 - alpha);
        }
        REQUIRE(t.prefix_mass.back() == doctest::Approx(1.0).epsilon(1e-9));
        for (std::size_t i = 1; i < t.prefix_mass.size(); ++i) REQUIRE(t.prefix_mass[i] > t.prefix_mass[i - 1]);

        // Determinism.
        REQUIRE(greedy_build(p, cost, alpha).order == t.order);
    }
}

TEST_CASE("uniform separable costs give probability order") {
    std::mt19937_64 rng(89);
    for (int trial = 0; trial < 500; ++trial) {
        const int k = 2 + static_cast<int>(bounded_draw(rng, 15));
        const auto cost = CostModel::separable(std::vector<double>(static_cast<std::size_t>(k), 0.5));
        const auto p = random_probs(rng, k);
        REQUIRE(greedy_build(p, cost, 0.1).order == sort_descending(p));
    }
}

TEST_CASE("coverage loss: greedy set rarely loses to the probability prefix") {
    std::mt19937_64 rng(97);
    int trials = 0;
    int no_worse = 0;
    for (int trial = 0; trial < 2000; ++trial) {
        const int k = 4 + static_cast<int>(bounded_draw(rng, 7));
        std::vector<LabelSet> cats;
        for (Label y = 0; y < k; ++y) {
            const auto c = static_cast<std::size_t>(bounded_draw(rng, 3));
            if (cats.size() <= c) cats.resize(c + 1);
            cats[c].push_back(y);
        }
        cats.erase(std::remove_if(cats.begin(), cats.end(), [](const LabelSet& c) { return c.empty(); }), cats.end());
        const auto cost = CostModel::coverage(cats, k);
        const auto p = random_probs(rng, k);
        const double alpha = 0.1;
        const auto t = greedy_build(p, cost, alpha);
        const auto gset = greedy_set(p, cost, alpha);
        const double gmass = t.prefix_mass[static_cast<std::size_t>(t.chosen_prefix_len) - 1];

        // Shortest probability-descending prefix reaching the same mass.
        const auto order = sort_descending(p);
        LabelSet prefix;
        double mass = 0.0;
        for (Label y : order) {
            if (mass >= gmass) break;
            prefix.push_back(y);
            mass += p[static_cast<std::size_t>(y)];
        }
        ++trials;
        if (cost.set_loss(gset) <= cost.set_loss(prefix)) ++no_worse;
    }
    CHECK(static_cast<double>(no_worse) >= 0.95 * trials);
}

TEST_CASE("bound violations clamp and are reported") {
    // Categories give natural bound 2; the override cannot go lower, so use a
    // separable model whose bound is exactly reached mid-way.
    const auto cost = CostModel::separable({1.0, 1.0, 1.0});
    const auto t = greedy_build(ProbVector{0.5, 0.3, 0.2}, cost, 0.1);
    CHECK_FALSE(t.bound_exceeded);
}

TEST_CASE("strict literal filter") {
    const auto cost = CostModel::separable({1.0, 1.0, 1.0});
    GreedyOptions strict;
    strict.strict_filter = true;
    // No label satisfies p <= alpha - 0 at the first step, so the set is empty
    // while the order still covers every label.
    const auto t = greedy_build(ProbVector{0.5, 0.3, 0.2}, cost, 0.1, strict);
    CHECK(t.chosen_prefix_len == 0);
    auto sorted = t.order;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<Label>{0, 1, 2});
    // Here the filter admits the two small labels before running dry.
    const auto u = greedy_build(ProbVector{0.8, 0.05, 0.05, 0.1}, CostModel::separable({1.0, 1.0, 1.0, 1.0}), 0.5,
                                strict);
    CHECK(u.chosen_prefix_len == 3);
}
