#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "uconf/core.hpp"

using namespace uconf;

namespace {

ScoreMatrix uniform_matrix(std::size_t n, int k) {
    std::vector<std::string> ids;
    std::vector<Label> labels;
    std::vector<double> probs;
    for (std::size_t i = 0; i < n; ++i) {
        ids.push_back("x" + std::to_string(i));
        labels.push_back(static_cast<Label>(i % static_cast<std::size_t>(k)));
        for (int y = 0; y < k; ++y) probs.push_back(1.0 / k);
    }
    return ScoreMatrix(LabelSpace(k), ids, labels, probs);
}

template <typename F>
ErrorKind kind_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an exception");
    return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("label space rejects degenerate and duplicate names") {
    CHECK(kind_of([] { LabelSpace(1); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([] { LabelSpace(2, {"a", "a"}); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([] { LabelSpace(3, {"a", "b"}); }) == ErrorKind::DimensionMismatch);
    LabelSpace ok(3, {"a", "b", "c"});
    CHECK(ok.has_names());
    CHECK(kind_of([&] { ok.check(3); }) == ErrorKind::UnknownLabel);
}

TEST_CASE("probability rows: tolerance band and rejection") {
    SUBCASE("slightly off rows are rescaled") {
        ProbVector p{0.5, 0.3, 0.1995};
        const double sum = p[0] + p[1] + p[2];
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(p[0] == doctest::Approx(0.5 / 0.9995));
    }
    SUBCASE("grossly unnormalized rows are rejected") {
        CHECK(kind_of([] { ProbVector{0.25, 0.25}; }) == ErrorKind::InvalidProbability);
    }
    SUBCASE("negative, non-finite and >1 entries are rejected") {
        CHECK(kind_of([] { ProbVector{1.1, -0.1}; }) == ErrorKind::InvalidProbability);
        CHECK(kind_of([] { ProbVector{std::nan(""), 1.0}; }) == ErrorKind::InvalidProbability);
    }
}

TEST_CASE("renormalization is idempotent") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 2000; ++trial) {
        const int k = 2 + static_cast<int>(bounded_draw(rng, 200));
        std::vector<double> raw(static_cast<std::size_t>(k));
        for (double& v : raw) v = u(rng);
        const double s = std::accumulate(raw.begin(), raw.end(), 0.0);
        const double skew = 1.0 + (u(rng) - 0.5) * 0.018;  // within the 1e-2 band
        for (double& v : raw) v = v / s * skew;
        const auto once = normalize_probabilities(raw);
        const auto twice = normalize_probabilities(once);
        REQUIRE(once == twice);
    }
}

TEST_CASE("sort_descending examples") {
    CHECK(sort_descending(std::vector<double>{0.5, 0.3, 0.2}) == std::vector<Label>{0, 1, 2});
    CHECK(sort_descending(std::vector<double>{0.2, 0.3, 0.5}) == std::vector<Label>{2, 1, 0});
    CHECK(sort_descending(std::vector<double>{0.4, 0.4, 0.2}) == std::vector<Label>{0, 1, 2});
}

TEST_CASE("sort_descending is a permutation ordered by probability then id") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 500; ++trial) {
        const int k = 2 + static_cast<int>(bounded_draw(rng, 30));
        std::vector<double> p(static_cast<std::size_t>(k));
        // Coarse values so ties are common.
        for (double& v : p) v = static_cast<double>(bounded_draw(rng, 5));
        const auto order = sort_descending(p);
        std::vector<Label> inverse(order.size(), -1);
        for (std::size_t i = 0; i < order.size(); ++i) inverse[static_cast<std::size_t>(order[i])] = static_cast<Label>(i);
        for (std::size_t y = 0; y < order.size(); ++y) {
            REQUIRE(inverse[y] >= 0);
            REQUIRE(order[static_cast<std::size_t>(inverse[y])] == static_cast<Label>(y));
        }
        for (std::size_t i = 1; i < order.size(); ++i) {
            const double a = p[static_cast<std::size_t>(order[i - 1])];
            const double b = p[static_cast<std::size_t>(order[i])];
            REQUIRE((a > b || (a == b && order[i - 1] < order[i])));
        }
    }
}

TEST_CASE("score matrix validation") {
    CHECK(kind_of([] {
              ScoreMatrix(LabelSpace(2), {"a", "a"}, {0, 1}, {0.5, 0.5, 0.5, 0.5});
          }) == ErrorKind::DuplicateId);
    CHECK(kind_of([] { ScoreMatrix(LabelSpace(2), {"a"}, {2}, {0.5, 0.5}); }) == ErrorKind::LabelOutOfRange);
    CHECK(kind_of([] { ScoreMatrix(LabelSpace(2), {"a"}, {0}, {0.5, 0.25, 0.25}); }) ==
          ErrorKind::DimensionMismatch);
}

TEST_CASE("split fold sizes") {
    SplitSpec spec;
    spec.validation = 0.5;
    spec.test = 0.25;
    spec.calibration = 0.25;
    spec.seed = 7;
    SUBCASE("n=10") {
        const auto folds = split(uniform_matrix(10, 3), spec);
        CHECK(folds.validation.size() == 5);
        CHECK(folds.test.size() == 2);
        CHECK(folds.calibration.size() == 3);
    }
    SUBCASE("n=4") {
        const auto folds = split(uniform_matrix(4, 3), spec);
        CHECK(folds.validation.size() == 2);
        CHECK(folds.test.size() == 1);
        CHECK(folds.calibration.size() == 1);
    }
    SUBCASE("too few instances") {
        CHECK(kind_of([&] { split(uniform_matrix(2, 3), spec); }) == ErrorKind::EmptyFold);
    }
}

TEST_CASE("split is a deterministic partition") {
    const auto m = uniform_matrix(1001, 4);
    for (std::uint64_t seed : {0ULL, 1ULL, 99ULL}) {
        SplitSpec spec;
        spec.seed = seed;
        const auto a = split(m, spec);
        const auto b = split(m, spec);
        CHECK(a.validation.ids() == b.validation.ids());
        CHECK(a.test.ids() == b.test.ids());
        CHECK(a.calibration.ids() == b.calibration.ids());

        std::multiset<std::string> seen;
        for (const auto* fold : {&a.validation, &a.test, &a.calibration}) {
            seen.insert(fold->ids().begin(), fold->ids().end());
        }
        CHECK(seen.size() == m.size());
        CHECK(std::set<std::string>(seen.begin(), seen.end()).size() == m.size());
        CHECK(a.validation.size() == 250);
        CHECK(a.test.size() == 250);
        CHECK(a.calibration.size() == 501);
    }
    SplitSpec s1, s2;
    s1.seed = 1;
    s2.seed = 2;
    CHECK(split(m, s1).test.ids() != split(m, s2).test.ids());
}

TEST_CASE("split spec validation") {
    SplitSpec bad;
    bad.validation = 0.6;
    CHECK(kind_of([&] { bad.validate(); }) == ErrorKind::InvalidArgument);
    SplitSpec negative;
    negative.validation = -0.25;
    negative.calibration = 1.0;
    CHECK(kind_of([&] { negative.validate(); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("bounded_draw stays in range and is roughly uniform") {
    std::mt19937_64 rng(5);
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i) {
        const auto v = bounded_draw(rng, 7);
        REQUIRE(v < 7);
        ++counts[v];
    }
    for (int c : counts) CHECK(std::abs(c - 10000) < 400);  // ~4 sigma
}
