#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <random>

#include "uconf/conformal.hpp"
#include "uconf/kernels.hpp"
#include "uconf/synth.hpp"

using namespace uconf;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> iota_scores(int n) {
    std::vector<double> s(static_cast<std::size_t>(n));
    std::iota(s.begin(), s.end(), 1.0);
    return s;
}

// Rank for alpha = m / 10^4 in integer arithmetic: ceil((n+1)(10^4 - m) / 10^4).
std::size_t integer_rank(std::size_t n, std::uint64_t m) {
    const std::uint64_t num = static_cast<std::uint64_t>(n + 1) * (10000 - m);
    return static_cast<std::size_t>((num + 9999) / 10000);
}

// Smallest candidate t with #{s <= t} >= k, scanning every score value.
double brute_quantile(const std::vector<double>& s, std::size_t k) {
    if (k > s.size()) return kInf;
    double best = kInf;
    for (double t : s) {
        const auto below = static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [&](double v) { return v <= t; }));
        if (below >= k) best = std::min(best, t);
    }
    return best;
}

ScoreMatrix matrix_from_rows(const std::vector<std::vector<double>>& rows, const std::vector<Label>& labels) {
    std::vector<std::string> ids;
    std::vector<double> flat;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        ids.push_back("r" + std::to_string(i));
        flat.insert(flat.end(), rows[i].begin(), rows[i].end());
    }
    return ScoreMatrix(LabelSpace(static_cast<int>(rows[0].size())), ids, labels, flat);
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

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

TEST_CASE("conformal quantile examples") {
    CHECK(conformal_quantile(iota_scores(9), 0.1) == 9.0);
    CHECK(conformal_quantile(iota_scores(9), 0.05) == kInf);
    CHECK(conformal_quantile(iota_scores(99), 0.1) == 90.0);
    CHECK(conformal_quantile(std::vector<double>{0.3}, 0.1) == kInf);
    CHECK(conformal_rank(9, 0.1) == 9);
    CHECK(conformal_rank(99, 0.1) == 90);
    CHECK(conformal_rank(1, 0.1) == 2);

    std::vector<double> shuffled = iota_scores(99);
    std::mt19937_64 rng(5);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(conformal_quantile(shuffled, 0.1) == 90.0);
}

TEST_CASE("conformal quantile errors") {
    CHECK(kind_of([] { (void)conformal_quantile(std::vector<double>{}, 0.1); }) == ErrorKind::EmptyCalibration);
    CHECK(kind_of([] { (void)conformal_quantile(std::vector<double>{1.0}, 0.0); }) == ErrorKind::InvalidAlpha);
    CHECK(kind_of([] { (void)conformal_quantile(std::vector<double>{1.0}, 1.0); }) == ErrorKind::InvalidAlpha);
}

TEST_CASE("rank agrees with integer arithmetic on decimal alphas") {
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 20000; ++trial) {
        const std::size_t n = 1 + bounded_draw(rng, 5000);
        const std::uint64_t m = 1 + bounded_draw(rng, 9999);
        const double alpha = static_cast<double>(m) / 10000.0;
        REQUIRE(conformal_rank(n, alpha) == integer_rank(n, m));
    }
    // Cases where the double product lands a hair above an integer.
    CHECK(conformal_rank(9, 0.3) == 7);
    CHECK(conformal_rank(19, 0.05) == 19);
    CHECK(conformal_rank(999, 0.1) == 900);
}

TEST_CASE("quantile matches the brute-force threshold oracle") {
    std::mt19937_64 rng(103);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t n = 1 + bounded_draw(rng, 60);
        std::vector<double> s(n);
        // Coarse values so ties are frequent.
        for (double& v : s) v = static_cast<double>(bounded_draw(rng, 12)) / 4.0;
        const std::uint64_t m = 1 + bounded_draw(rng, 9999);
        const double alpha = static_cast<double>(m) / 10000.0;
        REQUIRE(same_bits(conformal_quantile(s, alpha), brute_quantile(s, integer_rank(n, m))));
    }
}

TEST_CASE("calibrate: top-label matrix and degenerate n") {
    std::vector<std::vector<double>> rows;
    std::vector<Label> labels;
    for (int i = 0; i < 50; ++i) {
        const double top = 0.95 + 0.001 * static_cast<double>(i % 40);
        rows.push_back({top, (1.0 - top) / 2.0, (1.0 - top) / 2.0});
        labels.push_back(0);
    }
    const auto cal = matrix_from_rows(rows, labels);
    const auto pred = calibrate(ScoreMethod::base(), cal, 0.1);
    std::vector<double> scores;
    for (std::size_t i = 0; i < cal.size(); ++i) scores.push_back(cal.row(i)[0]);
    CHECK(pred.threshold == brute_quantile(scores, integer_rank(50, 1000)));
    CHECK(pred.threshold >= 0.95);
    CHECK(pred.calibration_size == 50);
    CHECK(predict_set(pred, ProbVector{0.97, 0.02, 0.01}) == LabelSet{0});

    const auto single = calibrate(ScoreMethod::base(), matrix_from_rows({{0.5, 0.5}}, {1}), 0.1);
    CHECK(single.threshold == kInf);
    CHECK(predict_set(single, ProbVector{0.9, 0.1}) == LabelSet{0, 1});
}

TEST_CASE("predict_set examples") {
    CalibratedPredictor base{ScoreMethod::base(), 0.8, 0.1, 10};
    CHECK(predict_set(base, ProbVector{0.5, 0.3, 0.2}) == LabelSet{0, 1});
    base.threshold = kInf;
    CHECK(predict_set(base, ProbVector{0.5, 0.3, 0.2}) == LabelSet{0, 1, 2});

    auto ones = std::make_shared<const CostModel>(CostModel::separable({1.0, 1.0, 1.0, 1.0}));
    const CalibratedPredictor ratio{ScoreMethod::ratio(ones), -0.5, 0.1, 10};
    CHECK(ratio.negated());
    std::mt19937_64 rng(107);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<double> raw(4);
        double sum = 0.0;
        for (double& v : raw) sum += (v = static_cast<double>(1 + bounded_draw(rng, 8)));
        for (double& v : raw) v /= sum;
        const ProbVector p(raw);
        LabelSet direct;
        for (Label y = 0; y < 4; ++y) {
            if (p[static_cast<std::size_t>(y)] >= 0.5) direct.push_back(y);
        }
        REQUIRE(predict_set(ratio, p) == direct);
    }
}

TEST_CASE("raising the threshold never removes a label") {
    std::mt19937_64 rng(109);
    auto h = std::make_shared<const Hierarchy>(Hierarchy::balanced(2, 3));
    auto cost = std::make_shared<const CostModel>(CostModel::coverage(h));
    auto sep = std::make_shared<const CostModel>(CostModel::separable({0.25, 0.5, 0.75, 1, 1, 0.75, 0.5, 0.25}));
    const std::vector<ScoreMethod> methods = {ScoreMethod::base(), ScoreMethod::penalized(cost, 1.0),
                                              ScoreMethod::ratio(sep), ScoreMethod::greedy_order(cost, 0.1)};
    std::gamma_distribution<double> g(0.6, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> raw(8);
        double sum = 0.0;
        for (double& v : raw) sum += (v = g(rng) + 1e-9);
        for (double& v : raw) v /= sum;
        const ProbVector p(raw);
        const auto& m = methods[static_cast<std::size_t>(trial) % methods.size()];
        const double lo = m.negated() ? -4.0 : 0.0;
        double t1 = lo + 4.0 * static_cast<double>(bounded_draw(rng, 1000)) / 1000.0;
        double t2 = lo + 4.0 * static_cast<double>(bounded_draw(rng, 1000)) / 1000.0;
        if (t1 > t2) std::swap(t1, t2);
        const auto small = predict_set(CalibratedPredictor{m, t1, 0.1, 10}, p);
        const auto large = predict_set(CalibratedPredictor{m, t2, 0.1, 10}, p);
        REQUIRE(std::includes(large.begin(), large.end(), small.begin(), small.end()));
        REQUIRE(std::is_sorted(large.begin(), large.end()));
    }
}

TEST_CASE("penalized at lambda = 0 calibrates exactly like base") {
    auto task = make_separable_task(0.5, 3);
    auto cost = std::make_shared<const CostModel>(CostModel::separable(quarter_penalties(20, 7)));
    const auto cal = generate(task, 1500, 1);
    const auto test = generate(task, 300, 2);
    const auto base = calibrate(ScoreMethod::base(), cal, 0.1);
    const auto pen = calibrate(ScoreMethod::penalized(cost, 0.0), cal, 0.1);
    CHECK(same_bits(base.threshold, pen.threshold));
    for (std::size_t i = 0; i < test.size(); ++i) REQUIRE(predict_set(base, test.row(i)) == predict_set(pen, test.row(i)));
}

TEST_CASE("tune_lambda") {
    SUBCASE("grid {0} reproduces base calibrated on the calibration fold") {
        auto task = make_separable_task(0.5, 5);
        auto cost = std::make_shared<const CostModel>(CostModel::separable(quarter_penalties(20, 7)));
        const auto val = generate(task, 400, 1);
        const auto tst = generate(task, 400, 2);
        const auto cal = generate(task, 400, 3);
        const std::vector<double> grid{0.0};
        const auto r = tune_lambda(grid, val, tst, cal, 0.1, cost);
        CHECK(r.chosen_lambda == 0.0);
        CHECK(same_bits(r.final_predictor.threshold, calibrate(ScoreMethod::base(), cal, 0.1).threshold));
        CHECK(r.final_predictor.calibration_size == cal.size());
    }
    SUBCASE("ties go to the smaller lambda") {
        // Every row is identical, so each lambda yields the set {0} everywhere.
        std::vector<std::vector<double>> rows(20, std::vector<double>{0.7, 0.3});
        const auto m = matrix_from_rows(rows, std::vector<Label>(20, 0));
        auto cost = std::make_shared<const CostModel>(CostModel::separable({1.0, 0.5}));
        const std::vector<double> grid{1.0, 0.1, 10.0};
        const auto r = tune_lambda(grid, m, m, m, 0.1, cost);
        REQUIRE(r.per_lambda_loss.size() == 3);
        CHECK(r.per_lambda_loss[0] == r.per_lambda_loss[1]);
        CHECK(r.per_lambda_loss[1] == r.per_lambda_loss[2]);
        CHECK(r.chosen_lambda == 0.1);
    }
    SUBCASE("strong cost structure selects a positive lambda") {
        auto task = make_separable_task(0.5, 11);
        auto cost = std::make_shared<const CostModel>(CostModel::separable(quarter_penalties(20, 7)));
        const auto val = generate(task, 2000, 1);
        const auto tst = generate(task, 2000, 2);
        const auto cal = generate(task, 2000, 3);
        std::vector<double> grid = default_lambda_grid();
        CHECK(grid == std::vector<double>{0.001, 0.01, 0.1, 1.0, 10.0});
        grid.insert(grid.begin(), 0.0);
        const auto r = tune_lambda(grid, val, tst, cal, 0.1, cost);
        CHECK(r.chosen_lambda > 0.0);
        const auto best = *std::min_element(r.per_lambda_loss.begin(), r.per_lambda_loss.end());
        const auto pos = static_cast<std::size_t>(std::find(grid.begin(), grid.end(), r.chosen_lambda) - grid.begin());
        CHECK(r.per_lambda_loss[pos] == best);
        CHECK(best <= r.per_lambda_loss[0]);
    }
    SUBCASE("errors") {
        auto cost = std::make_shared<const CostModel>(CostModel::separable({1.0, 0.5}));
        const auto m = matrix_from_rows({{0.7, 0.3}}, {0});
        const auto empty = m.subset(std::vector<std::size_t>{});
        const std::vector<double> grid{0.0};
        CHECK(kind_of([&] { tune_lambda(std::vector<double>{}, m, m, m, 0.1, cost); }) == ErrorKind::InvalidArgument);
        CHECK(kind_of([&] { tune_lambda(grid, empty, m, m, 0.1, cost); }) == ErrorKind::EmptyFold);
        CHECK(kind_of([&] { tune_lambda(grid, m, m, m, 0.1, nullptr); }) == ErrorKind::InvalidArgument);
    }
}
