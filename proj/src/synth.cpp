#include "uconf/synth.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <cstdio>
#include <random>

#include "parallel_for.hpp"
#include "uconf/kernels.hpp"

namespace uconf {

void SyntheticTask::validate() const {
    if (num_labels < 2) throw Error(ErrorKind::InvalidTask, "task needs at least 2 labels");
    if (true_conditional.empty()) throw Error(ErrorKind::InvalidTask, "task has no contexts");
    if (context_marginal.size() != true_conditional.size()) {
        throw Error(ErrorKind::InvalidTask, "context marginal and conditional table differ in size");
    }
    if (!(noise_temperature >= 0.0) || !std::isfinite(noise_temperature)) {
        throw Error(ErrorKind::InvalidTask, "noise temperature must be finite and >= 0");
    }
    auto check_row = [](const std::vector<double>& row, const char* what) {
        double sum = 0.0;
        for (double v : row) {
            if (!(v >= 0.0) || v > 1.0) throw Error(ErrorKind::InvalidTask, std::string(what) + " has an invalid entry");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorKind::InvalidTask, std::string(what) + " does not sum to 1");
    };
    check_row(context_marginal, "context marginal");
    for (const auto& row : true_conditional) {
        if (static_cast<int>(row.size()) != num_labels) {
            throw Error(ErrorKind::InvalidTask, "conditional row has the wrong number of labels");
        }
        check_row(row, "conditional row");
    }
    if (hierarchy && hierarchy->num_labels() != num_labels) {
        throw Error(ErrorKind::InvalidTask, "hierarchy label count differs from task");
    }
}

namespace {

// Hand-rolled draws so that streams agree across standard libraries.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double std_normal(std::mt19937_64& rng) {
    double u = 0.0;
    while (u == 0.0) u = uniform01(rng);
    const double v = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * 3.14159265358979323846 * v);
}

std::vector<double> softmax(const std::vector<double>& logits) {
    const double top = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - top);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

// Renormalizes so rows pass the strict 1e-9 sum check after rounding.
std::vector<double> tidy(std::vector<double> row) {
    const double sum = std::accumulate(row.begin(), row.end(), 0.0);
    for (double& v : row) v /= sum;
    return row;
}

std::size_t sample_index(const std::vector<double>& cdf, double u) {
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) return cdf.size() - 1;
    return static_cast<std::size_t>(it - cdf.begin());
}

std::vector<double> cumulative(const std::vector<double>& p) {
    std::vector<double> cdf(p.size());
    std::partial_sum(p.begin(), p.end(), cdf.begin());
    return cdf;
}

}  // namespace

SyntheticTask make_random_task(int num_labels, int contexts, double spread, double temperature,
                               std::uint64_t seed) {
    if (num_labels < 2 || contexts < 1) throw Error(ErrorKind::InvalidTask, "need K >= 2 and >= 1 context");
    SyntheticTask task;
    task.num_labels = num_labels;
    task.noise_temperature = temperature;
    task.seed = seed;
    std::mt19937_64 rng(mix_seed(seed, 0x7a5c));
    for (int c = 0; c < contexts; ++c) {
        std::vector<double> logits(static_cast<std::size_t>(num_labels));
        for (double& l : logits) l = spread * std_normal(rng);
        task.true_conditional.push_back(tidy(softmax(logits)));
    }
    task.context_marginal.assign(static_cast<std::size_t>(contexts), 1.0 / contexts);
    task.context_marginal = tidy(task.context_marginal);
    task.validate();
    return task;
}

SyntheticTask make_separable_task(double temperature, std::uint64_t seed) {
    return make_random_task(20, 1000, 4.0, temperature, seed);
}

Hierarchy grouped_hierarchy(int groups, int per_group) {
    std::vector<Hierarchy::Edge> edges;
    std::vector<std::string> leaves;
    for (int g = 0; g < groups; ++g) {
        const std::string group = "group" + std::to_string(g);
        edges.push_back({group, "root"});
        for (int i = 0; i < per_group; ++i) {
            leaves.push_back(group + ".label" + std::to_string(i));
            edges.push_back({leaves.back(), group});
        }
    }
    return Hierarchy::from_edges(edges, leaves);
}

SyntheticTask make_hierarchical_task(double temperature, std::uint64_t seed) {
    constexpr int kGroups = 4;
    constexpr int kPerGroup = 5;
    constexpr int kContexts = 1000;
    SyntheticTask task;
    task.num_labels = kGroups * kPerGroup;
    task.noise_temperature = temperature;
    task.seed = seed;
    task.hierarchy = std::make_shared<const Hierarchy>(grouped_hierarchy(kGroups, kPerGroup));
    std::mt19937_64 rng(mix_seed(seed, 0x41e4));
    for (int c = 0; c < kContexts; ++c) {
        const auto home = static_cast<int>(bounded_draw(rng, kGroups));
        std::vector<double> logits(static_cast<std::size_t>(task.num_labels));
        for (int y = 0; y < task.num_labels; ++y) {
            const double boost = (y / kPerGroup == home) ? 2.0 : 0.0;
            logits[static_cast<std::size_t>(y)] = boost + 1.0 * std_normal(rng);
        }
        task.true_conditional.push_back(tidy(softmax(logits)));
    }
    task.context_marginal.assign(kContexts, 1.0 / kContexts);
    task.context_marginal = tidy(task.context_marginal);
    task.validate();
    return task;
}

std::vector<double> quarter_penalties(int num_labels, std::uint64_t seed) {
    std::mt19937_64 rng(mix_seed(seed, 0x9e4a));
    std::vector<double> out(static_cast<std::size_t>(num_labels));
    for (double& v : out) v = static_cast<double>(bounded_draw(rng, 4) + 1) / 4.0;
    return out;
}

ScoreMatrix generate(const SyntheticTask& task, std::size_t n, std::uint64_t stream) {
    task.validate();
    if (n < 1) throw Error(ErrorKind::InvalidArgument, "generate needs n >= 1");
    const auto k = static_cast<std::size_t>(task.num_labels);
    std::mt19937_64 rng(mix_seed(task.seed, stream));

    const auto context_cdf = cumulative(task.context_marginal);
    std::vector<std::vector<double>> label_cdf;
    label_cdf.reserve(task.true_conditional.size());
    for (const auto& row : task.true_conditional) label_cdf.push_back(cumulative(row));

    std::vector<std::string> ids(n);
    std::vector<Label> labels(n);
    std::vector<double> probs;
    probs.reserve(n * k);
    std::vector<double> logits(k);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = sample_index(context_cdf, uniform01(rng));
        labels[i] = static_cast<Label>(sample_index(label_cdf[c], uniform01(rng)));
        ids[i] = std::to_string(i);
        const auto& truth = task.true_conditional[c];
        if (task.noise_temperature == 0.0) {
            probs.insert(probs.end(), truth.begin(), truth.end());
            continue;
        }
        for (std::size_t y = 0; y < k; ++y) {
            logits[y] = (truth[y] > 0.0 ? std::log(truth[y]) : -std::numeric_limits<double>::infinity()) +
                        task.noise_temperature * std_normal(rng);
        }
        const auto row = softmax(logits);
        probs.insert(probs.end(), row.begin(), row.end());
    }
    return ScoreMatrix(LabelSpace(task.num_labels), std::move(ids), std::move(labels), std::move(probs));
}

namespace {

struct Item {
    double ratio;
    double weight;  // P(x) p(y|x)
    double cost;    // P(x) l(y)
};

std::vector<Item> np_items(const SyntheticTask& task, const CostModel& cost) {
    std::vector<Item> items;
    for (int c = 0; c < task.context_count(); ++c) {
        const double px = task.context_marginal[static_cast<std::size_t>(c)];
        if (px <= 0.0) continue;
        for (int y = 0; y < task.num_labels; ++y) {
            const double p = task.true_conditional[static_cast<std::size_t>(c)][static_cast<std::size_t>(y)];
            const double l = cost.penalty(y);
            items.push_back({p / l, px * p, px * l});
        }
    }
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.ratio > b.ratio; });
    return items;
}

void check_separable(const SyntheticTask& task, const CostModel& cost) {
    task.validate();
    if (cost.kind() != CostKind::Separable) {
        throw Error(ErrorKind::InvalidArgument, "oracle needs a separable cost model");
    }
    if (cost.num_labels() != task.num_labels) {
        throw Error(ErrorKind::DimensionMismatch, "cost model and task differ in K");
    }
}

}  // namespace

std::vector<double> ratio_levels(const SyntheticTask& task, const CostModel& cost) {
    check_separable(task, cost);
    std::vector<double> levels;
    for (const auto& item : np_items(task, cost)) {
        if (levels.empty() || levels.back() != item.ratio) levels.push_back(item.ratio);
    }
    return levels;
}

double np_rule_coverage(const SyntheticTask& task, const CostModel& cost, double threshold) {
    check_separable(task, cost);
    double covered = 0.0;
    for (const auto& item : np_items(task, cost)) {
        if (item.ratio >= threshold) covered += item.weight;
    }
    return covered;
}

OracleResult oracle_optimal_loss(const SyntheticTask& task, const CostModel& cost, double alpha) {
    check_separable(task, cost);
    check_alpha(alpha);
    const int k = task.num_labels;
    const int contexts = task.context_count();
    if (k > 12 || contexts > 4) {
        throw Error(ErrorKind::TooLarge, "oracle is limited to K <= 12 and at most 4 contexts");
    }
    const double target = (1.0 - alpha) - kOracleSlack;

    OracleResult result;

    // Threshold rule: include whole ratio levels, highest first, until coverage is met.
    const auto items = np_items(task, cost);
    double covered = 0.0;
    double loss = 0.0;
    double threshold = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < items.size() && covered < target;) {
        const double level = items[i].ratio;
        for (; i < items.size() && items[i].ratio == level; ++i) {
            covered += items[i].weight;
            loss += items[i].cost;
        }
        threshold = level;
    }
    result.np_rule_loss = loss;
    result.np_threshold = threshold;
    result.np_rule_coverage = covered;

    // Candidate sets per context as (coverage weight, expected cost) pairs.
    result.exhaustive = k <= 5;
    std::vector<std::vector<std::pair<double, double>>> candidates(static_cast<std::size_t>(contexts));
    for (int c = 0; c < contexts; ++c) {
        const auto& row = task.true_conditional[static_cast<std::size_t>(c)];
        const double px = task.context_marginal[static_cast<std::size_t>(c)];
        auto& out = candidates[static_cast<std::size_t>(c)];
        if (result.exhaustive) {
            for (std::uint32_t mask = 0; mask < (1U << k); ++mask) {
                double w = 0.0, l = 0.0;
                for (int y = 0; y < k; ++y) {
                    if (mask >> y & 1U) {
                        w += row[static_cast<std::size_t>(y)];
                        l += cost.penalty(y);
                    }
                }
                out.emplace_back(px * w, px * l);
            }
        } else {
            std::vector<double> ratio(static_cast<std::size_t>(k));
            for (int y = 0; y < k; ++y) ratio[static_cast<std::size_t>(y)] = row[static_cast<std::size_t>(y)] / cost.penalty(y);
            double w = 0.0, l = 0.0;
            out.emplace_back(0.0, 0.0);
            for (Label y : sort_descending(ratio)) {
                w += row[static_cast<std::size_t>(y)];
                l += cost.penalty(y);
                out.emplace_back(px * w, px * l);
            }
        }
    }

    double best = std::numeric_limits<double>::infinity();
    std::function<void(int, double, double)> search = [&](int c, double w, double l) {
        if (l >= best) return;
        if (c == contexts) {
            if (w >= target) best = l;
            return;
        }
        for (const auto& [cw, cl] : candidates[static_cast<std::size_t>(c)]) search(c + 1, w + cw, l + cl);
    };
    search(0, 0.0, 0.0);
    result.optimal_loss = best;
    return result;
}

CoverageTrialResult coverage_trial(const SyntheticTask& task, const ScoreMethod& method,
                                   std::size_t n_cal, std::size_t n_test, int trials, double alpha,
                                   std::uint64_t stream, const CostModel* loss_cost) {
    if (trials < 1) throw Error(ErrorKind::InvalidArgument, "need at least one trial");
    check_alpha(alpha);
    CoverageTrialResult result;
    result.coverages.assign(static_cast<std::size_t>(trials), 0.0);
    result.losses.assign(static_cast<std::size_t>(trials), 0.0);
    detail::parallel_for(static_cast<std::size_t>(trials), [&](std::size_t t) {
        const std::uint64_t s = mix_seed(stream, t);
        const ScoreMatrix cal = generate(task, n_cal, mix_seed(s, 0));
        const ScoreMatrix test = generate(task, n_test, mix_seed(s, 1));
        const CalibratedPredictor predictor = calibrate(method, cal, alpha);
        const auto outcomes = serial::outcomes(predictor, test, loss_cost ? loss_cost : method.cost().get());
        std::size_t covered = 0;
        for (const auto& o : outcomes) covered += o.covered ? 1 : 0;
        result.coverages[t] = static_cast<double>(covered) / static_cast<double>(outcomes.size());
        result.losses[t] = mean_loss(outcomes);
    });
    result.mean_coverage = std::accumulate(result.coverages.begin(), result.coverages.end(), 0.0) /
                           static_cast<double>(trials);
    return result;
}

CoverageTrialResult tuned_coverage_trial(const SyntheticTask& task,
                                         std::shared_ptr<const CostModel> cost,
                                         const std::vector<double>& grid, std::size_t n_val,
                                         std::size_t n_tune, std::size_t n_cal, std::size_t n_test,
                                         int trials, double alpha, std::uint64_t stream) {
    if (trials < 1) throw Error(ErrorKind::InvalidArgument, "need at least one trial");
    check_alpha(alpha);
    CoverageTrialResult result;
    result.coverages.assign(static_cast<std::size_t>(trials), 0.0);
    result.losses.assign(static_cast<std::size_t>(trials), 0.0);
    detail::parallel_for(static_cast<std::size_t>(trials), [&](std::size_t t) {
        const std::uint64_t s = mix_seed(stream ^ 0x5eed, t);
        const ScoreMatrix val = generate(task, n_val, mix_seed(s, 0));
        const ScoreMatrix tune = generate(task, n_tune, mix_seed(s, 1));
        const ScoreMatrix cal = generate(task, n_cal, mix_seed(s, 2));
        const ScoreMatrix test = generate(task, n_test, mix_seed(s, 3));
        const TuningResult tuned = tune_lambda(grid, val, tune, cal, alpha, cost);
        const auto outcomes = serial::outcomes(tuned.final_predictor, test, cost.get());
        std::size_t covered = 0;
        for (const auto& o : outcomes) covered += o.covered ? 1 : 0;
        result.coverages[t] = static_cast<double>(covered) / static_cast<double>(outcomes.size());
        result.losses[t] = mean_loss(outcomes);
    });
    result.mean_coverage = std::accumulate(result.coverages.begin(), result.coverages.end(), 0.0) /
                           static_cast<double>(trials);
    return result;
}

namespace {

constexpr const char* kTunedName = "penalized(tuned)";

std::string fixed(double v, int digits = 5) {
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, "%.*f", digits, v);
    return buffer;
}

}  // namespace

std::vector<MethodTrials> coverage_suite_runs(int trials, double temperature, std::uint64_t seed) {
    const SyntheticTask task = make_separable_task(temperature, 1);
    auto cost = std::make_shared<const CostModel>(CostModel::separable(quarter_penalties(task.num_labels, 7)));
    constexpr double kAlpha = 0.1;
    constexpr std::size_t kCal = 1000;
    constexpr std::size_t kTest = 2000;

    std::vector<MethodTrials> runs;
    runs.push_back({"base", coverage_trial(task, ScoreMethod::base(), kCal, kTest, trials, kAlpha, seed, cost.get())});
    runs.push_back({kTunedName, tuned_coverage_trial(task, cost, default_lambda_grid(), kCal, kCal, kCal, kTest,
                                                     trials, kAlpha, seed)});
    runs.push_back({"ratio", coverage_trial(task, ScoreMethod::ratio(cost), kCal, kTest, trials, kAlpha, seed)});
    runs.push_back({"greedy", coverage_trial(task, ScoreMethod::greedy_order(cost, kAlpha), kCal, kTest, trials,
                                             kAlpha, seed)});
    return runs;
}

std::vector<SuiteCheck> coverage_checks(const std::vector<MethodTrials>& runs, double temperature) {
    std::vector<SuiteCheck> checks;
    for (const auto& [name, result] : runs) {
        SuiteCheck check;
        check.name = "coverage " + name + " T=" + fixed(temperature, 1);
        check.passed = result.mean_coverage >= kCoverageBandLow && result.mean_coverage <= kCoverageBandHigh;
        check.detail = "mean coverage " + fixed(result.mean_coverage) + " over " +
                       std::to_string(result.coverages.size()) + " trials, band [" + fixed(kCoverageBandLow, 3) +
                       ", " + fixed(kCoverageBandHigh, 3) + "]";
        checks.push_back(std::move(check));
    }
    return checks;
}

std::vector<SuiteCheck> coverage_suite(int trials, double temperature, std::uint64_t seed) {
    return coverage_checks(coverage_suite_runs(trials, temperature, seed), temperature);
}

std::vector<SuiteCheck> oracle_suite(int tasks, std::uint64_t seed) {
    if (tasks < 1) throw Error(ErrorKind::InvalidArgument, "oracle suite needs at least one task");
    std::mt19937_64 rng(mix_seed(seed, 0x0ac1e));
    double worst_gap = 0.0;
    double worst_coverage_gap = 0.0;
    int built = 0;
    for (int attempt = 0; built < tasks; ++attempt) {
        if (attempt > 100 * tasks) throw Error(ErrorKind::InvalidTask, "could not draw oracle tasks");
        const int k = 2 + static_cast<int>(bounded_draw(rng, 4));
        const int contexts = 1 + static_cast<int>(bounded_draw(rng, 3));
        SyntheticTask task = make_random_task(k, contexts, 1.0, 0.0, rng());
        std::vector<double> penalties(static_cast<std::size_t>(k));
        for (double& v : penalties) v = 0.25 + uniform01(rng);
        // Nonuniform context weights.
        double total = 0.0;
        for (double& w : task.context_marginal) total += (w = 0.5 + uniform01(rng));
        for (double& w : task.context_marginal) w /= total;
        const CostModel cost = CostModel::separable(penalties);

        const auto levels = ratio_levels(task, cost);
        std::vector<double> usable;
        for (double t : levels) {
            const double c = np_rule_coverage(task, cost, t);
            if (c > 1e-6 && c < 1.0 - 1e-6) usable.push_back(t);
        }
        if (usable.empty()) continue;
        const double t = usable[bounded_draw(rng, usable.size())];
        const double coverage = np_rule_coverage(task, cost, t);
        const double alpha = 1.0 - coverage;
        const OracleResult oracle = oracle_optimal_loss(task, cost, alpha);
        ++built;

        // Expected loss and coverage of the library's ratio predictor at threshold t.
        CalibratedPredictor predictor;
        predictor.method = ScoreMethod::ratio(std::make_shared<const CostModel>(cost));
        predictor.threshold = -t;
        predictor.alpha = alpha;
        predictor.calibration_size = 1;
        double loss = 0.0;
        double covered = 0.0;
        for (int c = 0; c < task.context_count(); ++c) {
            const auto& row = task.true_conditional[static_cast<std::size_t>(c)];
            const double px = task.context_marginal[static_cast<std::size_t>(c)];
            for (Label y : predict_set(predictor, row)) {
                loss += px * cost.penalty(y);
                covered += px * row[static_cast<std::size_t>(y)];
            }
        }
        worst_gap = std::max(worst_gap, std::abs(loss - oracle.optimal_loss));
        worst_coverage_gap = std::max(worst_coverage_gap, std::abs(covered - coverage));
    }
    SuiteCheck check;
    check.name = "ratio rule optimality";
    check.passed = worst_gap <= 1e-9 && worst_coverage_gap <= 1e-12;
    char buffer[160];
    std::snprintf(buffer, sizeof buffer, "%d tasks, max |loss - exhaustive minimum| = %.3g, max coverage gap = %.3g",
                  tasks, worst_gap, worst_coverage_gap);
    check.detail = buffer;
    return {check};
}

}  // namespace uconf
