#pragma once
// Synthetic classification tasks with a known conditional distribution over
// a finite context space, and brute-force oracles for the optimality and
// coverage properties of the calibrated methods.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "uconf/conformal.hpp"
#include "uconf/core.hpp"
#include "uconf/hierarchy.hpp"
#include "uconf/losses.hpp"
#include "uconf/scores.hpp"

namespace uconf {

struct SyntheticTask {
    int num_labels = 0;
    std::vector<std::vector<double>> true_conditional;  // one row per context
    std::vector<double> context_marginal;
    /// Scale of the Gaussian logit noise; 0 emits the true conditional exactly.
    double noise_temperature = 0.0;
    std::shared_ptr<const Hierarchy> hierarchy;
    std::uint64_t seed = 0;

    int context_count() const noexcept { return static_cast<int>(true_conditional.size()); }
    void validate() const;
};

/// Random task: context logits ~ N(0, spread^2), uniform context marginal.
SyntheticTask make_random_task(int num_labels, int contexts, double spread, double temperature,
                               std::uint64_t seed);

/// Default separable benchmark task: K = 20 labels, 1000 contexts, logit spread 4.
SyntheticTask make_separable_task(double temperature = 0.5, std::uint64_t seed = 1);

/// Default hierarchical benchmark task: K = 20 labels in 4 groups of 5, with
/// each context concentrating its mass inside one home group.
SyntheticTask make_hierarchical_task(double temperature = 0.5, std::uint64_t seed = 2);

/// Two-level tree: root, `groups` internal nodes, `per_group` leaves each.
Hierarchy grouped_hierarchy(int groups, int per_group);

/// Penalties drawn uniformly from {0.25, 0.5, 0.75, 1.0}.
std::vector<double> quarter_penalties(int num_labels, std::uint64_t seed);

/// Draws n instances: contexts from the marginal, labels from the true
/// conditional, probabilities perturbed in logit space. Deterministic in
/// (task.seed, stream).
ScoreMatrix generate(const SyntheticTask& task, std::size_t n, std::uint64_t stream = 0);

struct OracleResult {
    /// Minimum expected loss over all deterministic set-valued rules meeting coverage.
    double optimal_loss = 0.0;
    /// Expected loss of the threshold rule on p(y|x) / l(y).
    double np_rule_loss = 0.0;
    double np_threshold = 0.0;
    double np_rule_coverage = 0.0;
    /// True when every subset of every context was enumerated (K <= 5).
    bool exhaustive = false;
};

/// Coverage feasibility is checked with slack kOracleSlack.
inline constexpr double kOracleSlack = 1e-12;

/// Exhaustive regime: K <= 12, contexts <= 4, separable costs. For K <= 5 all
/// 2^K subsets per context are enumerated; above that candidates per context
/// are the prefixes of the ratio order.
OracleResult oracle_optimal_loss(const SyntheticTask& task, const CostModel& cost, double alpha);

/// Expected coverage of the ratio threshold rule at threshold t under the true distribution.
double np_rule_coverage(const SyntheticTask& task, const CostModel& cost, double threshold);

/// Distinct values of p(y|x) / l(y) over contexts with positive mass, descending.
std::vector<double> ratio_levels(const SyntheticTask& task, const CostModel& cost);

struct CoverageTrialResult {
    double mean_coverage = 0.0;
    std::vector<double> coverages;
    std::vector<double> losses;
};

/// Repeats generate -> calibrate -> evaluate with fresh draws per trial.
/// Set losses are measured with `loss_cost`, or the method's own cost model
/// when that is null (Base then scores zero loss).
CoverageTrialResult coverage_trial(const SyntheticTask& task, const ScoreMethod& method,
                                   std::size_t n_cal, std::size_t n_test, int trials, double alpha,
                                   std::uint64_t stream = 0, const CostModel* loss_cost = nullptr);

/// Same for the tuned penalized pipeline: each trial draws validation, tuning
/// test, calibration and evaluation sets and runs tune_lambda.
CoverageTrialResult tuned_coverage_trial(const SyntheticTask& task,
                                         std::shared_ptr<const CostModel> cost,
                                         const std::vector<double>& grid, std::size_t n_val,
                                         std::size_t n_tune, std::size_t n_cal, std::size_t n_test,
                                         int trials, double alpha, std::uint64_t stream = 0);

struct SuiteCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Coverage band accepted by coverage_suite around 1 - alpha = 0.9.
inline constexpr double kCoverageBandLow = 0.897;
inline constexpr double kCoverageBandHigh = 0.904;

struct MethodTrials {
    std::string method;
    CoverageTrialResult result;
};

/// The runs behind coverage_suite; every method's losses use the task's penalty table.
std::vector<MethodTrials> coverage_suite_runs(int trials, double temperature, std::uint64_t seed);

/// Band check of each run's mean coverage.
std::vector<SuiteCheck> coverage_checks(const std::vector<MethodTrials>& runs, double temperature);

/// All four methods on the default separable task (K = 20, quarter penalties):
/// n_cal = 1000, n_test = 2000, alpha = 0.1, mean coverage over `trials` must
/// land in [kCoverageBandLow, kCoverageBandHigh].
std::vector<SuiteCheck> coverage_suite(int trials, double temperature, std::uint64_t seed);

/// Random separable tasks with K <= 5 and at most 3 contexts at temperature 0.
/// Alpha is set to one minus the coverage of a randomly picked ratio level so
/// the threshold rule attains coverage exactly; its expected loss must match
/// the exhaustive minimum within 1e-9.
std::vector<SuiteCheck> oracle_suite(int tasks, std::uint64_t seed);

}  // namespace uconf
