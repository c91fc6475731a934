#pragma once
// Multi-run benchmark driver: repeated random splits of one score matrix,
// every requested method calibrated and evaluated per split.

#include <cstdint>
#include <memory>
#include <vector>

#include "uconf/conformal.hpp"
#include "uconf/core.hpp"
#include "uconf/evaluation.hpp"
#include "uconf/losses.hpp"
#include "uconf/scores.hpp"

namespace uconf {

struct BenchConfig {
    std::vector<MethodKind> methods = {MethodKind::Base, MethodKind::Penalized, MethodKind::Ratio,
                                       MethodKind::GreedyOrder};
    double alpha = 0.1;
    std::vector<double> grid = default_lambda_grid();
    SplitSpec split;  // split.seed is ignored; run r uses mix_seed(seed, r)
    int runs = 10;
    std::uint64_t seed = 0;
};

struct BenchResult {
    /// Run-major: reports[r * methods.size() + m].
    std::vector<EvaluationReport> reports;
    /// Lambda picked by tuning in each run; empty when Penalized is not requested.
    std::vector<double> chosen_lambdas;
};

/// Name under which tuned penalized runs are reported.
inline constexpr const char* kTunedPenalizedName = "penalized(tuned)";

/// Base, Ratio and GreedyOrder are calibrated on the calibration fold.
/// Penalized tunes lambda on the validation and test folds, then is
/// recalibrated on the calibration fold. Everything is evaluated on the test fold.
BenchResult run_benchmark(const ScoreMatrix& data, std::shared_ptr<const CostModel> cost,
                          const BenchConfig& config);

/// The methods that make sense for a cost model: Ratio only when separable.
std::vector<MethodKind> default_methods(const CostModel& cost);

}  // namespace uconf
