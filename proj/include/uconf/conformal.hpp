#pragma once
// Split-conformal calibration on top of any ScoreMethod, and the three-fold
// lambda tuning pipeline for the penalized family.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "uconf/core.hpp"
#include "uconf/scores.hpp"

namespace uconf {

/// k-th smallest score with k = ceil((n+1)(1-alpha)); +inf when k > n.
double conformal_quantile(std::span<const double> scores, double alpha);

/// The order-statistic rank used by conformal_quantile.
std::size_t conformal_rank(std::size_t n, double alpha);

struct CalibratedPredictor {
    ScoreMethod method;
    double threshold = 0.0;
    double alpha = 0.1;
    std::size_t calibration_size = 0;

    bool negated() const noexcept { return method.negated(); }
};

CalibratedPredictor calibrate(const ScoreMethod& method, const ScoreMatrix& calibration,
                              double alpha);

/// {y : s(x,y) <= threshold}, sorted ascending.
LabelSet predict_set(const CalibratedPredictor& predictor, std::span<const double> probs);

struct TuningResult {
    std::vector<double> grid;
    std::vector<double> per_lambda_loss;  // aligned with grid
    std::vector<double> per_lambda_threshold;  // thresholds fitted on the validation fold
    double chosen_lambda = 0.0;
    CalibratedPredictor final_predictor;
};

/// For each lambda: calibrate on `validation`, average L(S) over `test`.
/// The argmin (ties to the smaller lambda) is recalibrated on `calibration`.
TuningResult tune_lambda(std::span<const double> grid, const ScoreMatrix& validation,
                         const ScoreMatrix& test, const ScoreMatrix& calibration, double alpha,
                         std::shared_ptr<const CostModel> cost);

/// Default lambda grid.
std::vector<double> default_lambda_grid();

void check_alpha(double alpha);

}  // namespace uconf
