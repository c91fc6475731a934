#include "uconf/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "uconf/kernels.hpp"

namespace uconf {

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw Error(ErrorKind::InvalidAlpha, "alpha must lie in (0,1), got " + std::to_string(alpha));
    }
}

std::size_t conformal_rank(std::size_t n, double alpha) {
    check_alpha(alpha);
    const double x = static_cast<double>(n + 1) * (1.0 - alpha);
    // Pull exact integers that picked up rounding error back before the ceiling.
    const double rank = std::ceil(x - 4.0 * std::numeric_limits<double>::epsilon() * x);
    return static_cast<std::size_t>(std::max(rank, 1.0));
}

double conformal_quantile(std::span<const double> scores, double alpha) {
    check_alpha(alpha);
    if (scores.empty()) throw Error(ErrorKind::EmptyCalibration, "no calibration scores");
    const std::size_t k = conformal_rank(scores.size(), alpha);
    if (k > scores.size()) return std::numeric_limits<double>::infinity();
    std::vector<double> work(scores.begin(), scores.end());
    auto nth = work.begin() + static_cast<std::ptrdiff_t>(k - 1);
    std::nth_element(work.begin(), nth, work.end());
    return *nth;
}

CalibratedPredictor calibrate(const ScoreMethod& method, const ScoreMatrix& calibration,
                              double alpha) {
    check_alpha(alpha);
    if (calibration.empty()) throw Error(ErrorKind::EmptyCalibration, "calibration fold is empty");
    const auto scores = parallel::true_label_scores(method, calibration);
    return CalibratedPredictor{method, conformal_quantile(scores, alpha), alpha, calibration.size()};
}

LabelSet predict_set(const CalibratedPredictor& predictor, std::span<const double> probs) {
    const InstanceScores scores = instance_scores(predictor.method, probs);
    LabelSet set;
    for (std::size_t y = 0; y < scores.scores.size(); ++y) {
        if (scores.scores[y] <= predictor.threshold) set.push_back(static_cast<Label>(y));
    }
    return set;
}

std::vector<double> default_lambda_grid() { return {0.001, 0.01, 0.1, 1.0, 10.0}; }

TuningResult tune_lambda(std::span<const double> grid, const ScoreMatrix& validation,
                         const ScoreMatrix& test, const ScoreMatrix& calibration, double alpha,
                         std::shared_ptr<const CostModel> cost) {
    check_alpha(alpha);
    if (grid.empty()) throw Error(ErrorKind::InvalidArgument, "lambda grid is empty");
    if (validation.empty() || test.empty() || calibration.empty()) {
        throw Error(ErrorKind::EmptyFold, "tuning needs nonempty validation, test and calibration folds");
    }
    if (!cost) throw Error(ErrorKind::InvalidArgument, "tuning needs a cost model");

    TuningResult result;
    result.grid.assign(grid.begin(), grid.end());
    std::size_t best = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto method = ScoreMethod::penalized(cost, grid[i]);
        const auto predictor = calibrate(method, validation, alpha);
        const double loss = mean_loss(parallel::outcomes(predictor, test, cost.get()));
        result.per_lambda_loss.push_back(loss);
        result.per_lambda_threshold.push_back(predictor.threshold);
        const double incumbent = result.per_lambda_loss[best];
        if (loss < incumbent || (loss == incumbent && grid[i] < grid[best])) best = i;
    }
    result.chosen_lambda = grid[best];
    result.final_predictor =
        calibrate(ScoreMethod::penalized(cost, result.chosen_lambda), calibration, alpha);
    return result;
}

}  // namespace uconf
