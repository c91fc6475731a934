#pragma once
// Batch kernels over score matrices. The `parallel` namespace holds the
// OpenMP versions used by the library; `serial` holds the straightforward
// loops they are tested and benchmarked against. Both produce bit-identical
// results: per-instance work is independent and every reduction happens in a
// fixed order after the parallel section.

#include <cstddef>
#include <vector>

#include "uconf/conformal.hpp"
#include "uconf/core.hpp"
#include "uconf/losses.hpp"
#include "uconf/scores.hpp"

namespace uconf {

struct InstanceOutcome {
    int set_size = 0;
    bool covered = false;
    double loss = 0.0;
    double true_prob = 0.0;
};

namespace parallel {

/// Nonconformity score of each instance's true label.
std::vector<double> true_label_scores(const ScoreMethod& method, const ScoreMatrix& matrix);

/// Prediction set statistics of each instance under `predictor`.
std::vector<InstanceOutcome> outcomes(const CalibratedPredictor& predictor,
                                      const ScoreMatrix& matrix, const CostModel* cost);

/// Prediction sets of each instance.
std::vector<LabelSet> prediction_sets(const CalibratedPredictor& predictor,
                                      const ScoreMatrix& matrix);

int max_threads();

}  // namespace parallel

namespace serial {

std::vector<double> true_label_scores(const ScoreMethod& method, const ScoreMatrix& matrix);

std::vector<InstanceOutcome> outcomes(const CalibratedPredictor& predictor,
                                      const ScoreMatrix& matrix, const CostModel* cost);

std::vector<LabelSet> prediction_sets(const CalibratedPredictor& predictor,
                                      const ScoreMatrix& matrix);

}  // namespace serial

/// Per-instance outcome shared by both kernel flavors.
InstanceOutcome instance_outcome(const CalibratedPredictor& predictor, std::span<const double> probs,
                                 Label truth, const CostModel* cost);

/// Mean of L over outcomes, summed in index order.
double mean_loss(const std::vector<InstanceOutcome>& outcomes);

}  // namespace uconf
