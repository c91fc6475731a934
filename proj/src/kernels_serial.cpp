#include "uconf/kernels.hpp"

namespace uconf::serial {

std::vector<double> true_label_scores(const ScoreMethod& method, const ScoreMatrix& matrix) {
    std::vector<double> scores(matrix.size());
    for (std::size_t i = 0; i < matrix.size(); ++i) {
        scores[i] = nonconformity(method, matrix.row(i), matrix.label(i));
    }
    return scores;
}

std::vector<InstanceOutcome> outcomes(const CalibratedPredictor& predictor,
                                      const ScoreMatrix& matrix, const CostModel* cost) {
    std::vector<InstanceOutcome> out(matrix.size());
    for (std::size_t i = 0; i < matrix.size(); ++i) {
        out[i] = instance_outcome(predictor, matrix.row(i), matrix.label(i), cost);
    }
    return out;
}

std::vector<LabelSet> prediction_sets(const CalibratedPredictor& predictor,
                                      const ScoreMatrix& matrix) {
    std::vector<LabelSet> out(matrix.size());
    for (std::size_t i = 0; i < matrix.size(); ++i) out[i] = predict_set(predictor, matrix.row(i));
    return out;
}

}  // namespace uconf::serial
