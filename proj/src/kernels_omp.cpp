#include "uconf/kernels.hpp"

#include "parallel_for.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace uconf::parallel {

using detail::parallel_for;

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

std::vector<double> true_label_scores(const ScoreMethod& method, const ScoreMatrix& matrix) {
    std::vector<double> scores(matrix.size());
    parallel_for(matrix.size(), [&](std::size_t i) {
        scores[i] = nonconformity(method, matrix.row(i), matrix.label(i));
    });
    return scores;
}

std::vector<InstanceOutcome> outcomes(const CalibratedPredictor& predictor,
                                      const ScoreMatrix& matrix, const CostModel* cost) {
    std::vector<InstanceOutcome> out(matrix.size());
    parallel_for(matrix.size(), [&](std::size_t i) {
        out[i] = instance_outcome(predictor, matrix.row(i), matrix.label(i), cost);
    });
    return out;
}

std::vector<LabelSet> prediction_sets(const CalibratedPredictor& predictor,
                                      const ScoreMatrix& matrix) {
    std::vector<LabelSet> out(matrix.size());
    parallel_for(matrix.size(), [&](std::size_t i) { out[i] = predict_set(predictor, matrix.row(i)); });
    return out;
}

}  // namespace uconf::parallel
