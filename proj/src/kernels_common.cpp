#include "uconf/kernels.hpp"

#include <algorithm>

namespace uconf {

InstanceOutcome instance_outcome(const CalibratedPredictor& predictor, std::span<const double> probs,
                                 Label truth, const CostModel* cost) {
    const LabelSet set = predict_set(predictor, probs);
    InstanceOutcome out;
    out.set_size = static_cast<int>(set.size());
    out.covered = std::binary_search(set.begin(), set.end(), truth);
    out.loss = cost ? cost->set_loss(set) : 0.0;
    out.true_prob = probs[static_cast<std::size_t>(truth)];
    return out;
}

double mean_loss(const std::vector<InstanceOutcome>& outcomes) {
    if (outcomes.empty()) throw Error(ErrorKind::EmptyTest, "no outcomes to average");
    double total = 0.0;
    for (const auto& o : outcomes) total += o.loss;
    return total / static_cast<double>(outcomes.size());
}

}  // namespace uconf
