#include "uconf/greedy.hpp"

#include <algorithm>
#include <cmath>

namespace uconf {

GreedyTrace greedy_build(std::span<const double> probs, const CostModel& cost, double alpha,
                         GreedyOptions options) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw Error(ErrorKind::InvalidAlpha, "alpha must lie in (0,1), got " + std::to_string(alpha));
    }
    const double bound = cost.bound();
    if (!(bound > 0.0) || !std::isfinite(bound)) {
        throw Error(ErrorKind::MissingBound, "greedy construction needs a positive finite loss bound");
    }
    const int k = static_cast<int>(probs.size());
    if (k != cost.num_labels()) {
        throw Error(ErrorKind::DimensionMismatch, "probability row has " + std::to_string(k) +
                                                      " entries, cost model has " +
                                                      std::to_string(cost.num_labels()));
    }

    GreedyTrace trace;
    trace.order.reserve(static_cast<std::size_t>(k));
    trace.prefix_mass.reserve(static_cast<std::size_t>(k));
    LossAccumulator acc(cost);
    double mass = 0.0;
    bool stopped = false;
    const double target = 1.0 - alpha;

    for (int step = 0; step < k; ++step) {
        const bool filtering = options.strict_filter && !stopped;
        Label best = -1;
        double best_ratio = 0.0;
        bool best_certain = false;
        for (Label y = 0; y < k; ++y) {
            if (acc.contains(y)) continue;
            const double p = probs[static_cast<std::size_t>(y)];
            if (filtering && !(p <= alpha - mass)) continue;

            const bool certain = p >= 1.0;
            double ratio = 0.0;
            if (!certain) {
                double numerator = bound - acc.loss_if_added(y);
                if (numerator < 0.0) {
                    trace.bound_exceeded = true;
                    numerator = 0.0;
                }
                ratio = numerator / (1.0 - p);
            }

            bool better = false;
            if (best < 0) {
                better = true;
            } else if (certain != best_certain) {
                better = certain;
            } else if (!certain && ratio != best_ratio) {
                better = ratio > best_ratio;
            } else {
                better = p > probs[static_cast<std::size_t>(best)];  // ids ascend, so equal p keeps the smaller id
            }
            if (better) {
                best = y;
                best_ratio = ratio;
                best_certain = certain;
            }
        }

        if (best < 0) {
            // Literal filter ran dry: the set ends here, the order continues unfiltered.
            stopped = true;
            trace.chosen_prefix_len = step;
            --step;
            continue;
        }

        acc.add(best);
        mass += probs[static_cast<std::size_t>(best)];
        trace.order.push_back(best);
        trace.prefix_mass.push_back(mass);
        if (!stopped && mass >= target) {
            stopped = true;
            trace.chosen_prefix_len = step + 1;
        }
    }
    if (!stopped) trace.chosen_prefix_len = k;  // only reachable through rounding of the mass
    return trace;
}

LabelSet greedy_set(std::span<const double> probs, const CostModel& cost, double alpha,
                    GreedyOptions options) {
    const GreedyTrace trace = greedy_build(probs, cost, alpha, options);
    LabelSet set(trace.order.begin(), trace.order.begin() + trace.chosen_prefix_len);
    std::sort(set.begin(), set.end());
    return set;
}

}  // namespace uconf
