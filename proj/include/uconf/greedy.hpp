#pragma once
// Per-instance greedy cost-aware set construction. At each step the label
// maximizing (M - L(S + {y})) / (1 - p[y]) is inserted; the first prefix whose
// plug-in mass reaches 1 - alpha is the greedy set, and the same rule keeps
// running until every label has a position in the order.

#include <span>
#include <vector>

#include "uconf/core.hpp"
#include "uconf/losses.hpp"

namespace uconf {

struct GreedyTrace {
    std::vector<Label> order;
    int chosen_prefix_len = 0;
    std::vector<double> prefix_mass;
    /// Set when some L(S + {y}) exceeded the declared bound and the numerator was clamped.
    bool bound_exceeded = false;
};

struct GreedyOptions {
    /// Literal candidate filter p[y] <= alpha - p(S) during set construction.
    /// It usually empties the candidate pool on the first step, so the default
    /// uses the coverage stopping rule instead.
    bool strict_filter = false;
};

GreedyTrace greedy_build(std::span<const double> probs, const CostModel& cost, double alpha,
                         GreedyOptions options = {});

LabelSet greedy_set(std::span<const double> probs, const CostModel& cost, double alpha,
                    GreedyOptions options = {});

}  // namespace uconf
