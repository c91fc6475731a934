#include "uconf/scores.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "uconf/greedy.hpp"

namespace uconf {

const char* to_string(MethodKind kind) {
    switch (kind) {
        case MethodKind::Base: return "base";
        case MethodKind::Penalized: return "penalized";
        case MethodKind::Ratio: return "ratio";
        case MethodKind::GreedyOrder: return "greedy";
    }
    return "unknown";
}

MethodKind parse_method_kind(const std::string& name) {
    if (name == "base") return MethodKind::Base;
    if (name == "penalized") return MethodKind::Penalized;
    if (name == "ratio") return MethodKind::Ratio;
    if (name == "greedy") return MethodKind::GreedyOrder;
    throw Error(ErrorKind::InvalidArgument,
                "unknown method '" + name + "' (expected base, penalized, ratio or greedy)");
}

ScoreMethod ScoreMethod::base() { return ScoreMethod{}; }

ScoreMethod ScoreMethod::penalized(std::shared_ptr<const CostModel> cost, double lambda) {
    if (!cost) throw Error(ErrorKind::InvalidArgument, "penalized score needs a cost model");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw Error(ErrorKind::InvalidArgument, "lambda must be finite and >= 0");
    }
    ScoreMethod m;
    m.kind_ = MethodKind::Penalized;
    m.lambda_ = lambda;
    m.cost_ = std::move(cost);
    return m;
}

ScoreMethod ScoreMethod::ratio(std::shared_ptr<const CostModel> cost) {
    if (!cost) throw Error(ErrorKind::InvalidArgument, "ratio score needs a cost model");
    if (cost->kind() != CostKind::Separable) {
        throw Error(ErrorKind::InvalidArgument, "ratio score needs a separable cost model");
    }
    ScoreMethod m;
    m.kind_ = MethodKind::Ratio;
    m.cost_ = std::move(cost);
    return m;
}

ScoreMethod ScoreMethod::greedy_order(std::shared_ptr<const CostModel> cost, double alpha) {
    if (!cost) throw Error(ErrorKind::InvalidArgument, "greedy score needs a cost model");
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw Error(ErrorKind::InvalidAlpha, "alpha must lie in (0,1)");
    }
    if (!(cost->bound() > 0.0)) {
        throw Error(ErrorKind::MissingBound, "greedy score needs a positive loss bound");
    }
    ScoreMethod m;
    m.kind_ = MethodKind::GreedyOrder;
    m.alpha_ = alpha;
    m.cost_ = std::move(cost);
    return m;
}

std::string ScoreMethod::name() const {
    std::ostringstream os;
    os << to_string(kind_);
    if (kind_ == MethodKind::Penalized) os << "(lambda=" << lambda_ << ")";
    return os.str();
}

namespace {

void check_row(std::span<const double> probs, const ScoreMethod& method) {
    if (probs.size() < 2) throw Error(ErrorKind::DimensionMismatch, "probability row too short");
    if (method.cost() && static_cast<int>(probs.size()) != method.cost()->num_labels()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "probability row has " + std::to_string(probs.size()) +
                        " entries, cost model has " + std::to_string(method.cost()->num_labels()));
    }
}

void check_label(std::span<const double> probs, Label y) {
    if (y < 0 || static_cast<std::size_t>(y) >= probs.size()) {
        throw Error(ErrorKind::UnknownLabel, "label " + std::to_string(y) + " outside [0," +
                                                 std::to_string(probs.size()) + ")");
    }
}

// Cumulative mass along `order`, written back per label.
void cumulative_mass(std::span<const double> probs, std::span<const Label> order,
                     std::vector<double>& out) {
    double running = 0.0;
    for (Label y : order) {
        running += probs[static_cast<std::size_t>(y)];
        out[static_cast<std::size_t>(y)] = running;
    }
}

}  // namespace

InstanceScores instance_scores(const ScoreMethod& method, std::span<const double> probs) {
    check_row(probs, method);
    const std::size_t k = probs.size();
    InstanceScores out;
    out.scores.assign(k, 0.0);

    switch (method.kind()) {
        case MethodKind::Base: {
            out.insertion_order = sort_descending(probs);
            cumulative_mass(probs, out.insertion_order, out.scores);
            break;
        }
        case MethodKind::Penalized: {
            out.insertion_order = sort_descending(probs);
            cumulative_mass(probs, out.insertion_order, out.scores);
            LossAccumulator acc(*method.cost());
            double linearized = 0.0;
            for (Label y : out.insertion_order) {
                linearized += acc.gain(y);
                acc.add(y);
                out.scores[static_cast<std::size_t>(y)] += method.lambda() * linearized;
            }
            break;
        }
        case MethodKind::Ratio: {
            const auto& penalties = method.cost()->penalties();
            std::vector<double> ratio(k);
            for (std::size_t y = 0; y < k; ++y) {
                if (!(penalties[y] > 0.0)) {
                    throw Error(ErrorKind::ZeroPenalty, "label " + std::to_string(y) + " has zero penalty");
                }
                ratio[y] = probs[y] / penalties[y];
                out.scores[y] = -ratio[y];
            }
            out.insertion_order = sort_descending(ratio);
            break;
        }
        case MethodKind::GreedyOrder: {
            GreedyTrace trace = greedy_build(probs, *method.cost(), method.alpha());
            out.insertion_order = std::move(trace.order);
            cumulative_mass(probs, out.insertion_order, out.scores);
            break;
        }
    }
    return out;
}

double nonconformity(const ScoreMethod& method, std::span<const double> probs, Label y) {
    check_label(probs, y);
    if (method.kind() == MethodKind::Ratio) return -ratio_score(method, probs, y);
    return instance_scores(method, probs).scores[static_cast<std::size_t>(y)];
}

double aps_rho(std::span<const double> probs, Label y) {
    check_label(probs, y);
    return instance_scores(ScoreMethod::base(), probs).scores[static_cast<std::size_t>(y)];
}

double penalized_score(const ScoreMethod& method, std::span<const double> probs, Label y) {
    if (method.kind() != MethodKind::Penalized) {
        throw Error(ErrorKind::InvalidArgument, "penalized_score needs a penalized method");
    }
    check_label(probs, y);
    return instance_scores(method, probs).scores[static_cast<std::size_t>(y)];
}

double ratio_score(const ScoreMethod& method, std::span<const double> probs, Label y) {
    if (method.kind() != MethodKind::Ratio) {
        throw Error(ErrorKind::InvalidArgument, "ratio_score needs a ratio method");
    }
    check_row(probs, method);
    check_label(probs, y);
    const double penalty = method.cost()->penalties()[static_cast<std::size_t>(y)];
    if (!(penalty > 0.0)) {
        throw Error(ErrorKind::ZeroPenalty, "label " + std::to_string(y) + " has zero penalty");
    }
    return probs[static_cast<std::size_t>(y)] / penalty;
}

double greedy_order_score(const ScoreMethod& method, std::span<const double> probs, Label y) {
    if (method.kind() != MethodKind::GreedyOrder) {
        throw Error(ErrorKind::InvalidArgument, "greedy_order_score needs a greedy method");
    }
    check_label(probs, y);
    return instance_scores(method, probs).scores[static_cast<std::size_t>(y)];
}

}  // namespace uconf
