#pragma once
// Nonconformity scores. Every method reduces an instance to per-label scores
// where smaller means more conforming, so one split-conformal code path
// serves all of them.

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "uconf/core.hpp"
#include "uconf/losses.hpp"

namespace uconf {

enum class MethodKind { Base, Penalized, Ratio, GreedyOrder };

const char* to_string(MethodKind kind);
MethodKind parse_method_kind(const std::string& name);

class ScoreMethod {
public:
    /// Default-constructed methods are Base.
    ScoreMethod() = default;

    /// Cumulative probability mass in descending-probability order.
    static ScoreMethod base();
    /// Base score plus lambda times the linearized set loss along the same order.
    static ScoreMethod penalized(std::shared_ptr<const CostModel> cost, double lambda);
    /// Probability-to-penalty ratio; requires a separable cost model.
    static ScoreMethod ratio(std::shared_ptr<const CostModel> cost);
    /// Cumulative probability mass along the greedy cost-aware insertion order.
    static ScoreMethod greedy_order(std::shared_ptr<const CostModel> cost, double alpha);

    MethodKind kind() const noexcept { return kind_; }
    double lambda() const noexcept { return lambda_; }
    double alpha() const noexcept { return alpha_; }
    const std::shared_ptr<const CostModel>& cost() const noexcept { return cost_; }
    /// Ratio scores are conformity scores; they are negated before thresholding.
    bool negated() const noexcept { return kind_ == MethodKind::Ratio; }
    std::string name() const;

private:
    MethodKind kind_ = MethodKind::Base;
    double lambda_ = 0.0;
    double alpha_ = 0.0;
    std::shared_ptr<const CostModel> cost_;
};

/// All K nonconformity scores of one instance, with the insertion order the
/// method implies (scores are nondecreasing along it).
struct InstanceScores {
    std::vector<double> scores;
    std::vector<Label> insertion_order;
};

double aps_rho(std::span<const double> probs, Label y);
double penalized_score(const ScoreMethod& method, std::span<const double> probs, Label y);
/// Conformity ratio p[y] / l(y) (not negated).
double ratio_score(const ScoreMethod& method, std::span<const double> probs, Label y);
double greedy_order_score(const ScoreMethod& method, std::span<const double> probs, Label y);

/// Nonconformity scores for every label (Ratio already negated).
InstanceScores instance_scores(const ScoreMethod& method, std::span<const double> probs);

/// Nonconformity score of a single label, identical to instance_scores(..).scores[y].
double nonconformity(const ScoreMethod& method, std::span<const double> probs, Label y);

}  // namespace uconf
