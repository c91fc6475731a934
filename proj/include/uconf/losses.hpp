#pragma once
// Set cost functions: separable penalty sums, hierarchy max-distance and
// category coverage, plus the incremental evaluator used to linearize them.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uconf/core.hpp"
#include "uconf/hierarchy.hpp"

namespace uconf {

enum class CostKind { Separable, MaxDistance, Coverage };

const char* to_string(CostKind kind);

class CostModel {
public:
    /// Per-label penalties, all strictly positive. Default bound is their sum.
    static CostModel separable(std::vector<double> penalties,
                               std::optional<double> bound = std::nullopt);
    /// Largest pairwise tree distance in the set. Default bound is the diameter.
    static CostModel max_distance(std::shared_ptr<const Hierarchy> hierarchy,
                                  std::optional<double> bound = std::nullopt);
    /// Number of second-to-last-level categories the set intersects.
    static CostModel coverage(std::shared_ptr<const Hierarchy> hierarchy,
                              std::optional<double> bound = std::nullopt);
    /// Coverage over an explicit, possibly overlapping, category list.
    static CostModel coverage(std::vector<LabelSet> categories, int num_labels,
                              std::optional<double> bound = std::nullopt);

    CostKind kind() const noexcept { return kind_; }
    int num_labels() const noexcept { return num_labels_; }
    double bound() const noexcept { return bound_; }
    const std::vector<double>& penalties() const noexcept { return penalties_; }
    const std::shared_ptr<const Hierarchy>& hierarchy() const noexcept { return hierarchy_; }
    const std::vector<LabelSet>& categories() const noexcept { return categories_; }
    /// Indices of the categories containing label y.
    const std::vector<int>& categories_of(Label y) const;
    double penalty(Label y) const;

    /// L(S); duplicates in S are ignored, L(empty) = 0.
    double set_loss(std::span<const Label> set) const;

    /// g_i = L(S_i) - L(S_{i-1}) along the prefixes of `order`.
    std::vector<double> marginal_gains(std::span<const Label> order) const;

    /// Stable 64-bit fingerprint of everything that affects L and the bound.
    std::uint64_t digest() const;
    std::string describe() const;

    void check_label(Label y) const;

private:
    CostModel() = default;
    void set_bound(double natural, std::optional<double> requested);

    CostKind kind_ = CostKind::Separable;
    int num_labels_ = 0;
    double bound_ = 0.0;
    std::vector<double> penalties_;
    std::shared_ptr<const Hierarchy> hierarchy_;
    std::vector<LabelSet> categories_;
    std::vector<std::vector<int>> label_categories_;
};

/// Tracks L along a sequence of insertions in O(K) per step.
class LossAccumulator {
public:
    explicit LossAccumulator(const CostModel& model);

    double loss() const noexcept { return loss_; }
    bool contains(Label y) const { return member_[static_cast<std::size_t>(y)] != 0; }
    std::size_t size() const noexcept { return members_.size(); }

    /// L(S + {y}) - L(S). For separable models this is exactly penalty(y).
    double gain(Label y) const;
    double loss_if_added(Label y) const { return loss_ + gain(y); }
    void add(Label y);

private:
    const CostModel* model_;
    double loss_ = 0.0;
    std::vector<Label> members_;
    std::vector<char> member_;
    std::vector<char> category_hit_;
    std::vector<int> max_dist_;  // max distance from each label to the current set
};

/// True when marginal gains never depend on what is already in the set.
/// Exhaustive for K <= 8, sampled otherwise; a coverage model with a category
/// of two or more labels is rejected constructively.
bool is_separable_witness(const CostModel& model, std::uint64_t seed = 0);

}  // namespace uconf
