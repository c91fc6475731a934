#pragma once
// Rooted label tree. Labels sit on distinct leaves; distances are unweighted
// edge counts along the unique leaf-to-leaf path.

#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "uconf/core.hpp"

namespace uconf {

class Hierarchy {
public:
    struct Edge {
        std::string child;
        std::string parent;
    };

    /// Builds and validates the tree. `leaf_of_label[y]` names the node that
    /// hosts label y; it must be total over [0, K). Throws CycleDetected,
    /// OrphanLabel or InvalidHierarchy.
    static Hierarchy from_edges(const std::vector<Edge>& edges,
                                const std::vector<std::string>& leaf_of_label);

    /// Balanced tree where every internal node has `branching` children and
    /// all leaves sit at `depth`; leaves are numbered left to right.
    static Hierarchy balanced(int branching, int depth);

    /// Root with K leaf children.
    static Hierarchy star(int num_labels);

    int num_labels() const noexcept { return static_cast<int>(label_leaf_.size()); }
    int num_nodes() const noexcept { return static_cast<int>(names_.size()); }
    int root() const noexcept { return root_; }
    const std::string& node_name(int node) const { return names_.at(static_cast<std::size_t>(node)); }
    int parent(int node) const { return parent_.at(static_cast<std::size_t>(node)); }
    int depth(int node) const { return depth_.at(static_cast<std::size_t>(node)); }
    int leaf_of(Label y) const;
    int max_leaf_depth() const noexcept { return max_leaf_depth_; }

    int tree_distance(Label a, Label b) const;

    /// Label groups at the second-to-last level, counted from the deepest leaf.
    /// A label whose leaf is shallower than that level is grouped with the
    /// other shallow labels hanging off the same parent.
    std::vector<LabelSet> categories() const;

    int diameter() const;

    /// All-pairs label distance table (row-major K x K), computed once.
    const std::vector<int>& distance_table() const;

private:
    Hierarchy() = default;
    void finalize();
    int lca_distance(int a, int b) const;

    std::vector<std::string> names_;
    std::vector<int> parent_;
    std::vector<int> depth_;
    std::vector<int> label_leaf_;
    int root_ = 0;
    int max_leaf_depth_ = 0;

    struct Cache {
        std::once_flag once;
        std::vector<int> table;
    };
    std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

}  // namespace uconf
