#include "uconf/hierarchy.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

namespace uconf {

Hierarchy Hierarchy::from_edges(const std::vector<Edge>& edges,
                                const std::vector<std::string>& leaf_of_label) {
    if (leaf_of_label.size() < 2) {
        throw Error(ErrorKind::InvalidHierarchy, "hierarchy must host at least 2 labels");
    }
    Hierarchy h;
    std::unordered_map<std::string, int> index;
    auto intern = [&](const std::string& name) {
        auto [it, inserted] = index.try_emplace(name, static_cast<int>(h.names_.size()));
        if (inserted) {
            h.names_.push_back(name);
            h.parent_.push_back(-1);
        }
        return it->second;
    };

    for (const auto& e : edges) {
        if (e.child.empty() || e.parent.empty()) {
            throw Error(ErrorKind::InvalidHierarchy, "edge with an empty node name");
        }
        if (e.child == e.parent) {
            throw Error(ErrorKind::CycleDetected, "node '" + e.child + "' is its own parent");
        }
        const int c = intern(e.child);
        const int p = intern(e.parent);
        auto& slot = h.parent_[static_cast<std::size_t>(c)];
        if (slot != -1 && slot != p) {
            throw Error(ErrorKind::InvalidHierarchy,
                        "node '" + e.child + "' has two parents ('" +
                            h.names_[static_cast<std::size_t>(slot)] + "' and '" + e.parent + "')");
        }
        slot = p;
    }

    // Walk up from every node; revisiting a node on the current path is a cycle.
    const auto n = h.names_.size();
    std::vector<int> state(n, 0);  // 0 unseen, 1 on path, 2 done
    for (std::size_t start = 0; start < n; ++start) {
        std::vector<int> path;
        int v = static_cast<int>(start);
        while (v != -1 && state[static_cast<std::size_t>(v)] == 0) {
            state[static_cast<std::size_t>(v)] = 1;
            path.push_back(v);
            v = h.parent_[static_cast<std::size_t>(v)];
        }
        if (v != -1 && state[static_cast<std::size_t>(v)] == 1) {
            throw Error(ErrorKind::CycleDetected,
                        "cycle through node '" + h.names_[static_cast<std::size_t>(v)] + "'");
        }
        for (int u : path) state[static_cast<std::size_t>(u)] = 2;
    }

    std::vector<int> roots;
    for (std::size_t v = 0; v < n; ++v) {
        if (h.parent_[v] == -1) roots.push_back(static_cast<int>(v));
    }
    if (roots.size() != 1) {
        throw Error(ErrorKind::InvalidHierarchy,
                    "expected a single root, found " + std::to_string(roots.size()));
    }
    h.root_ = roots.front();
    h.parent_[static_cast<std::size_t>(h.root_)] = h.root_;

    std::vector<int> child_count(n, 0);
    for (std::size_t v = 0; v < n; ++v) {
        if (static_cast<int>(v) != h.root_) ++child_count[static_cast<std::size_t>(h.parent_[v])];
    }

    std::vector<int> host(n, -1);
    for (std::size_t y = 0; y < leaf_of_label.size(); ++y) {
        auto it = index.find(leaf_of_label[y]);
        if (it == index.end()) {
            throw Error(ErrorKind::OrphanLabel, "label " + std::to_string(y) + " maps to unknown node '" +
                                                    leaf_of_label[y] + "'");
        }
        const auto node = static_cast<std::size_t>(it->second);
        if (child_count[node] != 0) {
            throw Error(ErrorKind::InvalidHierarchy,
                        "label " + std::to_string(y) + " sits on internal node '" + leaf_of_label[y] + "'");
        }
        if (host[node] != -1) {
            throw Error(ErrorKind::InvalidHierarchy, "labels " + std::to_string(host[node]) + " and " +
                                                         std::to_string(y) + " share leaf '" +
                                                         leaf_of_label[y] + "'");
        }
        host[node] = static_cast<int>(y);
        h.label_leaf_.push_back(it->second);
    }
    h.finalize();
    return h;
}

void Hierarchy::finalize() {
    const auto n = names_.size();
    depth_.assign(n, -1);
    depth_[static_cast<std::size_t>(root_)] = 0;
    // Parents are not ordered, so resolve depths by walking up with memoization.
    for (std::size_t start = 0; start < n; ++start) {
        std::vector<int> path;
        int v = static_cast<int>(start);
        while (depth_[static_cast<std::size_t>(v)] < 0) {
            path.push_back(v);
            v = parent_[static_cast<std::size_t>(v)];
        }
        int d = depth_[static_cast<std::size_t>(v)];
        for (auto it = path.rbegin(); it != path.rend(); ++it) {
            depth_[static_cast<std::size_t>(*it)] = ++d;
        }
    }
    max_leaf_depth_ = 0;
    for (int leaf : label_leaf_) max_leaf_depth_ = std::max(max_leaf_depth_, depth(leaf));
}

Hierarchy Hierarchy::balanced(int branching, int depth) {
    if (branching < 2 || depth < 1) {
        throw Error(ErrorKind::InvalidHierarchy, "balanced tree needs branching >= 2 and depth >= 1");
    }
    std::vector<Edge> edges;
    std::vector<std::string> level{"root"};
    for (int d = 1; d <= depth; ++d) {
        std::vector<std::string> next;
        for (const auto& parent : level) {
            for (int c = 0; c < branching; ++c) {
                next.push_back(parent + "." + std::to_string(c));
                edges.push_back({next.back(), parent});
            }
        }
        level = std::move(next);
    }
    return from_edges(edges, level);
}

Hierarchy Hierarchy::star(int num_labels) {
    std::vector<Edge> edges;
    std::vector<std::string> leaves;
    for (int y = 0; y < num_labels; ++y) {
        leaves.push_back("leaf" + std::to_string(y));
        edges.push_back({leaves.back(), "root"});
    }
    return from_edges(edges, leaves);
}

int Hierarchy::leaf_of(Label y) const {
    if (y < 0 || y >= num_labels()) {
        throw Error(ErrorKind::UnknownLabel, "label " + std::to_string(y) + " not in hierarchy");
    }
    return label_leaf_[static_cast<std::size_t>(y)];
}

int Hierarchy::lca_distance(int a, int b) const {
    int steps = 0;
    while (depth(a) > depth(b)) { a = parent(a); ++steps; }
    while (depth(b) > depth(a)) { b = parent(b); ++steps; }
    while (a != b) {
        a = parent(a);
        b = parent(b);
        steps += 2;
    }
    return steps;
}

int Hierarchy::tree_distance(Label a, Label b) const {
    leaf_of(a);
    leaf_of(b);
    return distance_table()[static_cast<std::size_t>(a * num_labels() + b)];
}

const std::vector<int>& Hierarchy::distance_table() const {
    std::call_once(cache_->once, [this] {
        const int k = num_labels();
        std::vector<int> table(static_cast<std::size_t>(k * k), 0);
        for (int a = 0; a < k; ++a) {
            for (int b = a + 1; b < k; ++b) {
                const int d = lca_distance(label_leaf_[static_cast<std::size_t>(a)],
                                           label_leaf_[static_cast<std::size_t>(b)]);
                table[static_cast<std::size_t>(a * k + b)] = d;
                table[static_cast<std::size_t>(b * k + a)] = d;
            }
        }
        cache_->table = std::move(table);
    });
    return cache_->table;
}

std::vector<LabelSet> Hierarchy::categories() const {
    const int level = max_leaf_depth_ - 1;
    std::map<int, LabelSet> by_anchor;
    for (Label y = 0; y < num_labels(); ++y) {
        int node = label_leaf_[static_cast<std::size_t>(y)];
        int anchor = parent(node);
        if (depth(node) > level) {
            while (depth(node) > level) node = parent(node);
            anchor = node;
        }
        by_anchor[anchor].push_back(y);
    }
    std::vector<LabelSet> out;
    out.reserve(by_anchor.size());
    for (auto& [anchor, labels] : by_anchor) out.push_back(std::move(labels));
    std::sort(out.begin(), out.end(),
              [](const LabelSet& a, const LabelSet& b) { return a.front() < b.front(); });
    return out;
}

int Hierarchy::diameter() const {
    const auto& table = distance_table();
    return table.empty() ? 0 : *std::max_element(table.begin(), table.end());
}

}  // namespace uconf
