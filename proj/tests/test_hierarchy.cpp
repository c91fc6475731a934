#include <doctest.h>

#include <algorithm>
#include <map>
#include <queue>
#include <random>
#include <set>
#include <thread>

#include "uconf/hierarchy.hpp"

using namespace uconf;

namespace {

// Undirected adjacency over node names, built straight from the edge list.
struct Graph {
    std::map<std::string, std::vector<std::string>> adj;

    explicit Graph(const std::vector<Hierarchy::Edge>& edges) {
        for (const auto& e : edges) {
            adj[e.child].push_back(e.parent);
            adj[e.parent].push_back(e.child);
        }
    }

    int bfs(const std::string& from, const std::string& to) const {
        std::map<std::string, int> dist{{from, 0}};
        std::queue<std::string> q;
        q.push(from);
        while (!q.empty()) {
            const auto u = q.front();
            q.pop();
            if (u == to) return dist[u];
            for (const auto& v : adj.at(u)) {
                if (!dist.count(v)) {
                    dist[v] = dist[u] + 1;
                    q.push(v);
                }
            }
        }
        return -1;
    }
};

// Random tree: node i > 0 hangs under a random earlier node; labels go on leaves.
std::pair<std::vector<Hierarchy::Edge>, std::vector<std::string>> random_tree(std::mt19937_64& rng, int nodes) {
    std::vector<Hierarchy::Edge> edges;
    std::vector<int> children(static_cast<std::size_t>(nodes), 0);
    for (int i = 1; i < nodes; ++i) {
        const int parent = static_cast<int>(bounded_draw(rng, static_cast<std::uint64_t>(i)));
        edges.push_back({"n" + std::to_string(i), "n" + std::to_string(parent)});
        ++children[static_cast<std::size_t>(parent)];
    }
    std::vector<std::string> leaves;
    for (int i = 1; i < nodes; ++i) {
        if (children[static_cast<std::size_t>(i)] == 0) leaves.push_back("n" + std::to_string(i));
    }
    std::shuffle(leaves.begin(), leaves.end(), rng);
    return {edges, leaves};
}

template <typename F>
ErrorKind kind_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an exception");
    return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("tree distance examples") {
    const auto h = Hierarchy::balanced(2, 3);  // 8 leaves
    CHECK(h.num_labels() == 8);
    CHECK(h.tree_distance(3, 3) == 0);
    CHECK(h.tree_distance(0, 1) == 2);
    CHECK(h.tree_distance(0, 7) == 6);

    // Leaves in different top branches of a 3-level binary tree.
    const std::vector<Hierarchy::Edge> edges = {{"a", "r"}, {"b", "r"}, {"a0", "a"}, {"a1", "a"},
                                                {"b0", "b"}, {"b1", "b"}};
    const auto small = Hierarchy::from_edges(edges, {"a0", "a1", "b0", "b1"});
    const Graph g(edges);
    CHECK(small.tree_distance(0, 2) == g.bfs("a0", "b0"));
    CHECK(small.tree_distance(0, 2) == 4);
    CHECK(kind_of([&] { (void)small.tree_distance(0, 4); }) == ErrorKind::UnknownLabel);
}

TEST_CASE("tree distance matches BFS on random trees") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 40; ++trial) {
        const auto [edges, leaves] = random_tree(rng, 6 + static_cast<int>(bounded_draw(rng, 30)));
        if (leaves.size() < 2) continue;
        const auto h = Hierarchy::from_edges(edges, leaves);
        const Graph g(edges);
        for (Label a = 0; a < h.num_labels(); ++a) {
            for (Label b = 0; b < h.num_labels(); ++b) {
                REQUIRE(h.tree_distance(a, b) == g.bfs(leaves[static_cast<std::size_t>(a)],
                                                       leaves[static_cast<std::size_t>(b)]));
            }
        }
    }
}

TEST_CASE("tree distance is a metric (exhaustive, K <= 20)") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 30; ++trial) {
        const auto [edges, leaves] = random_tree(rng, 10 + static_cast<int>(bounded_draw(rng, 25)));
        if (leaves.size() < 2 || leaves.size() > 20) continue;
        const auto h = Hierarchy::from_edges(edges, leaves);
        const int k = h.num_labels();
        for (Label a = 0; a < k; ++a) {
            for (Label b = 0; b < k; ++b) {
                REQUIRE(h.tree_distance(a, b) == h.tree_distance(b, a));
                REQUIRE((h.tree_distance(a, b) == 0) == (a == b));
                for (Label c = 0; c < k; ++c) {
                    REQUIRE(h.tree_distance(a, c) <= h.tree_distance(a, b) + h.tree_distance(b, c));
                }
            }
        }
    }
}

TEST_CASE("categories") {
    SUBCASE("star tree has one category") {
        const auto h = Hierarchy::star(5);
        const auto cats = h.categories();
        REQUIRE(cats.size() == 1);
        CHECK(cats[0] == LabelSet{0, 1, 2, 3, 4});
    }
    SUBCASE("balanced binary tree, K=4") {
        const auto cats = Hierarchy::balanced(2, 2).categories();
        CHECK(cats == std::vector<LabelSet>{{0, 1}, {2, 3}});
    }
    SUBCASE("uniform depth: one category per second-to-last node, partitioning labels") {
        const auto h = Hierarchy::balanced(3, 3);  // 27 leaves under 9 parents
        const auto cats = h.categories();
        CHECK(cats.size() == 9);
        std::set<Label> seen;
        for (const auto& c : cats) {
            CHECK(c.size() == 3);
            for (Label y : c) CHECK(seen.insert(y).second);
        }
        CHECK(seen.size() == 27);
        // Subtree enumeration straight from parent pointers.
        for (const auto& c : cats) {
            const int parent = h.parent(h.leaf_of(c[0]));
            for (Label y : c) CHECK(h.parent(h.leaf_of(y)) == parent);
        }
    }
    SUBCASE("ragged tree groups shallow leaves under their parent") {
        // root -> {a, s}; a -> {a0, a1}; a0 -> {x, y}; s and a1 are shallow leaves.
        const std::vector<Hierarchy::Edge> edges = {{"a", "r"},   {"s", "r"},   {"a0", "a"},
                                                    {"a1", "a"},  {"x", "a0"},  {"y", "a0"}};
        const auto h = Hierarchy::from_edges(edges, {"x", "y", "a1", "s"});
        const auto cats = h.categories();
        std::set<Label> covered;
        for (const auto& c : cats) covered.insert(c.begin(), c.end());
        CHECK(covered.size() == 4);
        CHECK(std::find(cats.begin(), cats.end(), LabelSet{0, 1}) != cats.end());
        CHECK(std::find(cats.begin(), cats.end(), LabelSet{2}) != cats.end());
        CHECK(std::find(cats.begin(), cats.end(), LabelSet{3}) != cats.end());
    }
}

TEST_CASE("diameter") {
    CHECK(Hierarchy::star(2).diameter() == 2);
    CHECK(Hierarchy::star(9).diameter() == 2);
    // Path-shaped tree: leaf "p" at depth 1, leaf "q" at depth 3.
    const std::vector<Hierarchy::Edge> edges = {{"p", "r"}, {"m", "r"}, {"n", "m"}, {"q", "n"}};
    const auto h = Hierarchy::from_edges(edges, {"p", "q"});
    CHECK(h.diameter() == Graph(edges).bfs("p", "q"));
    CHECK(h.diameter() == 4);

    const auto b = Hierarchy::balanced(3, 2);
    const auto& table = b.distance_table();
    CHECK(b.diameter() == *std::max_element(table.begin(), table.end()));
}

TEST_CASE("validation errors") {
    CHECK(kind_of([] { Hierarchy::from_edges({{"a", "b"}, {"b", "a"}, {"c", "a"}}, {"c", "a"}); }) ==
          ErrorKind::CycleDetected);
    CHECK(kind_of([] { Hierarchy::from_edges({{"a", "r"}, {"b", "r"}}, {"a", "zz"}); }) ==
          ErrorKind::OrphanLabel);
    // Label on an internal node.
    CHECK(kind_of([] { Hierarchy::from_edges({{"a", "r"}, {"b", "a"}, {"c", "a"}}, {"a", "b"}); }) ==
          ErrorKind::InvalidHierarchy);
    // Two roots.
    CHECK(kind_of([] { Hierarchy::from_edges({{"a", "r"}, {"b", "s"}}, {"a", "b"}); }) ==
          ErrorKind::InvalidHierarchy);
    // Two labels on one leaf.
    CHECK(kind_of([] { Hierarchy::from_edges({{"a", "r"}, {"b", "r"}}, {"a", "a"}); }) ==
          ErrorKind::InvalidHierarchy);
}

TEST_CASE("distance table initializes once under concurrent first use") {
    const auto h = Hierarchy::balanced(4, 3);
    std::vector<std::thread> threads;
    std::vector<const std::vector<int>*> seen(8, nullptr);
    for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&, t] { seen[static_cast<std::size_t>(t)] = &h.distance_table(); });
    }
    for (auto& th : threads) th.join();
    for (const auto* p : seen) CHECK(p == seen[0]);
    CHECK(seen[0]->size() == 64U * 64U);
}
