#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "hierax/network.hpp"
#include "hierax/translator.hpp"

namespace hierax {

/// Simple undirected graph over variable ids. Labels drive tie-breaking.
class MarkovGraph {
public:
    void add_vertex(VarId v, std::string label = {});
    void add_edge(VarId a, VarId b);
    bool has_vertex(VarId v) const { return adj_.count(v) > 0; }
    bool has_edge(VarId a, VarId b) const;
    const std::set<VarId>& neighbors(VarId v) const;
    std::vector<VarId> vertices() const;
    std::size_t edge_count() const;
    const std::string& label(VarId v) const;

private:
    std::map<VarId, std::set<VarId>> adj_;
    std::map<VarId, std::string> labels_;
};

/// Moral graph of `net`, plus a complete subgraph over every forced set.
MarkovGraph moralize(const BayesianNetwork& net, const std::vector<std::vector<VarId>>& forced = {});

struct Triangulation {
    MarkovGraph chordal;
    std::vector<VarId> order;  // perfect elimination order of `chordal`
};

/// Min-fill elimination; ties go to the lexicographically smallest label.
Triangulation triangulate(const MarkovGraph& g);

/// Maximum cardinality search followed by a perfect-elimination check.
bool verify_chordal(const MarkovGraph& g);

struct JoinTree {
    std::vector<std::vector<VarId>> cliques;  // members sorted by id
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    std::map<VarId, std::size_t> clique_assignment;  // variable -> clique hosting its family

    std::vector<VarId> separator(std::size_t edge) const;
};

/// Maximal cliques from the elimination order, joined by a maximum-weight
/// spanning tree on separator size. Throws GraphError if `order` is not a
/// perfect elimination order of `chordal`.
JoinTree extract_cliques_and_assemble(const MarkovGraph& chordal, const std::vector<VarId>& order);

/// Fills clique_assignment with the smallest clique covering each family.
void assign_families(JoinTree& jt, const BayesianNetwork& net);

/// Tree-ness, family coverage and running intersection. Empty when valid.
std::vector<std::string> verify_join_tree(const JoinTree& jt, const BayesianNetwork& net);

JoinTree build_join_tree(const BayesianNetwork& net, const std::vector<std::vector<VarId>>& forced = {});

std::vector<VarId> family_of(const BayesianNetwork& net, VarId v);

// ---------------------------------------------------------------------------
// Composite trees

struct CompositeClique {
    std::vector<VarId> members;
    std::string level;
};

struct CompositeEdge {
    std::size_t a = 0;
    std::size_t b = 0;
    std::vector<VarId> separator;
    bool link = false;
};

struct CompositeLink {
    std::string level;       // the refined component, i.e. the lower level
    std::size_t upper = 0;   // δ^h
    std::size_t lower = 0;   // δ^l
    std::vector<VarId> interface;
    std::size_t edge = 0;
};

struct LevelView {
    std::string id;
    BayesianNetwork net;     // the level network the tree was built from
    JoinTree tree;
    std::vector<std::size_t> cliques;  // composite index of each local clique
    std::vector<std::vector<VarId>> forced;
};

struct CompositeJoinTree {
    std::vector<CompositeClique> cliques;
    std::vector<CompositeEdge> edges;
    std::vector<CompositeLink> links;
    std::map<std::string, LevelView> levels;
    std::string root_level = kTopLevel;
    std::map<VarId, std::size_t> family_host;  // clique receiving the variable's CPT from the full network
    std::map<VarId, std::size_t> query_host;   // clique used for evidence and queries
    bool merged = false;

    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adjacency() const;  // (neighbor, edge)
    const CompositeLink* link_of(const std::string& level) const;
};

struct CompositeOptions {
    bool merge_subsets = false;
};

CompositeJoinTree build_composite(const BayesianNetwork& net, const TranslationIndex& idx,
                                  const CompositeOptions& options = {});

/// Union-structure checks against the full network: tree-ness, family
/// coverage, RIP, link interfaces, chordality of the union clique graph and
/// that it contains the moral graph, and that every maximal clique of it is a
/// vertex (every vertex maximal as well once merged).
std::vector<std::string> verify_composite(const CompositeJoinTree& cjt, const BayesianNetwork& net);

/// Contracts every edge whose endpoints are nested; the larger clique survives.
CompositeJoinTree merge_subset_cliques(const CompositeJoinTree& cjt, const BayesianNetwork& net);

std::string to_text(const CompositeJoinTree& cjt, const BayesianNetwork& net);

}  // namespace hierax
