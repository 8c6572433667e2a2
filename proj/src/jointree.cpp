#include "hierax/jointree.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <optional>

#include <fmt/format.h>

#include "hierax/error.hpp"
#include "hierax/transform.hpp"

namespace hierax {

void MarkovGraph::add_vertex(VarId v, std::string label) {
    adj_[v];
    if (!label.empty() || !labels_.count(v)) labels_[v] = label.empty() ? std::to_string(v) : std::move(label);
}

void MarkovGraph::add_edge(VarId a, VarId b) {
    if (a == b) return;
    add_vertex(a);
    add_vertex(b);
    adj_[a].insert(b);
    adj_[b].insert(a);
}

bool MarkovGraph::has_edge(VarId a, VarId b) const {
    auto it = adj_.find(a);
    return it != adj_.end() && it->second.count(b) > 0;
}

const std::set<VarId>& MarkovGraph::neighbors(VarId v) const {
    auto it = adj_.find(v);
    if (it == adj_.end()) throw UnknownVariable("vertex " + std::to_string(v) + " is not in the graph");
    return it->second;
}

std::vector<VarId> MarkovGraph::vertices() const {
    std::vector<VarId> out;
    for (const auto& [v, _] : adj_) out.push_back(v);
    return out;
}

std::size_t MarkovGraph::edge_count() const {
    std::size_t n = 0;
    for (const auto& [_, ns] : adj_) n += ns.size();
    return n / 2;
}

const std::string& MarkovGraph::label(VarId v) const { return labels_.at(v); }

std::vector<VarId> family_of(const BayesianNetwork& net, VarId v) {
    std::vector<VarId> fam = net.parents(v);
    fam.push_back(v);
    std::sort(fam.begin(), fam.end());
    return fam;
}

MarkovGraph moralize(const BayesianNetwork& net, const std::vector<std::vector<VarId>>& forced) {
    MarkovGraph g;
    for (auto v : net.variables()) g.add_vertex(v, net.name(v));
    for (auto v : net.variables()) {
        const auto fam = family_of(net, v);
        for (std::size_t i = 0; i < fam.size(); ++i)
            for (std::size_t j = i + 1; j < fam.size(); ++j) g.add_edge(fam[i], fam[j]);
    }
    for (const auto& set : forced) {
        for (auto v : set)
            if (!net.contains(v)) throw UnknownVariable("forced set names unknown variable " + std::to_string(v));
        for (std::size_t i = 0; i < set.size(); ++i)
            for (std::size_t j = i + 1; j < set.size(); ++j) g.add_edge(set[i], set[j]);
    }
    return g;
}

Triangulation triangulate(const MarkovGraph& g) {
    Triangulation t{g, {}};
    std::map<VarId, std::set<VarId>> work;
    for (auto v : g.vertices()) work[v] = g.neighbors(v);

    while (!work.empty()) {
        std::optional<VarId> best;
        std::size_t best_fill = 0;
        for (const auto& [v, ns] : work) {
            std::size_t fill = 0;
            for (auto a = ns.begin(); a != ns.end(); ++a)
                for (auto b = std::next(a); b != ns.end(); ++b)
                    if (!work.at(*a).count(*b)) ++fill;
            if (!best || fill < best_fill || (fill == best_fill && g.label(v) < g.label(*best))) {
                best = v;
                best_fill = fill;
            }
        }
        const VarId v = *best;
        const auto ns = work.at(v);
        for (auto a = ns.begin(); a != ns.end(); ++a)
            for (auto b = std::next(a); b != ns.end(); ++b) {
                if (!work.at(*a).count(*b)) {
                    work[*a].insert(*b);
                    work[*b].insert(*a);
                    t.chordal.add_edge(*a, *b);
                }
            }
        for (auto n : ns) work[n].erase(v);
        work.erase(v);
        t.order.push_back(v);
    }
    return t;
}

namespace {

bool pairwise_adjacent(const MarkovGraph& g, const std::vector<VarId>& vs) {
    for (std::size_t i = 0; i < vs.size(); ++i)
        for (std::size_t j = i + 1; j < vs.size(); ++j)
            if (!g.has_edge(vs[i], vs[j])) return false;
    return true;
}

// Visit order of maximum cardinality search; ties to the smallest id.
std::vector<VarId> mcs_order(const MarkovGraph& g) {
    std::map<VarId, int> weight;
    for (auto v : g.vertices()) weight[v] = 0;
    std::vector<VarId> order;
    while (!weight.empty()) {
        auto best = weight.begin();
        for (auto it = weight.begin(); it != weight.end(); ++it)
            if (it->second > best->second) best = it;
        const VarId v = best->first;
        weight.erase(best);
        order.push_back(v);
        for (auto n : g.neighbors(v)) {
            auto it = weight.find(n);
            if (it != weight.end()) ++it->second;
        }
    }
    return order;
}

std::vector<std::vector<VarId>> peo_cliques(const MarkovGraph& g, const std::vector<VarId>& order) {
    std::map<VarId, std::size_t> pos;
    for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
    std::vector<std::vector<VarId>> candidates;
    for (std::size_t i = 0; i < order.size(); ++i) {
        std::vector<VarId> c{order[i]};
        for (auto n : g.neighbors(order[i]))
            if (pos.at(n) > i) c.push_back(n);
        std::vector<VarId> later(c.begin() + 1, c.end());
        if (!pairwise_adjacent(g, later))
            throw GraphError("elimination order is not perfect at vertex '" + g.label(order[i]) + "'");
        std::sort(c.begin(), c.end());
        candidates.push_back(std::move(c));
    }
    std::vector<std::vector<VarId>> out;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < candidates.size() && !dominated; ++j) {
            if (i == j) continue;
            const bool subset = std::includes(candidates[j].begin(), candidates[j].end(), candidates[i].begin(),
                                              candidates[i].end());
            if (subset && (candidates[j].size() > candidates[i].size() || j < i)) dominated = true;
        }
        if (!dominated) out.push_back(candidates[i]);
    }
    return out;
}

std::vector<VarId> intersect(const std::vector<VarId>& a, const std::vector<VarId>& b) {
    std::vector<VarId> out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

bool contains_all(const std::vector<VarId>& sorted_set, const std::vector<VarId>& sorted_sub) {
    return std::includes(sorted_set.begin(), sorted_set.end(), sorted_sub.begin(), sorted_sub.end());
}

struct DisjointSets {
    std::vector<std::size_t> parent;
    explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) { return parent[x] == x ? x : parent[x] = find(parent[x]); }
    bool unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[b] = a;
        return true;
    }
};

bool is_tree(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
    if (n == 0) return edges.empty();
    if (edges.size() != n - 1) return false;
    DisjointSets ds(n);
    for (auto [a, b] : edges)
        if (a >= n || b >= n || !ds.unite(a, b)) return false;
    return true;
}

// Variables whose containing cliques do not induce a connected subtree.
std::vector<VarId> rip_failures(const std::vector<std::vector<VarId>>& cliques,
                                const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
    std::set<VarId> all;
    for (const auto& c : cliques) all.insert(c.begin(), c.end());
    std::vector<VarId> bad;
    for (auto v : all) {
        std::vector<std::size_t> holders;
        for (std::size_t i = 0; i < cliques.size(); ++i)
            if (std::binary_search(cliques[i].begin(), cliques[i].end(), v)) holders.push_back(i);
        DisjointSets ds(cliques.size());
        std::size_t joins = 0;
        for (auto [a, b] : edges) {
            const bool ia = std::binary_search(cliques[a].begin(), cliques[a].end(), v);
            const bool ib = std::binary_search(cliques[b].begin(), cliques[b].end(), v);
            if (ia && ib && ds.unite(a, b)) ++joins;
        }
        if (joins + 1 != holders.size()) bad.push_back(v);
    }
    return bad;
}

std::string names_of(const BayesianNetwork& net, const std::vector<VarId>& vs) {
    std::vector<std::string> names;
    for (auto v : vs) names.push_back(net.contains(v) ? net.name(v) : std::to_string(v));
    std::sort(names.begin(), names.end());
    return "{" + fmt::format("{}", fmt::join(names, ", ")) + "}";
}

std::vector<std::string> signature(const BayesianNetwork& net, const std::vector<VarId>& members) {
    std::vector<std::string> s;
    for (auto v : members) s.push_back(net.name(v));
    std::sort(s.begin(), s.end());
    return s;
}

}  // namespace

bool verify_chordal(const MarkovGraph& g) {
    auto order = mcs_order(g);
    std::map<VarId, std::size_t> visited;
    for (std::size_t i = 0; i < order.size(); ++i) visited[order[i]] = i;
    for (std::size_t i = 0; i < order.size(); ++i) {
        std::vector<VarId> earlier;
        for (auto n : g.neighbors(order[i]))
            if (visited.at(n) < i) earlier.push_back(n);
        if (!pairwise_adjacent(g, earlier)) return false;
    }
    return true;
}

std::vector<VarId> JoinTree::separator(std::size_t edge) const {
    const auto [a, b] = edges.at(edge);
    return intersect(cliques[a], cliques[b]);
}

JoinTree extract_cliques_and_assemble(const MarkovGraph& chordal, const std::vector<VarId>& order) {
    if (order.size() != chordal.vertices().size()) throw GraphError("elimination order does not cover the graph");
    JoinTree jt;
    jt.cliques = peo_cliques(chordal, order);

    struct Candidate {
        std::size_t weight, a, b;
    };
    std::vector<Candidate> cands;
    for (std::size_t i = 0; i < jt.cliques.size(); ++i)
        for (std::size_t j = i + 1; j < jt.cliques.size(); ++j)
            cands.push_back({intersect(jt.cliques[i], jt.cliques[j]).size(), i, j});
    std::stable_sort(cands.begin(), cands.end(), [](const Candidate& x, const Candidate& y) { return x.weight > y.weight; });
    DisjointSets ds(jt.cliques.size());
    for (const auto& c : cands)
        if (ds.unite(c.a, c.b)) jt.edges.emplace_back(c.a, c.b);
    return jt;
}

void assign_families(JoinTree& jt, const BayesianNetwork& net) {
    jt.clique_assignment.clear();
    for (auto v : net.variables()) {
        const auto fam = family_of(net, v);
        std::optional<std::size_t> best;
        for (std::size_t i = 0; i < jt.cliques.size(); ++i)
            if (contains_all(jt.cliques[i], fam) && (!best || jt.cliques[i].size() < jt.cliques[*best].size()))
                best = i;
        if (best) jt.clique_assignment[v] = *best;
    }
}

std::vector<std::string> verify_join_tree(const JoinTree& jt, const BayesianNetwork& net) {
    std::vector<std::string> report;
    if (!is_tree(jt.cliques.size(), jt.edges)) report.push_back("edges do not form a tree over the cliques");
    for (auto v : net.variables()) {
        const auto fam = family_of(net, v);
        const bool covered = std::any_of(jt.cliques.begin(), jt.cliques.end(),
                                         [&](const auto& c) { return contains_all(c, fam); });
        if (!covered) report.push_back("family of '" + net.name(v) + "' is not contained in any clique");
    }
    for (auto v : rip_failures(jt.cliques, jt.edges))
        report.push_back("running intersection fails for '" + (net.contains(v) ? net.name(v) : std::to_string(v)) + "'");
    return report;
}

JoinTree build_join_tree(const BayesianNetwork& net, const std::vector<std::vector<VarId>>& forced) {
    auto t = triangulate(moralize(net, forced));
    if (!verify_chordal(t.chordal)) throw VerificationError("triangulation produced a non-chordal graph");
    auto jt = extract_cliques_and_assemble(t.chordal, t.order);
    assign_families(jt, net);
    return jt;
}

// ---------------------------------------------------------------------------

std::vector<std::vector<std::pair<std::size_t, std::size_t>>> CompositeJoinTree::adjacency() const {
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(cliques.size());
    for (std::size_t e = 0; e < edges.size(); ++e) {
        adj[edges[e].a].emplace_back(edges[e].b, e);
        adj[edges[e].b].emplace_back(edges[e].a, e);
    }
    return adj;
}

const CompositeLink* CompositeJoinTree::link_of(const std::string& level) const {
    for (const auto& l : links)
        if (l.level == level) return &l;
    return nullptr;
}

namespace {

BayesianNetwork level_network(const BayesianNetwork& net, const TranslationIndex& idx, const std::string& level) {
    BayesianNetwork compiled = compile_level(net, idx, level);
    if (level == kTopLevel) return compiled;
    const auto& info = idx.refinements.at(level);
    std::vector<VarId> keep = info.interface();
    for (auto v : compiled.variables())
        if (idx.owner_level.at(v) == level) keep.push_back(v);
    return compiled.induced(keep, info.inputs);
}

std::optional<std::size_t> smallest_containing(const CompositeJoinTree& cjt, const BayesianNetwork& net,
                                               const std::vector<std::size_t>& pool, std::vector<VarId> needed) {
    std::sort(needed.begin(), needed.end());
    std::optional<std::size_t> best;
    for (auto c : pool) {
        const auto& m = cjt.cliques[c].members;
        if (!contains_all(m, needed)) continue;
        if (!best || m.size() < cjt.cliques[*best].members.size() ||
            (m.size() == cjt.cliques[*best].members.size() &&
             signature(net, m) < signature(net, cjt.cliques[*best].members)))
            best = c;
    }
    return best;
}

}  // namespace

CompositeJoinTree build_composite(const BayesianNetwork& net, const TranslationIndex& idx,
                                  const CompositeOptions& options) {
    CompositeJoinTree cjt;
    for (const auto& level : idx.levels) {
        LevelView view;
        view.id = level;
        view.net = level_network(net, idx, level);
        if (level != kTopLevel) view.forced.push_back(idx.refinements.at(level).interface());
        for (const auto& [path, info] : idx.refinements)
            if (info.parent_level == level) view.forced.push_back(info.interface());
        view.tree = build_join_tree(view.net, view.forced);
        const auto local = verify_join_tree(view.tree, view.net);
        if (!local.empty()) throw VerificationError("level '" + level + "': " + local.front());
        const std::size_t base = cjt.cliques.size();
        for (const auto& c : view.tree.cliques) {
            view.cliques.push_back(cjt.cliques.size());
            cjt.cliques.push_back({c, level});
        }
        for (std::size_t e = 0; e < view.tree.edges.size(); ++e) {
            const auto [a, b] = view.tree.edges[e];
            cjt.edges.push_back({base + a, base + b, view.tree.separator(e), false});
        }
        cjt.levels.emplace(level, std::move(view));
    }

    for (const auto& level : idx.levels) {
        if (level == kTopLevel) continue;
        const auto& info = idx.refinements.at(level);
        const auto iface = info.interface();
        auto upper = smallest_containing(cjt, net, cjt.levels.at(info.parent_level).cliques, iface);
        auto lower = smallest_containing(cjt, net, cjt.levels.at(level).cliques, iface);
        if (!upper || !lower) throw VerificationError("interface of '" + level + "' is not present at both levels");
        CompositeLink link{level, *upper, *lower, iface, cjt.edges.size()};
        std::sort(link.interface.begin(), link.interface.end());
        cjt.edges.push_back({*upper, *lower, intersect(cjt.cliques[*upper].members, cjt.cliques[*lower].members), true});
        cjt.links.push_back(std::move(link));
    }

    for (auto v : net.variables()) {
        const auto& fam_level = idx.family_level.at(v);
        auto host = smallest_containing(cjt, net, cjt.levels.at(fam_level).cliques, family_of(net, v));
        if (!host) throw VerificationError("family of '" + net.name(v) + "' is not covered in level '" + fam_level + "'");
        cjt.family_host[v] = *host;
        auto q = smallest_containing(cjt, net, cjt.levels.at(idx.owner_level.at(v)).cliques, {v});
        if (!q) throw VerificationError("'" + net.name(v) + "' is missing from its level");
        cjt.query_host[v] = *q;
    }

    if (options.merge_subsets) cjt = merge_subset_cliques(cjt, net);
    const auto report = verify_composite(cjt, net);
    if (!report.empty()) throw VerificationError("composite join tree invalid: " + report.front());
    return cjt;
}

std::vector<std::string> verify_composite(const CompositeJoinTree& cjt, const BayesianNetwork& net) {
    std::vector<std::string> report;
    std::vector<std::vector<VarId>> cliques;
    for (const auto& c : cjt.cliques) cliques.push_back(c.members);
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (const auto& e : cjt.edges) {
        edges.emplace_back(e.a, e.b);
        if (e.separator != intersect(cliques[e.a], cliques[e.b]))
            report.push_back(fmt::format("separator of edge {}-{} is not the clique intersection", e.a, e.b));
    }
    if (!is_tree(cliques.size(), edges)) report.push_back("union structure is not a tree");

    for (const auto& l : cjt.links)
        if (!contains_all(cliques[l.upper], l.interface) || !contains_all(cliques[l.lower], l.interface))
            report.push_back("link of '" + l.level + "' does not carry its interface");

    for (auto v : net.variables()) {
        const auto fam = family_of(net, v);
        auto it = cjt.family_host.find(v);
        if (it == cjt.family_host.end() || !contains_all(cliques[it->second], fam))
            report.push_back("family of '" + net.name(v) + "' is not hosted by a covering clique");
    }
    for (auto v : rip_failures(cliques, edges))
        report.push_back("running intersection fails on the union structure for '" + net.name(v) + "'");

    MarkovGraph g;
    for (auto v : net.variables()) g.add_vertex(v, net.name(v));
    for (const auto& c : cliques)
        for (std::size_t i = 0; i < c.size(); ++i)
            for (std::size_t j = i + 1; j < c.size(); ++j) g.add_edge(c[i], c[j]);
    if (!verify_chordal(g)) {
        report.push_back("union clique graph is not chordal");
        return report;
    }
    const auto moral = moralize(net);
    for (auto a : moral.vertices())
        for (auto b : moral.neighbors(a))
            if (a < b && !g.has_edge(a, b))
                report.push_back("union clique graph misses moral edge " + net.name(a) + " - " + net.name(b));

    auto order = mcs_order(g);
    std::reverse(order.begin(), order.end());
    for (const auto& mc : peo_cliques(g, order))
        if (std::find(cliques.begin(), cliques.end(), mc) == cliques.end())
            report.push_back("maximal clique " + names_of(net, mc) + " is not a vertex of the union structure");
    if (cjt.merged) {
        for (std::size_t i = 0; i < cliques.size(); ++i)
            for (std::size_t j = 0; j < cliques.size(); ++j)
                if (i != j && contains_all(cliques[j], cliques[i]))
                    report.push_back("vertex " + names_of(net, cliques[i]) + " is not maximal after merging");
    }
    return report;
}

CompositeJoinTree merge_subset_cliques(const CompositeJoinTree& in, const BayesianNetwork& net) {
    (void)net;
    CompositeJoinTree cjt = in;
    constexpr auto kGone = static_cast<std::size_t>(-1);
    for (;;) {
        std::optional<std::size_t> hit;
        for (std::size_t e = 0; e < cjt.edges.size() && !hit; ++e) {
            const auto& ma = cjt.cliques[cjt.edges[e].a].members;
            const auto& mb = cjt.cliques[cjt.edges[e].b].members;
            if (contains_all(ma, mb) || contains_all(mb, ma)) hit = e;
        }
        if (!hit) break;
        const auto edge = cjt.edges[*hit];
        const bool a_survives = cjt.cliques[edge.a].members.size() >= cjt.cliques[edge.b].members.size();
        const std::size_t keep = a_survives ? edge.a : edge.b;
        const std::size_t drop = a_survives ? edge.b : edge.a;

        // Index remap: drop disappears, everything above shifts down by one.
        auto remap = [&](std::size_t c) {
            if (c == drop) c = keep;
            return c > drop ? c - 1 : c;
        };
        cjt.edges.erase(cjt.edges.begin() + static_cast<std::ptrdiff_t>(*hit));
        for (auto& l : cjt.links) {
            if (l.edge == *hit) l.edge = kGone;
            else if (l.edge != kGone && l.edge > *hit) --l.edge;
            l.upper = remap(l.upper);
            l.lower = remap(l.lower);
        }
        for (auto& e : cjt.edges) {
            e.a = remap(e.a);
            e.b = remap(e.b);
        }
        for (auto& [_, view] : cjt.levels)
            for (auto& c : view.cliques) c = remap(c);
        for (auto& [_, c] : cjt.family_host) c = remap(c);
        for (auto& [_, c] : cjt.query_host) c = remap(c);
        cjt.cliques.erase(cjt.cliques.begin() + static_cast<std::ptrdiff_t>(drop));
        for (auto& e : cjt.edges) e.separator = intersect(cjt.cliques[e.a].members, cjt.cliques[e.b].members);
    }
    cjt.merged = true;
    return cjt;
}

std::string to_text(const CompositeJoinTree& cjt, const BayesianNetwork& net) {
    std::string out;
    std::vector<std::string> order;
    for (const auto& [id, _] : cjt.levels) order.push_back(id);
    std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
        return (a == kTopLevel) > (b == kTopLevel);
    });
    for (const auto& id : order) {
        out += "level " + id + "\n";
        for (std::size_t c = 0; c < cjt.cliques.size(); ++c)
            if (cjt.cliques[c].level == id) out += fmt::format("  clique {} {}\n", c, names_of(net, cjt.cliques[c].members));
        for (const auto& e : cjt.edges)
            if (!e.link && cjt.cliques[e.a].level == id)
                out += fmt::format("  edge {} - {} sep {}\n", e.a, e.b, names_of(net, e.separator));
    }
    for (const auto& l : cjt.links)
        out += fmt::format("link {} {} - {} {}\n", l.level, l.upper, l.lower, names_of(net, l.interface));
    return out;
}

}  // namespace hierax
