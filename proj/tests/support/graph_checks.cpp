#include "graph_checks.hpp"

#include <algorithm>

namespace hierax::testing {

namespace {

void bron_kerbosch(const Adjacency& g, std::set<VarId> r, std::set<VarId> p, std::set<VarId> x,
                   std::vector<std::set<VarId>>& out) {
    if (p.empty() && x.empty()) {
        out.push_back(r);
        return;
    }
    for (auto v : std::set<VarId>(p)) {
        std::set<VarId> r2 = r, p2, x2;
        r2.insert(v);
        for (auto n : g.at(v)) {
            if (p.count(n)) p2.insert(n);
            if (x.count(n)) x2.insert(n);
        }
        bron_kerbosch(g, r2, p2, x2, out);
        p.erase(v);
        x.insert(v);
    }
}

}  // namespace

Adjacency union_graph(const CompositeJoinTree& cjt, const BayesianNetwork& net) {
    Adjacency g;
    for (auto v : net.variables()) g[v];
    for (const auto& c : cjt.cliques)
        for (auto a : c.members)
            for (auto b : c.members)
                if (a != b) g[a].insert(b);
    return g;
}

bool chordal_by_elimination(Adjacency g) {
    while (!g.empty()) {
        auto it = std::find_if(g.begin(), g.end(), [&](const auto& kv) {
            for (auto a : kv.second)
                for (auto b : kv.second)
                    if (a < b && !g.at(a).count(b)) return false;
            return true;
        });
        if (it == g.end()) return false;
        for (auto n : it->second) g[n].erase(it->first);
        g.erase(it);
    }
    return true;
}

std::vector<std::set<VarId>> maximal_cliques(const Adjacency& g) {
    std::set<VarId> all;
    for (const auto& [v, _] : g) all.insert(v);
    std::vector<std::set<VarId>> out;
    bron_kerbosch(g, {}, all, {}, out);
    return out;
}

bool contains_moral_graph(const Adjacency& g, const BayesianNetwork& net) {
    for (auto v : net.variables()) {
        const auto& ps = net.parents(v);
        for (std::size_t i = 0; i < ps.size(); ++i) {
            if (!g.at(v).count(ps[i])) return false;
            for (std::size_t j = i + 1; j < ps.size(); ++j)
                if (!g.at(ps[i]).count(ps[j])) return false;
        }
    }
    return true;
}

bool maximal_cliques_are_vertices(const CompositeJoinTree& cjt, const BayesianNetwork& net) {
    std::set<std::set<VarId>> vertices;
    for (const auto& c : cjt.cliques) vertices.insert(std::set<VarId>(c.members.begin(), c.members.end()));
    const auto mcs = maximal_cliques(union_graph(cjt, net));
    return std::all_of(mcs.begin(), mcs.end(), [&](const auto& mc) { return vertices.count(mc) > 0; });
}

}  // namespace hierax::testing
