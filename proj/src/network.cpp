#include "hierax/network.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

#include <fmt/format.h>

#include "hierax/error.hpp"

namespace hierax {

VarId BayesianNetwork::add_variable(const std::string& name, StateSpace states) {
    if (by_name_.count(name)) throw Error("duplicate variable name '" + name + "'");
    const auto id = static_cast<VarId>(nodes_.size());
    Node n{name, std::move(states), {}, Factor(), false};
    nodes_.emplace_back(std::move(n));
    by_name_[name] = id;
    return id;
}

const BayesianNetwork::Node& BayesianNetwork::node(VarId v) const {
    if (v < 0 || static_cast<std::size_t>(v) >= nodes_.size() || !nodes_[v])
        throw UnknownVariable("unknown variable id " + std::to_string(v));
    return *nodes_[v];
}

BayesianNetwork::Node& BayesianNetwork::node(VarId v) {
    return const_cast<Node&>(static_cast<const BayesianNetwork*>(this)->node(v));
}

void BayesianNetwork::set_cpt(VarId v, std::vector<VarId> parents, Factor cpt) {
    auto& n = node(v);
    std::vector<VarId> expected = parents;
    expected.push_back(v);
    if (cpt.scope() != expected) throw Error("CPT scope of '" + n.name + "' must be [parents..., variable]");
    for (std::size_t i = 0; i < expected.size(); ++i)
        if (cpt.cards()[i] != card(expected[i]))
            throw StateSpaceMismatch("CPT of '" + n.name + "' has a wrong cardinality for '" + name(expected[i]) + "'");
    n.parents = std::move(parents);
    n.cpt = std::move(cpt);
    n.has_cpt = true;
}

void BayesianNetwork::set_prior(VarId v, const std::vector<double>& prior) {
    if (prior.size() != card(v)) throw Error("prior length does not match states of '" + name(v) + "'");
    set_cpt(v, {}, Factor({v}, {card(v)}, prior));
}

void BayesianNetwork::remove(VarId v) {
    by_name_.erase(node(v).name);
    nodes_[v].reset();
}

bool BayesianNetwork::contains(VarId v) const {
    return v >= 0 && static_cast<std::size_t>(v) < nodes_.size() && nodes_[v].has_value();
}

std::optional<VarId> BayesianNetwork::find(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) return std::nullopt;
    return it->second;
}

VarId BayesianNetwork::id(const std::string& name) const {
    auto v = find(name);
    if (!v) throw UnknownVariable("unknown variable '" + name + "'");
    return *v;
}

std::vector<VarId> BayesianNetwork::children(VarId v) const {
    node(v);
    std::vector<VarId> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (!nodes_[i]) continue;
        const auto& ps = nodes_[i]->parents;
        if (std::find(ps.begin(), ps.end(), v) != ps.end()) out.push_back(static_cast<VarId>(i));
    }
    return out;
}

std::vector<VarId> BayesianNetwork::variables() const {
    std::vector<VarId> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i]) out.push_back(static_cast<VarId>(i));
    return out;
}

std::size_t BayesianNetwork::size() const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const auto& n) { return n.has_value(); }));
}

bool BayesianNetwork::has_arc(VarId from, VarId to) const {
    const auto& ps = parents(to);
    return std::find(ps.begin(), ps.end(), from) != ps.end();
}

bool BayesianNetwork::has_path(VarId from, VarId to, bool skip_direct_arc) const {
    std::vector<VarId> stack;
    std::set<VarId> seen;
    for (auto c : children(from))
        if (!(skip_direct_arc && c == to)) stack.push_back(c);
    while (!stack.empty()) {
        auto v = stack.back();
        stack.pop_back();
        if (v == to) return true;
        if (!seen.insert(v).second) continue;
        for (auto c : children(v)) stack.push_back(c);
    }
    return false;
}

std::optional<std::vector<VarId>> BayesianNetwork::topological_order() const {
    std::map<VarId, int> indegree;
    std::map<VarId, std::vector<VarId>> succ;
    for (auto v : variables()) {
        indegree[v] += 0;
        for (auto p : parents(v)) {
            ++indegree[v];
            succ[p].push_back(v);
        }
    }
    std::priority_queue<VarId, std::vector<VarId>, std::greater<>> ready;
    for (auto [v, d] : indegree)
        if (d == 0) ready.push(v);
    std::vector<VarId> order;
    while (!ready.empty()) {
        auto v = ready.top();
        ready.pop();
        order.push_back(v);
        for (auto c : succ[v])
            if (--indegree[c] == 0) ready.push(c);
    }
    if (order.size() != indegree.size()) return std::nullopt;
    return order;
}

std::vector<std::string> BayesianNetwork::check(double row_tolerance) const {
    std::vector<std::string> problems;
    if (!topological_order()) problems.push_back("network has a directed cycle");
    for (auto v : variables()) {
        const auto& n = node(v);
        if (!n.has_cpt) {
            problems.push_back("'" + n.name + "' has no CPT");
            continue;
        }
        for (auto p : n.parents)
            if (!contains(p)) problems.push_back("'" + n.name + "' has a removed parent");
        const std::size_t k = n.states.size();
        for (std::size_t row = 0; row * k < n.cpt.size(); ++row) {
            double total = 0.0;
            for (std::size_t s = 0; s < k; ++s) {
                const double p = n.cpt[row * k + s];
                if (p < 0.0) problems.push_back("'" + n.name + "' has a negative CPT entry");
                total += p;
            }
            if (std::abs(total - 1.0) > row_tolerance)
                problems.push_back(fmt::format("'{}' CPT row {} sums to {:.17g}", n.name, row, total));
        }
    }
    return problems;
}

BayesianNetwork BayesianNetwork::induced(const std::vector<VarId>& keep, const std::vector<VarId>& as_roots) const {
    BayesianNetwork out;
    out.nodes_.resize(nodes_.size());
    const std::set<VarId> kept(keep.begin(), keep.end());
    const std::set<VarId> roots(as_roots.begin(), as_roots.end());
    for (auto v : kept) {
        Node n = node(v);
        if (roots.count(v)) {
            n.parents.clear();
            n.cpt = Factor({v}, {n.states.size()}, 1.0 / static_cast<double>(n.states.size()));
            n.has_cpt = true;
        } else {
            for (auto p : n.parents)
                if (!kept.count(p))
                    throw Error("induced network drops parent '" + name(p) + "' of '" + n.name + "'");
        }
        out.by_name_[n.name] = v;
        out.nodes_[v] = std::move(n);
    }
    return out;
}

Factor deterministic_cpt(const std::vector<VarId>& parents, const std::vector<std::size_t>& parent_cards,
                         VarId child, std::size_t child_card, const std::vector<std::size_t>& outcome) {
    std::vector<VarId> scope = parents;
    scope.push_back(child);
    std::vector<std::size_t> cards = parent_cards;
    cards.push_back(child_card);
    Factor f(scope, cards, 0.0);
    if (outcome.size() * child_card != f.size()) throw Error("deterministic CPT outcome has the wrong length");
    for (std::size_t row = 0; row < outcome.size(); ++row) f[row * child_card + outcome[row]] = 1.0;
    return f;
}

std::string to_text(const BayesianNetwork& net) {
    std::string out;
    for (auto v : net.variables()) {
        out += "node " + net.name(v) + "\n";
        out += "  states";
        for (const auto& l : net.states(v).labels()) out += " " + l;
        out += "\n  parents";
        for (auto p : net.parents(v)) out += " " + net.name(p);
        out += "\n  cpt\n";
        const auto k = net.card(v);
        const auto& cpt = net.cpt(v);
        for (std::size_t row = 0; row * k < cpt.size(); ++row) {
            out += "   ";
            for (std::size_t s = 0; s < k; ++s) out += fmt::format(" {:.12g}", cpt[row * k + s]);
            out += "\n";
        }
        out += "end\n";
    }
    return out;
}

}  // namespace hierax
