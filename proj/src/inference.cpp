#include "hierax/inference.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "hierax/error.hpp"

namespace hierax {

namespace {

Factor indicator(VarId v, std::size_t card, std::size_t state) {
    Factor f({v}, {card}, 0.0);
    f[state] = 1.0;
    return f;
}

}  // namespace

Session::Session(std::shared_ptr<const Model> model) : model_(std::move(model)) {
    const auto& cjt = model_->composite;
    const auto& net = model_->net();
    if (cjt.merged) throw Error("sessions require a composite tree without subset merging");
    adj_ = cjt.adjacency();
    for (const auto& c : cjt.cliques) {
        std::vector<std::size_t> cards;
        for (auto v : c.members) cards.push_back(net.card(v));
        base_.emplace_back(c.members, cards, 1.0);
    }
    for (const auto& [v, host] : cjt.family_host) base_[host] = multiply(base_[host], net.cpt(v));
    state_.psi = base_;
    state_.msg.resize(2 * cjt.edges.size());
    state_.valid.assign(2 * cjt.edges.size(), false);
    state_.norm.assign(2 * cjt.edges.size(), 1.0);
    for (const auto& [id, _] : cjt.levels) counters_[id] = 0;

    std::vector<std::size_t> all(cjt.cliques.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    if (!pass(all, std::nullopt)) throw VerificationError("model has zero probability without evidence");
    reset_counters();
    snapshot_ = state_;
}

void Session::reset_counters() {
    for (auto& [_, n] : counters_) n = 0;
}

std::size_t Session::slot(std::size_t edge, std::size_t sender) const {
    return 2 * edge + (model_->composite.edges[edge].a == sender ? 0 : 1);
}

std::size_t Session::other(std::size_t edge, std::size_t end) const {
    const auto& e = model_->composite.edges[edge];
    return e.a == end ? e.b : e.a;
}

void Session::ensure(std::size_t edge, std::size_t sender) {
    const auto s = slot(edge, sender);
    if (state_.valid[s]) return;
    Factor prod = state_.psi[sender];
    for (auto [w, e] : adj_[sender]) {
        if (e == edge) continue;
        ensure(e, w);
        prod = multiply(prod, state_.msg[slot(e, w)]);
    }
    const auto& sep = model_->composite.edges[edge].separator;
    std::set<VarId> drop;
    for (auto v : prod.scope())
        if (!std::binary_search(sep.begin(), sep.end(), v)) drop.insert(v);
    Factor m = marginalize(prod, drop);
    const double z = normalize(m);
    if (!(z > 0.0)) throw ImpossibleEvidence("evidence has zero probability");
    state_.msg[s] = std::move(m);
    state_.norm[s] = z;
    state_.valid[s] = true;
    ++counters_[model_->composite.cliques[sender].level];
}

Factor Session::belief(std::size_t clique) const {
    Factor b = state_.psi[clique];
    for (auto [w, e] : adj_[clique]) b = multiply(b, state_.msg[slot(e, w)]);
    return b;
}

bool Session::incoming_valid(std::size_t clique) const {
    return std::all_of(adj_[clique].begin(), adj_[clique].end(),
                       [&](const auto& we) { return state_.valid[slot(we.second, we.first)]; });
}

void Session::invalidate_away(std::size_t from, std::optional<std::size_t> through_edge) {
    std::vector<std::pair<std::size_t, std::size_t>> stack;  // (clique, arrived-by edge)
    if (through_edge) {
        state_.valid[slot(*through_edge, from)] = false;
        stack.emplace_back(other(*through_edge, from), *through_edge);
    } else {
        stack.emplace_back(from, static_cast<std::size_t>(-1));
    }
    while (!stack.empty()) {
        auto [u, in] = stack.back();
        stack.pop_back();
        for (auto [w, e] : adj_[u]) {
            if (e == in) continue;
            state_.valid[slot(e, u)] = false;
            stack.emplace_back(w, e);
        }
    }
}

void Session::sync_evidence() {
    const auto& net = model_->net();
    const auto& hosts = model_->composite.query_host;
    std::map<VarId, std::size_t> want;
    for (const auto& [name, label] : evidence_) {
        const VarId v = net.id(name);
        want[v] = *net.states(v).index_of(label);
    }
    std::set<std::size_t> changed;
    for (const auto& [v, s] : want) {
        auto it = state_.applied.find(v);
        if (it == state_.applied.end() || it->second != s) changed.insert(hosts.at(v));
    }
    for (const auto& [v, _] : state_.applied)
        if (!want.count(v)) changed.insert(hosts.at(v));
    for (auto h : changed) {
        state_.psi[h] = base_[h];
        for (const auto& [v, s] : want)
            if (hosts.at(v) == h) state_.psi[h] = multiply(state_.psi[h], indicator(v, net.card(v), s));
        invalidate_away(h);
    }
    state_.applied = std::move(want);
}

bool Session::level_visible(const std::string& level) const {
    return level == kTopLevel || expanded_.count(level) > 0;
}

bool Session::visible(VarId v) const { return level_visible(model_->index().owner_level.at(v)); }

void Session::assert_evidence(const std::string& var, const std::string& state) {
    const auto& net = model_->net();
    const VarId v = net.id(var);
    if (!net.states(v).index_of(state)) throw UnknownState("variable '" + var + "' has no state '" + state + "'");
    if (!visible(v)) throw HiddenVariable("'" + var + "' is hidden; expand its component first");
    evidence_[var] = state;
    sync_evidence();
    dirty_.insert(model_->index().owner_level.at(v));
}

void Session::retract(const std::string& var) {
    const VarId v = model_->net().id(var);
    if (!visible(v)) throw HiddenVariable("'" + var + "' is hidden; expand its component first");
    if (!evidence_.erase(var)) return;
    sync_evidence();
    dirty_.insert(model_->index().owner_level.at(v));
}

std::vector<std::size_t> Session::scope_cliques(const Scope& scope) const {
    const auto levels = scope_levels(scope);
    std::vector<std::size_t> out;
    const auto& cliques = model_->composite.cliques;
    for (std::size_t c = 0; c < cliques.size(); ++c)
        if (levels.count(cliques[c].level)) out.push_back(c);
    return out;
}

std::set<std::string> Session::scope_levels(const Scope& scope) const {
    std::set<std::string> out;
    for (const auto& [id, _] : model_->composite.levels) {
        switch (scope.kind) {
            case Scope::Kind::Global: out.insert(id); break;
            case Scope::Kind::Visible:
                if (level_visible(id)) out.insert(id);
                break;
            case Scope::Kind::Level:
                if (id == scope.level) out.insert(id);
                break;
        }
    }
    if (scope.kind == Scope::Kind::Level && out.empty()) throw Error("unknown level '" + scope.level + "'");
    return out;
}

bool Session::pass(const std::vector<std::size_t>& cliques, std::optional<std::pair<std::size_t, std::size_t>> first) {
    if (cliques.empty()) return true;
    const std::set<std::size_t> in(cliques.begin(), cliques.end());
    try {
        std::size_t root = cliques.front();
        if (first) {
            ensure(first->first, first->second);
            root = other(first->first, first->second);
        }
        // Parent-before-child order over the in-scope part of the tree.
        std::vector<std::pair<std::size_t, std::size_t>> order;  // (clique, edge to parent)
        std::vector<std::pair<std::size_t, std::size_t>> stack{{root, static_cast<std::size_t>(-1)}};
        while (!stack.empty()) {
            auto [u, up] = stack.back();
            stack.pop_back();
            order.emplace_back(u, up);
            for (auto [w, e] : adj_[u])
                if (e != up && in.count(w)) stack.emplace_back(w, e);
        }
        for (auto it = order.rbegin(); it != order.rend(); ++it)
            if (it->second != static_cast<std::size_t>(-1)) ensure(it->second, it->first);
        for (const auto& [u, up] : order)
            if (up != static_cast<std::size_t>(-1)) ensure(up, other(up, u));
        if (!(belief(root).sum() > 0.0)) throw ImpossibleEvidence("evidence has zero probability");
    } catch (const ImpossibleEvidence&) {
        return false;
    }
    return true;
}

bool Session::propagate(const Scope& scope) {
    sync_evidence();
    const auto levels = scope_levels(scope);
    if (!pass(scope_cliques(scope), std::nullopt)) {
        state_ = snapshot_;
        impossible_ = true;
        return false;
    }
    impossible_ = false;
    for (const auto& l : levels) dirty_.erase(l);
    snapshot_ = state_;
    return true;
}

bool Session::expand(const std::string& path) {
    const auto& idx = model_->index();
    if (!idx.refinements.count(path)) throw Error("component '" + path + "' has no refinement");
    if (expanded_.count(path)) return false;
    if (!level_visible(idx.parent_of(path))) throw HiddenVariable("expand '" + idx.parent_of(path) + "' first");
    sync_evidence();
    expanded_.insert(path);
    const auto* link = model_->composite.link_of(path);
    if (!pass(scope_cliques(Scope::at(path)), std::make_pair(link->edge, link->upper))) {
        state_ = snapshot_;
        impossible_ = true;
        return true;
    }
    dirty_.erase(path);
    snapshot_ = state_;
    return true;
}

bool Session::collapse(const std::string& path) {
    if (!expanded_.count(path)) return false;
    const auto& idx = model_->index();
    expanded_.erase(path);
    for (const auto& d : idx.descendants(path)) expanded_.erase(d);
    const auto* link = model_->composite.link_of(path);
    invalidate_away(link->upper, link->edge);
    snapshot_ = state_;
    return true;
}

std::vector<double> Session::posterior_from(VarId v, std::size_t clique) const {
    if (!incoming_valid(clique)) throw DirtyScope("scope is not calibrated; propagate first");
    Factor m = project(belief(clique), {v});
    normalize(m);
    return m.values();
}

std::vector<double> Session::posterior(const std::string& var) const {
    const VarId v = model_->net().id(var);
    if (!visible(v)) throw HiddenVariable("'" + var + "' is hidden; expand its component first");
    if (impossible_) throw ImpossibleEvidence("evidence has zero probability");
    if (dirty(model_->index().owner_level.at(v))) throw DirtyScope("scope is not calibrated; propagate first");
    return posterior_from(v, model_->composite.query_host.at(v));
}

VariablePosterior Session::report_entry(VarId v) const {
    const auto& net = model_->net();
    VariablePosterior p;
    p.name = net.name(v);
    p.level = model_->index().owner_level.at(v);
    p.states = net.states(v).labels();
    p.probabilities = posterior(p.name);
    p.p_ok = p.probabilities[net.states(v).ok_index()];
    return p;
}

PosteriorReport Session::diagnose() const {
    PosteriorReport r;
    r.impossible = impossible_;
    if (impossible_) return r;
    const auto& net = model_->net();
    std::set<VarId> modes;
    for (const auto& [_, m] : model_->index().mode_of_component) modes.insert(m);
    std::vector<std::pair<std::string, VarId>> names;
    for (auto v : net.variables())
        if (visible(v)) names.emplace_back(net.name(v), v);
    std::sort(names.begin(), names.end());
    for (const auto& [_, v] : names) {
        r.variables.push_back(report_entry(v));
        if (modes.count(v)) r.modes.push_back(r.variables.back());
    }
    std::stable_sort(r.modes.begin(), r.modes.end(),
                     [](const auto& a, const auto& b) { return a.p_ok < b.p_ok; });
    r.evidence_probability = evidence_probability();
    return r;
}

std::optional<double> Session::evidence_probability() const {
    if (impossible_ || model_->composite.cliques.empty()) return std::nullopt;
    std::function<std::optional<double>(std::size_t, std::size_t)> scale = [&](std::size_t edge,
                                                                              std::size_t sender) -> std::optional<double> {
        const auto s = slot(edge, sender);
        if (!state_.valid[s]) return std::nullopt;
        double z = state_.norm[s];
        for (auto [w, e] : adj_[sender]) {
            if (e == edge) continue;
            auto inner = scale(e, w);
            if (!inner) return std::nullopt;
            z *= *inner;
        }
        return z;
    };
    double total = 1.0;
    for (auto [w, e] : adj_[0]) {
        auto z = scale(e, w);
        if (!z) return std::nullopt;
        total *= *z;
    }
    return total * belief(0).sum();
}

double Session::separator_inconsistency(const Scope& scope) const {
    const auto cl = scope_cliques(scope);
    const std::set<std::size_t> in(cl.begin(), cl.end());
    double worst = 0.0;
    const auto& edges = model_->composite.edges;
    for (const auto& e : edges) {
        if (!in.count(e.a) || !in.count(e.b)) continue;
        const std::set<VarId> sep(e.separator.begin(), e.separator.end());
        Factor ma = project(belief(e.a), sep);
        Factor mb = project(belief(e.b), sep);
        normalize(ma);
        normalize(mb);
        worst = std::max(worst, max_abs_diff(ma, mb));
    }
    return worst;
}

std::vector<Factor> Session::messages() const { return state_.msg; }

}  // namespace hierax
