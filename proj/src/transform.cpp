#include "hierax/transform.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "hierax/error.hpp"

namespace hierax {

Factor conditional(const Factor& f, VarId child, const std::vector<VarId>& parents) {
    std::vector<VarId> order = parents;
    order.push_back(child);
    Factor out = f.reordered(order);
    const std::size_t k = out.card(child);
    for (std::size_t row = 0; row * k < out.size(); ++row) {
        double total = 0.0;
        for (std::size_t s = 0; s < k; ++s) total += out[row * k + s];
        for (std::size_t s = 0; s < k; ++s)
            out[row * k + s] = total > 0.0 ? out[row * k + s] / total : 1.0 / static_cast<double>(k);
    }
    return out;
}

namespace {

std::vector<VarId> merged(std::vector<VarId> base, const std::vector<VarId>& extra, const std::set<VarId>& skip) {
    std::erase_if(base, [&](VarId v) { return skip.count(v) > 0; });
    for (auto v : extra)
        if (!skip.count(v) && std::find(base.begin(), base.end(), v) == base.end()) base.push_back(v);
    return base;
}

void clamp(Factor& f) {
    for (auto& p : f.values()) {
        if (std::abs(p) <= kClampTolerance) p = 0.0;
        else if (std::abs(p - 1.0) <= kClampTolerance) p = 1.0;
    }
}

}  // namespace

BayesianNetwork reverse_arc(const BayesianNetwork& net, VarId x, VarId y) {
    if (!net.has_arc(x, y)) throw GraphError("no arc '" + net.name(x) + "' -> '" + net.name(y) + "'");
    if (net.has_path(x, y, true))
        throw GraphError("reversing '" + net.name(x) + "' -> '" + net.name(y) + "' would create a cycle");
    const auto shared = merged(net.parents(y), net.parents(x), {x});
    const Factor joint = multiply(net.cpt(x), net.cpt(y));
    const Factor over_y = marginalize(joint, {x});

    BayesianNetwork out = net;
    out.set_cpt(y, shared, conditional(over_y, y, shared));
    auto x_parents = shared;
    x_parents.push_back(y);
    out.set_cpt(x, x_parents, conditional(joint, x, x_parents));
    return out;
}

BayesianNetwork absorb_node(const BayesianNetwork& net, VarId x) {
    if (!net.contains(x)) throw UnknownVariable("unknown variable id " + std::to_string(x));
    BayesianNetwork out = net;
    const auto kids = net.children(x);
    if (kids.empty()) {
        out.remove(x);
        return out;
    }
    const auto topo = net.topological_order().value();
    std::vector<VarId> ordered;
    for (auto v : topo)
        if (std::find(kids.begin(), kids.end(), v) != kids.end()) ordered.push_back(v);

    Factor acc = net.cpt(x);
    std::vector<VarId> parents = net.parents(x);
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        const VarId c = ordered[i];
        acc = multiply(acc, net.cpt(c));
        parents = merged(parents, net.parents(c), {x, c});
        if (i > 0 && std::find(parents.begin(), parents.end(), ordered[i - 1]) == parents.end())
            parents.push_back(ordered[i - 1]);
        out.set_cpt(c, parents, conditional(marginalize(acc, {x}), c, parents));
    }
    out.remove(x);
    if (!out.topological_order()) throw GraphError("absorbing '" + net.name(x) + "' produced a cycle");
    return out;
}

BayesianNetwork compile_refinement(const BayesianNetwork& net, const TranslationIndex& idx, const std::string& path) {
    auto it = idx.refinements.find(path);
    if (it == idx.refinements.end()) throw Error("'" + path + "' has no refinement");
    const auto& info = it->second;
    BayesianNetwork out = net;
    for (const auto& child : info.children) out = compile_refinement(out, idx, child);

    auto sub_modes = info.sub_modes;
    std::sort(sub_modes.begin(), sub_modes.end(),
              [&](VarId a, VarId b) { return out.name(a) < out.name(b); });
    for (auto m : sub_modes) out = reverse_arc(out, m, info.mode);

    std::set<VarId> remaining;
    for (auto v : info.internal)
        if (out.contains(v)) remaining.insert(v);
    while (!remaining.empty()) {
        std::optional<VarId> pick;
        for (auto v : remaining) {
            const auto kids = out.children(v);
            const bool leaf = std::none_of(kids.begin(), kids.end(), [&](VarId c) { return remaining.count(c) > 0; });
            if (leaf && (!pick || out.name(v) > out.name(*pick))) pick = v;
        }
        if (!pick) throw VerificationError("no absorbable variable left inside '" + path + "'");
        out = absorb_node(out, *pick);
        remaining.erase(*pick);
    }

    if (!out.parents(info.mode).empty())
        throw VerificationError("compiled mode of '" + path + "' is not a root");
    std::vector<VarId> expected = info.inputs;
    expected.push_back(info.mode);
    const auto& got = out.parents(info.output);
    const std::set<VarId> allowed(expected.begin(), expected.end());
    if (!std::all_of(got.begin(), got.end(), [&](VarId p) { return allowed.count(p) > 0; }))
        throw VerificationError("compiled output of '" + path + "' does not have the atomic topology");

    // Inputs the sub-schematic never reads become vacuous parents.
    Factor cpt = out.cpt(info.output);
    for (auto p : expected)
        if (std::find(got.begin(), got.end(), p) == got.end()) cpt = multiply(cpt, Factor({p}, {out.card(p)}, 1.0));
    auto order = expected;
    order.push_back(info.output);
    cpt = cpt.reordered(order);
    clamp(cpt);
    out.set_cpt(info.output, expected, std::move(cpt));
    Factor prior = out.cpt(info.mode);
    clamp(prior);
    out.set_cpt(info.mode, {}, std::move(prior));
    return out;
}

BayesianNetwork compile_level(const BayesianNetwork& net, const TranslationIndex& idx, const std::string& level) {
    BayesianNetwork out = net;
    for (const auto& l : idx.levels)
        if (l != kTopLevel && idx.parent_of(l) == level) out = compile_refinement(out, idx, l);
    return out;
}

}  // namespace hierax
