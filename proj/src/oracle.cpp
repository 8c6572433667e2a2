#include "hierax/oracle.hpp"

#include <set>

#include "hierax/error.hpp"

namespace hierax {

namespace {

struct JointPlan {
    std::vector<VarId> scope;
    std::vector<std::size_t> cards;
    // For each variable: the CPT values and, per CPT dimension, the joint position and stride.
    struct Term {
        const double* cpt;
        std::vector<std::pair<std::size_t, std::size_t>> dims;  // (joint position, cpt stride)
    };
    std::vector<Term> terms;
    std::size_t cells = 1;
};

JointPlan plan_joint(const BayesianNetwork& net) {
    JointPlan plan;
    plan.scope = net.variables();
    std::map<VarId, std::size_t> pos;
    for (std::size_t i = 0; i < plan.scope.size(); ++i) {
        const auto card = net.card(plan.scope[i]);
        if (plan.cells > kMaxJointCells / card)
            throw TooLarge("network is too large for enumeration (more than 2^24 joint cells)");
        plan.cells *= card;
        plan.cards.push_back(card);
        pos[plan.scope[i]] = i;
    }
    for (auto v : plan.scope) {
        if (!net.has_cpt(v)) throw Error("variable '" + net.name(v) + "' has no CPT");
        const auto& cpt = net.cpt(v);
        JointPlan::Term term{cpt.values().data(), {}};
        std::size_t stride = 1;
        for (std::size_t d = cpt.scope().size(); d-- > 0;) {
            term.dims.emplace_back(pos.at(cpt.scope()[d]), stride);
            stride *= cpt.cards()[d];
        }
        plan.terms.push_back(std::move(term));
    }
    return plan;
}

inline double joint_cell(const JointPlan& plan, std::size_t flat, std::vector<std::size_t>& idx) {
    for (std::size_t d = plan.cards.size(); d-- > 0;) {
        idx[d] = flat % plan.cards[d];
        flat /= plan.cards[d];
    }
    double p = 1.0;
    for (const auto& term : plan.terms) {
        std::size_t off = 0;
        for (auto [jp, stride] : term.dims) off += idx[jp] * stride;
        p *= term.cpt[off];
        if (p == 0.0) break;
    }
    return p;
}

}  // namespace

namespace kernels {

Factor joint_serial(const BayesianNetwork& net) {
    const auto plan = plan_joint(net);
    Factor out(plan.scope, plan.cards);
    std::vector<std::size_t> idx(plan.cards.size());
    for (std::size_t i = 0; i < plan.cells; ++i) out[i] = joint_cell(plan, i, idx);
    return out;
}

Factor joint_parallel(const BayesianNetwork& net, std::size_t threshold) {
    const auto plan = plan_joint(net);
    Factor out(plan.scope, plan.cards);
    double* ov = out.values().data();
    const auto n = static_cast<std::ptrdiff_t>(plan.cells);
#pragma omp parallel if (plan.cells >= threshold)
    {
        std::vector<std::size_t> idx(plan.cards.size());
#pragma omp for schedule(static)
        for (std::ptrdiff_t i = 0; i < n; ++i) ov[i] = joint_cell(plan, static_cast<std::size_t>(i), idx);
    }
    return out;
}

}  // namespace kernels

VarId JointTable::var(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return table.scope()[i];
    throw UnknownVariable("unknown variable '" + name + "'");
}

JointTable enumerate_joint(const BayesianNetwork& net) {
    JointTable j{kernels::joint_parallel(net), {}, {}};
    for (auto v : j.table.scope()) {
        j.names.push_back(net.name(v));
        j.states.push_back(net.states(v));
    }
    return j;
}

ConditionedMarginals condition_joint(const JointTable& joint, const Observation& obs) {
    Factor t = joint.table;
    for (const auto& [name, label] : obs) {
        const VarId v = joint.var(name);
        const auto pos = t.position(v);
        auto state = joint.states[pos].index_of(label);
        if (!state) throw UnknownState("variable '" + name + "' has no state '" + label + "'");
        t = restrict_to(t, v, *state);
    }
    ConditionedMarginals out;
    out.evidence_probability = normalize(t);
    if (out.evidence_probability <= 0.0) throw ImpossibleEvidence("observation has zero probability");
    for (std::size_t i = 0; i < t.scope().size(); ++i) {
        const auto m = project(t, {t.scope()[i]});
        out.posteriors[joint.names[i]] = m.values();
    }
    return out;
}

Factor marginal_of(const JointTable& joint, const std::vector<VarId>& keep) {
    const auto m = project(joint.table, std::set<VarId>(keep.begin(), keep.end()));
    return m.reordered(keep);
}

}  // namespace hierax
