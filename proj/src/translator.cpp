#include "hierax/translator.hpp"

#include <algorithm>
#include <optional>

#include "hierax/error.hpp"

namespace hierax {

std::vector<VarId> RefinementInfo::interface() const {
    std::vector<VarId> out = inputs;
    out.push_back(mode);
    out.push_back(output);
    return out;
}

const std::string& TranslationIndex::parent_of(const std::string& level) const {
    return refinements.at(level).parent_level;
}

std::vector<std::string> TranslationIndex::descendants(const std::string& level) const {
    std::vector<std::string> out;
    for (const auto& l : levels) {
        if (l == kTopLevel || l == level) continue;
        for (std::string p = parent_of(l);; p = parent_of(p)) {
            if (p == level) {
                out.push_back(l);
                break;
            }
            if (p == kTopLevel) break;
        }
    }
    return out;
}

int TranslationIndex::depth(const std::string& level) const {
    int d = 0;
    for (std::string l = level; l != kTopLevel; l = parent_of(l)) ++d;
    return d;
}

namespace {

std::string join_path(const std::string& prefix, const std::string& id) {
    return prefix.empty() ? id : prefix + "." + id;
}

// Output state index for every (inputs..., mode) configuration, row-major.
std::vector<std::size_t> function_outcomes(const ComponentSpec& c) {
    std::vector<const StateSpace*> dims;
    for (const auto& in : c.inputs) dims.push_back(&in.states);
    dims.push_back(&c.mode.states);
    std::size_t domain = 1;
    for (auto* d : dims) domain *= d->size();
    std::vector<std::optional<std::size_t>> out(domain);
    for (const auto& row : c.atomic().function_table.rows) {
        if (row.size() != dims.size() + 1) throw Error("function table row of '" + c.id + "' has the wrong width");
        std::size_t flat = 0;
        for (std::size_t d = 0; d < dims.size(); ++d) {
            auto idx = dims[d]->index_of(row[d]);
            if (!idx) throw Error("function table of '" + c.id + "' uses unknown state '" + row[d] + "'");
            flat = flat * dims[d]->size() + *idx;
        }
        auto o = c.output.states.index_of(row.back());
        if (!o) throw Error("function table of '" + c.id + "' uses unknown output '" + row.back() + "'");
        out[flat] = *o;
    }
    std::vector<std::size_t> result;
    result.reserve(domain);
    for (const auto& o : out) {
        if (!o) throw Error("function table of '" + c.id + "' is not total");
        result.push_back(*o);
    }
    return result;
}

std::vector<std::size_t> abstraction_outcomes(const ComponentSpec& parent, const Schematic& sub) {
    std::vector<std::size_t> cards;
    for (const auto& c : sub.components) cards.push_back(c.mode.states.size());
    std::size_t domain = 1;
    for (auto k : cards) domain *= k;
    std::vector<std::size_t> out(domain, 0);
    const auto& rule = parent.refinement().abstraction;
    if (std::holds_alternative<AnyBroken>(rule)) {
        const auto ok = parent.mode.states.ok_index();
        const auto broken = parent.mode.states.broken_index();
        for (std::size_t flat = 0; flat < domain; ++flat) {
            std::size_t rest = flat;
            bool all_ok = true;
            for (std::size_t k = cards.size(); k-- > 0;) {
                if (rest % cards[k] != sub.components[k].mode.states.ok_index()) all_ok = false;
                rest /= cards[k];
            }
            out[flat] = all_ok ? ok : broken;
        }
        return out;
    }
    std::vector<bool> seen(domain, false);
    for (const auto& row : std::get<AbstractionTable>(rule).rows) {
        std::size_t flat = 0;
        for (std::size_t k = 0; k < cards.size(); ++k)
            flat = flat * cards[k] + sub.components[k].mode.states.index_of(row[k]).value();
        out[flat] = parent.mode.states.index_of(row.back()).value();
        seen[flat] = true;
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end())
        throw Error("abstraction of '" + parent.id + "' is not total");
    return out;
}

Factor identity_cpt(VarId parent, VarId child, std::size_t card) {
    std::vector<std::size_t> outcome(card);
    for (std::size_t i = 0; i < card; ++i) outcome[i] = i;
    return deterministic_cpt({parent}, {card}, child, card, outcome);
}

std::vector<double> uniform(std::size_t n) { return std::vector<double>(n, 1.0 / static_cast<double>(n)); }

class Builder {
public:
    explicit Builder(const TranslateOptions& options) : options_(options) {}

    Translation run(const Schematic& s) {
        auto& idx = out_.index;
        idx.levels.push_back(kTopLevel);
        std::map<std::string, VarId> bindings;
        for (const auto& si : s.system_inputs) {
            const VarId v = out_.net.add_variable(si.name, si.states);
            out_.net.set_prior(v, si.prior.value_or(uniform(si.states.size())));
            own(v, kTopLevel, kTopLevel);
            bindings[si.name] = v;
            idx.system_inputs.push_back(si.name);
        }
        translate_level(s, "", kTopLevel, bindings, std::nullopt);

        for (auto& [v, level] : idx.owner_level) idx.level_of_var[v] = idx.depth(level);
        for (auto& [path, info] : idx.refinements) {
            for (const auto& [v, level] : idx.owner_level) {
                for (std::string l = level; l != kTopLevel; l = idx.parent_of(l)) {
                    if (l == path) {
                        info.internal.push_back(v);
                        break;
                    }
                }
            }
        }
        return std::move(out_);
    }

private:
    void own(VarId v, const std::string& owner, const std::string& family) {
        out_.index.owner_level[v] = owner;
        out_.index.family_level[v] = family;
    }

    VarId translate_level(const Schematic& s, const std::string& prefix, const std::string& level,
                          const std::map<std::string, VarId>& bindings, std::optional<std::string> output_name) {
        auto& net = out_.net;
        auto& idx = out_.index;
        const auto order = topological_components(s).value();
        const auto wiring = wire(s);
        const auto out_component = resolve_output(s);
        std::map<std::string, VarId> provided;

        for (auto c : order) {
            const auto& comp = s.components[c];
            const auto path = join_path(prefix, comp.id);
            idx.component_level[path] = level;

            std::vector<VarId> inputs;
            for (std::size_t p = 0; p < comp.inputs.size(); ++p) {
                const auto& src = wiring[c][p];
                VarId v;
                if (src.kind == InputSource::Kind::SystemInput) {
                    v = bindings.at(s.system_inputs[src.index].name);
                } else {
                    v = provided.at(s.components[src.index].id);
                    const bool repeated = std::find(inputs.begin(), inputs.end(), v) != inputs.end();
                    if (options_.explicit_input_nodes || repeated) {
                        const VarId node = net.add_variable(path + "." + comp.inputs[p].name, comp.inputs[p].states);
                        net.set_cpt(node, {v}, identity_cpt(v, node, comp.inputs[p].states.size()));
                        own(node, level, level);
                        v = node;
                    }
                }
                inputs.push_back(v);
                idx.var_of_port[{path, comp.inputs[p].name}] = v;
            }

            const std::string out_name = (output_name && out_component && c == *out_component)
                                             ? *output_name
                                             : path + "." + comp.output.name;
            VarId output, mode;
            if (comp.is_atomic()) {
                mode = net.add_variable(path + "." + comp.mode.name, comp.mode.states);
                net.set_prior(mode, comp.atomic().mode_prior);
                own(mode, level, level);
                output = net.add_variable(out_name, comp.output.states);
                std::vector<VarId> parents = inputs;
                parents.push_back(mode);
                std::vector<std::size_t> cards;
                for (auto p : parents) cards.push_back(net.card(p));
                net.set_cpt(output, parents,
                            deterministic_cpt(parents, cards, output, comp.output.states.size(), function_outcomes(comp)));
                own(output, level, level);
            } else {
                const auto& sub = *comp.refinement().sub_schematic;
                if (sub.components.size() > kMaxSubcomponents)
                    throw ValidationError("refinement '" + path + "' exceeds the subcomponent limit");
                idx.levels.push_back(path);
                RefinementInfo info;
                info.path = path;
                info.parent_level = level;
                info.inputs = inputs;
                idx.refinements[path] = info;

                std::map<std::string, VarId> sub_bindings;
                for (const auto& si : sub.system_inputs)
                    sub_bindings[si.name] = inputs.at(comp.input_index(si.name).value());
                output = translate_level(sub, path, path, sub_bindings, out_name);
                idx.owner_level[output] = level;

                mode = net.add_variable(path + "." + comp.mode.name, comp.mode.states);
                std::vector<VarId> sub_modes;
                std::vector<std::size_t> cards;
                auto& ref = idx.refinements[path];
                for (const auto& sc : sub.components) {
                    const auto sub_path = join_path(path, sc.id);
                    sub_modes.push_back(idx.mode_of_component.at(sub_path));
                    cards.push_back(sc.mode.states.size());
                    ref.subcomponents.push_back(sub_path);
                    if (!sc.is_atomic()) ref.children.push_back(sub_path);
                }
                net.set_cpt(mode, sub_modes,
                            deterministic_cpt(sub_modes, cards, mode, comp.mode.states.size(),
                                              abstraction_outcomes(comp, sub)));
                own(mode, level, path);
                ref.output = output;
                ref.mode = mode;
                ref.sub_modes = sub_modes;
            }
            idx.var_of_port[{path, comp.output.name}] = output;
            idx.mode_of_component[path] = mode;
            provided[comp.id] = output;
        }
        return out_component ? provided.at(s.components[*out_component].id) : -1;
    }

    TranslateOptions options_;
    Translation out_;
};

}  // namespace

BayesianNetwork translate_atomic_fragment(const ComponentSpec& c) {
    if (!c.is_atomic()) throw Error("component '" + c.id + "' is not atomic");
    BayesianNetwork net;
    std::vector<VarId> parents;
    for (const auto& in : c.inputs) {
        const VarId v = net.add_variable(c.id + "." + in.name, in.states);
        net.set_prior(v, uniform(in.states.size()));
        parents.push_back(v);
    }
    const VarId mode = net.add_variable(c.id + "." + c.mode.name, c.mode.states);
    net.set_prior(mode, c.atomic().mode_prior);
    parents.push_back(mode);
    const VarId out = net.add_variable(c.id + "." + c.output.name, c.output.states);
    std::vector<std::size_t> cards;
    for (auto p : parents) cards.push_back(net.card(p));
    net.set_cpt(out, parents, deterministic_cpt(parents, cards, out, c.output.states.size(), function_outcomes(c)));
    return net;
}

BayesianNetwork link_equality(const BayesianNetwork& net, VarId upstream_output, VarId downstream_input) {
    if (!(net.states(upstream_output) == net.states(downstream_input)))
        throw StateSpaceMismatch("cannot link '" + net.name(upstream_output) + "' to '" + net.name(downstream_input) +
                                 "': state spaces differ");
    if (!net.parents(downstream_input).empty())
        throw GraphError("'" + net.name(downstream_input) + "' already has a parent");
    BayesianNetwork out = net;
    out.set_cpt(downstream_input, {upstream_output},
                identity_cpt(upstream_output, downstream_input, net.card(downstream_input)));
    if (!out.topological_order()) throw GraphError("equality link would create a cycle");
    return out;
}

Translation translate(const Schematic& s, const TranslateOptions& options) {
    const auto report = validate_schematic(s);
    if (!report.accepted())
        throw ValidationError("schematic is not accepted: " + report.violations.front().message);
    return Builder(options).run(s);
}

}  // namespace hierax
