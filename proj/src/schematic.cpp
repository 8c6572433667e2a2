#include "hierax/schematic.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>

#include <fmt/format.h>

#include "hierax/error.hpp"

namespace hierax {

std::optional<std::size_t> StateSpace::index_of(const std::string& label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - labels_.begin());
}

std::size_t StateSpace::ok_index() const { return index_of("ok").value_or(0); }

std::size_t StateSpace::broken_index() const {
    if (auto b = index_of("broken")) return *b;
    const std::size_t ok = ok_index();
    return ok == 0 ? 1 : 0;
}

std::optional<std::size_t> ComponentSpec::input_index(const std::string& port) const {
    for (std::size_t i = 0; i < inputs.size(); ++i)
        if (inputs[i].name == port) return i;
    return std::nullopt;
}

std::optional<std::size_t> Schematic::component_index(const std::string& id) const {
    for (std::size_t i = 0; i < components.size(); ++i)
        if (components[i].id == id) return i;
    return std::nullopt;
}

std::optional<std::size_t> Schematic::system_input_index(const std::string& name) const {
    for (std::size_t i = 0; i < system_inputs.size(); ++i)
        if (system_inputs[i].name == name) return i;
    return std::nullopt;
}

std::vector<std::vector<InputSource>> wire(const Schematic& s) {
    std::vector<std::vector<InputSource>> out(s.components.size());
    for (std::size_t c = 0; c < s.components.size(); ++c) {
        const auto& comp = s.components[c];
        out[c].resize(comp.inputs.size());
        for (std::size_t p = 0; p < comp.inputs.size(); ++p) {
            if (auto si = s.system_input_index(comp.inputs[p].name)) {
                out[c][p].kind = InputSource::Kind::SystemInput;
                out[c][p].index = *si;
                out[c][p].drivers = 1;
            }
        }
    }
    for (const auto& conn : s.connections) {
        auto to = s.component_index(conn.to_component);
        if (!to) continue;
        auto port = s.components[*to].input_index(conn.to_port);
        if (!port) continue;
        auto& src = out[*to][*port];
        ++src.drivers;
        auto from = s.component_index(conn.from_component);
        if (from && s.components[*from].output.name == conn.from_port && src.kind == InputSource::Kind::Unbound) {
            src.kind = InputSource::Kind::Component;
            src.index = *from;
        }
    }
    return out;
}

std::optional<std::size_t> resolve_output(const Schematic& s) {
    if (s.output) return s.component_index(*s.output);
    std::vector<std::size_t> sinks;
    for (std::size_t c = 0; c < s.components.size(); ++c) {
        bool consumed = std::any_of(s.connections.begin(), s.connections.end(), [&](const Connection& conn) {
            return conn.from_component == s.components[c].id && conn.from_port == s.components[c].output.name;
        });
        if (!consumed) sinks.push_back(c);
    }
    if (sinks.size() != 1) return std::nullopt;
    return sinks.front();
}

namespace {

std::vector<std::vector<std::size_t>> successor_lists(const Schematic& s) {
    std::vector<std::vector<std::size_t>> succ(s.components.size());
    for (const auto& conn : s.connections) {
        auto from = s.component_index(conn.from_component);
        auto to = s.component_index(conn.to_component);
        if (from && to) succ[*from].push_back(*to);
    }
    return succ;
}

}  // namespace

std::optional<std::vector<std::size_t>> topological_components(const Schematic& s) {
    const auto succ = successor_lists(s);
    std::vector<int> indegree(s.components.size(), 0);
    for (const auto& list : succ)
        for (auto t : list) ++indegree[t];
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
    for (std::size_t c = 0; c < indegree.size(); ++c)
        if (indegree[c] == 0) ready.push(c);
    std::vector<std::size_t> order;
    while (!ready.empty()) {
        auto c = ready.top();
        ready.pop();
        order.push_back(c);
        for (auto t : succ[c])
            if (--indegree[t] == 0) ready.push(t);
    }
    if (order.size() != s.components.size()) return std::nullopt;
    return order;
}

const char* to_string(ViolationKind kind) {
    switch (kind) {
        case ViolationKind::Cycle: return "cycle";
        case ViolationKind::DanglingPort: return "dangling-port";
        case ViolationKind::MultiplyDriven: return "multiply-driven";
        case ViolationKind::StateSpaceMismatch: return "state-space-mismatch";
        case ViolationKind::RefinementInterfaceMismatch: return "refinement-interface-mismatch";
        case ViolationKind::MultiOutput: return "multi-output";
        case ViolationKind::AbstractionNotTotal: return "abstraction-not-total";
        case ViolationKind::TableNotTotal: return "table-not-total";
        case ViolationKind::BadPrior: return "bad-prior";
        case ViolationKind::BadStateSpace: return "bad-state-space";
        case ViolationKind::DuplicateId: return "duplicate-id";
        case ViolationKind::UnknownReference: return "unknown-reference";
        case ViolationKind::TooManySubcomponents: return "too-many-subcomponents";
    }
    return "unknown";
}

std::size_t ValidationReport::count(ViolationKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(violations.begin(), violations.end(), [&](const Violation& v) { return v.kind == kind; }));
}

namespace {

std::string join_path(const std::string& prefix, const std::string& id) {
    return prefix.empty() ? id : prefix + "." + id;
}

class Validator {
public:
    explicit Validator(ValidationReport& report) : report_(report) {}

    void run(const Schematic& s, const std::string& prefix) {
        check_identifiers(s, prefix);
        check_wiring(s, prefix);
        check_cycles(s, prefix);
        for (const auto& comp : s.components) check_component(comp, join_path(prefix, comp.id));
    }

private:
    void add(ViolationKind kind, const std::string& path, std::string message) {
        report_.violations.push_back({kind, path, std::move(message)});
    }

    void check_state_space(const StateSpace& ss, const std::string& path) {
        if (ss.size() < 2) add(ViolationKind::BadStateSpace, path, "state space needs at least two states");
        std::set<std::string> seen(ss.labels().begin(), ss.labels().end());
        if (seen.size() != ss.size()) add(ViolationKind::BadStateSpace, path, "state labels are not distinct");
    }

    void check_prior(const std::vector<double>& prior, const StateSpace& ss, const std::string& path) {
        if (prior.size() != ss.size()) {
            add(ViolationKind::BadPrior, path,
                fmt::format("prior has {} entries for {} states", prior.size(), ss.size()));
            return;
        }
        double total = 0.0;
        for (double p : prior) {
            if (!(p >= 0.0)) {
                add(ViolationKind::BadPrior, path, "prior has a negative or non-numeric entry");
                return;
            }
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-12) add(ViolationKind::BadPrior, path, fmt::format("prior sums to {}", total));
    }

    void check_identifiers(const Schematic& s, const std::string& prefix) {
        std::set<std::string> ids;
        for (const auto& comp : s.components) {
            if (comp.id.empty()) add(ViolationKind::DuplicateId, prefix, "component with empty id");
            if (!ids.insert(comp.id).second)
                add(ViolationKind::DuplicateId, join_path(prefix, comp.id), "duplicate component id");
        }
        std::set<std::string> inputs;
        for (const auto& si : s.system_inputs) {
            const auto path = join_path(prefix, si.name);
            if (!inputs.insert(si.name).second) add(ViolationKind::DuplicateId, path, "duplicate system input");
            check_state_space(si.states, path);
            if (si.prior) check_prior(*si.prior, si.states, path);
        }
        if (s.output && !s.component_index(*s.output))
            add(ViolationKind::UnknownReference, prefix, fmt::format("output names unknown component '{}'", *s.output));
    }

    void check_wiring(const Schematic& s, const std::string& prefix) {
        for (const auto& conn : s.connections) {
            const auto label = fmt::format("{}.{} -> {}.{}", conn.from_component, conn.from_port, conn.to_component,
                                           conn.to_port);
            auto from = s.component_index(conn.from_component);
            auto to = s.component_index(conn.to_component);
            if (!from || s.components[*from].output.name != conn.from_port) {
                add(ViolationKind::UnknownReference, prefix, "connection source is not a component output: " + label);
                continue;
            }
            if (!to || !s.components[*to].input_index(conn.to_port)) {
                add(ViolationKind::UnknownReference, prefix, "connection target is not a component input: " + label);
                continue;
            }
            const auto& src = s.components[*from].output.states;
            const auto& dst = s.components[*to].inputs[*s.components[*to].input_index(conn.to_port)].states;
            if (!(src == dst))
                add(ViolationKind::StateSpaceMismatch, join_path(prefix, conn.to_component + "." + conn.to_port),
                    "connected ports have different state spaces: " + label);
        }
        const auto wiring = wire(s);
        for (std::size_t c = 0; c < s.components.size(); ++c) {
            const auto& comp = s.components[c];
            for (std::size_t p = 0; p < comp.inputs.size(); ++p) {
                const auto path = join_path(prefix, comp.id + "." + comp.inputs[p].name);
                const auto& src = wiring[c][p];
                if (src.drivers == 0) add(ViolationKind::DanglingPort, path, "input is not wired");
                if (src.drivers > 1) add(ViolationKind::MultiplyDriven, path, "input has more than one source");
                if (src.kind == InputSource::Kind::SystemInput &&
                    !(s.system_inputs[src.index].states == comp.inputs[p].states))
                    add(ViolationKind::StateSpaceMismatch, path, "input state space differs from system input");
            }
        }
    }

    void check_cycles(const Schematic& s, const std::string& prefix) {
        // One violation per non-trivial strongly connected component.
        const auto succ = successor_lists(s);
        const std::size_t n = s.components.size();
        std::vector<int> index(n, -1), low(n, 0);
        std::vector<bool> on_stack(n, false);
        std::vector<std::size_t> stack;
        int counter = 0;
        std::function<void(std::size_t)> strong = [&](std::size_t v) {
            index[v] = low[v] = counter++;
            stack.push_back(v);
            on_stack[v] = true;
            for (auto w : succ[v]) {
                if (index[w] < 0) {
                    strong(w);
                    low[v] = std::min(low[v], low[w]);
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
            }
            if (low[v] == index[v]) {
                std::vector<std::string> members;
                std::size_t w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    members.push_back(s.components[w].id);
                } while (w != v);
                const bool self_loop = std::find(succ[v].begin(), succ[v].end(), v) != succ[v].end();
                if (members.size() > 1 || self_loop) {
                    std::sort(members.begin(), members.end());
                    add(ViolationKind::Cycle, prefix, fmt::format("feedback path through {}", fmt::join(members, ", ")));
                }
            }
        };
        for (std::size_t v = 0; v < n; ++v)
            if (index[v] < 0) strong(v);
    }

    void check_component(const ComponentSpec& comp, const std::string& path) {
        if (!comp.extra_outputs.empty())
            add(ViolationKind::MultiOutput, path,
                fmt::format("component declares {} outputs", comp.extra_outputs.size() + 1));
        std::set<std::string> names;
        for (const auto& in : comp.inputs) {
            check_state_space(in.states, path + "." + in.name);
            if (!names.insert(in.name).second) add(ViolationKind::DuplicateId, path + "." + in.name, "duplicate port");
        }
        check_state_space(comp.output.states, path + "." + comp.output.name);
        if (!names.insert(comp.output.name).second)
            add(ViolationKind::DuplicateId, path + "." + comp.output.name, "duplicate port");
        check_state_space(comp.mode.states, path + "." + comp.mode.name);
        if (!names.insert(comp.mode.name).second)
            add(ViolationKind::DuplicateId, path + "." + comp.mode.name, "mode name collides with a port");

        if (comp.is_atomic())
            check_atomic(comp, path);
        else
            check_refinement(comp, path);
    }

    void check_atomic(const ComponentSpec& comp, const std::string& path) {
        const auto& behavior = comp.atomic();
        check_prior(behavior.mode_prior, comp.mode.states, path + "." + comp.mode.name);

        std::vector<const StateSpace*> dims;
        for (const auto& in : comp.inputs) dims.push_back(&in.states);
        dims.push_back(&comp.mode.states);
        std::size_t domain = 1;
        for (auto* d : dims) domain *= std::max<std::size_t>(d->size(), 1);

        std::vector<int> seen(domain, -1);
        for (std::size_t r = 0; r < behavior.function_table.rows.size(); ++r) {
            const auto& row = behavior.function_table.rows[r];
            if (row.size() != dims.size() + 1) {
                add(ViolationKind::TableNotTotal, path, fmt::format("table row {} has {} entries", r, row.size()));
                return;
            }
            std::size_t flat = 0;
            for (std::size_t d = 0; d < dims.size(); ++d) {
                auto idx = dims[d]->index_of(row[d]);
                if (!idx) {
                    add(ViolationKind::TableNotTotal, path, fmt::format("table row {} has unknown state '{}'", r, row[d]));
                    return;
                }
                flat = flat * dims[d]->size() + *idx;
            }
            auto out = comp.output.states.index_of(row.back());
            if (!out) {
                add(ViolationKind::TableNotTotal, path, fmt::format("table row {} has unknown output '{}'", r, row.back()));
                return;
            }
            if (seen[flat] >= 0 && seen[flat] != static_cast<int>(*out)) {
                add(ViolationKind::TableNotTotal, path, fmt::format("table row {} contradicts an earlier row", r));
                return;
            }
            seen[flat] = static_cast<int>(*out);
        }
        auto missing = std::count(seen.begin(), seen.end(), -1);
        if (missing > 0)
            add(ViolationKind::TableNotTotal, path, fmt::format("table misses {} of {} domain tuples", missing, domain));
    }

    void check_refinement(const ComponentSpec& comp, const std::string& path) {
        const auto& ref = comp.refinement();
        if (!ref.sub_schematic) {
            add(ViolationKind::RefinementInterfaceMismatch, path, "refinement has no schematic");
            return;
        }
        const auto& sub = *ref.sub_schematic;
        if (sub.components.size() > kMaxSubcomponents)
            add(ViolationKind::TooManySubcomponents, path,
                fmt::format("{} subcomponents exceed the limit of {}", sub.components.size(), kMaxSubcomponents));
        if (sub.components.empty()) add(ViolationKind::RefinementInterfaceMismatch, path, "refinement is empty");

        // Interface: sub system inputs are exactly the parent's inputs.
        for (const auto& in : comp.inputs) {
            auto si = sub.system_input_index(in.name);
            if (!si)
                add(ViolationKind::RefinementInterfaceMismatch, path,
                    fmt::format("sub-schematic lacks system input '{}'", in.name));
            else if (!(sub.system_inputs[*si].states == in.states))
                add(ViolationKind::RefinementInterfaceMismatch, path,
                    fmt::format("sub-schematic input '{}' has a different state space", in.name));
        }
        for (const auto& si : sub.system_inputs)
            if (!comp.input_index(si.name))
                add(ViolationKind::RefinementInterfaceMismatch, path,
                    fmt::format("sub-schematic input '{}' is not a component input", si.name));
        auto out = resolve_output(sub);
        if (!out)
            add(ViolationKind::RefinementInterfaceMismatch, path, "sub-schematic has no unique system output");
        else if (!(sub.components[*out].output.states == comp.output.states))
            add(ViolationKind::RefinementInterfaceMismatch, path, "sub-schematic output has a different state space");

        run(sub, path);
        check_abstraction(comp, sub, path);
    }

    void check_abstraction(const ComponentSpec& comp, const Schematic& sub, const std::string& path) {
        const auto& parent = comp.mode.states;
        std::vector<bool> reached(parent.size(), false);
        if (std::holds_alternative<AnyBroken>(comp.refinement().abstraction)) {
            if (parent.size() >= 2) {
                reached[parent.ok_index()] = true;
                reached[parent.broken_index()] = true;
            }
        } else {
            const auto& table = std::get<AbstractionTable>(comp.refinement().abstraction);
            std::size_t domain = 1;
            for (const auto& c : sub.components) domain *= std::max<std::size_t>(c.mode.states.size(), 1);
            if (sub.components.size() > kMaxSubcomponents) return;
            std::vector<bool> seen(domain, false);
            std::size_t covered = 0;
            for (std::size_t r = 0; r < table.rows.size(); ++r) {
                const auto& row = table.rows[r];
                if (row.size() != sub.components.size() + 1) {
                    add(ViolationKind::AbstractionNotTotal, path,
                        fmt::format("abstraction row {} has {} entries", r, row.size()));
                    return;
                }
                std::size_t flat = 0;
                for (std::size_t k = 0; k < sub.components.size(); ++k) {
                    const auto& ss = sub.components[k].mode.states;
                    auto idx = ss.index_of(row[k]);
                    if (!idx) {
                        add(ViolationKind::AbstractionNotTotal, path,
                            fmt::format("abstraction row {} has unknown mode '{}'", r, row[k]));
                        return;
                    }
                    flat = flat * ss.size() + *idx;
                }
                auto target = parent.index_of(row.back());
                if (!target) {
                    add(ViolationKind::AbstractionNotTotal, path,
                        fmt::format("abstraction row {} maps to unknown mode '{}'", r, row.back()));
                    return;
                }
                if (seen[flat]) {
                    add(ViolationKind::AbstractionNotTotal, path, fmt::format("abstraction row {} is a duplicate", r));
                    return;
                }
                seen[flat] = true;
                ++covered;
                reached[*target] = true;
            }
            if (covered != domain)
                add(ViolationKind::AbstractionNotTotal, path,
                    fmt::format("abstraction covers {} of {} mode combinations", covered, domain));
        }
        for (std::size_t k = 0; k < parent.size(); ++k)
            if (!reached[k])
                report_.warnings.push_back(
                    fmt::format("{}: mode state '{}' is unreachable from any subcomponent combination", path,
                                parent.label(k)));
    }

    ValidationReport& report_;
};

}  // namespace

ValidationReport validate_schematic(const Schematic& s) {
    ValidationReport report;
    Validator(report).run(s, "");
    return report;
}

// ---------------------------------------------------------------------------

namespace {

struct Flattener {
    Schematic flat;
    std::map<std::string, std::set<std::string>> hierarchy;

    // Adds the components of `s` under `prefix`. `bindings` maps the schematic's
    // system-input names to a source in the flat schematic: either a flat
    // component id (output) or a flat system-input name.
    struct Source {
        bool is_component = false;
        std::string name;
    };

    // Returns the flat id of the component providing each local component's output.
    std::map<std::string, std::string> add(const Schematic& s, const std::string& prefix,
                                           const std::map<std::string, Source>& bindings) {
        std::map<std::string, std::string> provider;  // local id -> flat leaf id providing its output
        const auto order = topological_components(s).value();
        const auto wiring = wire(s);
        // Providers must exist before consumers reference them.
        for (auto c : order) {
            const auto& comp = s.components[c];
            const auto path = join_path(prefix, comp.id);
            std::map<std::string, Source> local;  // port name -> flat source
            for (std::size_t p = 0; p < comp.inputs.size(); ++p) {
                const auto& src = wiring[c][p];
                if (src.kind == InputSource::Kind::SystemInput)
                    local[comp.inputs[p].name] = bindings.at(s.system_inputs[src.index].name);
                else
                    local[comp.inputs[p].name] = Source{true, provider.at(s.components[src.index].id)};
            }
            if (comp.is_atomic()) {
                ComponentSpec leaf = comp;
                leaf.id = path;
                for (const auto& [port, source] : local) {
                    if (source.is_component) {
                        flat.connections.push_back({source.name, output_port(source.name), path, port});
                    } else if (source.name != port) {
                        // Sub-level system input renamed at the parent; route it explicitly.
                        throw ValidationError("flatten: port '" + path + "." + port +
                                              "' would bind to a differently named system input '" + source.name + "'");
                    }
                }
                flat.components.push_back(std::move(leaf));
                provider[comp.id] = path;
            } else {
                const auto& sub = *comp.refinement().sub_schematic;
                std::map<std::string, Source> sub_bindings;
                for (const auto& si : sub.system_inputs) sub_bindings[si.name] = local.at(si.name);
                auto sub_provider = add(sub, path, sub_bindings);
                const auto out = resolve_output(sub).value();
                provider[comp.id] = sub_provider.at(sub.components[out].id);
                std::set<std::string> leaves;
                for (const auto& [id, leaf] : sub_provider) collect_leaves(join_path(path, id), leaves);
                hierarchy[path] = leaves;
            }
        }
        return provider;
    }

    void collect_leaves(const std::string& path, std::set<std::string>& leaves) const {
        if (auto it = hierarchy.find(path); it != hierarchy.end())
            leaves.insert(it->second.begin(), it->second.end());
        else
            leaves.insert(path);
    }

    std::string output_port(const std::string& flat_id) const {
        for (const auto& c : flat.components)
            if (c.id == flat_id) return c.output.name;
        throw Error("flatten: unknown provider " + flat_id);
    }
};

}  // namespace

FlattenResult flatten(const Schematic& s) {
    auto report = validate_schematic(s);
    if (!report.accepted())
        throw ValidationError("flatten requires an accepted schematic: " + report.violations.front().message);
    Flattener f;
    f.flat.system_inputs = s.system_inputs;
    std::map<std::string, Flattener::Source> top;
    for (const auto& si : s.system_inputs) top[si.name] = {false, si.name};
    auto provider = f.add(s, "", top);
    if (s.output) f.flat.output = provider.at(*s.output);
    return {std::move(f.flat), std::move(f.hierarchy)};
}

}  // namespace hierax
