#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hierax/factor.hpp"
#include "hierax/schematic.hpp"

namespace hierax {

/// Discrete Bayesian network. Variable ids are stable: removing a variable
/// leaves a hole rather than renumbering, so indexes built over a network stay
/// valid for networks derived from it by reversal and absorption.
class BayesianNetwork {
public:
    VarId add_variable(const std::string& name, StateSpace states);

    /// Sets parents and CPT. The CPT scope must be [parents..., v].
    void set_cpt(VarId v, std::vector<VarId> parents, Factor cpt);
    /// Makes v a root with the given prior.
    void set_prior(VarId v, const std::vector<double>& prior);

    void remove(VarId v);

    bool contains(VarId v) const;
    std::optional<VarId> find(const std::string& name) const;
    VarId id(const std::string& name) const;  // throws UnknownVariable

    const std::string& name(VarId v) const { return node(v).name; }
    const StateSpace& states(VarId v) const { return node(v).states; }
    std::size_t card(VarId v) const { return node(v).states.size(); }
    const std::vector<VarId>& parents(VarId v) const { return node(v).parents; }
    const Factor& cpt(VarId v) const { return node(v).cpt; }
    bool has_cpt(VarId v) const { return node(v).has_cpt; }
    std::vector<VarId> children(VarId v) const;

    /// Live variable ids in ascending order.
    std::vector<VarId> variables() const;
    std::size_t size() const;
    std::size_t capacity() const { return nodes_.size(); }

    bool has_arc(VarId from, VarId to) const;
    /// True when a directed path from -> ... -> to exists, optionally ignoring the direct arc.
    bool has_path(VarId from, VarId to, bool skip_direct_arc = false) const;

    /// Topological order, ties broken by ascending id; nullopt when cyclic.
    std::optional<std::vector<VarId>> topological_order() const;

    /// Structural and numeric consistency problems; empty when the network is well formed.
    std::vector<std::string> check(double row_tolerance = 1e-12) const;

    /// Induced sub-network over `keep`. Variables in `as_roots` lose their parents
    /// and get a uniform prior; every other kept variable must have all its
    /// parents kept. Used to materialize per-level structure.
    BayesianNetwork induced(const std::vector<VarId>& keep, const std::vector<VarId>& as_roots) const;

private:
    struct Node {
        std::string name;
        StateSpace states;
        std::vector<VarId> parents;
        Factor cpt;
        bool has_cpt = false;
    };

    const Node& node(VarId v) const;
    Node& node(VarId v);

    std::vector<std::optional<Node>> nodes_;
    std::map<std::string, VarId> by_name_;
};

/// Deterministic CPT: P(child = f(row) | parents) = 1. `outcome[r]` is the child
/// state for parent configuration r (row-major, first parent slowest).
Factor deterministic_cpt(const std::vector<VarId>& parents, const std::vector<std::size_t>& parent_cards,
                         VarId child, std::size_t child_card, const std::vector<std::size_t>& outcome);

/// Textual network dump: one block per node with states, parents and CPT rows.
std::string to_text(const BayesianNetwork& net);

}  // namespace hierax
