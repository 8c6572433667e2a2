#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hierax/network.hpp"
#include "hierax/schematic.hpp"

namespace hierax {

// Level id of the top of the hierarchy. Other levels are named by the dot-path
// of the refined component; '<' cannot appear in identifiers.
inline const std::string kTopLevel = "<top>";

struct RefinementInfo {
    std::string path;
    std::string parent_level;
    std::vector<VarId> inputs;  // in port order
    VarId output = -1;
    VarId mode = -1;            // the higher-level mode variable
    std::vector<VarId> sub_modes;  // direct subcomponents, sub-schematic order
    std::vector<std::string> subcomponents;
    std::vector<std::string> children;  // directly nested refinements
    std::vector<VarId> internal;        // every variable strictly inside, any depth

    /// Interface set forced into one clique at both levels: inputs, mode, output.
    std::vector<VarId> interface() const;
};

struct TranslationIndex {
    std::map<std::pair<std::string, std::string>, VarId> var_of_port;  // (component path, port)
    std::map<std::string, VarId> mode_of_component;
    std::map<VarId, int> level_of_var;            // hierarchy depth of the owning level
    std::map<VarId, std::string> owner_level;     // level where the variable is addressable
    std::map<VarId, std::string> family_level;    // level whose network holds its CPT
    std::map<std::string, RefinementInfo> refinements;
    std::vector<std::string> levels;              // parents before children, top first
    std::map<std::string, std::string> component_level;  // component path -> level it sits in
    std::vector<std::string> system_inputs;

    const std::string& parent_of(const std::string& level) const;
    /// Levels strictly below `level`, any depth.
    std::vector<std::string> descendants(const std::string& level) const;
    int depth(const std::string& level) const;
};

struct TranslateOptions {
    // Materialize a node with an identity CPT for every input fed by another
    // component's output, as in the original construction.
    bool explicit_input_nodes = false;
};

struct Translation {
    BayesianNetwork net;
    TranslationIndex index;
};

/// Stand-alone fragment for one atomic component: input roots (uniform), mode
/// root with its prior, and a deterministic output CPT.
BayesianNetwork translate_atomic_fragment(const ComponentSpec& c);

/// Adds the arc upstream -> downstream with an identity CPT on downstream.
BayesianNetwork link_equality(const BayesianNetwork& net, VarId upstream_output, VarId downstream_input);

Translation translate(const Schematic& s, const TranslateOptions& options = {});

}  // namespace hierax
