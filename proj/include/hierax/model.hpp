#pragma once

#include <memory>

#include "hierax/jointree.hpp"
#include "hierax/schematic.hpp"
#include "hierax/translator.hpp"

namespace hierax {

struct BuildOptions {
    bool explicit_input_nodes = false;
    bool merge_subsets = false;
};

/// Everything one pipeline run produces. Immutable once built.
struct Model {
    Schematic schematic;
    Translation translation;
    BayesianNetwork compiled;  // top level with every refinement compiled
    CompositeJoinTree composite;
    BuildOptions options;

    const BayesianNetwork& net() const { return translation.net; }
    const TranslationIndex& index() const { return translation.index; }
};

/// translate, compile, build and verify the composite tree. The schematic must
/// already be accepted by validate_schematic. Throws VerificationError.
std::shared_ptr<const Model> build_model(const Schematic& s, const BuildOptions& options = {});

}  // namespace hierax
