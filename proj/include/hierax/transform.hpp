#pragma once

#include <string>

#include "hierax/network.hpp"
#include "hierax/translator.hpp"

namespace hierax {

/// Conditional P(child | parents) from an unnormalized factor over
/// parents ∪ {child}. Rows with zero mass become uniform.
Factor conditional(const Factor& f, VarId child, const std::vector<VarId>& parents);

/// Reverses x -> y. Afterwards both share the union of their former parents
/// and y is a parent of x. Throws GraphError if the arc is absent or another
/// directed path x ~> y exists.
BayesianNetwork reverse_arc(const BayesianNetwork& net, VarId x, VarId y);

/// Sums x out. Children are re-factored in topological order: child i gets
/// x's parents, the parents of children 1..i and children 1..i-1.
BayesianNetwork absorb_node(const BayesianNetwork& net, VarId x);

/// Replaces the lower level of `path` by an atomic-looking fragment
/// inputs ∪ {M^h} -> output. Nested refinements are compiled first.
BayesianNetwork compile_refinement(const BayesianNetwork& net, const TranslationIndex& idx, const std::string& path);

/// Compiles every refinement directly below `level`.
BayesianNetwork compile_level(const BayesianNetwork& net, const TranslationIndex& idx,
                              const std::string& level = kTopLevel);

inline constexpr double kClampTolerance = 1e-12;

}  // namespace hierax
