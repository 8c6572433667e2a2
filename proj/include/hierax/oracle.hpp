#pragma once

#include <map>
#include <string>
#include <vector>

#include "hierax/network.hpp"

namespace hierax {

inline constexpr std::size_t kMaxJointCells = std::size_t{1} << 24;

/// Full joint distribution of a network, scope in ascending variable id.
struct JointTable {
    Factor table;
    std::vector<std::string> names;  // parallel to table.scope()
    std::vector<StateSpace> states;

    VarId var(const std::string& name) const;
};

/// Brute-force product of every CPT over all full assignments.
JointTable enumerate_joint(const BayesianNetwork& net);

namespace kernels {
Factor joint_serial(const BayesianNetwork& net);
Factor joint_parallel(const BayesianNetwork& net, std::size_t threshold = kParallelThreshold);
}  // namespace kernels

struct ConditionedMarginals {
    std::map<std::string, std::vector<double>> posteriors;
    double evidence_probability = 0.0;
};

/// Zeroes cells inconsistent with `obs`, renormalizes and returns every
/// variable's marginal. Throws ImpossibleEvidence on a zero normalizer.
ConditionedMarginals condition_joint(const JointTable& joint, const Observation& obs);

/// Marginal of the joint over a subset of variables (by name), in the given order.
Factor marginal_of(const JointTable& joint, const std::vector<VarId>& keep);

}  // namespace hierax
