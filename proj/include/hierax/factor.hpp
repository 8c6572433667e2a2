#pragma once

#include <cstddef>
#include <set>
#include <span>
#include <vector>

namespace hierax {

using VarId = int;

/// Dense table over an ordered variable scope. Row-major: the last scope
/// variable varies fastest, so a CPT with scope [parents..., child] stores one
/// contiguous row per parent configuration.
class Factor {
public:
    /// Scalar factor with value 1.
    Factor() : values_{1.0} {}
    Factor(std::vector<VarId> scope, std::vector<std::size_t> cards, double fill = 0.0);
    Factor(std::vector<VarId> scope, std::vector<std::size_t> cards, std::vector<double> values);

    const std::vector<VarId>& scope() const { return scope_; }
    const std::vector<std::size_t>& cards() const { return cards_; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }
    std::size_t size() const { return values_.size(); }

    bool contains(VarId v) const;
    // Position of v in the scope; throws UnknownVariable.
    std::size_t position(VarId v) const;
    std::size_t card(VarId v) const { return cards_[position(v)]; }

    double& operator[](std::size_t flat) { return values_[flat]; }
    double operator[](std::size_t flat) const { return values_[flat]; }

    // Value at an assignment given in scope order.
    double at(std::span<const std::size_t> assignment) const;
    std::size_t flat_index(std::span<const std::size_t> assignment) const;
    std::vector<std::size_t> assignment(std::size_t flat) const;

    double sum() const;

    /// Same function with the scope permuted to `order` (a permutation of scope()).
    Factor reordered(const std::vector<VarId>& order) const;

private:
    std::vector<VarId> scope_;
    std::vector<std::size_t> cards_;
    std::vector<double> values_;
};

/// Product over the union scope: a's variables first, then b's new ones.
Factor multiply(const Factor& a, const Factor& b);

/// Sums out every variable in `drop`; surviving variables keep their order.
Factor marginalize(const Factor& f, const std::set<VarId>& drop);

/// Keeps only the variables in `keep` (order of f's scope).
Factor project(const Factor& f, const std::set<VarId>& keep);

/// Elementwise a / b where b's scope is a subset of a's; 0/0 is taken as 0.
Factor divide(const Factor& a, const Factor& b);

/// Zeroes every cell where `var` is not `state`.
Factor restrict_to(const Factor& f, VarId var, std::size_t state);

/// Scales to unit sum and returns the previous sum (unchanged when zero).
double normalize(Factor& f);

/// Largest absolute cell difference after aligning b to a's scope order.
double max_abs_diff(const Factor& a, const Factor& b);

namespace kernels {

// Cell counts at or above this run the OpenMP kernels in parallel.
inline constexpr std::size_t kParallelThreshold = 1u << 14;

// Reference implementations. Kept single-threaded and simple for tests.
Factor multiply_serial(const Factor& a, const Factor& b);
Factor marginalize_serial(const Factor& f, const std::set<VarId>& drop);

// OpenMP implementations, bitwise identical to the serial ones.
Factor multiply_parallel(const Factor& a, const Factor& b, std::size_t threshold = kParallelThreshold);
Factor marginalize_parallel(const Factor& f, const std::set<VarId>& drop,
                            std::size_t threshold = kParallelThreshold);

}  // namespace kernels

}  // namespace hierax
