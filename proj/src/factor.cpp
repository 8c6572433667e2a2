#include "hierax/factor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hierax/error.hpp"

namespace hierax {

namespace {

std::size_t product(const std::vector<std::size_t>& cards) {
    return std::accumulate(cards.begin(), cards.end(), std::size_t{1}, std::multiplies<>());
}

std::vector<std::size_t> strides_of(const std::vector<std::size_t>& cards) {
    std::vector<std::size_t> strides(cards.size(), 1);
    for (std::size_t i = cards.size(); i-- > 1;) strides[i - 1] = strides[i] * cards[i];
    return strides;
}

}  // namespace

Factor::Factor(std::vector<VarId> scope, std::vector<std::size_t> cards, double fill)
    : scope_(std::move(scope)), cards_(std::move(cards)) {
    if (scope_.size() != cards_.size()) throw Error("factor scope and cardinalities differ in length");
    values_.assign(product(cards_), fill);
}

Factor::Factor(std::vector<VarId> scope, std::vector<std::size_t> cards, std::vector<double> values)
    : scope_(std::move(scope)), cards_(std::move(cards)), values_(std::move(values)) {
    if (scope_.size() != cards_.size()) throw Error("factor scope and cardinalities differ in length");
    if (values_.size() != product(cards_)) throw Error("factor table size does not match its scope");
}

bool Factor::contains(VarId v) const { return std::find(scope_.begin(), scope_.end(), v) != scope_.end(); }

std::size_t Factor::position(VarId v) const {
    auto it = std::find(scope_.begin(), scope_.end(), v);
    if (it == scope_.end()) throw UnknownVariable("variable " + std::to_string(v) + " is not in the factor scope");
    return static_cast<std::size_t>(it - scope_.begin());
}

std::size_t Factor::flat_index(std::span<const std::size_t> assignment) const {
    std::size_t flat = 0;
    for (std::size_t i = 0; i < cards_.size(); ++i) flat = flat * cards_[i] + assignment[i];
    return flat;
}

double Factor::at(std::span<const std::size_t> assignment) const { return values_[flat_index(assignment)]; }

std::vector<std::size_t> Factor::assignment(std::size_t flat) const {
    std::vector<std::size_t> a(cards_.size());
    for (std::size_t i = cards_.size(); i-- > 0;) {
        a[i] = flat % cards_[i];
        flat /= cards_[i];
    }
    return a;
}

double Factor::sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

Factor Factor::reordered(const std::vector<VarId>& order) const {
    if (order.size() != scope_.size()) throw Error("reorder target is not a permutation of the scope");
    std::vector<std::size_t> cards;
    for (auto v : order) cards.push_back(card(v));
    Factor out(order, cards);
    const auto src_strides = strides_of(cards_);
    std::vector<std::size_t> stride_for_out(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) stride_for_out[i] = src_strides[position(order[i])];
    std::vector<std::size_t> idx(order.size(), 0);
    for (std::size_t flat = 0; flat < out.size(); ++flat) {
        std::size_t src = 0;
        for (std::size_t i = 0; i < order.size(); ++i) src += idx[i] * stride_for_out[i];
        out.values_[flat] = values_[src];
        for (std::size_t i = order.size(); i-- > 0;) {
            if (++idx[i] < cards[i]) break;
            idx[i] = 0;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Kernels

namespace kernels {

namespace {

struct ProductPlan {
    std::vector<VarId> scope;
    std::vector<std::size_t> cards;
    std::vector<std::size_t> stride_a;  // per output dim, 0 when absent
    std::vector<std::size_t> stride_b;
};

ProductPlan plan_product(const Factor& a, const Factor& b) {
    ProductPlan plan;
    plan.scope = a.scope();
    plan.cards = a.cards();
    for (std::size_t i = 0; i < b.scope().size(); ++i) {
        const VarId v = b.scope()[i];
        if (a.contains(v)) {
            if (a.card(v) != b.cards()[i])
                throw StateSpaceMismatch("variable " + std::to_string(v) + " has different cardinalities");
        } else {
            plan.scope.push_back(v);
            plan.cards.push_back(b.cards()[i]);
        }
    }
    const auto sa = strides_of(a.cards());
    const auto sb = strides_of(b.cards());
    for (auto v : plan.scope) {
        plan.stride_a.push_back(a.contains(v) ? sa[a.position(v)] : 0);
        plan.stride_b.push_back(b.contains(v) ? sb[b.position(v)] : 0);
    }
    return plan;
}

inline void product_cell(const ProductPlan& plan, std::size_t flat, const double* av, const double* bv,
                         double* out) {
    std::size_t ia = 0, ib = 0, rest = flat;
    for (std::size_t d = plan.cards.size(); d-- > 0;) {
        const std::size_t k = rest % plan.cards[d];
        rest /= plan.cards[d];
        ia += k * plan.stride_a[d];
        ib += k * plan.stride_b[d];
    }
    out[flat] = av[ia] * bv[ib];
}

struct SumPlan {
    std::vector<VarId> scope;
    std::vector<std::size_t> cards;
    std::vector<std::size_t> stride_kept;    // source stride per kept dim
    std::vector<std::size_t> dropped_offsets;  // source offsets of every dropped assignment
};

SumPlan plan_sum(const Factor& f, const std::set<VarId>& drop) {
    for (auto v : drop)
        if (!f.contains(v)) throw UnknownVariable("cannot sum out variable " + std::to_string(v));
    SumPlan plan;
    const auto strides = strides_of(f.cards());
    std::vector<std::size_t> dcards, dstrides;
    for (std::size_t i = 0; i < f.scope().size(); ++i) {
        if (drop.count(f.scope()[i])) {
            dcards.push_back(f.cards()[i]);
            dstrides.push_back(strides[i]);
        } else {
            plan.scope.push_back(f.scope()[i]);
            plan.cards.push_back(f.cards()[i]);
            plan.stride_kept.push_back(strides[i]);
        }
    }
    std::vector<std::size_t> idx(dcards.size(), 0);
    const std::size_t combos = product(dcards);
    plan.dropped_offsets.reserve(combos);
    for (std::size_t c = 0; c < combos; ++c) {
        std::size_t off = 0;
        for (std::size_t i = 0; i < idx.size(); ++i) off += idx[i] * dstrides[i];
        plan.dropped_offsets.push_back(off);
        for (std::size_t i = idx.size(); i-- > 0;) {
            if (++idx[i] < dcards[i]) break;
            idx[i] = 0;
        }
    }
    return plan;
}

inline void sum_cell(const SumPlan& plan, std::size_t flat, const double* src, double* out) {
    std::size_t base = 0, rest = flat;
    for (std::size_t d = plan.cards.size(); d-- > 0;) {
        base += (rest % plan.cards[d]) * plan.stride_kept[d];
        rest /= plan.cards[d];
    }
    double acc = 0.0;
    for (auto off : plan.dropped_offsets) acc += src[base + off];
    out[flat] = acc;
}

}  // namespace

Factor multiply_serial(const Factor& a, const Factor& b) {
    const auto plan = plan_product(a, b);
    Factor out(plan.scope, plan.cards);
    const std::size_t n = out.size();
    for (std::size_t i = 0; i < n; ++i) product_cell(plan, i, a.values().data(), b.values().data(), out.values().data());
    return out;
}

Factor multiply_parallel(const Factor& a, const Factor& b, std::size_t threshold) {
    const auto plan = plan_product(a, b);
    Factor out(plan.scope, plan.cards);
    const auto n = static_cast<std::ptrdiff_t>(out.size());
    const double* av = a.values().data();
    const double* bv = b.values().data();
    double* ov = out.values().data();
#pragma omp parallel for schedule(static) if (out.size() >= threshold)
    for (std::ptrdiff_t i = 0; i < n; ++i) product_cell(plan, static_cast<std::size_t>(i), av, bv, ov);
    return out;
}

Factor marginalize_serial(const Factor& f, const std::set<VarId>& drop) {
    const auto plan = plan_sum(f, drop);
    Factor out(plan.scope, plan.cards);
    const std::size_t n = out.size();
    for (std::size_t i = 0; i < n; ++i) sum_cell(plan, i, f.values().data(), out.values().data());
    return out;
}

Factor marginalize_parallel(const Factor& f, const std::set<VarId>& drop, std::size_t threshold) {
    const auto plan = plan_sum(f, drop);
    Factor out(plan.scope, plan.cards);
    const auto n = static_cast<std::ptrdiff_t>(out.size());
    const double* src = f.values().data();
    double* ov = out.values().data();
#pragma omp parallel for schedule(static) if (f.size() >= threshold)
    for (std::ptrdiff_t i = 0; i < n; ++i) sum_cell(plan, static_cast<std::size_t>(i), src, ov);
    return out;
}

}  // namespace kernels

Factor multiply(const Factor& a, const Factor& b) { return kernels::multiply_parallel(a, b); }

Factor marginalize(const Factor& f, const std::set<VarId>& drop) {
    if (drop.empty()) return f;
    return kernels::marginalize_parallel(f, drop);
}

Factor project(const Factor& f, const std::set<VarId>& keep) {
    std::set<VarId> drop;
    for (auto v : f.scope())
        if (!keep.count(v)) drop.insert(v);
    return marginalize(f, drop);
}

Factor divide(const Factor& a, const Factor& b) {
    for (auto v : b.scope())
        if (!a.contains(v)) throw Error("divisor scope must be contained in the dividend scope");
    // Broadcast b over a's scope, then divide cell by cell.
    Factor ones(a.scope(), a.cards(), 1.0);
    Factor denom = multiply(ones, b);
    Factor out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = denom[i] == 0.0 ? 0.0 : a[i] / denom[i];
    return out;
}

Factor restrict_to(const Factor& f, VarId var, std::size_t state) {
    Factor out = f;
    const auto pos = f.position(var);
    for (std::size_t i = 0; i < out.size(); ++i)
        if (out.assignment(i)[pos] != state) out[i] = 0.0;
    return out;
}

double normalize(Factor& f) {
    const double total = f.sum();
    if (total > 0.0)
        for (auto& v : f.values()) v /= total;
    return total;
}

double max_abs_diff(const Factor& a, const Factor& b) {
    const Factor aligned = b.reordered(a.scope());
    if (aligned.cards() != a.cards()) throw StateSpaceMismatch("factors have different cardinalities");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - aligned[i]));
    return worst;
}

}  // namespace hierax
