#include <doctest.h>

#include <random>

#include "hierax/error.hpp"
#include "hierax/factor.hpp"

using namespace hierax;

namespace {

Factor random_factor(std::mt19937_64& rng, std::vector<VarId> scope, std::vector<std::size_t> cards) {
    Factor f(std::move(scope), std::move(cards));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& x : f.values()) x = u(rng);
    return f;
}

}  // namespace

TEST_CASE("multiply") {
    Factor a({0}, {2}, std::vector<double>{0.3, 0.7});
    SUBCASE("unit factor is the identity") { CHECK(multiply(a, Factor()).values() == a.values()); }
    SUBCASE("same scope is elementwise") {
        Factor b({0}, {2}, std::vector<double>{0.5, 0.5});
        auto c = multiply(a, b);
        CHECK(c.values()[0] == doctest::Approx(0.15));
        CHECK(c.values()[1] == doctest::Approx(0.35));
    }
    SUBCASE("disjoint scopes give the outer product") {
        Factor b({1}, {3}, std::vector<double>{0.2, 0.3, 0.5});
        auto c = multiply(a, b);
        CHECK(c.scope() == std::vector<VarId>{0, 1});
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 3; ++j) CHECK(c[i * 3 + j] == doctest::Approx(a[i] * b[j]));
    }
    SUBCASE("cardinality clash") {
        Factor b({0}, {3}, 1.0);
        CHECK_THROWS_AS(multiply(a, b), StateSpaceMismatch);
    }
}

TEST_CASE("multiply is commutative and associative up to scope order") {
    std::mt19937_64 rng(3);
    auto a = random_factor(rng, {0, 1}, {2, 3});
    auto b = random_factor(rng, {1, 2}, {3, 2});
    auto c = random_factor(rng, {2, 3}, {2, 2});
    CHECK(max_abs_diff(multiply(a, b), multiply(b, a)) < 1e-15);
    CHECK(max_abs_diff(multiply(multiply(a, b), c), multiply(a, multiply(b, c))) < 1e-15);
}

TEST_CASE("marginalize") {
    Factor f({0, 1}, {2, 2}, 0.25);
    CHECK(marginalize(f, {}).values() == f.values());
    auto m = marginalize(f, {1});
    CHECK(m.scope() == std::vector<VarId>{0});
    CHECK(m.values() == std::vector<double>{0.5, 0.5});
    auto all = marginalize(f, {0, 1});
    CHECK(all.scope().empty());
    CHECK(all.values()[0] == doctest::Approx(1.0));
    CHECK_THROWS_AS(marginalize(f, {7}), UnknownVariable);
}

TEST_CASE("divide treats 0/0 as 0") {
    Factor a({0, 1}, {2, 2}, std::vector<double>{0.0, 0.2, 0.3, 0.5});
    Factor b({0}, {2}, std::vector<double>{0.0, 0.8});
    auto q = divide(a, b);
    CHECK(q[0] == 0.0);
    CHECK(q[1] == 0.0);
    CHECK(q[2] == doctest::Approx(0.375));
}

TEST_CASE("restrict and normalize") {
    Factor f({0, 1}, {2, 2}, std::vector<double>{0.1, 0.2, 0.3, 0.4});
    auto r = restrict_to(f, 1, 1);
    CHECK(r.values() == std::vector<double>{0.0, 0.2, 0.0, 0.4});
    CHECK(normalize(r) == doctest::Approx(0.6));
    CHECK(r.sum() == doctest::Approx(1.0));
}

TEST_CASE("reordered keeps the function") {
    std::mt19937_64 rng(9);
    auto f = random_factor(rng, {4, 2, 9}, {2, 3, 2});
    auto g = f.reordered({9, 4, 2});
    for (std::size_t flat = 0; flat < f.size(); ++flat) {
        auto a = f.assignment(flat);
        std::vector<std::size_t> b{a[2], a[0], a[1]};
        CHECK(g.at(b) == f[flat]);
    }
}

TEST_CASE("parallel kernels match the serial reference bit for bit") {
    std::mt19937_64 rng(21);
    for (std::size_t threshold : {std::size_t{1}, kernels::kParallelThreshold}) {
        auto a = random_factor(rng, {0, 1, 2, 3, 4, 5, 6}, {3, 3, 3, 3, 3, 2, 2});
        auto b = random_factor(rng, {5, 6, 7, 8, 9}, {2, 2, 3, 3, 3});
        const auto ps = kernels::multiply_serial(a, b);
        const auto pp = kernels::multiply_parallel(a, b, threshold);
        CHECK(ps.scope() == pp.scope());
        CHECK(ps.values() == pp.values());
        const auto ms = kernels::marginalize_serial(ps, {1, 6, 8});
        const auto mp = kernels::marginalize_parallel(ps, {1, 6, 8}, threshold);
        CHECK(ms.scope() == mp.scope());
        CHECK(ms.values() == mp.values());
    }
}
