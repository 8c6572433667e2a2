#include <doctest.h>

#include <cmath>
#include <random>

#include "hierax/error.hpp"
#include "hierax/oracle.hpp"
#include "hierax/transform.hpp"
#include "hierax/translator.hpp"
#include "support/helpers.hpp"
#include "support/random_models.hpp"

using namespace hierax;
using namespace hierax::testing;

namespace {

double worst_diff(const Factor& a, const Factor& b) {
    REQUIRE(a.size() == b.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

// Marginal of the full joint of `full` over the variables left in `reduced`,
// compared against the joint of `reduced`.
double marginal_gap(const BayesianNetwork& full, const BayesianNetwork& reduced) {
    const auto m = marginal_of(enumerate_joint(full), reduced.variables());
    return worst_diff(m, enumerate_joint(reduced).table);
}

BayesianNetwork not_pair(double p_a1) {
    BayesianNetwork net;
    const auto a = net.add_variable("A", boolean());
    const auto b = net.add_variable("B", boolean());
    net.set_prior(a, {1.0 - p_a1, p_a1});
    net.set_cpt(b, {a}, Factor({a, b}, {2, 2}, std::vector<double>{0, 1, 1, 0}));
    return net;
}

Schematic single_sub_identity() {
    auto sub = std::make_shared<Schematic>();
    sub->system_inputs.push_back({"a", boolean(), std::nullopt});
    sub->components.push_back(gate("S", {"a"}, 0.9, not_of));
    Schematic s;
    s.system_inputs.push_back({"a", boolean(), std::nullopt});
    ComponentSpec w;
    w.id = "W";
    w.inputs = {{"a", boolean()}};
    w.output = {"out", boolean()};
    w.mode.states = ok_broken();
    w.body = Refinement{sub, AbstractionTable{{{"ok", "ok"}, {"broken", "broken"}}}};
    s.components.push_back(w);
    return s;
}

}  // namespace

TEST_CASE("conditional normalizes rows and fills empty rows uniformly") {
    Factor f({0, 1}, {2, 3}, std::vector<double>{1, 1, 2, 0, 0, 0});
    auto c = conditional(f, 1, {0});
    CHECK(c.values() == std::vector<double>{0.25, 0.25, 0.5, 1.0 / 3, 1.0 / 3, 1.0 / 3});
}

TEST_CASE("reversing an identity arc") {
    BayesianNetwork net;
    const auto a = net.add_variable("A", boolean());
    const auto b = net.add_variable("B", boolean());
    net.set_prior(a, {0.3, 0.7});
    net.set_cpt(b, {a}, Factor({a, b}, {2, 2}, std::vector<double>{1, 0, 0, 1}));
    auto r = reverse_arc(net, a, b);
    CHECK(r.parents(b).empty());
    CHECK(r.parents(a) == std::vector<VarId>{b});
    CHECK(r.cpt(b).values()[1] == doctest::Approx(0.7));
    CHECK(r.cpt(a).values() == std::vector<double>{1, 0, 0, 1});
}

TEST_CASE("reversing a NOT arc") {
    auto net = not_pair(0.2);
    auto r = reverse_arc(net, net.id("A"), net.id("B"));
    CHECK(r.cpt(r.id("B")).values()[1] == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(r.cpt(r.id("A")).values() == std::vector<double>{0, 1, 1, 0});
}

TEST_CASE("reversal errors") {
    BayesianNetwork net;
    const auto a = net.add_variable("A", boolean());
    const auto b = net.add_variable("B", boolean());
    const auto c = net.add_variable("C", boolean());
    net.set_prior(a, {0.5, 0.5});
    net.set_cpt(b, {a}, Factor({a, b}, {2, 2}, 0.5));
    net.set_cpt(c, {a, b}, Factor({a, b, c}, {2, 2, 2}, 0.5));
    CHECK_THROWS_AS(reverse_arc(net, b, a), GraphError);
    CHECK_THROWS_AS(reverse_arc(net, a, c), GraphError);
    CHECK_NOTHROW(reverse_arc(net, b, c));
}

TEST_CASE("absorbing a barren node leaves the rest untouched") {
    auto net = not_pair(0.2);
    auto r = absorb_node(net, net.id("B"));
    CHECK(r.size() == 1);
    CHECK(r.cpt(r.id("A")).values() == net.cpt(net.id("A")).values());
}

TEST_CASE("absorbing the middle of a chain") {
    BayesianNetwork net;
    const auto a = net.add_variable("A", boolean());
    const auto b = net.add_variable("B", boolean());
    const auto c = net.add_variable("C", boolean());
    net.set_prior(a, {0.4, 0.6});
    net.set_cpt(b, {a}, Factor({a, b}, {2, 2}, std::vector<double>{0.9, 0.1, 0.2, 0.8}));
    net.set_cpt(c, {b}, Factor({b, c}, {2, 2}, std::vector<double>{0.7, 0.3, 0.05, 0.95}));
    auto r = absorb_node(net, b);
    CHECK(r.parents(c) == std::vector<VarId>{a});
    const auto& cpt = r.cpt(c);
    CHECK(cpt.values()[1] == doctest::Approx(0.9 * 0.3 + 0.1 * 0.95));
    CHECK(cpt.values()[3] == doctest::Approx(0.2 * 0.3 + 0.8 * 0.95));
    CHECK(r.cpt(a).values() == net.cpt(a).values());
}

TEST_CASE("absorbing a node with several children keeps the marginal") {
    BayesianNetwork net;
    const auto x = net.add_variable("X", boolean());
    const auto c1 = net.add_variable("C1", boolean());
    const auto c2 = net.add_variable("C2", StateSpace{"a", "b", "c"});
    net.set_prior(x, {0.3, 0.7});
    net.set_cpt(c1, {x}, Factor({x, c1}, {2, 2}, std::vector<double>{0.9, 0.1, 0.4, 0.6}));
    net.set_cpt(c2, {x}, Factor({x, c2}, {2, 3}, std::vector<double>{0.2, 0.3, 0.5, 0.6, 0.4, 0.0}));
    auto r = absorb_node(net, x);
    CHECK(r.parents(c2) == std::vector<VarId>{c1});
    CHECK(marginal_gap(net, r) <= 1e-12);
}

TEST_CASE("random networks: reversal preserves the joint, absorption the marginal") {
    std::mt19937_64 rng(7);
    int reversals = 0, absorptions = 0;
    for (int i = 0; i < 100; ++i) {
        const auto net = random_network(rng);
        CAPTURE(to_text(net));
        std::vector<std::pair<VarId, VarId>> arcs;
        for (auto y : net.variables())
            for (auto x : net.parents(y))
                if (!net.has_path(x, y, true)) arcs.emplace_back(x, y);
        if (!arcs.empty()) {
            const auto [x, y] = arcs[std::uniform_int_distribution<std::size_t>(0, arcs.size() - 1)(rng)];
            const auto r = reverse_arc(net, x, y);
            CHECK(r.has_arc(y, x));
            CHECK(r.topological_order().has_value());
            CHECK(r.check(1e-12).empty());
            CHECK(worst_diff(enumerate_joint(net).table, enumerate_joint(r).table) <= 1e-12);
            ++reversals;
        }
        const auto vars = net.variables();
        const auto x = vars[std::uniform_int_distribution<std::size_t>(0, vars.size() - 1)(rng)];
        const auto a = absorb_node(net, x);
        CHECK_FALSE(a.contains(x));
        CHECK(a.check(1e-12).empty());
        CHECK(marginal_gap(net, a) <= 1e-12);
        ++absorptions;
    }
    CHECK(reversals > 50);
    CHECK(absorptions == 100);
}

TEST_CASE("compiling the xor refinement") {
    const auto t = translate(load_schematic(fixture("f2_xor_hier.json")));
    const auto c = compile_level(t.net, t.index);
    const auto i1 = c.id("I1"), i2 = c.id("I2"), mh = c.id("XOR1.mode"), out = c.id("XOR1.out");
    CHECK(c.size() == 4);
    CHECK(c.parents(mh).empty());
    CHECK(c.parents(out) == std::vector<VarId>{i1, i2, mh});
    CHECK(c.check(1e-12).empty());

    const double all_ok = std::pow(0.99, 5);
    CHECK(std::abs(c.cpt(mh).values()[0] - all_ok) <= 1e-12);

    const auto& cpt = c.cpt(out);
    for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 2; ++b) CHECK(cpt.at(std::vector<std::size_t>{a, b, 0, a ^ b}) == 1.0);

    // With I1=1, I2=0 the output is 1 exactly when N2, A1 and R are ok.
    const double golden = (std::pow(0.99, 3) - std::pow(0.99, 5)) / (1.0 - std::pow(0.99, 5));
    CHECK(std::abs(cpt.at(std::vector<std::size_t>{1, 0, 1, 1}) - golden) <= 1e-12);

    CHECK(marginal_gap(t.net, c) <= 1e-9);
}

TEST_CASE("single subcomponent with identity abstraction compiles to its own fragment") {
    const auto s = single_sub_identity();
    const auto t = translate(s);
    const auto c = compile_level(t.net, t.index);
    const auto frag = translate_atomic_fragment(s.components[0].refinement().sub_schematic->components[0]);
    CHECK(c.cpt(c.id("W.out")).values() == frag.cpt(frag.id("S.out")).values());
    CHECK(c.cpt(c.id("W.mode")).values()[0] == doctest::Approx(0.9).epsilon(1e-15));
}

TEST_CASE("nested refinements compile from the bottom up") {
    const auto t = translate(load_schematic(fixture("nested_three_level.json")));
    const auto c = compile_level(t.net, t.index);
    const auto p_out = c.id("P.out");
    CHECK(c.parents(p_out) == std::vector<VarId>{c.id("I1"), c.id("I2"), c.id("I3"), c.id("P.mode")});
    CHECK(c.parents(c.id("P.mode")).empty());
    CHECK_FALSE(c.find("P.X.mode").has_value());
    CHECK(marginal_gap(t.net, c) <= 1e-9);

    const auto inner = compile_level(t.net, t.index, "P");
    CHECK(inner.parents(inner.id("P.X.out")) ==
          std::vector<VarId>{inner.id("I1"), inner.id("I2"), inner.id("P.X.mode")});
    CHECK(marginal_gap(t.net, inner) <= 1e-9);
}

TEST_CASE("compiled random schematics keep the top-level marginal") {
    std::mt19937_64 rng(41);
    for (int i = 0; i < 40; ++i) {
        const auto s = random_schematic(rng, 5, 2);
        const auto t = translate(s);
        const auto c = compile_level(t.net, t.index);
        for (const auto& [path, info] : t.index.refinements) {
            if (info.parent_level != kTopLevel) continue;
            auto expected = info.inputs;
            expected.push_back(info.mode);
            CHECK(c.parents(info.output) == expected);
            CHECK(c.parents(info.mode).empty());
            for (auto v : info.internal)
                if (v != info.output) CHECK_FALSE(c.contains(v));
        }
        CHECK(c.check(1e-9).empty());
        CHECK(marginal_gap(t.net, c) <= 1e-9);
    }
}
