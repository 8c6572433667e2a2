#include <doctest.h>

#include <cmath>
#include <random>

#include "hierax/error.hpp"
#include "hierax/inference.hpp"
#include "hierax/oracle.hpp"
#include "support/helpers.hpp"
#include "support/random_models.hpp"

using namespace hierax;
using namespace hierax::testing;

namespace {

std::shared_ptr<const Model> model_of(const std::string& f) { return build_model(load_schematic(fixture(f))); }

ConditionedMarginals oracle(const Model& m, const Observation& obs) {
    return condition_joint(enumerate_joint(m.net()), obs);
}

double gap(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

// Largest disagreement with the oracle over every visible variable.
double visible_gap(const Session& s, const ConditionedMarginals& expected) {
    double worst = 0.0;
    for (auto v : s.model().net().variables()) {
        if (!s.visible(v)) continue;
        const auto& name = s.model().net().name(v);
        worst = std::max(worst, gap(s.posterior(name), expected.posteriors.at(name)));
    }
    return worst;
}

const Observation kXorEvidence{{"I1", "1"}, {"I2", "0"}, {"XOR1.out", "0"}};

}  // namespace

TEST_CASE("a fresh session is calibrated to the priors") {
    const auto m = model_of("f1_two_gate.json");
    Session s(m);
    CHECK_FALSE(s.dirty(kTopLevel));
    CHECK(visible_gap(s, oracle(*m, {})) <= 1e-12);
    CHECK(s.evidence_probability().value() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("two-gate diagnosis") {
    const auto m = model_of("f1_two_gate.json");
    Session s(m);
    for (const auto& [v, x] : Observation{{"I1", "1"}, {"I2", "1"}, {"I3", "0"}, {"G2.out", "0"}})
        s.assert_evidence(v, x);
    CHECK(s.dirty(kTopLevel));
    CHECK_THROWS_AS(s.posterior("G2.mode"), DirtyScope);
    REQUIRE(s.propagate());

    // G2.out = 0 needs G2 broken, or G2 ok with G1 broken.
    const double both = 0.95 * 0.01, g2 = 0.05;
    CHECK(s.posterior("G2.mode")[1] == doctest::Approx(g2 / (both + g2)).epsilon(1e-12));
    CHECK(s.posterior("G1.mode")[1] == doctest::Approx(0.01 * 0.95 / (both + g2) + 0.01 * g2 / (both + g2)).epsilon(1e-12));
    CHECK(s.evidence_probability().value() == doctest::Approx((both + g2) / 8).epsilon(1e-12));

    const auto report = s.diagnose();
    REQUIRE(report.modes.size() == 2);
    CHECK(report.modes[0].name == "G2.mode");
    CHECK(report.modes[1].name == "G1.mode");
    CHECK(report.variables.size() == 7);
    CHECK(std::is_sorted(report.variables.begin(), report.variables.end(),
                         [](const auto& a, const auto& b) { return a.name < b.name; }));
}

TEST_CASE("scoped propagation stays on the top level until expansion") {
    const auto m = model_of("f2_xor_hier.json");
    const auto expected = oracle(*m, kXorEvidence);
    Session s(m);
    for (const auto& [v, x] : kXorEvidence) s.assert_evidence(v, x);
    s.reset_counters();
    REQUIRE(s.propagate(Scope::visible()));
    CHECK(s.counters().at("XOR1") == 0);
    CHECK(visible_gap(s, expected) <= 1e-9);
    CHECK_THROWS_AS(s.posterior("XOR1.A1.mode"), HiddenVariable);

    CHECK(s.expand("XOR1"));
    CHECK_FALSE(s.expand("XOR1"));
    CHECK(s.counters().at("XOR1") > 0);
    CHECK(s.counters().at(kTopLevel) == 1);
    CHECK(visible_gap(s, expected) <= 1e-9);
    CHECK(s.separator_inconsistency(Scope::global()) <= 1e-9);
    CHECK(s.evidence_probability().value() == doctest::Approx(expected.evidence_probability).epsilon(1e-9));
}

TEST_CASE("global propagation agrees with visible propagation on visible variables") {
    const auto m = model_of("f2_xor_hier.json");
    Session a(m), b(m);
    for (const auto& [v, x] : kXorEvidence) {
        a.assert_evidence(v, x);
        b.assert_evidence(v, x);
    }
    REQUIRE(a.propagate(Scope::visible()));
    REQUIRE(b.propagate(Scope::global()));
    for (const auto* v : {"XOR1.mode", "XOR1.out", "I1", "I2"}) CHECK(gap(a.posterior(v), b.posterior(v)) <= 1e-12);
}

TEST_CASE("evidence below an expanded refinement") {
    const auto m = model_of("f2_xor_hier.json");
    Session s(m);
    for (const auto& [v, x] : kXorEvidence) s.assert_evidence(v, x);
    REQUIRE(s.propagate());
    s.expand("XOR1");
    s.assert_evidence("XOR1.N2.out", "1");
    CHECK(s.dirty("XOR1"));
    REQUIRE(s.propagate(Scope::global()));
    auto obs = kXorEvidence;
    obs["XOR1.N2.out"] = "1";
    CHECK(visible_gap(s, oracle(*m, obs)) <= 1e-9);

    SUBCASE("collapse keeps the lower evidence in effect") {
        CHECK(s.collapse("XOR1"));
        CHECK_FALSE(s.collapse("XOR1"));
        CHECK_FALSE(s.visible(m->net().id("XOR1.N2.out")));
        CHECK(gap(s.posterior("XOR1.mode"), oracle(*m, obs).posteriors.at("XOR1.mode")) <= 1e-9);

        s.retract("I1");
        obs.erase("I1");
        REQUIRE(s.propagate());
        CHECK(gap(s.posterior("XOR1.mode"), oracle(*m, obs).posteriors.at("XOR1.mode")) <= 1e-9);
        CHECK(s.expand("XOR1"));
        CHECK(visible_gap(s, oracle(*m, obs)) <= 1e-9);
    }
}

TEST_CASE("impossible evidence rolls back") {
    const auto m = model_of("f3_buffer.json");
    Session s(m);
    s.assert_evidence("I", "1");
    REQUIRE(s.propagate());
    const auto before = s.posterior("B.out");
    s.assert_evidence("B.out", "0");
    CHECK_FALSE(s.propagate());
    CHECK(s.impossible());
    CHECK_THROWS_AS(s.posterior("B.out"), ImpossibleEvidence);
    CHECK(s.evidence().count("B.out") == 1);

    s.retract("B.out");
    REQUIRE(s.propagate());
    CHECK_FALSE(s.impossible());
    CHECK(s.posterior("B.out") == before);
}

TEST_CASE("session errors") {
    const auto m = model_of("nested_three_level.json");
    Session s(m);
    CHECK_THROWS_AS(s.assert_evidence("nope", "0"), UnknownVariable);
    CHECK_THROWS_AS(s.assert_evidence("I1", "7"), UnknownState);
    CHECK_THROWS_AS(s.assert_evidence("P.X.mode", "ok"), HiddenVariable);
    CHECK_THROWS_AS(s.expand("P.X"), HiddenVariable);
    CHECK_THROWS_AS(s.expand("G"), Error);
    CHECK(s.expand("P"));
    CHECK(s.expand("P.X"));
    CHECK(s.collapse("P"));
    CHECK(s.expanded().empty());
}

TEST_CASE("replacing evidence") {
    const auto m = model_of("f1_two_gate.json");
    Session s(m);
    s.assert_evidence("I1", "1");
    s.assert_evidence("G2.out", "0");
    REQUIRE(s.propagate());
    s.assert_evidence("I1", "0");
    REQUIRE(s.propagate());
    CHECK(visible_gap(s, oracle(*m, {{"I1", "0"}, {"G2.out", "0"}})) <= 1e-12);
    s.retract("G2.out");
    REQUIRE(s.propagate());
    CHECK(visible_gap(s, oracle(*m, {{"I1", "0"}})) <= 1e-12);
}

TEST_CASE("assertion order does not matter and calibration is idempotent") {
    const auto m = model_of("nested_three_level.json");
    const std::vector<std::pair<std::string, std::string>> obs{{"I1", "1"}, {"I2", "0"}, {"I3", "1"}, {"G.out", "1"}};
    Session forward(m), backward(m);
    for (const auto& [v, x] : obs) forward.assert_evidence(v, x);
    for (auto it = obs.rbegin(); it != obs.rend(); ++it) backward.assert_evidence(it->first, it->second);
    REQUIRE(forward.propagate(Scope::global()));
    REQUIRE(backward.propagate(Scope::global()));
    CHECK(gap(forward.posterior("P.mode"), backward.posterior("P.mode")) <= 1e-12);

    const auto first = forward.posterior("P.mode");
    forward.reset_counters();
    REQUIRE(forward.propagate(Scope::global()));
    for (const auto& [level, n] : forward.counters()) CHECK(n == 0);
    CHECK(forward.posterior("P.mode") == first);
}

TEST_CASE("random models match the oracle after global propagation") {
    std::mt19937_64 rng(77);
    int checked = 0, impossible = 0;
    for (int i = 0; i < 100; ++i) {
        const auto m = build_model(random_schematic(rng, 5, 3));
        Session s(m);
        for (const auto& level : m->index().levels)
            if (level != kTopLevel) s.expand(level);

        Observation obs;
        const auto vars = m->net().variables();
        const auto count = std::uniform_int_distribution<std::size_t>(0, 3)(rng);
        for (std::size_t k = 0; k < count; ++k) {
            const auto v = vars[std::uniform_int_distribution<std::size_t>(0, vars.size() - 1)(rng)];
            const auto& states = m->net().states(v);
            obs[m->net().name(v)] = states.label(std::uniform_int_distribution<std::size_t>(0, states.size() - 1)(rng));
        }
        for (const auto& [v, x] : obs) s.assert_evidence(v, x);

        ConditionedMarginals expected;
        try {
            expected = oracle(*m, obs);
        } catch (const ImpossibleEvidence&) {
            CHECK_FALSE(s.propagate(Scope::global()));
            ++impossible;
            continue;
        }
        REQUIRE(s.propagate(Scope::global()));
        CHECK(visible_gap(s, expected) <= 1e-9);
        CHECK(s.evidence_probability().value() == doctest::Approx(expected.evidence_probability).epsilon(1e-9));
        CHECK(s.separator_inconsistency(Scope::global()) <= 1e-9);

        // Every clique holding a variable agrees on its marginal.
        const auto& cliques = m->composite.cliques;
        for (std::size_t c = 0; c < cliques.size(); ++c)
            for (auto v : cliques[c].members)
                CHECK(gap(s.posterior_from(v, c), expected.posteriors.at(m->net().name(v))) <= 1e-9);
        ++checked;
    }
    CHECK(checked > 50);
    MESSAGE("impossible draws: " << impossible);
}
