#include <doctest.h>

#include <random>

#include "hierax/error.hpp"
#include "hierax/schematic.hpp"
#include "support/helpers.hpp"
#include "support/random_models.hpp"

using namespace hierax;
using namespace hierax::testing;

namespace {

Schematic hand_built_f1() {
    Schematic s;
    for (const std::string n : {"I1", "I2", "I3"}) s.system_inputs.push_back({n, boolean(), std::nullopt});
    s.components.push_back(gate("G1", {"I1", "I2"}, 0.99, and_of));
    s.components.push_back(gate("G2", {"in1", "I3"}, 0.95, or_of));
    s.connections.push_back({"G1", "out", "G2", "in1"});
    // 1 - p_ok is not exactly the decimal written in the document.
    std::get<AtomicBehavior>(s.components[0].body).mode_prior = {0.99, 0.01};
    std::get<AtomicBehavior>(s.components[1].body).mode_prior = {0.95, 0.05};
    return s;
}

const char* kBuffer = R"({
  "system_inputs": [{"name": "I", "states": ["0", "1"]}],
  "components": [{
    "id": "B",
    "inputs": [{"name": "I", "states": ["0", "1"]}],
    "output": {"name": "out", "states": ["0", "1"]},
    "mode": {"states": ["ok", "broken"], "prior": [1.0, 0.0]},
    "behavior": {"table": [["0","ok","0"],["0","broken","0"],["1","ok","1"],["1","broken","0"]]}
  }],
  "connections": []
})";

}  // namespace

TEST_CASE("parse buffer document") {
    auto s = parse_schematic(kBuffer);
    CHECK(s.components.size() == 1);
    CHECK(s.system_inputs.size() == 1);
    CHECK(s.components[0].is_atomic());
    CHECK(s.components[0].atomic().mode_prior == std::vector<double>{1.0, 0.0});
}

TEST_CASE("parse two-gate fixture equals hand-built value") {
    auto s = load_schematic(fixture("f1_two_gate.json"));
    CHECK(s.components.size() == 2);
    CHECK(s.system_inputs.size() == 3);
    CHECK(s.connections.size() == 1);
    CHECK(s == hand_built_f1());
}

TEST_CASE("parse reports syntax errors with a location") {
    try {
        parse_schematic("{\n  \"system_inputs\": [,]\n}");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(e.column() > 1);
    }
}

TEST_CASE("parse rejects duplicate keys and unknown fields") {
    CHECK_THROWS_AS(parse_schematic(R"({"components": [], "components": []})"), ParseError);
    CHECK_THROWS_AS(parse_schematic(R"({"system_inputs": [], "components": [], "connections": [], "colour": 1})"),
                    SchemaError);
    try {
        parse_schematic(R"({"system_inputs": [{"name": "I", "states": ["0","1"], "weight": 2}], "components": []})");
        FAIL("expected a schema error");
    } catch (const SchemaError& e) {
        CHECK(e.path().find("system_inputs") != std::string::npos);
    }
}

TEST_CASE("cyclic document parses and fails validation once") {
    auto s = load_schematic(fixture("f1_cycle.json"));
    auto report = validate_schematic(s);
    CHECK(report.count(ViolationKind::Cycle) == 1);
    CHECK_FALSE(report.accepted());
}

TEST_CASE("fixtures validate cleanly") {
    for (const auto* f : {"f1_two_gate.json", "f2_xor_hier.json", "f3_buffer.json", "nested_three_level.json",
                          "xor_fed.json"}) {
        CAPTURE(f);
        auto report = validate_schematic(load_schematic(fixture(f)));
        CHECK(report.accepted());
    }
}

TEST_CASE("renamed refinement input is an interface mismatch") {
    auto s = load_schematic(fixture("f2_xor_hier.json"));
    auto sub = std::make_shared<Schematic>(*s.components[0].refinement().sub_schematic);
    sub->system_inputs[1].name = "J2";
    for (auto& c : sub->components)
        for (auto& p : c.inputs)
            if (p.name == "I2") p.name = "J2";
    auto r = s.components[0].refinement();
    r.sub_schematic = sub;
    s.components[0].body = r;
    CHECK(validate_schematic(s).count(ViolationKind::RefinementInterfaceMismatch) >= 1);
}

TEST_CASE("validation catches injected defects") {
    SUBCASE("dangling port") {
        auto s = hand_built_f1();
        s.connections.clear();
        CHECK(validate_schematic(s).count(ViolationKind::DanglingPort) == 1);
    }
    SUBCASE("state-space mismatch") {
        auto s = hand_built_f1();
        s.components[1].inputs[0].states = StateSpace{"0", "1", "2"};
        CHECK(validate_schematic(s).count(ViolationKind::StateSpaceMismatch) >= 1);
    }
    SUBCASE("multi-output") {
        auto s = hand_built_f1();
        s.components[0].extra_outputs.push_back({"out2", boolean()});
        CHECK(validate_schematic(s).count(ViolationKind::MultiOutput) == 1);
    }
    SUBCASE("non-total table") {
        auto s = hand_built_f1();
        auto b = s.components[0].atomic();
        b.function_table.rows.pop_back();
        s.components[0].body = b;
        CHECK(validate_schematic(s).count(ViolationKind::TableNotTotal) == 1);
    }
    SUBCASE("prior not normalized") {
        auto s = hand_built_f1();
        auto b = s.components[0].atomic();
        b.mode_prior = {0.9, 0.2};
        s.components[0].body = b;
        CHECK(validate_schematic(s).count(ViolationKind::BadPrior) == 1);
    }
    SUBCASE("abstraction not total") {
        auto s = load_schematic(fixture("f2_xor_hier.json"));
        auto r = s.components[0].refinement();
        AbstractionTable t;
        t.rows.push_back({"ok", "ok", "ok", "ok", "ok", "ok"});
        r.abstraction = t;
        s.components[0].body = r;
        CHECK(validate_schematic(s).count(ViolationKind::AbstractionNotTotal) == 1);
    }
    SUBCASE("too many subcomponents") {
        auto s = load_schematic(fixture("f2_xor_hier.json"));
        auto sub = std::make_shared<Schematic>(*s.components[0].refinement().sub_schematic);
        for (int i = 0; i < 8; ++i) sub->components.push_back(gate("E" + std::to_string(i), {"I1"}, 0.9, not_of));
        auto r = s.components[0].refinement();
        r.sub_schematic = sub;
        s.components[0].body = r;
        CHECK(validate_schematic(s).count(ViolationKind::TooManySubcomponents) == 1);
    }
}

TEST_CASE("unreachable parent mode is a warning, not a violation") {
    auto s = load_schematic(fixture("f2_xor_hier.json"));
    s.components[0].mode.states = StateSpace{"ok", "broken", "degraded"};
    auto report = validate_schematic(s);
    CHECK(report.accepted());
    CHECK_FALSE(report.warnings.empty());
}

TEST_CASE("serialize round-trips") {
    for (const auto* f : {"f1_two_gate.json", "f2_xor_hier.json", "f3_buffer.json", "nested_three_level.json"}) {
        CAPTURE(f);
        auto s = load_schematic(fixture(f));
        CHECK(parse_schematic(serialize_schematic(s)) == s);
    }
    std::mt19937_64 rng(7);
    for (int i = 0; i < 25; ++i) {
        auto s = random_schematic(rng);
        CHECK(parse_schematic(serialize_schematic(s)) == s);
    }
}

TEST_CASE("flatten") {
    SUBCASE("flat input is unchanged") {
        auto s = load_schematic(fixture("f1_two_gate.json"));
        auto r = flatten(s);
        CHECK(r.flat == s);
        CHECK(r.hierarchy.empty());
    }
    SUBCASE("xor refinement") {
        auto s = load_schematic(fixture("f2_xor_hier.json"));
        auto r = flatten(s);
        CHECK(r.flat.components.size() == 5);
        CHECK(r.hierarchy.at("XOR1") ==
              std::set<std::string>{"XOR1.N1", "XOR1.N2", "XOR1.A1", "XOR1.A2", "XOR1.R"});
        const auto& sub = *s.components[0].refinement().sub_schematic;
        for (const auto& leaf : sub.components) {
            auto i = r.flat.component_index("XOR1." + leaf.id);
            REQUIRE(i);
            CHECK(r.flat.components[*i].atomic() == leaf.atomic());
        }
        CHECK(validate_schematic(r.flat).accepted());
    }
    SUBCASE("nested levels compose") {
        auto r = flatten(load_schematic(fixture("nested_three_level.json")));
        CHECK(r.flat.components.size() == 7);
        CHECK(r.hierarchy.at("P").size() == 6);
        CHECK(r.hierarchy.at("P").count("P.X.R") == 1);
        CHECK(r.hierarchy.at("P.X").size() == 5);
    }
    SUBCASE("idempotent") {
        std::mt19937_64 rng(11);
        for (int i = 0; i < 25; ++i) {
            auto once = flatten(random_schematic(rng)).flat;
            CHECK(flatten(once).flat == once);
        }
    }
}

TEST_CASE("accepted schematics admit a topological order") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 25; ++i) {
        auto s = random_schematic(rng);
        auto order = topological_components(s);
        REQUIRE(order);
        CHECK(order->size() == s.components.size());
    }
}
