#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hierax/error.hpp"
#include "hierax/schematic.hpp"

namespace hierax {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::pair<int, int> line_column(const std::string& text, std::size_t offset) {
    int line = 1, column = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return {line, column};
}

// Offset of the n-th (0-based) occurrence of `"key"` used as an object key.
std::size_t key_offset(const std::string& text, const std::string& key, int nth) {
    const std::string token = json(key).dump();
    std::size_t pos = 0;
    int seen = 0;
    while ((pos = text.find(token, pos)) != std::string::npos) {
        std::size_t after = pos + token.size();
        while (after < text.size() && std::isspace(static_cast<unsigned char>(text[after]))) ++after;
        if (after < text.size() && text[after] == ':') {
            if (seen == nth) return pos;
            ++seen;
        }
        pos += token.size();
    }
    return 0;
}

json parse_strict(const std::string& text) {
    std::vector<std::set<std::string>> open_objects;
    std::map<std::string, int> key_occurrences;
    std::optional<std::pair<std::string, int>> duplicate;

    json::parser_callback_t cb = [&](int, json::parse_event_t event, json& parsed) {
        switch (event) {
            case json::parse_event_t::object_start:
                open_objects.emplace_back();
                break;
            case json::parse_event_t::object_end:
                if (!open_objects.empty()) open_objects.pop_back();
                break;
            case json::parse_event_t::key: {
                const auto key = parsed.get<std::string>();
                const int nth = key_occurrences[key]++;
                if (!open_objects.empty() && !open_objects.back().insert(key).second && !duplicate)
                    duplicate = std::make_pair(key, nth);
                break;
            }
            default:
                break;
        }
        return true;
    };

    json doc;
    try {
        doc = json::parse(text, cb);
    } catch (const json::parse_error& e) {
        auto [line, column] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
        std::string what = e.what();
        throw ParseError("syntax error: " + what, line, column);
    }
    if (duplicate) {
        auto [line, column] = line_column(text, key_offset(text, duplicate->first, duplicate->second));
        throw ParseError("duplicate key '" + duplicate->first + "'", line, column);
    }
    return doc;
}

class Reader {
public:
    Schematic schematic(const json& j, const std::string& path) {
        expect_object(j, path);
        allow_only(j, path, {"system_inputs", "components", "connections", "output"});
        Schematic s;
        for (std::size_t i = 0; const auto& si : array(j, "system_inputs", path, false))
            s.system_inputs.push_back(system_input(si, path + "/system_inputs/" + std::to_string(i++)));
        for (std::size_t i = 0; const auto& c : array(j, "components", path, false))
            s.components.push_back(component(c, path + "/components/" + std::to_string(i++)));
        for (std::size_t i = 0; const auto& c : array(j, "connections", path, false))
            s.connections.push_back(connection(c, path + "/connections/" + std::to_string(i++)));
        if (j.contains("output")) s.output = string(j.at("output"), path + "/output");
        return s;
    }

private:
    static void expect_object(const json& j, const std::string& path) {
        if (!j.is_object()) throw SchemaError("expected an object", path);
    }

    static void allow_only(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
        for (const auto& [key, value] : j.items()) {
            bool known = false;
            for (const char* k : keys) known = known || key == k;
            if (!known) throw SchemaError("unknown field '" + key + "'", path);
        }
    }

    static const json& field(const json& j, const char* key, const std::string& path) {
        if (!j.contains(key)) throw SchemaError(std::string("missing field '") + key + "'", path);
        return j.at(key);
    }

    static json array(const json& j, const char* key, const std::string& path, bool required = true) {
        if (!j.contains(key)) {
            if (required) throw SchemaError(std::string("missing field '") + key + "'", path);
            return json::array();
        }
        const auto& a = j.at(key);
        if (!a.is_array()) throw SchemaError(std::string("field '") + key + "' must be a list", path + "/" + key);
        return a;
    }

    // State labels may be written as strings or integers.
    static std::string label(const json& j, const std::string& path) {
        if (j.is_string()) return j.get<std::string>();
        if (j.is_number_integer()) return std::to_string(j.get<long long>());
        throw SchemaError("expected a state label", path);
    }

    static std::string string(const json& j, const std::string& path) {
        if (!j.is_string()) throw SchemaError("expected a string", path);
        return j.get<std::string>();
    }

    static StateSpace states(const json& j, const std::string& path) {
        if (!j.is_array()) throw SchemaError("expected a list of states", path);
        std::vector<std::string> labels;
        for (std::size_t i = 0; i < j.size(); ++i) labels.push_back(label(j[i], path + "/" + std::to_string(i)));
        return StateSpace(std::move(labels));
    }

    static std::vector<double> prior(const json& j, const std::string& path) {
        if (!j.is_array()) throw SchemaError("expected a list of probabilities", path);
        std::vector<double> p;
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (!j[i].is_number()) throw SchemaError("expected a number", path + "/" + std::to_string(i));
            p.push_back(j[i].get<double>());
        }
        return p;
    }

    static std::vector<std::vector<std::string>> rows(const json& j, const std::string& path) {
        if (!j.is_array()) throw SchemaError("expected a list of rows", path);
        std::vector<std::vector<std::string>> out;
        for (std::size_t r = 0; r < j.size(); ++r) {
            const auto rp = path + "/" + std::to_string(r);
            if (!j[r].is_array()) throw SchemaError("expected a row list", rp);
            std::vector<std::string> row;
            for (std::size_t k = 0; k < j[r].size(); ++k) row.push_back(label(j[r][k], rp + "/" + std::to_string(k)));
            out.push_back(std::move(row));
        }
        return out;
    }

    static Port port(const json& j, const std::string& path) {
        expect_object(j, path);
        allow_only(j, path, {"name", "states"});
        return Port{string(field(j, "name", path), path + "/name"), states(field(j, "states", path), path + "/states")};
    }

    SystemInput system_input(const json& j, const std::string& path) {
        expect_object(j, path);
        allow_only(j, path, {"name", "states", "prior"});
        SystemInput si;
        si.name = string(field(j, "name", path), path + "/name");
        si.states = states(field(j, "states", path), path + "/states");
        if (j.contains("prior")) si.prior = prior(j.at("prior"), path + "/prior");
        return si;
    }

    ComponentSpec component(const json& j, const std::string& path) {
        expect_object(j, path);
        allow_only(j, path, {"id", "inputs", "output", "mode", "behavior", "refinement"});
        ComponentSpec c;
        c.id = string(field(j, "id", path), path + "/id");
        for (std::size_t i = 0; const auto& p : array(j, "inputs", path))
            c.inputs.push_back(port(p, path + "/inputs/" + std::to_string(i++)));
        const auto& out = field(j, "output", path);
        if (out.is_array()) {
            if (out.empty()) throw SchemaError("component needs an output", path + "/output");
            c.output = port(out[0], path + "/output/0");
            for (std::size_t i = 1; i < out.size(); ++i)
                c.extra_outputs.push_back(port(out[i], path + "/output/" + std::to_string(i)));
        } else {
            c.output = port(out, path + "/output");
        }

        const auto& mode = field(j, "mode", path);
        expect_object(mode, path + "/mode");
        allow_only(mode, path + "/mode", {"name", "states", "prior"});
        if (mode.contains("name")) c.mode.name = string(mode.at("name"), path + "/mode/name");
        c.mode.states = states(field(mode, "states", path + "/mode"), path + "/mode/states");

        const bool has_behavior = j.contains("behavior");
        const bool has_refinement = j.contains("refinement");
        if (has_behavior == has_refinement)
            throw SchemaError("component needs exactly one of 'behavior' or 'refinement'", path);
        if (has_behavior) {
            const auto& b = j.at("behavior");
            const auto bp = path + "/behavior";
            expect_object(b, bp);
            allow_only(b, bp, {"table"});
            AtomicBehavior atomic;
            atomic.function_table.rows = rows(field(b, "table", bp), bp + "/table");
            if (mode.contains("prior")) atomic.mode_prior = prior(mode.at("prior"), path + "/mode/prior");
            c.body = std::move(atomic);
        } else {
            const auto& r = j.at("refinement");
            const auto rp = path + "/refinement";
            expect_object(r, rp);
            allow_only(r, rp, {"schematic", "abstraction"});
            Refinement ref;
            ref.sub_schematic = std::make_shared<const Schematic>(schematic(field(r, "schematic", rp), rp + "/schematic"));
            const auto& ab = field(r, "abstraction", rp);
            if (ab.is_string()) {
                if (ab.get<std::string>() != "any_broken")
                    throw SchemaError("unknown abstraction rule '" + ab.get<std::string>() + "'", rp + "/abstraction");
                ref.abstraction = AnyBroken{};
            } else {
                expect_object(ab, rp + "/abstraction");
                allow_only(ab, rp + "/abstraction", {"table"});
                ref.abstraction = AbstractionTable{rows(field(ab, "table", rp + "/abstraction"), rp + "/abstraction/table")};
            }
            c.body = std::move(ref);
        }
        return c;
    }

    static std::pair<std::string, std::string> endpoint(const json& j, const std::string& path) {
        const auto s = string(j, path);
        const auto dot = s.rfind('.');
        if (dot == std::string::npos || dot == 0 || dot + 1 == s.size())
            throw SchemaError("expected 'component.port'", path);
        return {s.substr(0, dot), s.substr(dot + 1)};
    }

    static Connection connection(const json& j, const std::string& path) {
        expect_object(j, path);
        allow_only(j, path, {"from", "to"});
        auto [fc, fp] = endpoint(field(j, "from", path), path + "/from");
        auto [tc, tp] = endpoint(field(j, "to", path), path + "/to");
        return Connection{fc, fp, tc, tp};
    }
};

ordered_json write_states(const StateSpace& ss) { return ordered_json(ss.labels()); }

ordered_json write_port(const Port& p) {
    ordered_json j;
    j["name"] = p.name;
    j["states"] = write_states(p.states);
    return j;
}

ordered_json write_schematic(const Schematic& s) {
    ordered_json j;
    j["system_inputs"] = ordered_json::array();
    for (const auto& si : s.system_inputs) {
        ordered_json e;
        e["name"] = si.name;
        e["states"] = write_states(si.states);
        if (si.prior) e["prior"] = *si.prior;
        j["system_inputs"].push_back(e);
    }
    j["components"] = ordered_json::array();
    for (const auto& c : s.components) {
        ordered_json e;
        e["id"] = c.id;
        e["inputs"] = ordered_json::array();
        for (const auto& p : c.inputs) e["inputs"].push_back(write_port(p));
        if (c.extra_outputs.empty()) {
            e["output"] = write_port(c.output);
        } else {
            e["output"] = ordered_json::array({write_port(c.output)});
            for (const auto& p : c.extra_outputs) e["output"].push_back(write_port(p));
        }
        ordered_json mode;
        if (c.mode.name != "mode") mode["name"] = c.mode.name;
        mode["states"] = write_states(c.mode.states);
        if (c.is_atomic()) {
            if (!c.atomic().mode_prior.empty()) mode["prior"] = c.atomic().mode_prior;
            e["mode"] = mode;
            e["behavior"]["table"] = c.atomic().function_table.rows;
        } else {
            e["mode"] = mode;
            const auto& ref = c.refinement();
            e["refinement"]["schematic"] = write_schematic(*ref.sub_schematic);
            if (std::holds_alternative<AnyBroken>(ref.abstraction))
                e["refinement"]["abstraction"] = "any_broken";
            else
                e["refinement"]["abstraction"]["table"] = std::get<AbstractionTable>(ref.abstraction).rows;
        }
        j["components"].push_back(e);
    }
    j["connections"] = ordered_json::array();
    for (const auto& c : s.connections) {
        ordered_json e;
        e["from"] = c.from_component + "." + c.from_port;
        e["to"] = c.to_component + "." + c.to_port;
        j["connections"].push_back(e);
    }
    if (s.output) j["output"] = *s.output;
    return j;
}

}  // namespace

Schematic parse_schematic(const std::string& text) { return Reader().schematic(parse_strict(text), ""); }

Schematic load_schematic(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_schematic(buffer.str());
}

std::string serialize_schematic(const Schematic& s) { return write_schematic(s).dump(2) + "\n"; }

}  // namespace hierax
