#include "hierax/service.hpp"

#include <fstream>

#include <fmt/format.h>
#include <httplib.h>

#include "hierax/error.hpp"

namespace hierax::service {

std::string format_probability(double p) {
    if (p == 0.0) p = 0.0;  // no negative zero on the wire
    return fmt::format("{:.9f}", p);
}

namespace {

json posterior_json(const VariablePosterior& p) {
    json probs = json::array();
    for (double x : p.probabilities) probs.push_back(format_probability(x));
    return {{"variable", p.name}, {"level", p.level}, {"states", p.states}, {"probabilities", probs},
            {"p_ok", format_probability(p.p_ok)}};
}

json component_json(const Model& m, const Schematic& s, const std::string& prefix) {
    json out = json::array();
    const auto& idx = m.index();
    const auto& net = m.net();
    for (const auto& c : s.components) {
        const auto path = prefix.empty() ? c.id : prefix + "." + c.id;
        json node;
        node["id"] = path;
        node["level"] = idx.component_level.at(path);
        node["refined"] = !c.is_atomic();
        node["mode"] = net.name(idx.mode_of_component.at(path));
        node["mode_states"] = c.mode.states.labels();
        json inputs = json::array();
        for (const auto& in : c.inputs) inputs.push_back(net.name(idx.var_of_port.at({path, in.name})));
        node["inputs"] = inputs;
        node["output"] = net.name(idx.var_of_port.at({path, c.output.name}));
        node["children"] = c.is_atomic() ? json::array() : component_json(m, *c.refinement().sub_schematic, path);
        out.push_back(std::move(node));
    }
    return out;
}

json error_json(const std::string& message) { return {{"error", message}}; }

void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(2), "application/json");
}

json parse_body(const httplib::Request& req) {
    try {
        return req.body.empty() ? json::object() : json::parse(req.body);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("request body is not JSON: ") + e.what(), "");
    }
}

std::string string_field(const json& body, const char* key) {
    if (!body.is_object() || !body.contains(key) || !body[key].is_string())
        throw SchemaError(std::string("missing string field '") + key + "'", key);
    return body[key].get<std::string>();
}

std::string label_of(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    throw SchemaError("evidence states must be strings, integers or null", "");
}

// Maps engine errors onto status codes; the handler body runs under a try.
template <typename F>
void guarded(httplib::Response& res, F&& body) {
    try {
        body();
    } catch (const HiddenVariable& e) {
        reply(res, 409, error_json(e.what()));
    } catch (const DirtyScope& e) {
        reply(res, 409, error_json(e.what()));
    } catch (const VerificationError& e) {
        reply(res, 422, error_json(e.what()));
    } catch (const Error& e) {
        reply(res, 400, error_json(e.what()));
    }
}

json session_view(const SessionHandle& h) {
    json evidence = json::object();
    for (const auto& [k, v] : h.session.evidence()) evidence[k] = v;
    json dirty = json::array();
    for (const auto& [id, _] : h.session.model().composite.levels)
        if (h.session.dirty(id)) dirty.push_back(id);
    return {{"session_id", h.id},
            {"model_id", h.model_id},
            {"evidence", evidence},
            {"expanded", h.session.expanded()},
            {"dirty", dirty},
            {"impossible", h.session.impossible()},
            {"counters", counters_json(h.session)}};
}

}  // namespace

json report_json(const PosteriorReport& r) {
    json out;
    out["impossible"] = r.impossible;
    out["evidence_probability"] = r.evidence_probability ? json(format_probability(*r.evidence_probability)) : json();
    json modes = json::array();
    for (const auto& m : r.modes) modes.push_back(posterior_json(m));
    out["modes"] = modes;
    json vars = json::object();
    for (const auto& v : r.variables) {
        json probs = json::array();
        for (double x : v.probabilities) probs.push_back(format_probability(x));
        vars[v.name] = probs;
    }
    out["variables"] = vars;
    return out;
}

std::string render_report(const PosteriorReport& r) { return report_json(r).dump(2); }

json counters_json(const Session& s) {
    json out = json::object();
    for (const auto& [level, n] : s.counters()) out[level] = n;
    return out;
}

json structure_json(const Model& m) {
    const auto& net = m.net();
    const auto& idx = m.index();
    json inputs = json::array();
    for (const auto& si : m.schematic.system_inputs) inputs.push_back({{"name", si.name}, {"states", si.states.labels()}});
    json vars = json::object();
    for (auto v : net.variables())
        vars[net.name(v)] = {{"states", net.states(v).labels()}, {"level", idx.owner_level.at(v)}};
    json levels = json::array();
    for (const auto& l : idx.levels) {
        const auto& view = m.composite.levels.at(l);
        levels.push_back({{"id", l}, {"cliques", view.cliques.size()}, {"depth", idx.depth(l)}});
    }
    return {{"system_inputs", inputs}, {"components", component_json(m, m.schematic, "")},
            {"variables", vars}, {"levels", levels}, {"links", m.composite.links.size()}};
}

json validation_json(const ValidationReport& r) {
    json violations = json::array();
    for (const auto& v : r.violations)
        violations.push_back({{"kind", to_string(v.kind)}, {"path", v.path}, {"message", v.message}});
    return {{"violations", violations}, {"warnings", r.warnings}};
}

Registry::Registry(std::uint64_t seed, std::optional<std::filesystem::path> model_dir)
    : rng_(seed), model_dir_(std::move(model_dir)) {
    if (model_dir_) std::filesystem::create_directories(*model_dir_);
}

std::string Registry::next_id(const char* prefix) {
    return fmt::format("{}-{:012x}", prefix, rng_() & 0xffffffffffffULL);
}

std::string Registry::add_model(std::shared_ptr<const Model> model, const std::string& document) {
    std::lock_guard lock(mutex_);
    auto id = next_id("m");
    while (models_.count(id)) id = next_id("m");
    if (model_dir_) std::ofstream(*model_dir_ / (id + ".json")) << document;
    models_[id] = std::move(model);
    return id;
}

std::shared_ptr<const Model> Registry::model(const std::string& id) const {
    std::lock_guard lock(mutex_);
    auto it = models_.find(id);
    return it == models_.end() ? nullptr : it->second;
}

std::shared_ptr<SessionHandle> Registry::open_session(const std::string& model_id) {
    auto m = model(model_id);
    if (!m) return nullptr;
    Session s(m);
    std::lock_guard lock(mutex_);
    auto id = next_id("s");
    while (sessions_.count(id)) id = next_id("s");
    auto h = std::make_shared<SessionHandle>(id, model_id, std::move(s));
    sessions_[id] = h;
    return h;
}

std::shared_ptr<SessionHandle> Registry::session(const std::string& id) const {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
}

void install_routes(httplib::Server& server, Registry& registry) {
    server.Post("/models", [&](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            Schematic s;
            try {
                s = parse_schematic(req.body);
            } catch (const ParseError& e) {
                reply(res, 400, {{"error", e.what()}, {"line", e.line()}, {"column", e.column()}});
                return;
            }
            const auto report = validate_schematic(s);
            if (!report.accepted()) {
                reply(res, 400, validation_json(report));
                return;
            }
            BuildOptions options;
            options.explicit_input_nodes = req.has_param("explicit_input_nodes") &&
                                           req.get_param_value("explicit_input_nodes") == "true";
            auto model = build_model(s, options);
            const auto id = registry.add_model(model, req.body);
            reply(res, 201, {{"model_id", id}, {"structure", structure_json(*model)}, {"warnings", report.warnings}});
        });
    });

    server.Get(R"(/models/([^/]+)/structure)", [&](const httplib::Request& req, httplib::Response& res) {
        auto m = registry.model(req.matches[1]);
        if (!m) return reply(res, 404, error_json("unknown model"));
        json body = structure_json(*m);
        body["model_id"] = req.matches[1];
        reply(res, 200, body);
    });

    server.Post("/sessions", [&](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto model_id = string_field(parse_body(req), "model_id");
            auto h = registry.open_session(model_id);
            if (!h) return reply(res, 404, error_json("unknown model"));
            std::lock_guard lock(h->guard);
            reply(res, 201, session_view(*h));
        });
    });

    // Every session route shares lookup, locking and error mapping.
    auto session_route = [&](auto action) {
        return [&registry, action](const httplib::Request& req, httplib::Response& res) {
            auto h = registry.session(req.matches[1]);
            if (!h) return reply(res, 404, error_json("unknown session"));
            std::lock_guard lock(h->guard);
            guarded(res, [&] { action(req, res, *h); });
        };
    };

    server.Post(R"(/sessions/([^/]+)/evidence)",
                session_route([](const httplib::Request& req, httplib::Response& res, SessionHandle& h) {
                    const json body = parse_body(req);
                    if (!body.is_object()) throw SchemaError("evidence body must be an object", "");
                    Session next = h.session;
                    for (const auto& [var, state] : body.items()) {
                        if (state.is_null()) next.retract(var);
                        else next.assert_evidence(var, label_of(state));
                    }
                    h.session = std::move(next);
                    reply(res, 200, session_view(h));
                }));

    server.Post(R"(/sessions/([^/]+)/propagate)",
                session_route([](const httplib::Request& req, httplib::Response& res, SessionHandle& h) {
                    const json body = parse_body(req);
                    Scope scope = Scope::visible();
                    if (body.contains("scope")) {
                        const auto name = string_field(body, "scope");
                        if (name == "global") scope = Scope::global();
                        else if (name != "visible") scope = Scope::at(name);
                    }
                    h.session.propagate(scope);
                    reply(res, 200, session_view(h));
                }));

    server.Post(R"(/sessions/([^/]+)/expand)",
                session_route([](const httplib::Request& req, httplib::Response& res, SessionHandle& h) {
                    const auto path = string_field(parse_body(req), "component");
                    const bool changed = h.session.expand(path);
                    json view = session_view(h);
                    if (!changed) view["notice"] = "'" + path + "' is already expanded";
                    reply(res, 200, view);
                }));

    server.Post(R"(/sessions/([^/]+)/collapse)",
                session_route([](const httplib::Request& req, httplib::Response& res, SessionHandle& h) {
                    const auto path = string_field(parse_body(req), "component");
                    const bool changed = h.session.collapse(path);
                    json view = session_view(h);
                    if (!changed) view["notice"] = "'" + path + "' is not expanded";
                    reply(res, 200, view);
                }));

    server.Get(R"(/sessions/([^/]+)/posteriors)",
               session_route([](const httplib::Request&, httplib::Response& res, SessionHandle& h) {
                   const auto report = h.session.diagnose();
                   reply(res, 200, {{"counters", counters_json(h.session)}, {"report", report_json(report)}});
               }));

    server.Get(R"(/sessions/([^/]+)/counters)",
               session_route([](const httplib::Request&, httplib::Response& res, SessionHandle& h) {
                   reply(res, 200, {{"counters", counters_json(h.session)}});
               }));
}

Session run_diagnosis(std::shared_ptr<const Model> model, const DiagnoseRequest& request) {
    Session s(std::move(model));
    auto pending = request.evidence;
    auto assert_visible = [&] {
        std::erase_if(pending, [&](const auto& e) {
            if (!s.visible(s.model().net().id(e.first))) return false;
            s.assert_evidence(e.first, e.second);
            return true;
        });
    };
    assert_visible();
    if (!s.propagate(request.scope)) return s;
    for (const auto& path : request.expand) {
        s.expand(path);
        if (s.impossible()) return s;
        assert_visible();
        if (!s.propagate(request.scope)) return s;
    }
    if (!pending.empty()) throw HiddenVariable("'" + pending.front().first + "' is hidden; pass --expand for its component");
    return s;
}

}  // namespace hierax::service
