#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hierax/inference.hpp"

namespace httplib {
class Server;
}

namespace hierax::service {

using nlohmann::json;

/// Nine fractional digits, the wire format of every probability.
std::string format_probability(double p);

json report_json(const PosteriorReport& r);
/// Canonical rendering shared by the CLI and the HTTP service.
std::string render_report(const PosteriorReport& r);
json counters_json(const Session& s);
json structure_json(const Model& m);
json validation_json(const ValidationReport& r);

struct SessionHandle {
    std::string id;
    std::string model_id;
    std::mutex guard;
    Session session;

    SessionHandle(std::string id, std::string model_id, Session s)
        : id(std::move(id)), model_id(std::move(model_id)), session(std::move(s)) {}
};

class Registry {
public:
    explicit Registry(std::uint64_t seed, std::optional<std::filesystem::path> model_dir = std::nullopt);

    std::string add_model(std::shared_ptr<const Model> model, const std::string& document);
    std::shared_ptr<const Model> model(const std::string& id) const;
    std::shared_ptr<SessionHandle> open_session(const std::string& model_id);
    std::shared_ptr<SessionHandle> session(const std::string& id) const;

private:
    std::string next_id(const char* prefix);

    mutable std::mutex mutex_;
    std::mt19937_64 rng_;
    std::optional<std::filesystem::path> model_dir_;
    std::map<std::string, std::shared_ptr<const Model>> models_;
    std::map<std::string, std::shared_ptr<SessionHandle>> sessions_;
};

void install_routes(httplib::Server& server, Registry& registry);

struct DiagnoseRequest {
    std::vector<std::pair<std::string, std::string>> evidence;
    std::vector<std::string> expand;
    Scope scope = Scope::visible();
};

/// Batch drill-down: assert what is visible, propagate, then for each
/// expansion expand, assert what became visible and propagate again. Stops at
/// the first impossible propagation. Throws HiddenVariable if evidence is
/// left unassigned at the end.
Session run_diagnosis(std::shared_ptr<const Model> model, const DiagnoseRequest& request);

}  // namespace hierax::service
