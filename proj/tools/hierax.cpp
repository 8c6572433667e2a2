#include <cstdio>
#include <iostream>
#include <random>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <httplib.h>

#include "hierax/error.hpp"
#include "hierax/oracle.hpp"
#include "hierax/service.hpp"

using namespace hierax;

namespace {

enum Exit { kOk = 0, kInput = 1, kImpossible = 2, kVerification = 3 };

std::pair<std::string, std::string> split_assignment(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) throw Error("evidence must look like VAR=STATE, got '" + text + "'");
    return {text.substr(0, eq), text.substr(eq + 1)};
}

Schematic load_accepted(const std::string& file) {
    auto s = load_schematic(file);
    const auto report = validate_schematic(s);
    if (!report.accepted()) {
        for (const auto& v : report.violations)
            std::cerr << to_string(v.kind) << (v.path.empty() ? "" : " at " + v.path) << ": " << v.message << "\n";
        throw ValidationError(fmt::format("{} violation(s)", report.violations.size()));
    }
    return s;
}

int cmd_validate(const std::string& file) {
    const auto report = validate_schematic(load_schematic(file));
    for (const auto& v : report.violations)
        std::cout << to_string(v.kind) << (v.path.empty() ? "" : " at " + v.path) << ": " << v.message << "\n";
    for (const auto& w : report.warnings) std::cout << "warning: " << w << "\n";
    if (!report.accepted()) return kInput;
    std::cout << "ok\n";
    return kOk;
}

int cmd_compile(const std::string& file, const BuildOptions& options) {
    auto model = build_model(load_accepted(file), options);
    std::cout << "# compiled network\n" << to_text(model->compiled) << "# composite join tree\n"
              << to_text(model->composite, model->net());
    return kOk;
}

int cmd_diagnose(const std::string& file, const BuildOptions& options, const service::DiagnoseRequest& request) {
    auto model = build_model(load_accepted(file), options);
    const auto session = service::run_diagnosis(model, request);
    std::cout << service::render_report(session.diagnose()) << "\n";
    return session.impossible() ? kImpossible : kOk;
}

int cmd_oracle(const std::string& file, const BuildOptions& options, const Observation& obs,
               const std::vector<std::string>& queries) {
    const auto t = translate(load_accepted(file), {options.explicit_input_nodes});
    const auto joint = enumerate_joint(t.net);
    const auto result = condition_joint(joint, obs);
    auto names = queries;
    if (names.empty())
        for (const auto& [name, _] : result.posteriors) names.push_back(name);
    for (const auto& name : names) {
        auto it = result.posteriors.find(name);
        if (it == result.posteriors.end()) throw UnknownVariable("unknown variable '" + name + "'");
        std::cout << name << " (" << fmt::format("{:.10f}", fmt::join(it->second, ", ")) << ")\n";
    }
    return kOk;
}

int cmd_serve(const std::string& host, int port, std::uint64_t seed, const std::string& model_dir) {
    service::Registry registry(seed, model_dir.empty() ? std::nullopt : std::optional<std::filesystem::path>(model_dir));
    httplib::Server server;
    service::install_routes(server, registry);
    if (port == 0) port = server.bind_to_any_port(host);
    else if (!server.bind_to_port(host, port)) throw Error(fmt::format("cannot bind {}:{}", host, port));
    std::cout << fmt::format("listening on {}:{}", host, port) << std::endl;
    server.listen_after_bind();
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hierarchical model-based diagnosis"};
    app.require_subcommand(1);

    std::string file;
    std::vector<std::string> evidence, expand, queries;
    std::string scope = "visible";
    BuildOptions options;
    int port = 8080;
    std::uint64_t seed = std::random_device{}();
    std::string host = "127.0.0.1", model_dir;

    auto with_file = [&](CLI::App* sub) {
        sub->add_option("file", file, "schematic document")->required()->check(CLI::ExistingFile);
        sub->add_flag("--explicit-input-nodes", options.explicit_input_nodes, "materialize equality input nodes");
        return sub;
    };
    auto* validate = app.add_subcommand("validate", "report schematic violations");
    validate->add_option("file", file, "schematic document")->required()->check(CLI::ExistingFile);
    auto* compile = with_file(app.add_subcommand("compile", "print the compiled network and join trees"));
    compile->add_flag("--merge-subsets", options.merge_subsets, "merge nested cliques across links");
    auto* diagnose = with_file(app.add_subcommand("diagnose", "posterior fault report"));
    diagnose->add_option("-e,--evidence", evidence, "VAR=STATE");
    diagnose->add_option("--expand", expand, "component path to drill into");
    diagnose->add_option("--scope", scope, "propagation scope")->check(CLI::IsMember({"visible", "global"}));
    auto* oracle = with_file(app.add_subcommand("oracle", "brute-force posteriors over the full network"));
    oracle->add_option("-e,--evidence", evidence, "VAR=STATE");
    oracle->add_option("--query", queries, "variable to print");
    auto* serve = app.add_subcommand("serve", "run the HTTP service");
    serve->add_option("--port", port, "port, 0 for any free one");
    serve->add_option("--host", host, "bind address");
    serve->add_option("--seed", seed, "seed for model and session ids");
    serve->add_option("--model-dir", model_dir, "write-through directory for model documents");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*validate) return cmd_validate(file);
        if (*compile) return cmd_compile(file, options);
        if (*diagnose) {
            service::DiagnoseRequest request;
            for (const auto& e : evidence) request.evidence.push_back(split_assignment(e));
            request.expand = expand;
            request.scope = scope == "global" ? Scope::global() : Scope::visible();
            return cmd_diagnose(file, options, request);
        }
        if (*oracle) {
            Observation obs;
            for (const auto& e : evidence) obs.insert(split_assignment(e));
            return cmd_oracle(file, options, obs, queries);
        }
        if (*serve) return cmd_serve(host, port, seed, model_dir);
    } catch (const ImpossibleEvidence& e) {
        std::cerr << "impossible evidence: " << e.what() << "\n";
        return kImpossible;
    } catch (const VerificationError& e) {
        std::cerr << "verification failed: " << e.what() << "\n";
        return kVerification;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInput;
    }
    return kOk;
}
