#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hierax/model.hpp"

namespace hierax {

struct Scope {
    enum class Kind { Global, Visible, Level };
    Kind kind = Kind::Visible;
    std::string level;

    static Scope global() { return {Kind::Global, {}}; }
    static Scope visible() { return {Kind::Visible, {}}; }
    static Scope at(std::string level) { return {Kind::Level, std::move(level)}; }
};

struct VariablePosterior {
    std::string name;
    std::string level;
    std::vector<std::string> states;
    std::vector<double> probabilities;
    double p_ok = 0.0;
};

struct PosteriorReport {
    bool impossible = false;
    std::vector<VariablePosterior> modes;      // ascending probability of the ok state
    std::vector<VariablePosterior> variables;  // every visible variable, by name
    std::optional<double> evidence_probability;
};

/// Evidence, calibration and expansion state over one model. Shafer-Shenoy
/// messages, each directed message reused until evidence on its sending side
/// changes.
class Session {
public:
    explicit Session(std::shared_ptr<const Model> model);

    const Model& model() const { return *model_; }

    void assert_evidence(const std::string& var, const std::string& state);
    void retract(const std::string& var);
    const Observation& evidence() const { return evidence_; }

    /// Returns false when the evidence turned out impossible; potentials are
    /// then restored to the last consistent state.
    bool propagate(const Scope& scope = Scope::visible());

    /// False when already expanded. Throws Error when there is no refinement
    /// and HiddenVariable when the enclosing level is not visible.
    bool expand(const std::string& path);
    bool collapse(const std::string& path);
    const std::set<std::string>& expanded() const { return expanded_; }

    bool impossible() const { return impossible_; }
    bool level_visible(const std::string& level) const;
    bool visible(VarId v) const;
    bool dirty(const std::string& level) const { return dirty_.count(level) > 0; }

    std::vector<double> posterior(const std::string& var) const;
    std::vector<double> posterior_from(VarId v, std::size_t clique) const;
    PosteriorReport diagnose() const;
    std::optional<double> evidence_probability() const;

    const std::map<std::string, std::size_t>& counters() const { return counters_; }
    void reset_counters();

    /// Largest disagreement between the two separator marginals over edges
    /// whose endpoints both lie in `scope`.
    double separator_inconsistency(const Scope& scope) const;
    std::vector<Factor> messages() const;

private:
    struct State {
        std::vector<Factor> psi;
        std::vector<Factor> msg;  // index 2*edge + (sender is edge.b)
        std::vector<bool> valid;
        std::vector<double> norm;
        std::map<VarId, std::size_t> applied;
    };

    std::size_t slot(std::size_t edge, std::size_t sender) const;
    std::size_t other(std::size_t edge, std::size_t end) const;
    void ensure(std::size_t edge, std::size_t sender);
    Factor belief(std::size_t clique) const;
    bool incoming_valid(std::size_t clique) const;
    void sync_evidence();
    void invalidate_away(std::size_t from, std::optional<std::size_t> through_edge = std::nullopt);
    std::vector<std::size_t> scope_cliques(const Scope& scope) const;
    std::set<std::string> scope_levels(const Scope& scope) const;
    bool pass(const std::vector<std::size_t>& cliques, std::optional<std::pair<std::size_t, std::size_t>> first);
    VariablePosterior report_entry(VarId v) const;

    std::shared_ptr<const Model> model_;
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj_;
    std::vector<Factor> base_;
    State state_;
    State snapshot_;
    Observation evidence_;
    std::set<std::string> expanded_;
    std::set<std::string> dirty_;
    std::map<std::string, std::size_t> counters_;
    bool impossible_ = false;
};

}  // namespace hierax
