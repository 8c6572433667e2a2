#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace hierax {

/// Ordered, distinct state labels of a discrete variable.
class StateSpace {
public:
    StateSpace() = default;
    explicit StateSpace(std::vector<std::string> labels) : labels_(std::move(labels)) {}
    StateSpace(std::initializer_list<std::string> labels) : labels_(labels) {}

    const std::vector<std::string>& labels() const { return labels_; }
    std::size_t size() const { return labels_.size(); }
    const std::string& label(std::size_t i) const { return labels_.at(i); }
    std::optional<std::size_t> index_of(const std::string& label) const;

    // Index of the designated healthy state: "ok" when present, else the first.
    std::size_t ok_index() const;
    // "broken" when present, else the first state that is not ok_index().
    std::size_t broken_index() const;

    friend bool operator==(const StateSpace&, const StateSpace&) = default;

private:
    std::vector<std::string> labels_;
};

struct Port {
    std::string name;
    StateSpace states;
    friend bool operator==(const Port&, const Port&) = default;
};

struct ModeSpec {
    std::string name = "mode";
    StateSpace states;
    friend bool operator==(const ModeSpec&, const ModeSpec&) = default;
};

// Rows are label tuples [i1, ..., in, m, o]; semantic checks happen in validate_schematic.
struct FunctionTable {
    std::vector<std::vector<std::string>> rows;
    friend bool operator==(const FunctionTable&, const FunctionTable&) = default;
};

struct AtomicBehavior {
    FunctionTable function_table;
    std::vector<double> mode_prior;  // empty when the document omitted it
    friend bool operator==(const AtomicBehavior&, const AtomicBehavior&) = default;
};

struct AnyBroken {
    friend bool operator==(const AnyBroken&, const AnyBroken&) = default;
};

// Rows are [m_sub1, ..., m_subn, m_parent] in sub-schematic component order.
struct AbstractionTable {
    std::vector<std::vector<std::string>> rows;
    friend bool operator==(const AbstractionTable&, const AbstractionTable&) = default;
};

using Abstraction = std::variant<AnyBroken, AbstractionTable>;

struct Schematic;

struct Refinement {
    std::shared_ptr<const Schematic> sub_schematic;
    Abstraction abstraction;
    friend bool operator==(const Refinement& a, const Refinement& b);
};

struct ComponentSpec {
    std::string id;
    std::vector<Port> inputs;
    Port output;
    std::vector<Port> extra_outputs;  // only populated for invalid documents
    ModeSpec mode;
    std::variant<AtomicBehavior, Refinement> body;

    bool is_atomic() const { return std::holds_alternative<AtomicBehavior>(body); }
    const AtomicBehavior& atomic() const { return std::get<AtomicBehavior>(body); }
    const Refinement& refinement() const { return std::get<Refinement>(body); }
    std::optional<std::size_t> input_index(const std::string& port) const;

    friend bool operator==(const ComponentSpec&, const ComponentSpec&) = default;
};

struct Connection {
    std::string from_component;
    std::string from_port;
    std::string to_component;
    std::string to_port;
    friend bool operator==(const Connection&, const Connection&) = default;
};

struct SystemInput {
    std::string name;
    StateSpace states;
    std::optional<std::vector<double>> prior;
    friend bool operator==(const SystemInput&, const SystemInput&) = default;
};

struct Schematic {
    std::vector<SystemInput> system_inputs;
    std::vector<ComponentSpec> components;
    std::vector<Connection> connections;
    // Component whose output is this schematic's system output. Refinements
    // fall back to the unique component whose output feeds nothing.
    std::optional<std::string> output;

    std::optional<std::size_t> component_index(const std::string& id) const;
    std::optional<std::size_t> system_input_index(const std::string& name) const;

    friend bool operator==(const Schematic&, const Schematic&) = default;
};

inline bool operator==(const Refinement& a, const Refinement& b) {
    if (!(a.abstraction == b.abstraction)) return false;
    if (a.sub_schematic == b.sub_schematic) return true;
    if (!a.sub_schematic || !b.sub_schematic) return false;
    return *a.sub_schematic == *b.sub_schematic;
}

using Observation = std::map<std::string, std::string>;

/// Where a component input takes its value from.
struct InputSource {
    enum class Kind { Unbound, SystemInput, Component } kind = Kind::Unbound;
    std::size_t index = 0;  // into system_inputs or components
    int drivers = 0;        // number of bindings seen; >1 is a defect
};

/// Per component, per input port: the resolved source.
std::vector<std::vector<InputSource>> wire(const Schematic& s);

/// Index of the component providing the schematic's system output, if resolvable.
std::optional<std::size_t> resolve_output(const Schematic& s);

/// Component indices in a topological order, or nullopt if the wiring is cyclic.
std::optional<std::vector<std::size_t>> topological_components(const Schematic& s);

// ---------------------------------------------------------------------------
// Validation

inline constexpr std::size_t kMaxSubcomponents = 12;

enum class ViolationKind {
    Cycle,
    DanglingPort,
    MultiplyDriven,
    StateSpaceMismatch,
    RefinementInterfaceMismatch,
    MultiOutput,
    AbstractionNotTotal,
    TableNotTotal,
    BadPrior,
    BadStateSpace,
    DuplicateId,
    UnknownReference,
    TooManySubcomponents,
};

const char* to_string(ViolationKind kind);

struct Violation {
    ViolationKind kind;
    std::string path;  // dot-path of the offending element, empty for top level
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    std::vector<std::string> warnings;

    bool accepted() const { return violations.empty(); }
    std::size_t count(ViolationKind kind) const;
};

ValidationReport validate_schematic(const Schematic& s);

// ---------------------------------------------------------------------------
// Flattening

struct FlattenResult {
    Schematic flat;
    // Hierarchical component path -> dot-paths of its leaf subcomponents.
    std::map<std::string, std::set<std::string>> hierarchy;
};

/// Replaces every refinement by its subcomponents, recursively. Throws
/// ValidationError when the input is not accepted.
FlattenResult flatten(const Schematic& s);

// ---------------------------------------------------------------------------
// Document I/O (JSON)

Schematic parse_schematic(const std::string& text);
Schematic load_schematic(const std::string& path);
std::string serialize_schematic(const Schematic& s);

}  // namespace hierax
