#include "hierax/model.hpp"

#include "hierax/error.hpp"
#include "hierax/transform.hpp"

namespace hierax {

std::shared_ptr<const Model> build_model(const Schematic& s, const BuildOptions& options) {
    auto m = std::make_shared<Model>();
    m->schematic = s;
    m->options = options;
    m->translation = translate(s, {options.explicit_input_nodes});
    const auto problems = m->translation.net.check();
    if (!problems.empty()) throw VerificationError("translated network is malformed: " + problems.front());
    m->compiled = compile_level(m->net(), m->index());
    m->composite = build_composite(m->net(), m->index(), {options.merge_subsets});
    return m;
}

}  // namespace hierax
