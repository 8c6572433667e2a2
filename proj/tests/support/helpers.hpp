#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hierax/schematic.hpp"

#ifndef HIERAX_FIXTURE_DIR
#define HIERAX_FIXTURE_DIR "fixtures"
#endif

namespace hierax::testing {

inline std::string fixture(const std::string& name) { return std::string(HIERAX_FIXTURE_DIR) + "/" + name; }

inline const StateSpace& boolean() {
    static const StateSpace s{"0", "1"};
    return s;
}

inline const StateSpace& ok_broken() {
    static const StateSpace s{"ok", "broken"};
    return s;
}

/// Boolean gate over the named input ports with a stuck-at-0 broken mode.
inline ComponentSpec gate(const std::string& id, const std::vector<std::string>& ports, double p_ok,
                          const std::function<int(const std::vector<int>&)>& f) {
    ComponentSpec c;
    c.id = id;
    for (const auto& p : ports) c.inputs.push_back({p, boolean()});
    c.output = {"out", boolean()};
    c.mode.states = ok_broken();
    AtomicBehavior b;
    const std::size_t n = ports.size();
    for (std::size_t bits = 0; bits < (std::size_t{1} << n); ++bits) {
        std::vector<int> in(n);
        for (std::size_t i = 0; i < n; ++i) in[i] = static_cast<int>((bits >> (n - 1 - i)) & 1U);
        for (const std::string m : {"ok", "broken"}) {
            std::vector<std::string> row;
            for (int x : in) row.push_back(std::to_string(x));
            row.push_back(m);
            row.push_back(m == "ok" ? std::to_string(f(in)) : "0");
            b.function_table.rows.push_back(row);
        }
    }
    b.mode_prior = {p_ok, 1.0 - p_ok};
    c.body = b;
    return c;
}

inline int and_of(const std::vector<int>& v) {
    int r = 1;
    for (int x : v) r &= x;
    return r;
}
inline int or_of(const std::vector<int>& v) {
    int r = 0;
    for (int x : v) r |= x;
    return r;
}
inline int not_of(const std::vector<int>& v) { return 1 - v.at(0); }

}  // namespace hierax::testing
