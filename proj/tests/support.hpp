#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dyn/tassert.hpp"
#include "dyn/typelattice.hpp"

namespace dyn::test {

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline std::string corpus(const std::string& name) { return slurp(std::string(DYN_CORPUS_DIR) + "/" + name); }

inline std::vector<std::string> corpus_programs() {
    return {"counter.dyn", "evaluator.dyn", "registry.dyn", "shapes.dyn", "stack.dyn"};
}

inline UnionType random_type(std::mt19937_64& rng, const UniverseRef& u) {
    uint64_t bits = std::uniform_int_distribution<uint64_t>(0, u->top_bits())(rng) & u->top_bits();
    return UnionType(u, bits);
}

inline UnionType random_nonempty(std::mt19937_64& rng, const UniverseRef& u) {
    for (;;) {
        auto t = random_type(rng, u);
        if (!t.is_bottom()) return t;
    }
}

inline TAsrt random_tasrt(std::mt19937_64& rng, const UniverseRef& u, const std::vector<Subject>& subjects,
                          int max_disjuncts = 3) {
    int n = std::uniform_int_distribution<int>(0, max_disjuncts)(rng);
    std::vector<Disjunct> ds;
    for (int i = 0; i < n; ++i) {
        Disjunct d;
        for (auto& s : subjects)
            if (std::bernoulli_distribution(0.6)(rng)) d[s] = random_type(rng, u);
        ds.push_back(d);
    }
    return TAsrt(u, ds);
}

// Formula text over the subjects with opaque atoms "a0" and "a1".
inline std::string random_formula(std::mt19937_64& rng, const UniverseRef& u, const std::vector<Subject>& subjects,
                                  int depth) {
    auto pick = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };
    if (depth == 0 || pick(3) == 0) {
        switch (pick(5)) {
            case 0: return "opaque(\"a" + std::to_string(pick(2)) + "\")";
            case 1: return pick(2) ? "true" : "false";
            default:
                return "[" + subjects[static_cast<size_t>(pick(static_cast<int>(subjects.size())))] + "] in " +
                       random_type(rng, u).str();
        }
    }
    switch (pick(3)) {
        case 0: return "not (" + random_formula(rng, u, subjects, depth - 1) + ")";
        case 1:
            return "(" + random_formula(rng, u, subjects, depth - 1) + " and " +
                   random_formula(rng, u, subjects, depth - 1) + ")";
        default:
            return "(" + random_formula(rng, u, subjects, depth - 1) + " or " +
                   random_formula(rng, u, subjects, depth - 1) + ")";
    }
}

// Every assignment of a class name (or "Null") to each subject.
inline std::vector<std::map<Subject, std::string>> all_states(const UniverseRef& u, const std::vector<Subject>& subjects) {
    std::vector<std::string> names = {"Null"};
    for (auto& c : u->classes())
        if (c != "Null") names.push_back(c);
    std::vector<std::map<Subject, std::string>> out(1);
    for (auto& s : subjects) {
        std::vector<std::map<Subject, std::string>> next;
        for (auto& st : out)
            for (auto& n : names) {
                auto m = st;
                m[s] = n;
                next.push_back(m);
            }
        out = std::move(next);
    }
    return out;
}

inline StateView view(const std::map<Subject, std::string>& st) {
    return [&st](const Subject& s) -> std::optional<std::string> {
        auto it = st.find(s);
        if (it == st.end()) return std::nullopt;
        return it->second;
    };
}

}  // namespace dyn::test
