#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dyn/ast.hpp"

namespace dyn {

struct FuzzOptions {
    int max_classes = 3;
    int max_fields = 2;
    int max_methods = 3;
    int max_depth = 5;
};

// Grammar-directed program source over at most max_classes user classes; main reads x, y and z.
std::string random_program(std::mt19937_64& rng, const FuzzOptions& opts = {});

// The program with main prefixed by random assignments to its input variables.
std::string heap_variant(std::mt19937_64& rng, const std::string& source);

// One sidecar line assuming a random satisfiable formula at a random user statement.
std::optional<std::string> random_annotation(std::mt19937_64& rng, const Program& p);

struct FuzzStats {
    int programs = 0;
    int rejected = 0;  // sources that failed to load
    int obligation_free = 0;
    int runs = 0;
    int type_errors = 0;
    int violations = 0;
    int budget_exhausted = 0;
    int proofs = 0;
    int proof_failures = 0;
    int refinements = 0;
    int monotone_violations = 0;
    std::vector<std::string> failures;

    std::string str() const;
};

// Soundness differential: every obligation-free variant runs without type errors or Ξ violations.
FuzzStats fuzz_soundness(uint64_t seed, int count, long long budget = 100000, int variants = 5, bool proofs = false);

// Monotonicity of refinement on random (program, annotation) pairs.
FuzzStats fuzz_refinement(uint64_t seed, int count);

}  // namespace dyn
