#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dyn/infer.hpp"
#include "dyn/tassert.hpp"
#include "json.hpp"

namespace dyn {

// I(ty) ∧ τ ∧ p: the invariant flag, the typing layer and an opaque higher layer.
struct LayeredAssertion {
    bool inv = true;
    TAsrt lower;
    std::string higher;
};

struct ProofNode {
    std::string rule;
    int stmt = -1;
    LayeredAssertion pre, post;
    nlohmann::ordered_json side = nlohmann::ordered_json::object();
    std::vector<ProofNode> premises;
};

struct MethodAssumption {
    std::string cls;
    std::string method;
    int arity = 0;
    TAsrt pre;   // p̆: this ∈ {C} ∧ parameters ∈ ty(P)
    TAsrt post;  // q̆: r ∈ ty(R)
};

// The REC root carries the invariant table, the method call assumptions and the safety flag in its side data.
struct Proof {
    ProofNode root;
};

struct ProofError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Builds the proof for the analysis' typing; with safety, receivers and conditions are checked as well.
Proof build_typing_proof(const Analysis& a, bool safety);
Proof build_typing_proof(const Analysis& a);  // safety iff the analysis has no obligations

struct CheckFailure {
    std::string where;  // rule and statement
    std::string reason;
};

struct CheckReport {
    bool ok() const { return failures.empty(); }
    std::vector<CheckFailure> failures;
    int nodes = 0;
    std::string str() const;
};

CheckReport check_proof(const Program& p, const Proof& proof);

// Node-wise conjunction; NEUTRAL-CONS nodes are inserted where one side has an extra consequence step.
Proof fuse(const Program& p, const Proof& higher, const Proof& lower);

// Same rule skeleton with a true typing layer and the given higher-layer text at every assertion.
Proof skeleton(const Proof& p, const std::string& higher);

struct ExtractedTyping {
    std::map<int, UnionType> nodes;  // statements with at least one triple
    std::vector<std::string> warnings;
};

ExtractedTyping extract_typing(const Program& p, const Proof& proof);

// Nodes whose extracted type differs from the solver's node summary, one line each.
std::vector<std::string> compare_typing(const Analysis& a, const ExtractedTyping& e);

nlohmann::ordered_json proof_to_json(const Proof& proof);
Proof proof_from_json(const Program& p, const nlohmann::ordered_json& j);
std::string dump_proof(const Proof& proof);

// Single-node mutations the checker must reject; apply returns nullopt when the proof has no target.
struct Mutation {
    std::string name;
    std::optional<Proof> (*apply)(const Program& p, const Proof& proof);
};
const std::vector<Mutation>& mutation_catalog();

std::vector<MethodAssumption> method_assumptions(const Analysis& a);

}  // namespace dyn
