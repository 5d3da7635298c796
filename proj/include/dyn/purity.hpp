#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "dyn/ast.hpp"
#include "dyn/infer.hpp"
#include "dyn/typelattice.hpp"

namespace dyn {

struct BaseType {
    enum class K { Obj, Nat, Bool, Null, List };
    K k = K::Obj;
    std::shared_ptr<const BaseType> elem;  // List only

    static BaseType obj() { return {K::Obj, nullptr}; }
    static BaseType nat() { return {K::Nat, nullptr}; }
    static BaseType boolean() { return {K::Bool, nullptr}; }
    static BaseType null() { return {K::Null, nullptr}; }
    static BaseType list(BaseType e) { return {K::List, std::make_shared<const BaseType>(std::move(e))}; }

    bool operator==(const BaseType& o) const;
    bool operator!=(const BaseType& o) const { return !(*this == o); }
    std::string str() const;
};

// Ψ̂ on a class set: {} -> Null, {num} -> ℕ, {bool} -> 𝔹, list classes -> 𝕃(𝕆), otherwise 𝕆.
BaseType psi_hat(const UnionType& t);

// Per-location facts: the type of every subject in scope ("u", "@x", "this").
struct PurityContext {
    std::map<Subject, UnionType> types;
};

// Context at a program location: each subject's type joined over the satisfiable disjuncts of Ξ.
PurityContext purity_context(const Analysis& a, int node);

std::optional<BaseType> classify_pure(const Program& p, const Node& e, const PurityContext& ctx);

struct LogicalExpr;
using LExprPtr = std::shared_ptr<const LogicalExpr>;

struct LogicalExpr {
    enum class Op { Var, Nat, Bool, Null, Add, Eq, Not, And, Or, Ite, IsA, Index, Size };
    Op op = Op::Null;
    BaseType type;
    std::string name;  // Var: hat variable "^u"; IsA: class
    uint64_t value = 0;
    std::vector<LExprPtr> kids;

    std::string str() const;
};

struct PurityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

LExprPtr psi(const Program& p, const Node& e, const PurityContext& ctx);

struct LValue {
    BaseType::K kind = BaseType::K::Null;
    uint64_t nat = 0;
    bool b = false;
    std::string cls;            // class of an 𝕆 value
    std::vector<LValue> items;  // 𝕃

    bool operator==(const LValue& o) const;
    std::string str() const;
};

LValue eval_logical(const LogicalExpr& l, const std::map<std::string, LValue>& env);

// Υ: rewrites hat variables ^u into quantified logical variables tied to u by mapping predicates.
std::string upsilon_expand(const std::string& assertion, const std::vector<std::pair<std::string, BaseType>>& safe);

struct PureSample {
    std::string source;  // full program text
    std::string expr;    // the generated expression
    std::map<std::string, LValue> env;
};

// A program that binds naturals a, b and booleans p, q, then evaluates a random pure expression.
PureSample random_pure_program(std::mt19937_64& rng, int depth);

struct PurityLine {
    int node;
    std::string unit;
    std::string expr;
    std::optional<BaseType> type;
    std::string psi;
};

// Classification of every maximal expression of the user program.
std::vector<PurityLine> purity_listing(const Analysis& a);

}  // namespace dyn
