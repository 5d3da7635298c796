#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dyn/typelattice.hpp"

namespace dyn {

// "u" local, "@x" field of this, "r" result, "this", "$12.0" pending operand 0 of node 12.
using Subject = std::string;
using Disjunct = std::map<Subject, UnionType>;

// Canonical DNF: no TOP literals, no subsumed disjuncts; a disjunct holding an empty type survives only
// when it is the sole disjunct.
class TAsrt {
public:
    TAsrt() = default;
    explicit TAsrt(UniverseRef u) : u_(std::move(u)) {}
    TAsrt(UniverseRef u, std::vector<Disjunct> ds);

    static TAsrt truth(const UniverseRef& u) { return TAsrt(u, {Disjunct{}}); }
    static TAsrt falsity(const UniverseRef& u) { return TAsrt(u); }
    static TAsrt lit(const UniverseRef& u, const Subject& s, const UnionType& t);

    const UniverseRef& universe() const { return u_; }
    const std::vector<Disjunct>& disjuncts() const { return ds_; }
    bool is_true() const { return ds_.size() == 1 && ds_[0].empty(); }
    bool is_false() const;
    std::vector<Subject> subjects() const;

    bool operator==(const TAsrt& o) const { return ds_ == o.ds_; }
    bool operator!=(const TAsrt& o) const { return !(*this == o); }

    std::string str() const;

private:
    UniverseRef u_;
    std::vector<Disjunct> ds_;
    void canonicalize();
};

bool vacuous(const Disjunct& d);

TAsrt disj(const TAsrt& a, const TAsrt& b);
TAsrt conj(const TAsrt& a, const TAsrt& b);
TAsrt negate(const TAsrt& a);

// τ[from := to]: literals on `from` move to `to`, meeting with an existing literal there.
TAsrt substitute(const TAsrt& t, const Subject& from, const Subject& to);
// τ[s := value of type k]: a literal s∈T becomes true when k ⊑ T; otherwise its disjunct is dropped.
TAsrt substitute_const(const TAsrt& t, const Subject& s, const UnionType& k);
// Drops every literal whose subject satisfies pred (a weakening).
TAsrt drop(const TAsrt& t, const std::function<bool(const Subject&)>& pred);
TAsrt drop_subject(const TAsrt& t, const Subject& s);
// Conjoins s∈T into every disjunct.
TAsrt with_literal(const TAsrt& t, const Subject& s, const UnionType& ty);

UnionType project_var(const TAsrt& t, const Subject& x);

// Conservative per-disjunct subsumption.
bool implies(const TAsrt& a, const TAsrt& b);
// Enumerates every class assignment (declared classes and Null) to the mentioned subjects.
bool implies_exact(const TAsrt& a, const TAsrt& b);

// Class name of a subject's value ("Null" for null); nullopt when unresolvable.
using StateView = std::function<std::optional<std::string>(const Subject&)>;
bool eval_on_state(const TAsrt& t, const StateView& state);
bool eval_disjunct(const Disjunct& d, const StateView& state);

struct Formula {
    enum class Op { Lit, Opaque, True, False, Not, And, Or };
    Op op = Op::True;
    Subject subject;
    UnionType type;
    std::string text;
    std::vector<std::shared_ptr<const Formula>> kids;
};
using FormulaPtr = std::shared_ptr<const Formula>;

struct AssertionSyntaxError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

FormulaPtr parse_formula(const UniverseRef& u, const std::string& text);
std::string formula_str(const Formula& f);
// Ω: DNF with opaque atoms (of either polarity) replaced by true.
TAsrt filter_omega(const Formula& f);
// Parses and applies Ω.
TAsrt parse_tasrt(const UniverseRef& u, const std::string& text);

// Truth of a formula under a state and an interpretation of its opaque atoms.
bool eval_formula(const Formula& f, const StateView& state, const std::function<bool(const std::string&)>& opaque);

bool valid_subject(const Subject& s);

using InvariantTable = std::map<std::pair<std::string, std::string>, UnionType>;

struct Analysis;
// Ξ: disjunction over the location's path slots of the tracked variables' types (plus r at post locations).
TAsrt xi_assert(const Analysis& a, int node, bool post);

}  // namespace dyn
