#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dyn/ast.hpp"
#include "dyn/interp.hpp"
#include "dyn/ssa.hpp"
#include "dyn/tassert.hpp"
#include "dyn/typelattice.hpp"

namespace dyn {

// Flat cell store: every type variable owns one cell per path slot of its location.
struct Typing {
    UniverseRef universe;
    std::vector<UnionType> cells;

    std::vector<int> node_base, node_slots;                 // per node id
    std::vector<std::vector<int>> version_base, version_slots;  // [unit][version]
    std::map<std::pair<int, int>, std::vector<int>> param;  // (class, method index) -> cell per parameter
    std::map<std::pair<int, int>, int> ret;                 // (class, method index) -> cell
    std::map<std::pair<int, std::string>, int> field;       // (class, field) -> cell

    UnionType node(int id, int slot) const { return cells[node_base[id] + slot]; }
    UnionType node_joined(int id) const;
    UnionType version(int unit, int v, int slot) const { return cells[version_base[unit][v] + slot]; }
    UnionType version_joined(int unit, int v) const;
};

struct Constraint {
    enum class Kind { Subset, CallEdge, Precision };
    Kind kind = Kind::Subset;

    // Subset: (join of sources ⊔ constant) ⊓ filter ⊑ target
    std::vector<int> sources;
    std::optional<UnionType> constant;
    std::optional<UnionType> filter;
    int target = -1;

    // CallEdge: receivers flow into the interface [method/arity]; one receiver/arg/result cell per slot
    int node = -1;
    std::string method;
    int arity = 0;
    std::vector<int> recv;
    std::optional<UnionType> recv_const;
    std::vector<std::vector<int>> args;  // [arg][slot]
    std::vector<int> result;
    struct Callee {
        int bit;  // class bit in the universe
        std::vector<int> params;
        int ret;
    };
    std::vector<Callee> callees;  // every class supporting method/arity

    // Precision: strip_null(source or constant) ⊑ required, checked after solving
    int slot = 0;
    UnionType required;
    std::string reason;  // "receiver-missing-method" or "non-boolean-condition"
};

struct ConstraintSet {
    std::vector<Constraint> items;
    int cell_count = 0;
};

struct Obligation {
    int node = -1;
    int slot = 0;
    std::string path;
    std::string kind;
    std::string method;
    int arity = 0;
    UnionType offending;
    UnionType required;

    std::string str(const Program& p) const;
};

struct InferOptions {
    int path_cap = 16;
    bool invalidate_fields = true;
};

struct Analysis {
    Program prog;
    InferOptions opts;
    Ssa ssa;
    ConstraintSet cs;
    Typing ty;
    std::vector<Obligation> obligations;
};

// Join of a node's type over the slots whose disjunct at its post location is satisfiable.
UnionType node_summary(const Analysis& a, int id);

UnionType supporters(const Program& p, const std::string& m, int arity);

// Lays out cells and instantiates the typing rules over the SSA form.
ConstraintSet generate_constraints(const Program& p, const Ssa& s, Typing& layout);
Typing solve(const ConstraintSet& cs, Typing ty);
// One round over all constraints; true if some cell grew.
bool solve_pass(const ConstraintSet& cs, Typing& ty);
std::vector<std::string> check_consistency(const Program& p, const ConstraintSet& cs, const Typing& ty);
std::vector<Obligation> check_safety(const Program& p, const Ssa& s, const ConstraintSet& cs, const Typing& ty);

Analysis analyze(Program p, const InferOptions& opts = {});

struct Annotation {
    std::string unit_name;
    int node = -1;
    std::string text;
    TAsrt assertion;
};

struct AnnotationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Sidecar lines: "at <class>.<method>#<NodeId> assume <formula>" or "at main#<NodeId> assume ..."
std::vector<Annotation> parse_annotations(const Program& p, const std::string& text);
// Inserts the type-filter statements before each annotated location and renumbers.
Program apply_annotations(const Program& p, const std::vector<Annotation>& anns);
Analysis refine(const Program& p, const std::vector<Annotation>& anns, const InferOptions& opts = {});
// Locations/variables of `before` whose refined type is not below the original (paths joined).
std::vector<std::string> check_monotone(const Analysis& before, const Analysis& after);

InvariantTable invariant_table(const Analysis& a);

std::string dump_typing(const Analysis& a, bool include_prelude = false);
// Reads the cell values of a dump produced by dump_typing over the same program.
Typing load_typing(const Analysis& a, const std::string& json_text);

struct Violation {
    int node = -1;
    bool post = false;
    std::string path;     // slot of the closest disjunct
    std::string subject;
    std::string actual;   // class of the observed value, "Null" for null
    UnionType claimed;

    std::string str(const Program& p) const;
};

struct InstrumentedRun {
    Outcome outcome;
    std::shared_ptr<Heap> heap;
    std::vector<Violation> violations;
    long long checks = 0;
};

// Runs the analyzed program, checking Ξ against the concrete state before and after every evaluation.
InstrumentedRun run_instrumented(const Analysis& a, RunOptions opts = {}, size_t max_violations = 64);

}  // namespace dyn
