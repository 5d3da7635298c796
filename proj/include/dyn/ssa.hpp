#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dyn/ast.hpp"

namespace dyn {

// One entry per marked conditional of the unit: -1 not yet taken, 0 then, 1 else.
using Label = std::vector<int8_t>;

// Sorted labels; when overflow is set the extra last slot stands for every label cut by the cap.
struct LabelSet {
    std::vector<Label> labels;
    bool overflow = false;

    int slots() const { return static_cast<int>(labels.size()) + (overflow ? 1 : 0); }
    bool operator==(const LabelSet& o) const { return labels == o.labels && overflow == o.overflow; }
    std::string slot_str(int slot) const;
};

LabelSet make_label_set(std::vector<Label> labels, bool overflow, int cap);
LabelSet unite(const LabelSet& a, const LabelSet& b, int cap);
LabelSet relabel(const LabelSet& a, int k, int8_t c, int cap);

// (from slot, to slot) pairs; with k >= 0 every label is first rewritten to label[k] := c.
std::vector<std::pair<int, int>> map_slots(const LabelSet& from, const LabelSet& to, int k = -1, int c = 0);

enum class DefKind { Entry, Assign, Phi, Sigma, Invalidate };
const char* def_kind_name(DefKind k);

struct Operand {
    int version;
    int from_ls;  // label set the operand is read under
    int k = -1;   // relabeling for sigma copies
    int c = 0;
};

struct Version {
    int var;
    int number;  // per-variable counter, 0 = entry
    DefKind kind;
    int node;    // defining node, -1 for entry
    int ls;      // label set index within the unit
    std::vector<Operand> ops;
};

struct UnitSsa {
    int unit = -1;
    int cls = -1;
    std::vector<std::string> vars;  // locals (parameters first), then fields written "@x"
    int nparams = 0;
    int nlocals = 0;
    std::vector<int> marked;        // marked conditionals in id order; position = label index
    std::vector<LabelSet> label_sets;
    std::vector<Version> versions;
    std::vector<int> entry;

    int var_index(const std::string& name) const;
    std::string version_name(int v) const;
    bool is_field(int var) const { return var >= nlocals; }
};

struct SsaOptions {
    int path_cap = 16;
    bool invalidate_fields = true;
};

struct Ssa {
    SsaOptions opts;
    std::vector<UnitSsa> units;
    std::vector<std::vector<int>> pre_env, post_env;  // per node id: version per unit variable
    std::vector<int> pre_ls, post_ls;                 // per node id: label set index

    const UnitSsa& unit_of_node(const Program& p, int node) const { return units[p.unit_of[node]]; }
};

Ssa to_ssa(const Program& p, const SsaOptions& opts = {});

// Same conversion with the call barrier switched on.
Ssa invalidate_fields_at_calls(const Program& p, const Ssa& s);

// Nodes where an annotation may be placed (evaluated as statements, never as operands).
std::vector<bool> statement_context(const Program& p);

std::string dump_ssa(const Program& p, const Ssa& s, bool include_prelude = false);
std::string dump_unit_body(const Program& p, const Ssa& s, int unit);
// Removes the "#k" version suffixes from a dumped body.
std::string erase_versions(const std::string& text);

}  // namespace dyn
