#pragma once

#include <functional>
#include <string>

#include "dyn/ast.hpp"

namespace dyn {

constexpr long long kDefaultLiteralCap = 65536;

// Surface syntax only; sugar nodes are kept.
Program parse_program(const std::string& text);

Program desugar(const Program& p, long long literal_cap = kDefaultLiteralCap);

// Copies inherited methods down, applies renames, erases parents, numbers nodes.
Program expand_inheritance(const Program& p);

// Builtin classes object, num, bool, nil, cons (desugared, not yet expanded).
Program load_prelude();
const std::string& prelude_source();

// Prepends the prelude classes; rejects user classes that reuse their names.
Program merge_prelude(const Program& user);

// parse -> merge prelude -> desugar -> expand. The usual entry point.
Program load_program(const std::string& text, long long literal_cap = kDefaultLiteralCap);

// Preorder NodeIds over classes (in order), methods, then main.
void finalize(Program& p);
// Rebuilds the lookup tables without renumbering.
void reindex(Program& p);

// Optional display names for Var/IVar/AssignLocal/AssignField nodes; empty result keeps the default.
using NameHook = std::function<std::string(const Node&)>;
std::string pretty(const Node& n, const NameHook& hook = {});
std::string pretty(const Program& p, bool include_prelude = false);

// Names of the builtin classes.
bool is_prelude_class(const std::string& name);

}  // namespace dyn
