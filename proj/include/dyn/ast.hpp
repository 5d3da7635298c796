#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dyn/typelattice.hpp"

namespace dyn {

enum class Kind {
    Null,
    Var,
    IVar,
    This,
    Identity,
    IsA,
    Call,
    New,
    AssignLocal,
    AssignField,
    If,
    While,
    Seq,
    Block,
    TypeFilter,
    Phi,
    // surface sugar, removed by desugar()
    NumLit,
    BoolLit,
    BinOp,
    Index,
};

const char* kind_name(Kind k);

struct Pos {
    int line = 0;
    int col = 0;
};

struct Node;
using NodePtr = std::unique_ptr<Node>;

// Layout of kids per kind:
//   Identity [a, b]   IsA [e] (name = class)   Call [recv, args...] (name = method)
//   New [args...] (name = class)   AssignLocal/AssignField [rhs] (name = var / field without '@')
//   If [cond, then, else]   While [cond, body]   Seq [s...]   TypeFilter [e]
//   BinOp [a, b] (name = operator)   Index [a, i]
struct Node {
    Kind kind = Kind::Null;
    int id = -1;
    int origin = -1;  // id in the program before refinement; -1 for inserted nodes
    std::string name;
    std::vector<NodePtr> kids;
    long long num = 0;              // NumLit / BoolLit payload
    bool has_else = true;           // If parsed without else
    bool marked = false;            // path-split conditional
    std::vector<std::string> filter;  // TypeFilter type, class names incl. Null
    // marked-if guard: conjunction subject -> class names, used by the interpreter to pick a branch
    std::vector<std::pair<std::string, std::vector<std::string>>> guard;
    Pos pos;

    Node() = default;
    Node(Kind k, Pos p) : kind(k), pos(p) {}

    NodePtr clone() const;
    Node* kid(size_t i) const { return kids[i].get(); }
};

NodePtr make_node(Kind k, Pos p = {}, std::string name = {});

// Structural equality ignoring ids and positions.
bool same_ast(const Node& a, const Node& b);

struct Method {
    std::string name;
    std::vector<std::string> params;
    NodePtr body;
    Pos pos;

    Method() = default;
    Method(const Method& o);
    Method& operator=(const Method& o);
    Method(Method&&) = default;
    Method& operator=(Method&&) = default;
    int arity() const { return static_cast<int>(params.size()); }
};

struct ClassDecl {
    std::string name;
    std::string parent;  // empty only for object
    std::vector<Method> methods;
    std::vector<std::pair<std::string, std::string>> renames;
    std::vector<std::string> fields;  // derived, sorted
    bool prelude = false;
    Pos pos;

    const Method* find(const std::string& m, int arity) const;
};

// A unit is a method body or the main statement.
struct Unit {
    int cls = -1;  // -1 for main
    int method = -1;
    const Node* body = nullptr;
};

struct Program {
    std::vector<ClassDecl> classes;
    NodePtr main;
    int node_count = 0;
    bool expanded = false;
    UniverseRef universe;

    // filled by finalize()
    std::vector<const Node*> nodes;   // by id
    std::vector<int> parent;          // parent id, -1 for unit roots
    std::vector<int> unit_of;         // unit index per node
    std::vector<Unit> units;          // methods in class order, main last
    std::map<std::string, int> class_index;

    Program() = default;
    Program(const Program& o);
    Program& operator=(const Program& o);
    Program(Program&&) = default;
    Program& operator=(Program&&) = default;

    const ClassDecl* find_class(const std::string& n) const;
    int main_unit() const { return static_cast<int>(units.size()) - 1; }
    const Method* unit_method(int u) const;
    std::string unit_name(int u) const;  // "C.m" or "main"
};

struct LangError : std::runtime_error {
    Pos pos;
    LangError(const std::string& msg, Pos p);
};

}  // namespace dyn
