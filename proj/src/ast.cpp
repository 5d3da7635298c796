#include "dyn/ast.hpp"

#include "dyn/lang.hpp"

namespace dyn {

const char* kind_name(Kind k) {
    switch (k) {
        case Kind::Null: return "Null";
        case Kind::Var: return "Var";
        case Kind::IVar: return "IVar";
        case Kind::This: return "This";
        case Kind::Identity: return "Identity";
        case Kind::IsA: return "IsA";
        case Kind::Call: return "Call";
        case Kind::New: return "New";
        case Kind::AssignLocal: return "AssignLocal";
        case Kind::AssignField: return "AssignField";
        case Kind::If: return "If";
        case Kind::While: return "While";
        case Kind::Seq: return "Seq";
        case Kind::Block: return "Block";
        case Kind::TypeFilter: return "TypeFilter";
        case Kind::Phi: return "Phi";
        case Kind::NumLit: return "NumLit";
        case Kind::BoolLit: return "BoolLit";
        case Kind::BinOp: return "BinOp";
        case Kind::Index: return "Index";
    }
    return "?";
}

NodePtr Node::clone() const {
    auto n = std::make_unique<Node>();
    n->kind = kind;
    n->id = id;
    n->origin = origin;
    n->name = name;
    n->num = num;
    n->has_else = has_else;
    n->marked = marked;
    n->filter = filter;
    n->guard = guard;
    n->pos = pos;
    n->kids.reserve(kids.size());
    for (auto& k : kids) n->kids.push_back(k->clone());
    return n;
}

NodePtr make_node(Kind k, Pos p, std::string name) {
    auto n = std::make_unique<Node>(k, p);
    n->name = std::move(name);
    return n;
}

bool same_ast(const Node& a, const Node& b) {
    if (a.kind != b.kind || a.name != b.name || a.num != b.num || a.has_else != b.has_else ||
        a.marked != b.marked || a.filter != b.filter || a.guard != b.guard ||
        a.kids.size() != b.kids.size())
        return false;
    for (size_t i = 0; i < a.kids.size(); ++i)
        if (!same_ast(*a.kids[i], *b.kids[i])) return false;
    return true;
}

Method::Method(const Method& o)
    : name(o.name), params(o.params), body(o.body ? o.body->clone() : nullptr), pos(o.pos) {}

Method& Method::operator=(const Method& o) {
    if (this != &o) {
        name = o.name;
        params = o.params;
        body = o.body ? o.body->clone() : nullptr;
        pos = o.pos;
    }
    return *this;
}

const Method* ClassDecl::find(const std::string& m, int arity) const {
    for (auto& x : methods)
        if (x.name == m && x.arity() == arity) return &x;
    return nullptr;
}

Program::Program(const Program& o)
    : classes(o.classes),
      main(o.main ? o.main->clone() : nullptr),
      node_count(o.node_count),
      expanded(o.expanded),
      universe(o.universe) {
    if (!o.nodes.empty()) reindex(*this);
}

Program& Program::operator=(const Program& o) {
    if (this != &o) {
        Program tmp(o);
        *this = std::move(tmp);
    }
    return *this;
}

const ClassDecl* Program::find_class(const std::string& n) const {
    if (!class_index.empty()) {
        auto it = class_index.find(n);
        return it == class_index.end() ? nullptr : &classes[it->second];
    }
    for (auto& c : classes)
        if (c.name == n) return &c;
    return nullptr;
}

const Method* Program::unit_method(int u) const {
    const Unit& un = units.at(u);
    if (un.cls < 0) return nullptr;
    return &classes[un.cls].methods[un.method];
}

std::string Program::unit_name(int u) const {
    const Unit& un = units.at(u);
    if (un.cls < 0) return "main";
    return classes[un.cls].name + "." + classes[un.cls].methods[un.method].name;
}

static std::string fmt_pos(const std::string& msg, Pos p) {
    if (p.line <= 0) return msg;
    return std::to_string(p.line) + ":" + std::to_string(p.col) + ": " + msg;
}

LangError::LangError(const std::string& msg, Pos p) : std::runtime_error(fmt_pos(msg, p)), pos(p) {}

}  // namespace dyn
