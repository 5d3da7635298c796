#include "dyn/purity.hpp"

#include <functional>
#include <regex>
#include <set>
#include <sstream>

#include "dyn/lang.hpp"

namespace dyn {

bool BaseType::operator==(const BaseType& o) const {
    if (k != o.k) return false;
    if (k != K::List) return true;
    return *elem == *o.elem;
}

std::string BaseType::str() const {
    switch (k) {
        case K::Obj: return "𝕆";
        case K::Nat: return "ℕ";
        case K::Bool: return "𝔹";
        case K::Null: return "Null";
        case K::List: return "𝕃(" + elem->str() + ")";
    }
    return "?";
}

BaseType psi_hat(const UnionType& t) {
    if (t.is_bottom()) return BaseType::null();
    auto names = t.class_names();
    if (names == std::vector<std::string>{"num"}) return BaseType::nat();
    if (names == std::vector<std::string>{"bool"}) return BaseType::boolean();
    bool list = true;
    for (auto& n : names) list = list && (n == "nil" || n == "cons");
    if (list) return BaseType::list(BaseType::obj());
    return BaseType::obj();
}

PurityContext purity_context(const Analysis& a, int node) {
    PurityContext ctx;
    TAsrt xi = xi_assert(a, node, false);
    for (auto& s : xi.subjects())
        if (s[0] != '$' && s != "r") ctx.types[s] = project_var(xi, s);
    return ctx;
}

namespace {

using K = BaseType::K;

LExprPtr mk(LogicalExpr::Op op, BaseType t, std::vector<LExprPtr> kids = {}, uint64_t value = 0,
            std::string name = {}) {
    auto e = std::make_shared<LogicalExpr>();
    e->op = op;
    e->type = std::move(t);
    e->kids = std::move(kids);
    e->value = value;
    e->name = std::move(name);
    return e;
}

LExprPtr nat(uint64_t v) { return mk(LogicalExpr::Op::Nat, BaseType::nat(), {}, v); }
LExprPtr boolean(bool v) { return mk(LogicalExpr::Op::Bool, BaseType::boolean(), {}, v ? 1 : 0); }

struct Sig {
    K recv;
    const char* method;
    std::vector<K> args;  // empty K list; Obj in an init entry accepts any non-null argument
    BaseType result;
    std::function<LExprPtr(const std::vector<LExprPtr>&)> make;  // v0 receiver (null for init), v1.. arguments
};

const std::vector<Sig>& signatures() {
    using Op = LogicalExpr::Op;
    static const std::vector<Sig> table = {
        {K::Nat, "succ", {}, BaseType::nat(), [](auto& v) { return mk(Op::Add, BaseType::nat(), {v[0], nat(1)}); }},
        {K::Nat, "m_add", {K::Nat}, BaseType::nat(), [](auto& v) { return mk(Op::Add, BaseType::nat(), {v[0], v[1]}); }},
        {K::Nat, "m_eq", {K::Nat}, BaseType::boolean(),
         [](auto& v) { return mk(Op::Eq, BaseType::boolean(), {v[0], v[1]}); }},
        {K::Nat, "is_zero", {}, BaseType::boolean(),
         [](auto& v) { return mk(Op::Eq, BaseType::boolean(), {v[0], nat(0)}); }},
        {K::Nat, "init", {K::Null}, BaseType::nat(), [](auto&) { return nat(0); }},
        {K::Nat, "init", {K::Nat}, BaseType::nat(), [](auto& v) { return mk(Op::Add, BaseType::nat(), {v[1], nat(1)}); }},
        {K::Bool, "not", {}, BaseType::boolean(), [](auto& v) { return mk(Op::Not, BaseType::boolean(), {v[0]}); }},
        {K::Bool, "m_and", {K::Bool}, BaseType::boolean(),
         [](auto& v) { return mk(Op::And, BaseType::boolean(), {v[0], v[1]}); }},
        {K::Bool, "m_or", {K::Bool}, BaseType::boolean(),
         [](auto& v) { return mk(Op::Or, BaseType::boolean(), {v[0], v[1]}); }},
        {K::Bool, "init", {K::Null}, BaseType::boolean(), [](auto&) { return boolean(false); }},
        {K::Bool, "init", {K::Bool}, BaseType::boolean(), [](auto&) { return boolean(true); }},
        {K::Bool, "init", {K::Nat}, BaseType::boolean(), [](auto&) { return boolean(true); }},
        {K::Bool, "init", {K::List}, BaseType::boolean(), [](auto&) { return boolean(true); }},
        {K::Bool, "init", {K::Obj}, BaseType::boolean(), [](auto&) { return boolean(true); }},
        {K::List, "index", {K::Nat}, BaseType::obj(),
         [](auto& v) { return mk(Op::Index, BaseType::obj(), {v[0], v[1]}); }},
        {K::List, "size", {}, BaseType::nat(), [](auto& v) { return mk(Op::Size, BaseType::nat(), {v[0]}); }},
    };
    return table;
}

const Sig* lookup(K recv, const std::string& m, const std::vector<BaseType>& args) {
    for (auto& s : signatures()) {
        if (s.recv != recv || s.method != m || s.args.size() != args.size()) continue;
        bool ok = true;
        for (size_t i = 0; i < args.size(); ++i) ok = ok && s.args[i] == args[i].k;
        if (ok) return &s;
    }
    return nullptr;
}

std::string subject_of(const Node& e) {
    if (e.kind == Kind::Var) return e.name;
    if (e.kind == Kind::IVar) return "@" + e.name;
    return "this";
}

// Classifies and, when `out` is set, translates.
class Pure {
public:
    Pure(const Program& p, const PurityContext& ctx) : p_(p), ctx_(ctx) {}

    std::optional<BaseType> go(const Node& e, LExprPtr* out) {
        using Op = LogicalExpr::Op;
        switch (e.kind) {
            case Kind::Null:
                if (out) *out = mk(Op::Null, BaseType::null());
                return BaseType::null();
            case Kind::Var:
            case Kind::IVar:
            case Kind::This: {
                auto s = subject_of(e);
                auto it = ctx_.types.find(s);
                if (it == ctx_.types.end() || it->second.is_bottom()) return std::nullopt;
                const UnionType& t = it->second;
                BaseType b;
                if (t == UnionType::null_only(t.universe()))
                    b = BaseType::null();
                else if (t.has_null())
                    return std::nullopt;
                else
                    b = psi_hat(t);
                if (out) *out = b.k == K::Null ? mk(Op::Null, b) : mk(Op::Var, b, {}, 0, "^" + s);
                return b;
            }
            case Kind::Call:
            case Kind::New: {
                std::vector<LExprPtr> terms;
                std::vector<BaseType> args;
                K recv;
                size_t first = 0;
                if (e.kind == Kind::Call) {
                    LExprPtr t;
                    auto r = go(*e.kids[0], out ? &t : nullptr);
                    if (!r) return std::nullopt;
                    recv = r->k;
                    terms.push_back(t);
                    first = 1;
                } else {
                    BaseType b = psi_hat(UnionType::of(p_.universe, {e.name}));
                    if (b.k != K::Nat && b.k != K::Bool) return std::nullopt;
                    recv = b.k;
                    terms.push_back(nullptr);
                }
                for (size_t i = first; i < e.kids.size(); ++i) {
                    LExprPtr t;
                    auto a = go(*e.kids[i], out ? &t : nullptr);
                    if (!a) return std::nullopt;
                    args.push_back(*a);
                    terms.push_back(t);
                }
                const Sig* s = lookup(recv, e.kind == Kind::Call ? e.name : "init", args);
                if (!s) return std::nullopt;
                if (out) *out = s->make(terms);
                return s->result;
            }
            case Kind::Identity: {
                LExprPtr a, b;
                auto ta = go(*e.kids[0], out ? &a : nullptr);
                auto tb = go(*e.kids[1], out ? &b : nullptr);
                if (!ta || !tb || *ta != *tb) return std::nullopt;
                if (out) *out = mk(Op::Eq, BaseType::boolean(), {a, b});
                return BaseType::boolean();
            }
            case Kind::IsA: {
                LExprPtr a;
                if (!go(*e.kids[0], out ? &a : nullptr)) return std::nullopt;
                if (out) *out = mk(Op::IsA, BaseType::boolean(), {a}, 0, e.name);
                return BaseType::boolean();
            }
            case Kind::If: {
                if (e.marked) return std::nullopt;
                LExprPtr c, x, y;
                auto tc = go(*e.kids[0], out ? &c : nullptr);
                if (!tc || tc->k != K::Bool) return std::nullopt;
                auto tx = go(*e.kids[1], out ? &x : nullptr);
                auto ty = go(*e.kids[2], out ? &y : nullptr);
                if (!tx || !ty || *tx != *ty) return std::nullopt;
                if (out) *out = mk(Op::Ite, *tx, {c, x, y});
                return tx;
            }
            case Kind::TypeFilter: return go(*e.kids[0], out);
            case Kind::Seq:
                if (e.kids.size() == 1) return go(*e.kids[0], out);
                return std::nullopt;
            default: return std::nullopt;
        }
    }

private:
    const Program& p_;
    const PurityContext& ctx_;
};

}  // namespace

std::optional<BaseType> classify_pure(const Program& p, const Node& e, const PurityContext& ctx) {
    return Pure(p, ctx).go(e, nullptr);
}

LExprPtr psi(const Program& p, const Node& e, const PurityContext& ctx) {
    LExprPtr out;
    if (!Pure(p, ctx).go(e, &out)) throw PurityError("expression #" + std::to_string(e.id) + " is not pure");
    return out;
}

namespace {

std::string lstr(const LogicalExpr& l, bool top) {
    using Op = LogicalExpr::Op;
    auto wrap = [&](const std::string& s) { return top ? s : "(" + s + ")"; };
    switch (l.op) {
        case Op::Var: return l.name;
        case Op::Nat: return std::to_string(l.value);
        case Op::Bool: return l.value ? "true" : "false";
        case Op::Null: return "null";
        case Op::Add: return wrap(lstr(*l.kids[0], false) + " + " + lstr(*l.kids[1], false));
        case Op::Eq: return wrap(lstr(*l.kids[0], false) + " = " + lstr(*l.kids[1], false));
        case Op::Not: return "¬" + lstr(*l.kids[0], false);
        case Op::And: return wrap(lstr(*l.kids[0], false) + " ∧ " + lstr(*l.kids[1], false));
        case Op::Or: return wrap(lstr(*l.kids[0], false) + " ∨ " + lstr(*l.kids[1], false));
        case Op::Ite:
            return wrap("if " + lstr(*l.kids[0], true) + " then " + lstr(*l.kids[1], true) + " else " +
                        lstr(*l.kids[2], true) + " fi");
        case Op::IsA: return "⟦" + lstr(*l.kids[0], true) + "⟧ ∈ {" + l.name + "}";
        case Op::Index: return lstr(*l.kids[0], false) + "[" + lstr(*l.kids[1], true) + "]";
        case Op::Size: return "|" + lstr(*l.kids[0], true) + "|";
    }
    return "?";
}

std::string class_of(const LValue& v) {
    switch (v.kind) {
        case K::Nat: return "num";
        case K::Bool: return "bool";
        case K::Null: return "Null";
        case K::List: return v.items.empty() ? "nil" : "cons";
        case K::Obj: return v.cls;
    }
    return "?";
}

}  // namespace

std::string LogicalExpr::str() const { return lstr(*this, true); }

bool LValue::operator==(const LValue& o) const {
    if (kind != o.kind) return false;
    switch (kind) {
        case K::Nat: return nat == o.nat;
        case K::Bool: return b == o.b;
        case K::Null: return true;
        case K::Obj: return cls == o.cls;
        case K::List: return items == o.items;
    }
    return false;
}

std::string LValue::str() const {
    switch (kind) {
        case K::Nat: return std::to_string(nat);
        case K::Bool: return b ? "true" : "false";
        case K::Null: return "null";
        case K::Obj: return "<" + cls + ">";
        case K::List: {
            std::string s = "[";
            for (size_t i = 0; i < items.size(); ++i) s += (i ? ", " : "") + items[i].str();
            return s + "]";
        }
    }
    return "?";
}

LValue eval_logical(const LogicalExpr& l, const std::map<std::string, LValue>& env) {
    using Op = LogicalExpr::Op;
    auto ev = [&](size_t i) { return eval_logical(*l.kids[i], env); };
    LValue out;
    switch (l.op) {
        case Op::Var: {
            auto it = env.find(l.name);
            if (it == env.end()) throw PurityError("unbound variable " + l.name);
            return it->second;
        }
        case Op::Nat: out.kind = K::Nat; out.nat = l.value; return out;
        case Op::Bool: out.kind = K::Bool; out.b = l.value != 0; return out;
        case Op::Null: return out;
        case Op::Add: out.kind = K::Nat; out.nat = ev(0).nat + ev(1).nat; return out;
        case Op::Eq: out.kind = K::Bool; out.b = ev(0) == ev(1); return out;
        case Op::Not: out.kind = K::Bool; out.b = !ev(0).b; return out;
        case Op::And: out.kind = K::Bool; out.b = ev(0).b && ev(1).b; return out;
        case Op::Or: out.kind = K::Bool; out.b = ev(0).b || ev(1).b; return out;
        case Op::Ite: return ev(0).b ? ev(1) : ev(2);
        case Op::IsA: out.kind = K::Bool; out.b = class_of(ev(0)) == l.name; return out;
        case Op::Index: {
            LValue xs = ev(0);
            uint64_t i = ev(1).nat;
            return i < xs.items.size() ? xs.items[i] : LValue{};
        }
        case Op::Size: out.kind = K::Nat; out.nat = ev(0).items.size(); return out;
    }
    return out;
}

std::string upsilon_expand(const std::string& assertion, const std::vector<std::pair<std::string, BaseType>>& safe) {
    static const std::regex hat(R"(\^(@?[A-Za-z_][A-Za-z0-9_]*))");
    std::vector<std::string> order;
    std::set<std::string> seen;
    for (auto it = std::sregex_iterator(assertion.begin(), assertion.end(), hat); it != std::sregex_iterator(); ++it) {
        std::string v = (*it)[1];
        if (seen.insert(v).second) order.push_back(v);
    }
    if (order.empty()) return assertion;
    auto logical = [](const std::string& v) { return "v_" + (v[0] == '@' ? v.substr(1) : v); };
    std::string binders, maps;
    for (auto& v : order) {
        const BaseType* t = nullptr;
        for (auto& [name, bt] : safe)
            if (name == v) t = &bt;
        if (!t) throw PurityError("no safety fact for ^" + v);
        std::string pred = t->k == K::List ? "𝕃" : t->str();
        if (!binders.empty()) binders += ", ";
        binders += logical(v) + ":" + t->str();
        maps += " ∧ " + pred + "(" + v + "," + logical(v) + ")";
    }
    std::string body = std::regex_replace(assertion, hat, "v_$1");
    body = std::regex_replace(body, std::regex(R"(v_@)"), "v_");
    return "∃" + binders + ". " + body + maps;
}

namespace {

class PureGen {
public:
    explicit PureGen(std::mt19937_64& rng) : rng_(rng) {}

    std::string nat(int d) {
        if (d == 0 || pick(5) == 0) return nat_leaf();
        switch (pick(4)) {
            case 0: return "(" + nat(d - 1) + ").succ()";
            case 1: return "(" + nat(d - 1) + " + " + nat(d - 1) + ")";
            case 2: return "new num(" + nat(d - 1) + ")";
            default: return "(if " + boolean(d - 1) + " then " + nat(d - 1) + " else " + nat(d - 1) + " fi)";
        }
    }

    std::string boolean(int d) {
        if (d == 0 || pick(5) == 0) return bool_leaf();
        switch (pick(8)) {
            case 0: return "(" + boolean(d - 1) + ").not()";
            case 1: return "(" + boolean(d - 1) + " & " + boolean(d - 1) + ")";
            case 2: return "(" + boolean(d - 1) + " | " + boolean(d - 1) + ")";
            case 3: return "(" + nat(d - 1) + " = " + nat(d - 1) + ")";
            case 4: return "(" + nat(d - 1) + ").is_zero()";
            case 5: return "new bool(" + (pick(2) ? nat(d - 1) : boolean(d - 1)) + ")";
            case 6: return "(" + (pick(2) ? nat(d - 1) : boolean(d - 1)) + " is_a? " + (pick(2) ? "num" : "bool") + ")";
            default: return "(if " + boolean(d - 1) + " then " + boolean(d - 1) + " else " + boolean(d - 1) + " fi)";
        }
    }

    int pick(int n) { return static_cast<int>(rng_() % static_cast<uint64_t>(n)); }

private:
    std::mt19937_64& rng_;

    std::string nat_leaf() {
        switch (pick(4)) {
            case 0: return "a";
            case 1: return "b";
            case 2: return std::to_string(pick(4));
            default: return "new num(null)";
        }
    }
    std::string bool_leaf() {
        switch (pick(5)) {
            case 0: return "p";
            case 1: return "q";
            case 2: return "true";
            case 3: return "false";
            default: return "new bool(null)";
        }
    }
};

}  // namespace

PureSample random_pure_program(std::mt19937_64& rng, int depth) {
    PureGen g(rng);
    PureSample s;
    uint64_t a = static_cast<uint64_t>(g.pick(6)), b = static_cast<uint64_t>(g.pick(6));
    bool p = g.pick(2), q = g.pick(2);
    s.expr = g.pick(2) ? g.nat(depth) : g.boolean(depth);
    s.source = "a := " + std::to_string(a) + "; b := " + std::to_string(b) + "; p := " + (p ? "true" : "false") +
               "; q := " + (q ? "true" : "false") + "; " + s.expr + "\n";
    LValue v;
    v.kind = K::Nat;
    v.nat = a;
    s.env["^a"] = v;
    v.nat = b;
    s.env["^b"] = v;
    v = LValue{};
    v.kind = K::Bool;
    v.b = p;
    s.env["^p"] = v;
    v.b = q;
    s.env["^q"] = v;
    return s;
}

std::vector<PurityLine> purity_listing(const Analysis& a) {
    const Program& p = a.prog;
    std::vector<PurityLine> out;
    auto is_stmt = [](Kind k) {
        return k == Kind::Seq || k == Kind::AssignLocal || k == Kind::AssignField || k == Kind::If ||
               k == Kind::While || k == Kind::Block;
    };
    for (int id = 0; id < p.node_count; ++id) {
        const Node& n = *p.nodes[id];
        int u = p.unit_of[id];
        int c = p.units[u].cls;
        if (c >= 0 && p.classes[c].prelude) continue;
        int par = p.parent[id];
        if (n.kind == Kind::Seq || n.kind == Kind::While || n.kind == Kind::AssignLocal ||
            n.kind == Kind::AssignField || (n.kind == Kind::If && n.marked))
            continue;
        if (par >= 0 && !is_stmt(p.nodes[par]->kind)) continue;
        if (par >= 0 && p.nodes[par]->kind == Kind::If && p.nodes[par]->marked) continue;
        PurityLine line;
        line.node = id;
        line.unit = p.unit_name(u);
        line.expr = pretty(n);
        PurityContext ctx = purity_context(a, id);
        line.type = classify_pure(p, n, ctx);
        if (line.type) line.psi = psi(p, n, ctx)->str();
        out.push_back(std::move(line));
    }
    return out;
}

}  // namespace dyn
