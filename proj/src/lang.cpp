#include "dyn/lang.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <set>

namespace dyn {

namespace {

enum class Tok { Ident, Field, Num, Sym, Kw, End };

struct Token {
    Tok kind = Tok::End;
    std::string text;
    long long num = 0;
    Pos pos;
};

const std::set<std::string> kKeywords = {"class", "method", "rename", "if",   "then", "else",
                                         "fi",    "while",  "do",     "od",   "new",  "null",
                                         "this",  "true",   "false",  "is_a?"};

std::vector<Token> lex(const std::string& src) {
    std::vector<Token> out;
    int line = 1, col = 1;
    size_t i = 0;
    auto adv = [&](size_t n) {
        for (size_t k = 0; k < n; ++k, ++i) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
    };
    auto ident_char = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
    while (i < src.size()) {
        char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            adv(1);
            continue;
        }
        if (c == '#') {
            while (i < src.size() && src[i] != '\n') adv(1);
            continue;
        }
        Token t;
        t.pos = {line, col};
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t j = i;
            while (j < src.size() && ident_char(src[j])) ++j;
            t.text = src.substr(i, j - i);
            if (t.text == "is_a" && j < src.size() && src[j] == '?') {
                t.text = "is_a?";
                ++j;
            }
            t.kind = kKeywords.count(t.text) ? Tok::Kw : Tok::Ident;
            adv(j - i);
        } else if (c == '@') {
            size_t j = i + 1;
            while (j < src.size() && ident_char(src[j])) ++j;
            if (j == i + 1) throw LangError("expected field name after '@'", t.pos);
            t.kind = Tok::Field;
            t.text = src.substr(i + 1, j - i - 1);
            adv(j - i);
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            size_t j = i;
            while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            t.kind = Tok::Num;
            t.text = src.substr(i, j - i);
            if (t.text.size() > 18) throw LangError("numeral too large", t.pos);
            t.num = std::stoll(t.text);
            adv(j - i);
        } else {
            static const char* two[] = {":=", "=="};
            t.kind = Tok::Sym;
            bool matched = false;
            for (auto s : two) {
                if (src.compare(i, 2, s) == 0) {
                    t.text = s;
                    adv(2);
                    matched = true;
                    break;
                }
            }
            if (!matched) {
                if (std::string("(){}[],;.=<+-*&|").find(c) == std::string::npos)
                    throw LangError(std::string("unexpected character '") + c + "'", t.pos);
                t.text = std::string(1, c);
                adv(1);
            }
        }
        out.push_back(std::move(t));
    }
    Token end;
    end.kind = Tok::End;
    end.pos = {line, col};
    out.push_back(end);
    return out;
}

const std::map<std::string, std::string> kOps = {{"+", "m_add"}, {"-", "m_sub"}, {"*", "m_mul"},
                                                 {"<", "m_lt"},  {"&", "m_and"}, {"|", "m_or"},
                                                 {"=", "m_eq"}};

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : t_(std::move(toks)) {}

    Program program() {
        Program p;
        while (is_kw("class")) p.classes.push_back(class_decl());
        if (at_end()) {
            p.main = make_node(Kind::Null, peek().pos);
        } else {
            in_main_ = true;
            p.main = stmt();
            in_main_ = false;
        }
        if (!at_end()) fail("unexpected '" + peek().text + "'");
        return p;
    }

private:
    std::vector<Token> t_;
    size_t i_ = 0;
    bool in_main_ = false;

    const Token& peek(size_t k = 0) const { return t_[std::min(i_ + k, t_.size() - 1)]; }
    bool at_end() const { return peek().kind == Tok::End; }
    bool is_kw(const char* k) const { return peek().kind == Tok::Kw && peek().text == k; }
    bool is_sym(const char* s) const { return peek().kind == Tok::Sym && peek().text == s; }
    [[noreturn]] void fail(const std::string& m) const {
        if (at_end()) throw LangError(m + " at end of input", peek().pos);
        throw LangError(m, peek().pos);
    }
    Token take() { return t_[i_++]; }
    void expect_kw(const char* k) {
        if (!is_kw(k)) fail(std::string("expected '") + k + "'");
        ++i_;
    }
    void expect_sym(const char* s) {
        if (!is_sym(s)) fail(std::string("expected '") + s + "'");
        ++i_;
    }
    std::string ident(const char* what) {
        if (peek().kind != Tok::Ident) fail(std::string("expected ") + what);
        return take().text;
    }
    void check_var(const std::string& n, Pos p) const {
        if (n == "r") throw LangError("reserved name 'r'", p);
    }

    ClassDecl class_decl() {
        ClassDecl c;
        c.pos = peek().pos;
        expect_kw("class");
        c.name = ident("class name");
        expect_sym("<");
        c.parent = ident("parent class name");
        expect_sym("{");
        while (!is_sym("}")) {
            if (is_kw("method")) {
                c.methods.push_back(method());
            } else if (is_kw("rename")) {
                ++i_;
                std::string from = ident("method name");
                std::string to = ident("method name");
                c.renames.emplace_back(from, to);
            } else {
                fail("expected 'method', 'rename' or '}'");
            }
        }
        expect_sym("}");
        return c;
    }

    Method method() {
        Method m;
        m.pos = peek().pos;
        expect_kw("method");
        m.name = ident("method name");
        expect_sym("(");
        if (!is_sym(")")) {
            for (;;) {
                Pos pp = peek().pos;
                std::string n = ident("parameter name");
                check_var(n, pp);
                if (std::find(m.params.begin(), m.params.end(), n) != m.params.end())
                    throw LangError("duplicate parameter '" + n + "'", pp);
                m.params.push_back(n);
                if (!is_sym(",")) break;
                ++i_;
            }
        }
        expect_sym(")");
        expect_sym("{");
        if (is_sym("}"))
            m.body = make_node(Kind::Null, peek().pos);
        else
            m.body = stmt();
        expect_sym("}");
        return m;
    }

    bool stmt_end() const {
        return at_end() || is_sym("}") || is_sym(")") || is_kw("fi") || is_kw("else") || is_kw("od") ||
               is_kw("then") || is_kw("do");
    }

    NodePtr stmt() {
        Pos p = peek().pos;
        std::vector<NodePtr> items;
        items.push_back(expr());
        while (is_sym(";")) {
            ++i_;
            if (stmt_end()) break;
            items.push_back(expr());
        }
        if (items.size() == 1) return std::move(items[0]);
        auto s = make_node(Kind::Seq, p);
        s->kids = std::move(items);
        return s;
    }

    NodePtr expr() {
        Pos p = peek().pos;
        if (peek().kind == Tok::Ident && peek(1).kind == Tok::Sym && peek(1).text == ":=") {
            std::string n = take().text;
            check_var(n, p);
            ++i_;
            auto a = make_node(Kind::AssignLocal, p, n);
            a->kids.push_back(expr());
            return a;
        }
        if (peek().kind == Tok::Field && peek(1).kind == Tok::Sym && peek(1).text == ":=") {
            std::string n = take().text;
            if (n == "c") throw LangError("reserved field '@c'", p);
            if (in_main_) throw LangError("field assignment outside a method", p);
            ++i_;
            auto a = make_node(Kind::AssignField, p, n);
            a->kids.push_back(expr());
            return a;
        }
        if (is_kw("this") && peek(1).kind == Tok::Sym && peek(1).text == ":=")
            throw LangError("assignment to 'this'", p);
        return compare();
    }

    NodePtr compare() {
        auto a = additive();
        Pos p = peek().pos;
        if (is_sym("==")) {
            ++i_;
            auto n = make_node(Kind::Identity, p);
            n->kids.push_back(std::move(a));
            n->kids.push_back(additive());
            return n;
        }
        if (is_sym("=") || is_sym("<")) {
            std::string op = take().text;
            auto n = make_node(Kind::BinOp, p, op);
            n->kids.push_back(std::move(a));
            n->kids.push_back(additive());
            return n;
        }
        if (is_kw("is_a?")) {
            ++i_;
            auto n = make_node(Kind::IsA, p, ident("class name"));
            n->kids.push_back(std::move(a));
            return n;
        }
        return a;
    }

    NodePtr additive() {
        auto a = mult();
        while (is_sym("+") || is_sym("-") || is_sym("|")) {
            Pos p = peek().pos;
            auto n = make_node(Kind::BinOp, p, take().text);
            n->kids.push_back(std::move(a));
            n->kids.push_back(mult());
            a = std::move(n);
        }
        return a;
    }

    NodePtr mult() {
        auto a = postfix();
        while (is_sym("*") || is_sym("&")) {
            Pos p = peek().pos;
            auto n = make_node(Kind::BinOp, p, take().text);
            n->kids.push_back(std::move(a));
            n->kids.push_back(postfix());
            a = std::move(n);
        }
        return a;
    }

    void args(Node& into) {
        expect_sym("(");
        if (!is_sym(")")) {
            for (;;) {
                into.kids.push_back(expr());
                if (!is_sym(",")) break;
                ++i_;
            }
        }
        expect_sym(")");
    }

    NodePtr postfix() {
        auto a = primary();
        for (;;) {
            Pos p = peek().pos;
            if (is_sym(".")) {
                ++i_;
                auto n = make_node(Kind::Call, p, ident("method name"));
                n->kids.push_back(std::move(a));
                args(*n);
                a = std::move(n);
            } else if (is_sym("[")) {
                ++i_;
                auto n = make_node(Kind::Index, p);
                n->kids.push_back(std::move(a));
                n->kids.push_back(stmt());
                expect_sym("]");
                a = std::move(n);
            } else {
                return a;
            }
        }
    }

    NodePtr primary() {
        Pos p = peek().pos;
        const Token& t = peek();
        if (t.kind == Tok::Num) {
            auto n = make_node(Kind::NumLit, p);
            n->num = take().num;
            return n;
        }
        if (t.kind == Tok::Field) {
            std::string n = take().text;
            if (n == "c") throw LangError("reserved field '@c'", p);
            if (in_main_) throw LangError("field access outside a method", p);
            return make_node(Kind::IVar, p, n);
        }
        if (t.kind == Tok::Ident) {
            std::string n = take().text;
            if (is_sym("(")) {
                if (in_main_) throw LangError("implicit receiver outside a method", p);
                auto c = make_node(Kind::Call, p, n);
                c->kids.push_back(make_node(Kind::This, p));
                args(*c);
                return c;
            }
            check_var(n, p);
            return make_node(Kind::Var, p, n);
        }
        if (t.kind == Tok::Kw) {
            if (t.text == "null") {
                ++i_;
                return make_node(Kind::Null, p);
            }
            if (t.text == "this") {
                if (in_main_) throw LangError("'this' outside a method", p);
                ++i_;
                return make_node(Kind::This, p);
            }
            if (t.text == "true" || t.text == "false") {
                auto n = make_node(Kind::BoolLit, p);
                n->num = take().text == "true";
                return n;
            }
            if (t.text == "new") {
                ++i_;
                auto n = make_node(Kind::New, p, ident("class name"));
                args(*n);
                return n;
            }
            if (t.text == "if") {
                ++i_;
                auto n = make_node(Kind::If, p);
                n->kids.push_back(stmt());
                expect_kw("then");
                n->kids.push_back(stmt());
                if (is_kw("else")) {
                    ++i_;
                    n->kids.push_back(stmt());
                } else {
                    n->has_else = false;
                }
                expect_kw("fi");
                return n;
            }
            if (t.text == "while") {
                ++i_;
                auto n = make_node(Kind::While, p);
                n->kids.push_back(stmt());
                expect_kw("do");
                n->kids.push_back(stmt());
                expect_kw("od");
                return n;
            }
        }
        if (is_sym("(")) {
            ++i_;
            auto n = stmt();
            expect_sym(")");
            return n;
        }
        if (at_end()) fail("unexpected end of input");
        fail("unexpected '" + t.text + "'");
    }
};

NodePtr desugar_node(const Node& n, long long cap) {
    switch (n.kind) {
        case Kind::NumLit: {
            if (n.num > cap)
                throw LangError("numeral " + std::to_string(n.num) + " exceeds literal cap " +
                                    std::to_string(cap),
                                n.pos);
            auto z = make_node(Kind::New, n.pos, "num");
            z->kids.push_back(make_node(Kind::Null, n.pos));
            NodePtr cur = std::move(z);
            for (long long k = 0; k < n.num; ++k) {
                auto s = make_node(Kind::Call, n.pos, "succ");
                s->kids.push_back(std::move(cur));
                cur = std::move(s);
            }
            return cur;
        }
        case Kind::BoolLit: {
            auto f = make_node(Kind::New, n.pos, "bool");
            f->kids.push_back(make_node(Kind::Null, n.pos));
            if (!n.num) return f;
            auto t = make_node(Kind::Call, n.pos, "not");
            t->kids.push_back(std::move(f));
            return t;
        }
        case Kind::BinOp: {
            auto c = make_node(Kind::Call, n.pos, kOps.at(n.name));
            c->kids.push_back(desugar_node(*n.kids[0], cap));
            c->kids.push_back(desugar_node(*n.kids[1], cap));
            return c;
        }
        case Kind::Index: {
            auto c = make_node(Kind::Call, n.pos, "index");
            c->kids.push_back(desugar_node(*n.kids[0], cap));
            c->kids.push_back(desugar_node(*n.kids[1], cap));
            return c;
        }
        default: break;
    }
    auto out = std::make_unique<Node>();
    out->kind = n.kind;
    out->id = n.id;
    out->origin = n.origin;
    out->name = n.name;
    out->num = n.num;
    out->marked = n.marked;
    out->filter = n.filter;
    out->guard = n.guard;
    out->pos = n.pos;
    for (auto& k : n.kids) out->kids.push_back(desugar_node(*k, cap));
    if (n.kind == Kind::If && !n.has_else) out->kids.push_back(make_node(Kind::Null, n.pos));
    out->has_else = true;
    return out;
}

void collect_fields(const Node& n, std::set<std::string>& out) {
    if (n.kind == Kind::IVar || n.kind == Kind::AssignField) out.insert(n.name);
    for (auto& k : n.kids) collect_fields(*k, out);
}

const std::set<std::string> kPreludeNames = {"object", "num", "bool", "nil", "cons"};

const std::string kPrelude = R"(
class num < object {
  method init(p) { @pred := p; this }
  method succ() { new num(this) }
  method pred() { @pred }
  method is_zero() { @pred == null }
  method m_add(o) {
    if o.is_zero() then this else this.succ().m_add(o.pred()) fi
  }
  method m_eq(o) {
    if this.is_zero() then o.is_zero()
    else if o.is_zero() then false else @pred.m_eq(o.pred()) fi fi
  }
}
class bool < object {
  method init(v) { if v == null then @v := null else @v := this fi; this }
  method not() { if this then false else new bool(this) fi }
  method m_and(o) { if this then o else this fi }
  method m_or(o) { if this then this else o fi }
  method to_ref() { @v }
}
class nil < object {
  method index(i) { null }
  method size() { 0 }
}
class cons < object {
  method init(h, t) { @head := h; @tail := t; this }
  method index(i) { if i.is_zero() then @head else @tail.index(i.pred()) fi }
  method size() { @tail.size().succ() }
}
)";

}  // namespace

bool is_prelude_class(const std::string& name) { return kPreludeNames.count(name) > 0; }

const std::string& prelude_source() { return kPrelude; }

Program parse_program(const std::string& text) {
    Parser ps(lex(text));
    return ps.program();
}

Program desugar(const Program& p, long long literal_cap) {
    Program out;
    out.classes = p.classes;
    for (auto& c : out.classes)
        for (auto& m : c.methods) m.body = desugar_node(*m.body, literal_cap);
    out.main = desugar_node(*p.main, literal_cap);
    out.expanded = p.expanded;
    out.universe = p.universe;
    if (p.expanded) finalize(out);
    return out;
}

Program load_prelude() {
    Program p = parse_program(kPrelude);
    ClassDecl obj;
    obj.name = "object";
    obj.prelude = true;
    p.classes.insert(p.classes.begin(), obj);
    for (auto& c : p.classes) c.prelude = true;
    return desugar(p);
}

Program merge_prelude(const Program& user) {
    Program pre = load_prelude();
    for (auto& c : user.classes)
        if (is_prelude_class(c.name))
            throw LangError("class '" + c.name + "' clashes with a builtin class", c.pos);
    Program out;
    out.classes = pre.classes;
    for (auto& c : user.classes) out.classes.push_back(c);
    out.main = user.main->clone();
    return out;
}

Program expand_inheritance(const Program& p) {
    std::map<std::string, int> idx;
    for (size_t i = 0; i < p.classes.size(); ++i) {
        auto& c = p.classes[i];
        if (!idx.emplace(c.name, static_cast<int>(i)).second)
            throw LangError("duplicate class '" + c.name + "'", c.pos);
    }
    for (auto& c : p.classes) {
        if (c.parent.empty()) {
            if (c.name != "object") throw LangError("class '" + c.name + "' has no parent", c.pos);
            continue;
        }
        if (!idx.count(c.parent))
            throw LangError("unknown parent class '" + c.parent + "'", c.pos);
        for (size_t a = 0; a < c.methods.size(); ++a)
            for (size_t b = a + 1; b < c.methods.size(); ++b)
                if (c.methods[a].name == c.methods[b].name &&
                    c.methods[a].arity() == c.methods[b].arity())
                    throw LangError("duplicate method '" + c.methods[b].name + "'", c.methods[b].pos);
    }

    std::vector<std::vector<Method>> done(p.classes.size());
    std::vector<int> state(p.classes.size(), 0);  // 0 new, 1 visiting, 2 done
    std::function<void(int)> visit = [&](int i) {
        if (state[i] == 2) return;
        auto& c = p.classes[i];
        if (state[i] == 1) throw LangError("inheritance cycle through '" + c.name + "'", c.pos);
        state[i] = 1;
        std::vector<Method> ms;
        if (!c.parent.empty()) {
            int pi = idx.at(c.parent);
            visit(pi);
            ms = done[pi];
        }
        for (auto& [from, to] : c.renames) {
            bool found = false;
            for (auto& m : ms)
                if (m.name == from) {
                    m.name = to;
                    found = true;
                }
            if (!found) throw LangError("rename of nonexistent method '" + from + "'", c.pos);
        }
        for (auto& own : c.methods) {
            bool replaced = false;
            for (auto& m : ms)
                if (m.name == own.name && m.arity() == own.arity()) {
                    m = own;
                    replaced = true;
                }
            if (!replaced) ms.push_back(own);
        }
        // renamed copies may collide with each other
        for (size_t a = 0; a < ms.size(); ++a)
            for (size_t b = a + 1; b < ms.size(); ++b)
                if (ms[a].name == ms[b].name && ms[a].arity() == ms[b].arity()) {
                    ms.erase(ms.begin() + static_cast<long>(a));
                    --a;
                    break;
                }
        done[i] = std::move(ms);
        state[i] = 2;
    };
    for (size_t i = 0; i < p.classes.size(); ++i) visit(static_cast<int>(i));
    std::function<void(const Node&)> known = [&](const Node& n) {
        if ((n.kind == Kind::New || n.kind == Kind::IsA) && !idx.count(n.name))
            throw LangError("unknown class '" + n.name + "'", n.pos);
        for (auto& k : n.kids) known(*k);
    };
    for (auto& c : p.classes)
        for (auto& m : c.methods) known(*m.body);
    known(*p.main);

    Program out;
    std::vector<std::string> names;
    for (size_t i = 0; i < p.classes.size(); ++i) {
        ClassDecl c;
        c.name = p.classes[i].name;
        c.parent = c.name == "object" ? "" : "object";
        c.methods = std::move(done[i]);
        c.prelude = p.classes[i].prelude;
        c.pos = p.classes[i].pos;
        std::set<std::string> fs;
        for (auto& m : c.methods) collect_fields(*m.body, fs);
        c.fields.assign(fs.begin(), fs.end());
        names.push_back(c.name);
        out.classes.push_back(std::move(c));
    }
    out.main = p.main->clone();
    out.expanded = true;
    out.universe = make_universe(names);
    finalize(out);
    return out;
}

Program load_program(const std::string& text, long long literal_cap) {
    Program user = parse_program(text);
    return expand_inheritance(desugar(merge_prelude(user), literal_cap));
}

void reindex(Program& p) {
    p.nodes.assign(p.node_count, nullptr);
    p.parent.assign(p.node_count, -1);
    p.unit_of.assign(p.node_count, -1);
    p.units.clear();
    p.class_index.clear();
    for (size_t i = 0; i < p.classes.size(); ++i) p.class_index[p.classes[i].name] = static_cast<int>(i);
    std::function<void(const Node&, int, int)> walk = [&](const Node& n, int par, int unit) {
        if (n.id < 0 || n.id >= p.node_count) throw std::logic_error("node id out of range");
        p.nodes[n.id] = &n;
        p.parent[n.id] = par;
        p.unit_of[n.id] = unit;
        for (auto& k : n.kids) walk(*k, n.id, unit);
    };
    for (size_t c = 0; c < p.classes.size(); ++c)
        for (size_t m = 0; m < p.classes[c].methods.size(); ++m) {
            int u = static_cast<int>(p.units.size());
            p.units.push_back({static_cast<int>(c), static_cast<int>(m), p.classes[c].methods[m].body.get()});
            walk(*p.classes[c].methods[m].body, -1, u);
        }
    p.units.push_back({-1, -1, p.main.get()});
    walk(*p.main, -1, static_cast<int>(p.units.size()) - 1);
}

void finalize(Program& p) {
    int next = 0;
    std::function<void(Node&)> number = [&](Node& n) {
        n.id = next++;
        for (auto& k : n.kids) number(*k);
    };
    for (auto& c : p.classes)
        for (auto& m : c.methods) number(*m.body);
    number(*p.main);
    p.node_count = next;
    reindex(p);
}

namespace {

bool atomic(const Node& n) {
    switch (n.kind) {
        case Kind::Null:
        case Kind::Var:
        case Kind::IVar:
        case Kind::This:
        case Kind::Call:
        case Kind::New:
        case Kind::NumLit:
        case Kind::BoolLit:
        case Kind::Index:
        case Kind::If:
        case Kind::While:
        case Kind::Identity:
        case Kind::IsA:
        case Kind::BinOp:
        case Kind::TypeFilter:
            return true;
        default:
            return false;
    }
}

thread_local const NameHook* g_hook = nullptr;

std::string shown(const Node& n, const std::string& fallback) {
    if (g_hook && *g_hook) {
        std::string s = (*g_hook)(n);
        if (!s.empty()) return s;
    }
    return fallback;
}

void print(const Node& n, std::string& o);

void print_operand(const Node& n, std::string& o) {
    bool paren = !atomic(n) || n.kind == Kind::Identity || n.kind == Kind::IsA || n.kind == Kind::BinOp;
    if (paren) o += "(";
    print(n, o);
    if (paren) o += ")";
}

void print_arg(const Node& n, std::string& o) {
    if (n.kind == Kind::Seq) {
        o += "(";
        print(n, o);
        o += ")";
    } else {
        print(n, o);
    }
}

void print(const Node& n, std::string& o) {
    switch (n.kind) {
        case Kind::Null: o += "null"; break;
        case Kind::Var: o += shown(n, n.name); break;
        case Kind::IVar: o += shown(n, "@" + n.name); break;
        case Kind::This: o += "this"; break;
        case Kind::NumLit: o += std::to_string(n.num); break;
        case Kind::BoolLit: o += n.num ? "true" : "false"; break;
        case Kind::Identity:
            print_operand(*n.kids[0], o);
            o += " == ";
            print_operand(*n.kids[1], o);
            break;
        case Kind::IsA:
            print_operand(*n.kids[0], o);
            o += " is_a? " + n.name;
            break;
        case Kind::BinOp:
            print_operand(*n.kids[0], o);
            o += " " + n.name + " ";
            print_operand(*n.kids[1], o);
            break;
        case Kind::Index:
            print_operand(*n.kids[0], o);
            o += "[";
            print(*n.kids[1], o);
            o += "]";
            break;
        case Kind::Call: {
            print_operand(*n.kids[0], o);
            o += "." + n.name + "(";
            for (size_t i = 1; i < n.kids.size(); ++i) {
                if (i > 1) o += ", ";
                print_arg(*n.kids[i], o);
            }
            o += ")";
            break;
        }
        case Kind::New:
            o += "new " + n.name + "(";
            for (size_t i = 0; i < n.kids.size(); ++i) {
                if (i) o += ", ";
                print_arg(*n.kids[i], o);
            }
            o += ")";
            break;
        case Kind::AssignLocal:
            o += shown(n, n.name) + " := ";
            print_arg(*n.kids[0], o);
            break;
        case Kind::AssignField:
            o += shown(n, "@" + n.name) + " := ";
            print_arg(*n.kids[0], o);
            break;
        case Kind::If:
            o += n.marked ? "if% " : "if ";
            print(*n.kids[0], o);
            o += " then ";
            print(*n.kids[1], o);
            if (n.kids.size() > 2) {
                o += " else ";
                print(*n.kids[2], o);
            }
            o += " fi";
            break;
        case Kind::While:
            o += "while ";
            print(*n.kids[0], o);
            o += " do ";
            print(*n.kids[1], o);
            o += " od";
            break;
        case Kind::Seq:
            for (size_t i = 0; i < n.kids.size(); ++i) {
                if (i) o += "; ";
                print_arg(*n.kids[i], o);
            }
            break;
        case Kind::Block:
            o += "begin ";
            if (!n.kids.empty()) print(*n.kids[0], o);
            o += " end";
            break;
        case Kind::TypeFilter: {
            o += "({";
            for (size_t i = 0; i < n.filter.size(); ++i) o += (i ? "," : "") + n.filter[i];
            o += "} & ";
            print_operand(*n.kids[0], o);
            o += ")";
            break;
        }
        case Kind::Phi:
            o += "phi(" + n.name + ")";
            break;
    }
}

}  // namespace

std::string pretty(const Node& n, const NameHook& hook) {
    std::string o;
    const NameHook* saved = g_hook;
    g_hook = &hook;
    print(n, o);
    g_hook = saved;
    return o;
}

std::string pretty(const Program& p, bool include_prelude) {
    std::string o;
    for (auto& c : p.classes) {
        if (c.prelude && !include_prelude) continue;
        if (c.parent.empty()) {
            o += "# class " + c.name + "\n";
            continue;
        }
        o += "class " + c.name + " < " + c.parent + " {\n";
        for (auto& [a, b] : c.renames) o += "  rename " + a + " " + b + "\n";
        for (auto& m : c.methods) {
            o += "  method " + m.name + "(";
            for (size_t i = 0; i < m.params.size(); ++i) o += (i ? ", " : "") + m.params[i];
            o += ") { " + pretty(*m.body) + " }\n";
        }
        o += "}\n";
    }
    o += pretty(*p.main) + "\n";
    return o;
}

}  // namespace dyn
