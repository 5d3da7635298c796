#include "dyn/tassert.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace dyn {

namespace {

bool has_bottom(const Disjunct& d) {
    for (auto& [s, t] : d)
        if (t.is_bottom()) return true;
    return false;
}

// d1 implies d2 literal-wise (absent subject = TOP).
bool subsumed(const Disjunct& d1, const Disjunct& d2) {
    for (auto& [s, t2] : d2) {
        auto it = d1.find(s);
        if (it == d1.end()) {
            if (!t2.is_top()) return false;
        } else if (!leq(it->second, t2)) {
            return false;
        }
    }
    return true;
}

void add_literal(Disjunct& d, const Subject& s, const UnionType& t) {
    auto it = d.find(s);
    if (it == d.end())
        d.emplace(s, t);
    else
        it->second = meet(it->second, t);
}

}  // namespace

bool vacuous(const Disjunct& d) { return has_bottom(d); }

TAsrt::TAsrt(UniverseRef u, std::vector<Disjunct> ds) : u_(std::move(u)), ds_(std::move(ds)) { canonicalize(); }

TAsrt TAsrt::lit(const UniverseRef& u, const Subject& s, const UnionType& t) {
    Disjunct d;
    d.emplace(s, t);
    return TAsrt(u, {d});
}

void TAsrt::canonicalize() {
    for (auto& d : ds_) {
        for (auto it = d.begin(); it != d.end();) {
            if (it->second.is_top())
                it = d.erase(it);
            else
                ++it;
        }
    }
    std::sort(ds_.begin(), ds_.end());
    ds_.erase(std::unique(ds_.begin(), ds_.end()), ds_.end());
    bool any_sat = false;
    for (auto& d : ds_)
        if (!has_bottom(d)) any_sat = true;
    if (any_sat) {
        ds_.erase(std::remove_if(ds_.begin(), ds_.end(), has_bottom), ds_.end());
    } else if (ds_.size() > 1) {
        ds_.resize(1);
    }
    std::vector<Disjunct> kept;
    for (size_t i = 0; i < ds_.size(); ++i) {
        bool drop = false;
        for (size_t j = 0; j < ds_.size() && !drop; ++j) {
            if (i == j || !subsumed(ds_[i], ds_[j])) continue;
            // equal disjuncts were removed, so mutual subsumption cannot happen
            drop = true;
        }
        if (!drop) kept.push_back(ds_[i]);
    }
    ds_ = std::move(kept);
}

bool TAsrt::is_false() const {
    if (ds_.empty()) return true;
    for (auto& d : ds_)
        if (!has_bottom(d)) return false;
    return true;
}

std::vector<Subject> TAsrt::subjects() const {
    std::set<Subject> s;
    for (auto& d : ds_)
        for (auto& [k, t] : d) s.insert(k);
    return {s.begin(), s.end()};
}

std::string TAsrt::str() const {
    if (ds_.empty()) return "false";
    std::string o;
    for (size_t i = 0; i < ds_.size(); ++i) {
        if (i) o += " or ";
        const Disjunct& d = ds_[i];
        if (d.empty()) {
            o += "true";
            continue;
        }
        bool paren = ds_.size() > 1 && d.size() > 1;
        if (paren) o += "(";
        bool first = true;
        for (auto& [s, t] : d) {
            if (!first) o += " and ";
            o += "[" + s + "] in " + t.str();
            first = false;
        }
        if (paren) o += ")";
    }
    return o;
}

static UniverseRef pick(const TAsrt& a, const TAsrt& b) { return a.universe() ? a.universe() : b.universe(); }

TAsrt disj(const TAsrt& a, const TAsrt& b) {
    auto ds = a.disjuncts();
    ds.insert(ds.end(), b.disjuncts().begin(), b.disjuncts().end());
    return TAsrt(pick(a, b), ds);
}

TAsrt conj(const TAsrt& a, const TAsrt& b) {
    std::vector<Disjunct> ds;
    for (auto& d1 : a.disjuncts())
        for (auto& d2 : b.disjuncts()) {
            Disjunct d = d1;
            for (auto& [s, t] : d2) add_literal(d, s, t);
            ds.push_back(std::move(d));
        }
    return TAsrt(pick(a, b), ds);
}

TAsrt negate(const TAsrt& a) {
    const UniverseRef& u = a.universe();
    TAsrt out = TAsrt::truth(u);
    for (auto& d : a.disjuncts()) {
        std::vector<Disjunct> alts;
        for (auto& [s, t] : d) {
            Disjunct n;
            n.emplace(s, complement(t));
            alts.push_back(n);
        }
        out = conj(out, TAsrt(u, alts));
    }
    return out;
}

TAsrt substitute(const TAsrt& t, const Subject& from, const Subject& to) {
    if (from == to) return t;
    std::vector<Disjunct> ds;
    for (auto d : t.disjuncts()) {
        auto it = d.find(from);
        if (it != d.end()) {
            UnionType ty = it->second;
            d.erase(it);
            add_literal(d, to, ty);
        }
        ds.push_back(std::move(d));
    }
    return TAsrt(t.universe(), ds);
}

TAsrt substitute_const(const TAsrt& t, const Subject& s, const UnionType& k) {
    std::vector<Disjunct> ds;
    for (auto d : t.disjuncts()) {
        auto it = d.find(s);
        if (it != d.end()) {
            // a value of type k satisfies s∈T for sure only when k ⊑ T
            if (!leq(k, it->second)) continue;
            d.erase(it);
        }
        ds.push_back(std::move(d));
    }
    return TAsrt(t.universe(), ds);
}

TAsrt drop(const TAsrt& t, const std::function<bool(const Subject&)>& pred) {
    std::vector<Disjunct> ds;
    for (auto d : t.disjuncts()) {
        for (auto it = d.begin(); it != d.end();) {
            if (pred(it->first))
                it = d.erase(it);
            else
                ++it;
        }
        ds.push_back(std::move(d));
    }
    return TAsrt(t.universe(), ds);
}

TAsrt drop_subject(const TAsrt& t, const Subject& s) {
    return drop(t, [&](const Subject& x) { return x == s; });
}

TAsrt with_literal(const TAsrt& t, const Subject& s, const UnionType& ty) {
    return conj(t, TAsrt::lit(ty.universe(), s, ty));
}

UnionType project_var(const TAsrt& t, const Subject& x) {
    UnionType out = UnionType::bottom(t.universe());
    for (auto& d : t.disjuncts()) {
        if (has_bottom(d)) continue;
        auto it = d.find(x);
        out = join(out, it == d.end() ? UnionType::top(t.universe()) : it->second);
    }
    return out;
}

bool implies(const TAsrt& a, const TAsrt& b) {
    for (auto& d1 : a.disjuncts()) {
        if (has_bottom(d1)) continue;
        bool ok = false;
        for (auto& d2 : b.disjuncts())
            if (subsumed(d1, d2)) {
                ok = true;
                break;
            }
        if (!ok) return false;
    }
    return true;
}

bool eval_disjunct(const Disjunct& d, const StateView& state) {
    for (auto& [s, t] : d) {
        auto c = state(s);
        if (!c) throw std::invalid_argument("unresolvable subject " + s);
        if (!t.contains(*c)) return false;
    }
    return true;
}

bool eval_on_state(const TAsrt& t, const StateView& state) {
    for (auto& d : t.disjuncts())
        if (eval_disjunct(d, state)) return true;
    return false;
}

bool implies_exact(const TAsrt& a, const TAsrt& b) {
    std::set<Subject> subs;
    for (auto& s : a.subjects()) subs.insert(s);
    for (auto& s : b.subjects()) subs.insert(s);
    std::vector<Subject> vs(subs.begin(), subs.end());
    const UniverseRef& u = a.universe() ? a.universe() : b.universe();
    if (!u) return a.is_false() || !b.is_false();
    int choices = u->size() + 1;
    std::vector<int> pick(vs.size(), 0);
    for (;;) {
        StateView st = [&](const Subject& s) -> std::optional<std::string> {
            auto it = std::find(vs.begin(), vs.end(), s);
            if (it == vs.end()) return std::nullopt;
            return u->name_of_bit(pick[it - vs.begin()]);
        };
        if (eval_on_state(a, st) && !eval_on_state(b, st)) return false;
        size_t i = 0;
        while (i < pick.size() && ++pick[i] == choices) pick[i++] = 0;
        if (i == pick.size()) break;
    }
    return true;
}

bool valid_subject(const Subject& s) {
    if (s.empty()) return false;
    auto ident = [](const std::string& x) {
        if (x.empty() || !(std::isalpha(static_cast<unsigned char>(x[0])) || x[0] == '_')) return false;
        for (char c : x)
            if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
        return true;
    };
    if (s[0] == '@') return ident(s.substr(1));
    if (s[0] == '$') {
        auto dot = s.find('.');
        if (dot == std::string::npos || dot == 1 || dot + 1 == s.size()) return false;
        for (size_t i = 1; i < s.size(); ++i)
            if (i != dot && !std::isdigit(static_cast<unsigned char>(s[i]))) return false;
        return true;
    }
    return ident(s);
}

namespace {

class FormulaParser {
public:
    FormulaParser(const UniverseRef& u, const std::string& t) : u_(u), t_(t) {}

    FormulaPtr parse() {
        auto f = parse_or();
        skip();
        if (i_ != t_.size()) fail("unexpected text");
        return f;
    }

private:
    const UniverseRef& u_;
    const std::string& t_;
    size_t i_ = 0;

    [[noreturn]] void fail(const std::string& m) const {
        throw AssertionSyntaxError(m + " at offset " + std::to_string(i_) + " in '" + t_ + "'");
    }
    void skip() {
        while (i_ < t_.size() && std::isspace(static_cast<unsigned char>(t_[i_]))) ++i_;
    }
    bool word(const char* w) {
        skip();
        size_t n = std::char_traits<char>::length(w);
        if (t_.compare(i_, n, w) != 0) return false;
        if (i_ + n < t_.size() && (std::isalnum(static_cast<unsigned char>(t_[i_ + n])) || t_[i_ + n] == '_'))
            return false;
        i_ += n;
        return true;
    }
    bool sym(char c) {
        skip();
        if (i_ < t_.size() && t_[i_] == c) {
            ++i_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!sym(c)) fail(std::string("expected '") + c + "'");
    }

    static FormulaPtr node(Formula::Op op, std::vector<FormulaPtr> kids = {}) {
        auto f = std::make_shared<Formula>();
        f->op = op;
        f->kids = std::move(kids);
        return f;
    }

    FormulaPtr parse_or() {
        auto a = parse_and();
        while (word("or")) a = node(Formula::Op::Or, {a, parse_and()});
        return a;
    }
    FormulaPtr parse_and() {
        auto a = parse_unary();
        while (word("and")) a = node(Formula::Op::And, {a, parse_unary()});
        return a;
    }
    FormulaPtr parse_unary() {
        if (word("not")) return node(Formula::Op::Not, {parse_unary()});
        if (word("true")) return node(Formula::Op::True);
        if (word("false")) return node(Formula::Op::False);
        if (word("opaque")) {
            expect('(');
            skip();
            if (i_ >= t_.size() || t_[i_] != '"') fail("expected string");
            size_t j = t_.find('"', i_ + 1);
            if (j == std::string::npos) fail("unterminated string");
            auto f = std::make_shared<Formula>();
            f->op = Formula::Op::Opaque;
            f->text = t_.substr(i_ + 1, j - i_ - 1);
            i_ = j + 1;
            expect(')');
            return f;
        }
        if (sym('(')) {
            auto f = parse_or();
            expect(')');
            return f;
        }
        if (sym('[')) {
            skip();
            size_t j = t_.find(']', i_);
            if (j == std::string::npos) fail("expected ']'");
            std::string s = t_.substr(i_, j - i_);
            while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
            if (!valid_subject(s)) fail("bad subject '" + s + "'");
            i_ = j + 1;
            if (!word("in")) fail("expected 'in'");
            skip();
            std::string ty;
            if (t_.compare(i_, 3, "TOP") == 0) {
                ty = "TOP";
                i_ += 3;
            } else {
                if (i_ >= t_.size() || t_[i_] != '{') fail("expected type");
                size_t k = t_.find('}', i_);
                if (k == std::string::npos) fail("expected '}'");
                ty = t_.substr(i_, k - i_ + 1);
                i_ = k + 1;
            }
            auto f = std::make_shared<Formula>();
            f->op = Formula::Op::Lit;
            f->subject = s;
            try {
                f->type = parse_type(u_, ty);
            } catch (std::invalid_argument& e) {
                fail(e.what());
            }
            return f;
        }
        fail("expected a literal");
    }
};

TAsrt omega(const Formula& f, bool positive, const UniverseRef& u) {
    switch (f.op) {
        case Formula::Op::True: return positive ? TAsrt::truth(u) : TAsrt::falsity(u);
        case Formula::Op::False: return positive ? TAsrt::falsity(u) : TAsrt::truth(u);
        case Formula::Op::Opaque: return TAsrt::truth(u);
        case Formula::Op::Lit: return TAsrt::lit(u, f.subject, positive ? f.type : complement(f.type));
        case Formula::Op::Not: return omega(*f.kids[0], !positive, u);
        case Formula::Op::And:
        case Formula::Op::Or: {
            TAsrt a = omega(*f.kids[0], positive, u), b = omega(*f.kids[1], positive, u);
            bool is_and = (f.op == Formula::Op::And) == positive;
            return is_and ? conj(a, b) : disj(a, b);
        }
    }
    return TAsrt::truth(u);
}

const UniverseRef* find_universe(const Formula& f) {
    if (f.op == Formula::Op::Lit) return &f.type.universe();
    for (auto& k : f.kids)
        if (auto u = find_universe(*k)) return u;
    return nullptr;
}

}  // namespace

FormulaPtr parse_formula(const UniverseRef& u, const std::string& text) { return FormulaParser(u, text).parse(); }

std::string formula_str(const Formula& f) {
    switch (f.op) {
        case Formula::Op::True: return "true";
        case Formula::Op::False: return "false";
        case Formula::Op::Opaque: return "opaque(\"" + f.text + "\")";
        case Formula::Op::Lit: return "[" + f.subject + "] in " + f.type.str();
        case Formula::Op::Not: return "not (" + formula_str(*f.kids[0]) + ")";
        case Formula::Op::And: return "(" + formula_str(*f.kids[0]) + " and " + formula_str(*f.kids[1]) + ")";
        case Formula::Op::Or: return "(" + formula_str(*f.kids[0]) + " or " + formula_str(*f.kids[1]) + ")";
    }
    return "?";
}

TAsrt filter_omega(const Formula& f) {
    const UniverseRef* u = find_universe(f);
    return omega(f, true, u ? *u : UniverseRef{});
}

TAsrt parse_tasrt(const UniverseRef& u, const std::string& text) {
    TAsrt t = filter_omega(*parse_formula(u, text));
    if (!t.universe()) return TAsrt(u, t.disjuncts());
    return t;
}

bool eval_formula(const Formula& f, const StateView& state, const std::function<bool(const std::string&)>& opaque) {
    switch (f.op) {
        case Formula::Op::True: return true;
        case Formula::Op::False: return false;
        case Formula::Op::Opaque: return opaque(f.text);
        case Formula::Op::Lit: {
            auto c = state(f.subject);
            if (!c) throw std::invalid_argument("unresolvable subject " + f.subject);
            return f.type.contains(*c);
        }
        case Formula::Op::Not: return !eval_formula(*f.kids[0], state, opaque);
        case Formula::Op::And:
            return eval_formula(*f.kids[0], state, opaque) && eval_formula(*f.kids[1], state, opaque);
        case Formula::Op::Or:
            return eval_formula(*f.kids[0], state, opaque) || eval_formula(*f.kids[1], state, opaque);
    }
    return false;
}

}  // namespace dyn
