#include "dyn/proof.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>

#include "dyn/interp.hpp"
#include "dyn/purity.hpp"

namespace dyn {

using ojson = nlohmann::ordered_json;

namespace {

const Subject kR = "r";

TAsrt drop_r(const TAsrt& t) { return drop_subject(t, kR); }

std::string operand(int node, size_t i) { return "$" + std::to_string(node) + "." + std::to_string(i); }

TAsrt drop_operands(const TAsrt& t, int node) {
    std::string prefix = "$" + std::to_string(node) + ".";
    return drop(t, [&](const Subject& s) { return s.compare(0, prefix.size(), prefix) == 0; });
}

UnionType literal(const Disjunct& d, const Subject& s, const UniverseRef& u) {
    auto it = d.find(s);
    return it == d.end() ? UnionType::top(u) : it->second;
}

std::string field_key(const std::string& cls, const std::string& f) { return cls + ".@" + f; }

ojson tasrt_json(const TAsrt& t) {
    ojson a = ojson::array();
    for (auto& d : t.disjuncts()) {
        ojson o = ojson::object();
        for (auto& [s, ty] : d) o[s] = ty.str();
        a.push_back(o);
    }
    return a;
}

TAsrt tasrt_from_json(const UniverseRef& u, const ojson& j) {
    std::vector<Disjunct> ds;
    for (auto& o : j) {
        Disjunct d;
        for (auto& [s, ty] : o.items()) d[s] = parse_type(u, ty.get<std::string>());
        ds.push_back(std::move(d));
    }
    return TAsrt(u, std::move(ds));
}

ojson layered_json(const LayeredAssertion& a) {
    ojson o;
    o["inv"] = a.inv;
    o["lower"] = tasrt_json(a.lower);
    o["higher"] = a.higher;
    return o;
}

LayeredAssertion layered_from_json(const UniverseRef& u, const ojson& j) {
    LayeredAssertion a;
    a.inv = j.at("inv").get<bool>();
    a.lower = tasrt_from_json(u, j.at("lower"));
    a.higher = j.at("higher").get<std::string>();
    return a;
}

LayeredAssertion lay(TAsrt t) { return {true, std::move(t), {}}; }

int unit_of_method(const Program& p, int cls, int mi) {
    for (size_t u = 0; u < p.units.size(); ++u)
        if (p.units[u].cls == cls && p.units[u].method == mi) return static_cast<int>(u);
    return -1;
}

}  // namespace

std::vector<MethodAssumption> method_assumptions(const Analysis& a) {
    const Program& p = a.prog;
    std::set<std::pair<int, int>> reached;
    std::vector<int> work{p.main_unit()};
    std::set<int> seen{p.main_unit()};
    while (!work.empty()) {
        int u = work.back();
        work.pop_back();
        for (auto& c : a.cs.items) {
            if (c.kind != Constraint::Kind::CallEdge || p.unit_of[c.node] != u) continue;
            UnionType recv = c.recv_const ? *c.recv_const : UnionType::bottom(p.universe);
            for (int r : c.recv) recv = join(recv, a.ty.cells[r]);
            for (auto& cal : c.callees) {
                if (!(recv.bits() >> cal.bit & 1u)) continue;
                int ci = p.class_index.at(p.universe->name_of_bit(cal.bit));
                const Method* m = p.classes[ci].find(c.method, c.arity);
                int mi = static_cast<int>(m - p.classes[ci].methods.data());
                reached.insert({ci, mi});
                int cu = unit_of_method(p, ci, mi);
                if (seen.insert(cu).second) work.push_back(cu);
            }
        }
    }
    std::vector<MethodAssumption> out;
    for (auto [ci, mi] : reached) {
        auto& c = p.classes[ci];
        auto& m = c.methods[mi];
        MethodAssumption as;
        as.cls = c.name;
        as.method = m.name;
        as.arity = m.arity();
        Disjunct d;
        d["this"] = UnionType::of(p.universe, {c.name});
        auto& ps = a.ty.param.at({ci, mi});
        for (int i = 0; i < m.arity(); ++i) d[m.params[i]] = a.ty.cells[ps[i]];
        as.pre = TAsrt(p.universe, {d});
        as.post = TAsrt::lit(p.universe, kR, a.ty.cells[a.ty.ret.at({ci, mi})]);
        out.push_back(std::move(as));
    }
    return out;
}

namespace {

class Builder {
public:
    Builder(const Analysis& a, bool safety) : a_(a), p_(a.prog) { (void)safety; }

    ProofNode unit_body(int unit) { return build(*p_.units[unit].body); }

    const TAsrt& xi(int id, bool post) {
        auto key = std::make_pair(id, post);
        auto it = xi_.find(key);
        if (it != xi_.end()) return it->second;
        return xi_.emplace(key, xi_assert(a_, id, post)).first->second;
    }

    ProofNode make(const std::string& rule, int stmt, TAsrt pre, TAsrt post) {
        ProofNode n;
        n.rule = rule;
        n.stmt = stmt;
        n.pre = lay(std::move(pre));
        n.post = lay(std::move(post));
        return n;
    }

    ProofNode cons(ProofNode inner, const TAsrt& pre, const TAsrt& post) {
        if (inner.pre.lower == pre && inner.post.lower == post) return inner;
        ProofNode c = make("CONS", inner.stmt, pre, post);
        c.premises.push_back(std::move(inner));
        return c;
    }

private:
    const Analysis& a_;
    const Program& p_;
    std::map<std::pair<int, bool>, TAsrt> xi_;

    ProofNode axiom(const Node& n, const std::string& rule, TAsrt pre) {
        ProofNode ax = make(rule, n.id, std::move(pre), xi(n.id, true));
        return cons(std::move(ax), xi(n.id, false), xi(n.id, true));
    }

    // Premises for operands evaluated left to right; returns the state after the last one.
    TAsrt operands(const Node& n, size_t count, ProofNode& out) {
        TAsrt cur = xi(n.id, false);
        for (size_t i = 0; i < count; ++i) {
            ProofNode k = build(*n.kids[i]);
            cur = substitute(k.post.lower, kR, operand(n.id, i));
            out.premises.push_back(std::move(k));
        }
        return cur;
    }

    ProofNode build(const Node& n) {
        const TAsrt& pre = xi(n.id, false);
        const TAsrt& post = xi(n.id, true);
        switch (n.kind) {
            case Kind::Null: return axiom(n, "CONST", substitute_const(post, kR, UnionType::null_only(p_.universe)));
            case Kind::Var: return axiom(n, "VAR", substitute(post, kR, n.name));
            case Kind::This: return axiom(n, "VAR", substitute(post, kR, "this"));
            case Kind::IVar: return axiom(n, "IVAR", substitute(post, kR, "@" + n.name));
            case Kind::AssignLocal:
            case Kind::AssignField: {
                bool field = n.kind == Kind::AssignField;
                Subject u = field ? "@" + n.name : n.name;
                ProofNode e = build(*n.kids[0]);
                ProofNode inner = cons(std::move(e), pre, substitute(post, u, kR));
                ProofNode node = make(field ? "θ-IASGN" : "ASGN", n.id, pre, post);
                if (field) {
                    node.side["class"] = p_.classes[p_.units[p_.unit_of[n.id]].cls].name;
                    node.side["field"] = n.name;
                    node.side["witness"] = project_var(inner.post.lower, kR).str();
                }
                node.premises.push_back(std::move(inner));
                return node;
            }
            case Kind::Seq:
            case Kind::Block: {
                if (n.kids.empty()) return axiom(n, "CONST", substitute_const(post, kR, UnionType::null_only(p_.universe)));
                ProofNode node = make("SEQ", n.id, pre, post);
                for (auto& k : n.kids) node.premises.push_back(build(*k));
                return node;
            }
            case Kind::If: {
                ProofNode node = make("COND", n.id, pre, post);
                node.side["marked"] = n.marked;
                for (size_t i = n.marked ? 1 : 0; i < 3; ++i) node.premises.push_back(build(*n.kids[i]));
                return node;
            }
            case Kind::While: {
                ProofNode node = make("LOOP", n.id, pre, post);
                node.side["inv"] = tasrt_json(xi(n.kids[0]->id, false));
                node.premises.push_back(build(*n.kids[0]));
                node.premises.push_back(build(*n.kids[1]));
                return node;
            }
            case Kind::Identity:
            case Kind::IsA: {
                ProofNode node = make(n.kind == Kind::Identity ? "EQ" : "ISA", n.id, pre, post);
                operands(n, n.kids.size(), node);
                return node;
            }
            case Kind::Call: {
                ProofNode node = make("METH", n.id, pre, post);
                node.side["method"] = n.name;
                node.side["arity"] = static_cast<int>(n.kids.size()) - 1;
                operands(n, n.kids.size(), node);
                return node;
            }
            case Kind::New: {
                ProofNode node = make("CNSTR", n.id, pre, post);
                node.side["class"] = n.name;
                TAsrt d = operands(n, n.kids.size(), node);
                ProofNode alloc = make("θ-NEW", n.id, d, d);
                alloc.side["class"] = n.name;
                node.premises.push_back(std::move(alloc));
                return node;
            }
            case Kind::TypeFilter: {
                ProofNode node = make("FILTER", n.id, pre, post);
                node.side["type"] = UnionType::of(p_.universe, n.filter).str();
                node.premises.push_back(build(*n.kids[0]));
                return node;
            }
            default: throw ProofError(std::string("no proof rule for ") + kind_name(n.kind));
        }
    }
};

}  // namespace

Proof build_typing_proof(const Analysis& a, bool safety) {
    auto bad = check_consistency(a.prog, a.cs, a.ty);
    if (!bad.empty()) throw ProofError("inconsistent typing: " + bad.front());
    const Program& p = a.prog;
    Builder b(a, safety);
    Proof proof;
    ProofNode& root = proof.root;
    root.rule = "REC";
    root.stmt = p.main->id;
    ojson inv = ojson::object();
    for (auto& [k, t] : invariant_table(a)) inv[field_key(k.first, k.second)] = t.str();
    root.side["safety"] = safety;
    root.side["invariant"] = inv;
    ojson assumptions = ojson::array();
    auto as = method_assumptions(a);
    for (auto& m : as) {
        ojson o;
        o["class"] = m.cls;
        o["method"] = m.method;
        o["arity"] = m.arity;
        o["pre"] = tasrt_json(m.pre);
        o["post"] = tasrt_json(m.post);
        assumptions.push_back(o);
    }
    root.side["assumptions"] = assumptions;
    for (auto& m : as) {
        int ci = p.class_index.at(m.cls);
        const Method* meth = p.classes[ci].find(m.method, m.arity);
        int unit = unit_of_method(p, ci, static_cast<int>(meth - p.classes[ci].methods.data()));
        ProofNode blk = b.make("BLCK", meth->body->id, m.pre, m.post);
        blk.side["class"] = m.cls;
        blk.side["method"] = m.method;
        blk.side["arity"] = m.arity;
        blk.premises.push_back(b.unit_body(unit));
        root.premises.push_back(std::move(blk));
    }
    ProofNode main = b.unit_body(p.main_unit());
    TAsrt truth = TAsrt::truth(p.universe);
    if (!(main.pre.lower == truth)) {
        TAsrt q = drop(main.post.lower, [](const Subject& s) { return s != kR; });
        ProofNode blk = b.make("BLCK", p.main->id, truth, q);
        blk.side["unit"] = "main";
        blk.premises.push_back(std::move(main));
        main = std::move(blk);
    }
    root.pre = lay(truth);
    root.post = main.post;
    root.premises.push_back(std::move(main));
    return proof;
}

Proof build_typing_proof(const Analysis& a) { return build_typing_proof(a, a.obligations.empty()); }

// ---- checker ----

namespace {

class Checker {
public:
    Checker(const Program& p, CheckReport& rep) : p_(p), u_(p.universe), rep_(rep) {}

    void root(const ProofNode& r) {
        ++rep_.nodes;
        if (r.rule != "REC") return fail(r, "root must be REC");
        if (r.stmt != p_.main->id) return fail(r, "REC must conclude about the main statement");
        try {
            safety_ = r.side.at("safety").get<bool>();
            for (auto& [k, v] : r.side.at("invariant").items()) itab_[k] = parse_type(u_, v.get<std::string>());
            for (auto& o : r.side.at("assumptions")) {
                MethodAssumption m;
                m.cls = o.at("class");
                m.method = o.at("method");
                m.arity = o.at("arity");
                m.pre = tasrt_from_json(u_, o.at("pre"));
                m.post = tasrt_from_json(u_, o.at("post"));
                assumptions_.push_back(std::move(m));
            }
        } catch (std::exception& e) {
            return fail(r, std::string("malformed REC side data: ") + e.what());
        }
        for (auto& [k, t] : itab_) {
            auto dot = k.find(".@");
            const ClassDecl* c = dot == std::string::npos ? nullptr : p_.find_class(k.substr(0, dot));
            if (!c || !std::binary_search(c->fields.begin(), c->fields.end(), k.substr(dot + 2)))
                fail(r, "invariant table names unknown field " + k);
        }
        for (auto& c : p_.classes)
            for (auto& f : c.fields)
                if (!itab_.count(field_key(c.name, f))) fail(r, "invariant table misses " + field_key(c.name, f));
        if (r.premises.size() != assumptions_.size() + 1)
            return fail(r, "REC needs one branch per assumption plus the main statement");
        for (size_t i = 0; i < assumptions_.size(); ++i) branch(r.premises[i], assumptions_[i]);
        const ProofNode& m = r.premises.back();
        if (m.stmt != p_.main->id) fail(r, "last REC premise must prove the main statement");
        if (!implies(TAsrt::truth(u_), m.pre.lower)) fail(r, "main premise needs a precondition");
        if (!implies(m.post.lower, r.post.lower)) fail(r, "REC postcondition does not follow from main");
        check(m);
    }

private:
    const Program& p_;
    UniverseRef u_;
    CheckReport& rep_;
    bool safety_ = true;
    std::map<std::string, UnionType> itab_;
    std::vector<MethodAssumption> assumptions_;

    void fail(const ProofNode& n, const std::string& why) {
        rep_.failures.push_back({n.rule + " #" + std::to_string(n.stmt), why});
    }

    UnionType inv(const std::string& cls, const std::string& f) const {
        auto it = itab_.find(field_key(cls, f));
        return it == itab_.end() ? UnionType::bottom(u_) : it->second;
    }

    const MethodAssumption* assumption(const std::string& cls, const std::string& m, int arity) const {
        for (auto& a : assumptions_)
            if (a.cls == cls && a.method == m && a.arity == arity) return &a;
        return nullptr;
    }

    int unit_cls(int stmt) const { return p_.units[p_.unit_of[stmt]].cls; }

    bool need(const ProofNode& n, bool ok, const std::string& why) {
        if (!ok) fail(n, why);
        return ok;
    }

    bool imp(const ProofNode& n, const TAsrt& a, const TAsrt& b, const std::string& what) {
        if (implies(a, b)) return true;
        fail(n, "unproved implication (" + what + "): " + a.str() + " => " + b.str());
        return false;
    }

    bool premise_stmts(const ProofNode& n, const std::vector<int>& want) {
        if (n.premises.size() != want.size()) {
            fail(n, "expected " + std::to_string(want.size()) + " premises, found " + std::to_string(n.premises.size()));
            return false;
        }
        for (size_t i = 0; i < want.size(); ++i)
            if (n.premises[i].stmt != want[i]) {
                fail(n, "premise " + std::to_string(i) + " proves #" + std::to_string(n.premises[i].stmt) +
                            ", expected #" + std::to_string(want[i]));
                return false;
            }
        return true;
    }

    std::vector<int> kid_ids(const Node& s, size_t from = 0) const {
        std::vector<int> ids;
        for (size_t i = from; i < s.kids.size(); ++i) ids.push_back(s.kids[i]->id);
        return ids;
    }

    void branch(const ProofNode& b, const MethodAssumption& m) {
        ++rep_.nodes;
        const ClassDecl* c = p_.find_class(m.cls);
        const Method* meth = c ? c->find(m.method, m.arity) : nullptr;
        if (!meth) return fail(b, "assumption for unknown method " + m.cls + "." + m.method);
        if (b.rule != "BLCK" || b.stmt != meth->body->id) return fail(b, "branch must be BLCK over " + m.cls + "." + m.method);
        if (!(b.pre.lower == m.pre) || !(b.post.lower == m.post))
            fail(b, "branch conclusion differs from the assumption for " + m.cls + "." + m.method);
        if (!implies(b.pre.lower, TAsrt::lit(u_, "this", UnionType::of(u_, {m.cls}))))
            fail(b, "branch precondition does not fix the receiver class");
        block(b, c, meth);
    }

    void block(const ProofNode& b, const ClassDecl* c, const Method* meth) {
        if (b.premises.size() != 1 || b.premises[0].stmt != b.stmt) return fail(b, "BLCK needs one premise over the body");
        int unit = p_.unit_of[b.stmt];
        if (p_.units[unit].body->id != b.stmt) return fail(b, "BLCK must cover a whole unit body");
        TAsrt entry = b.pre.lower;
        auto locals = unit_locals(p_, unit);
        size_t nparams = meth ? meth->params.size() : 0;
        for (size_t i = nparams; i < locals.size(); ++i) entry = with_literal(entry, locals[i], UnionType::null_only(u_));
        if (c)
            for (auto& f : c->fields) entry = with_literal(entry, "@" + f, inv(c->name, f));
        const ProofNode& body = b.premises[0];
        imp(b, entry, body.pre.lower, "block entry");
        imp(b, drop(body.post.lower, [](const Subject& s) { return s != kR; }), b.post.lower, "block exit");
        check(body);
    }

    // Operand chain: returns the state after all operands with their values as $n.i.
    std::optional<TAsrt> chain(const ProofNode& n, size_t count) {
        TAsrt cur = n.pre.lower;
        for (size_t i = 0; i < count; ++i) {
            const ProofNode& k = n.premises[i];
            if (!imp(n, cur, k.pre.lower, "operand " + std::to_string(i) + " precondition")) return std::nullopt;
            cur = substitute(k.post.lower, kR, operand(n.stmt, i));
        }
        return cur;
    }

    // Result of invoking method m on classes `recv` with the operand state d.
    void invoke(const ProofNode& n, const Disjunct& d, const UnionType& recv, const std::string& m, int arity,
                size_t arg0, std::vector<Disjunct>& out) {
        UnionType ret = UnionType::bottom(u_);
        for (auto& cls : strip_null(recv).class_names()) {
            const ClassDecl* c = p_.find_class(cls);
            if (!c || !c->find(m, arity)) {
                if (safety_) fail(n, "receiver class " + cls + " does not support " + m + "/" + std::to_string(arity));
                continue;
            }
            const MethodAssumption* a = assumption(cls, m, arity);
            if (!a) {
                fail(n, "no assumption for " + cls + "." + m + "/" + std::to_string(arity));
                continue;
            }
            const Method* meth = c->find(m, arity);
            for (int i = 0; i < arity; ++i) {
                UnionType want = a->pre.disjuncts().empty() ? UnionType::bottom(u_) : project_var(a->pre, meth->params[i]);
                UnionType got = literal(d, operand(n.stmt, arg0 + i), u_);
                if (!leq(got, want))
                    fail(n, "argument " + std::to_string(i) + " of " + cls + "." + m + " is " + got.str() +
                                ", assumption allows " + want.str());
            }
            ret = join(ret, project_var(a->post, kR));
        }
        Disjunct res;
        std::string prefix = "$" + std::to_string(n.stmt) + ".";
        int cls = unit_cls(n.stmt);
        for (auto& [s, t] : d) {
            if (s.compare(0, prefix.size(), prefix) == 0 || s == kR) continue;
            res[s] = s[0] == '@' && cls >= 0 ? inv(p_.classes[cls].name, s.substr(1)) : t;
        }
        res[kR] = ret;
        out.push_back(std::move(res));
    }

    void check(const ProofNode& n) {
        ++rep_.nodes;
        if (!n.pre.inv || !n.post.inv) fail(n, "assertion drops the global typing invariant");
        if (n.stmt < 0 || n.stmt >= p_.node_count) return fail(n, "unknown statement");
        const Node& s = *p_.nodes[n.stmt];
        for (auto& d : n.pre.lower.disjuncts())
            if (d.count(kR)) {
                fail(n, "precondition mentions r");
                break;
            }
        const std::string& r = n.rule;
        auto is = [&](std::initializer_list<Kind> ks) {
            bool ok = std::find(ks.begin(), ks.end(), s.kind) != ks.end();
            if (!ok) fail(n, std::string("rule does not apply to ") + kind_name(s.kind));
            return ok;
        };
        if (r == "CONST") {
            if (!is({Kind::Null, Kind::Seq, Kind::Block})) return;
            if (s.kind != Kind::Null && !s.kids.empty()) return fail(n, "CONST over a non-empty sequence");
            need(n, n.premises.empty(), "CONST is an axiom");
            imp(n, n.pre.lower, substitute_const(n.post.lower, kR, UnionType::null_only(u_)), "r := null");
        } else if (r == "VAR") {
            if (!is({Kind::Var, Kind::This})) return;
            need(n, n.premises.empty(), "VAR is an axiom");
            Subject x = s.kind == Kind::This ? "this" : s.name;
            imp(n, n.pre.lower, substitute(n.post.lower, kR, x), "r := " + x);
        } else if (r == "IVAR") {
            if (!is({Kind::IVar})) return;
            need(n, n.premises.empty(), "IVAR is an axiom");
            imp(n, n.pre.lower, substitute(n.post.lower, kR, "@" + s.name), "r := @" + s.name);
        } else if (r == "ASGN" || r == "θ-IASGN") {
            bool field = r == "θ-IASGN";
            if (!is({field ? Kind::AssignField : Kind::AssignLocal})) return;
            if (!premise_stmts(n, {s.kids[0]->id})) return;
            const ProofNode& e = n.premises[0];
            Subject u = field ? "@" + s.name : s.name;
            imp(n, n.pre.lower, e.pre.lower, "assignment precondition");
            imp(n, e.post.lower, substitute(n.post.lower, u, kR), u + " := r");
            if (field) {
                int c = unit_cls(n.stmt);
                if (c < 0) return fail(n, "field assignment outside a method");
                const std::string& cls = p_.classes[c].name;
                if (!implies(n.pre.lower, TAsrt::lit(u_, "this", UnionType::of(u_, {cls}))))
                    fail(n, "precondition does not fix this to {" + cls + "}");
                UnionType w;
                try {
                    w = parse_type(u_, n.side.at("witness").get<std::string>());
                } catch (std::exception&) {
                    return fail(n, "missing witness");
                }
                if (!leq(w, inv(cls, s.name)))
                    fail(n, "witness " + w.str() + " not within I(" + field_key(cls, s.name) + ") = " + inv(cls, s.name).str());
                UnionType v = project_var(e.post.lower, kR);
                if (!leq(v, w)) fail(n, "assigned value " + v.str() + " not within witness " + w.str());
            }
            check(e);
        } else if (r == "SEQ") {
            if (!is({Kind::Seq, Kind::Block})) return;
            if (!premise_stmts(n, kid_ids(s))) return;
            if (n.premises.empty()) return fail(n, "SEQ needs premises");
            imp(n, n.pre.lower, n.premises[0].pre.lower, "sequence entry");
            for (size_t i = 0; i + 1 < n.premises.size(); ++i)
                imp(n, n.premises[i].post.lower, n.premises[i + 1].pre.lower, "sequence step " + std::to_string(i));
            imp(n, n.premises.back().post.lower, n.post.lower, "sequence exit");
            for (auto& k : n.premises) check(k);
        } else if (r == "COND") {
            if (!is({Kind::If})) return;
            if (s.marked) {
                if (!premise_stmts(n, {s.kids[1]->id, s.kids[2]->id})) return;
                for (int i = 0; i < 2; ++i) {
                    imp(n, n.pre.lower, n.premises[i].pre.lower, "branch entry");
                    imp(n, n.premises[i].post.lower, n.post.lower, "branch exit");
                }
            } else {
                if (!premise_stmts(n, kid_ids(s))) return;
                const ProofNode& c = n.premises[0];
                imp(n, n.pre.lower, c.pre.lower, "condition entry");
                TAsrt after = drop_r(c.post.lower);
                for (int i = 1; i < 3; ++i) {
                    imp(n, after, n.premises[i].pre.lower, "branch entry");
                    imp(n, n.premises[i].post.lower, n.post.lower, "branch exit");
                }
                if (safety_) {
                    UnionType ct = project_var(c.post.lower, kR);
                    if (!leq(ct, UnionType::of(u_, {"Null", "bool"}))) fail(n, "condition may be " + ct.str());
                }
            }
            for (auto& k : n.premises) check(k);
        } else if (r == "LOOP") {
            if (!is({Kind::While})) return;
            if (!premise_stmts(n, kid_ids(s))) return;
            TAsrt inv_t;
            try {
                inv_t = tasrt_from_json(u_, n.side.at("inv"));
            } catch (std::exception&) {
                return fail(n, "missing loop invariant");
            }
            const ProofNode& c = n.premises[0];
            const ProofNode& b = n.premises[1];
            imp(n, n.pre.lower, inv_t, "loop entry");
            imp(n, inv_t, c.pre.lower, "condition entry");
            imp(n, drop_r(c.post.lower), b.pre.lower, "body entry");
            imp(n, b.post.lower, inv_t, "invariant preserved");
            imp(n, with_literal(drop_r(c.post.lower), kR, UnionType::null_only(u_)), n.post.lower, "loop exit");
            if (safety_) {
                UnionType ct = project_var(c.post.lower, kR);
                if (!leq(ct, UnionType::of(u_, {"Null", "bool"}))) fail(n, "condition may be " + ct.str());
            }
            check(c);
            check(b);
        } else if (r == "EQ" || r == "ISA") {
            if (!is({r == "EQ" ? Kind::Identity : Kind::IsA})) return;
            if (!premise_stmts(n, kid_ids(s))) return;
            if (auto d = chain(n, s.kids.size())) {
                UnionType b = UnionType::of(u_, {"bool"});
                imp(n, with_literal(drop_operands(drop_r(*d), n.stmt), kR, b), n.post.lower, "fresh boolean");
                const ClassDecl* bc = p_.find_class("bool");
                if (bc && std::binary_search(bc->fields.begin(), bc->fields.end(), "v") &&
                    !leq(UnionType::of(u_, {"Null", "bool"}), inv("bool", "v")))
                    fail(n, "I(bool.@v) does not admit the fresh boolean's field");
            }
            for (auto& k : n.premises) check(k);
        } else if (r == "METH") {
            if (!is({Kind::Call})) return;
            if (!premise_stmts(n, kid_ids(s))) return;
            int arity = static_cast<int>(s.kids.size()) - 1;
            if (auto d = chain(n, s.kids.size())) {
                std::vector<Disjunct> out;
                for (auto& dj : d->disjuncts()) {
                    if (vacuous(dj)) continue;
                    invoke(n, dj, literal(dj, operand(n.stmt, 0), u_), s.name, arity, 1, out);
                }
                imp(n, TAsrt(u_, out), n.post.lower, "call result");
            }
            for (auto& k : n.premises) check(k);
        } else if (r == "CNSTR") {
            if (!is({Kind::New})) return;
            auto want = kid_ids(s);
            want.push_back(n.stmt);
            if (!premise_stmts(n, want)) return;
            const ProofNode& alloc = n.premises.back();
            if (alloc.rule != "θ-NEW") return fail(n, "last CNSTR premise must be θ-NEW");
            int arity = static_cast<int>(s.kids.size());
            if (auto d = chain(n, s.kids.size())) {
                imp(n, *d, alloc.pre.lower, "allocation entry");
                const ClassDecl* c = p_.find_class(s.name);
                std::vector<Disjunct> out;
                for (auto& dj : alloc.post.lower.disjuncts()) {
                    if (vacuous(dj)) continue;
                    UnionType cls = UnionType::of(u_, {s.name});
                    if (c && c->find("init", arity)) {
                        invoke(n, dj, cls, "init", arity, 0, out);
                    } else if (arity == 0) {
                        Disjunct res = dj;
                        res[kR] = cls;
                        out.push_back(std::move(res));
                    } else if (safety_) {
                        fail(n, s.name + " has no init/" + std::to_string(arity));
                    }
                }
                TAsrt res = drop_operands(TAsrt(u_, out), n.stmt);
                imp(n, res, n.post.lower, "constructor result");
            }
            for (auto& k : n.premises) check(k);
        } else if (r == "θ-NEW") {
            if (!is({Kind::New})) return;
            need(n, n.premises.empty(), "θ-NEW is an axiom");
            imp(n, n.pre.lower, n.post.lower, "allocation frame");
            const ClassDecl* c = p_.find_class(s.name);
            if (c)
                for (auto& f : c->fields)
                    if (!inv(c->name, f).has_null())
                        fail(n, "I(" + field_key(c->name, f) + ") = " + inv(c->name, f).str() + " excludes Null");
        } else if (r == "FILTER") {
            if (!is({Kind::TypeFilter})) return;
            if (!premise_stmts(n, kid_ids(s))) return;
            UnionType t = UnionType::of(u_, s.filter);
            imp(n, n.pre.lower, n.premises[0].pre.lower, "filter entry");
            imp(n, with_literal(n.premises[0].post.lower, kR, t), n.post.lower, "filter exit");
            check(n.premises[0]);
        } else if (r == "BLCK") {
            int unit = p_.unit_of[n.stmt];
            int c = p_.units[unit].cls;
            if (c >= 0) return fail(n, "method blocks belong directly under REC");
            need(n, implies(TAsrt::truth(u_), n.pre.lower), "main block precondition must be true");
            block(n, nullptr, nullptr);
        } else if (r == "CONS" || r == "NEUTRAL-CONS") {
            if (!premise_stmts(n, {n.stmt})) return;
            const ProofNode& k = n.premises[0];
            if (r == "NEUTRAL-CONS") {
                need(n, n.pre.lower == k.pre.lower && n.post.lower == k.post.lower, "NEUTRAL-CONS must not change the typing layer");
            } else {
                imp(n, n.pre.lower, k.pre.lower, "consequence precondition");
                imp(n, k.post.lower, n.post.lower, "consequence postcondition");
            }
            check(k);
        } else if (r == "DISJ" || r == "CONJ" || r == "DECOMPOSE") {
            if (!premise_stmts(n, {n.stmt, n.stmt})) return;
            const ProofNode& a = n.premises[0];
            const ProofNode& b = n.premises[1];
            if (r == "DISJ") {
                imp(n, n.pre.lower, disj(a.pre.lower, b.pre.lower), "disjunction precondition");
                imp(n, disj(a.post.lower, b.post.lower), n.post.lower, "disjunction postcondition");
            } else {
                if (r == "DECOMPOSE") need(n, a.pre.lower == b.pre.lower, "DECOMPOSE sub-proofs must share the precondition");
                imp(n, n.pre.lower, a.pre.lower, "conjunction precondition");
                imp(n, n.pre.lower, b.pre.lower, "conjunction precondition");
                imp(n, conj(a.post.lower, b.post.lower), n.post.lower, "conjunction postcondition");
            }
            check(a);
            check(b);
        } else if (r == "INV") {
            if (!premise_stmts(n, {n.stmt})) return;
            TAsrt frame;
            try {
                frame = tasrt_from_json(u_, n.side.at("frame"));
            } catch (std::exception&) {
                return fail(n, "missing frame");
            }
            std::set<Subject> written;
            bool calls = false;
            std::function<void(const Node&)> walk = [&](const Node& x) {
                if (x.kind == Kind::AssignLocal) written.insert(x.name);
                if (x.kind == Kind::AssignField) written.insert("@" + x.name);
                if (x.kind == Kind::Call || x.kind == Kind::New) calls = true;
                for (auto& k : x.kids) walk(*k);
            };
            walk(s);
            for (auto& sub : frame.subjects())
                if (sub == kR || written.count(sub) || (calls && sub[0] == '@'))
                    fail(n, "frame mentions " + sub + ", which the statement may change");
            const ProofNode& k = n.premises[0];
            imp(n, n.pre.lower, conj(k.pre.lower, frame), "framed precondition");
            imp(n, conj(k.post.lower, frame), n.post.lower, "framed postcondition");
            check(k);
        } else if (r == "PURE-EXPR" || r == "PURE-ASGN" || r == "PASGN" || r == "PURE-COND") {
            if (!premise_stmts(n, {n.stmt})) return;
            const ProofNode& k = n.premises[0];
            imp(n, n.pre.lower, k.pre.lower, "pure step precondition");
            imp(n, k.post.lower, n.post.lower, "pure step postcondition");
            const Node* e = &s;
            if (r == "PURE-COND") {
                if (s.kind != Kind::If && s.kind != Kind::While) return fail(n, "PURE-COND needs a conditional");
                e = s.kids[0].get();
            } else if (r != "PURE-EXPR") {
                if (s.kind != Kind::AssignLocal && s.kind != Kind::AssignField) return fail(n, "PURE-ASGN needs an assignment");
                e = s.kids[0].get();
            }
            PurityContext ctx;
            for (auto& sub : n.pre.lower.subjects()) ctx.types[sub] = project_var(n.pre.lower, sub);
            auto t = classify_pure(p_, *e, ctx);
            if (!t) {
                fail(n, "expression #" + std::to_string(e->id) + " is not pure");
            } else if (r == "PURE-COND" && t->k != BaseType::K::Bool) {
                fail(n, "condition is " + t->str() + ", not 𝔹");
            } else if (n.side.contains("type") && n.side["type"].get<std::string>() != t->str()) {
                fail(n, "expression is " + t->str() + ", not " + n.side["type"].get<std::string>());
            }
            check(k);
        } else {
            fail(n, "unknown rule");
        }
    }
};

}  // namespace

std::string CheckReport::str() const {
    std::ostringstream o;
    o << (ok() ? "proof valid" : "proof rejected") << " (" << nodes << " nodes, " << failures.size() << " failures)\n";
    for (auto& f : failures) o << "  " << f.where << ": " << f.reason << "\n";
    return o.str();
}

CheckReport check_proof(const Program& p, const Proof& proof) {
    CheckReport rep;
    Checker(p, rep).root(proof.root);
    return rep;
}

// ---- fusion and extraction ----

namespace {

std::string join_text(const std::string& a, const std::string& b) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    return a + " ∧ " + b;
}

LayeredAssertion fuse_assertion(const LayeredAssertion& h, const LayeredAssertion& l) {
    return {h.inv && l.inv, conj(h.lower, l.lower), join_text(h.higher, l.higher)};
}

bool is_cons(const ProofNode& n) { return n.rule == "CONS" || n.rule == "NEUTRAL-CONS"; }

ProofNode neutral(const ProofNode& n) {
    ProofNode c;
    c.rule = "NEUTRAL-CONS";
    c.stmt = n.stmt;
    c.pre = n.pre;
    c.post = n.post;
    c.premises.push_back(n);
    return c;
}

ProofNode fuse_node(const Program& p, const ProofNode& h, const ProofNode& l) {
    if (h.stmt == l.stmt && h.rule != l.rule) {
        if (is_cons(h) && !is_cons(l)) return fuse_node(p, h, neutral(l));
        if (is_cons(l) && !is_cons(h)) return fuse_node(p, neutral(h), l);
    }
    if (h.rule != l.rule || h.stmt != l.stmt || h.premises.size() != l.premises.size())
        throw ProofError("unalignable proofs at " + l.rule + " #" + std::to_string(l.stmt) + " vs " + h.rule + " #" +
                         std::to_string(h.stmt));
    ProofNode out;
    out.rule = l.rule;
    out.stmt = l.stmt;
    out.pre = fuse_assertion(h.pre, l.pre);
    out.post = fuse_assertion(h.post, l.post);
    out.side = l.side;
    const UniverseRef& u = p.universe;
    if (l.rule == "LOOP" && h.side.contains("inv"))
        out.side["inv"] = tasrt_json(conj(tasrt_from_json(u, h.side["inv"]), tasrt_from_json(u, l.side["inv"])));
    if (l.rule == "θ-IASGN" && h.side.contains("witness"))
        out.side["witness"] = meet(parse_type(u, h.side["witness"].get<std::string>()),
                                   parse_type(u, l.side["witness"].get<std::string>()))
                                  .str();
    if (l.rule == "INV" && h.side.contains("frame"))
        out.side["frame"] = tasrt_json(conj(tasrt_from_json(u, h.side["frame"]), tasrt_from_json(u, l.side["frame"])));
    for (size_t i = 0; i < l.premises.size(); ++i) out.premises.push_back(fuse_node(p, h.premises[i], l.premises[i]));
    return out;
}

}  // namespace

Proof fuse(const Program& p, const Proof& higher, const Proof& lower) {
    const ProofNode& h = higher.root;
    const ProofNode& l = lower.root;
    if (h.rule != "REC" || l.rule != "REC") throw ProofError("fusion needs REC roots");
    if (h.side.value("invariant", ojson()) != l.side.value("invariant", ojson()))
        throw ProofError("fusion needs proofs over the same invariant table");
    auto& ha = h.side["assumptions"];
    auto& la = l.side["assumptions"];
    if (ha.size() != la.size()) throw ProofError("fusion needs the same method assumptions");
    Proof out;
    out.root = fuse_node(p, h, l);
    out.root.side["safety"] = h.side.value("safety", false) && l.side.value("safety", false);
    ojson as = ojson::array();
    for (size_t i = 0; i < la.size(); ++i) {
        if (ha[i]["class"] != la[i]["class"] || ha[i]["method"] != la[i]["method"] || ha[i]["arity"] != la[i]["arity"])
            throw ProofError("fusion needs the same method assumptions");
        ojson o = la[i];
        o["pre"] = tasrt_json(conj(tasrt_from_json(p.universe, ha[i]["pre"]), tasrt_from_json(p.universe, la[i]["pre"])));
        o["post"] =
            tasrt_json(conj(tasrt_from_json(p.universe, ha[i]["post"]), tasrt_from_json(p.universe, la[i]["post"])));
        as.push_back(o);
    }
    out.root.side["assumptions"] = as;
    return out;
}

Proof skeleton(const Proof& p, const std::string& higher) {
    std::function<ProofNode(const ProofNode&)> strip = [&](const ProofNode& n) {
        ProofNode out = n;
        out.pre.lower = TAsrt::truth(n.pre.lower.universe());
        out.post.lower = TAsrt::truth(n.post.lower.universe());
        out.pre.higher = out.post.higher = higher;
        if (out.side.contains("inv")) out.side["inv"] = tasrt_json(TAsrt::truth(n.pre.lower.universe()));
        if (out.side.contains("witness")) out.side["witness"] = UnionType::top(n.pre.lower.universe()).str();
        if (out.side.contains("frame")) out.side["frame"] = tasrt_json(TAsrt::truth(n.pre.lower.universe()));
        out.premises.clear();
        for (auto& k : n.premises) out.premises.push_back(strip(k));
        return out;
    };
    Proof out;
    out.root = strip(p.root);
    if (out.root.side.contains("assumptions"))
        for (auto& a : out.root.side["assumptions"]) {
            a["pre"] = tasrt_json(TAsrt::truth(p.root.pre.lower.universe()));
            a["post"] = tasrt_json(TAsrt::truth(p.root.pre.lower.universe()));
        }
    return out;
}

ExtractedTyping extract_typing(const Program& p, const Proof& proof) {
    ExtractedTyping out;
    std::function<void(const ProofNode&)> walk = [&](const ProofNode& n) {
        if (n.rule != "θ-NEW" && n.stmt >= 0 && n.stmt < p.node_count) {
            UnionType t = project_var(n.post.lower, kR);
            auto it = out.nodes.find(n.stmt);
            if (it == out.nodes.end())
                out.nodes.emplace(n.stmt, t);
            else
                it->second = meet(it->second, t);
        }
        for (auto& k : n.premises) walk(k);
    };
    walk(proof.root);
    for (int id = 0; id < p.node_count; ++id)
        if (!out.nodes.count(id)) {
            int u = p.unit_of[id];
            int c = p.units[u].cls;
            if (c >= 0 && !out.nodes.count(p.units[u].body->id)) continue;  // unit without a proof branch
            out.warnings.push_back("no triple for #" + std::to_string(id) + "; typed TOP");
        }
    return out;
}

std::vector<std::string> compare_typing(const Analysis& a, const ExtractedTyping& e) {
    std::vector<std::string> out;
    for (auto& [id, t] : e.nodes) {
        UnionType want = node_summary(a, id);
        if (t != want)
            out.push_back("#" + std::to_string(id) + " (" + a.prog.unit_name(a.prog.unit_of[id]) + "): proof " + t.str() +
                          ", solver " + want.str());
    }
    return out;
}

// ---- serialization ----

namespace {

ojson node_json(const ProofNode& n) {
    ojson o;
    o["rule"] = n.rule;
    o["stmt"] = n.stmt;
    o["pre"] = layered_json(n.pre);
    o["post"] = layered_json(n.post);
    o["side"] = n.side;
    ojson ps = ojson::array();
    for (auto& k : n.premises) ps.push_back(node_json(k));
    o["premises"] = ps;
    return o;
}

ProofNode node_from_json(const UniverseRef& u, const ojson& j) {
    ProofNode n;
    n.rule = j.at("rule").get<std::string>();
    n.stmt = j.at("stmt").get<int>();
    n.pre = layered_from_json(u, j.at("pre"));
    n.post = layered_from_json(u, j.at("post"));
    n.side = j.value("side", ojson::object());
    for (auto& k : j.at("premises")) n.premises.push_back(node_from_json(u, k));
    return n;
}

}  // namespace

ojson proof_to_json(const Proof& proof) { return node_json(proof.root); }

Proof proof_from_json(const Program& p, const ojson& j) {
    Proof out;
    out.root = node_from_json(p.universe, j);
    return out;
}

std::string dump_proof(const Proof& proof) { return proof_to_json(proof).dump(1) + "\n"; }

// ---- mutation catalog ----

namespace {

bool satisfiable(const TAsrt& t) {
    for (auto& d : t.disjuncts())
        if (!vacuous(d)) return true;
    return false;
}

// Applies f to the first node (preorder) accepted by pred.
std::optional<Proof> mutate_first(const Proof& proof, const std::function<bool(const ProofNode&)>& pred,
                                  const std::function<void(ProofNode&)>& f) {
    Proof out = proof;
    bool done = false;
    std::function<void(ProofNode&)> walk = [&](ProofNode& n) {
        if (done) return;
        if (pred(n)) {
            f(n);
            done = true;
            return;
        }
        for (auto& k : n.premises) walk(k);
    };
    walk(out.root);
    if (!done) return std::nullopt;
    return out;
}

std::optional<Proof> m_witness(const Program&, const Proof& pr) {
    return mutate_first(
        pr,
        [](const ProofNode& n) {
            return n.rule == "θ-IASGN" && !n.premises.empty() && !project_var(n.premises[0].post.lower, kR).is_bottom();
        },
        [](ProofNode& n) { n.side["witness"] = "{}"; });
}

std::optional<Proof> m_drop_premise(const Program&, const Proof& pr) {
    return mutate_first(
        pr, [](const ProofNode& n) { return n.rule == "SEQ" && n.premises.size() >= 2; },
        [](ProofNode& n) { n.premises.pop_back(); });
}

std::optional<Proof> m_swap_branches(const Program& p, const Proof& pr) {
    return mutate_first(
        pr,
        [&](const ProofNode& n) { return n.rule == "COND" && n.premises.size() == 3 && !p.nodes[n.stmt]->marked; },
        [](ProofNode& n) { std::swap(n.premises[1], n.premises[2]); });
}

std::optional<Proof> m_cons_consequent(const Program&, const Proof& pr) {
    return mutate_first(
        pr, [](const ProofNode& n) { return n.rule == "CONS" && satisfiable(n.premises[0].post.lower); },
        [](ProofNode& n) { n.post.lower = TAsrt::falsity(n.post.lower.universe()); });
}

std::optional<Proof> m_const_subst(const Program&, const Proof& pr) {
    return mutate_first(
        pr, [](const ProofNode& n) { return n.rule == "CONST" && satisfiable(n.pre.lower); },
        [](ProofNode& n) {
            const UniverseRef& u = n.post.lower.universe();
            n.post.lower = with_literal(n.post.lower, kR, complement(UnionType::null_only(u)));
        });
}

std::optional<Proof> m_var_subst(const Program& p, const Proof& pr) {
    auto subject = [&](const ProofNode& n) -> Subject {
        const Node& s = *p.nodes[n.stmt];
        if (s.kind == Kind::This) return "this";
        return n.rule == "IVAR" ? "@" + s.name : s.name;
    };
    return mutate_first(
        pr,
        [&](const ProofNode& n) {
            if ((n.rule != "VAR" && n.rule != "IVAR") || !satisfiable(n.pre.lower)) return false;
            return !project_var(n.pre.lower, subject(n)).is_bottom();
        },
        [&](ProofNode& n) {
            UnionType t = project_var(n.pre.lower, subject(n));
            n.post.lower = with_literal(n.post.lower, kR, complement(t));
        });
}

std::optional<Proof> m_invariant(const Program&, const Proof& pr) {
    if (pr.root.side.value("invariant", ojson::object()).empty()) return std::nullopt;
    Proof out = pr;
    for (auto& [k, v] : out.root.side["invariant"].items()) v = "{}";
    return out;
}

std::optional<Proof> m_assumption(const Program& p, const Proof& pr) {
    Proof out = pr;
    auto& as = out.root.side["assumptions"];
    for (auto& a : as) {
        TAsrt post = tasrt_from_json(p.universe, a["post"]);
        if (project_var(post, kR).is_bottom()) continue;
        a["post"] = tasrt_json(TAsrt::lit(p.universe, kR, UnionType::bottom(p.universe)));
        return out;
    }
    return std::nullopt;
}

std::optional<Proof> m_operand_order(const Program&, const Proof& pr) {
    return mutate_first(
        pr,
        [](const ProofNode& n) {
            return (n.rule == "METH" || n.rule == "EQ" || (n.rule == "CNSTR" && n.premises.size() >= 3)) &&
                   n.premises.size() >= 2;
        },
        [](ProofNode& n) { std::swap(n.premises[0], n.premises[1]); });
}

std::optional<Proof> m_loop_invariant(const Program&, const Proof& pr) {
    return mutate_first(
        pr, [](const ProofNode& n) { return n.rule == "LOOP" && satisfiable(n.pre.lower); },
        [](ProofNode& n) { n.side["inv"] = tasrt_json(TAsrt::falsity(n.pre.lower.universe())); });
}

}  // namespace

const std::vector<Mutation>& mutation_catalog() {
    static const std::vector<Mutation> catalog = {
        {"wrong-witness", m_witness},
        {"dropped-premise", m_drop_premise},
        {"swapped-branches", m_swap_branches},
        {"unentailed-consequent", m_cons_consequent},
        {"broken-null-substitution", m_const_subst},
        {"broken-variable-substitution", m_var_subst},
        {"shrunk-invariant", m_invariant},
        {"wrong-assumption", m_assumption},
        {"reordered-operands", m_operand_order},
        {"false-loop-invariant", m_loop_invariant},
    };
    return catalog;
}

}  // namespace dyn
