#include <algorithm>
#include <map>
#include <unordered_map>

#include "dyn/infer.hpp"
#include "dyn/interp.hpp"

namespace dyn {

namespace {

// Types of the pending operand kids[i] of an ancestor, per slot of the target label set.
void pending_literals(const Analysis& a, int node, std::vector<Disjunct>& ds, int ls) {
    const Program& p = a.prog;
    const UnitSsa& us = a.ssa.units[p.unit_of[node]];
    int child = node;
    for (int anc = p.parent[node]; anc >= 0; child = anc, anc = p.parent[anc]) {
        const Node& A = *p.nodes[anc];
        if (A.kind != Kind::Call && A.kind != Kind::New && A.kind != Kind::Identity) continue;
        int kpos = -1;
        for (size_t i = 0; i < A.kids.size(); ++i)
            if (A.kids[i]->id == child) kpos = static_cast<int>(i);
        for (int i = 0; i < kpos; ++i) {
            int kid = A.kids[i]->id;
            std::vector<UnionType> per(ds.size(), UnionType::bottom(p.universe));
            for (auto [from, to] : map_slots(us.label_sets[a.ssa.post_ls[kid]], us.label_sets[ls]))
                per[to] = join(per[to], a.ty.node(kid, from));
            std::string s = "$" + std::to_string(anc) + "." + std::to_string(i);
            for (size_t j = 0; j < ds.size(); ++j) ds[j][s] = per[j];
        }
    }
}

}  // namespace

TAsrt xi_assert(const Analysis& a, int node, bool post) {
    const Program& p = a.prog;
    int unit = p.unit_of[node];
    const UnitSsa& us = a.ssa.units[unit];
    int ls = post ? a.ssa.post_ls[node] : a.ssa.pre_ls[node];
    const auto& env = post ? a.ssa.post_env[node] : a.ssa.pre_env[node];
    int n = us.label_sets[ls].slots();
    std::vector<Disjunct> ds(n);
    for (int j = 0; j < n; ++j) {
        for (size_t x = 0; x < us.vars.size(); ++x) ds[j][us.vars[x]] = a.ty.version(unit, env[x], j);
        if (us.cls >= 0) ds[j]["this"] = UnionType::of(p.universe, {p.classes[us.cls].name});
        if (post) ds[j]["r"] = a.ty.node(node, j);
    }
    pending_literals(a, node, ds, ls);
    return TAsrt(p.universe, std::move(ds));
}

std::string Violation::str(const Program& p) const {
    return std::string(post ? "post" : "pre") + " #" + std::to_string(node) + " " + p.unit_name(p.unit_of[node]) +
           ": " + subject + " is " + actual + ", typing claims " + claimed.str() +
           (path.empty() || path == "." ? "" : " [path " + path + "]");
}

namespace {

struct Literal {
    enum class Src { Local, Field, This, Result, Pending } src;
    int index = 0;      // local slot, field slot or operand index
    int node = -1;      // pending operand owner
    std::string subject;
    UnionType type;
};

struct Check {
    std::vector<std::vector<Literal>> disjuncts;
    std::vector<std::string> paths;
};

class XiMonitor : public Monitor {
public:
    XiMonitor(const Analysis& a, size_t cap) : a_(a), p_(a.prog), cap_(cap) {
        for (size_t u = 0; u < p_.units.size(); ++u) locals_.push_back(unit_locals(p_, static_cast<int>(u)));
    }

    std::vector<Violation> violations;
    long long checks = 0;

    void at_pre(const Node& n, const Frame& f) override { check(n, f, nullptr, false); }
    void at_post(const Node& n, const Frame& f, Value r) override { check(n, f, r, true); }

private:
    const Analysis& a_;
    const Program& p_;
    size_t cap_;
    std::vector<std::vector<std::string>> locals_;
    std::map<std::pair<int, bool>, Check> cache_;
    std::unordered_map<const ClassDecl*, int> bits_;

    int bit(Value v) {
        if (!v) return 0;
        auto it = bits_.find(v->cls);
        if (it != bits_.end()) return it->second;
        return bits_[v->cls] = p_.universe->bit_of(v->cls->name);
    }

    const Check& compiled(int id, bool post) {
        auto key = std::make_pair(id, post);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        Check c;
        int unit = p_.unit_of[id];
        const UnitSsa& us = a_.ssa.units[unit];
        const LabelSet& ls = us.label_sets[post ? a_.ssa.post_ls[id] : a_.ssa.pre_ls[id]];
        TAsrt xi = xi_assert(a_, id, post);
        // canonical form may merge or drop disjuncts; path strings are only reported when slots line up
        bool aligned = static_cast<int>(xi.disjuncts().size()) == ls.slots();
        for (size_t j = 0; j < xi.disjuncts().size(); ++j) {
            std::vector<Literal> lits;
            for (auto& [s, t] : xi.disjuncts()[j]) {
                Literal l;
                l.subject = s;
                l.type = t;
                if (s == "this") {
                    l.src = Literal::Src::This;
                } else if (s == "r") {
                    l.src = Literal::Src::Result;
                } else if (s[0] == '$') {
                    l.src = Literal::Src::Pending;
                    auto dot = s.find('.');
                    l.node = std::stoi(s.substr(1, dot - 1));
                    l.index = std::stoi(s.substr(dot + 1));
                } else if (s[0] == '@') {
                    l.src = Literal::Src::Field;
                    l.index = -1;
                    if (p_.units[unit].cls >= 0) {
                        auto& fs = p_.classes[p_.units[unit].cls].fields;
                        auto fit = std::lower_bound(fs.begin(), fs.end(), s.substr(1));
                        if (fit != fs.end() && *fit == s.substr(1)) l.index = static_cast<int>(fit - fs.begin());
                    }
                } else {
                    l.src = Literal::Src::Local;
                    auto& ls_ = locals_[unit];
                    l.index = static_cast<int>(std::find(ls_.begin(), ls_.end(), s) - ls_.begin());
                }
                lits.push_back(std::move(l));
            }
            c.disjuncts.push_back(std::move(lits));
            c.paths.push_back(aligned ? ls.slot_str(static_cast<int>(j)) : std::string());
        }
        return cache_.emplace(key, std::move(c)).first->second;
    }

    Value value(const Literal& l, const Frame& f, Value r) const {
        switch (l.src) {
            case Literal::Src::Local: return l.index < static_cast<int>(f.locals.size()) ? f.locals[l.index] : nullptr;
            case Literal::Src::Field: return f.self && l.index >= 0 ? f.self->fields[l.index] : nullptr;
            case Literal::Src::This: return f.self;
            case Literal::Src::Result: return r;
            case Literal::Src::Pending:
                for (auto& po : f.pending)
                    if (po.node == l.node && po.index == l.index) return po.value;
                return nullptr;
        }
        return nullptr;
    }

    void check(const Node& n, const Frame& f, Value r, bool post) {
        if (violations.size() >= cap_) return;
        ++checks;
        const Check& c = compiled(n.id, post);
        int best = -1, best_fail = -1;
        size_t best_count = SIZE_MAX;
        for (size_t j = 0; j < c.disjuncts.size(); ++j) {
            size_t failing = 0;
            int first = -1;
            for (size_t k = 0; k < c.disjuncts[j].size(); ++k) {
                auto& l = c.disjuncts[j][k];
                if (!(l.type.bits() >> bit(value(l, f, r)) & 1u)) {
                    if (first < 0) first = static_cast<int>(k);
                    ++failing;
                }
            }
            if (failing == 0) return;
            if (failing < best_count) {
                best_count = failing;
                best = static_cast<int>(j);
                best_fail = first;
            }
        }
        Violation v;
        v.node = n.id;
        v.post = post;
        if (best < 0) {
            v.subject = "(location)";
            v.actual = "reached";
            v.claimed = UnionType::bottom(p_.universe);
        } else {
            auto& l = c.disjuncts[best][best_fail];
            Value val = value(l, f, r);
            v.path = c.paths[best];
            v.subject = l.subject;
            v.actual = val ? val->cls->name : "Null";
            v.claimed = l.type;
        }
        violations.push_back(std::move(v));
    }
};

}  // namespace

InstrumentedRun run_instrumented(const Analysis& a, RunOptions opts, size_t max_violations) {
    XiMonitor m(a, max_violations);
    opts.monitor = &m;
    InstrumentedRun out;
    RunResult rr = run(a.prog, opts);
    out.outcome = rr.outcome;
    out.heap = rr.heap;
    out.violations = std::move(m.violations);
    out.checks = m.checks;
    return out;
}

}  // namespace dyn
