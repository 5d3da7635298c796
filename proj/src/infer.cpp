#include "dyn/infer.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>

#include "dyn/interp.hpp"
#include "dyn/lang.hpp"
#include "json.hpp"

namespace dyn {

UnionType Typing::node_joined(int id) const {
    UnionType t = UnionType::bottom(universe);
    for (int j = 0; j < node_slots[id]; ++j) t = join(t, node(id, j));
    return t;
}

UnionType Typing::version_joined(int unit, int v) const {
    UnionType t = UnionType::bottom(universe);
    for (int j = 0; j < version_slots[unit][v]; ++j) t = join(t, version(unit, v, j));
    return t;
}

UnionType supporters(const Program& p, const std::string& m, int arity) {
    std::vector<std::string> names;
    for (auto& c : p.classes)
        if (c.find(m, arity)) names.push_back(c.name);
    return UnionType::of(p.universe, names);
}

std::string Obligation::str(const Program& p) const {
    std::string s = "#" + std::to_string(node) + " " + p.unit_name(p.unit_of[node]) + ": " + kind;
    if (kind == "receiver-missing-method") s += " " + method + "/" + std::to_string(arity);
    s += ": " + offending.str() + " not within " + required.str();
    if (!path.empty() && path != ".") s += " [path " + path + "]";
    return s;
}

namespace {

class Generator {
public:
    Generator(const Program& p, const Ssa& s, Typing& ty, ConstraintSet& cs) : p_(p), s_(s), ty_(ty), cs_(cs) {}

    void run() {
        layout();
        for (size_t c = 0; c < p_.classes.size(); ++c)
            for (auto& f : p_.classes[c].fields) constant(UnionType::null_only(u()), cell_of_field(static_cast<int>(c), f));
        for (size_t ui = 0; ui < p_.units.size(); ++ui) unit(static_cast<int>(ui));
        cs_.cell_count = static_cast<int>(ty_.cells.size());
    }

private:
    const Program& p_;
    const Ssa& s_;
    Typing& ty_;
    ConstraintSet& cs_;

    const UniverseRef& u() const { return p_.universe; }

    int alloc(int n) {
        int base = static_cast<int>(ty_.cells.size());
        for (int i = 0; i < n; ++i) ty_.cells.push_back(UnionType::bottom(u()));
        return base;
    }

    void layout() {
        ty_.universe = u();
        ty_.cells.clear();
        for (size_t c = 0; c < p_.classes.size(); ++c)
            for (auto& f : p_.classes[c].fields) ty_.field[{static_cast<int>(c), f}] = alloc(1);
        for (size_t c = 0; c < p_.classes.size(); ++c)
            for (size_t m = 0; m < p_.classes[c].methods.size(); ++m) {
                auto& meth = p_.classes[c].methods[m];
                std::vector<int> ps;
                for (int i = 0; i < meth.arity(); ++i) ps.push_back(alloc(1));
                ty_.param[{static_cast<int>(c), static_cast<int>(m)}] = ps;
                ty_.ret[{static_cast<int>(c), static_cast<int>(m)}] = alloc(1);
            }
        ty_.version_base.assign(p_.units.size(), {});
        ty_.version_slots.assign(p_.units.size(), {});
        ty_.node_base.assign(p_.node_count, -1);
        ty_.node_slots.assign(p_.node_count, 0);
        for (size_t ui = 0; ui < p_.units.size(); ++ui) {
            const UnitSsa& us = s_.units[ui];
            for (auto& v : us.versions) {
                int n = us.label_sets[v.ls].slots();
                ty_.version_base[ui].push_back(alloc(n));
                ty_.version_slots[ui].push_back(n);
            }
        }
        for (int id = 0; id < p_.node_count; ++id) {
            const UnitSsa& us = s_.units[p_.unit_of[id]];
            int n = us.label_sets[s_.post_ls[id]].slots();
            ty_.node_base[id] = alloc(n);
            ty_.node_slots[id] = n;
        }
    }

    int cell_of_field(int cls, const std::string& f) const { return ty_.field.at({cls, f}); }

    void subset(std::vector<int> sources, int target, std::optional<UnionType> filter = std::nullopt) {
        Constraint c;
        c.kind = Constraint::Kind::Subset;
        c.sources = std::move(sources);
        c.target = target;
        c.filter = std::move(filter);
        cs_.items.push_back(std::move(c));
    }

    void constant(const UnionType& t, int target) {
        Constraint c;
        c.kind = Constraint::Kind::Subset;
        c.constant = t;
        c.target = target;
        cs_.items.push_back(std::move(c));
    }

    void flow(int src, int src_ls, int dst, int dst_ls, const UnitSsa& us, int k = -1, int kc = 0,
              std::optional<UnionType> filter = std::nullopt) {
        for (auto [i, j] : map_slots(us.label_sets[src_ls], us.label_sets[dst_ls], k, kc))
            subset({src + i}, dst + j, filter);
    }

    int slots(int id) const { return ty_.node_slots[id]; }
    int nb(int id) const { return ty_.node_base[id]; }
    int vb(int unit, int v) const { return ty_.version_base[unit][v]; }

    void const_all(const UnionType& t, int id) {
        for (int j = 0; j < slots(id); ++j) constant(t, nb(id) + j);
    }

    void precision(int id, int src_base, std::optional<UnionType> src_const, int n, const UnionType& req,
                   const std::string& reason, const std::string& m = {}, int arity = 0) {
        for (int j = 0; j < n; ++j) {
            Constraint c;
            c.kind = Constraint::Kind::Precision;
            c.node = id;
            c.slot = j;
            if (src_const)
                c.constant = src_const;
            else
                c.sources = {src_base + j};
            c.required = req;
            c.reason = reason;
            c.method = m;
            c.arity = arity;
            cs_.items.push_back(std::move(c));
        }
    }

    std::vector<Constraint::Callee> callees(const std::string& m, int arity) const {
        std::vector<Constraint::Callee> out;
        for (size_t c = 0; c < p_.classes.size(); ++c) {
            auto& cls = p_.classes[c];
            for (size_t mi = 0; mi < cls.methods.size(); ++mi)
                if (cls.methods[mi].name == m && cls.methods[mi].arity() == arity)
                    out.push_back({u()->bit_of(cls.name), ty_.param.at({static_cast<int>(c), static_cast<int>(mi)}),
                                   ty_.ret.at({static_cast<int>(c), static_cast<int>(mi)})});
        }
        return out;
    }

    void call_edge(const Node& n, const std::vector<const Node*>& operands, std::optional<UnionType> recv_const,
                   const std::string& m) {
        Constraint c;
        c.kind = Constraint::Kind::CallEdge;
        c.node = n.id;
        c.method = m;
        c.arity = static_cast<int>(operands.size());
        c.recv_const = recv_const;
        int k = slots(n.id);
        for (int j = 0; j < k; ++j) c.result.push_back(nb(n.id) + j);
        if (!recv_const) {
            for (int j = 0; j < k; ++j) c.recv.push_back(nb(n.kids[0]->id) + j);
        }
        for (auto* a : operands) {
            std::vector<int> cells;
            for (int j = 0; j < k; ++j) cells.push_back(nb(a->id) + j);
            c.args.push_back(cells);
        }
        c.callees = callees(m, c.arity);
        cs_.items.push_back(std::move(c));
    }

    void invalidated(int unit, const Node& n) {
        const UnitSsa& us = s_.units[unit];
        if (us.cls < 0) return;
        for (auto& ver : us.versions) {
            if (ver.kind != DefKind::Invalidate || ver.node != n.id) continue;
            int v = static_cast<int>(&ver - us.versions.data());
            int fc = cell_of_field(us.cls, us.vars[ver.var].substr(1));
            for (int j = 0; j < us.label_sets[ver.ls].slots(); ++j) subset({fc}, vb(unit, v) + j);
        }
    }

    int use_version(const UnitSsa& us, const Node& n, const std::string& var) const {
        int x = us.var_index(var);
        int v = s_.pre_env[n.id][x];
        if (us.versions[v].ls != s_.pre_ls[n.id]) throw std::logic_error("version read under a foreign label set");
        return v;
    }

    void node(int unit, const Node& n) {
        const UnitSsa& us = s_.units[unit];
        int id = n.id;
        for (auto& k : n.kids) node(unit, *k);
        switch (n.kind) {
            case Kind::Null: const_all(UnionType::null_only(u()), id); break;
            case Kind::This:
                if (us.cls >= 0) const_all(UnionType::of(u(), {p_.classes[us.cls].name}), id);
                break;
            case Kind::Var:
            case Kind::IVar: {
                int v = use_version(us, n, n.kind == Kind::Var ? n.name : "@" + n.name);
                flow(vb(unit, v), us.versions[v].ls, nb(id), s_.post_ls[id], us);
                break;
            }
            case Kind::AssignLocal:
            case Kind::AssignField: {
                const Node& e = *n.kids[0];
                int x = us.var_index(n.kind == Kind::AssignLocal ? n.name : "@" + n.name);
                int v = s_.post_env[id][x];
                flow(nb(e.id), s_.post_ls[e.id], vb(unit, v), us.versions[v].ls, us);
                flow(nb(e.id), s_.post_ls[e.id], nb(id), s_.post_ls[id], us);
                if (n.kind == Kind::AssignField) {
                    int fc = cell_of_field(us.cls, n.name);
                    for (int j = 0; j < us.label_sets[us.versions[v].ls].slots(); ++j) subset({vb(unit, v) + j}, fc);
                }
                break;
            }
            case Kind::Identity:
            case Kind::IsA: {
                UnionType b = UnionType::of(u(), {"bool"});
                const_all(b, id);
                const ClassDecl* bc = p_.find_class("bool");
                if (bc && std::binary_search(bc->fields.begin(), bc->fields.end(), "v"))
                    constant(b, cell_of_field(p_.class_index.at("bool"), "v"));
                break;
            }
            case Kind::Call: {
                std::vector<const Node*> args;
                for (size_t i = 1; i < n.kids.size(); ++i) args.push_back(n.kids[i].get());
                call_edge(n, args, std::nullopt, n.name);
                precision(id, nb(n.kids[0]->id), std::nullopt, slots(n.kids[0]->id),
                          supporters(p_, n.name, static_cast<int>(args.size())), "receiver-missing-method", n.name,
                          static_cast<int>(args.size()));
                invalidated(unit, n);
                break;
            }
            case Kind::New: {
                std::vector<const Node*> args;
                for (auto& k : n.kids) args.push_back(k.get());
                UnionType c = UnionType::of(u(), {n.name});
                int arity = static_cast<int>(args.size());
                const ClassDecl* cd = p_.find_class(n.name);
                if (cd && cd->find("init", arity)) {
                    call_edge(n, args, c, "init");
                } else if (arity == 0) {
                    const_all(c, id);
                } else {
                    precision(id, -1, c, slots(id), supporters(p_, "init", arity), "receiver-missing-method", "init",
                              arity);
                }
                invalidated(unit, n);
                break;
            }
            case Kind::If: {
                const Node& c = *n.kids[0];
                if (!n.marked)
                    precision(id, nb(c.id), std::nullopt, slots(c.id), UnionType::of(u(), {"bool"}),
                              "non-boolean-condition");
                for (int b = 1; b <= 2; ++b) flow(nb(n.kids[b]->id), s_.post_ls[n.kids[b]->id], nb(id), s_.post_ls[id], us);
                break;
            }
            case Kind::While: {
                const Node& c = *n.kids[0];
                precision(id, nb(c.id), std::nullopt, slots(c.id), UnionType::of(u(), {"bool"}),
                          "non-boolean-condition");
                const_all(UnionType::null_only(u()), id);
                break;
            }
            case Kind::Seq:
                if (n.kids.empty())
                    const_all(UnionType::null_only(u()), id);
                else
                    flow(nb(n.kids.back()->id), s_.post_ls[n.kids.back()->id], nb(id), s_.post_ls[id], us);
                break;
            case Kind::Block:
                if (n.kids.empty())
                    const_all(UnionType::null_only(u()), id);
                else
                    flow(nb(n.kids[0]->id), s_.post_ls[n.kids[0]->id], nb(id), s_.post_ls[id], us);
                break;
            case Kind::TypeFilter:
                flow(nb(n.kids[0]->id), s_.post_ls[n.kids[0]->id], nb(id), s_.post_ls[id], us, -1, 0,
                     UnionType::of(u(), n.filter));
                break;
            default:
                throw std::logic_error(std::string("unexpected node in constraint generation: ") + kind_name(n.kind));
        }
    }

    void unit(int ui) {
        const UnitSsa& us = s_.units[ui];
        const Unit& un = p_.units[ui];
        for (size_t v = 0; v < us.versions.size(); ++v) {
            const Version& ver = us.versions[v];
            int base = vb(ui, static_cast<int>(v));
            int n = us.label_sets[ver.ls].slots();
            switch (ver.kind) {
                case DefKind::Entry:
                    for (int j = 0; j < n; ++j) {
                        if (ver.var < us.nparams)
                            subset({ty_.param.at({un.cls, un.method})[ver.var]}, base + j);
                        else if (us.is_field(ver.var))
                            subset({cell_of_field(us.cls, us.vars[ver.var].substr(1))}, base + j);
                        else
                            constant(UnionType::null_only(u()), base + j);
                    }
                    break;
                case DefKind::Phi:
                case DefKind::Sigma:
                    for (auto& op : ver.ops) {
                        if (us.versions[op.version].ls != op.from_ls)
                            throw std::logic_error("phi operand read under a foreign label set");
                        flow(vb(ui, op.version), op.from_ls, base, ver.ls, us, op.k, op.c);
                    }
                    break;
                case DefKind::Assign:
                case DefKind::Invalidate:
                    break;
            }
        }
        node(ui, *un.body);
        if (un.cls >= 0) {
            int r = ty_.ret.at({un.cls, un.method});
            for (int j = 0; j < slots(un.body->id); ++j) subset({nb(un.body->id) + j}, r);
        }
    }
};

UnionType source_value(const Constraint& c, const Typing& ty) {
    UnionType v = c.constant ? *c.constant : UnionType::bottom(ty.universe);
    for (int s : c.sources) v = join(v, ty.cells[s]);
    if (c.filter) v = meet(v, *c.filter);
    return v;
}

bool grow(Typing& ty, int cell, const UnionType& v) {
    UnionType n = join(ty.cells[cell], v);
    if (n == ty.cells[cell]) return false;
    ty.cells[cell] = n;
    return true;
}

// Applies one constraint; returns the cells that grew.
void apply(const Constraint& c, Typing& ty, std::vector<int>& changed) {
    switch (c.kind) {
        case Constraint::Kind::Subset:
            if (grow(ty, c.target, source_value(c, ty))) changed.push_back(c.target);
            break;
        case Constraint::Kind::CallEdge: {
            UnionType all = c.recv_const ? *c.recv_const : UnionType::bottom(ty.universe);
            for (int r : c.recv) all = join(all, ty.cells[r]);
            for (auto& cal : c.callees) {
                if (!(all.bits() >> cal.bit & 1u)) continue;
                for (size_t i = 0; i < cal.params.size(); ++i) {
                    UnionType a = UnionType::bottom(ty.universe);
                    for (int cell : c.args[i]) a = join(a, ty.cells[cell]);
                    if (grow(ty, cal.params[i], a)) changed.push_back(cal.params[i]);
                }
            }
            for (size_t j = 0; j < c.result.size(); ++j) {
                UnionType rj = c.recv_const ? *c.recv_const : ty.cells[c.recv[j]];
                UnionType acc = UnionType::bottom(ty.universe);
                for (auto& cal : c.callees)
                    if (rj.bits() >> cal.bit & 1u) acc = join(acc, ty.cells[cal.ret]);
                if (grow(ty, c.result[j], acc)) changed.push_back(c.result[j]);
            }
            break;
        }
        case Constraint::Kind::Precision: break;
    }
}

}  // namespace

ConstraintSet generate_constraints(const Program& p, const Ssa& s, Typing& layout) {
    ConstraintSet cs;
    Generator(p, s, layout, cs).run();
    return cs;
}

bool solve_pass(const ConstraintSet& cs, Typing& ty) {
    std::vector<int> changed;
    for (auto& c : cs.items) apply(c, ty, changed);
    return !changed.empty();
}

Typing solve(const ConstraintSet& cs, Typing ty) {
    std::vector<std::vector<int>> deps(ty.cells.size());
    for (size_t i = 0; i < cs.items.size(); ++i) {
        auto& c = cs.items[i];
        int ci = static_cast<int>(i);
        if (c.kind == Constraint::Kind::Subset) {
            for (int s : c.sources) deps[s].push_back(ci);
        } else if (c.kind == Constraint::Kind::CallEdge) {
            for (int r : c.recv) deps[r].push_back(ci);
            for (auto& a : c.args)
                for (int s : a) deps[s].push_back(ci);
            for (auto& cal : c.callees) deps[cal.ret].push_back(ci);
        }
    }
    std::set<int> work;
    for (size_t i = 0; i < cs.items.size(); ++i)
        if (cs.items[i].kind != Constraint::Kind::Precision) work.insert(static_cast<int>(i));
    std::vector<int> changed;
    while (!work.empty()) {
        int i = *work.begin();
        work.erase(work.begin());
        changed.clear();
        apply(cs.items[i], ty, changed);
        for (int cell : changed)
            for (int d : deps[cell]) work.insert(d);
    }
    return ty;
}

std::vector<std::string> check_consistency(const Program& p, const ConstraintSet& cs, const Typing& ty) {
    std::vector<std::string> out;
    if (ty.cells.size() != static_cast<size_t>(cs.cell_count)) {
        out.push_back("typing has " + std::to_string(ty.cells.size()) + " cells, constraints expect " +
                      std::to_string(cs.cell_count));
        return out;
    }
    for (size_t i = 0; i < cs.items.size(); ++i) {
        auto& c = cs.items[i];
        if (c.kind == Constraint::Kind::Precision) continue;
        Typing probe = ty;
        std::vector<int> changed;
        apply(c, probe, changed);
        for (int cell : changed) {
            std::string where = c.kind == Constraint::Kind::CallEdge
                                    ? "call edge [" + c.method + "/" + std::to_string(c.arity) + "] at #" +
                                          std::to_string(c.node) + " (" + p.unit_name(p.unit_of[c.node]) + ")"
                                    : "subset constraint " + std::to_string(i);
            out.push_back(where + ": cell " + std::to_string(cell) + " holds " + ty.cells[cell].str() + ", needs " +
                          probe.cells[cell].str());
        }
    }
    return out;
}

std::vector<Obligation> check_safety(const Program& p, const Ssa& s, const ConstraintSet& cs, const Typing& ty) {
    std::vector<Obligation> out;
    for (auto& c : cs.items) {
        if (c.kind != Constraint::Kind::Precision) continue;
        UnionType v = strip_null(source_value(c, ty));
        if (leq(v, c.required)) continue;
        Obligation o;
        o.node = c.node;
        o.slot = c.slot;
        const UnitSsa& us = s.units[p.unit_of[c.node]];
        const Node& at = *p.nodes[c.node];
        int ls = at.kind == Kind::New ? s.post_ls[c.node] : s.post_ls[at.kids[0]->id];
        o.path = us.label_sets[ls].slot_str(c.slot);
        o.kind = c.reason;
        o.method = c.method;
        o.arity = c.arity;
        o.offending = v;
        o.required = c.required;
        out.push_back(o);
    }
    std::stable_sort(out.begin(), out.end(), [](const Obligation& a, const Obligation& b) {
        return std::tie(a.node, a.slot) < std::tie(b.node, b.slot);
    });
    return out;
}

Analysis analyze(Program p, const InferOptions& opts) {
    Analysis a;
    a.prog = std::move(p);
    a.opts = opts;
    a.ssa = to_ssa(a.prog, {opts.path_cap, opts.invalidate_fields});
    Typing layout;
    a.cs = generate_constraints(a.prog, a.ssa, layout);
    a.ty = solve(a.cs, std::move(layout));
    a.obligations = check_safety(a.prog, a.ssa, a.cs, a.ty);
    return a;
}

UnionType node_summary(const Analysis& a, int id) {
    UnionType out = UnionType::bottom(a.ty.universe);
    TAsrt post = xi_assert(a, id, true);
    return join(out, project_var(post, "r"));
}

InvariantTable invariant_table(const Analysis& a) {
    InvariantTable t;
    for (auto& [key, cell] : a.ty.field) t[{a.prog.classes[key.first].name, key.second}] = a.ty.cells[cell];
    return t;
}

// ---- annotations and refinement ----

std::vector<Annotation> parse_annotations(const Program& p, const std::string& text) {
    std::vector<Annotation> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto ctx = statement_context(p);
    while (std::getline(in, line)) {
        ++lineno;
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        line = line.substr(first);
        auto fail = [&](const std::string& m) {
            throw AnnotationError("annotation line " + std::to_string(lineno) + ": " + m);
        };
        if (line.compare(0, 3, "at ") != 0) fail("expected 'at'");
        auto hash = line.find('#', 3);
        auto assume = line.find(" assume ");
        if (hash == std::string::npos || assume == std::string::npos || assume < hash) fail("expected '<unit>#<id> assume'");
        Annotation a;
        a.unit_name = line.substr(3, hash - 3);
        std::string id = line.substr(hash + 1, assume - hash - 1);
        try {
            size_t used = 0;
            a.node = std::stoi(id, &used);
            if (used != id.size()) fail("bad node id '" + id + "'");
        } catch (std::logic_error&) {
            fail("bad node id '" + id + "'");
        }
        a.text = line.substr(assume + 8);
        if (a.node < 0 || a.node >= p.node_count) fail("unknown location #" + std::to_string(a.node));
        int unit = p.unit_of[a.node];
        if (p.unit_name(unit) != a.unit_name)
            fail("location #" + std::to_string(a.node) + " belongs to " + p.unit_name(unit) + ", not " + a.unit_name);
        if (p.units[unit].cls >= 0 && p.classes[p.units[unit].cls].prelude) fail("location inside the prelude");
        if (!ctx[a.node]) fail("location #" + std::to_string(a.node) + " is not a statement");
        try {
            a.assertion = parse_tasrt(p.universe, a.text);
        } catch (std::exception& e) {
            fail(e.what());
        }
        if (a.assertion.disjuncts().empty()) fail("unsatisfiable assumption");
        auto locals = unit_locals(p, unit);
        std::set<std::string> fields;
        if (p.units[unit].cls >= 0) {
            std::function<void(const Node&)> walk = [&](const Node& n) {
                if (n.kind == Kind::IVar || n.kind == Kind::AssignField) fields.insert(n.name);
                for (auto& k : n.kids) walk(*k);
            };
            walk(*p.units[unit].body);
        }
        for (auto& s : a.assertion.subjects()) {
            bool ok = s[0] == '@' ? fields.count(s.substr(1)) > 0
                                  : std::find(locals.begin(), locals.end(), s) != locals.end();
            if (!ok) fail("unknown variable '" + s + "' in " + a.unit_name);
        }
        out.push_back(std::move(a));
    }
    return out;
}

namespace {

NodePtr filter_stmt(const Subject& s, const UnionType& t) {
    bool field = s[0] == '@';
    std::string name = field ? s.substr(1) : s;
    auto read = make_node(field ? Kind::IVar : Kind::Var, {}, name);
    auto f = make_node(Kind::TypeFilter);
    f->filter = t.class_names();
    f->kids.push_back(std::move(read));
    auto a = make_node(field ? Kind::AssignField : Kind::AssignLocal, {}, name);
    a->kids.push_back(std::move(f));
    return a;
}

NodePtr conj_stmts(const Disjunct& d) {
    std::vector<NodePtr> items;
    for (auto& [s, t] : d) items.push_back(filter_stmt(s, t));
    if (items.size() == 1) return std::move(items[0]);
    auto seq = make_node(Kind::Seq);
    if (items.empty()) seq->kids.push_back(make_node(Kind::Null));
    for (auto& i : items) seq->kids.push_back(std::move(i));
    return seq;
}

NodePtr sta(const std::vector<Disjunct>& ds, size_t from) {
    if (from + 1 == ds.size()) return conj_stmts(ds[from]);
    auto iff = make_node(Kind::If);
    iff->marked = true;
    for (auto& [s, t] : ds[from]) iff->guard.emplace_back(s, t.class_names());
    iff->kids.push_back(make_node(Kind::Null));
    iff->kids.push_back(conj_stmts(ds[from]));
    iff->kids.push_back(sta(ds, from + 1));
    return iff;
}

void set_origin(Node& n) {
    n.origin = n.id;
    for (auto& k : n.kids) set_origin(*k);
}

void insert_filters(NodePtr& slot, const std::map<int, std::vector<const Annotation*>>& at) {
    Node& n = *slot;
    auto stmts_for = [&](int id) {
        std::vector<NodePtr> out;
        auto it = at.find(id);
        if (it == at.end()) return out;
        for (auto* a : it->second)
            if (!a->assertion.is_true()) out.push_back(sta(a->assertion.disjuncts(), 0));
        return out;
    };
    if (n.kind == Kind::Seq) {
        std::vector<NodePtr> kids;
        for (auto& k : n.kids) {
            for (auto& s : stmts_for(k->id)) kids.push_back(std::move(s));
            insert_filters(k, at);
            kids.push_back(std::move(k));
        }
        n.kids = std::move(kids);
        return;
    }
    for (auto& k : n.kids) {
        auto pre = stmts_for(k->id);
        insert_filters(k, at);
        if (!pre.empty() && k->kind != Kind::Seq) {
            auto seq = make_node(Kind::Seq, k->pos);
            for (auto& s : pre) seq->kids.push_back(std::move(s));
            seq->kids.push_back(std::move(k));
            k = std::move(seq);
        } else if (!pre.empty()) {
            // k is a Seq whose own id is annotated: its first statement gets the filters
            for (size_t i = 0; i < pre.size(); ++i) k->kids.insert(k->kids.begin() + static_cast<long>(i), std::move(pre[i]));
        }
    }
}

}  // namespace

Program apply_annotations(const Program& p, const std::vector<Annotation>& anns) {
    Program out = p;
    std::map<int, std::vector<const Annotation*>> at;
    for (auto& a : anns) at[a.node].push_back(&a);
    auto root = [&](NodePtr& body) {
        set_origin(*body);
        auto pre = std::vector<NodePtr>();
        auto it = at.find(body->id);
        if (it != at.end())
            for (auto* a : it->second)
                if (!a->assertion.is_true()) pre.push_back(sta(a->assertion.disjuncts(), 0));
        insert_filters(body, at);
        if (!pre.empty()) {
            if (body->kind == Kind::Seq) {
                for (size_t i = 0; i < pre.size(); ++i)
                    body->kids.insert(body->kids.begin() + static_cast<long>(i), std::move(pre[i]));
            } else {
                auto seq = make_node(Kind::Seq, body->pos);
                for (auto& s : pre) seq->kids.push_back(std::move(s));
                seq->kids.push_back(std::move(body));
                body = std::move(seq);
            }
        }
    };
    for (auto& c : out.classes)
        for (auto& m : c.methods) root(m.body);
    root(out.main);
    finalize(out);
    return out;
}

Analysis refine(const Program& p, const std::vector<Annotation>& anns, const InferOptions& opts) {
    return analyze(apply_annotations(p, anns), opts);
}

std::vector<std::string> check_monotone(const Analysis& before, const Analysis& after) {
    std::vector<std::string> out;
    const Program& pb = before.prog;
    const Program& pa = after.prog;
    auto report = [&](const std::string& what, const UnionType& a, const UnionType& b) {
        if (!leq(a, b)) out.push_back(what + ": refined " + a.str() + " exceeds " + b.str());
    };
    for (int id = 0; id < pa.node_count; ++id) {
        int o = pa.nodes[id]->origin;
        if (o < 0) continue;
        if (o >= pb.node_count || pb.nodes[o]->kind != pa.nodes[id]->kind) {
            out.push_back("node #" + std::to_string(o) + " does not survive refinement");
            continue;
        }
        report("node #" + std::to_string(o), after.ty.node_joined(id), before.ty.node_joined(o));
        int ua = pa.unit_of[id], ub = pb.unit_of[o];
        const UnitSsa& sa = after.ssa.units[ua];
        const UnitSsa& sb = before.ssa.units[ub];
        for (int post = 0; post < 2; ++post) {
            auto& ea = post ? after.ssa.post_env[id] : after.ssa.pre_env[id];
            auto& eb = post ? before.ssa.post_env[o] : before.ssa.pre_env[o];
            for (size_t x = 0; x < sb.vars.size(); ++x) {
                int xa = sa.var_index(sb.vars[x]);
                if (xa < 0) continue;
                report(std::string(post ? "post" : "pre") + " #" + std::to_string(o) + " " + sb.vars[x],
                       after.ty.version_joined(ua, ea[xa]), before.ty.version_joined(ub, eb[x]));
            }
        }
    }
    for (auto& [k, cell] : before.ty.field)
        report("field " + pb.classes[k.first].name + ".@" + k.second, after.ty.cells[after.ty.field.at(k)],
               before.ty.cells[cell]);
    for (auto& [k, cell] : before.ty.ret) {
        std::string m = pb.classes[k.first].name + "." + pb.classes[k.first].methods[k.second].name;
        report("return " + m, after.ty.cells[after.ty.ret.at(k)], before.ty.cells[cell]);
        auto& pbv = before.ty.param.at(k);
        auto& pav = after.ty.param.at(k);
        for (size_t i = 0; i < pbv.size(); ++i)
            report("param " + m + "/" + std::to_string(i), after.ty.cells[pav[i]], before.ty.cells[pbv[i]]);
    }
    return out;
}

// ---- dumps ----

namespace {

using ojson = nlohmann::ordered_json;

bool shown_unit(const Program& p, int u, bool include_prelude) {
    int c = p.units[u].cls;
    return include_prelude || c < 0 || !p.classes[c].prelude;
}

ojson env_json(const Analysis& a, int unit, const std::vector<int>& env, int ls) {
    const UnitSsa& us = a.ssa.units[unit];
    ojson per = ojson::array();
    for (int j = 0; j < us.label_sets[ls].slots(); ++j) {
        ojson m = ojson::object();
        for (size_t x = 0; x < us.vars.size(); ++x) m[us.vars[x]] = a.ty.version(unit, env[x], j).str();
        per.push_back(m);
    }
    return per;
}

}  // namespace

std::string dump_typing(const Analysis& a, bool include_prelude) {
    const Program& p = a.prog;
    ojson root;
    root["universe"] = p.universe->classes();
    ojson fields = ojson::object();
    for (auto& [k, cell] : a.ty.field) fields[p.classes[k.first].name + ".@" + k.second] = a.ty.cells[cell].str();
    root["fields"] = fields;
    ojson methods = ojson::object();
    for (auto& [k, cell] : a.ty.ret) {
        auto& c = p.classes[k.first];
        auto& m = c.methods[k.second];
        ojson e;
        ojson ps = ojson::array();
        for (int pc : a.ty.param.at(k)) ps.push_back(a.ty.cells[pc].str());
        e["params"] = ps;
        e["return"] = a.ty.cells[cell].str();
        methods[c.name + "." + m.name + "/" + std::to_string(m.arity())] = e;
    }
    root["methods"] = methods;
    ojson units = ojson::array();
    for (size_t ui = 0; ui < p.units.size(); ++ui) {
        if (!shown_unit(p, static_cast<int>(ui), include_prelude)) continue;
        const UnitSsa& us = a.ssa.units[ui];
        ojson u;
        u["unit"] = p.unit_name(static_cast<int>(ui));
        ojson vers = ojson::array();
        for (size_t v = 0; v < us.versions.size(); ++v) {
            ojson e;
            e["name"] = us.version_name(static_cast<int>(v));
            e["def"] = def_kind_name(us.versions[v].kind);
            e["node"] = us.versions[v].node;
            ojson ts = ojson::array();
            for (int j = 0; j < us.label_sets[us.versions[v].ls].slots(); ++j)
                ts.push_back(a.ty.version(static_cast<int>(ui), static_cast<int>(v), j).str());
            e["types"] = ts;
            vers.push_back(e);
        }
        u["versions"] = vers;
        ojson nodes = ojson::array();
        std::function<void(const Node&)> walk = [&](const Node& n) {
            ojson e;
            e["id"] = n.id;
            e["kind"] = kind_name(n.kind);
            const LabelSet& ls = us.label_sets[a.ssa.post_ls[n.id]];
            ojson paths = ojson::array();
            ojson ts = ojson::array();
            for (int j = 0; j < ls.slots(); ++j) {
                paths.push_back(ls.slot_str(j));
                ts.push_back(a.ty.node(n.id, j).str());
            }
            e["paths"] = paths;
            e["types"] = ts;
            e["pre"] = env_json(a, static_cast<int>(ui), a.ssa.pre_env[n.id], a.ssa.pre_ls[n.id]);
            e["post"] = env_json(a, static_cast<int>(ui), a.ssa.post_env[n.id], a.ssa.post_ls[n.id]);
            nodes.push_back(e);
            for (auto& k : n.kids) walk(*k);
        };
        walk(*p.units[ui].body);
        u["nodes"] = nodes;
        units.push_back(u);
    }
    root["units"] = units;
    ojson obl = ojson::array();
    for (auto& o : a.obligations) obl.push_back(o.str(p));
    root["obligations"] = obl;
    return root.dump(2) + "\n";
}

Typing load_typing(const Analysis& a, const std::string& json_text) {
    const Program& p = a.prog;
    Typing ty = a.ty;
    auto j = nlohmann::json::parse(json_text);
    auto type = [&](const nlohmann::json& v) { return parse_type(p.universe, v.get<std::string>()); };
    std::map<std::string, int> fcells;
    for (auto& [k, cell] : ty.field) fcells[p.classes[k.first].name + ".@" + k.second] = cell;
    for (auto& [name, v] : j.at("fields").items()) ty.cells[fcells.at(name)] = type(v);
    for (auto& [k, cell] : ty.ret) {
        auto& c = p.classes[k.first];
        auto& m = c.methods[k.second];
        auto& e = j.at("methods").at(c.name + "." + m.name + "/" + std::to_string(m.arity()));
        ty.cells[cell] = type(e.at("return"));
        auto& ps = ty.param.at(k);
        for (size_t i = 0; i < ps.size(); ++i) ty.cells[ps[i]] = type(e.at("params").at(i));
    }
    for (auto& u : j.at("units")) {
        std::string name = u.at("unit");
        int ui = -1;
        for (size_t x = 0; x < p.units.size(); ++x)
            if (p.unit_name(static_cast<int>(x)) == name) ui = static_cast<int>(x);
        if (ui < 0) throw std::invalid_argument("typing dump names unknown unit " + name);
        auto& vers = u.at("versions");
        if (vers.size() != a.ssa.units[ui].versions.size())
            throw std::invalid_argument("typing dump does not match the SSA form of " + name);
        for (size_t v = 0; v < vers.size(); ++v) {
            auto& ts = vers[v].at("types");
            for (size_t s = 0; s < ts.size(); ++s) ty.cells[ty.version_base[ui][v] + s] = type(ts[s]);
        }
        for (auto& n : u.at("nodes")) {
            int id = n.at("id");
            auto& ts = n.at("types");
            if (id < 0 || id >= p.node_count || static_cast<int>(ts.size()) != ty.node_slots[id])
                throw std::invalid_argument("typing dump does not match node #" + std::to_string(id));
            for (size_t s = 0; s < ts.size(); ++s) ty.cells[ty.node_base[id] + s] = type(ts[s]);
        }
    }
    return ty;
}

}  // namespace dyn
