#include "dyn/ssa.hpp"

#include <algorithm>
#include <regex>
#include <set>
#include <stdexcept>

#include "dyn/interp.hpp"
#include "dyn/lang.hpp"

namespace dyn {

std::string LabelSet::slot_str(int slot) const {
    if (slot >= static_cast<int>(labels.size())) return "*";
    std::string s;
    for (auto b : labels[slot]) s += b < 0 ? '-' : static_cast<char>('0' + b);
    return s.empty() ? "." : s;
}

LabelSet make_label_set(std::vector<Label> labels, bool overflow, int cap) {
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    if (cap < 1) cap = 1;
    if (static_cast<int>(labels.size()) + (overflow ? 1 : 0) > cap) {
        labels.resize(cap - 1);
        overflow = true;
    }
    return {std::move(labels), overflow};
}

LabelSet unite(const LabelSet& a, const LabelSet& b, int cap) {
    auto ls = a.labels;
    ls.insert(ls.end(), b.labels.begin(), b.labels.end());
    return make_label_set(std::move(ls), a.overflow || b.overflow, cap);
}

LabelSet relabel(const LabelSet& a, int k, int8_t c, int cap) {
    auto ls = a.labels;
    for (auto& l : ls) l[k] = c;
    return make_label_set(std::move(ls), a.overflow, cap);
}

std::vector<std::pair<int, int>> map_slots(const LabelSet& from, const LabelSet& to, int k, int c) {
    std::vector<std::pair<int, int>> out;
    for (size_t i = 0; i < from.labels.size(); ++i) {
        Label l = from.labels[i];
        if (k >= 0) l[k] = static_cast<int8_t>(c);
        auto it = std::lower_bound(to.labels.begin(), to.labels.end(), l);
        if (it != to.labels.end() && *it == l)
            out.emplace_back(static_cast<int>(i), static_cast<int>(it - to.labels.begin()));
        else if (to.overflow)
            out.emplace_back(static_cast<int>(i), static_cast<int>(to.labels.size()));
        else
            throw std::logic_error("label has no target slot");
    }
    if (from.overflow)
        for (int j = 0; j < to.slots(); ++j) out.emplace_back(static_cast<int>(from.labels.size()), j);
    return out;
}

const char* def_kind_name(DefKind k) {
    switch (k) {
        case DefKind::Entry: return "entry";
        case DefKind::Assign: return "assign";
        case DefKind::Phi: return "phi";
        case DefKind::Sigma: return "sigma";
        case DefKind::Invalidate: return "call";
    }
    return "?";
}

int UnitSsa::var_index(const std::string& name) const {
    auto it = std::find(vars.begin(), vars.end(), name);
    return it == vars.end() ? -1 : static_cast<int>(it - vars.begin());
}

std::string UnitSsa::version_name(int v) const {
    return vars[versions[v].var] + "#" + std::to_string(versions[v].number);
}

namespace {

void collect_fields(const Node& n, std::set<std::string>& out) {
    if (n.kind == Kind::IVar || n.kind == Kind::AssignField) out.insert(n.name);
    for (auto& k : n.kids) collect_fields(*k, out);
}

void collect_marked(const Node& n, std::vector<int>& out) {
    if (n.kind == Kind::If && n.marked) out.push_back(n.id);
    for (auto& k : n.kids) collect_marked(*k, out);
}

bool has_marked(const Node& n) {
    if (n.kind == Kind::If && n.marked) return true;
    for (auto& k : n.kids)
        if (has_marked(*k)) return true;
    return false;
}

bool has_call(const Node& n) {
    if (n.kind == Kind::Call || n.kind == Kind::New) return true;
    for (auto& k : n.kids)
        if (has_call(*k)) return true;
    return false;
}

void assigned_vars(const Node& n, std::set<std::string>& out) {
    if (n.kind == Kind::AssignLocal) out.insert(n.name);
    if (n.kind == Kind::AssignField) out.insert("@" + n.name);
    for (auto& k : n.kids) assigned_vars(*k, out);
}

class Builder {
public:
    Builder(const Program& p, Ssa& s, UnitSsa& u) : p_(p), s_(s), u_(u) {}

    void build() {
        const Node& body = *p_.units[u_.unit].body;
        collect_marked(body, u_.marked);
        Label start(u_.marked.size(), -1);
        int ls0 = intern(make_label_set({start}, false, cap()));
        labels(body, ls0);
        std::vector<int> env;
        for (size_t v = 0; v < u_.vars.size(); ++v) env.push_back(def(static_cast<int>(v), DefKind::Entry, -1, ls0));
        u_.entry = env;
        walk(body, env);
    }

private:
    const Program& p_;
    Ssa& s_;
    UnitSsa& u_;
    std::vector<int> next_;

    int cap() const { return s_.opts.path_cap; }

    int intern(const LabelSet& ls) {
        for (size_t i = 0; i < u_.label_sets.size(); ++i)
            if (u_.label_sets[i] == ls) return static_cast<int>(i);
        u_.label_sets.push_back(ls);
        return static_cast<int>(u_.label_sets.size()) - 1;
    }

    int marked_index(int node) const {
        return static_cast<int>(std::find(u_.marked.begin(), u_.marked.end(), node) - u_.marked.begin());
    }

    int def(int var, DefKind k, int node, int ls, std::vector<Operand> ops = {}) {
        if (next_.size() < u_.vars.size()) next_.resize(u_.vars.size(), 0);
        int number = next_[var]++;
        u_.versions.push_back({var, number, k, node, ls, std::move(ops)});
        return static_cast<int>(u_.versions.size()) - 1;
    }

    // Label sets at every node; loops iterate until the header set is stable.
    int labels(const Node& n, int in) {
        s_.pre_ls[n.id] = in;
        int out = in;
        switch (n.kind) {
            case Kind::If: {
                labels(*n.kids[0], in);
                int a, b;
                if (n.marked) {
                    int k = marked_index(n.id);
                    a = labels(*n.kids[1], intern(relabel(u_.label_sets[in], k, 0, cap())));
                    b = labels(*n.kids[2], intern(relabel(u_.label_sets[in], k, 1, cap())));
                } else {
                    a = labels(*n.kids[1], in);
                    b = labels(*n.kids[2], in);
                }
                out = intern(unite(u_.label_sets[a], u_.label_sets[b], cap()));
                break;
            }
            case Kind::While: {
                int h = in;
                for (;;) {
                    labels(*n.kids[0], h);
                    int end = labels(*n.kids[1], h);
                    int nh = intern(unite(u_.label_sets[in], u_.label_sets[end], cap()));
                    if (nh == h) break;
                    h = nh;
                }
                out = h;
                break;
            }
            default:
                for (auto& k : n.kids) out = labels(*k, out);
        }
        s_.post_ls[n.id] = out;
        return out;
    }

    std::vector<int> join(const Node& n, const std::vector<int>& e1, int ls1, const std::vector<int>& e2,
                          int ls2) {
        int out_ls = s_.post_ls[n.id];
        std::vector<int> env(e1.size());
        for (size_t x = 0; x < e1.size(); ++x) {
            if (e1[x] == e2[x] && u_.versions[e1[x]].ls == out_ls) {
                env[x] = e1[x];
            } else {
                env[x] = def(static_cast<int>(x), DefKind::Phi, n.id, out_ls, {{e1[x], ls1}, {e2[x], ls2}});
            }
        }
        return env;
    }

    void invalidate(const Node& n, std::vector<int>& env) {
        if (!s_.opts.invalidate_fields) return;
        for (size_t x = u_.nlocals; x < u_.vars.size(); ++x)
            env[x] = def(static_cast<int>(x), DefKind::Invalidate, n.id, s_.post_ls[n.id]);
    }

    void walk(const Node& n, std::vector<int>& env) {
        s_.pre_env[n.id] = env;
        switch (n.kind) {
            case Kind::AssignLocal:
            case Kind::AssignField: {
                walk(*n.kids[0], env);
                int x = u_.var_index(n.kind == Kind::AssignLocal ? n.name : "@" + n.name);
                if (x < 0) throw std::logic_error("untracked variable " + n.name);
                env[x] = def(x, DefKind::Assign, n.id, s_.post_ls[n.id]);
                break;
            }
            case Kind::Call:
            case Kind::New:
                for (auto& k : n.kids) walk(*k, env);
                invalidate(n, env);
                break;
            case Kind::If: {
                walk(*n.kids[0], env);
                std::vector<int> e1 = env, e2 = env;
                if (n.marked) {
                    int k = marked_index(n.id);
                    for (size_t x = 0; x < env.size(); ++x) {
                        e1[x] = def(static_cast<int>(x), DefKind::Sigma, n.id, s_.pre_ls[n.kids[1]->id],
                                    {{env[x], s_.post_ls[n.kids[0]->id], k, 0}});
                        e2[x] = def(static_cast<int>(x), DefKind::Sigma, n.id, s_.pre_ls[n.kids[2]->id],
                                    {{env[x], s_.post_ls[n.kids[0]->id], k, 1}});
                    }
                }
                walk(*n.kids[1], e1);
                walk(*n.kids[2], e2);
                env = join(n, e1, s_.post_ls[n.kids[1]->id], e2, s_.post_ls[n.kids[2]->id]);
                break;
            }
            case Kind::While: {
                int h = s_.pre_ls[n.kids[0]->id];
                std::set<std::string> mod;
                assigned_vars(n, mod);
                bool all = has_marked(n) || h != s_.pre_ls[n.id];
                bool fields = s_.opts.invalidate_fields && has_call(n);
                std::vector<int> phis(env.size(), -1);
                for (size_t x = 0; x < env.size(); ++x) {
                    if (all || mod.count(u_.vars[x]) || (fields && u_.is_field(static_cast<int>(x)))) {
                        phis[x] = def(static_cast<int>(x), DefKind::Phi, n.id, h, {{env[x], s_.pre_ls[n.id]}});
                        env[x] = phis[x];
                    }
                }
                walk(*n.kids[0], env);
                std::vector<int> body = env;
                walk(*n.kids[1], body);
                for (size_t x = 0; x < env.size(); ++x) {
                    if (phis[x] >= 0)
                        u_.versions[phis[x]].ops.push_back({body[x], s_.post_ls[n.kids[1]->id]});
                    else if (body[x] != env[x])
                        throw std::logic_error("loop-carried variable without header phi");
                }
                break;
            }
            default:
                for (auto& k : n.kids) walk(*k, env);
        }
        s_.post_env[n.id] = env;
    }
};

}  // namespace

Ssa to_ssa(const Program& p, const SsaOptions& opts) {
    Ssa s;
    s.opts = opts;
    s.pre_env.assign(p.node_count, {});
    s.post_env.assign(p.node_count, {});
    s.pre_ls.assign(p.node_count, 0);
    s.post_ls.assign(p.node_count, 0);
    s.units.resize(p.units.size());
    for (size_t u = 0; u < p.units.size(); ++u) {
        UnitSsa& us = s.units[u];
        us.unit = static_cast<int>(u);
        us.cls = p.units[u].cls;
        us.vars = unit_locals(p, static_cast<int>(u));
        const Method* m = p.unit_method(static_cast<int>(u));
        us.nparams = m ? m->arity() : 0;
        us.nlocals = static_cast<int>(us.vars.size());
        if (us.cls >= 0) {
            std::set<std::string> fs;
            collect_fields(*p.units[u].body, fs);
            for (auto& f : fs) us.vars.push_back("@" + f);
        }
        Builder(p, s, us).build();
    }
    return s;
}

Ssa invalidate_fields_at_calls(const Program& p, const Ssa& s) {
    SsaOptions o = s.opts;
    o.invalidate_fields = true;
    return to_ssa(p, o);
}

std::vector<bool> statement_context(const Program& p) {
    std::vector<bool> ctx(p.node_count, false);
    for (int id = 0; id < p.node_count; ++id) {
        int par = p.parent[id];
        if (par < 0) {
            ctx[id] = true;
            continue;
        }
        const Node& pn = *p.nodes[par];
        size_t idx = 0;
        while (pn.kids[idx]->id != id) ++idx;
        bool ok = pn.kind == Kind::Seq || (pn.kind == Kind::If && idx >= 1) || (pn.kind == Kind::While && idx == 1);
        ctx[id] = ctx[par] && ok;
    }
    return ctx;
}

std::string dump_unit_body(const Program& p, const Ssa& s, int unit) {
    const UnitSsa& u = s.units[unit];
    NameHook hook = [&](const Node& n) -> std::string {
        std::string name;
        const std::vector<int>* env = nullptr;
        switch (n.kind) {
            case Kind::Var: name = n.name; env = &s.pre_env[n.id]; break;
            case Kind::IVar: name = "@" + n.name; env = &s.pre_env[n.id]; break;
            case Kind::AssignLocal: name = n.name; env = &s.post_env[n.id]; break;
            case Kind::AssignField: name = "@" + n.name; env = &s.post_env[n.id]; break;
            default: return {};
        }
        int x = u.var_index(name);
        if (x < 0 || env->empty()) return {};
        return u.version_name((*env)[x]);
    };
    return pretty(*p.units[unit].body, hook);
}

std::string dump_ssa(const Program& p, const Ssa& s, bool include_prelude) {
    std::string o;
    for (size_t ui = 0; ui < s.units.size(); ++ui) {
        const UnitSsa& u = s.units[ui];
        if (u.cls >= 0 && p.classes[u.cls].prelude && !include_prelude) continue;
        o += "unit " + p.unit_name(static_cast<int>(ui)) + "\n";
        o += "  body: " + dump_unit_body(p, s, static_cast<int>(ui)) + "\n";
        if (!u.marked.empty()) {
            o += "  marked:";
            for (int m : u.marked) o += " #" + std::to_string(m);
            o += "\n";
        }
        for (size_t v = 0; v < u.versions.size(); ++v) {
            auto& ver = u.versions[v];
            o += "  " + u.version_name(static_cast<int>(v)) + " = " + def_kind_name(ver.kind);
            if (ver.node >= 0) o += " #" + std::to_string(ver.node);
            if (!ver.ops.empty()) {
                o += " (";
                for (size_t i = 0; i < ver.ops.size(); ++i) o += (i ? ", " : "") + u.version_name(ver.ops[i].version);
                o += ")";
            }
            const LabelSet& ls = u.label_sets[ver.ls];
            if (ls.slots() > 1 || !u.marked.empty()) {
                o += " paths [";
                for (int j = 0; j < ls.slots(); ++j) o += (j ? " " : "") + ls.slot_str(j);
                o += "]";
            }
            o += "\n";
        }
    }
    return o;
}

std::string erase_versions(const std::string& text) {
    static const std::regex suffix(R"(([A-Za-z_@][A-Za-z0-9_]*)#[0-9]+)");
    return std::regex_replace(text, suffix, "$1");
}

}  // namespace dyn
