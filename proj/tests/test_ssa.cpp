#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "dyn/cli.hpp"
#include "dyn/fuzz.hpp"
#include "dyn/interp.hpp"
#include "dyn/lang.hpp"
#include "dyn/ssa.hpp"
#include "support.hpp"

namespace dyn {
namespace {

int unit_named(const Program& p, const std::string& name) {
    for (int u = 0; u < static_cast<int>(p.units.size()); ++u)
        if (p.unit_name(u) == name) return u;
    return -1;
}

const Version& read_version(const Program& p, const Ssa& s, const Node& var) {
    auto& us = s.units[p.unit_of[var.id]];
    std::string name = var.kind == Kind::IVar ? "@" + var.name : var.name;
    return us.versions[s.pre_env[var.id][us.var_index(name)]];
}

TEST(Ssa, StraightLine) {
    auto p = load_program("class A < object { } u := null; u := new A()");
    auto s = to_ssa(p);
    auto& us = s.units[p.main_unit()];
    int second = p.main->kid(1)->id;
    int v = s.post_env[second][us.var_index("u")];
    EXPECT_EQ(us.versions[v].number, 2);
    EXPECT_EQ(us.versions[v].kind, DefKind::Assign);
    EXPECT_EQ(us.versions[v].node, second);
}

TEST(Ssa, PhiAfterIf) {
    auto p = load_program("c := true; if c then u := 1 else u := 2 fi; u");
    auto s = to_ssa(p);
    auto& us = s.units[p.main_unit()];
    auto& v = read_version(p, s, *p.main->kids.back());
    ASSERT_EQ(v.kind, DefKind::Phi);
    EXPECT_EQ(v.node, p.main->kid(1)->id);
    ASSERT_EQ(v.ops.size(), 2u);
    std::set<int> defs;
    for (auto& op : v.ops) defs.insert(us.versions[op.version].node);
    EXPECT_EQ(defs, (std::set<int>{p.main->kid(1)->kid(1)->id, p.main->kid(1)->kid(2)->id}));
}

TEST(Ssa, PhiAtLoopHeader) {
    auto p = load_program("u := 0; while u.is_zero() do u := u.succ() od");
    auto s = to_ssa(p);
    auto& us = s.units[p.main_unit()];
    const Node& loop = *p.main->kid(1);
    const Node& cond_read = *loop.kid(0)->kid(0);
    ASSERT_EQ(cond_read.kind, Kind::Var);
    auto& v = read_version(p, s, cond_read);
    ASSERT_EQ(v.kind, DefKind::Phi);
    EXPECT_EQ(v.node, loop.id);
    std::set<int> defs;
    for (auto& op : v.ops) defs.insert(us.versions[op.version].node);
    EXPECT_EQ(defs, (std::set<int>{p.main->kid(0)->id, loop.kid(1)->id}));
}

TEST(Ssa, FieldsInvalidatedAtCalls) {
    auto p = load_program("class A < object { method m(x) { @v := null; x.m(null); @v } } null");
    int u = unit_named(p, "A.m");
    const Node& body = *p.units[u].body;
    const Node& call = *body.kid(1);
    auto s = to_ssa(p);
    auto& v = read_version(p, s, *body.kids.back());
    EXPECT_EQ(v.kind, DefKind::Invalidate);
    EXPECT_EQ(v.node, call.id);

    SsaOptions off;
    off.invalidate_fields = false;
    auto plain = to_ssa(p, off);
    auto& w = read_version(p, plain, *body.kids.back());
    EXPECT_EQ(w.kind, DefKind::Assign);
    auto barrier = invalidate_fields_at_calls(p, plain);
    EXPECT_EQ(read_version(p, barrier, *body.kids.back()).kind, DefKind::Invalidate);
}

TEST(Ssa, TwoCallsTwoVersions) {
    auto p = load_program("class A < object { method m(x) { @v := null; x.m(null); x.m(null); @v } } null");
    int u = unit_named(p, "A.m");
    auto s = to_ssa(p);
    auto& us = s.units[u];
    int field = us.var_index("@v");
    int count = 0;
    for (auto& v : us.versions)
        if (v.var == field && v.kind == DefKind::Invalidate) ++count;
    EXPECT_EQ(count, 2);
}

TEST(Ssa, NoCallsNoBarrier) {
    auto p = load_program("class A < object { method m(x) { @v := x; @v } } null");
    int u = unit_named(p, "A.m");
    SsaOptions off;
    off.invalidate_fields = false;
    EXPECT_EQ(dump_unit_body(p, to_ssa(p), u), dump_unit_body(p, to_ssa(p, off), u));
}

TEST(Ssa, StatementContext) {
    auto p = load_program("x := 1; if x.is_zero() then y := 2 else null fi; y");
    auto ctx = statement_context(p);
    EXPECT_TRUE(ctx[p.main->kid(0)->id]);
    EXPECT_FALSE(ctx[p.main->kid(0)->kid(0)->id]);
    EXPECT_TRUE(ctx[p.main->kid(1)->kid(1)->id]);
    EXPECT_FALSE(ctx[p.main->kid(1)->kid(0)->id]);
}

// Rebuilds the program from the version-erased dumps of every user unit.
std::string erased_source(const Program& p, const Ssa& s) {
    std::string out;
    for (size_t c = 0; c < p.classes.size(); ++c) {
        auto& cls = p.classes[c];
        if (cls.prelude) continue;
        out += "class " + cls.name + " < object {\n";
        for (int u = 0; u < static_cast<int>(p.units.size()); ++u) {
            if (p.units[u].cls != static_cast<int>(c)) continue;
            auto& m = cls.methods[static_cast<size_t>(p.units[u].method)];
            out += "  method " + m.name + "(";
            for (size_t i = 0; i < m.params.size(); ++i) out += (i ? ", " : "") + m.params[i];
            out += ") { " + erase_versions(dump_unit_body(p, s, u)) + " }\n";
        }
        out += "}\n";
    }
    return out + erase_versions(dump_unit_body(p, s, p.main_unit())) + "\n";
}

void expect_same_behaviour(const std::string& src) {
    auto p = load_program(src);
    auto s = to_ssa(p);
    auto q = load_program(erased_source(p, s));
    RunOptions o;
    o.budget = 20000;
    auto a = run(p, o), b = run(q, o);
    ASSERT_EQ(outcome_name(a.outcome.kind), outcome_name(b.outcome.kind)) << src;
    if (a.outcome.kind == Outcome::Kind::Proper) EXPECT_EQ(render_value(a.outcome.result), render_value(b.outcome.result));
    EXPECT_EQ(a.outcome.steps, b.outcome.steps);
}

TEST(SsaProperty, ErasureIsObservationallyIdentical) {
    for (auto& name : test::corpus_programs()) {
        SCOPED_TRACE(name);
        expect_same_behaviour(test::corpus(name));
    }
    std::mt19937_64 rng(501);
    for (int i = 0; i < 100; ++i) expect_same_behaviour(heap_variant(rng, random_program(rng)));
}

// Dynamic reaching definitions: every executed read must be fed, through phi operands, by the
// assignment that last wrote the variable in the running activation.
class ReachingDefinitions : public Monitor {
public:
    ReachingDefinitions(const Program& p, const Ssa& s) : p_(p), s_(s) {}

    void at_pre(const Node& n, const Frame& f) override {
        auto& last = frames_[&f];
        if (p_.parent[n.id] < 0) last.clear();
        if (n.kind != Kind::Var) return;
        auto& us = s_.units[p_.unit_of[n.id]];
        int var = us.var_index(n.name);
        int def = last.count(n.name) ? last[n.name] : -1;
        ++reads;
        if (!feeds(us, s_.pre_env[n.id][var], def))
            failures.push_back(p_.unit_name(p_.unit_of[n.id]) + " #" + std::to_string(n.id) + " reads " + n.name +
                               " last written at #" + std::to_string(def));
    }

    void at_post(const Node& n, const Frame& f, Value) override {
        if (n.kind == Kind::AssignLocal) frames_[&f][n.name] = n.id;
    }

    std::vector<std::string> failures;
    long long reads = 0;

private:
    const Program& p_;
    const Ssa& s_;
    std::map<const Frame*, std::map<std::string, int>> frames_;

    bool feeds(const UnitSsa& us, int v, int def) const {
        std::set<int> seen;
        std::vector<int> work = {v};
        while (!work.empty()) {
            int x = work.back();
            work.pop_back();
            if (!seen.insert(x).second) continue;
            auto& ver = us.versions[x];
            if (ver.kind == DefKind::Entry && def == -1) return true;
            if (ver.kind == DefKind::Assign && ver.node == def) return true;
            for (auto& op : ver.ops) work.push_back(op.version);
        }
        return false;
    }
};

void check_reaching(const std::string& src) {
    auto p = load_program(src);
    auto s = to_ssa(p);
    ReachingDefinitions mon(p, s);
    RunOptions o;
    o.budget = 20000;
    o.monitor = &mon;
    run(p, o);
    ASSERT_TRUE(mon.failures.empty()) << mon.failures.front() << "\n" << src;
}

TEST(SsaProperty, ReadsSeeTheirDefinition) {
    for (auto& name : test::corpus_programs()) check_reaching(test::corpus(name));
    std::mt19937_64 rng(502);
    for (int i = 0; i < 150; ++i) check_reaching(heap_variant(rng, random_program(rng)));
}

// Static check: an assignment version is only read at nodes its defining assignment precedes.
TEST(SsaProperty, AssignmentsPrecedeTheirReads) {
    std::mt19937_64 rng(503);
    for (int i = 0; i < 150; ++i) {
        auto p = load_program(random_program(rng));
        auto s = to_ssa(p);
        for (int id = 0; id < p.node_count; ++id) {
            const Node& n = *p.nodes[id];
            if (n.kind != Kind::Var) continue;
            auto& v = read_version(p, s, n);
            if (v.kind != DefKind::Assign) continue;
            // the defining assignment completes before the read starts: it is not an ancestor and comes first
            for (int a = p.parent[id]; a >= 0; a = p.parent[a]) ASSERT_NE(a, v.node);
            ASSERT_LT(v.node, id);
        }
    }
}

}  // namespace
}  // namespace dyn
