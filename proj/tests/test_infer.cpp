#include <gtest/gtest.h>

#include <random>

#include "dyn/fuzz.hpp"
#include "dyn/infer.hpp"
#include "dyn/lang.hpp"
#include "support.hpp"

namespace dyn {
namespace {

UnionType ty(const Program& p, std::vector<std::string> names) { return UnionType::of(p.universe, names); }

const Node& main_stmt(const Program& p, size_t i) { return *p.main->kid(i); }

std::pair<int, int> method_key(const Program& p, const std::string& cls, const std::string& m) {
    int c = p.class_index.at(cls);
    auto& ms = p.classes[c].methods;
    for (size_t i = 0; i < ms.size(); ++i)
        if (ms[i].name == m) return {c, static_cast<int>(i)};
    throw std::invalid_argument("no method " + cls + "." + m);
}

int count_kind(const Analysis& a, const std::string& kind) {
    int n = 0;
    for (auto& o : a.obligations) n += o.kind == kind;
    return n;
}

TEST(Infer, Supporters) {
    auto p = load_program("class A < object { method get() { 1 } } null");
    EXPECT_EQ(supporters(p, "m_add", 1), ty(p, {"num"}));
    EXPECT_EQ(supporters(p, "not", 0), ty(p, {"bool"}));
    EXPECT_EQ(supporters(p, "get", 0), ty(p, {"A"}));
    EXPECT_TRUE(supporters(p, "get", 1).is_bottom());
    EXPECT_TRUE(supporters(p, "nothing", 0).is_bottom());
}

TEST(Infer, NewCreatesInitEdge) {
    auto p = load_program("class A < object { method init() { this } } u := new A(); u");
    Typing layout;
    auto s = to_ssa(p);
    auto cs = generate_constraints(p, s, layout);
    int new_id = main_stmt(p, 0).kid(0)->id;
    bool found = false;
    for (auto& c : cs.items)
        if (c.kind == Constraint::Kind::CallEdge && c.node == new_id) {
            found = true;
            EXPECT_EQ(c.method, "init");
            ASSERT_TRUE(c.recv_const.has_value());
            EXPECT_EQ(*c.recv_const, ty(p, {"A"}));
        }
    EXPECT_TRUE(found);
}

TEST(Infer, LiteralsAndLoops) {
    auto a = analyze(load_program("u := 0; while u.is_zero() do u := u.succ() od; v := new bool(null).not(); 2"));
    auto& p = a.prog;
    EXPECT_EQ(node_summary(a, main_stmt(p, 0).id), ty(p, {"num"}));
    EXPECT_EQ(node_summary(a, main_stmt(p, 1).id), ty(p, {"Null"}));
    EXPECT_EQ(node_summary(a, main_stmt(p, 2).id), ty(p, {"bool"}));
    EXPECT_EQ(node_summary(a, main_stmt(p, 3).id), ty(p, {"num"}));
    EXPECT_TRUE(a.obligations.empty());
}

TEST(Infer, MethodTypes) {
    auto a = analyze(load_program(
        "class A < object { method get(x) { x } method lost(y) { y } } "
        "u := new A(); v := u.get(1); w := u.get(true); v"));
    auto& p = a.prog;
    auto get = method_key(p, "A", "get");
    EXPECT_EQ(a.ty.cells[a.ty.param.at(get)[0]], ty(p, {"num", "bool"}));
    EXPECT_EQ(a.ty.cells[a.ty.ret.at(get)], ty(p, {"num", "bool"}));
    auto lost = method_key(p, "A", "lost");
    EXPECT_TRUE(a.ty.cells[a.ty.param.at(lost)[0]].is_bottom());
    EXPECT_TRUE(a.ty.cells[a.ty.ret.at(lost)].is_bottom());
    EXPECT_EQ(node_summary(a, main_stmt(p, 0).id), ty(p, {"A"}));
}

TEST(Infer, FieldTypesFlowThroughMethods) {
    auto a = analyze(load_program(
        "class Box < object { method init(v) { @v := v; this } method get() { @v } } "
        "b := new Box(1); c := new Box(null); b.get()"));
    auto& p = a.prog;
    EXPECT_EQ(a.ty.cells[a.ty.field.at({p.class_index.at("Box"), "v"})], ty(p, {"num", "Null"}));
    EXPECT_EQ(node_summary(a, main_stmt(p, 2).id), ty(p, {"num", "Null"}));
}

TEST(Infer, TypeFilterMeets) {
    auto p = load_program("c := new bool(null); if c then x := 1 else x := true fi; y := x");
    auto anns = parse_annotations(p, "at main#" + std::to_string(main_stmt(p, 2).id) + " assume [x] in {num}");
    auto a = refine(p, anns);
    const Node& last = *a.prog.main->kids.back();
    EXPECT_EQ(node_summary(a, last.id), ty(a.prog, {"num"}));
    bool has_filter = false;
    for (auto* n : a.prog.nodes) has_filter |= n->kind == Kind::TypeFilter;
    EXPECT_TRUE(has_filter);
}

TEST(Infer, SolverOutputIsConsistentFixpoint) {
    auto p = load_program(test::corpus("shapes.dyn"));
    auto a = analyze(p);
    EXPECT_TRUE(check_consistency(a.prog, a.cs, a.ty).empty());
    Typing again = a.ty;
    EXPECT_FALSE(solve_pass(a.cs, again));
}

TEST(Infer, ConsistencyDetectsShrunkCell) {
    auto a = analyze(load_program("u := 1; v := u.succ(); v"));
    auto& p = a.prog;
    Typing t = a.ty;
    int cell = t.node_base[main_stmt(p, 1).id];
    ASSERT_FALSE(t.cells[cell].is_bottom());
    t.cells[cell] = UnionType::bottom(p.universe);
    EXPECT_FALSE(check_consistency(p, a.cs, t).empty());
}

TEST(Infer, TypingDumpRoundTrip) {
    auto a = analyze(load_program(test::corpus("registry.dyn")));
    auto text = dump_typing(a, true);
    Analysis b = a;
    for (auto& c : b.ty.cells) c = UnionType::bottom(a.prog.universe);
    b.ty = load_typing(b, text);
    EXPECT_EQ(dump_typing(b, true), text);
    for (auto* n : a.prog.nodes) EXPECT_EQ(node_summary(a, n->id), node_summary(b, n->id));
}

TEST(Infer, MissingMethodObligation) {
    auto a = analyze(load_program("w := new object().m_add(1); 0"));
    ASSERT_EQ(a.obligations.size(), 1u);
    EXPECT_EQ(a.obligations[0].kind, "receiver-missing-method");
    EXPECT_EQ(a.obligations[0].method, "m_add");
    EXPECT_EQ(a.obligations[0].offending, ty(a.prog, {"object"}));
    EXPECT_EQ(a.obligations[0].required, ty(a.prog, {"num"}));
}

TEST(Infer, NonBooleanConditionObligation) {
    auto a = analyze(load_program("if 1 then 2 else 3 fi"));
    EXPECT_EQ(count_kind(a, "non-boolean-condition"), 1);
}

TEST(Infer, NumericStraightLineHasNoObligations) {
    auto a = analyze(load_program("a := 3; b := a + 4; c := b + a; d := c.pred(); d = 9"));
    EXPECT_TRUE(a.obligations.empty());
}

TEST(Infer, EvaluatorNeedsAnnotations) {
    auto p = load_program(test::corpus("evaluator.dyn"));
    auto a = analyze(p);
    EXPECT_GE(a.obligations.size(), 1u);
    bool m_add = false;
    for (auto& o : a.obligations) m_add |= o.method == "m_add";
    EXPECT_TRUE(m_add);
    auto r = refine(p, parse_annotations(p, test::corpus("evaluator.ann")));
    EXPECT_TRUE(r.obligations.empty());
    EXPECT_TRUE(check_monotone(a, r).empty());
}

TEST(Infer, DisjunctiveRefinementSplitsPaths) {
    auto p = load_program("c := new bool(null); if c then x := 1 else x := true fi; y := x.m_add(x); z := x.not()");
    auto before = analyze(p);
    EXPECT_EQ(before.obligations.size(), 4u);  // including the two uses inside num.m_add
    auto anns = parse_annotations(p, "at main#" + std::to_string(main_stmt(p, 2).id) +
                                         " assume [x] in {num} or [x] in {bool}");
    auto a = refine(p, anns);
    std::vector<std::pair<std::string, std::string>> seen;
    for (auto& o : a.obligations)
        if (a.prog.unit_of[o.node] == a.prog.main_unit()) seen.push_back({o.method, o.offending.str()});
    ASSERT_EQ(seen.size(), 2u);
    EXPECT_EQ(seen[0], (std::pair<std::string, std::string>{"m_add", "{bool}"}));
    EXPECT_EQ(seen[1], (std::pair<std::string, std::string>{"not", "{num}"}));
    EXPECT_TRUE(check_monotone(before, a).empty());
}

TEST(Infer, AnnotationErrors) {
    auto p = load_program("u := 1; v := u.succ(); v");
    EXPECT_THROW(parse_annotations(p, "at main#99999 assume [u] in {num}"), AnnotationError);
    EXPECT_THROW(parse_annotations(p, "at main#0 assume [u] in {num}"), AnnotationError);
    EXPECT_THROW(parse_annotations(p, "somewhere assume true"), AnnotationError);
    auto at = "at main#" + std::to_string(main_stmt(p, 1).id);
    EXPECT_THROW(parse_annotations(p, at + " assume [u] in {Nope}"), std::exception);
    EXPECT_NO_THROW(parse_annotations(p, at + " assume [u] in {num}\n\n# comment\n"));
}

TEST(InferProperty, RefinementIsMonotone) {
    auto stats = fuzz_refinement(13, 80);
    EXPECT_GT(stats.refinements, 40) << stats.str();
    EXPECT_EQ(stats.monotone_violations, 0) << stats.str();
}

TEST(InferProperty, ObligationFreeProgramsRunWithoutTypeErrors) {
    auto stats = fuzz_soundness(11, 40, 20000, 3);
    EXPECT_GT(stats.obligation_free, 10) << stats.str();
    EXPECT_EQ(stats.type_errors, 0) << stats.str();
    EXPECT_EQ(stats.violations, 0) << stats.str();
}

TEST(InferProperty, SolverReachesFixpointOnRandomPrograms) {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 60; ++i) {
        auto a = analyze(load_program(random_program(rng)));
        Typing t = a.ty;
        EXPECT_FALSE(solve_pass(a.cs, t));
        EXPECT_TRUE(check_consistency(a.prog, a.cs, a.ty).empty());
    }
}

TEST(InferProperty, JoinedPathsMatchCollapsedAnalysis) {
    std::mt19937_64 rng(17);
    int compared = 0;
    for (int i = 0; i < 120; ++i) {
        auto p = load_program(random_program(rng));
        auto line = random_annotation(rng, p);
        if (!line) continue;
        auto anns = parse_annotations(p, *line);
        auto split = refine(p, anns);
        auto collapsed = refine(p, anns, InferOptions{1, true});
        for (auto* n : split.prog.nodes)
            ASSERT_EQ(split.ty.node_joined(n->id), collapsed.ty.node_joined(n->id)) << *line << " at #" << n->id;
        ++compared;
    }
    EXPECT_GT(compared, 60);
}

}  // namespace
}  // namespace dyn
