#include <gtest/gtest.h>

#include <functional>
#include <random>

#include "dyn/interp.hpp"
#include "dyn/lang.hpp"
#include "dyn/proof.hpp"
#include "dyn/purity.hpp"
#include "support.hpp"

namespace dyn {
namespace {

struct Last {
    Analysis a;
    const Node* e;
    PurityContext ctx;
};

Last last_expr(const std::string& src) {
    Last l{analyze(load_program(src)), nullptr, {}};
    l.e = l.a.prog.main->kids.back().get();
    l.ctx = purity_context(l.a, l.e->id);
    return l;
}

std::optional<BaseType> classify(const std::string& src) {
    auto l = last_expr(src);
    return classify_pure(l.a.prog, *l.e, l.ctx);
}

std::string psi_text(const std::string& src) {
    auto l = last_expr(src);
    return psi(l.a.prog, *l.e, l.ctx)->str();
}

LValue nat(uint64_t n) {
    LValue v;
    v.kind = BaseType::K::Nat;
    v.nat = n;
    return v;
}

LValue decoded(Value v) {
    LValue out;
    if (auto n = decode_num(v)) {
        out.kind = BaseType::K::Nat;
        out.nat = *n;
    } else if (auto b = decode_bool(v)) {
        out.kind = BaseType::K::Bool;
        out.b = *b;
    } else {
        out.kind = v ? BaseType::K::Obj : BaseType::K::Null;
        if (v) out.cls = v->cls->name;
    }
    return out;
}

TEST(Purity, BaseTypeOfClassSets) {
    auto p = load_program("null");
    auto u = p.universe;
    EXPECT_EQ(psi_hat(UnionType::bottom(u)), BaseType::null());
    EXPECT_EQ(psi_hat(UnionType::of(u, {"num"})), BaseType::nat());
    EXPECT_EQ(psi_hat(UnionType::of(u, {"bool"})), BaseType::boolean());
    EXPECT_EQ(psi_hat(UnionType::of(u, {"cons", "nil"})).k, BaseType::K::List);
    EXPECT_EQ(psi_hat(UnionType::of(u, {"num", "bool"})), BaseType::obj());
}

TEST(Purity, Classification) {
    EXPECT_EQ(classify("u := 3; u"), BaseType::nat());
    EXPECT_FALSE(classify("u := 3; u := 1").has_value());
    EXPECT_EQ(classify("u := 3; u.succ().m_add(2)"), BaseType::nat());
    EXPECT_EQ(classify("u := 3; u.is_zero().not()"), BaseType::boolean());
    EXPECT_EQ(classify("p := true; if p then 1 else 2 fi"), BaseType::nat());
    EXPECT_FALSE(classify("u := 3; while u.is_zero() do u := 1 od").has_value());
    EXPECT_FALSE(classify("class A < object { method get() { 1 } } u := new A(); u.get()").has_value());
    EXPECT_EQ(classify("c := new bool(null); if c then u := 1 else u := true fi; u"), BaseType::obj());
    EXPECT_FALSE(classify("c := new bool(null); if c then u := 1 else u := true fi; u.succ()").has_value());
}

TEST(Purity, Translation) {
    EXPECT_EQ(psi_text("u := 3; u.succ()"), "^u + 1");
    EXPECT_EQ(psi_text("u := 3; new num(null)"), "0");
    EXPECT_EQ(psi_text("a := 1; b := 2; a + b"), "^a + ^b");
    EXPECT_THROW(psi_text("u := 3; u := 1"), PurityError);
}

TEST(Purity, LogicalEvaluation) {
    auto l = last_expr("u := 3; u.succ()");
    auto t = psi(l.a.prog, *l.e, l.ctx);
    EXPECT_EQ(eval_logical(*t, {{"^u", nat(4)}}), nat(5));
    auto s = last_expr("a := 1; b := 2; a + b");
    EXPECT_EQ(eval_logical(*psi(s.a.prog, *s.e, s.ctx), {{"^a", nat(3)}, {"^b", nat(4)}}), nat(7));
    auto c = last_expr("p := true; if p then 1 else 2 fi");
    LValue yes;
    yes.kind = BaseType::K::Bool;
    yes.b = true;
    EXPECT_EQ(eval_logical(*psi(c.a.prog, *c.e, c.ctx), {{"^p", yes}}), nat(1));
    EXPECT_THROW(eval_logical(*t, {}), PurityError);
}

TEST(Purity, UpsilonExpansion) {
    EXPECT_EQ(upsilon_expand("^u < 5", {{"u", BaseType::nat()}}), "∃v_u:ℕ. v_u < 5 ∧ ℕ(u,v_u)");
    EXPECT_EQ(upsilon_expand("[u] in {num}", {}), "[u] in {num}");
    EXPECT_EQ(upsilon_expand("^u = ^w", {{"u", BaseType::nat()}, {"w", BaseType::boolean()}}),
              "∃v_u:ℕ, v_w:𝔹. v_u = v_w ∧ ℕ(u,v_u) ∧ 𝔹(w,v_w)");
    EXPECT_THROW(upsilon_expand("^z < 1", {{"u", BaseType::nat()}}), PurityError);
}

TEST(PurityProperty, PsiAgreesWithInterpreter) {
    std::mt19937_64 rng(31);
    for (int i = 0; i < 1000; ++i) {
        auto s = random_pure_program(rng, 1 + i % 6);
        auto l = last_expr(s.source);
        auto t = classify_pure(l.a.prog, *l.e, l.ctx);
        ASSERT_TRUE(t.has_value()) << s.source;
        auto logical = eval_logical(*psi(l.a.prog, *l.e, l.ctx), s.env);
        auto r = run(l.a.prog);
        ASSERT_EQ(r.outcome.kind, Outcome::Kind::Proper) << s.source;
        ASSERT_EQ(decoded(r.outcome.result), logical) << s.source;
    }
}

TEST(PurityProperty, PureEvaluationIsObservational) {
    using Snapshot = std::vector<std::pair<std::string, std::vector<int>>>;
    auto snapshot = [](const Heap& h, size_t count) {
        Snapshot out;
        for (size_t i = 0; i < count && i < h.objects.size(); ++i) {
            std::vector<int> fields;
            for (auto v : h.objects[i]->fields) fields.push_back(v ? v->alloc : -1);
            out.push_back({h.objects[i]->cls->name, fields});
        }
        return out;
    };
    std::mt19937_64 rng(37);
    for (int i = 0; i < 200; ++i) {
        auto s = random_pure_program(rng, 1 + i % 6);
        std::string prefix = s.source.substr(0, s.source.size() - s.expr.size() - 1);
        auto before_prog = load_program(prefix + "null");
        auto before = run(before_prog);
        size_t count = before.heap->objects.size();
        std::string twice = prefix + "r1 := (" + s.expr + "); r2 := (" + s.expr + "); ";
        auto first_prog = load_program(twice + "r1");
        auto second_prog = load_program(twice + "r2");
        auto first = run(first_prog);
        auto second = run(second_prog);
        ASSERT_EQ(snapshot(*first.heap, count), snapshot(*before.heap, count)) << s.expr;
        ASSERT_EQ(decoded(first.outcome.result), decoded(second.outcome.result)) << s.expr;
    }
}

ProofNode* find_stmt(ProofNode& n, const std::string& rule, int stmt) {
    if (n.rule == rule && n.stmt == stmt) return &n;
    for (auto& k : n.premises)
        if (auto* f = find_stmt(k, rule, stmt)) return f;
    return nullptr;
}

void wrap(ProofNode& n, const std::string& rule) {
    ProofNode inner = n;
    n.rule = rule;
    n.side = nlohmann::ordered_json::object();
    n.premises = {inner};
}

TEST(PurityProof, PureStepsAreDischargedByClassification) {
    auto a = analyze(load_program(
        "class A < object { } u := 3; c := u.is_zero(); w := new A(); if c then 1 else 2 fi"));
    auto& p = a.prog;
    auto base = build_typing_proof(a);
    ASSERT_TRUE(check_proof(p, base).ok());

    auto pure_asgn = base;
    auto* n = find_stmt(pure_asgn.root, "ASGN", p.main->kid(1)->id);
    ASSERT_NE(n, nullptr);
    wrap(*n, "PURE-ASGN");
    auto report = check_proof(p, pure_asgn);
    EXPECT_TRUE(report.ok()) << report.str();

    auto typed = pure_asgn;
    find_stmt(typed.root, "PURE-ASGN", p.main->kid(1)->id)->side["type"] = "ℕ";
    EXPECT_FALSE(check_proof(p, typed).ok());

    auto impure = base;
    n = find_stmt(impure.root, "ASGN", p.main->kid(2)->id);
    ASSERT_NE(n, nullptr);
    wrap(*n, "PURE-ASGN");
    EXPECT_FALSE(check_proof(p, impure).ok());

    auto cond = base;
    n = find_stmt(cond.root, "COND", p.main->kid(3)->id);
    ASSERT_NE(n, nullptr);
    wrap(*n, "PURE-COND");
    report = check_proof(p, cond);
    EXPECT_TRUE(report.ok()) << report.str();

    auto not_cond = base;
    n = find_stmt(not_cond.root, "ASGN", p.main->kid(1)->id);
    wrap(*n, "PURE-COND");
    EXPECT_FALSE(check_proof(p, not_cond).ok());
}

}  // namespace
}  // namespace dyn
