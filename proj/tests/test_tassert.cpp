#include <gtest/gtest.h>

#include <random>
#include <set>

#include "dyn/infer.hpp"
#include "dyn/lang.hpp"
#include "dyn/tassert.hpp"
#include "support.hpp"

namespace dyn {
namespace {

UniverseRef nb() { return make_universe({"num", "bool"}); }

TAsrt P(const UniverseRef& u, const std::string& s) { return parse_tasrt(u, s); }

TEST(TAsrt, CanonicalForm) {
    auto u = nb();
    EXPECT_EQ(P(u, "[x] in {num} and [x] in {num,bool}"), P(u, "[x] in {num}"));
    // subsumed disjunct removed
    EXPECT_EQ(P(u, "[x] in {num} or [x] in {num,bool}"), P(u, "[x] in {num,bool}"));
    // TOP literals vanish
    EXPECT_TRUE(P(u, "[x] in TOP").is_true());
    // an empty literal is dropped while another disjunct remains, kept otherwise
    EXPECT_EQ(P(u, "[x] in {} or [y] in {num}"), P(u, "[y] in {num}"));
    EXPECT_TRUE(P(u, "[x] in {}").is_false());
    EXPECT_EQ(P(u, "[x] in {}").disjuncts().size(), 1u);
}

TEST(TAsrt, OmegaDropsOpaqueAtoms) {
    auto u = nb();
    EXPECT_EQ(P(u, "[x] in {num} and opaque(\"x>8\")"), P(u, "[x] in {num}"));
    EXPECT_TRUE(P(u, "opaque(\"p\") or [x] in {num}").is_true());
    auto pure = P(u, "[x] in {num} and [y] in {bool} or [x] in {bool}");
    EXPECT_EQ(filter_omega(*parse_formula(u, pure.str())), pure);
}

TEST(TAsrt, ProjectVar) {
    auto u = nb();
    EXPECT_EQ(project_var(P(u, "[x] in {num} and [x] in {num,bool}"), "x"), UnionType::of(u, {"num"}));
    EXPECT_TRUE(project_var(P(u, "[x] in {num} or [y] in {bool}"), "x").is_top());
    EXPECT_EQ(project_var(P(u, "not [x] in {bool}"), "x"), UnionType::of(u, {"num", "Null"}));
}

TEST(TAsrt, Implication) {
    auto u = nb();
    EXPECT_TRUE(implies(P(u, "[x] in {num}"), P(u, "[x] in {num,bool}")));
    auto t = P(u, "[x] in {num} and [y] in {bool} or [x] in {bool} and [y] in {num}");
    EXPECT_TRUE(implies(t, P(u, "[x] in {num,bool}")));
    EXPECT_TRUE(implies_exact(t, P(u, "[x] in {num,bool}")));
    EXPECT_FALSE(implies(P(u, "[x] in {num,bool}"), P(u, "[x] in {num}")));
}

// A class set split across two disjuncts on the same subject: no single disjunct covers the premise,
// yet every state satisfying it satisfies one of them.
TEST(TAsrt, IncompletenessWitness) {
    auto u = nb();
    auto t1 = P(u, "[x] in {num,bool}");
    auto t2 = P(u, "[x] in {num} or [x] in {bool}");
    EXPECT_FALSE(implies(t1, t2));
    EXPECT_TRUE(implies_exact(t1, t2));
}

// The box-cover shape: the premise is a product box, the conclusion two overlapping strips.
TEST(TAsrt, BoxCoverIsSoundlyHandled) {
    auto u = nb();
    auto t1 = P(u, "[x] in {num,bool} and [y] in {bool,num}");
    auto t2 = P(u, "[x] in {num} or [y] in {bool}");
    EXPECT_FALSE(implies_exact(t1, t2));  // x = bool, y = num refutes it
    EXPECT_FALSE(implies(t1, t2));
}

TEST(TAsrt, Substitution) {
    auto u = nb();
    EXPECT_EQ(substitute(P(u, "[u] in {num}"), "u", "r"), P(u, "[r] in {num}"));
    auto collapsed = substitute(P(u, "[u] in {num} and [r] in {bool}"), "u", "r");
    EXPECT_TRUE(collapsed.is_false());
    EXPECT_TRUE(project_var(collapsed, "r").is_bottom());
    EXPECT_EQ(substitute(P(u, "[v] in {num}"), "u", "r"), P(u, "[v] in {num}"));
}

TEST(TAsrt, EvalOnState) {
    auto u = nb();
    std::map<Subject, std::string> st = {{"x", "Null"}};
    EXPECT_TRUE(eval_on_state(P(u, "[x] in {Null,num}"), test::view(st)));
    st["x"] = "bool";
    EXPECT_FALSE(eval_on_state(P(u, "[x] in {num}"), test::view(st)));
    EXPECT_TRUE(eval_on_state(TAsrt::truth(u), test::view(st)));
    EXPECT_THROW(eval_on_state(P(u, "[y] in {num}"), test::view(st)), std::invalid_argument);
}

TEST(TAsrt, SyntaxErrors) {
    auto u = nb();
    EXPECT_THROW(parse_tasrt(u, "[x] in {str}"), AssertionSyntaxError);
    EXPECT_THROW(parse_tasrt(u, "[x] {num}"), AssertionSyntaxError);
    EXPECT_THROW(parse_tasrt(u, "[x] in {num} and"), AssertionSyntaxError);
}

TEST(Xi, PostOfNumericAssignment) {
    auto a = analyze(load_program("u := 2"));
    int assign = -1;
    for (int id = 0; id < a.prog.node_count; ++id)
        if (a.prog.nodes[id]->kind == Kind::AssignLocal && a.prog.unit_of[id] == a.prog.main_unit()) assign = id;
    ASSERT_GE(assign, 0);
    auto u = a.prog.universe;
    EXPECT_EQ(xi_assert(a, assign, true), P(u, "[u] in {num} and [r] in {num}"));
    EXPECT_EQ(xi_assert(a, assign, false), P(u, "[u] in {Null}"));
}

TEST(Xi, PathSplitGivesTwoDisjuncts) {
    std::string src = "x := if true then 1 else true fi;\nx";
    auto base = analyze(load_program(src));
    int last = base.prog.main->kids.back()->id;
    auto anns = parse_annotations(base.prog, "at main#" + std::to_string(last) + " assume [x] in {num} or [x] in {bool}");
    auto a = refine(base.prog, anns);
    int after = a.prog.main->kids.back()->id;
    EXPECT_EQ(xi_assert(a, after, false).disjuncts().size(), 2u);
}

// ---- properties ----

std::vector<Subject> kSubjects = {"x", "y", "z"};

TEST(TAssertProperty, ImpliesIsSound) {
    std::mt19937_64 rng(202);
    auto u = make_universe({"A", "B", "C", "D"});
    int proved = 0;
    for (int i = 0; i < 10000; ++i) {
        auto a = test::random_tasrt(rng, u, kSubjects), b = test::random_tasrt(rng, u, kSubjects);
        if (!implies(a, b)) continue;
        ++proved;
        ASSERT_TRUE(implies_exact(a, b)) << a.str() << " => " << b.str();
    }
    EXPECT_GT(proved, 100);
}

// An independent enumeration oracle for implies_exact itself.
TEST(TAssertProperty, ExactImplicationMatchesEnumeration) {
    std::mt19937_64 rng(203);
    auto u = make_universe({"A", "B"});
    auto states = test::all_states(u, kSubjects);
    for (int i = 0; i < 2000; ++i) {
        auto a = test::random_tasrt(rng, u, kSubjects), b = test::random_tasrt(rng, u, kSubjects);
        bool want = true;
        for (auto& st : states)
            if (eval_on_state(a, test::view(st)) && !eval_on_state(b, test::view(st))) want = false;
        ASSERT_EQ(implies_exact(a, b), want) << a.str() << " => " << b.str();
    }
}

TEST(TAssertProperty, OmegaWeakens) {
    std::mt19937_64 rng(204);
    auto u = make_universe({"A", "B", "C"});
    auto states = test::all_states(u, kSubjects);
    for (int i = 0; i < 10000; ++i) {
        std::string text = test::random_formula(rng, u, kSubjects, 4);
        auto f = parse_formula(u, text);
        auto w = filter_omega(*f);
        for (int interp = 0; interp < 4; ++interp) {
            auto opaque = [interp](const std::string& name) { return ((interp >> (name.back() - '0')) & 1) != 0; };
            for (size_t s = 0; s < states.size(); s += 1 + static_cast<size_t>(i % 7)) {
                auto v = test::view(states[s]);
                if (eval_formula(*f, v, opaque)) ASSERT_TRUE(eval_on_state(w, v)) << text << " vs " << w.str();
            }
        }
    }
}

TEST(TAssertProperty, ProjectVarOverApproximates) {
    std::mt19937_64 rng(205);
    auto u = make_universe({"A", "B", "C", "D"});
    auto states = test::all_states(u, kSubjects);
    for (int i = 0; i < 10000; ++i) {
        auto t = test::random_tasrt(rng, u, kSubjects);
        auto& x = kSubjects[static_cast<size_t>(i % 3)];
        auto p = project_var(t, x);
        std::set<std::string> seen;
        for (size_t s = static_cast<size_t>(i % 5); s < states.size(); s += 5)
            if (eval_on_state(t, test::view(states[s]))) seen.insert(states[s].at(x));
        for (auto& c : seen) ASSERT_TRUE(p.contains(c)) << t.str() << " project " << x << " misses " << c;
    }
}

TEST(TAssertProperty, SubstitutionAgreesWithStates) {
    std::mt19937_64 rng(206);
    auto u = make_universe({"A", "B"});
    auto states = test::all_states(u, {"x", "y", "z", "r"});
    for (int i = 0; i < 2000; ++i) {
        auto t = test::random_tasrt(rng, u, {"x", "y", "z", "r"});
        auto moved = substitute(t, "x", "r");
        // moved holds in a state iff t holds once x takes the value of r
        for (size_t s = static_cast<size_t>(i % 11); s < states.size(); s += 11) {
            auto st = states[s];
            auto shifted = st;
            shifted["x"] = st["r"];
            ASSERT_EQ(eval_on_state(moved, test::view(st)), eval_on_state(t, test::view(shifted))) << t.str();
        }
    }
}

}  // namespace
}  // namespace dyn
