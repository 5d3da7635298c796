#include <gtest/gtest.h>

#include <functional>
#include <random>
#include <set>

#include "dyn/fuzz.hpp"
#include "dyn/infer.hpp"
#include "dyn/lang.hpp"
#include "dyn/proof.hpp"
#include "support.hpp"

namespace dyn {
namespace {

std::vector<std::string> rules(const Proof& p) {
    std::vector<std::string> out;
    std::function<void(const ProofNode&)> walk = [&](const ProofNode& n) {
        out.push_back(n.rule);
        for (auto& k : n.premises) walk(k);
    };
    walk(p.root);
    return out;
}

Analysis annotated_corpus(const std::string& name) {
    auto p = load_program(test::corpus(name + ".dyn"));
    if (name == "evaluator" || name == "registry")
        return refine(p, parse_annotations(p, test::corpus(name + ".ann")));
    return analyze(p);
}

TEST(Proof, NullProgramIsOneConstant) {
    auto a = analyze(load_program("null"));
    auto pr = build_typing_proof(a);
    EXPECT_EQ(rules(pr), (std::vector<std::string>{"REC", "CONST"}));
    EXPECT_EQ(project_var(pr.root.post.lower, "r"), UnionType::null_only(a.prog.universe));
    auto report = check_proof(a.prog, pr);
    EXPECT_TRUE(report.ok()) << report.str();
    EXPECT_EQ(report.nodes, 2);
}

TEST(Proof, NewAssignmentUsesConstructorRules) {
    auto a = analyze(load_program("class A < object { } u := new A(); u"));
    auto pr = build_typing_proof(a);
    auto rs = rules(pr);
    for (auto r : {"ASGN", "CNSTR", "θ-NEW", "VAR"})
        EXPECT_NE(std::find(rs.begin(), rs.end(), r), rs.end()) << r;
    EXPECT_TRUE(check_proof(a.prog, pr).ok());
}

TEST(Proof, FieldAssignmentWitness) {
    auto a = analyze(load_program("class A < object { method set() { @v := 2; this } } u := new A(); u.set()"));
    auto pr = build_typing_proof(a);
    std::function<const ProofNode*(const ProofNode&)> user_iasgn = [&](const ProofNode& n) -> const ProofNode* {
        if (n.rule == "θ-IASGN" && n.side.value("class", "") == "A") return &n;
        for (auto& k : n.premises)
            if (auto* f = user_iasgn(k)) return f;
        return nullptr;
    };
    auto* node = user_iasgn(pr.root);
    ASSERT_NE(node, nullptr);
    EXPECT_EQ(node->side["field"], "v");
    EXPECT_EQ(node->side["witness"], "{num}");
    EXPECT_TRUE(check_proof(a.prog, pr).ok());
}

TEST(Proof, RootCarriesInvariantAndAssumptions) {
    auto a = analyze(load_program(test::corpus("counter.dyn")));
    auto pr = build_typing_proof(a);
    ASSERT_EQ(pr.root.rule, "REC");
    EXPECT_TRUE(pr.root.side["safety"].get<bool>());
    EXPECT_EQ(pr.root.side["invariant"]["Counter.@total"], "{Null,num}");
    std::set<std::string> methods;
    for (auto& m : method_assumptions(a)) methods.insert(m.cls + "." + m.method);
    EXPECT_TRUE(methods.count("Counter.add"));
    EXPECT_TRUE(methods.count("Counter.total"));
}

TEST(Proof, CorpusProofsCheck) {
    for (auto name : {"counter", "evaluator", "registry", "shapes", "stack"}) {
        auto a = annotated_corpus(name);
        ASSERT_TRUE(a.obligations.empty()) << name;
        auto pr = build_typing_proof(a);
        auto report = check_proof(a.prog, pr);
        EXPECT_TRUE(report.ok()) << name << "\n" << report.str();
        EXPECT_TRUE(compare_typing(a, extract_typing(a.prog, pr)).empty()) << name;
    }
}

TEST(Proof, UnsafeProgramHasTypingOnlyProof) {
    auto a = analyze(load_program(test::corpus("evaluator.dyn")));
    ASSERT_FALSE(a.obligations.empty());
    auto pr = build_typing_proof(a);
    EXPECT_FALSE(pr.root.side["safety"].get<bool>());
    EXPECT_TRUE(check_proof(a.prog, pr).ok());
    EXPECT_FALSE(check_proof(a.prog, build_typing_proof(a, true)).ok());
}

TEST(Proof, JsonRoundTrip) {
    auto a = annotated_corpus("shapes");
    auto pr = build_typing_proof(a);
    auto text = dump_proof(pr);
    auto back = proof_from_json(a.prog, nlohmann::ordered_json::parse(text));
    EXPECT_EQ(dump_proof(back), text);
    EXPECT_TRUE(check_proof(a.prog, back).ok());
}

TEST(Proof, MutationsAreRejected) {
    std::set<std::string> applied;
    for (auto name : {"counter", "evaluator", "registry", "shapes", "stack"}) {
        auto a = annotated_corpus(name);
        auto pr = build_typing_proof(a);
        for (auto& m : mutation_catalog()) {
            auto bad = m.apply(a.prog, pr);
            if (!bad) continue;
            applied.insert(m.name);
            EXPECT_FALSE(check_proof(a.prog, *bad).ok()) << name << " " << m.name;
        }
    }
    EXPECT_EQ(mutation_catalog().size(), 10u);
    EXPECT_EQ(applied.size(), mutation_catalog().size());
}

TEST(Proof, FusionWithSkeletonPreservesTyping) {
    auto a = annotated_corpus("registry");
    auto pr = build_typing_proof(a);
    auto fused = fuse(a.prog, skeleton(pr, "P"), pr);
    auto report = check_proof(a.prog, fused);
    EXPECT_TRUE(report.ok()) << report.str();
    EXPECT_TRUE(compare_typing(a, extract_typing(a.prog, fused)).empty());
    auto self = fuse(a.prog, pr, pr);
    EXPECT_TRUE(check_proof(a.prog, self).ok());
}

TEST(ProofProperty, RandomObligationFreeProgramsRoundTrip) {
    std::mt19937_64 rng(23);
    int checked = 0;
    for (int i = 0; i < 80; ++i) {
        auto a = analyze(load_program(random_program(rng)));
        if (!a.obligations.empty()) continue;
        auto pr = build_typing_proof(a);
        auto report = check_proof(a.prog, pr);
        ASSERT_TRUE(report.ok()) << pretty(a.prog) << "\n" << report.str();
        auto diff = compare_typing(a, extract_typing(a.prog, pr));
        ASSERT_TRUE(diff.empty()) << diff.front();
        auto back = proof_from_json(a.prog, proof_to_json(pr));
        ASSERT_TRUE(check_proof(a.prog, back).ok());
        ++checked;
    }
    EXPECT_GT(checked, 40);
}

TEST(ProofProperty, RefinedAssertionsImplyOriginal) {
    auto visible = [](const TAsrt& t) {
        return drop(t, [](const Subject& s) { return !s.empty() && s[0] == '$'; });
    };
    std::mt19937_64 rng(29);
    int compared = 0;
    for (int i = 0; i < 60; ++i) {
        auto p = load_program(random_program(rng));
        auto line = random_annotation(rng, p);
        if (!line) continue;
        auto before = analyze(p);
        auto after = refine(p, parse_annotations(p, *line));
        for (auto* n : after.prog.nodes) {
            int unit = after.prog.unit_of[n->id];
            if (n->origin < 0 || (unit != after.prog.main_unit() && after.prog.classes[after.prog.units[unit].cls].prelude))
                continue;
            for (bool post : {false, true}) {
                auto refined = visible(xi_assert(after, n->id, post));
                auto original = visible(xi_assert(before, n->origin, post));
                ASSERT_TRUE(implies(refined, original))
                    << *line << " at #" << n->id << (post ? " post" : " pre") << "\n"
                    << refined.str() << "\n" << original.str();
            }
        }
        ++compared;
    }
    EXPECT_GT(compared, 30);
}

}  // namespace
}  // namespace dyn
