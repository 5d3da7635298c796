#include <gtest/gtest.h>

#include <random>

#include "dyn/fuzz.hpp"
#include "dyn/lang.hpp"
#include "support.hpp"

namespace dyn {
namespace {

const ClassDecl* user_class(const Program& p, const std::string& name) { return p.find_class(name); }

TEST(Parse, MinimalProgram) {
    auto p = parse_program("class A < object { method m(u) { u } } null");
    ASSERT_EQ(p.classes.size(), 1u);
    EXPECT_EQ(p.classes[0].name, "A");
    EXPECT_EQ(p.classes[0].methods[0].params, std::vector<std::string>{"u"});
    EXPECT_EQ(p.main->kind, Kind::Null);
}

TEST(Parse, NumeralStaysSugar) {
    auto p = parse_program("x := 2");
    ASSERT_EQ(p.main->kind, Kind::AssignLocal);
    EXPECT_EQ(p.main->name, "x");
    ASSERT_EQ(p.main->kid(0)->kind, Kind::NumLit);
    EXPECT_EQ(p.main->kid(0)->num, 2);
}

TEST(Parse, Errors) {
    try {
        parse_program("class A < object {");
        FAIL() << "accepted an unbalanced class body";
    } catch (LangError& e) {
        EXPECT_NE(std::string(e.what()).find("end of input"), std::string::npos) << e.what();
    }
    EXPECT_THROW(parse_program("r := 1"), LangError);
    EXPECT_THROW(parse_program("class A < object { method m() { @c } } null"), LangError);
    EXPECT_THROW(parse_program("class A < object { method m() { this := 1 } } null"), LangError);
    EXPECT_THROW(parse_program("x := := 1"), LangError);
}

TEST(Parse, ErrorPositions) {
    try {
        parse_program("x := 1;\ny := )");
        FAIL();
    } catch (LangError& e) {
        EXPECT_EQ(e.pos.line, 2);
        EXPECT_EQ(e.pos.col, 6);
    }
}

TEST(Desugar, Numerals) {
    auto p = desugar(parse_program("3"));
    EXPECT_EQ(pretty(*p.main), "new num(null).succ().succ().succ()");
    EXPECT_EQ(pretty(*desugar(parse_program("0")).main), "new num(null)");
}

TEST(Desugar, Operators) {
    EXPECT_EQ(pretty(*desugar(parse_program("a + b")).main), "a.m_add(b)");
    EXPECT_EQ(pretty(*desugar(parse_program("a = b")).main), "a.m_eq(b)");
    EXPECT_EQ(pretty(*desugar(parse_program("a & b | c")).main), "a.m_and(b).m_or(c)");
    EXPECT_EQ(pretty(*desugar(parse_program("a[b]")).main), "a.index(b)");
}

TEST(Desugar, BooleansAndElse) {
    EXPECT_EQ(pretty(*desugar(parse_program("false")).main), "new bool(null)");
    EXPECT_EQ(pretty(*desugar(parse_program("true")).main), "new bool(null).not()");
    EXPECT_EQ(pretty(*desugar(parse_program("if c then x fi")).main), "if c then x else null fi");
}

TEST(Desugar, LiteralCap) {
    EXPECT_THROW(desugar(parse_program("70000")), LangError);
    EXPECT_NO_THROW(desugar(parse_program("12"), 12));
    EXPECT_THROW(desugar(parse_program("13"), 12), LangError);
}

TEST(Expand, CopiesInheritedMethods) {
    auto p = load_program("class A < object { method m() { 1 } } class B < A { } null");
    auto* b = user_class(p, "B");
    ASSERT_NE(b, nullptr);
    ASSERT_NE(b->find("m", 0), nullptr);
    EXPECT_EQ(pretty(*b->find("m", 0)->body), pretty(*user_class(p, "A")->find("m", 0)->body));
    EXPECT_EQ(b->parent, "object");
}

TEST(Expand, RenameKeepsBody) {
    auto p = load_program("class A < object { method m() { 1 } } class B < A { rename m n } null");
    auto* b = user_class(p, "B");
    EXPECT_EQ(b->find("m", 0), nullptr);
    ASSERT_NE(b->find("n", 0), nullptr);
    EXPECT_EQ(pretty(*b->find("n", 0)->body), "new num(null).succ()");
    EXPECT_TRUE(b->renames.empty());
}

TEST(Expand, Errors) {
    EXPECT_THROW(load_program("class A < B { } class B < A { } null"), LangError);
    EXPECT_THROW(load_program("class A < object { rename m n } null"), LangError);
    EXPECT_THROW(load_program("class num < object { } null"), LangError);
    EXPECT_THROW(load_program("new Missing()"), LangError);
}

TEST(Expand, LookupIsLocal) {
    auto p = load_program(test::corpus("shapes.dyn"));
    for (auto& c : p.classes) {
        if (c.name == "object") continue;
        EXPECT_EQ(c.parent, "object") << c.name;
        EXPECT_TRUE(c.renames.empty());
    }
    auto* rect = user_class(p, "Rect");
    EXPECT_NE(rect->find("base_area", 0), nullptr);
    EXPECT_NE(rect->find("describe", 0), nullptr);
    EXPECT_NE(rect->find("init", 1), nullptr);
    EXPECT_NE(rect->find("init", 2), nullptr);
}

TEST(Expand, PreorderIds) {
    auto p = load_program("x := 1; x");
    for (int id = 0; id < p.node_count; ++id) {
        ASSERT_EQ(p.nodes[id]->id, id);
        if (p.parent[id] >= 0) EXPECT_LT(p.parent[id], id);
    }
}

void expect_same_program(const Program& a, const Program& b) {
    ASSERT_EQ(a.classes.size(), b.classes.size());
    for (size_t i = 0; i < a.classes.size(); ++i) {
        ASSERT_EQ(a.classes[i].name, b.classes[i].name);
        ASSERT_EQ(a.classes[i].methods.size(), b.classes[i].methods.size()) << a.classes[i].name;
        for (size_t m = 0; m < a.classes[i].methods.size(); ++m)
            EXPECT_TRUE(same_ast(*a.classes[i].methods[m].body, *b.classes[i].methods[m].body))
                << a.classes[i].name << "." << a.classes[i].methods[m].name;
    }
    EXPECT_TRUE(same_ast(*a.main, *b.main)) << pretty(*a.main) << "\nvs\n" << pretty(*b.main);
}

TEST(LangProperty, PrettyRoundTripOnCorpus) {
    for (auto& name : test::corpus_programs()) {
        SCOPED_TRACE(name);
        auto p = load_program(test::corpus(name));
        expect_same_program(p, load_program(pretty(p)));
    }
}

TEST(LangProperty, PrettyRoundTripOnRandomPrograms) {
    std::mt19937_64 rng(303);
    for (int i = 0; i < 200; ++i) {
        auto src = random_program(rng);
        auto p = load_program(src);
        expect_same_program(p, load_program(pretty(p)));
    }
}

TEST(LangProperty, DesugarIsIdempotent) {
    std::mt19937_64 rng(304);
    for (int i = 0; i < 200; ++i) {
        auto once = desugar(merge_prelude(parse_program(random_program(rng))));
        auto twice = desugar(once);
        expect_same_program(once, twice);
    }
}

}  // namespace
}  // namespace dyn
