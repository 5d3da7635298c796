#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "dyn/cli.hpp"
#include "dyn/interp.hpp"
#include "dyn/lang.hpp"
#include "support.hpp"

namespace dyn {
namespace {

struct Captured {
    int code;
    std::string out;
};

Captured invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "dyntool");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    testing::internal::CaptureStdout();
    testing::internal::CaptureStderr();
    int code = cli_main(static_cast<int>(argv.size()), argv.data());
    auto out = testing::internal::GetCapturedStdout();
    testing::internal::GetCapturedStderr();
    return {code, out};
}

std::string corpus_path(const std::string& name) { return std::string(DYN_CORPUS_DIR) + "/" + name; }

TEST(Cli, DigestIsFnv1a) {
    EXPECT_EQ(digest(""), "cbf29ce484222325");
    EXPECT_EQ(digest("a"), "af63dc4c8601ec8c");
    EXPECT_EQ(digest("foobar"), "85944171f73967e8");
}

TEST(Cli, RenderValue) {
    auto p = load_program("x := new cons(1, new cons(true, new cons(null, new nil()))); x");
    auto r = run(p);
    ASSERT_EQ(r.outcome.kind, Outcome::Kind::Proper);
    EXPECT_EQ(render_value(r.outcome.result), "[1, true, null]");
    EXPECT_EQ(render_value(nullptr), "null");
    auto q = load_program("class A < object { } new A()");
    auto s = run(q);
    EXPECT_EQ(render_value(s.outcome.result), value_summary(s.outcome.result));
}

TEST(Cli, ReportIsDeterministic) {
    auto src = test::corpus("registry.dyn");
    auto ann = test::corpus("registry.ann");
    auto r1 = program_report("registry.dyn", src, ann);
    auto r2 = program_report("registry.dyn", src, ann);
    EXPECT_EQ(r1.dump(), r2.dump());
    EXPECT_EQ(r1["digest"], digest(src + "\n" + ann));
    EXPECT_EQ(r1["obligations_before"], 2);
    EXPECT_TRUE(r1["obligations"].empty());
    EXPECT_EQ(r1["monotone"], true);
    EXPECT_EQ(r1["proof"]["status"], "valid");
    EXPECT_FALSE(render_report(r1).empty());
}

TEST(Cli, RunPrintsDecodedResult) {
    auto c = invoke({"run", corpus_path("counter.dyn")});
    EXPECT_EQ(c.code, 0);
    EXPECT_EQ(c.out, "10\n");
}

TEST(Cli, CheckExitCodes) {
    EXPECT_EQ(invoke({"check", corpus_path("evaluator.dyn")}).code, 1);
    EXPECT_EQ(invoke({"check", corpus_path("evaluator.dyn"), "--annotations", corpus_path("evaluator.ann")}).code, 0);
    EXPECT_EQ(invoke({"check", "/nonexistent/file.dyn"}).code, 2);
    EXPECT_EQ(invoke({"frobnicate"}).code, 2);
}

TEST(Cli, InferAndProofDumpsAreStable) {
    for (auto& name : test::corpus_programs()) {
        auto path = corpus_path(name);
        auto a = invoke({"infer", path});
        auto b = invoke({"infer", path});
        EXPECT_EQ(a.out, b.out) << name;
        auto p = invoke({"emit-proof", path});
        auto q = invoke({"emit-proof", path});
        EXPECT_EQ(p.out, q.out) << name;
        EXPECT_FALSE(p.out.empty()) << name;
    }
}

}  // namespace
}  // namespace dyn
