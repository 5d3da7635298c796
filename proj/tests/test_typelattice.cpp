#include <gtest/gtest.h>

#include <random>

#include "dyn/typelattice.hpp"
#include "support.hpp"

namespace dyn {
namespace {

UniverseRef small() { return make_universe({"num", "bool"}); }

TEST(TypeLattice, NamesAndBits) {
    auto u = small();
    auto t = UnionType::of(u, {"bool", "Null"});
    EXPECT_TRUE(t.has_null());
    EXPECT_TRUE(t.contains("bool"));
    EXPECT_FALSE(t.contains("num"));
    EXPECT_EQ(t.str(), "{Null,bool}");
    EXPECT_EQ(parse_type(u, "{bool,Null}"), t);
    EXPECT_EQ(parse_type(u, "TOP"), UnionType::top(u));
    EXPECT_TRUE(parse_type(u, "{}").is_bottom());
    EXPECT_THROW(parse_type(u, "{str}"), std::invalid_argument);
}

TEST(TypeLattice, ComplementOfBool) {
    auto u = small();
    EXPECT_EQ(complement(UnionType::of(u, {"bool"})), UnionType::of(u, {"num", "Null"}));
}

TEST(TypeLattice, StripNull) {
    auto u = small();
    EXPECT_EQ(strip_null(UnionType::of(u, {"Null", "num"})), UnionType::of(u, {"num"}));
}

TEST(TypeLattice, MixedUniversesRejected) {
    auto a = UnionType::of(small(), {"num"});
    auto b = UnionType::of(make_universe({"num", "cons"}), {"num"});
    EXPECT_THROW(join(a, b), UniverseMismatch);
}

TEST(TypeLatticeProperty, Axioms) {
    std::mt19937_64 rng(101);
    auto u = make_universe({"num", "bool", "cons", "nil", "A"});
    for (int i = 0; i < 10000; ++i) {
        auto a = test::random_type(rng, u), b = test::random_type(rng, u), c = test::random_type(rng, u);
        ASSERT_EQ(join(a, a), a);
        ASSERT_EQ(meet(a, a), a);
        ASSERT_EQ(join(a, b), join(b, a));
        ASSERT_EQ(meet(a, b), meet(b, a));
        ASSERT_EQ(join(join(a, b), c), join(a, join(b, c)));
        ASSERT_EQ(meet(meet(a, b), c), meet(a, meet(b, c)));
        ASSERT_EQ(join(a, meet(a, b)), a);
        ASSERT_EQ(meet(a, join(a, b)), a);
        bool le = leq(a, b);
        ASSERT_EQ(le, meet(a, b) == a);
        ASSERT_EQ(le, join(a, b) == b);
        ASSERT_EQ(complement(complement(a)), a);
        ASSERT_TRUE(leq(UnionType::bottom(u), a));
        ASSERT_TRUE(leq(a, UnionType::top(u)));
        ASSERT_TRUE(meet(a, complement(a)).is_bottom());
        ASSERT_TRUE(join(a, complement(a)).is_top());
    }
}

}  // namespace
}  // namespace dyn
