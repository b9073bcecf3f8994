#include <gtest/gtest.h>

#include <random>

#include "afl/lia.h"

using namespace afl;

namespace {

LinearTerm x() { return LinearTerm::var("x"); }
LinearTerm y() { return LinearTerm::var("y"); }

LiaPtr random_node(std::mt19937 &rng, int depth)
{
  std::uniform_int_distribution<int> pick(0, depth > 0 ? 5 : 1);
  std::uniform_int_distribution<Integer> k(-3, 3);
  auto term = [&] {
    LinearTerm t(k(rng));
    for (const char *v : {"x", "y", "odd name"}) {
      if (rng() % 2) {
        t += LinearTerm::var(v, k(rng));
      }
    }
    return t;
  };
  switch (pick(rng)) {
    case 0: return lia::eq(term(), term());
    case 1: return rng() % 2 ? lia::lt(term(), term()) : lia::le(term(), term());
    case 2: return lia::lnot(random_node(rng, depth - 1));
    case 3: return lia::land(random_node(rng, depth - 1), random_node(rng, depth - 1));
    case 4: return lia::lor(random_node(rng, depth - 1), random_node(rng, depth - 1));
    default: return lia::iff(random_node(rng, depth - 1), random_node(rng, depth - 1));
  }
}

}  // namespace

TEST(LinearTermTest, CancelsAndScales)
{
  LinearTerm t = x() * 3 + y() - x() * 3 + 5;
  EXPECT_EQ(t.coeffs().size(), 1u);
  EXPECT_EQ(t.as_var(), nullptr);
  ASSERT_NE(t.variable_part().as_var(), nullptr);
  EXPECT_EQ(*t.variable_part().as_var(), "y");
  EXPECT_EQ(t.constant(), 5);
  EXPECT_TRUE((t * 0).is_constant());
  EXPECT_EQ((t * -2).coeffs().at("y"), -2);
  EXPECT_EQ(t.variable_part().constant(), 0);
}

TEST(LinearTermTest, OverflowIsReported)
{
  LinearTerm big(std::numeric_limits<Integer>::max());
  EXPECT_THROW(big + 1, OverflowError);
}

TEST(LiaBuilderTest, ConstantsFold)
{
  EXPECT_EQ(lia::lt(LinearTerm(1), LinearTerm(2))->kind, LiaNode::Kind::True);
  EXPECT_EQ(lia::eq(x(), x())->kind, LiaNode::Kind::True);
  EXPECT_EQ(lia::land(lia::falsity(), lia::eq(x(), y()))->kind,
            LiaNode::Kind::False);
  EXPECT_EQ(lia::lor(lia::truth(), lia::eq(x(), y()))->kind,
            LiaNode::Kind::True);
  auto nested = lia::land(lia::land(lia::lt(x(), y()), lia::lt(y(), x() + 3)),
                          lia::le(x(), LinearTerm(0)));
  EXPECT_EQ(nested->args.size(), 3u);
}

TEST(LiaEvalTest, MatchesArithmetic)
{
  LiaModel m{{"x", 2}, {"y", -1}};
  EXPECT_TRUE(eval_lia(lia::eq(x() + y(), LinearTerm(1)), m));
  EXPECT_TRUE(eval_lia(lia::ne(x(), y()), m));
  EXPECT_FALSE(eval_lia(lia::ge(y(), x()), m));
  EXPECT_TRUE(eval_lia(lia::between(LinearTerm(0), x(), LinearTerm(2)), m));
  EXPECT_THROW(eval_lia(lia::eq(LinearTerm::var("z"), LinearTerm(0)), m),
               MissingVariable);
}

TEST(SmtlibTest, QuotesUnusualSymbols)
{
  EXPECT_EQ(smt_symbol("x_1"), "x_1");
  EXPECT_EQ(smt_symbol("#n3"), "|#n3|");
  EXPECT_EQ(smt_symbol("assert"), "|assert|");
  EXPECT_EQ(smt_symbol("1abc"), "|1abc|");
}

TEST(SmtlibTest, PrintsNegativeNumerals)
{
  EXPECT_EQ(to_smtlib(LinearTerm(-4)), "(- 4)");
  EXPECT_EQ(to_smtlib(x() * -1), "(- x)");
}

TEST(SmtlibTest, RoundTripIsAFixedPoint)
{
  std::mt19937 rng(7);
  for (int n = 0; n < 300; ++n) {
    LiaFormula f;
    for (const char *v : {"x", "y", "odd name"}) {
      f.declare(v);
    }
    for (int k = 0; k < 3; ++k) {
      f.add(random_node(rng, 3));
    }
    std::string text = to_smtlib(f);
    LiaFormula g = parse_smtlib(text);
    EXPECT_TRUE(equal(f, g)) << text;
    EXPECT_EQ(to_smtlib(g), text);
    std::uniform_int_distribution<Integer> val(-4, 4);
    LiaModel m{{"x", val(rng)}, {"y", val(rng)}, {"odd name", val(rng)}};
    EXPECT_EQ(eval_lia(f, m), eval_lia(g, m));
  }
}

TEST(SmtlibTest, ParseRejectsGarbage)
{
  EXPECT_THROW(parse_smtlib("(assert (= x"), SmtParseError);
  EXPECT_THROW(parse_smtlib("(assert (foo x))"), SmtParseError);
}
