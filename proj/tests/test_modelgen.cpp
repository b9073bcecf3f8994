#include <gtest/gtest.h>

#include "afl/modelgen.h"
#include "afl/normalize.h"
#include "afl/parser.h"
#include "afl/solver.h"
#include "support/corpus.h"

using namespace afl;
using afl::testing::load;
using afl::testing::read_file;
using afl::testing::corpus_path;

namespace {

Formula with_n(Integer n)
{
  std::string text = read_file(corpus_path("toy/pumping_n3.afl"));
  const std::string from = "(assert (= n 3))";
  text.replace(text.find(from), from.size(), "(assert (= n " + std::to_string(n) + "))");
  return parse(text);
}

std::vector<Integer> solve_array(const Formula &f, const std::string &name = "a")
{
  SolveOutcome out = solve(f);
  EXPECT_EQ(out.status, SolveOutcome::Status::Sat) << out.reason;
  if (!out.model) {
    return {};
  }
  EXPECT_TRUE(out.validated);
  return out.model->arrays.at(name);
}

}  // namespace

TEST(EulerianPathTest, SelfLoop)
{
  Nfa nfa;
  nfa.accepting = {0};
  nfa.edges = {{0, 0, 0}};
  EXPECT_EQ(eulerian_path(nfa, {3}, 0), (std::vector<std::size_t>{0, 0, 0}));
  EXPECT_TRUE(eulerian_path(nfa, {0}, 0).empty());
}

TEST(EulerianPathTest, Alternation)
{
  Nfa nfa;
  nfa.states = 2;
  nfa.accepting = {0};
  nfa.edges = {{0, 1, 0}, {1, 0, 1}};
  EXPECT_EQ(eulerian_path(nfa, {2, 2}, 0), (std::vector<std::size_t>{0, 1, 0, 1}));
}

TEST(EulerianPathTest, BranchingCyclesAreAllUsed)
{
  // Two loops through state 0 and an exit edge to 1.
  Nfa nfa;
  nfa.states = 3;
  nfa.accepting = {1};
  nfa.edges = {{0, 0, 0}, {0, 2, 1}, {2, 0, 2}, {0, 1, 3}};
  auto path = eulerian_path(nfa, {2, 1, 1, 1}, 1);
  ASSERT_EQ(path.size(), 5u);
  EXPECT_EQ(path.back(), 3u);
  std::vector<int> used(4, 0);
  for (auto e : path) {
    ++used[e];
  }
  EXPECT_EQ(used, (std::vector<int>{2, 1, 1, 1}));
}

TEST(EulerianPathTest, RejectsBrokenCounts)
{
  Nfa nfa;
  nfa.states = 4;
  nfa.accepting = {1};
  nfa.edges = {{0, 1, 0}, {2, 3, 1}, {3, 2, 1}};
  EXPECT_THROW(eulerian_path(nfa, {1, 1, 1}, 1), NoEulerianPath);  // detached cycle
  EXPECT_THROW(eulerian_path(nfa, {1, 0, 0}, 0), NoEulerianPath);  // wrong sink
  EXPECT_THROW(eulerian_path(nfa, {2, 0, 0}, 1), NoEulerianPath);  // unbalanced
}

TEST(SynthesisTest, PumpingIsForced)
{
  EXPECT_EQ(solve_array(with_n(2)), (std::vector<Integer>{0, 0, 1, 1}));
  EXPECT_EQ(solve_array(with_n(0)), (std::vector<Integer>{}));
}

TEST(SynthesisTest, BoundednessWithEqualBounds)
{
  Formula f = load("expressiveness/ex1_boundedness.afl");
  Formula g = parse(print(f) + "(assert (= l 5)) (assert (= u 5)) (assert (= (len a) 2))");
  EXPECT_EQ(solve_array(g), (std::vector<Integer>{5, 5}));
}

TEST(SynthesisTest, FoldFreeReads)
{
  Formula f = parse("(declare-array a) (assert (= (select a 0) 7))");
  auto a = solve_array(f);
  ASSERT_GE(a.size(), 1u);
  EXPECT_EQ(a[0], 7);
}

TEST(SynthesisTest, WritesAreReflected)
{
  Formula f = parse(R"(
    (declare-array a) (declare-array b) (declare-int x)
    (assert (= b (store a 1 x)))
    (assert (= (select a 1) 3))
    (assert (= (select b 0) (+ (select b 1) 1)))
    (assert (> x 4))
  )");
  SolveOutcome out = solve(f);
  ASSERT_EQ(out.status, SolveOutcome::Status::Sat) << out.reason;
  const auto &a = out.model->arrays.at("a");
  const auto &b = out.model->arrays.at("b");
  ASSERT_EQ(a.size(), b.size());
  ASSERT_GE(a.size(), 2u);
  EXPECT_EQ(a[1], 3);
  EXPECT_EQ(b[1], out.model->ints.at("x"));
  EXPECT_EQ(b[0], b[1] + 1);
}

TEST(ValidationTest, CorruptedModelIsRejected)
{
  Formula f = with_n(2);
  SolveOutcome out = solve(f);
  ASSERT_TRUE(out.model);
  EXPECT_TRUE(validate_model(f, *out.model));
  Interpretation bad = *out.model;
  bad.arrays["a"][1] = 1;
  std::string why;
  EXPECT_FALSE(validate_model(f, bad, &why));
  EXPECT_FALSE(why.empty());
}

TEST(ModelTextTest, RoundTrip)
{
  Interpretation sigma;
  sigma.arrays["a"] = {0, -3, 12};
  sigma.arrays["empty"] = {};
  sigma.ints["x"] = -7;
  sigma.ints["%w0"] = 2;
  const std::string text = print_model(sigma);
  EXPECT_EQ(parse_model_text(text), sigma);
  EXPECT_EQ(parse_model_text("sat\n" + text), sigma);
  EXPECT_EQ(parse_model_text("(model (a (seq 1 2)) (x 3))").arrays.at("a"),
            (std::vector<Integer>{1, 2}));
}

TEST(ModelTextTest, RejectsMalformedDocuments)
{
  EXPECT_THROW(parse_model_text("(modle (x 1))"), ModelParseError);
  EXPECT_THROW(parse_model_text("(model (x))"), ModelParseError);
  EXPECT_THROW(parse_model_text("(model (x 1) (x 2))"), ModelParseError);
  EXPECT_THROW(parse_model_text("(model (a (list 1)))"), ModelParseError);
  EXPECT_THROW(parse_model_text("(model (a (seq 1 q)))"), ModelParseError);
}
