#include <gtest/gtest.h>

#include <cmath>

#include "afl/encoder.h"
#include "afl/evaluator.h"
#include "afl/normalize.h"
#include "afl/parser.h"
#include "support/corpus.h"
#include "support/parikh_oracle.h"

using namespace afl;
using afl::testing::load;

namespace {

Formula normalized(const std::string &text) { return normalize(parse(text)); }

std::vector<BoolTermPtr> conjuncts(const Formula &f)
{
  std::vector<BoolTermPtr> out;
  for (const auto &a : f.assertions) {
    flatten_and(a, out);
  }
  return out;
}

const FoldFunction &first_fold(const Formula &f)
{
  for (const auto &a : conjuncts(f)) {
    if (const auto *eq = std::get_if<BoolTerm::VecEq>(&a->node)) {
      for (const auto *side : {&eq->lhs, &eq->rhs}) {
        if (const auto *fold = std::get_if<VectorTerm::Fold>(&(*side)->node)) {
          return fold->fn;
        }
      }
    }
  }
  throw std::runtime_error("no fold");
}

FoldFunction guarded(std::vector<std::vector<GuardAtom>> guards)
{
  FoldFunction fn;
  for (auto &g : guards) {
    fn.branches.push_back({std::move(g), {mk::skip()}, {}});
  }
  return fn;
}

GuardAtom e_cmp(Cmp c, IntTermPtr rhs) { return mk::guard(ImplicitVar::elem(), c, rhs); }

}  // namespace

TEST(RegionTest, CountsFollowBoundaries)
{
  HoistSink sink;
  Scm plain = translate_fold(guarded({{e_cmp(Cmp::Gt, mk::num(0))}}), sink);
  RegionSystem r0 = build_regions(plain);
  ASSERT_EQ(r0.subjects.size(), 1u);
  EXPECT_EQ(r0.region_count(0), 1u);
  EXPECT_EQ(r0.regions(0), (std::vector<std::string>{"(-inf, +inf)"}));

  FoldFunction two = guarded(
      {{mk::guard(ImplicitVar::index(), Cmp::Lt, mk::var("x")), e_cmp(Cmp::Gt, mk::num(0))},
       {mk::guard(ImplicitVar::index(), Cmp::Eq, mk::num(0)), e_cmp(Cmp::Lt, mk::num(0))}});
  RegionSystem r2 = build_regions(translate_fold(two, sink));
  EXPECT_EQ(r2.region_count(0), 5u);
  EXPECT_EQ(r2.subjects[0].boundaries.front(), LinearTerm(0));
  EXPECT_EQ(r2.regions(0).front(), "(-inf, -1]");

  FoldFunction one;
  one.arity = 2;
  one.branches.push_back(
      {{mk::guard(ImplicitVar::ctr(1), Cmp::Lt, mk::num(3))}, {mk::inc(1, 1)}, {}});
  RegionSystem r1 = build_regions(translate_fold(one, sink));
  EXPECT_EQ(r1.region_count(0), 1u);
  EXPECT_EQ(r1.region_count(1), 3u);
  EXPECT_EQ(r1.regions(1), (std::vector<std::string>{"(-inf, 2]", "[3, 3]", "[4, +inf)"}));
}

TEST(RegionTest, LayerBounds)
{
  EXPECT_EQ(estimated_mode_bound(1, 2, 3), 6u);
  EXPECT_EQ(estimated_mode_bound(0, 1, 1), 1u);
  EXPECT_EQ(layer_bound(0, {}), 1u);
  // Two position boundaries, one counter with one reversal and one boundary.
  EXPECT_EQ(layer_bound(2, {{1, 1}}), 1u + 4u + 5u);
}

TEST(ParikhTest, SelfLoop)
{
  Nfa nfa;
  nfa.accepting = {0};
  nfa.edges = {{0, 0, 0}};
  for (Integer n : {0, 1, 5}) {
    LiaFormula f;
    ParikhVars pv = encode_parikh(nfa, "p.", f);
    f.add(lia::eq(LinearTerm::var(pv.counts[0]), n));
    EXPECT_EQ(solve_lia(f, {}).status, LiaResult::Status::Sat) << n;
  }
}

TEST(ParikhTest, AlternatingWordsHaveEqualCounts)
{
  Nfa nfa;
  nfa.states = 2;
  nfa.accepting = {0};
  nfa.edges = {{0, 1, 0}, {1, 0, 1}};
  auto r = afl::testing::compare_parikh(nfa, 2, 6, {});
  EXPECT_TRUE(r.equal) << r.detail;
  EXPECT_EQ(r.images, 4u);  // (01)^k for k = 0..3

  LiaFormula f;
  ParikhVars pv = encode_parikh(nfa, "p.", f);
  f.add(lia::ne(LinearTerm::var(pv.counts[0]), LinearTerm::var(pv.counts[1])));
  EXPECT_EQ(solve_lia(f, {}).status, LiaResult::Status::Unsat);
}

TEST(ParikhTest, UnreachableCycleIsExcluded)
{
  // 0 -> 1 accepting; 2 <-> 3 is a balanced cycle unreachable from 0.
  Nfa nfa;
  nfa.states = 4;
  nfa.accepting = {1};
  nfa.edges = {{0, 1, 0}, {2, 3, 1}, {3, 2, 1}};
  LiaFormula f;
  ParikhVars pv = encode_parikh(nfa, "p.", f);
  LiaFormula loop = f;
  loop.add(lia::gt(LinearTerm::var(pv.counts[1]), 0));
  EXPECT_EQ(solve_lia(loop, {}).status, LiaResult::Status::Unsat);
  auto r = afl::testing::compare_parikh(nfa, 2, 6, {});
  EXPECT_TRUE(r.equal) << r.detail;
  EXPECT_EQ(r.images, 1u);
}

TEST(ParikhTest, RandomAutomataMatchBruteForce)
{
  std::mt19937_64 rng(21);
  for (int k = 0; k < 25; ++k) {
    Nfa nfa = afl::testing::random_nfa(rng, 4, 2);
    auto r = afl::testing::compare_parikh(nfa, 2, 5, {});
    EXPECT_TRUE(r.equal) << "automaton " << k << ": " << r.detail;
  }
}

TEST(ExclusivityTest, CorpusFoldsAreExclusive)
{
  for (const char *file : {"toy/fig1c.afl", "expressiveness/ex2_partitioning.afl",
                           "toy/pumping_n3.afl"}) {
    Formula f = normalize(load(file));
    EXPECT_TRUE(check_guard_exclusivity(first_fold(f), {}).exclusive) << file;
  }
}

TEST(ExclusivityTest, OverlapHasAWitness)
{
  FoldFunction fn = guarded({{e_cmp(Cmp::Gt, mk::num(0))}, {e_cmp(Cmp::Gt, mk::num(1))}});
  ExclusivityResult r = check_guard_exclusivity(fn, {});
  EXPECT_FALSE(r.exclusive);
  EXPECT_EQ(r.first, 0u);
  EXPECT_EQ(r.second, 1u);
  EXPECT_TRUE(r.used_solver);
  EXPECT_GE(r.witness.at("#x.e"), 2);
}

TEST(ExclusivityTest, StaticCasesSkipTheSolver)
{
  auto s = [](Integer v) { return mk::guard(ImplicitVar::state(), Cmp::Eq, mk::num(v)); };
  FoldFunction by_state;
  by_state.branches.push_back({{s(0), e_cmp(Cmp::Gt, mk::num(0))}, {mk::set_state(1)}, {}});
  by_state.branches.push_back({{s(1), e_cmp(Cmp::Gt, mk::num(0))}, {mk::set_state(0)}, {}});
  ExclusivityResult r1 = check_guard_exclusivity(by_state, {});
  EXPECT_TRUE(r1.exclusive);
  EXPECT_FALSE(r1.used_solver);

  FoldFunction symbolic = guarded({{e_cmp(Cmp::Eq, mk::var("m"))}, {e_cmp(Cmp::Gt, mk::var("m"))}});
  ExclusivityResult r2 = check_guard_exclusivity(symbolic, {});
  EXPECT_TRUE(r2.exclusive);
  EXPECT_FALSE(r2.used_solver);

  FoldFunction free_vars =
      guarded({{e_cmp(Cmp::Lt, mk::var("x"))}, {e_cmp(Cmp::Gt, mk::var("y"))}});
  ExclusivityResult r3 = check_guard_exclusivity(free_vars, {});
  EXPECT_FALSE(r3.exclusive);
  EXPECT_LT(r3.witness.at("#x.e"), r3.witness.at("x"));
  EXPECT_GT(r3.witness.at("#x.e"), r3.witness.at("y"));
}

TEST(ArraysTest, ClassesAndGroups)
{
  Formula f = normalized(R"(
    (declare-array a) (declare-array b) (declare-array c) (declare-array d)
    (declare-int x)
    (assert (= b a))
    (assert (= c (store b 0 x)))
    (assert (< (select d 0) x))
  )");
  ArrayGroups g = preprocess_arrays(f);
  EXPECT_EQ(g.class_of.at("a"), g.class_of.at("b"));
  EXPECT_NE(g.class_of.at("a"), g.class_of.at("c"));
  EXPECT_EQ(g.group_of_class[g.class_of.at("a")], g.group_of_class[g.class_of.at("c")]);
  EXPECT_NE(g.group_of_class[g.class_of.at("a")], g.group_of_class[g.class_of.at("d")]);
  ASSERT_EQ(g.links.size(), 1u);
  EXPECT_EQ(g.links[0].target, g.class_of.at("c"));
  EXPECT_EQ(g.rest.size(), 1u);
}

TEST(ArraysTest, NestedArrayEqualityIsRejected)
{
  Formula f = normalized(R"(
    (declare-array a) (declare-array b)
    (assert (not (= a b)))
  )");
  EXPECT_THROW(assemble(f), EncodeError);
}

TEST(AssembleTest, FoldFreeIntegerFormulaIsItsOwnEncoding)
{
  Formula f = normalized(R"(
    (declare-int x) (declare-int y)
    (assert (or (< (+ x y) 2) (= (* 2 x) y)))
    (assert (not (= x 1)))
  )");
  Encoding enc = assemble(f);
  EXPECT_EQ(enc.psi.vars, (std::vector<std::string>{"x", "y"}));
  EXPECT_EQ(enc.stats.folds, 0u);
  for (Integer x = -3; x <= 3; ++x) {
    for (Integer y = -3; y <= 3; ++y) {
      Interpretation sigma;
      sigma.ints = {{"x", x}, {"y", y}};
      EXPECT_EQ(eval_lia(enc.psi, {{"x", x}, {"y", y}}), eval_formula(f, sigma))
          << x << ' ' << y;
    }
  }
}

TEST(AssembleTest, EqualCountHasTwoGroups)
{
  Encoding enc = assemble(normalize(load("expressiveness/ex5_equal_count.afl")));
  ASSERT_EQ(enc.map.groups.size(), 2u);
  EXPECT_TRUE(enc.map.groups[0].lockstep);
  EXPECT_TRUE(enc.map.groups[1].lockstep);
  EXPECT_NE(enc.map.group_of_array.at("a"), enc.map.group_of_array.at("b"));
  EXPECT_EQ(enc.stats.max_folds_per_array, 1u);
}

TEST(AssembleTest, Fig1cRunsTwoFoldsInLockstep)
{
  Encoding enc = assemble(normalize(load("toy/fig1c.afl")));
  ASSERT_EQ(enc.map.groups.size(), 1u);
  EXPECT_EQ(enc.stats.folds, 2u);
  EXPECT_EQ(enc.stats.max_folds_per_array, 2u);
  EXPECT_TRUE(enc.map.groups[0].lockstep);
  EXPECT_GT(enc.stats.product_transitions, 0u);
}

TEST(AssembleTest, OutputIsDeterministic)
{
  Formula f = normalize(load("table3/markdown1.afl"));
  EXPECT_EQ(to_smtlib(assemble(f).psi), to_smtlib(assemble(f).psi));
}

TEST(AssembleTest, HistogramEncodingGrowsPolynomially)
{
  std::vector<double> sizes;
  for (int n = 4; n <= 8; ++n) {
    Encoding enc = assemble(normalize(load("table3/histogram" + std::to_string(n) + ".afl")));
    sizes.push_back(static_cast<double>(enc.stats.lia_size));
  }
  for (std::size_t k = 1; k < sizes.size(); ++k) {
    EXPECT_GT(sizes[k], sizes[k - 1]);
    // Degree at most three in the number of ranges n: s(n)/s(n-1) <= (n/(n-1))^3.
    const double n = static_cast<double>(k + 4);
    EXPECT_LE(sizes[k] / sizes[k - 1], std::pow(n / (n - 1), 3.0) + 1e-9);
  }
}

TEST(LockstepTest, ProductGuardsAreConsistent)
{
  Formula f = normalize(load("expressiveness/ex6_histogram.afl"));
  HoistSink sink;
  std::vector<LockstepFold> folds;
  for (const auto &a : conjuncts(f)) {
    const auto *eq = std::get_if<BoolTerm::VecEq>(&a->node);
    if (!eq) {
      continue;
    }
    for (const auto *side : {&eq->lhs, &eq->rhs}) {
      if (const auto *fold = std::get_if<VectorTerm::Fold>(&(*side)->node)) {
        LockstepFold lf;
        lf.id = folds.size();
        lf.machine = translate_fold(fold->fn, sink);
        folds.push_back(std::move(lf));
      }
    }
  }
  ASSERT_EQ(folds.size(), 2u);
  LockstepMachine lm = build_lockstep(folds, 1);
  EXPECT_EQ(lm.states.size(), 1u);
  for (const auto &t : lm.transitions) {
    ASSERT_EQ(t.moves.size(), 2u);
    for (const auto &cube : t.guard) {
      EXPECT_TRUE(cube_consistent(cube));
    }
  }
  ModeGraph g = build_mode_graph(lm, 3);
  EXPECT_EQ(g.nfa.states, lm.states.size() * 3);
  EXPECT_EQ(g.nfa.edges.size(), lm.transitions.size() * (3 + 2) + 2 * lm.states.size());
}
