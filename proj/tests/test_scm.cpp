#include <gtest/gtest.h>

#include "afl/cfg.h"
#include "afl/evaluator.h"
#include "afl/normalize.h"
#include "afl/parser.h"
#include "afl/scm.h"
#include "support/corpus.h"
#include "afl/random_afl.h"
#include "support/scm_harness.h"

using namespace afl;
using afl::testing::run_aligned;

namespace {

FoldFunction periodicity()
{
  FoldFunction fn;
  fn.branches.push_back(
      {{mk::guard(ImplicitVar::state(), Cmp::Eq, mk::num(0)),
        mk::guard(ImplicitVar::elem(), Cmp::Eq, mk::num(0))},
       {mk::set_state(1)},
       {}});
  fn.branches.push_back(
      {{mk::guard(ImplicitVar::state(), Cmp::Eq, mk::num(1)),
        mk::guard(ImplicitVar::elem(), Cmp::Eq, mk::num(1))},
       {mk::set_state(0)},
       {}});
  return fn;
}

FoldFunction pumping()
{
  FoldFunction fn;
  fn.arity = 3;
  auto s = [](Integer v) {
    return mk::guard(ImplicitVar::state(), Cmp::Eq, mk::num(v));
  };
  auto e = [](Integer v) {
    return mk::guard(ImplicitVar::elem(), Cmp::Eq, mk::num(v));
  };
  fn.branches.push_back({{s(0), e(0)}, {mk::inc(1, 1)}, {}});
  fn.branches.push_back({{s(0), e(1)}, {mk::inc(2, 1), mk::set_state(1)}, {}});
  fn.branches.push_back({{s(1), e(1)}, {mk::inc(2, 1)}, {}});
  return fn;
}

FoldFunction boundedness(Integer lo, Integer hi)
{
  FoldFunction fn;
  fn.branches.push_back({{mk::guard(ImplicitVar::elem(), Cmp::Gt, mk::num(lo - 1)),
                          mk::guard(ImplicitVar::elem(), Cmp::Lt, mk::num(hi + 1))},
                         {mk::skip()},
                         {}});
  return fn;
}

const FoldFunction &first_fold(const Formula &f)
{
  for (const auto &a : f.assertions) {
    if (const auto *v = std::get_if<BoolTerm::VecEq>(&a->node)) {
      for (const auto &side : {v->lhs, v->rhs}) {
        if (const auto *fold = std::get_if<VectorTerm::Fold>(&side->node)) {
          return fold->fn;
        }
      }
    }
  }
  throw std::runtime_error("no fold");
}

std::size_t count_stopping(const Scm &m, bool stops)
{
  std::size_t n = 0;
  for (const auto &t : m.transitions) {
    n += t.stops == stops;
  }
  return n;
}

}  // namespace

TEST(CubeTest, DetectsContradictions)
{
  auto e = [](Cmp c, LinearTerm r) {
    return ScmAtom{ScmAtom::Kind::Input, 0, c, std::move(r)};
  };
  auto x = LinearTerm::var("x");
  EXPECT_TRUE(cube_consistent({e(Cmp::Lt, 3), e(Cmp::Gt, 1)}));
  EXPECT_FALSE(cube_consistent({e(Cmp::Lt, 2), e(Cmp::Gt, 1)}));
  EXPECT_FALSE(cube_consistent({e(Cmp::Eq, x), e(Cmp::Ne, x)}));
  EXPECT_FALSE(cube_consistent({e(Cmp::Ge, 0), e(Cmp::Le, 1), e(Cmp::Ne, 0),
                                e(Cmp::Ne, 1)}));
  EXPECT_TRUE(cube_consistent({e(Cmp::Eq, x), e(Cmp::Gt, 0)}));
  ScmAtom c{ScmAtom::Kind::Counter, 0, Cmp::Gt, x + 1};
  EXPECT_FALSE(cube_consistent({c, ScmAtom{ScmAtom::Kind::Counter, 0, Cmp::Lt, x + 2}}));
}

TEST(TranslateTest, Periodicity)
{
  HoistSink sink;
  Scm m = translate_fold(periodicity(), sink);
  EXPECT_EQ(m.counters.size(), 1u);
  EXPECT_EQ(m.states.size(), 3u);
  EXPECT_EQ(count_stopping(m, false), 2u);
  EXPECT_TRUE(sink.assertions().empty());
  for (const auto &t : m.transitions) {
    EXPECT_EQ(t.stops, t.to == m.done);
  }
}

TEST(TranslateTest, IntroductionFoldHoistsTheMinimum)
{
  Formula f = normalize(afl::testing::load("toy/fig1c.afl"));
  HoistSink sink;
  Scm m = translate_fold(first_fold(f), sink);
  EXPECT_EQ(m.counters.size(), 2u);
  ASSERT_EQ(sink.assertions().size(), 1u);
  EXPECT_EQ(print(*sink.assertions()[0]), "(= %h0 min)");
  const LinearTerm h = LinearTerm::var("%h0");
  std::vector<std::pair<Cmp, std::vector<Integer>>> seen;
  for (const auto &t : m.transitions) {
    if (!t.stops) {
      ASSERT_EQ(t.guard.size(), 1u);
      EXPECT_EQ(t.guard[0].kind, ScmAtom::Kind::Input);
      EXPECT_EQ(t.guard[0].rhs, h);
      seen.push_back({t.guard[0].cmp, t.delta});
    }
  }
  ASSERT_EQ(seen.size(), 2u);
  EXPECT_EQ(seen[0], (std::pair<Cmp, std::vector<Integer>>{Cmp::Eq, {1, 1}}));
  EXPECT_EQ(seen[1], (std::pair<Cmp, std::vector<Integer>>{Cmp::Gt, {1, 0}}));
  // The catch-all covers e < min.
  EXPECT_EQ(count_stopping(m, true), 1u);
}

TEST(TranslateTest, BreakOnlyFunction)
{
  FoldFunction fn;
  fn.branches.push_back({{}, {mk::brk()}, {}});
  HoistSink sink;
  Scm m = translate_fold(fn, sink);
  ASSERT_EQ(m.transitions.size(), 1u);
  EXPECT_EQ(m.transitions[0].from, m.init);
  EXPECT_EQ(m.transitions[0].to, m.done);
  EXPECT_EQ(m.transitions[0].delta, std::vector<Integer>{0});
}

TEST(TranslateTest, RejectsNonMonotoneCycles)
{
  FoldFunction fn;
  fn.arity = 2;
  fn.branches.push_back(
      {{mk::guard(ImplicitVar::elem(), Cmp::Eq, mk::num(0))}, {mk::inc(1, 1)}, {}});
  fn.branches.push_back(
      {{mk::guard(ImplicitVar::elem(), Cmp::Ne, mk::num(0))}, {mk::inc(1, -1)}, {}});
  HoistSink sink;
  EXPECT_THROW(translate_fold(fn, sink), NonMonotoneScc);
}

TEST(TranslateTest, CatchAllIsExclusiveAndTotal)
{
  afl::gen::Generator gen(3);
  for (int n = 0; n < 200; ++n) {
    FoldFunction fn = gen.function(gen.uniform(1, 3));
    HoistSink sink;
    Scm m = translate_fold(fn, sink);
    LiaModel params;
    for (const auto &p : m.params) {
      params[p] = gen.constant();
    }
    // Every configuration of a non-done state enables exactly one transition.
    for (std::size_t q = 0; q < m.states.size(); ++q) {
      if (q == m.done) {
        continue;
      }
      for (int trial = 0; trial < 30; ++trial) {
        std::vector<Integer> counters;
        for (std::size_t c = 0; c < m.counters.size(); ++c) {
          counters.push_back(gen.uniform(-3, 3));
        }
        afl::Cells cells{{Integer(gen.uniform(-3, 3))}};
        int enabled = 0;
        for (std::size_t t : m.outgoing(q)) {
          enabled += guard_holds(m.transitions[t].guard, counters, cells, 0, params);
        }
        EXPECT_EQ(enabled, 1) << dump(m);
      }
    }
  }
}

TEST(ProductTest, IdentityMachine)
{
  Scm unit;
  unit.states = {"u"};
  unit.init = unit.done = 0;
  unit.transitions.push_back({0, 0, {}, {}, -1, false, {}});
  HoistSink sink;
  Scm m = translate_fold(pumping(), sink);
  Scm p = product(m, unit);
  EXPECT_EQ(p.counters, m.counters);
  EXPECT_EQ(p.states.size(), m.states.size());
  ASSERT_EQ(p.transitions.size(), m.transitions.size());
  for (std::size_t t = 0; t < m.transitions.size(); ++t) {
    EXPECT_EQ(p.transitions[t].from, m.transitions[t].from);
    EXPECT_EQ(p.transitions[t].to, m.transitions[t].to);
    EXPECT_EQ(p.transitions[t].guard, m.transitions[t].guard);
    EXPECT_EQ(p.transitions[t].delta, m.transitions[t].delta);
  }
}

TEST(ProductTest, PairsEveryTransition)
{
  HoistSink sink;
  Scm a = translate_fold(periodicity(), sink);
  Scm b = translate_fold(boundedness(0, 1), sink);
  Scm p = product(a, b);
  EXPECT_EQ(p.states.size(), a.states.size() * b.states.size());
  EXPECT_EQ(p.counters.size(), a.counters.size() + b.counters.size());
  // Hand count: per state pair, |out_a(q1)| * |out_b(q2)|.
  std::size_t expected = 0;
  for (std::size_t q1 = 0; q1 < a.states.size(); ++q1) {
    for (std::size_t q2 = 0; q2 < b.states.size(); ++q2) {
      expected += a.outgoing(q1).size() * b.outgoing(q2).size();
    }
  }
  EXPECT_EQ(p.transitions.size(), expected);
  // periodicity: q0 and q1 each have one branch and one catch-all cube; the
  // boundedness state has one branch and two catch-all cubes.
  EXPECT_EQ(expected, 2u * 3u + 2u * 3u);
  for (const auto &t : p.transitions) {
    ASSERT_EQ(t.parts.size(), 2u);
    EXPECT_EQ(t.delta.size(), 2u);
  }
}

TEST(ProductTest, SimulationCommutesWithPairing)
{
  afl::gen::Generator gen(11);
  for (int n = 0; n < 300; ++n) {
    HoistSink sink;
    Scm a = align(translate_fold(gen.function(gen.uniform(1, 3)), sink), "s1");
    Scm b = align(translate_fold(gen.function(gen.uniform(1, 3)), sink), "s2");
    Scm c = align(translate_fold(gen.function(gen.uniform(1, 2)), sink), "s3");
    Scm p = product(product(a, b), c);
    Scm q = product(a, product(b, c));
    auto arr = gen.array(5);
    LiaModel params;
    for (const auto &x : p.params) {
      params[x] = gen.constant();
    }
    auto init_of = [&](const Scm &m, const std::string &s) {
      std::vector<Integer> v(m.counters.size(), 0);
      v[1] = params[s];
      return v;
    };
    auto ia = init_of(a, "s1"), ib = init_of(b, "s2"), ic = init_of(c, "s3");
    auto ra = simulate(a, {arr}, params, ia);
    auto rb = simulate(b, {arr}, params, ib);
    auto rc = simulate(c, {arr}, params, ic);
    std::vector<Integer> init = ia;
    init.insert(init.end(), ib.begin(), ib.end());
    init.insert(init.end(), ic.begin(), ic.end());
    auto rp = simulate(p, {arr}, params, init);
    auto rq = simulate(q, {arr}, params, init);
    std::vector<Integer> joined = ra.counters;
    joined.insert(joined.end(), rb.counters.begin(), rb.counters.end());
    joined.insert(joined.end(), rc.counters.begin(), rc.counters.end());
    EXPECT_EQ(rp.counters, joined);
    EXPECT_EQ(rq.counters, joined);
    ASSERT_EQ(rp.run.size(), arr.size());
    for (std::size_t s = 0; s < rp.run.size(); ++s) {
      const auto &parts = p.transitions[rp.run[s]].parts;
      ASSERT_EQ(parts.size(), 3u);
      EXPECT_EQ(parts[0], ra.run[s]);
      EXPECT_EQ(parts[1], rb.run[s]);
      EXPECT_EQ(parts[2], rc.run[s]);
      EXPECT_EQ(q.transitions[rq.run[s]].parts, parts);
    }
    auto ba = reversal_bound(a), bb = reversal_bound(b);
    auto bp = reversal_bound(product(a, b));
    ba.insert(ba.end(), bb.begin(), bb.end());
    EXPECT_EQ(bp, ba);
  }
}

TEST(AlignTest, StartAtZeroMatchesTheCoreMachine)
{
  HoistSink sink;
  Scm core = translate_fold(pumping(), sink);
  Scm m = align(core, "start");
  std::vector<Integer> a{0, 0, 1, 1};
  auto plain = simulate(core, {a}, {}, {0, 0, 0});
  auto aligned = simulate(m, {a}, {{"start", 0}}, {0, 0, 0, 0});
  EXPECT_EQ(aligned.counters, (std::vector<Integer>{4, 4, 2, 2}));
  EXPECT_EQ(std::vector<Integer>(aligned.counters.begin() + 1, aligned.counters.end()),
            plain.counters);
}

TEST(AlignTest, LateStartWaitsThenRuns)
{
  FoldFunction fn;
  fn.arity = 2;
  fn.branches.push_back({{}, {mk::inc(1, 1)}, {}});
  HoistSink sink;
  Scm m = align(translate_fold(fn, sink), "start");
  auto r = simulate(m, {{9, 9, 9, 9, 9}}, {{"start", 2}}, {0, 2, 0});
  ASSERT_EQ(r.run.size(), 5u);
  const std::size_t wait = m.init;
  EXPECT_EQ(m.transitions[r.run[0]].from, wait);
  EXPECT_EQ(m.transitions[r.run[0]].to, wait);
  EXPECT_EQ(m.transitions[r.run[1]].to, wait);
  EXPECT_NE(m.transitions[r.run[2]].to, wait);
  EXPECT_EQ(r.counters, (std::vector<Integer>{5, 5, 3}));
}

TEST(AlignTest, NegativeStartBypasses)
{
  FoldFunction fn;
  fn.arity = 2;
  fn.branches.push_back({{}, {mk::inc(1, 1)}, {}});
  HoistSink sink;
  Scm m = align(translate_fold(fn, sink), "start");
  auto r = simulate(m, {{1, 2, 3}}, {{"start", -1}}, {0, -1, 7});
  EXPECT_EQ(r.state, m.done);
  EXPECT_EQ(r.counters, (std::vector<Integer>{3, -1, 7}));
  EXPECT_TRUE(m.transitions[r.run[0]].stops);
}

TEST(ReversalTest, Bounds)
{
  HoistSink sink;
  EXPECT_EQ(reversal_bound(translate_fold(pumping(), sink)),
            (std::vector<int>{0, 0, 0}));

  FoldFunction fn;
  fn.arity = 2;
  auto s = [](Integer v) {
    return mk::guard(ImplicitVar::state(), Cmp::Eq, mk::num(v));
  };
  fn.branches.push_back({{s(0), mk::guard(ImplicitVar::elem(), Cmp::Eq, mk::num(0))},
                         {mk::inc(1, 1)},
                         {}});
  fn.branches.push_back({{s(0), mk::guard(ImplicitVar::elem(), Cmp::Ne, mk::num(0))},
                         {mk::set_state(1)},
                         {}});
  fn.branches.push_back({{s(1)}, {mk::inc(1, -1)}, {}});
  EXPECT_EQ(reversal_bound(translate_fold(fn, sink)), (std::vector<int>{0, 1}));
}

TEST(ReplayTest, PumpingRun)
{
  HoistSink sink;
  Scm m = translate_fold(pumping(), sink);
  std::vector<Integer> a{0, 0, 1, 1};
  auto sim = simulate(m, {a}, {}, {0, 0, 0});
  auto final_counters = replay(m, sim.run, {a}, {}, {0, 0, 0});
  EXPECT_EQ(final_counters, (std::vector<Integer>{4, 2, 2}));
  EXPECT_EQ(final_counters, eval_fold(a, {0, 0, 0}, pumping(), {}));

  std::vector<Integer> bad{0, 0, 0, 1};
  try {
    replay(m, sim.run, {bad}, {}, {0, 0, 0});
    FAIL() << "expected a replay error";
  } catch (const ReplayError &e) {
    EXPECT_EQ(e.step(), 2u);
  }
  EXPECT_EQ(replay(m, {}, {a}, {}, {0, 5, 6}), (std::vector<Integer>{0, 5, 6}));
}

TEST(TraceEquivalenceTest, RandomFunctions)
{
  afl::gen::Generator gen(8);
  int disagreements = 0;
  for (int n = 0; n < 1500; ++n) {
    FoldFunction fn = gen.function(gen.uniform(1, 3));
    auto a = gen.array(5);
    Interpretation sigma;
    sigma.ints = {{"x", gen.constant()}, {"y", gen.constant()}};
    std::vector<Integer> init;
    init.push_back(gen.chance(0.7) ? 0 : gen.uniform(-1, 6));
    for (int k = 1; k < fn.arity; ++k) {
      init.push_back(gen.constant());
    }
    auto expected = eval_fold(a, init, fn, sigma);
    auto run = run_aligned(fn, a, init, sigma);
    if (run.output() != expected) {
      ++disagreements;
      ADD_FAILURE() << dump(run.machine);
    }
  }
  EXPECT_EQ(disagreements, 0);
}

TEST(DumpTest, ListsStatesAndTransitions)
{
  HoistSink sink;
  std::string text = dump(translate_fold(periodicity(), sink));
  EXPECT_NE(text.find("state 0 q0 init"), std::string::npos);
  EXPECT_NE(text.find("done"), std::string::npos);
  EXPECT_NE(text.find("e = 0"), std::string::npos);
}
