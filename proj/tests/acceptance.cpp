// End-to-end acceptance run: one PASS/FAIL line per criterion, exit status 0
// iff every criterion passes.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "afl/evaluator.h"
#include "afl/parser.h"
#include "afl/random_afl.h"
#include "afl/solver.h"
#include "support/corpus.h"
#include "support/parikh_oracle.h"
#include "support/scm_harness.h"

using namespace afl;
using afl::testing::load;

namespace {

constexpr double kExpressivenessLimitSeconds = 30.0;
constexpr double kHistogram8LimitSeconds = 120.0;
constexpr int kRandomFormulas = 500;
constexpr int kRandomAutomata = 100;
constexpr int kTraceTriples = 1000;

using Clock = std::chrono::steady_clock;

struct Verdict
{
  bool pass = true;
  std::ostringstream notes;

  void fail(const std::string &why)
  {
    pass = false;
    notes << "\n    " << why;
  }
};

// Every sat answer of the whole run, re-validated independently.
int sat_answers = 0;
int invalid_sat_answers = 0;

struct Timed
{
  SolveOutcome outcome;
  double seconds = 0;
  std::string error;
};

Timed run_solver(const Formula &f, const SolveOptions &options = {})
{
  Timed t;
  auto t0 = Clock::now();
  try {
    t.outcome = solve(f, options);
  } catch (const std::exception &e) {
    t.error = e.what();
  }
  t.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  if (t.outcome.status == SolveOutcome::Status::Sat) {
    ++sat_answers;
    if (!t.outcome.model || !validate_model(f, *t.outcome.model)) {
      ++invalid_sat_answers;
    }
  }
  return t;
}

std::string describe(const Timed &t)
{
  if (!t.error.empty()) {
    return "error: " + t.error;
  }
  std::string s = to_string(t.outcome.status);
  if (!t.outcome.reason.empty()) {
    s += " (" + t.outcome.reason + ")";
  }
  return s;
}

bool expect_status(Verdict &v, const std::string &file, SolveOutcome::Status want,
                   double limit = 0)
{
  Timed t = run_solver(load(file));
  bool ok = t.error.empty() && t.outcome.status == want;
  if (!ok) {
    v.fail(file + ": expected " + to_string(want) + ", got " + describe(t));
  }
  if (want == SolveOutcome::Status::Sat && ok && !t.outcome.validated) {
    v.fail(file + ": model was not validated");
    ok = false;
  }
  if (limit > 0 && t.seconds >= limit) {
    v.fail(file + ": took " + std::to_string(t.seconds) + " s, limit "
           + std::to_string(limit) + " s");
    ok = false;
  }
  v.notes << "\n    " << file << ": " << describe(t) << " in " << t.seconds << " s";
  return ok;
}

Verdict criterion1()
{
  Verdict v;
  for (const char *name : {"ex1_boundedness", "ex2_partitioning", "ex3_periodicity",
                           "ex4_pumping", "ex5_equal_count", "ex6_histogram",
                           "ex7_format_fields"}) {
    expect_status(v, std::string("expressiveness/") + name + ".afl",
                  SolveOutcome::Status::Sat, kExpressivenessLimitSeconds);
  }
  return v;
}

Verdict criterion2()
{
  Verdict v;
  expect_status(v, "toy/fig1c.afl", SolveOutcome::Status::Sat);
  expect_status(v, "toy/fig1c_rejected.afl", SolveOutcome::Status::Unsat);
  return v;
}

Verdict criterion3()
{
  Verdict v;
  const std::vector<Integer> forced{0, 0, 0, 1, 1, 1};
  const Formula f = load("toy/pumping_n3.afl");
  Timed t = run_solver(f);
  if (!t.outcome.model) {
    v.fail("no model: " + describe(t));
    return v;
  }
  const auto &a = t.outcome.model->arrays.at("a");
  if (a != forced) {
    v.fail("solver array differs from [0,0,0,1,1,1]");
  }
  // Brute force: the forced array is a model, and no other array of length
  // <= 6 with cells in [-1,2] is.
  BruteForceBounds bounds;
  bounds.max_len = 6;
  bounds.value_min = -1;
  bounds.value_max = 2;
  bounds.int_min = 0;
  bounds.int_max = 3;
  BruteForceResult any = brute_force_sat(f, bounds);
  if (any.status != BruteForceResult::Status::Sat || any.model.arrays.at("a") != forced) {
    v.fail("brute force did not find the forced array");
  }
  std::string other = print(f) + "(assert (not (and (= (len a) 6)";
  for (std::size_t k = 0; k < forced.size(); ++k) {
    other += " (= (select a " + std::to_string(k) + ") " + std::to_string(forced[k]) + ")";
  }
  other += ")))";
  if (brute_force_sat(parse(other), bounds).status != BruteForceResult::Status::UnsatWithinBounds) {
    v.fail("brute force found a second model");
  }
  v.notes << "\n    a = [";
  for (std::size_t k = 0; k < a.size(); ++k) {
    v.notes << (k ? "," : "") << a[k];
  }
  v.notes << "]";
  return v;
}

Verdict criterion4()
{
  Verdict v;
  for (int n = 4; n <= 8; ++n) {
    expect_status(v, "table3/histogram" + std::to_string(n) + ".afl", SolveOutcome::Status::Sat,
                  n == 8 ? kHistogram8LimitSeconds : 0);
  }
  expect_status(v, "table3/histogram_unsat5.afl", SolveOutcome::Status::Unsat);
  expect_status(v, "table3/markdown1.afl", SolveOutcome::Status::Sat);
  return v;
}

Verdict criterion5()
{
  Verdict v;
  BruteForceBounds bounds;  // length <= 4, values in [-2,2]
  for (const char *name : {"min_in_array", "linear_search", "sentinel", "find", "vararg", "call3"}) {
    const std::string file = std::string("svcomp/") + name + ".afl";
    expect_status(v, file, SolveOutcome::Status::Unsat);
    try {
      if (brute_force_sat(load(file), bounds).status != BruteForceResult::Status::UnsatWithinBounds) {
        v.fail(file + ": brute force found a model");
      }
    } catch (const BudgetExceeded &e) {
      v.fail(file + ": " + e.what());
    }
  }
  return v;
}

Verdict criterion6()
{
  Verdict v;
  gen::Generator gen(20260101);
  int disagreements = 0, sat = 0, unsat = 0, unknown = 0, inconclusive = 0;
  for (int k = 0; k < kRandomFormulas; ++k) {
    const Formula f = gen.formula();
    Timed t = run_solver(f);
    if (!t.error.empty()) {
      ++disagreements;
      v.fail("formula " + std::to_string(k) + ": " + t.error + "\n" + print(f));
      continue;
    }
    if (t.outcome.status == SolveOutcome::Status::Sat) {
      ++sat;
      continue;
    }
    (t.outcome.status == SolveOutcome::Status::Unsat ? unsat : unknown)++;
    try {
      if (brute_force_sat(f).status == BruteForceResult::Status::Sat) {
        ++disagreements;
        v.fail("formula " + std::to_string(k) + ": solver " + describe(t)
               + ", brute force found a model\n" + print(f));
      }
    } catch (const BudgetExceeded &) {
      ++inconclusive;
    }
  }
  if (unknown > 0 || inconclusive > 0) {
    v.fail(std::to_string(unknown) + " unknown answers, " + std::to_string(inconclusive)
           + " brute-force runs over budget");
  }
  v.notes << "\n    " << kRandomFormulas << " formulas: " << sat << " sat, " << unsat
          << " unsat, " << disagreements << " disagreements";
  return v;
}

Verdict criterion7()
{
  Verdict v;
  std::mt19937_64 rng(77);
  std::size_t images = 0;
  for (int k = 0; k < kRandomAutomata; ++k) {
    const Nfa nfa = afl::testing::random_nfa(rng, 5, 3);
    auto r = afl::testing::compare_parikh(nfa, 3, 6, {});
    images += r.images;
    if (!r.equal) {
      v.fail("automaton " + std::to_string(k) + ": " + r.detail);
    }
  }
  v.notes << "\n    " << kRandomAutomata << " automata, " << images << " distinct images";
  return v;
}

Verdict criterion8()
{
  Verdict v;
  gen::Generator gen(88);
  int disagreements = 0;
  for (int n = 0; n < kTraceTriples; ++n) {
    FoldFunction fn = gen.function(gen.uniform(1, 3));
    auto a = gen.array(5);
    Interpretation sigma;
    sigma.ints = {{"x", gen.constant()}, {"y", gen.constant()}};
    std::vector<Integer> init;
    init.push_back(gen.chance(0.7) ? 0 : gen.uniform(-1, 6));
    for (int k = 1; k < fn.arity; ++k) {
      init.push_back(gen.constant());
    }
    try {
      if (afl::testing::run_aligned(fn, a, init, sigma).output()
          != eval_fold(a, init, fn, sigma)) {
        ++disagreements;
      }
    } catch (const std::exception &e) {
      ++disagreements;
      v.fail(std::string("triple ") + std::to_string(n) + ": " + e.what());
    }
  }
  if (disagreements) {
    v.fail(std::to_string(disagreements) + " disagreements");
  }
  v.notes << "\n    " << kTraceTriples << " triples, " << disagreements << " disagreements";
  return v;
}

Verdict criterion9()
{
  Verdict v;
  if (invalid_sat_answers) {
    v.fail(std::to_string(invalid_sat_answers) + " sat answers failed validation");
  }
  v.notes << "\n    " << sat_answers << " sat answers re-validated";
  return v;
}

}  // namespace

int main()
{
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"expressiveness examples are sat with valid models", criterion1},
      {"fig1c sat, rejected array unsat", criterion2},
      {"pumping n=3 forces [0,0,0,1,1,1]", criterion3},
      {"histogram and markdown statuses", criterion4},
      {"verification conditions unsat, confirmed by brute force", criterion5},
      {"random formulas agree with brute force", criterion6},
      {"Parikh encoding equals brute-force images", criterion7},
      {"fold evaluation equals machine simulation", criterion8},
      {"no sat answer fails validation", criterion9},
  };
  bool all = true;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    auto t0 = Clock::now();
    Verdict v = criteria[k].second();
    const double s = std::chrono::duration<double>(Clock::now() - t0).count();
    all = all && v.pass;
    std::printf("%s criterion %zu: %s (%.1f s)%s\n", v.pass ? "PASS" : "FAIL", k + 1,
                criteria[k].first.c_str(), s, v.notes.str().c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
