#pragma once

// Random generators for well-formed AFL fold functions and formulas. Guards
// are mutually exclusive by construction and updates are monotone inside
// every strongly connected component of the control flow graph.

#include <random>
#include <string>
#include <vector>

#include "afl/ast.h"
#include "afl/evaluator.h"

namespace afl::gen {

struct GenConfig
{
  int max_arrays = 2;
  int max_folds_per_array = 2;
  int max_counters = 2;
  int max_branches = 3;
  Integer const_min = -2, const_max = 2;
  /// Free integer variables that guards and side constraints may mention.
  std::vector<std::string> int_vars = {"x", "y"};
  bool allow_states = true;
  bool allow_break = true;
  bool allow_writes = true;
  bool allow_reads = true;
  bool allow_nested = false;
};

class Generator
{
public:
  explicit Generator(std::uint64_t seed, GenConfig cfg = {})
      : rng_(seed), cfg_(std::move(cfg))
  {
  }

  std::mt19937_64 &rng() { return rng_; }
  const GenConfig &config() const { return cfg_; }

  int uniform(int lo, int hi)
  {
    return std::uniform_int_distribution<int>(lo, hi)(rng_);
  }
  bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }
  Integer constant() { return uniform(int(cfg_.const_min), int(cfg_.const_max)); }

  std::vector<Integer> array(int max_len)
  {
    std::vector<Integer> a(static_cast<std::size_t>(uniform(0, max_len)));
    for (auto &c : a) {
      c = constant();
    }
    return a;
  }

  /// A term over constants and the configured free integer variables.
  IntTermPtr simple_term()
  {
    if (cfg_.int_vars.empty() || chance(0.5)) {
      return mk::num(constant());
    }
    auto v = mk::var(pick(cfg_.int_vars));
    if (chance(0.25)) {
      return mk::add(v, mk::num(constant()));
    }
    return v;
  }

  FoldFunction function(int arity)
  {
    FoldFunction fn;
    fn.arity = arity;
    const int counters = arity - 1;
    const bool two_states = cfg_.allow_states && chance(0.4);

    // Per state: the sign each counter may move in (+1 or -1). With a cycle
    // between the two states both share one sign.
    bool cycle = two_states && chance(0.4);
    std::vector<std::vector<int>> sign(2, std::vector<int>(counters));
    for (int k = 0; k < counters; ++k) {
      sign[0][k] = chance(0.5) ? 1 : -1;
      sign[1][k] = cycle ? sign[0][k] : (chance(0.5) ? 1 : -1);
    }

    const int states = two_states ? 2 : 1;
    for (int st = 0; st < states; ++st) {
      int budget = two_states ? uniform(1, std::max(1, cfg_.max_branches - 1))
                              : uniform(1, cfg_.max_branches);
      if (two_states && st == 1) {
        budget = std::max(1, std::min(budget,
                                      cfg_.max_branches
                                          - static_cast<int>(fn.branches.size())));
      }
      auto parts = partition(budget, counters);
      for (auto &guard : parts) {
        Branch br;
        if (two_states) {
          br.guard.push_back(mk::guard(ImplicitVar::state(), Cmp::Eq,
                                       mk::num(st)));
        }
        for (auto &g : guard) {
          br.guard.push_back(std::move(g));
        }
        if (cfg_.allow_break && chance(0.12)) {
          br.updates.push_back(mk::brk());
        } else {
          for (int k = 1; k <= counters; ++k) {
            if (chance(0.6)) {
              Integer mag = uniform(1, 2);
              br.updates.push_back(mk::inc(k, sign[st][k - 1] * mag));
            }
          }
          if (two_states && chance(0.5)) {
            int target = st == 0 ? 1 : (cycle ? 0 : 1);
            br.updates.push_back(mk::set_state(target));
          }
          if (br.updates.empty()) {
            br.updates.push_back(mk::skip());
          }
        }
        fn.branches.push_back(std::move(br));
      }
    }
    return fn;
  }

  /// A random well-formed formula over arrays a (and possibly b).
  Formula formula()
  {
    Formula f;
    const int arrays = uniform(1, cfg_.max_arrays);
    std::vector<std::string> anames = {"a", "b"};
    anames.resize(static_cast<std::size_t>(arrays));
    for (const auto &a : anames) {
      f.decls[a] = Sort::Array;
    }
    for (const auto &x : cfg_.int_vars) {
      f.decls[x] = Sort::Int;
    }

    std::vector<BoolTermPtr> conj;
    if (arrays == 2 && cfg_.allow_writes && chance(0.35)) {
      if (chance(0.6)) {
        conj.push_back(mk::array_eq(
            mk::avar("b"), mk::write("a", simple_term(), simple_term())));
      } else {
        conj.push_back(mk::array_eq(mk::avar("b"), mk::avar("a")));
      }
    }

    int out_counter = 0;
    for (const auto &a : anames) {
      int folds = uniform(arrays == 1 ? 1 : 0, cfg_.max_folds_per_array);
      for (int n = 0; n < folds; ++n) {
        int arity = 1 + uniform(0, cfg_.max_counters);
        std::vector<IntTermPtr> init;
        init.push_back(chance(0.7) ? mk::num(chance(0.8) ? 0 : constant())
                                   : simple_term());
        for (int k = 1; k < arity; ++k) {
          init.push_back(chance(0.7) ? mk::num(0) : simple_term());
        }
        VectorTermPtr init_v = mk::tuple(init);
        auto fold = mk::fold(a, init_v, function(arity));
        if (cfg_.allow_nested && chance(0.3)) {
          fold = mk::fold(a, fold, function(arity));
        }
        std::vector<IntTermPtr> outs;
        for (int k = 0; k < arity; ++k) {
          if (k == 0 && chance(0.4)) {
            outs.push_back(mk::len(a));
          } else if (chance(0.15)) {
            outs.push_back(mk::num(constant()));
          } else {
            std::string name = "o" + std::to_string(out_counter++);
            f.decls[name] = Sort::Int;
            outs.push_back(mk::var(name));
            outputs_.push_back(name);
          }
        }
        auto eq = mk::vec_eq(mk::tuple(outs), fold);
        conj.push_back(chance(0.1) ? mk::lnot(eq) : eq);
      }
    }

    int extra = uniform(0, 2);
    for (int n = 0; n < extra; ++n) {
      conj.push_back(side_constraint(anames));
    }
    std::shuffle(conj.begin(), conj.end(), rng_);
    for (auto &c : conj) {
      f.assertions.push_back(c);
    }
    outputs_.clear();
    return f;
  }

private:
  template <typename T>
  const T &pick(const std::vector<T> &v)
  {
    return v[static_cast<std::size_t>(uniform(0, int(v.size()) - 1))];
  }

  IntTermPtr any_int()
  {
    if (!outputs_.empty() && chance(0.5)) {
      return mk::var(pick(outputs_));
    }
    return simple_term();
  }

  BoolTermPtr atom(const std::vector<std::string> &arrays)
  {
    int kind = uniform(0, 5);
    if (kind == 0 && cfg_.allow_reads) {
      return mk::eq(mk::read(pick(arrays), simple_term()), any_int());
    }
    if (kind == 1) {
      return mk::cmp(chance(0.5) ? Cmp::Le : Cmp::Ge, mk::len(pick(arrays)),
                     mk::num(uniform(0, 3)));
    }
    Cmp ops[] = {Cmp::Lt, Cmp::Eq, Cmp::Ne, Cmp::Le, Cmp::Gt, Cmp::Ge};
    return mk::cmp(ops[uniform(0, 5)], any_int(), any_int());
  }

  BoolTermPtr side_constraint(const std::vector<std::string> &arrays)
  {
    auto a = atom(arrays);
    switch (uniform(0, 4)) {
      case 0: return mk::lor(a, atom(arrays));
      case 1: return mk::lnot(a);
      case 2: return mk::implies(a, atom(arrays));
      default: return a;
    }
  }

  GuardAtom extra_atom(int counters)
  {
    int kind = uniform(0, counters > 0 ? 2 : 1);
    Cmp ops[] = {Cmp::Lt, Cmp::Gt, Cmp::Eq, Cmp::Ne, Cmp::Le, Cmp::Ge};
    Cmp op = ops[uniform(0, 5)];
    if (kind == 0) {
      return mk::guard(ImplicitVar::index(), op, simple_term());
    }
    if (kind == 1) {
      return mk::guard(ImplicitVar::elem(), Cmp::Ne, simple_term());
    }
    return mk::guard(ImplicitVar::ctr(uniform(1, counters)), op,
                     simple_term());
  }

  // Splits the guard space into `n` pairwise disjoint conjunctions by
  // comparing one implicit variable against a pivot, then strengthens some
  // of them with extra atoms.
  std::vector<std::vector<GuardAtom>> partition(int n, int counters)
  {
    std::vector<std::vector<GuardAtom>> out;
    ImplicitVar lhs = ImplicitVar::elem();
    int which = uniform(0, 9);
    if (which == 8) {
      lhs = ImplicitVar::index();
    } else if (which == 9 && counters > 0) {
      lhs = ImplicitVar::ctr(uniform(1, counters));
    }
    IntTermPtr pivot = simple_term();
    std::vector<std::vector<Cmp>> pieces;
    if (n == 1) {
      switch (uniform(0, 4)) {
        case 0: pieces = {{}}; break;
        case 1: pieces = {{Cmp::Le}}; break;
        case 2: pieces = {{Cmp::Ne}}; break;
        case 3: pieces = {{Cmp::Gt}}; break;
        default: pieces = {{Cmp::Ge}}; break;
      }
    } else if (n == 2) {
      switch (uniform(0, 2)) {
        case 0: pieces = {{Cmp::Lt}, {Cmp::Ge}}; break;
        case 1: pieces = {{Cmp::Eq}, {Cmp::Ne}}; break;
        default: pieces = {{Cmp::Le}, {Cmp::Gt}}; break;
      }
    } else {
      pieces = {{Cmp::Lt}, {Cmp::Eq}, {Cmp::Gt}};
    }
    std::shuffle(pieces.begin(), pieces.end(), rng_);
    for (const auto &p : pieces) {
      std::vector<GuardAtom> g;
      for (Cmp c : p) {
        g.push_back(mk::guard(lhs, c, pivot));
      }
      if (chance(0.25)) {
        g.push_back(extra_atom(counters));
      }
      out.push_back(std::move(g));
    }
    return out;
  }

  std::mt19937_64 rng_;
  GenConfig cfg_;
  std::vector<std::string> outputs_;
};

}  // namespace afl::gen
