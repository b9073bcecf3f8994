#pragma once

// Brute-force Parikh images of small NFAs, compared with the solutions of
// encode_parikh.

#include <deque>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "afl/backend.h"
#include "afl/encoder.h"

namespace afl::testing {

using LabelVector = std::vector<int>;

inline Nfa random_nfa(std::mt19937_64 &rng, int max_states, int labels)
{
  auto uniform = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  Nfa nfa;
  nfa.states = static_cast<std::size_t>(uniform(1, max_states));
  nfa.init = static_cast<std::size_t>(uniform(0, static_cast<int>(nfa.states) - 1));
  for (std::size_t q = 0; q < nfa.states; ++q) {
    if (uniform(0, 2) == 0) {
      nfa.accepting.push_back(q);
    }
  }
  if (nfa.accepting.empty()) {
    nfa.accepting.push_back(static_cast<std::size_t>(
        uniform(0, static_cast<int>(nfa.states) - 1)));
  }
  const int edges = uniform(0, 2 * static_cast<int>(nfa.states) + 1);
  for (int e = 0; e < edges; ++e) {
    nfa.edges.push_back({static_cast<std::size_t>(uniform(0, static_cast<int>(nfa.states) - 1)),
                         static_cast<std::size_t>(uniform(0, static_cast<int>(nfa.states) - 1)),
                         uniform(0, labels - 1)});
  }
  return nfa;
}

/// Label images of accepted words of length <= max_len, each with one run
/// realizing it: (label vector -> (edge counts, final state)).
inline std::map<LabelVector, std::pair<std::vector<Integer>, std::size_t>>
brute_images(const Nfa &nfa, int labels, int max_len)
{
  std::map<LabelVector, std::pair<std::vector<Integer>, std::size_t>> out;
  std::vector<Integer> counts(nfa.edges.size(), 0);
  LabelVector image(static_cast<std::size_t>(labels), 0);
  std::set<std::size_t> accepting(nfa.accepting.begin(), nfa.accepting.end());
  auto dfs = [&](auto &self, std::size_t q, int depth) -> void {
    if (accepting.count(q)) {
      out.try_emplace(image, counts, q);
    }
    if (depth == max_len) {
      return;
    }
    for (std::size_t e = 0; e < nfa.edges.size(); ++e) {
      if (nfa.edges[e].from != q) {
        continue;
      }
      ++counts[e];
      ++image[static_cast<std::size_t>(nfa.edges[e].label)];
      self(self, nfa.edges[e].to, depth + 1);
      --counts[e];
      --image[static_cast<std::size_t>(nfa.edges[e].label)];
    }
  };
  dfs(dfs, nfa.init, 0);
  return out;
}

struct ParikhComparison
{
  bool equal = false;
  std::size_t images = 0;
  std::string detail;
};

/// Exact comparison of the label projections of the encode_parikh solutions
/// with total count <= max_total against brute_images.
inline ParikhComparison compare_parikh(const Nfa &nfa,
                                       int labels,
                                       int max_total,
                                       const SolverConfig &cfg)
{
  ParikhComparison result;
  const auto images = brute_images(nfa, labels, max_total);
  result.images = images.size();

  LiaFormula f;
  const ParikhVars pv = encode_parikh(nfa, "p.", f);
  std::vector<LinearTerm> label_sum(static_cast<std::size_t>(labels));
  LinearTerm total;
  for (std::size_t e = 0; e < nfa.edges.size(); ++e) {
    label_sum[static_cast<std::size_t>(nfa.edges[e].label)] += LinearTerm::var(pv.counts[e]);
    total += LinearTerm::var(pv.counts[e]);
  }

  // Every brute-force image is a solution: build the witness assignment of
  // the run and evaluate.
  for (const auto &[image, run] : images) {
    const auto &[counts, last] = run;
    LiaModel m;
    for (std::size_t e = 0; e < counts.size(); ++e) {
      m[pv.counts[e]] = counts[e];
    }
    for (std::size_t k = 0; k < nfa.accepting.size(); ++k) {
      m[pv.sinks[k]] = nfa.accepting[k] == last ? 1 : 0;
    }
    std::vector<Integer> depth(nfa.states, 0);
    depth[nfa.init] = 1;
    std::deque<std::size_t> queue{nfa.init};
    while (!queue.empty()) {
      std::size_t q = queue.front();
      queue.pop_front();
      for (std::size_t e = 0; e < nfa.edges.size(); ++e) {
        const auto &edge = nfa.edges[e];
        if (counts[e] > 0 && edge.from == q && depth[edge.to] == 0) {
          depth[edge.to] = depth[q] + 1;
          queue.push_back(edge.to);
        }
      }
    }
    for (std::size_t q = 0; q < nfa.states; ++q) {
      m[pv.depth[q]] = depth[q];
    }
    if (eval_lia(f, m)) {
      continue;
    }
    LiaFormula fixed = f;
    for (std::size_t e = 0; e < counts.size(); ++e) {
      fixed.add(lia::eq(LinearTerm::var(pv.counts[e]), counts[e]));
    }
    if (solve_lia(fixed, cfg).status != LiaResult::Status::Sat) {
      std::ostringstream os;
      os << "accepted image missing from the encoding:";
      for (int v : image) {
        os << ' ' << v;
      }
      result.detail = os.str();
      return result;
    }
  }

  // No solution outside the brute-force images.
  LiaFormula extra = f;
  extra.add(lia::le(total, max_total));
  for (const auto &[image, run] : images) {
    std::vector<LiaPtr> same;
    for (int l = 0; l < labels; ++l) {
      same.push_back(lia::eq(label_sum[static_cast<std::size_t>(l)],
                             image[static_cast<std::size_t>(l)]));
    }
    extra.add(lia::lnot(lia::land(same)));
  }
  const LiaResult r = solve_lia(extra, cfg);
  if (r.status == LiaResult::Status::Unknown) {
    result.detail = "solver gave no answer: " + r.reason;
    return result;
  }
  if (r.status == LiaResult::Status::Sat) {
    std::ostringstream os;
    os << "encoding admits an image no word has:";
    for (const auto &t : label_sum) {
      os << ' ' << eval_lia(t, r.model);
    }
    result.detail = os.str();
    return result;
  }
  result.equal = true;
  return result;
}

}  // namespace afl::testing
