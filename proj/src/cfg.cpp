#include "afl/cfg.h"

#include <algorithm>
#include <functional>
#include <set>

namespace afl {

std::size_t ControlFlowGraph::state_index(Integer s) const
{
  auto it = std::lower_bound(states.begin(), states.end(), s);
  if (it == states.end() || *it != s) {
    throw AflException("state " + std::to_string(s) + " is not in the CFG");
  }
  return static_cast<std::size_t>(it - states.begin());
}

bool state_guard_holds(const Branch &br, Integer s)
{
  for (const auto &g : br.guard) {
    if (g.lhs.kind != ImplicitVar::Kind::State) {
      continue;
    }
    if (auto c = std::get_if<IntTerm::Const>(&g.rhs->node)) {
      if (!compare(s, g.cmp, c->value)) {
        return false;
      }
    }
  }
  return true;
}

ControlFlowGraph build_cfg(const FoldFunction &fn)
{
  ControlFlowGraph g;
  g.arity = fn.arity;
  std::set<Integer> states{0};
  for (const auto &br : fn.branches) {
    if (auto t = br.target_state()) {
      states.insert(*t);
    }
  }
  g.states.assign(states.begin(), states.end());

  for (Integer src : g.states) {
    for (std::size_t b = 0; b < fn.branches.size(); ++b) {
      const Branch &br = fn.branches[b];
      if (!state_guard_holds(br, src)) {
        continue;
      }
      CfgEdge e;
      e.from = src;
      e.is_break = br.has_break();
      e.to = e.is_break ? src : br.target_state().value_or(src);
      e.branch = b;
      for (int k = 1; k < fn.arity; ++k) {
        e.delta.push_back(e.is_break ? 0 : br.delta(k));
      }
      g.edges.push_back(std::move(e));
    }
  }
  return g;
}

std::vector<int> strongly_connected_components(const ControlFlowGraph &g)
{
  const std::size_t n = g.states.size();
  std::vector<std::vector<std::size_t>> succ(n);
  for (const auto &e : g.edges) {
    if (!e.is_break) {
      succ[g.state_index(e.from)].push_back(g.state_index(e.to));
    }
  }

  // Tarjan's algorithm; components are emitted in reverse topological order.
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<std::size_t> stack;
  std::vector<bool> on_stack(n, false);
  int next_index = 0, next_comp = 0;

  std::function<void(std::size_t)> visit = [&](std::size_t v) {
    index[v] = low[v] = next_index++;
    stack.push_back(v);
    on_stack[v] = true;
    for (std::size_t w : succ[v]) {
      if (index[w] < 0) {
        visit(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::size_t w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        comp[w] = next_comp;
      } while (w != v);
      ++next_comp;
    }
  };
  for (std::size_t v = 0; v < n; ++v) {
    if (index[v] < 0) {
      visit(v);
    }
  }
  return comp;
}

std::optional<MonotonicityViolation> find_scc_violation(
    const ControlFlowGraph &g)
{
  auto comp = strongly_connected_components(g);
  const int counters = g.arity - 1;
  // sign[comp][k]: bit 1 = saw positive, bit 2 = saw negative
  std::vector<std::vector<int>> sign(g.states.size(),
                                     std::vector<int>(counters, 0));
  for (const auto &e : g.edges) {
    if (e.is_break) {
      continue;
    }
    int cf = comp[g.state_index(e.from)];
    int ct = comp[g.state_index(e.to)];
    if (cf != ct) {
      continue;
    }
    for (int k = 0; k < counters; ++k) {
      if (e.delta[k] > 0) {
        sign[cf][k] |= 1;
      } else if (e.delta[k] < 0) {
        sign[cf][k] |= 2;
      }
      if (sign[cf][k] == 3) {
        return MonotonicityViolation{k + 1, e.from};
      }
    }
  }
  return std::nullopt;
}

bool check_scc_monotone(const ControlFlowGraph &g)
{
  return !find_scc_violation(g).has_value();
}

}  // namespace afl
