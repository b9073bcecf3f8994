#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "afl/ast.h"

namespace afl {

/// One edge of a fold's control flow graph: a branch taken from a concrete
/// control state.
struct CfgEdge
{
  Integer from;
  Integer to;
  std::size_t branch;          // index into FoldFunction::branches
  bool is_break;               // branch contains `break`; never applies updates
  std::vector<Integer> delta;  // per counter c1..c_{m-1}
};

struct ControlFlowGraph
{
  std::vector<Integer> states;  // sorted, always contains 0
  std::vector<CfgEdge> edges;
  int arity = 1;

  std::size_t state_index(Integer s) const;
};

/// Whether the state atoms of a branch guard hold when s has the given value.
bool state_guard_holds(const Branch &br, Integer s);

ControlFlowGraph build_cfg(const FoldFunction &fn);

/// Strongly connected components over non-break edges. Returns the component
/// id of every state (indexed like `states`); ids are in reverse topological
/// order, so every edge goes from a higher or equal id to a lower or equal id.
std::vector<int> strongly_connected_components(const ControlFlowGraph &g);

struct MonotonicityViolation
{
  int counter;  // 1-based
  Integer state;
};

/// Returns the first counter whose increments inside one SCC disagree in sign.
std::optional<MonotonicityViolation> find_scc_violation(
    const ControlFlowGraph &g);

bool check_scc_monotone(const ControlFlowGraph &g);

}  // namespace afl
