#pragma once

// Symbolic counter machines. A machine has integer counters (the first one
// is the fold index), symbolic parameters, finitely many control states and
// transitions guarded by counter constraints and input constraints over the
// cells read at the current position.

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "afl/ast.h"
#include "afl/lia.h"

namespace afl {

/// Prefix of the parameters that translate_fold introduces for guard terms.
inline constexpr const char *kGuardHoistPrefix = "%h";

/// `subject cmp rhs`, where the subject is a counter or the cell of one input
/// track at the current position, and rhs is a constant or a parameter plus
/// a constant.
struct ScmAtom
{
  enum class Kind
  {
    Counter,
    Input
  };
  Kind kind = Kind::Counter;
  int index = 0;  // counter number or input track
  Cmp cmp = Cmp::Eq;
  LinearTerm rhs;

  bool operator==(const ScmAtom &) const = default;
  ScmAtom negated() const;
  std::string to_string(const std::vector<std::string> &counters) const;
};

using Cube = std::vector<ScmAtom>;

/// Conservative satisfiability test for a conjunction of atoms: returns false
/// only if the atoms are contradictory for every value of the parameters.
/// Atoms are compared when they share the subject and the parameter part of
/// their right-hand sides.
bool cube_consistent(const Cube &cube);

struct ScmTransition
{
  std::size_t from = 0, to = 0;
  Cube guard;
  std::vector<Integer> delta;  // one entry per counter
  /// Fold branch realized by the transition; -1 for the catch-all
  /// termination and for moves added by align.
  int branch = -1;
  /// The transition enters the done state.
  bool stops = false;
  /// For product machines: the component transitions, in operand order.
  std::vector<std::size_t> parts;
};

struct Scm
{
  std::vector<std::string> counters;
  std::vector<std::string> params;
  std::vector<std::string> states;
  std::size_t init = 0;
  std::size_t done = 0;
  int tracks = 1;
  std::vector<ScmTransition> transitions;

  std::size_t counter_count() const { return counters.size(); }
  std::vector<std::size_t> outgoing(std::size_t state) const;
};

/// Receives the definitions `x = T` for the fresh parameters that replace
/// guard terms. Identical terms share one parameter.
class HoistSink
{
public:
  explicit HoistSink(std::set<std::string> reserved = {});

  /// The parameter standing for `t`; constants are returned as is.
  LinearTerm hoist(const IntTermPtr &t);

  const std::vector<BoolTermPtr> &assertions() const { return assertions_; }
  const std::vector<std::string> &params() const { return params_; }

private:
  std::set<std::string> reserved_;
  std::map<std::string, std::string> by_text_;
  std::vector<BoolTermPtr> assertions_;
  std::vector<std::string> params_;
  int next_ = 0;
};

class NonMonotoneScc : public AflException
{
public:
  using AflException::AflException;
};

/// The machine of a fold function. Counters are (i, c1, ..., c_{m-1}); the
/// control states are those of the fold's control flow graph plus a done
/// state without outgoing transitions. Every non-break edge becomes a
/// transition incrementing i by one; break branches and the implicit
/// catch-all become transitions into done with zero increments. The
/// catch-all is split into pairwise disjoint cubes, so exactly one guard
/// holds in every configuration of a non-done state.
Scm translate_fold(const FoldFunction &fn, HoistSink &sink);

/// Parallel composition of two machines reading the same cells: counters and
/// parameters are concatenated, states are pairs, and transitions are the
/// pairwise conjunctions of guards.
Scm product(const Scm &m1, const Scm &m2);

/// Runs `scm` inside a window of a longer input. The result has a position
/// counter p (counter 0, starting at 0) followed by the counters of `scm`,
/// a waiting state with a self-loop while p < start, activation transitions
/// (the initial transitions of `scm` strengthened with p = start), a bypass
/// waiting -> done when p > start, and a self-loop on done. The index
/// counter must start at the value of `start`.
Scm align(const Scm &scm, const std::string &start_param);

/// Per counter, the maximal number of sign alternations of increments along
/// any path. Throws NonMonotoneScc if a counter moves in both directions
/// inside one strongly connected component.
std::vector<int> reversal_bound(const Scm &scm);

/// `cells[t][pos]` is the value of input track t at position pos.
using Cells = std::vector<std::vector<Integer>>;

class ReplayError : public AflException
{
public:
  ReplayError(std::size_t step, std::string constraint);
  std::size_t step() const { return step_; }
  const std::string &constraint() const { return constraint_; }

private:
  std::size_t step_;
  std::string constraint_;
};

/// Checks that `run` is a path from the initial state whose guards hold over
/// the given cells and parameter values; returns the final counters.
std::vector<Integer> replay(const Scm &scm,
                            const std::vector<std::size_t> &run,
                            const Cells &cells,
                            const LiaModel &params,
                            const std::vector<Integer> &init);

struct SimulationResult
{
  std::vector<Integer> counters;
  std::size_t state = 0;
  std::vector<std::size_t> run;
};

class SimulationError : public AflException
{
public:
  using AflException::AflException;
};

bool guard_holds(const Cube &guard,
                 const std::vector<Integer> &counters,
                 const Cells &cells,
                 std::size_t pos,
                 const LiaModel &params);

/// Deterministic execution over all positions of `cells`: at each position
/// the unique enabled transition is taken. Execution ends early in a state
/// without outgoing transitions. Several enabled transitions are accepted
/// only if they agree on target and increments.
SimulationResult simulate(const Scm &scm,
                          const Cells &cells,
                          const LiaModel &params,
                          const std::vector<Integer> &init);

/// Text form: one line per state and per transition.
std::string dump(const Scm &scm);

}  // namespace afl
