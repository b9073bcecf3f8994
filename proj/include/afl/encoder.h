#pragma once

// Translation of normalized AFL formulas into quantifier-free linear integer
// arithmetic. Arrays related by equalities and writes form groups. Groups
// without folds are encoded with Ackermann constraints on their reads; the
// folds of the other groups run in lockstep over one shared position, and
// the runs of the resulting machine are described by the Parikh image of a
// layered automaton whose layers fix the sign of every counter against its
// guard boundaries.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "afl/ast.h"
#include "afl/backend.h"
#include "afl/lia.h"
#include "afl/scm.h"

namespace afl {

class EncodeError : public AflException
{
public:
  using AflException::AflException;
};

// ---------------------------------------------------------------------------
// Guard exclusivity

struct ExclusivityResult
{
  bool exclusive = true;
  /// Indices of two overlapping branches when not exclusive.
  std::size_t first = 0, second = 0;
  /// Values of e, i, the counters and the free variables making both guards
  /// hold (only when the overlap was found by the solver).
  LiaModel witness;
  bool used_solver = false;
};

/// Decides whether any two branches of `fn` can be enabled together, for
/// some control state and some values of the free variables. Pairs that are
/// disjoint on their state guards or contradictory atom by atom are settled
/// without the solver; the rest go to one satisfiability query.
ExclusivityResult check_guard_exclusivity(const FoldFunction &fn,
                                          const SolverConfig &cfg);

// ---------------------------------------------------------------------------
// Arrays

struct WriteLink
{
  std::size_t target, base;  // classes: target = store(base, index, value)
  IntTermPtr index, value;
};

struct ArrayGroups
{
  /// Equivalence classes of array names under top-level array equalities.
  std::vector<std::vector<std::string>> classes;
  std::map<std::string, std::size_t> class_of;
  /// Groups of classes connected by writes; every class is in one group.
  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::size_t> group_of_class;
  std::vector<WriteLink> links;
  /// Top-level conjuncts that are not array equalities.
  std::vector<BoolTermPtr> rest;
};

/// Splits off the array equalities among the top-level conjuncts of a
/// normalized formula. Array equalities below the top level, or under a
/// negation, are not supported and raise EncodeError.
ArrayGroups preprocess_arrays(const Formula &f);

// ---------------------------------------------------------------------------
// Regions and layers

/// Per subject (a counter, or the position of a lockstep group), the
/// distinct terms it is compared against. With l boundaries the subject
/// ranges over 2l + 1 regions.
struct RegionSystem
{
  struct Subject
  {
    std::string name;
    std::vector<LinearTerm> boundaries;
  };
  std::vector<Subject> subjects;

  std::size_t region_count(std::size_t subject) const
  {
    return 2 * subjects[subject].boundaries.size() + 1;
  }
  /// Regions of a subject in increasing order, e.g. "(-inf, x-1]", "[x, x]".
  std::vector<std::string> regions(std::size_t subject) const;
};

/// One subject per counter of the machine, with the right-hand sides of the
/// counter constraints on that counter as boundaries (sorted, constants
/// first).
RegionSystem build_regions(const Scm &machine);

/// The coarse estimate r * k * |R| of the number of modes (reversals times
/// counters times regions), clamped below at one.
std::size_t estimated_mode_bound(std::size_t reversals,
                             std::size_t counters,
                             std::size_t regions);

/// Number of layers the encoder allocates: one plus the maximal number of
/// region changes and direction changes along a run. The position changes
/// region at most twice per boundary; a counter with r reversals has r + 1
/// monotone stretches, each crossing every boundary at most twice.
std::size_t layer_bound(std::size_t position_boundaries,
                        const std::vector<std::pair<int, std::size_t>>
                            &reversals_and_boundaries);

// ---------------------------------------------------------------------------
// Parikh images

struct NfaEdge
{
  std::size_t from = 0, to = 0;
  int label = 0;
};

struct Nfa
{
  std::size_t states = 1;
  std::size_t init = 0;
  std::vector<std::size_t> accepting;
  std::vector<NfaEdge> edges;
};

struct ParikhVars
{
  std::vector<std::string> counts;  // per edge
  std::vector<std::string> sinks;   // per accepting state
  std::vector<std::string> depth;   // per state
};

/// Adds to `out` a formula whose solutions, projected to the edge counts,
/// are exactly the Parikh images of the accepting runs of `nfa`: flow
/// balance from the initial state to one chosen accepting state, plus
/// depth variables ensuring every used edge is reachable through used
/// edges. All variable names start with `prefix`.
ParikhVars encode_parikh(const Nfa &nfa,
                         const std::string &prefix,
                         LiaFormula &out);

// ---------------------------------------------------------------------------
// Lockstep machines

/// A fold prepared for the lockstep encoding.
struct LockstepFold
{
  std::size_t id = 0;  // fold number in the formula
  std::size_t track = 0;
  Scm machine;         // guards with parameters replaced by their terms
  LinearTerm start;
  std::vector<LinearTerm> init;     // per counter, init[0] = start
  std::vector<LinearTerm> outputs;  // per counter
};

/// A transition of the lockstep product. Each fold takes one transition of
/// its machine at every position; `moves` records, per fold, whether that
/// is a termination and the counter increments. Folds with several control
/// states additionally assume whether they are active at that position.
struct LockstepTransition
{
  std::size_t from = 0, to = 0;  // product states
  struct Move
  {
    bool stops = false;
    bool assumed_active = false;  // only for folds with several states
    std::vector<Integer> delta;   // counters c1..c_{m-1}
  };
  std::vector<Move> moves;
  /// Disjunction of the guards of the merged combinations. Counter atoms use
  /// subject 0 for the position and the global counter numbers from 1 on;
  /// input atoms use tracks.
  std::vector<Cube> guard;
};

struct LockstepMachine
{
  std::vector<LockstepFold> folds;
  /// Global counter number -> (fold, counter of that fold).
  std::vector<std::pair<std::size_t, std::size_t>> counter_owner;
  /// Product state -> control state per fold (only meaningful for folds
  /// with several states).
  std::vector<std::vector<std::size_t>> states;
  std::size_t init = 0;
  std::vector<LockstepTransition> transitions;
  std::size_t tracks = 1;
};

/// Builds the lockstep product of the given folds by enumerating the
/// combinations of per-fold transitions whose guards are not contradictory.
LockstepMachine build_lockstep(std::vector<LockstepFold> folds,
                               std::size_t tracks);

/// Layered automaton over the product states: `copies` layers, edges
/// staying inside a layer, advancing to the next layer while consuming a
/// position, or moving to the next layer without consuming one.
struct ModeGraph
{
  enum class EdgeKind
  {
    Stay,
    Advance,
    Skip
  };
  Nfa nfa;
  std::size_t copies = 1;
  std::vector<std::pair<std::size_t, std::size_t>> state_of;  // (product, layer)
  std::vector<EdgeKind> kind;         // per edge
  std::vector<std::size_t> transition;  // lockstep transition, Stay/Advance
  std::vector<std::size_t> layer;       // layer the edge leaves

  bool consumes(std::size_t edge) const { return kind[edge] != EdgeKind::Skip; }
};

ModeGraph build_mode_graph(const LockstepMachine &machine, std::size_t copies);

// ---------------------------------------------------------------------------
// Assembly

/// What modelgen needs to rebuild arrays for one group.
struct GroupEncoding
{
  std::string length_var;
  std::vector<std::vector<std::string>> tracks;  // class members per track
  bool lockstep = false;

  /// Fold-free groups: per track, (index term, cell variable).
  std::vector<std::vector<std::pair<LinearTerm, std::string>>> cells;

  /// Lockstep groups.
  ModeGraph graph;
  ParikhVars parikh;
  std::vector<std::vector<std::string>> witnesses;  // per edge, per track
  std::size_t lockstep_transitions = 0;
};

struct EncodingStats
{
  std::size_t folds = 0;
  std::size_t max_folds_per_array = 0;
  std::size_t groups = 0;
  std::size_t layers = 0;           // summed over lockstep groups
  std::size_t product_transitions = 0;
  std::size_t nfa_edges = 0;
  std::size_t lia_size = 0;
};

struct EncodingMap
{
  std::vector<GroupEncoding> groups;
  std::map<std::string, std::size_t> group_of_array;
};

struct Encoding
{
  LiaFormula psi;
  EncodingMap map;
  EncodingStats stats;
};

/// Encodes a normalized formula. The result is satisfiable iff the formula
/// is, and every model of it determines a model of the formula (see
/// modelgen). Integer variables of the formula keep their names; every
/// other variable starts with `#`.
Encoding assemble(const Formula &normalized);

}  // namespace afl
