#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "afl/ast.h"

namespace afl {

/// A model: values for integer variables and finite sequences for arrays.
struct Interpretation
{
  std::map<std::string, Integer> ints;
  std::map<std::string, std::vector<Integer>> arrays;

  bool operator==(const Interpretation &) const = default;
};

class EvalError : public AflException
{
public:
  enum class Kind
  {
    OutOfBoundsRead,
    OutOfBoundsWrite,
    GuardOverlap,
    UnboundVariable,
    Overflow,
    NotNormalized
  };

  EvalError(Kind kind, std::string message, SourceSpan span = {});
  Kind kind() const { return kind_; }
  const SourceSpan &span() const { return span_; }

private:
  Kind kind_;
  SourceSpan span_;
};

std::string to_string(EvalError::Kind kind);

/// Evaluation is strict: every subterm is evaluated (no short-circuiting) and
/// the integer terms of all guards of a fold are evaluated before the first
/// step. Any out-of-bounds access anywhere makes the whole evaluation fail.
Integer eval_int(const IntTerm &t, const Interpretation &sigma);
std::vector<Integer> eval_array(const ArrayTerm &t,
                                const Interpretation &sigma);
std::vector<Integer> eval_vector(const VectorTerm &t,
                                 const Interpretation &sigma);
std::vector<Integer> eval_fold(const std::vector<Integer> &a,
                               const std::vector<Integer> &init,
                               const FoldFunction &fn,
                               const Interpretation &sigma);
bool eval_bool(const BoolTerm &t, const Interpretation &sigma);
bool eval_formula(const Formula &f, const Interpretation &sigma);

/// Like eval_formula, but evaluation errors count as "not a model".
bool satisfies(const Formula &f, const Interpretation &sigma);

struct BruteForceBounds
{
  int max_len = 4;
  Integer value_min = -2, value_max = 2;
  Integer int_min = -2, int_max = 2;
  std::uint64_t node_budget = 200'000'000;
};

class BudgetExceeded : public AflException
{
public:
  using AflException::AflException;
};

struct BruteForceResult
{
  enum class Status
  {
    Sat,
    UnsatWithinBounds
  };
  Status status;
  Interpretation model;  // valid when Sat
  std::uint64_t nodes = 0;
};

/// Exhaustive search for a model within the given bounds. Variables that a
/// top-level conjunct defines (x = T, a vector equality binding a tuple of
/// variables to a fold, b = a or b = (store a i v)) are computed from their
/// definition rather than enumerated, so their values may leave the bounds.
/// UnsatWithinBounds is not a proof of unsatisfiability.
BruteForceResult brute_force_sat(const Formula &f,
                                 const BruteForceBounds &bounds = {});

}  // namespace afl
