#pragma once

// The complete decision procedure: normalization, well-formedness checks that
// need a solver, encoding, the LIA backend, model reconstruction and
// validation against the evaluator.

#include <optional>
#include <string>

#include "afl/backend.h"
#include "afl/encoder.h"
#include "afl/evaluator.h"
#include "afl/modelgen.h"

namespace afl {

class IllFormedFold : public AflException
{
public:
  using AflException::AflException;
};

struct SolveOptions
{
  SolverConfig backend;
  ModelGenLimits limits;
  /// Re-check every model with the evaluator before reporting sat. When a
  /// model fails, the answer becomes unknown.
  bool validate = true;
  /// Receives the SMT-LIB text of the encoding when set.
  std::string *smt_out = nullptr;
  /// Receives the text form of every fold machine when set.
  std::string *scm_out = nullptr;
};

struct SolveOutcome
{
  enum class Status
  {
    Sat,
    Unsat,
    Unknown
  };
  Status status = Status::Unknown;
  /// Model of the input formula's variables, plus the helper variables of
  /// the normalized formula when the input has wildcards (sat only).
  std::optional<Interpretation> model;
  bool validated = false;
  std::string reason;
  /// Unsat only covers the fallback's search box.
  bool bounded = false;
  std::string engine;
  EncodingStats stats;
  double translate_seconds = 0;
  double solve_seconds = 0;
};

std::string to_string(SolveOutcome::Status s);

/// Decides `f` (as returned by parse). Throws IllFormedFold for overlapping
/// guards or non-monotone loops, EncodeError for unsupported array
/// equalities, and OverflowError when constants leave the 64-bit range.
SolveOutcome solve(const Formula &f, const SolveOptions &options = {});

}  // namespace afl
