#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "afl/lia.h"

namespace afl {

struct FallbackLimits
{
  /// Half-width of the initial box; 0 derives it from the constants of the
  /// query.
  Integer box = 0;
  std::uint64_t node_budget = 2'000'000;
};

struct SolverConfig
{
  enum class Choice
  {
    External,
    Fallback,
    /// External solver first; the fallback runs if it cannot be started or
    /// gives no answer.
    Auto
  };

  Choice choice = Choice::Auto;
  /// Command line of the external solver; empty means AFL_SOLVER_CMD from
  /// the environment, then the build-time default.
  std::string command;
  double timeout_seconds = 60.0;
  /// Address-space cap for the child process in MiB; 0 leaves it unlimited.
  std::size_t memory_mb = 0;
  /// Passed to z3 as memory_max_size (MiB); 0 keeps z3's default. When z3
  /// reports running out of memory the query is retried once with
  /// tactic.default_tactic=smt.
  std::size_t z3_memory_mb = 2048;
  FallbackLimits fallback;
};

struct LiaResult
{
  enum class Status
  {
    Sat,
    Unsat,
    Unknown
  };

  Status status = Status::Unknown;
  LiaModel model;
  std::string reason;
  /// Set when an Unsat answer only covers the fallback's search box.
  bool bounded = false;
  /// "external" or "fallback".
  std::string engine;
};

std::string to_string(LiaResult::Status s);

class BackendError : public AflException
{
public:
  using AflException::AflException;
};

class SolverSpawnError : public BackendError
{
public:
  using BackendError::BackendError;
};

class ProtocolError : public BackendError
{
public:
  using BackendError::BackendError;
};

class SolverTimeout : public BackendError
{
public:
  using BackendError::BackendError;
};

/// The command that solve_lia would run for this configuration.
std::string resolve_solver_command(const SolverConfig &cfg);

/// Runs the external solver on one fresh script and returns its raw
/// standard output. Throws SolverSpawnError or SolverTimeout.
std::string run_solver_process(const std::string &command,
                               const std::string &script,
                               double timeout_seconds,
                               std::size_t memory_mb);

/// Parses a `get-model` response (either `(model ...)` or a bare list of
/// `define-fun` entries).
LiaModel parse_model(std::string_view text);

/// External solver only. Throws BackendError subclasses on failure.
LiaResult solve_external(const LiaFormula &f, const SolverConfig &cfg);

/// Bounded branch-and-prune search. Never throws for well-formed input.
LiaResult solve_fallback(const LiaFormula &f, const FallbackLimits &limits);

/// Dispatches according to cfg.choice. A Sat result always carries a model
/// that satisfies every assertion of f; models that fail the re-check are
/// reported as Unknown.
LiaResult solve_lia(const LiaFormula &f, const SolverConfig &cfg);

}  // namespace afl
