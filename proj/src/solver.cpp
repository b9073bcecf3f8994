#include "afl/solver.h"

#include <chrono>
#include <sstream>

#include "afl/cfg.h"
#include "afl/normalize.h"
#include "afl/parser.h"

namespace afl {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void collect(const VectorTerm &v, std::vector<const VectorTerm::Fold *> &out);

void collect(const BoolTerm &b, std::vector<const VectorTerm::Fold *> &out)
{
  std::visit(
      [&](const auto &n) {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, BoolTerm::Not>) {
          collect(*n.arg, out);
        } else if constexpr (std::is_same_v<N, BoolTerm::And>
                             || std::is_same_v<N, BoolTerm::Or>
                             || std::is_same_v<N, BoolTerm::Implies>) {
          collect(*n.lhs, out);
          collect(*n.rhs, out);
        } else if constexpr (std::is_same_v<N, BoolTerm::VecEq>) {
          collect(*n.lhs, out);
          collect(*n.rhs, out);
        }
      },
      b.node);
}

void collect(const VectorTerm &v, std::vector<const VectorTerm::Fold *> &out)
{
  if (const auto *f = std::get_if<VectorTerm::Fold>(&v.node)) {
    collect(*f->init, out);
    out.push_back(f);
  }
}

void check_folds(const Formula &normalized, const SolveOptions &options)
{
  std::vector<const VectorTerm::Fold *> folds;
  for (const auto &a : normalized.assertions) {
    collect(*a, folds);
  }
  std::ostringstream machines;
  HoistSink sink;
  for (std::size_t k = 0; k < folds.size(); ++k) {
    const auto &fn = folds[k]->fn;
    const ControlFlowGraph g = build_cfg(fn);
    if (auto bad = find_scc_violation(g)) {
      throw IllFormedFold("fold over " + folds[k]->array + ": counter c"
                          + std::to_string(bad->counter)
                          + " moves in both directions inside a loop through state "
                          + std::to_string(bad->state));
    }
    ExclusivityResult ex = check_guard_exclusivity(fn, options.backend);
    if (!ex.exclusive) {
      throw IllFormedFold("fold over " + folds[k]->array + ": guards of branches "
                          + std::to_string(ex.first + 1) + " and "
                          + std::to_string(ex.second + 1) + " overlap");
    }
    if (options.scm_out) {
      machines << "; fold " << k << " over " << folds[k]->array << '\n'
               << dump(translate_fold(fn, sink));
    }
  }
  if (options.scm_out) {
    *options.scm_out = machines.str();
  }
}

}  // namespace

std::string to_string(SolveOutcome::Status s)
{
  switch (s) {
    case SolveOutcome::Status::Sat: return "sat";
    case SolveOutcome::Status::Unsat: return "unsat";
    case SolveOutcome::Status::Unknown: return "unknown";
  }
  return "unknown";
}

SolveOutcome solve(const Formula &f, const SolveOptions &options)
{
  SolveOutcome out;
  auto t0 = Clock::now();
  const Formula normalized = normalize(f);
  check_folds(normalized, options);
  Encoding enc = assemble(normalized);
  out.stats = enc.stats;
  if (options.smt_out) {
    *options.smt_out = to_smtlib(enc.psi);
  }
  out.translate_seconds = seconds_since(t0);

  auto t1 = Clock::now();
  LiaResult r = solve_lia(enc.psi, options.backend);
  out.solve_seconds = seconds_since(t1);
  out.engine = r.engine;
  out.reason = r.reason;

  switch (r.status) {
    case LiaResult::Status::Unsat:
      out.status = SolveOutcome::Status::Unsat;
      out.bounded = r.bounded;
      return out;
    case LiaResult::Status::Unknown:
      out.status = SolveOutcome::Status::Unknown;
      return out;
    case LiaResult::Status::Sat: break;
  }

  Interpretation sigma;
  try {
    sigma = restrict_to(has_wildcards(f) ? normalized : f,
                        synthesize_arrays(normalized, enc, r.model, options.limits));
  } catch (const ModelGenError &e) {
    out.status = SolveOutcome::Status::Unknown;
    out.reason = std::string("model reconstruction failed: ") + e.what();
    return out;
  }
  if (options.validate) {
    std::string why;
    if (!validate_model(f, sigma, &why)) {
      out.status = SolveOutcome::Status::Unknown;
      out.reason = "reconstructed model failed validation: " + why;
      return out;
    }
    out.validated = true;
  }
  out.status = SolveOutcome::Status::Sat;
  out.model = std::move(sigma);
  return out;
}

}  // namespace afl
