// Command-line driver: solve, validate, bench and fuzz.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "afl/bench.h"
#include "afl/normalize.h"
#include "afl/parser.h"
#include "afl/random_afl.h"
#include "afl/solver.h"

namespace {

enum Exit
{
  kSat = 0,
  kUnsat = 1,
  kUnknown = 2,
  kError = 3
};

std::string read_file(const std::string &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw afl::AflException("cannot read " + path);
  }
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string &path, const std::string &text)
{
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) {
    throw afl::AflException("cannot write " + path);
  }
}

struct BackendFlags
{
  std::string backend = "auto";
  double timeout = 60.0;
  std::string command;

  void attach(CLI::App &app)
  {
    app.add_option("--backend", backend, "LIA backend")
        ->check(CLI::IsMember({"external", "fallback", "auto"}))
        ->capture_default_str();
    app.add_option("--timeout", timeout, "Solver timeout in seconds")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--solver", command,
                   "External solver command line (default: $AFL_SOLVER_CMD or the "
                   "build-time z3 command)");
  }

  afl::SolveOptions options() const
  {
    afl::SolveOptions o;
    o.backend.choice = backend == "external" ? afl::SolverConfig::Choice::External
                       : backend == "fallback" ? afl::SolverConfig::Choice::Fallback
                                               : afl::SolverConfig::Choice::Auto;
    o.backend.timeout_seconds = timeout;
    o.backend.command = command;
    return o;
  }
};

void report(const std::string &file, const std::exception &e)
{
  std::cerr << file << ": " << e.what() << '\n';
}

int cmd_solve(const std::string &path, const BackendFlags &flags, bool show_model,
              bool validate, const std::string &smt_path, const std::string &scm_path)
{
  afl::Formula f;
  try {
    f = afl::parse(read_file(path));
  } catch (const std::exception &e) {
    report(path, e);
    return kError;
  }
  afl::SolveOptions options = flags.options();
  options.validate = validate;
  std::string smt, scm;
  if (!smt_path.empty()) {
    options.smt_out = &smt;
  }
  if (!scm_path.empty()) {
    options.scm_out = &scm;
  }
  afl::SolveOutcome out;
  try {
    out = afl::solve(f, options);
    if (!smt_path.empty()) {
      write_file(smt_path, smt);
    }
    if (!scm_path.empty()) {
      write_file(scm_path, scm);
    }
  } catch (const std::exception &e) {
    report(path, e);
    return kError;
  }
  std::cout << afl::to_string(out.status) << '\n';
  switch (out.status) {
    case afl::SolveOutcome::Status::Sat:
      if (show_model) {
        std::cout << afl::print_model(*out.model);
      }
      return kSat;
    case afl::SolveOutcome::Status::Unsat:
      if (out.bounded) {
        std::cerr << "note: unsat only within the fallback's search box\n";
      }
      return kUnsat;
    case afl::SolveOutcome::Status::Unknown:
      if (!out.reason.empty()) {
        std::cerr << "reason: " << out.reason << '\n';
      }
      return kUnknown;
  }
  return kError;
}

int cmd_validate(const std::string &formula_path, const std::string &model_path)
{
  try {
    const afl::Formula f = afl::parse(read_file(formula_path));
    const afl::Interpretation sigma = afl::parse_model_text(read_file(model_path));
    std::string why;
    const afl::Formula scope = afl::has_wildcards(f) ? afl::normalize(f) : f;
    if (afl::validate_model(f, afl::restrict_to(scope, sigma), &why)) {
      std::cout << "valid\n";
      return 0;
    }
    std::cout << "invalid: " << why << '\n';
    return 1;
  } catch (const std::exception &e) {
    std::cerr << e.what() << '\n';
    return kError;
  }
}

int cmd_bench(const std::string &dir, const BackendFlags &flags, unsigned jobs,
              const std::string &csv_path)
{
  try {
    if (!std::filesystem::is_directory(dir)) {
      throw afl::AflException(dir + " is not a directory");
    }
    const auto rows = afl::run_bench(dir, flags.options(), jobs);
    std::cout << afl::format_table(rows);
    if (!csv_path.empty()) {
      write_file(csv_path, afl::format_csv(rows));
    }
    for (const auto &r : rows) {
      if (!r.pass) {
        return 1;
      }
    }
    return 0;
  } catch (const std::exception &e) {
    std::cerr << e.what() << '\n';
    return kError;
  }
}

int cmd_fuzz(std::uint64_t seed, int count, const BackendFlags &flags, bool verbose)
{
  afl::gen::Generator gen(seed);
  const afl::SolveOptions options = flags.options();
  int disagreements = 0, inconclusive = 0;
  for (int k = 0; k < count; ++k) {
    const afl::Formula f = gen.formula();
    std::string verdict;
    try {
      const afl::SolveOutcome out = afl::solve(f, options);
      const afl::BruteForceResult bf = afl::brute_force_sat(f);
      const bool bf_sat = bf.status == afl::BruteForceResult::Status::Sat;
      if (out.status == afl::SolveOutcome::Status::Unknown) {
        ++inconclusive;
        verdict = "unknown (" + out.reason + ")";
      } else if (bf_sat && out.status != afl::SolveOutcome::Status::Sat) {
        ++disagreements;
        verdict = "DISAGREE: solver unsat, brute force found a model";
      } else {
        verdict = afl::to_string(out.status);
      }
    } catch (const std::exception &e) {
      ++inconclusive;
      verdict = std::string("error: ") + e.what();
    }
    if (verbose || verdict.rfind("DISAGREE", 0) == 0) {
      std::cout << "#" << k << ": " << verdict << '\n';
      if (verdict.rfind("DISAGREE", 0) == 0) {
        std::cout << afl::print(f);
      }
    }
  }
  std::cout << count << " formulas, " << disagreements << " disagreements, "
            << inconclusive << " inconclusive\n";
  return disagreements == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Decision procedure for Array Folds Logic"};
  app.require_subcommand(1);

  BackendFlags solve_flags, bench_flags, fuzz_flags;

  auto *solve = app.add_subcommand("solve", "Decide an .afl file");
  std::string solve_path, smt_path, scm_path;
  bool show_model = false, validate = true;
  solve->add_option("file", solve_path, "Formula")->required()->check(CLI::ExistingFile);
  solve->add_flag("--model", show_model, "Print the model when sat");
  solve->add_flag("--validate,!--no-validate", validate,
                  "Re-check models with the evaluator (default on)");
  solve->add_option("--dump-smt", smt_path, "Write the QF_LIA encoding here");
  solve->add_option("--dump-scm", scm_path, "Write the fold machines here");
  solve_flags.attach(*solve);

  auto *val = app.add_subcommand("validate", "Check a model against a formula");
  std::string val_formula, val_model;
  val->add_option("formula", val_formula, "Formula")->required();
  val->add_option("model", val_model, "Model in (model ...) form")->required();

  auto *bench = app.add_subcommand("bench", "Solve every .afl file in a directory");
  std::string bench_dir, csv_path;
  unsigned jobs = 1;
  bench->add_option("dir", bench_dir, "Corpus directory")->required();
  bench->add_option("--jobs,-j", jobs, "Files solved in parallel")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench->add_option("--csv", csv_path, "Also write the table as CSV");
  bench_flags.attach(*bench);

  auto *fuzz = app.add_subcommand(
      "fuzz", "Compare the solver with brute force on random formulas");
  std::uint64_t seed = 1;
  int count = 100;
  bool verbose = false;
  fuzz->add_option("--seed", seed, "Generator seed")->capture_default_str();
  fuzz->add_option("--count", count, "Number of formulas")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  fuzz->add_flag("--verbose,-v", verbose, "Print every verdict");
  fuzz_flags.attach(*fuzz);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e) == 0 ? 0 : kError;
  }

  if (*solve) {
    return cmd_solve(solve_path, solve_flags, show_model, validate, smt_path, scm_path);
  }
  if (*val) {
    return cmd_validate(val_formula, val_model);
  }
  if (*bench) {
    return cmd_bench(bench_dir, bench_flags, jobs, csv_path);
  }
  return cmd_fuzz(seed, count, fuzz_flags, verbose);
}
