#pragma once

// Corpus runs: every `.afl` file below a directory is solved and compared
// with the status in its `.expect` sidecar.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "afl/solver.h"

namespace afl {

struct BenchRow
{
  std::string name;      // path relative to the corpus directory
  std::string expected;  // empty without a sidecar
  std::size_t size = 0;  // |phi|
  std::size_t folds = 0;
  std::size_t mfpa = 0;  // maximal number of folds over one array
  double translate_seconds = 0;
  double solve_seconds = 0;
  std::string status;    // sat, unsat, unknown or error
  std::optional<std::size_t> array_length;  // longest array of the model
  std::string error;
  bool pass = false;
};

/// Solves the corpus with up to `jobs` files in flight. Rows are sorted by
/// name; per-file failures are recorded in the row.
std::vector<BenchRow> run_bench(const std::filesystem::path &dir,
                                const SolveOptions &options,
                                unsigned jobs = 1);

std::string format_table(const std::vector<BenchRow> &rows);
std::string format_csv(const std::vector<BenchRow> &rows);

}  // namespace afl
