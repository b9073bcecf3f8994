#include "afl/bench.h"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "afl/parser.h"

namespace afl {

namespace {

std::string slurp(const std::filesystem::path &p)
{
  std::ifstream in(p, std::ios::binary);
  if (!in) {
    throw AflException("cannot read " + p.string());
  }
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string trim(std::string s)
{
  const auto ws = " \t\r\n";
  s.erase(0, s.find_first_not_of(ws));
  s.erase(s.find_last_not_of(ws) + 1);
  return s;
}

BenchRow run_one(const std::filesystem::path &dir,
                 const std::filesystem::path &file,
                 const SolveOptions &options)
{
  BenchRow row;
  row.name = std::filesystem::relative(file, dir).generic_string();
  auto expect = file;
  expect.replace_extension(".expect");
  if (std::filesystem::exists(expect)) {
    row.expected = trim(slurp(expect));
  }
  try {
    const Formula f = parse(slurp(file));
    row.size = formula_size(f);
    row.folds = count_folds(f);
    SolveOutcome out = solve(f, options);
    row.mfpa = out.stats.max_folds_per_array;
    row.translate_seconds = out.translate_seconds;
    row.solve_seconds = out.solve_seconds;
    row.status = to_string(out.status);
    if (out.status == SolveOutcome::Status::Unknown) {
      row.error = out.reason;
    }
    if (out.model) {
      std::size_t longest = 0;
      for (const auto &[name, cells] : out.model->arrays) {
        longest = std::max(longest, cells.size());
      }
      row.array_length = longest;
    }
  } catch (const std::exception &e) {
    row.status = "error";
    row.error = e.what();
  }
  row.pass = row.expected.empty() ? row.status != "error"
                                  : row.status == row.expected;
  return row;
}

std::string seconds(double s)
{
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << s;
  return os.str();
}

}  // namespace

std::vector<BenchRow> run_bench(const std::filesystem::path &dir,
                                const SolveOptions &options,
                                unsigned jobs)
{
  std::vector<std::filesystem::path> files;
  for (const auto &entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".afl") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<BenchRow> rows(files.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < files.size(); k = next++) {
      rows[k] = run_one(dir, files[k], options);
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(files.size())));
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) {
    pool.emplace_back(worker);
  }
  worker();
  for (auto &t : pool) {
    t.join();
  }
  return rows;
}

std::string format_table(const std::vector<BenchRow> &rows)
{
  std::vector<std::vector<std::string>> cells{
      {"file", "|phi|", "folds", "MFPA", "translate[s]", "solve[s]", "status",
       "length", "expected", "result"}};
  std::size_t passed = 0;
  for (const auto &r : rows) {
    passed += r.pass;
    cells.push_back({r.name, std::to_string(r.size), std::to_string(r.folds),
                     std::to_string(r.mfpa), seconds(r.translate_seconds),
                     seconds(r.solve_seconds), r.status,
                     r.array_length ? std::to_string(*r.array_length) : "-",
                     r.expected.empty() ? "-" : r.expected,
                     r.pass ? "pass" : "FAIL"});
  }
  std::vector<std::size_t> width(cells[0].size(), 0);
  for (const auto &line : cells) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      width[c] = std::max(width[c], line[c].size());
    }
  }
  std::ostringstream os;
  for (const auto &line : cells) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      os << (c == 0 ? std::left : std::right) << std::setw(static_cast<int>(width[c]))
         << line[c] << (c + 1 < line.size() ? "  " : "\n");
    }
  }
  for (const auto &r : rows) {
    if (!r.error.empty()) {
      os << r.name << ": " << r.error << '\n';
    }
  }
  os << passed << '/' << rows.size() << " files match their expected status\n";
  return os.str();
}

std::string format_csv(const std::vector<BenchRow> &rows)
{
  auto quote = [](const std::string &s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
      return s;
    }
    std::string q = "\"";
    for (char c : s) {
      q += c == '"' ? std::string("\"\"") : std::string(1, c);
    }
    return q + "\"";
  };
  std::ostringstream os;
  os << "file,size,folds,mfpa,translate_seconds,solve_seconds,status,array_length,"
        "expected,pass,error\n";
  for (const auto &r : rows) {
    os << quote(r.name) << ',' << r.size << ',' << r.folds << ',' << r.mfpa << ','
       << seconds(r.translate_seconds) << ',' << seconds(r.solve_seconds) << ','
       << r.status << ',' << (r.array_length ? std::to_string(*r.array_length) : "")
       << ',' << r.expected << ',' << (r.pass ? 1 : 0) << ',' << quote(r.error)
       << '\n';
  }
  return os.str();
}

}  // namespace afl
