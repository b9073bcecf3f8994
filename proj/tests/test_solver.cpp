#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <sys/wait.h>
#include <unistd.h>
#include <filesystem>
#include <fstream>

#include "afl/bench.h"
#include "afl/parser.h"
#include "afl/solver.h"
#include "support/corpus.h"

using namespace afl;
using afl::testing::corpus_path;
using afl::testing::load;
using afl::testing::read_file;
namespace fs = std::filesystem;

namespace {

struct CliRun
{
  int code = -1;
  std::string out;
};

CliRun cli(const std::string &args)
{
  const fs::path capture = fs::temp_directory_path() / ("afl_cli_" + std::to_string(::getpid()));
  const std::string cmd =
      std::string(AFL_CLI_PATH) + " " + args + " > " + capture.string() + " 2>&1";
  CliRun r;
  const int status = std::system(cmd.c_str());
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file(capture.string());
  fs::remove(capture);
  return r;
}

fs::path scratch(const std::string &name)
{
  fs::path dir = fs::temp_directory_path() / ("afl_test_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

void write(const fs::path &p, const std::string &text)
{
  std::ofstream(p) << text;
}

}  // namespace

TEST(PipelineTest, CorpusStatusesAndModels)
{
  for (const auto &entry : fs::recursive_directory_iterator(corpus_path(""))) {
    if (entry.path().extension() != ".afl") {
      continue;
    }
    fs::path expect = entry.path();
    expect.replace_extension(".expect");
    std::string expected = read_file(expect.string());
    expected.erase(expected.find_last_not_of(" \n\r\t") + 1);
    Formula f = parse(read_file(entry.path().string()));
    SolveOutcome out = solve(f);
    EXPECT_EQ(to_string(out.status), expected) << entry.path() << ": " << out.reason;
    if (out.model) {
      EXPECT_TRUE(validate_model(f, *out.model)) << entry.path();
    }
  }
}

TEST(PipelineTest, OverlappingGuardsAreReported)
{
  Formula f = parse(R"(
    (declare-array a) (declare-int x)
    (assert (= (fold a (vec 0) (branches (branch (> e x) skip) (branch (> e 0) skip)))
               (len a)))
  )");
  EXPECT_THROW(solve(f), IllFormedFold);
}

TEST(PipelineTest, NegativeStartLeavesTheVectorUnchanged)
{
  Formula f = parse(R"(
    (declare-array a) (declare-int j) (declare-int c)
    (assert (= (fold a (vec (- 0 1) 5) (branches (branch (> e 0) (inc (c 1)))))
               (vec j c)))
    (assert (> (len a) 2))
  )");
  SolveOutcome out = solve(f);
  ASSERT_EQ(out.status, SolveOutcome::Status::Sat) << out.reason;
  EXPECT_EQ(out.model->ints.at("j"), -1);
  EXPECT_EQ(out.model->ints.at("c"), 5);
}

TEST(PipelineTest, FallbackBackendDecidesSmallFormulas)
{
  SolveOptions o;
  o.backend.choice = SolverConfig::Choice::Fallback;
  SolveOutcome sat = solve(parse(R"(
    (declare-array a) (declare-int x)
    (assert (= (select a 1) (+ x 2)))
    (assert (> x 0))
  )"), o);
  ASSERT_EQ(sat.status, SolveOutcome::Status::Sat) << sat.reason;
  EXPECT_EQ(sat.model->arrays.at("a").at(1), sat.model->ints.at("x") + 2);
  EXPECT_EQ(sat.engine, "fallback");

  SolveOutcome unsat = solve(parse(R"(
    (declare-array a)
    (assert (= (select a 0) 1))
    (assert (< (len a) 1))
  )"), o);
  EXPECT_EQ(unsat.status, SolveOutcome::Status::Unsat);
  EXPECT_TRUE(unsat.bounded);
}

TEST(PipelineTest, SmtDumpIsDeterministicAndParses)
{
  Formula f = load("toy/fig1c.afl");
  std::string a, b;
  SolveOptions o;
  o.smt_out = &a;
  solve(f, o);
  o.smt_out = &b;
  solve(f, o);
  EXPECT_EQ(a, b);
  EXPECT_NE(a.find("(check-sat)"), std::string::npos);
  EXPECT_EQ(to_smtlib(parse_smtlib(a)), a);
}

TEST(BenchTest, TableAndCsv)
{
  std::vector<BenchRow> rows = run_bench(corpus_path("toy"), {}, 2);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].name, "fig1c.afl");
  for (const auto &r : rows) {
    EXPECT_TRUE(r.pass) << r.name << ": " << r.error;
  }
  EXPECT_EQ(rows[2].array_length, 6u);
  const std::string table = format_table(rows);
  EXPECT_NE(table.find("3/3 files match"), std::string::npos);
  const std::string csv = format_csv(rows);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

TEST(BenchTest, HistogramSizeGrows)
{
  std::vector<BenchRow> rows = run_bench(corpus_path("table3"), {}, 1);
  std::vector<std::size_t> sizes;
  for (const auto &r : rows) {
    if (r.name.rfind("histogram", 0) == 0 && r.name.find("unsat") == std::string::npos) {
      sizes.push_back(r.size);
    }
  }
  ASSERT_EQ(sizes.size(), 5u);
  for (std::size_t k = 1; k < sizes.size(); ++k) {
    EXPECT_GT(sizes[k], sizes[k - 1]);
  }
}

TEST(CliTest, SolveExitCodes)
{
  CliRun sat = cli("solve --model " + corpus_path("expressiveness/ex1_boundedness.afl"));
  EXPECT_EQ(sat.code, 0);
  EXPECT_EQ(sat.out.rfind("sat\n(model", 0), 0u) << sat.out;

  CliRun unsat = cli("solve " + corpus_path("table3/histogram_unsat5.afl"));
  EXPECT_EQ(unsat.code, 1);
  EXPECT_EQ(unsat.out, "unsat\n");

  const fs::path bad = scratch("bad.afl");
  write(bad, "(declare-int x)\n(assert (< x))\n");
  CliRun err = cli("solve " + bad.string());
  EXPECT_EQ(err.code, 3);
  EXPECT_NE(err.out.find("2:9"), std::string::npos) << err.out;
}

TEST(CliTest, ValidateExitCodes)
{
  const fs::path model = scratch("pumping.model");
  CliRun solved = cli("solve --model " + corpus_path("toy/pumping_n3.afl"));
  ASSERT_EQ(solved.code, 0);
  write(model, solved.out);
  EXPECT_EQ(cli("validate " + corpus_path("toy/pumping_n3.afl") + " " + model.string()).code, 0);

  write(model, "(model (a (seq 0 0 1 1 1 1)) (n 3))");
  CliRun rejected = cli("validate " + corpus_path("toy/pumping_n3.afl") + " " + model.string());
  EXPECT_EQ(rejected.code, 1);
  EXPECT_EQ(rejected.out.rfind("invalid", 0), 0u);

  EXPECT_EQ(cli("validate " + corpus_path("toy/missing.afl") + " " + model.string()).code, 3);
}

TEST(CliTest, BenchOnEmptyDirectory)
{
  const fs::path dir = scratch("empty_corpus");
  fs::create_directories(dir);
  const fs::path csv = scratch("empty.csv");
  CliRun r = cli("bench " + dir.string() + " --csv " + csv.string());
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("0/0"), std::string::npos);
  EXPECT_EQ(read_file(csv.string()).find('\n'), read_file(csv.string()).size() - 1);
}

TEST(CliTest, DumpsAreWritten)
{
  const fs::path smt = scratch("fig1c.smt2");
  const fs::path scm = scratch("fig1c.scm");
  CliRun r = cli("solve --backend external --timeout 30 --dump-smt " + smt.string()
              + " --dump-scm " + scm.string() + " " + corpus_path("toy/fig1c.afl"));
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(read_file(smt.string()).find("(set-logic QF_LIA)"), std::string::npos);
  const std::string machines = read_file(scm.string());
  EXPECT_NE(machines.find("; fold 0"), std::string::npos);
  EXPECT_NE(machines.find("; fold 1"), std::string::npos);
}
