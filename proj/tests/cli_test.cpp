#include "pfq/bench.hpp"
#include "pfq/cli.hpp"
#include "support/fixtures.hpp"

#include <gtest/gtest.h>

using namespace pfq;
using pfq::testing::fixture_path;
using pfq::testing::read_fixture;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int status;
  std::string out, err;
};

CliResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "pfq");
  std::vector<const char *> argv;
  for (const auto &a : args)
    argv.push_back(a.c_str());
  std::ostringstream out, err;
  int status = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {status, out.str(), err.str()};
}

fs::path scratch(const std::string &name) {
  fs::path p = fs::temp_directory_path() / ("pfq-cli-test-" + std::to_string(getpid())) / name;
  fs::create_directories(p);
  return p;
}

} // namespace

TEST(Cli, BundledExampleMatchesFixture) {
  EXPECT_EQ(std::string(kPaperExampleSsa), read_fixture("paper_example_ssa.mir"));
}

TEST(Cli, DemoPaperThroughBinary) {
  RunOutcome o = run_command(std::string(PFQ_CLI_PATH) + " demo-paper", 20);
  EXPECT_EQ(o.exit_code, 0);
  EXPECT_NE(o.output.find("conjuncts(original) = 8\n"), std::string::npos);
  EXPECT_NE(o.output.find("conjuncts(after-dce) = 7\n"), std::string::npos);
  EXPECT_NE(o.output.find("conjuncts(after-cva+opt) = 3\n"), std::string::npos);
  EXPECT_NE(o.output.find(read_fixture("golden/paper_query.smt2")), std::string::npos);
}

TEST(Cli, ExitStatuses) {
  EXPECT_EQ(run_command(std::string(PFQ_CLI_PATH) + " frobnicate", 20).exit_code, 1);
  EXPECT_EQ(run_command(std::string(PFQ_CLI_PATH), 20).exit_code, 1);
  EXPECT_EQ(run_command(std::string(PFQ_CLI_PATH) + " parse /nonexistent.mir", 20).exit_code, 2);
  EXPECT_EQ(run_command(std::string(PFQ_CLI_PATH) + " --help", 20).exit_code, 0);
}

TEST(Cli, UnknownSubcommandPrintsUsage) {
  CliResult r = run({"frobnicate"});
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("unknown subcommand 'frobnicate'"), std::string::npos);
  EXPECT_NE(r.err.find("demo-paper"), std::string::npos);
  CliResult bad = run({"split", fixture_path("paper_example_ssa.mir")});
  EXPECT_EQ(bad.status, 1);
  EXPECT_NE(bad.err.find("--sections"), std::string::npos);
}

TEST(Cli, ListOptionsTakeOneValuePerOccurrence) {
  CliResult r = run({"pathcond", "--input", "a=1", "--input", "v=9", "--symbolic", "a",
                     fixture_path("memory.mir")});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find("symbolic a\n"), std::string::npos);
  CliResult b = run({"bench", "--solver", "fake=cat {file} >/dev/null; echo unsat", "--reps", "1",
                     fixture_path("golden/paper_query.smt2")});
  ASSERT_EQ(b.status, 0) << b.err;
  EXPECT_NE(b.out.find(",fake,"), std::string::npos);
  EXPECT_NE(b.out.find(",unsat"), std::string::npos);
}

TEST(Cli, InputErrorsCarryFileAndLine) {
  fs::path dir = scratch("errors");
  std::ofstream(dir / "bad.mir") << "func main() {\nentry:\n  x = = 1\n}\n";
  CliResult r = run({"parse", (dir / "bad.mir").string()});
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find((dir / "bad.mir").string() + ":3:"), std::string::npos) << r.err;
  std::ofstream(dir / "bad.stp") << "x : BITVECTOR(4);\nASSERT(";
  CliResult s = run({"convert", (dir / "bad.stp").string()});
  EXPECT_EQ(s.status, 2);
  EXPECT_NE(s.err.find("bad.stp:2:"), std::string::npos) << s.err;
}

TEST(Cli, ParseAndSsa) {
  CliResult p = run({"parse", fixture_path("diamond.mir")});
  EXPECT_EQ(p.status, 0);
  EXPECT_EQ(p.out, print_ir(parse_ir(read_fixture("diamond.mir"))));
  CliResult s = run({"ssa", fixture_path("diamond.mir")});
  EXPECT_EQ(s.status, 0);
  EXPECT_NE(s.out.find("phi"), std::string::npos);
  EXPECT_EQ(run({"ssa", "--validate", fixture_path("paper_example_ssa.mir")}).out, "ok\n");
  EXPECT_EQ(run({"ssa", "--validate", fixture_path("diamond.mir")}).status, 2);
}

TEST(Cli, CvaListing) {
  CliResult r = run({"cva", fixture_path("paper_example_ssa.mir"), "-V", "i"});
  EXPECT_EQ(r.status, 0);
  for (const char *line : {"l1 = undef + 1", "j2 = undef + 2", "c1 = j2 >= undef",
                           "k2 = undef - j2", "i2 = i1 + j1"})
    EXPECT_NE(r.out.find(line), std::string::npos) << line;
  CliResult m = run({"cva", fixture_path("paper_example_ssa.mir"), "-V", "i", "--marks"});
  EXPECT_NE(m.out.find("Changed   i2 = i1 + j1"), std::string::npos);
  EXPECT_EQ(run({"cva", fixture_path("paper_example_ssa.mir"), "-V", "nosuch"}).status, 2);
}

TEST(Cli, OptUndefBranch) {
  fs::path dir = scratch("opt");
  std::ofstream(dir / "u.mir") << "func main() {\nentry:\n  br undef, a, b\na:\n  ret 1\nb:\n  ret 2\n}\n";
  EXPECT_NE(run({"opt", (dir / "u.mir").string()}).out.find("ret 1"), std::string::npos);
  EXPECT_NE(run({"opt", (dir / "u.mir").string(), "--undef-branch", "else"}).out.find("ret 2"),
            std::string::npos);
  EXPECT_EQ(run({"opt", (dir / "u.mir").string(), "--passes", "bogus"}).status, 2);
}

TEST(Cli, PathcondEmitConvertRoundTrip) {
  fs::path dir = scratch("emit");
  CliResult pc = run({"pathcond", fixture_path("paper_example_ssa.mir")});
  EXPECT_EQ(pc.status, 0);
  std::ofstream(dir / "paper.pc") << pc.out;
  EXPECT_EQ(run({"emit", (dir / "paper.pc").string(), "--format", "smt2"}).out,
            run({"emit", fixture_path("paper_example_ssa.mir"), "--format", "smt2"}).out);
  CliResult stp = run({"emit", (dir / "paper.pc").string(), "--format", "stp", "-o",
                       (dir / "paper.stp").string()});
  EXPECT_EQ(stp.status, 0);
  CliResult smt = run({"convert", (dir / "paper.stp").string(), "--to", "smt2"});
  EXPECT_EQ(smt.out, run({"emit", (dir / "paper.pc").string()}).out);
  EXPECT_EQ(run({"convert", fixture_path("golden/paper_query.stp")}).out,
            read_fixture("golden/paper_query.smt2"));
  CliResult paths = run({"pathcond", fixture_path("diamond.mir"), "--enumerate", "5"});
  EXPECT_EQ(paths.status, 0);
  EXPECT_EQ(count_substr(paths.out, "pc v1\n"), 2u);
}

TEST(Cli, SplitWritesSections) {
  fs::path dir = scratch("split");
  CliResult r = run({"split", fixture_path("paper_example_ssa.mir"), "-k", "2", "--format",
                     "stp", "--out-dir", dir.string(), "--name", "paper"});
  EXPECT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find("section 1: 4 conjuncts"), std::string::npos);
  EXPECT_NE(r.out.find("section 2: 8 conjuncts"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "paper_1.stp"));
  EXPECT_TRUE(fs::exists(dir / "paper_2.stp"));
  EXPECT_EQ(run({"split", fixture_path("paper_example_ssa.mir"), "-k", "9", "--out-dir",
                 dir.string()})
                .status,
            2);
}

TEST(Cli, Metrics) {
  EXPECT_EQ(run({"metrics", "--ite", "7052", "--store", "10889"}).out, "ratio 0.647\n");
  EXPECT_EQ(run({"metrics", "--ite", "3", "--store", "0"}).out, "ratio absent\n");
  CliResult m = run({"metrics", fixture_path("golden/paper_query.stp")});
  EXPECT_EQ(m.status, 0);
  EXPECT_NE(m.out.find("paper_query.stp,8,8,3,0,0,\n"), std::string::npos) << m.out;
}

TEST(Cli, SolveListsModel) {
  CliResult r = run({"solve", "--width", "4", fixture_path("golden/paper_query.smt2")});
  EXPECT_EQ(r.status, 0);
  EXPECT_EQ(r.out, "sat\n  i1 = 1\n  i2 = 3\n  j1 = 2\n");
  fs::path dir = scratch("solve");
  std::ofstream(dir / "u.smt2")
      << "(declare-fun x () (_ BitVec 8))\n(assert (= x #x01))\n(assert (= x #x02))\n";
  EXPECT_EQ(run({"solve", (dir / "u.smt2").string()}).out, "unsat\n");
  EXPECT_EQ(run({"solve", "--width", "7", (dir / "u.smt2").string()}).status, 1);
}

TEST(Cli, BenchWritesCsvAndData) {
  fs::path dir = scratch("bench");
  run({"split", fixture_path("paper_example_ssa.mir"), "-k", "3", "--out-dir", dir.string(),
       "--name", "paper"});
  CliResult r = run({"bench", (dir / "paper_1.smt2").string(), (dir / "paper_2.smt2").string(),
                     (dir / "paper_3.smt2").string(), "--solver", "fake=echo sat # {file}",
                     "--reps", "3", "--dat-dir", (dir / "dat").string()});
  EXPECT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out.substr(0, r.out.find('\r')),
            "name,solver,lines,conjuncts,ite,store,ratio,time,time_diff,verdict");
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 4);
  EXPECT_TRUE(fs::exists(dir / "dat" / "paper.fake.dat"));
  CliResult missing = run({"bench", (dir / "paper_1.smt2").string(), "--solver",
                           "ghost=/nonexistent/solver {file}"});
  EXPECT_EQ(missing.status, 0);
  EXPECT_NE(missing.err.find("not found"), std::string::npos);
  EXPECT_NE(missing.out.find(",error"), std::string::npos);
}
