#include "pfq/interpreter.hpp"
#include "pfq/ir_text.hpp"
#include "pfq/ssa.hpp"
#include "support/fixtures.hpp"
#include "support/random_programs.hpp"

#include <gtest/gtest.h>

using namespace pfq;
using pfq::testing::load_fixture;

namespace {

const Instruction *find_def(const Function &fn, const std::string &name) {
  for (const auto &b : fn.blocks)
    for (const auto &in : b.instructions)
      if (in.has_dest() && in.dest == name)
        return &in;
  return nullptr;
}

std::size_t count_kind(const std::vector<SsaViolation> &vs, SsaViolation::Kind k) {
  std::size_t n = 0;
  for (const auto &v : vs)
    n += v.kind == k;
  return n;
}

} // namespace

TEST(BuildSsa, StraightLineRenaming) {
  Program p = parse_ir(R"(func main(a) {
entry:
  x = a + 1
  x = x * 2
  y2 = x - a
  ret y2
})");
  SsaProgram s = build_ssa(p);
  EXPECT_EQ(print_ir(s.program), R"(func main(a) {
entry:
  x1 = a + 1
  x2 = x1 * 2
  y2_1 = x2 - a
  ret y2_1
}
)");
  EXPECT_EQ(s.version_map.at("x"), (std::vector<std::string>{"x1", "x2"}));
  EXPECT_EQ(s.version_map.at("a"), std::vector<std::string>{"a"});
  EXPECT_EQ(s.source_of("y2_1"), "y2");
}

TEST(BuildSsa, DiamondGetsTwoInputPhi) {
  SsaProgram s = build_ssa(load_fixture("diamond.mir"));
  const Function &fn = s.main();
  auto join = fn.find_block("join");
  ASSERT_TRUE(join);
  const Instruction &phi = fn.blocks[*join].instructions[0];
  ASSERT_EQ(phi.opcode, Opcode::Phi);
  EXPECT_EQ(phi.operands.size(), 2u);
  EXPECT_EQ(phi.dest, "x3");
  EXPECT_EQ(fn.blocks[*join].terminator().operands[0], Operand::var("x3"));
  EXPECT_TRUE(validate_ssa(s.program).empty());
}

TEST(BuildSsa, PaperLoopHeaderGainsPhis) {
  SsaProgram s = build_ssa(load_fixture("paper_example.mir"));
  const Function &fn = s.main();
  auto head = fn.find_block("L");
  ASSERT_TRUE(head);
  std::set<std::string> phi_sources;
  for (const auto &in : fn.blocks[*head].instructions)
    if (in.opcode == Opcode::Phi)
      phi_sources.insert(s.source_of(in.dest));
  // i, j and k are redefined around the loop and live at the header; n and l
  // are not carried.
  EXPECT_EQ(phi_sources, (std::set<std::string>{"i", "j", "k"}));
  EXPECT_TRUE(validate_ssa(s.program).empty());
  EXPECT_EQ(interpret(s.program, {}, {}, 1000).return_value, 3u);
}

TEST(BuildSsa, RejectsUseBeforeDefinition) {
  Program p = parse_ir(R"(func main(c) {
entry:
  br c, t, e
t:
  x = 1
  jmp j
e:
  jmp j
j:
  ret x
})");
  EXPECT_THROW(build_ssa(p), Error);
}

TEST(BuildSsa, RejectsExistingPhis) {
  Program p = parse_ir(R"(func main() {
entry:
  jmp j
j:
  x1 = phi [entry: 1]
  ret x1
})");
  EXPECT_THROW(build_ssa(p), Error);
}

TEST(ValidateSsa, PaperFixtureIsClean) {
  EXPECT_TRUE(validate_ssa(load_fixture("paper_example_ssa.mir")).empty());
}

TEST(ValidateSsa, MultipleDefinitions) {
  Program p = parse_ir(R"(func main() {
entry:
  i1 = 1
  i1 = 2
  ret i1
})");
  auto vs = validate_ssa(p);
  ASSERT_EQ(vs.size(), 1u);
  EXPECT_EQ(vs[0].kind, SsaViolation::Kind::MultipleDefinitions);
  EXPECT_EQ(vs[0].name, "i1");
}

TEST(ValidateSsa, UseNotDominated) {
  Program p = parse_ir(R"(func main() {
entry:
  j1 = 2
  x1 = j2 + 1
  jmp L
L:
  j2 = j1 + 2
  ret x1
})");
  auto vs = validate_ssa(p);
  ASSERT_EQ(vs.size(), 1u);
  EXPECT_EQ(vs[0].kind, SsaViolation::Kind::NotDominated);
  EXPECT_EQ(vs[0].name, "j2");
}

TEST(ValidateSsa, PhiIncomingChecks) {
  Program p = parse_ir(R"(func main(c) {
entry:
  br c, t, e
t:
  a1 = 1
  jmp j
e:
  jmp j
j:
  x1 = phi [t: a1], [t: a1]
  ret x1
})");
  auto vs = validate_ssa(p);
  EXPECT_EQ(count_kind(vs, SsaViolation::Kind::PhiBadIncoming), 2u);
}

TEST(ValidateSsa, PhiOperandMustReachEdge) {
  Program p = parse_ir(R"(func main(c) {
entry:
  br c, t, e
t:
  a1 = 1
  jmp j
e:
  jmp j
j:
  x1 = phi [t: a1], [e: a1]
  ret x1
})");
  auto vs = validate_ssa(p);
  ASSERT_EQ(vs.size(), 1u);
  EXPECT_EQ(vs[0].kind, SsaViolation::Kind::NotDominated);
}

TEST(ValidateSsa, UndefinedName) {
  Program p = parse_ir("func main() {\nentry:\n  ret q1\n}");
  auto vs = validate_ssa(p);
  ASSERT_EQ(vs.size(), 1u);
  EXPECT_EQ(vs[0].kind, SsaViolation::Kind::UndefinedName);
}

TEST(SsaProgram, FromSsaRecoversVersions) {
  SsaProgram s = SsaProgram::from_ssa(load_fixture("paper_example_ssa.mir"));
  EXPECT_EQ(s.version_map.at("i"), (std::vector<std::string>{"i1", "i2"}));
  EXPECT_EQ(s.version_map.at("j"), (std::vector<std::string>{"j1", "j2"}));
  EXPECT_EQ(s.source_of("k2"), "k");
  EXPECT_NE(find_def(s.main(), "l1"), nullptr);
}

TEST(SsaProperty, SemanticPreservation) {
  pfq::testing::ProgramGenerator gen(101);
  for (int i = 0; i < 200; ++i) {
    Program p = gen.next();
    SsaProgram s = build_ssa(p);
    for (int k = 0; k < 10; ++k) {
      auto inputs = gen.inputs(p, 32);
      ExecResult a = interpret(p, {}, inputs, 100000);
      ExecResult b = interpret(s.program, {}, inputs, 100000);
      ASSERT_EQ(a.return_value, b.return_value) << print_ir(p);
      ASSERT_EQ(a.prints, b.prints) << print_ir(p);
      ASSERT_EQ(a.decisions(), b.decisions()) << print_ir(p);
    }
  }
}

TEST(SsaProperty, BuildOutputValidates) {
  pfq::testing::ProgramGenerator gen(102);
  for (int i = 0; i < 200; ++i) {
    Program p = gen.next();
    SsaProgram s = build_ssa(p);
    auto vs = validate_ssa(s.program);
    ASSERT_TRUE(vs.empty()) << vs.front().message << "\n" << print_ir(s.program);
    // Printing SSA output and reading it back loses nothing.
    ASSERT_EQ(parse_ir(print_ir(s.program)), s.program);
  }
}
