#include "pfq/interpreter.hpp"
#include "pfq/ir_text.hpp"
#include "support/fixtures.hpp"
#include "support/random_programs.hpp"

#include <gtest/gtest.h>

using namespace pfq;
using pfq::testing::load_fixture;
using pfq::testing::read_fixture;

namespace {

std::string parse_error_of(const std::string &text) {
  try {
    parse_ir(text);
  } catch (const ParseError &e) {
    return e.what();
  }
  return "";
}

} // namespace

TEST(ParseIr, PaperFixtureShape) {
  Program p = load_fixture("paper_example.mir");
  const Function &fn = p.main();
  ASSERT_EQ(fn.blocks.size(), 4u);
  EXPECT_EQ(fn.instruction_count(), 14u);
  EXPECT_EQ(fn.blocks[0].label, "entry");
  EXPECT_EQ(fn.blocks[0].instructions.size(), 5u);
  EXPECT_EQ(fn.blocks[1].label, "L");
  EXPECT_EQ(fn.blocks[1].instructions.size(), 5u);
  EXPECT_EQ(fn.blocks[2].label, "ret_bb");
  EXPECT_EQ(fn.blocks[2].instructions.size(), 1u);
  EXPECT_EQ(fn.blocks[3].label, "else_bb");
  EXPECT_EQ(fn.blocks[3].instructions.size(), 3u);
  for (std::size_t i = 0; i < 4; ++i)
    EXPECT_EQ(fn.blocks[0].instructions[i].opcode, Opcode::Const);
  EXPECT_EQ(fn.blocks[1].instructions[3].opcode, Opcode::Compare);
  EXPECT_EQ(fn.blocks[1].instructions[3].rel, Relation::Ge);
}

TEST(ParseIr, EmptyBodyIsMissingTerminator) {
  EXPECT_NE(parse_error_of("func main() { }").find("missing terminator"),
            std::string::npos);
  EXPECT_NE(parse_error_of("func main() {\nentry:\n  x = 1\n}").find("missing terminator"),
            std::string::npos);
}

TEST(ParseIr, DiagnosticsCarryPosition) {
  try {
    parse_ir("func main() {\nentry:\n  x = 1 +\n}");
    FAIL() << "expected a parse error";
  } catch (const ParseError &e) {
    EXPECT_EQ(e.line(), 4u);
    EXPECT_EQ(e.column(), 1u);
  }
  try {
    parse_ir("func main() {\nentry:\n  x = 1 $ 2\n  ret x\n}");
    FAIL() << "expected a parse error";
  } catch (const ParseError &e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.column(), 9u);
  }
}

TEST(ParseIr, StructuralErrors) {
  EXPECT_NE(parse_error_of("func main() {\na:\n  ret 0\na:\n  ret 1\n}").find("duplicate label"),
            std::string::npos);
  EXPECT_NE(parse_error_of("func main() {\na:\n  jmp nowhere\n}").find("undefined label"),
            std::string::npos);
  EXPECT_NE(parse_error_of("func main() {\na:\n  jmp b\nb:\n  x = 1\n  y = phi [a: x]\n  ret y\n}")
                .find("phi outside block head"),
            std::string::npos);
  EXPECT_NE(parse_error_of("func main() {\na:\n  ret 0\n  ret 1\n}").find("after terminator"),
            std::string::npos);
  EXPECT_NE(parse_error_of("func main() {\na:\n  x__1 = 1\n  ret 0\n}").find("reserved"),
            std::string::npos);
  EXPECT_NE(parse_error_of("func main() {\na:\n  x = 1  y = 2\n  ret 0\n}").find("end of line"),
            std::string::npos);
  EXPECT_NE(parse_error_of("func other() {\na:\n  ret 0\n}").find("main"), std::string::npos);
}

TEST(PrintIr, UndefRendersAsToken) {
  Program p = parse_ir("func main() {\nentry:\n  j2 = undef + 2\n  ret undef\n}");
  EXPECT_EQ(print_ir(p), "func main() {\nentry:\n  j2 = undef + 2\n  ret undef\n}\n");
}

TEST(PrintIr, GoldenFiles) {
  for (const auto &name : pfq::testing::program_fixtures()) {
    SCOPED_TRACE(name);
    Program p = load_fixture(name);
    EXPECT_EQ(print_ir(p), read_fixture("golden/" + name));
  }
}

TEST(PrintIr, RoundTripFixtures) {
  for (const auto &name : pfq::testing::program_fixtures()) {
    SCOPED_TRACE(name);
    Program p = load_fixture(name);
    EXPECT_EQ(parse_ir(print_ir(p)), p);
  }
}

TEST(PrintIr, RoundTripRandomPrograms) {
  pfq::testing::ProgramGenerator gen(0x5eed);
  for (int i = 0; i < 500; ++i) {
    Program p = gen.next();
    std::string text = print_ir(p);
    ASSERT_EQ(parse_ir(text), p) << text;
  }
}

TEST(Interpret, PaperProgramReturnsThree) {
  Program p = load_fixture("paper_example.mir");
  ExecResult r = interpret(p, {}, {}, 1000);
  EXPECT_EQ(r.return_value, 3u);
  EXPECT_TRUE(r.prints.empty());
  EXPECT_EQ(r.decisions(), std::vector<bool>{true});

  ExecResult s = interpret(load_fixture("paper_example_ssa.mir"), {}, {}, 1000);
  EXPECT_EQ(s.return_value, 3u);
}

TEST(Interpret, ReturnLiteral) {
  Program p = parse_ir("func main() {\nentry:\n  ret 7\n}");
  EXPECT_EQ(interpret(p, {}, {}, 10).return_value, 7u);
}

TEST(Interpret, FuelExhaustedOnSelfLoop) {
  Program p = parse_ir("func main() {\nentry:\n  jmp entry\n}");
  try {
    interpret(p, {}, {}, 5);
    FAIL() << "expected fuel exhaustion";
  } catch (const FuelExhausted &e) {
    EXPECT_EQ(e.partial().trace.size(), 5u);
  }
}

TEST(Interpret, UnassignedReadAndMissingInput) {
  // Parse accepts it; only execution notices that y never got a value.
  Program p = parse_ir("func main() {\nentry:\n  x = y + 1\n  ret x\n}");
  EXPECT_THROW(interpret(p, {}, {}, 10), Error);
  Program q = parse_ir("func main(a) {\nentry:\n  ret a\n}");
  EXPECT_THROW(interpret(q, {}, {}, 10), Error);
}

TEST(Interpret, WrapAroundAndSignedCompare) {
  MachineConfig cfg;
  cfg.bit_width = 8;
  Program p = parse_ir(R"(func main(a) {
entry:
  x = a + 200
  y = x * 3
  c = x < 0
  print x
  print y
  print c
  ret y
})");
  ExecResult r = interpret(p, cfg, {{"a", 100}}, 100);
  // 300 mod 256 = 44; 132 is negative as a signed byte.
  EXPECT_EQ(r.prints, (std::vector<Word>{44, 132, 0}));
  ExecResult s = interpret(p, cfg, {{"a", 60}}, 100);
  EXPECT_EQ(s.prints[0], 4u);
  cfg.bit_width = 8;
  ExecResult t = interpret(p, cfg, {{"a", 0}}, 100);
  EXPECT_EQ(t.prints[2], 1u); // 200 reads as -56
}

TEST(Interpret, MemoryIsZeroInitialised) {
  Program p = load_fixture("memory.mir");
  ExecResult r = interpret(p, {}, {{"a", 1}, {"v", 7}}, 100);
  EXPECT_EQ(r.return_value, 14u);
  ExecResult s = interpret(p, {}, {{"a", 1}, {"v", 2}}, 100);
  EXPECT_EQ(s.prints, std::vector<Word>{4});
  EXPECT_EQ(s.return_value, 0u);
  Program q = parse_ir("func main() {\nentry:\n  x = load 5\n  ret x\n}");
  EXPECT_EQ(interpret(q, {}, {}, 10).return_value, 0u);
}

TEST(Interpret, PhiSelectsIncomingEdge) {
  Program p = parse_ir(R"(func main(c) {
entry:
  br c, t, e
t:
  jmp j
e:
  jmp j
j:
  x = phi [t: 1], [e: 2]
  ret x
})");
  EXPECT_EQ(interpret(p, {}, {{"c", 1}}, 10).return_value, 1u);
  EXPECT_EQ(interpret(p, {}, {{"c", 0}}, 10).return_value, 2u);
}

TEST(Interpret, BitWidthBounds) {
  Program p = parse_ir("func main() {\nentry:\n  ret 1\n}");
  MachineConfig cfg;
  cfg.bit_width = 1;
  EXPECT_THROW(interpret(p, cfg, {}, 10), Error);
  cfg.bit_width = 65;
  EXPECT_THROW(interpret(p, cfg, {}, 10), Error);
  cfg.bit_width = 64;
  EXPECT_EQ(interpret(p, cfg, {}, 10).return_value, 1u);
}

TEST(InterpretProperty, ValuesStayInRange) {
  pfq::testing::ProgramGenerator gen(11);
  for (unsigned width : {3u, 8u, 32u}) {
    MachineConfig cfg;
    cfg.bit_width = width;
    cfg.undef_policy = UndefPolicy::seeded_random(3);
    for (int i = 0; i < 100; ++i) {
      Program p = gen.next();
      ExecResult r = interpret(p, cfg, gen.inputs(p, 64), 10000);
      for (const auto &s : r.trace) {
        if (s.value) {
          ASSERT_LE(*s.value, cfg.mask());
        }
      }
      ASSERT_LE(r.return_value, cfg.mask());
    }
  }
}

TEST(InterpretProperty, DeterministicUnderEqualSeeds) {
  pfq::testing::ProgramGenerator gen(12);
  MachineConfig cfg;
  cfg.undef_policy = UndefPolicy::seeded_random(99);
  for (int i = 0; i < 100; ++i) {
    Program p = gen.next();
    // Sprinkle undef reads so the policy actually matters.
    for (auto &b : p.main().blocks)
      for (auto &in : b.instructions)
        if (in.opcode == Opcode::BinOp && !in.operands[1].is_var())
          in.operands[1] = Operand::undef();
    auto inputs = gen.inputs(p, 32);
    EXPECT_EQ(interpret(p, cfg, inputs, 10000), interpret(p, cfg, inputs, 10000));
  }
}
