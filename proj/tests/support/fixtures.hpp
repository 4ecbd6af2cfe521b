// Access to the bundled .mir fixtures and golden files.
#pragma once

#include "pfq/ir_text.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pfq::testing {

inline std::string fixture_path(const std::string &name) {
  return std::string(PFQ_FIXTURE_DIR) + "/" + name;
}

inline std::string read_fixture(const std::string &name) {
  std::ifstream in(fixture_path(name), std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open fixture " + name);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Program load_fixture(const std::string &name) {
  return parse_ir(read_fixture(name));
}

/// Every program fixture shipped with the project.
inline std::vector<std::string> program_fixtures() {
  return {"paper_example.mir", "paper_example_ssa.mir", "diamond.mir",
          "memory.mir", "counter_loop.mir"};
}

} // namespace pfq::testing
