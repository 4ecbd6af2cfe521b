// pfq/cli.hpp - the `pfq` command-line driver.
//
// Exit status: 0 on success, 1 on usage errors, 2 on input errors (bad files,
// malformed programs or formulas, oracle bounds).
#pragma once

#include "pfq/bench.hpp"
#include "pfq/brute_solver.hpp"
#include "pfq/cva.hpp"
#include "pfq/ir_text.hpp"
#include "pfq/lower.hpp"
#include "pfq/opt.hpp"
#include "pfq/query.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace pfq {

/// The loop example in SSA form, as shipped in fixtures/paper_example_ssa.mir.
inline constexpr std::string_view kPaperExampleSsa = R"(# Loop example in SSA form, transcribed as data (no phi nodes at L).
func main() {
entry:
  i1 = 1
  j1 = 2
  k1 = 3
  n1 = 4
  jmp L
L:
  i2 = i1 + j1
  l1 = j1 + 1
  j2 = j1 + 2
  c1 = j2 >= n1
  br c1, ret_bb, else_bb
ret_bb:
  ret i2
else_bb:
  k2 = k1 - j2
  print l1
  jmp L
}
)";

/// Conjunct counts of the loop example at each stage, plus the final program
/// and query.
struct PaperDemo {
  std::size_t original = 0;
  std::size_t after_dce = 0;
  std::size_t after_cva_opt = 0;
  SsaProgram starred;   // conservative cva output
  SsaProgram optimized; // after the default pipeline
  PathCondition query;
};

inline PaperDemo run_paper_demo(std::string_view source = kPaperExampleSsa) {
  PaperDemo d;
  SsaProgram ssa = SsaProgram::from_ssa(parse_ir(source));
  d.original = path_condition(ssa, PathSpec::concrete({})).size();
  SsaProgram cleaned = ssa;
  cleaned.program = dce(ssa.program);
  d.after_dce = path_condition(cleaned, PathSpec::concrete({})).size();
  d.starred = cva(ssa, {{"i"}, CvaMode::Conservative});
  PassPipeline pipeline;
  pipeline.symbolic = {"i"};
  d.optimized = run_pipeline(d.starred, pipeline).program;
  d.query = path_condition(d.optimized, PathSpec::concrete({}), {"i"});
  d.after_cva_opt = d.query.size();
  return d;
}

namespace cli {

/// An input problem, reported with file context and exit status 2.
class InputError : public Error {
public:
  using Error::Error;
};

inline std::string read_file(const std::string &path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw InputError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw InputError(path + ": cannot write file");
  out << text;
}

/// Runs `fn`, prefixing any error with the file name.
template <typename Fn> auto with_context(const std::string &path, Fn &&fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const InputError &) {
    throw;
  } catch (const ParseError &e) {
    throw InputError(path + ":" + e.what());
  } catch (const Error &e) {
    throw InputError(path + ": " + e.what());
  }
}

inline Program load_program(const std::string &path) {
  std::string text = read_file(path);
  return with_context(path, [&] { return parse_ir(text); });
}

enum class SsaInput : std::uint8_t { Auto, Raw, Ssa };

/// Raw programs go through SSA construction; programs that already are in SSA
/// form are taken as they are.
inline SsaProgram to_ssa(const Program &prog, SsaInput mode, const std::string &path) {
  return with_context(path, [&] {
    if (mode == SsaInput::Ssa) {
      auto v = validate_ssa(prog);
      if (!v.empty())
        throw Error("not in SSA form: " + v.front().message);
      return SsaProgram::from_ssa(prog);
    }
    if (mode == SsaInput::Auto && validate_ssa(prog).empty() && !prog.main().blocks.empty()) {
      bool has_phi = false, versioned = true;
      for (const auto &name : defined_names(prog.main()))
        versioned = versioned && source_name(name) != name;
      for (const auto &b : prog.main().blocks)
        for (const auto &in : b.instructions)
          has_phi = has_phi || in.opcode == Opcode::Phi;
      if (has_phi || versioned)
        return SsaProgram::from_ssa(prog);
    }
    return build_ssa(prog);
  });
}

inline std::set<std::string> split_list(const std::vector<std::string> &items) {
  std::set<std::string> out;
  for (const auto &item : items) {
    std::size_t start = 0;
    while (start <= item.size()) {
      std::size_t comma = item.find(',', start);
      std::string part = item.substr(start, comma == std::string::npos ? std::string::npos
                                                                        : comma - start);
      if (!part.empty())
        out.insert(part);
      if (comma == std::string::npos)
        break;
      start = comma + 1;
    }
  }
  return out;
}

inline Word parse_word(const std::string &text, unsigned width) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(text, &used, 0);
    if (used != text.size())
      throw std::invalid_argument(text);
    return term::width_mask(width) & static_cast<Word>(v);
  } catch (const std::exception &) {
    throw CLI::ValidationError("--input", "'" + text + "' is not an integer");
  }
}

struct PathOptions {
  std::vector<std::string> inputs; // name=value
  std::string decisions;           // e.g. "FFT"
  std::vector<std::string> symbolic;
  unsigned width = 32;
  std::size_t fuel = 10000;
  std::string input_form = "auto";
  std::string undef = "0";

  void attach(CLI::App *cmd) {
    cmd->add_option("--input", inputs, "Concrete parameter value, name=value (repeatable)")
        ->allow_extra_args(false);
    cmd->add_option("--decisions", decisions,
                    "Follow branch directions (T/F per branch) instead of concrete inputs; "
                    "every parameter is then symbolic");
    cmd->add_option("--symbolic", symbolic, "Parameters kept symbolic (comma separated)")
        ->allow_extra_args(false);
    cmd->add_option("--width", width, "Bit width")->check(CLI::Range(2, 64));
    cmd->add_option("--fuel", fuel, "Step limit");
    cmd->add_option("--form", input_form, "Input program form")
        ->check(CLI::IsMember({"auto", "raw", "ssa"}));
    cmd->add_option("--undef", undef, "Value of undef reads: an integer or random:<seed>");
  }

  MachineConfig machine() const {
    MachineConfig cfg;
    cfg.bit_width = width;
    if (undef.rfind("random:", 0) == 0)
      cfg.undef_policy = UndefPolicy::seeded_random(std::stoull(undef.substr(7)));
    else
      cfg.undef_policy = UndefPolicy::fixed(parse_word(undef, width));
    return cfg;
  }

  SsaInput form() const {
    return input_form == "raw" ? SsaInput::Raw
                               : input_form == "ssa" ? SsaInput::Ssa : SsaInput::Auto;
  }

  PathCondition walk(const std::string &path) const {
    SsaProgram ssa = to_ssa(load_program(path), form(), path);
    PathSpec spec;
    if (!decisions.empty()) {
      std::vector<bool> d;
      for (char c : decisions) {
        if (c != 'T' && c != 'F' && c != 't' && c != 'f' && c != '1' && c != '0')
          throw CLI::ValidationError("--decisions", "expected only T and F");
        d.push_back(c == 'T' || c == 't' || c == '1');
      }
      spec = PathSpec::decided(d, fuel);
    } else {
      std::map<std::string, Word> values;
      for (const auto &kv : inputs) {
        auto eq = kv.find('=');
        if (eq == std::string::npos)
          throw CLI::ValidationError("--input", "expected name=value, got '" + kv + "'");
        values[kv.substr(0, eq)] = parse_word(kv.substr(eq + 1), width);
      }
      spec = PathSpec::concrete(values, fuel);
    }
    return with_context(path,
                        [&] { return path_condition(ssa, spec, split_list(symbolic), machine()); });
  }
};

/// A path condition from a `.pc` file or, for programs, by walking one path.
inline PathCondition load_path(const std::string &path, const PathOptions &opts) {
  std::string text = read_file(path);
  std::size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text.compare(first, 5, "pc v1") == 0)
    return with_context(path, [&] { return read_pc(text); });
  return opts.walk(path);
}

/// A formula from an STP or SMT-LIB2 file, a `.pc` file, or a program.
inline Formula load_formula(const std::string &path, const PathOptions &opts) {
  std::string text = read_file(path);
  std::size_t first = text.find_first_not_of(" \t\r\n");
  bool pc = first != std::string::npos && text.compare(first, 5, "pc v1") == 0;
  bool ir = first != std::string::npos && (text.compare(first, 4, "func") == 0 || text[first] == '#');
  if (pc || ir)
    return with_context(path, [&] { return lower(load_path(path, opts)); });
  return with_context(path, [&] { return parse_query(text, detect_dialect(text)); });
}

inline std::string extension(Dialect d) { return d == Dialect::Stp ? ".stp" : ".smt2"; }

inline std::string print_marks(const SsaProgram &prog, const MarkMap &marks) {
  std::ostringstream os;
  std::size_t id = 0;
  for (const auto &b : prog.main().blocks) {
    os << b.label << ":\n";
    for (const auto &in : b.instructions) {
      std::string m(to_string(marks.at(id++)));
      os << "  " << m << std::string(m.size() < 10 ? 10 - m.size() : 1, ' ') << to_string(in)
         << "\n";
    }
  }
  return os.str();
}

} // namespace cli

inline int cli_main(int argc, const char *const *argv, std::ostream &out = std::cout,
                    std::ostream &err = std::cerr) {
  using namespace cli;
  CLI::App app{"pfq: path feasibility queries for a small SSA IR"};
  app.name("pfq");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  std::string file;
  std::vector<std::string> files;
  std::string output;
  PathOptions popts;

  // parse
  auto *parse = app.add_subcommand("parse", "Parse a program and print it in canonical form");
  parse->add_option("file", file, "Program (.mir)")->required();

  // ssa
  auto *ssa = app.add_subcommand("ssa", "Convert a program to SSA form");
  ssa->add_option("file", file, "Program (.mir)")->required();
  bool validate_only = false;
  ssa->add_flag("--validate", validate_only, "Check that the input already is in SSA form");

  // cva
  auto *cvac = app.add_subcommand("cva", "Change value analysis and undef rewriting");
  cvac->add_option("file", file, "Program (.mir)")->required();
  std::vector<std::string> seeds;
  cvac->add_option("-V,--vars", seeds, "Symbolic source variables (comma separated)")
      ->allow_extra_args(false)
      ->required();
  std::string mode = "conservative";
  cvac->add_option("--mode", mode, "Rewriting mode")
      ->check(CLI::IsMember({"conservative", "aggressive"}));
  bool marks_only = false;
  cvac->add_flag("--marks", marks_only, "Print the marking instead of the rewritten program");
  std::string form = "auto";
  cvac->add_option("--form", form, "Input program form")
      ->check(CLI::IsMember({"auto", "raw", "ssa"}));

  // opt
  auto *opt = app.add_subcommand("opt", "Run the cleanup pipeline");
  opt->add_option("file", file, "Program (.mir)")->required();
  std::string passes = "constprop,sccp-undef,dce,dse";
  opt->add_option("--passes", passes, "Comma separated passes");
  std::vector<std::string> opt_symbolic;
  opt->add_option("--symbolic", opt_symbolic, "Source variables kept symbolic")
      ->allow_extra_args(false);
  std::size_t max_rounds = 10;
  opt->add_option("--max-rounds", max_rounds, "Round limit");
  unsigned opt_width = 32;
  opt->add_option("--width", opt_width, "Bit width")->check(CLI::Range(2, 64));
  std::string undef_branch = "then";
  opt->add_option("--undef-branch", undef_branch, "Arm taken on a branch on undef")
      ->check(CLI::IsMember({"then", "else"}));
  opt->add_option("--form", form, "Input program form")
      ->check(CLI::IsMember({"auto", "raw", "ssa"}));

  // pathcond
  auto *pc = app.add_subcommand("pathcond", "Path condition of one execution (.pc format)");
  pc->add_option("file", file, "Program (.mir)")->required();
  popts.attach(pc);
  std::size_t enumerate = 0;
  pc->add_option("--enumerate", enumerate, "Print up to N paths, depth first");

  // emit
  auto *emitc = app.add_subcommand("emit", "Emit a path condition as a solver query");
  emitc->add_option("file", file, "Program (.mir) or path condition (.pc)")->required();
  std::string format = "smt2";
  emitc->add_option("--format", format, "Output dialect")->check(CLI::IsMember({"stp", "smt2"}));
  emitc->add_option("-o,--output", output, "Output file (default: stdout)");
  popts.attach(emitc);

  // convert
  auto *conv = app.add_subcommand("convert", "Convert a query between STP and SMT-LIB2");
  conv->add_option("file", file, "Query file")->required();
  std::string to, from;
  conv->add_option("--to", to, "Target dialect")->check(CLI::IsMember({"stp", "smt2"}));
  conv->add_option("--from", from, "Source dialect (default: detected)")
      ->check(CLI::IsMember({"stp", "smt2"}));
  conv->add_option("-o,--output", output, "Output file (default: stdout)");

  // split
  auto *split = app.add_subcommand("split", "Write prefix sections of a path condition");
  split->add_option("file", file, "Program (.mir) or path condition (.pc)")->required();
  std::size_t sections = 0;
  split->add_option("-k,--sections", sections, "Number of sections")->required();
  split->add_option("--format", format, "Output dialect")->check(CLI::IsMember({"stp", "smt2"}));
  std::string out_dir = ".";
  split->add_option("--out-dir", out_dir, "Directory for the section files");
  std::string stem;
  split->add_option("--name", stem, "File name stem (default: input stem)");
  popts.attach(split);

  // metrics
  auto *metrics = app.add_subcommand("metrics", "Size metrics of queries");
  metrics->add_option("files", files, "Query, .pc or program files");
  std::size_t ite = 0, store = 0;
  auto *ite_opt = metrics->add_option("--ite", ite, "IF-ENDIF count (ratio only)");
  auto *store_opt = metrics->add_option("--store", store, "Array write count (ratio only)");
  ite_opt->needs(store_opt);
  store_opt->needs(ite_opt);
  popts.attach(metrics);

  // solve
  auto *solve = app.add_subcommand("solve", "Decide a small query by exhaustive search");
  solve->add_option("file", file, "Query, .pc or program file")->required();
  BruteOptions bopts;
  solve->add_option("--width", bopts.width, "Bit width for the search")->check(CLI::Range(1, 6));
  solve->add_option("--cells", bopts.cells, "Array cells searched")->check(CLI::Range(0, 8));
  solve->add_option("--max-bits", bopts.max_bits, "Search space bound (log2)")
      ->check(CLI::Range(1, 32));

  // bench
  auto *bench = app.add_subcommand("bench", "Time external solvers on query files");
  bench->add_option("files", files, "Query files, in series order")->required();
  std::vector<std::string> solver_args;
  bench->add_option("--solver", solver_args,
                    "name[@dialect]=command with {file}, or a name resolved through "
                    "PFQ_SOLVER_<NAME> (repeatable)")
      ->allow_extra_args(false)
      ->required();
  BenchOptions bench_opts;
  bench->add_option("--reps", bench_opts.reps, "Runs per file and solver")
      ->check(CLI::PositiveNumber);
  double timeout = 60;
  bench->add_option("--timeout", timeout, "Seconds per run")->check(CLI::PositiveNumber);
  std::string csv;
  bench->add_option("--csv", csv, "CSV report (default: stdout)");
  std::string dat_dir;
  bench->add_option("--dat-dir", dat_dir, "Directory for plot data files");

  // demo-paper
  auto *demo = app.add_subcommand("demo-paper", "Run the loop example through the pipeline");
  demo->add_option("--fixture", file, "Use this SSA program instead of the bundled one");

  if (argc > 1 && argv[1][0] != '-') {
    bool known = false;
    for (const auto *sub : app.get_subcommands({}))
      known = known || sub->check_name(argv[1]);
    if (!known) {
      err << "pfq: unknown subcommand '" << argv[1] << "'\n\n" << app.help();
      return 1;
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp &e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError &e) {
    err << "pfq: " << e.what() << "\n\n";
    CLI::App *sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return 1;
  }

  try {
    if (*parse) {
      out << print_ir(load_program(file));
    } else if (*ssa) {
      Program p = load_program(file);
      if (validate_only) {
        auto v = validate_ssa(p);
        for (const auto &x : v)
          out << file << ": " << x.message << "\n";
        if (!v.empty())
          return 2;
        out << "ok\n";
      } else {
        out << print_ir(with_context(file, [&] { return build_ssa(p).program; }));
      }
    } else if (*cvac) {
      PathOptions f;
      f.input_form = form;
      SsaProgram s = to_ssa(load_program(file), f.form(), file);
      CvaConfig cfg{split_list(seeds),
                    mode == "aggressive" ? CvaMode::Aggressive : CvaMode::Conservative};
      if (marks_only)
        out << print_marks(s, with_context(file, [&] { return mark_fixpoint(s, cfg); }));
      else
        out << print_ir(with_context(file, [&] { return cva(s, cfg); }).program);
    } else if (*opt) {
      PathOptions f;
      f.input_form = form;
      SsaProgram s = to_ssa(load_program(file), f.form(), file);
      PassPipeline pl;
      pl.passes = parse_pass_list(passes);
      pl.max_rounds = max_rounds;
      pl.bit_width = opt_width;
      pl.symbolic = split_list(opt_symbolic);
      pl.undef_branch = undef_branch == "else" ? UndefBranch::Else : UndefBranch::Then;
      PipelineResult r = with_context(file, [&] { return run_pipeline(s, pl); });
      out << print_ir(r.program.program);
      err << "rounds: " << r.rounds << (r.converged ? "" : " (not converged)") << "\n";
    } else if (*pc) {
      if (enumerate > 0) {
        SsaProgram s = to_ssa(load_program(file), popts.form(), file);
        for (const auto &p :
             with_context(file, [&] { return enumerate_paths(s, enumerate, popts.fuel, popts.machine()); }))
          out << write_pc(p);
      } else {
        out << write_pc(popts.walk(file));
      }
    } else if (*emitc) {
      std::string text = emit(lower(load_path(file, popts)), parse_dialect(format));
      if (output.empty())
        out << text;
      else
        write_file(output, text);
    } else if (*conv) {
      std::string text = read_file(file);
      Dialect src = from.empty() ? detect_dialect(text) : parse_dialect(from);
      Dialect dst = to.empty() ? (src == Dialect::Stp ? Dialect::Smtlib2 : Dialect::Stp)
                               : parse_dialect(to);
      std::string result = with_context(file, [&] { return convert(text, src, dst); });
      if (output.empty())
        out << result;
      else
        write_file(output, result);
    } else if (*split) {
      PathCondition p = load_path(file, popts);
      PrefixSeries series = with_context(file, [&] { return split_prefixes(p, sections); });
      Dialect d = parse_dialect(format);
      std::string base = stem.empty() ? std::filesystem::path(file).stem().string() : stem;
      std::filesystem::create_directories(out_dir);
      for (std::size_t i = 0; i < series.sections.size(); ++i) {
        std::filesystem::path target =
            std::filesystem::path(out_dir) / (base + "_" + std::to_string(i + 1) + extension(d));
        write_file(target.string(), emit(series.sections[i], d));
        out << "section " << i + 1 << ": " << series.sizes[i] << " conjuncts -> "
            << target.string() << "\n";
      }
    } else if (*metrics) {
      if (*ite_opt) {
        std::string r = format_ratio(ite, store);
        out << "ratio " << (r.empty() ? "absent" : r) << "\n";
        return 0;
      }
      if (files.empty())
        throw CLI::RequiredError("files");
      out << "file,lines_stp,lines_smt2,conjuncts,ite,store,ratio\n";
      for (const auto &f : files) {
        Formula formula = load_formula(f, popts);
        QueryMetrics m = query_metrics(formula);
        out << csv_field(f) << "," << m.lines_stp << "," << m.lines_smt2 << ","
            << formula.assertions.size() << "," << m.ite_count << "," << m.store_count << ","
            << format_ratio(m.ite_count, m.store_count) << "\n";
      }
    } else if (*solve) {
      Formula f = load_formula(file, popts);
      BruteResult r = with_context(file, [&] { return brute_solve(f, bopts); });
      out << (r.sat ? "sat" : "unsat") << "\n";
      if (r.sat) {
        for (const auto &[name, value] : r.model.values)
          out << "  " << name << " = " << value << "\n";
        for (const auto &[addr, value] : r.model.memory)
          out << "  " << kMemoryArray << "[" << addr << "] = " << value << "\n";
      }
      err << "assignments: " << r.assignments << "\n";
    } else if (*bench) {
      std::vector<SolverSpec> solvers;
      for (const auto &s : solver_args)
        solvers.push_back(parse_solver_spec(s, timeout));
      auto records = run_bench(files, solvers, bench_opts);
      for (const auto &r : records)
        if (!r.error.empty())
          err << "pfq: " << r.formula_name << " (" << r.solver << "): " << r.error << "\n";
      std::string report = report_csv(records);
      if (csv.empty())
        out << report;
      else
        write_file(csv, report);
      if (!dat_dir.empty()) {
        std::filesystem::create_directories(dat_dir);
        for (const auto &[name, text] : report_dat(records))
          write_file((std::filesystem::path(dat_dir) / name).string(), text);
      }
    } else if (*demo) {
      std::string source = file.empty() ? std::string(kPaperExampleSsa) : read_file(file);
      PaperDemo d = with_context(file.empty() ? "<bundled>" : file,
                                 [&] { return run_paper_demo(source); });
      out << "conjuncts(original) = " << d.original << "\n";
      out << "conjuncts(after-dce) = " << d.after_dce << "\n";
      out << "conjuncts(after-cva+opt) = " << d.after_cva_opt << "\n\n";
      out << "; cva, V = {i}, conservative\n" << print_ir(d.starred.program) << "\n";
      out << "; after constprop, sccp-undef, dce, dse\n" << print_ir(d.optimized.program) << "\n";
      out << "; final query\n" << emit_smtlib2(lower(d.query));
    }
  } catch (const CLI::ParseError &e) {
    err << "pfq: " << e.what() << "\n";
    return 1;
  } catch (const Error &e) {
    err << "pfq: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error &e) {
    err << "pfq: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

} // namespace pfq
