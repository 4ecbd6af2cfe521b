// pfq/bench.hpp - timing external solvers on query files.
//
// Every (file, solver) pair is run `reps` times, one invocation at a time, and
// the median wall-clock time is reported. Diffs between consecutive queries of
// one series (a program's prefix sequence) are derived from those medians.
#pragma once

#include "pfq/query.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdlib>
#include <cstring>
#include <fcntl.h>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <poll.h>
#include <sstream>
#include <string>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

namespace pfq {

struct SolverSpec {
  std::string name;
  std::string command_template; // exactly one {file}
  double timeout = 60.0;        // seconds
  std::optional<Dialect> dialect; // input dialect; files are converted if needed

  static constexpr std::string_view kPlaceholder = "{file}";

  void validate() const {
    if (name.empty())
      throw Error("solver name is empty");
    if (count_substr(command_template, kPlaceholder) != 1)
      throw Error("solver '" + name + "': command template must contain exactly one {file}");
    if (!(timeout > 0))
      throw Error("solver '" + name + "': timeout must be positive");
  }

  /// The command for `file`, single-quoted for /bin/sh.
  std::string command(const std::string &file) const {
    std::string quoted = "'";
    for (char c : file)
      quoted += c == '\'' ? std::string("'\\''") : std::string(1, c);
    quoted += "'";
    std::string cmd = command_template;
    cmd.replace(cmd.find(kPlaceholder), kPlaceholder.size(), quoted);
    return cmd;
  }
};

/// `PFQ_SOLVER_<NAME>` with the name upper-cased and '-' mapped to '_'.
inline std::string solver_env_var(std::string_view name) {
  std::string var = "PFQ_SOLVER_";
  for (char c : name)
    var += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return var;
}

/// Parses `name[@dialect]=template`, or a bare `name[@dialect]` whose
/// template comes from the environment. With a dialect, input files in the
/// other dialect are converted before the solver sees them.
inline SolverSpec parse_solver_spec(std::string_view text, double timeout = 60.0) {
  SolverSpec s;
  s.timeout = timeout;
  auto eq = text.find('=');
  std::string_view head = text.substr(0, eq);
  if (auto at = head.find('@'); at != std::string_view::npos) {
    s.dialect = parse_dialect(head.substr(at + 1));
    head = head.substr(0, at);
  }
  s.name = std::string(head);
  if (eq == std::string_view::npos) {
    const char *env = std::getenv(solver_env_var(s.name).c_str());
    if (!env)
      throw Error("solver '" + s.name + "' has no command; pass " + s.name +
                  "=<template> or set " + solver_env_var(s.name));
    s.command_template = env;
  } else {
    s.command_template = std::string(text.substr(eq + 1));
  }
  s.validate();
  return s;
}

enum class Verdict : std::uint8_t { Sat, Unsat, Unknown, Timeout, Error };

inline std::string_view to_string(Verdict v) {
  switch (v) {
  case Verdict::Sat:
    return "sat";
  case Verdict::Unsat:
    return "unsat";
  case Verdict::Unknown:
    return "unknown";
  case Verdict::Timeout:
    return "timeout";
  case Verdict::Error:
    return "error";
  }
  return "error";
}

/// First verdict token on stdout. STP answers a QUERY(FALSE) with "Invalid."
/// when the assertions are satisfiable and "Valid." when they are not.
inline Verdict parse_verdict(std::string_view out) {
  std::size_t i = 0;
  while (i < out.size()) {
    while (i < out.size() && !std::isalpha(static_cast<unsigned char>(out[i])))
      ++i;
    std::size_t j = i;
    while (j < out.size() && (std::isalnum(static_cast<unsigned char>(out[j])) || out[j] == '-'))
      ++j;
    std::string_view tok = out.substr(i, j - i);
    if (tok == "sat" || tok == "Invalid")
      return Verdict::Sat;
    if (tok == "unsat" || tok == "Valid")
      return Verdict::Unsat;
    if (tok == "unknown")
      return Verdict::Unknown;
    if (tok == "timeout")
      return Verdict::Timeout;
    i = j;
  }
  return Verdict::Unknown;
}

struct RunOutcome {
  int exit_code = -1;
  std::string output;
  double seconds = 0;
  bool timed_out = false;
  std::optional<long> peak_rss_kb;
};

/// Runs `command` through /bin/sh, capturing stdout. The process group is
/// killed once `timeout` seconds have passed.
inline RunOutcome run_command(const std::string &command, double timeout) {
  int fds[2];
  if (pipe(fds) != 0)
    throw Error(std::string("pipe: ") + std::strerror(errno));
  auto start = std::chrono::steady_clock::now();
  pid_t pid = fork();
  if (pid < 0) {
    close(fds[0]);
    close(fds[1]);
    throw Error(std::string("fork: ") + std::strerror(errno));
  }
  if (pid == 0) {
    setpgid(0, 0);
    dup2(fds[1], STDOUT_FILENO);
    close(fds[0]);
    close(fds[1]);
    int devnull = ::open("/dev/null", O_WRONLY);
    if (devnull >= 0)
      dup2(devnull, STDERR_FILENO);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char *>(nullptr));
    _exit(127);
  }
  setpgid(pid, pid);
  close(fds[1]);

  RunOutcome r;
  auto deadline = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                              std::chrono::duration<double>(timeout));
  char buf[4096];
  for (;;) {
    auto now = std::chrono::steady_clock::now();
    if (now >= deadline) {
      r.timed_out = true;
      break;
    }
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
    pollfd p{fds[0], POLLIN, 0};
    int rc = poll(&p, 1, static_cast<int>(std::min<long long>(left + 1, 1000)));
    if (rc < 0 && errno != EINTR)
      break;
    if (rc <= 0)
      continue;
    ssize_t n = read(fds[0], buf, sizeof buf);
    if (n <= 0)
      break;
    r.output.append(buf, static_cast<std::size_t>(n));
  }
  close(fds[0]);

  // stdout may close before the process exits, so keep the deadline while
  // waiting for it.
  int status = 0;
  rusage usage{};
  for (;;) {
    if (!r.timed_out && std::chrono::steady_clock::now() >= deadline)
      r.timed_out = true;
    if (r.timed_out) {
      kill(-pid, SIGKILL);
      while (wait4(pid, &status, 0, &usage) < 0 && errno == EINTR) {
      }
      break;
    }
    pid_t done = wait4(pid, &status, WNOHANG, &usage);
    if (done == pid || (done < 0 && errno != EINTR))
      break;
    usleep(200);
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (WIFEXITED(status))
    r.exit_code = WEXITSTATUS(status);
  else if (WIFSIGNALED(status))
    r.exit_code = 128 + WTERMSIG(status);
  if (usage.ru_maxrss > 0)
    r.peak_rss_kb = usage.ru_maxrss;
  return r;
}

struct BenchRecord {
  std::string formula_name;
  std::string series; // records of one series are consecutive prefixes
  std::string solver;
  std::size_t lines = 0;
  std::size_t conjuncts = 0;
  std::size_t ite_count = 0;
  std::size_t store_count = 0;
  std::string ratio; // three decimals, empty when there are no stores
  std::size_t reps = 0;
  std::vector<double> times;
  double reported_time = 0;
  Verdict verdict = Verdict::Unknown;
  std::string error;
  std::optional<long> peak_rss_kb;
};

inline double median(std::vector<double> v) {
  if (v.empty())
    return 0;
  std::sort(v.begin(), v.end());
  std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : (v[m - 1] + v[m]) / 2;
}

/// "dir/l1list_tr1_3.stp" belongs to series "l1list_tr1".
inline std::string series_of(const std::string &path) {
  std::string stem = std::filesystem::path(path).stem().string();
  auto us = stem.find_last_of('_');
  if (us != std::string::npos && us + 1 < stem.size() &&
      std::all_of(stem.begin() + static_cast<long>(us) + 1, stem.end(),
                  [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
    return stem.substr(0, us);
  return stem;
}

struct BenchOptions {
  std::size_t reps = 5;
  /// Where converted copies of the inputs go when a solver wants the other
  /// dialect. Defaults to a fresh directory under the system temp dir.
  std::filesystem::path scratch;
};

/// Sizes of a query file: metrics of the formula it holds, measured in the
/// file's own dialect for `lines`.
inline BenchRecord describe_query(const std::string &path, const std::string &text) {
  Dialect d = detect_dialect(text);
  Formula f = parse_query(text, d);
  QueryMetrics m = query_metrics(f);
  BenchRecord r;
  r.formula_name = std::filesystem::path(path).filename().string();
  r.series = series_of(path);
  r.lines = count_lines(text);
  r.conjuncts = f.assertions.size();
  r.ite_count = m.ite_count;
  r.store_count = m.store_count;
  r.ratio = format_ratio(m.ite_count, m.store_count);
  return r;
}

inline std::vector<BenchRecord> run_bench(const std::vector<std::string> &files,
                                          const std::vector<SolverSpec> &solvers,
                                          const BenchOptions &opts = {}) {
  if (opts.reps == 0)
    throw Error("reps must be at least 1");
  for (const auto &s : solvers)
    s.validate();
  std::filesystem::path scratch = opts.scratch;
  std::vector<BenchRecord> out;
  for (const auto &file : files) {
    std::ifstream in(file, std::ios::binary);
    if (!in)
      throw Error("cannot read '" + file + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    std::string text = ss.str();
    BenchRecord base = describe_query(file, text);
    Dialect own = detect_dialect(text);

    for (const auto &solver : solvers) {
      BenchRecord r = base;
      r.solver = solver.name;
      r.reps = opts.reps;
      std::string input = file;
      if (solver.dialect && *solver.dialect != own) {
        if (scratch.empty()) {
          scratch = std::filesystem::temp_directory_path() /
                    ("pfq-bench-" + std::to_string(getpid()));
        }
        std::filesystem::create_directories(scratch);
        std::filesystem::path conv =
            scratch / (std::filesystem::path(file).stem().string() +
                       (*solver.dialect == Dialect::Stp ? ".stp" : ".smt2"));
        std::ofstream(conv) << convert(text, own, *solver.dialect);
        input = conv.string();
      }
      std::string cmd = solver.command(input);
      for (std::size_t i = 0; i < opts.reps; ++i) {
        RunOutcome o = run_command(cmd, solver.timeout);
        r.times.push_back(o.seconds);
        if (o.peak_rss_kb)
          r.peak_rss_kb = std::max(r.peak_rss_kb.value_or(0), *o.peak_rss_kb);
        if (o.timed_out) {
          r.verdict = Verdict::Timeout;
        } else if (o.exit_code == 127) {
          r.verdict = Verdict::Error;
          r.error = "solver not found: " + cmd;
        } else {
          Verdict v = parse_verdict(o.output);
          if (v == Verdict::Unknown && o.exit_code != 0 && o.exit_code != 10 &&
              o.exit_code != 20) {
            r.verdict = Verdict::Error;
            r.error = "exit status " + std::to_string(o.exit_code);
          } else {
            r.verdict = v;
          }
        }
        if (r.verdict == Verdict::Error)
          break; // the remaining reps would fail the same way
      }
      r.reps = r.times.size();
      r.reported_time = median(r.times);
      out.push_back(std::move(r));
    }
  }
  return out;
}

/// Seconds with `decimals` places, rounded half away from zero. Never
/// prints a negative zero.
inline std::string format_seconds(double s, int decimals = 3) {
  double scale = std::pow(10.0, decimals);
  long long units = std::llround(s * scale);
  std::string sign = units < 0 ? "-" : "";
  unsigned long long a = static_cast<unsigned long long>(units < 0 ? -units : units);
  unsigned long long whole = a / static_cast<unsigned long long>(scale);
  std::string frac = std::to_string(a % static_cast<unsigned long long>(scale));
  if (decimals == 0)
    return sign + std::to_string(whole);
  return sign + std::to_string(whole) + "." +
         std::string(static_cast<std::size_t>(decimals) - frac.size(), '0') + frac;
}

struct DiffTable {
  std::vector<BenchRecord> rows;
  std::vector<std::optional<double>> time_diff; // empty for the first row
};

/// Diffs of consecutive reported times. All records must share one solver
/// and one series.
inline DiffTable diff_table(std::vector<BenchRecord> records) {
  if (records.size() < 2)
    throw Error("a diff table needs at least 2 records, got " + std::to_string(records.size()));
  for (const auto &r : records)
    if (r.solver != records.front().solver || r.series != records.front().series)
      throw Error("diff table records must share one solver and one series");
  DiffTable t;
  t.time_diff.push_back(std::nullopt);
  for (std::size_t i = 1; i < records.size(); ++i)
    t.time_diff.push_back(records[i].reported_time - records[i - 1].reported_time);
  t.rows = std::move(records);
  return t;
}

inline DiffTable diff_table(const std::vector<double> &times) {
  std::vector<BenchRecord> rs;
  for (std::size_t i = 0; i < times.size(); ++i) {
    BenchRecord r;
    r.formula_name = "q" + std::to_string(i + 1);
    r.times = {times[i]};
    r.reps = 1;
    r.reported_time = times[i];
    rs.push_back(std::move(r));
  }
  return diff_table(std::move(rs));
}

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos)
    return std::string(s);
  std::string out = "\"";
  for (char c : s)
    out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

inline constexpr std::string_view kCsvHeader =
    "name,solver,lines,conjuncts,ite,store,ratio,time,time_diff,verdict";

/// One row per record in the given order. time_diff is left blank on the
/// first record of each (series, solver) run of consecutive records.
inline std::string report_csv(const std::vector<BenchRecord> &records, int decimals = 6) {
  std::string out = std::string(kCsvHeader) + "\r\n";
  std::map<std::pair<std::string, std::string>, double> last;
  for (const auto &r : records) {
    auto key = std::make_pair(r.series, r.solver);
    auto it = last.find(key);
    std::string diff = it == last.end() ? "" : format_seconds(r.reported_time - it->second, decimals);
    last[key] = r.reported_time;
    std::vector<std::string> fields = {r.formula_name,
                                       r.solver,
                                       std::to_string(r.lines),
                                       std::to_string(r.conjuncts),
                                       std::to_string(r.ite_count),
                                       std::to_string(r.store_count),
                                       r.ratio,
                                       format_seconds(r.reported_time, decimals),
                                       diff,
                                       std::string(to_string(r.verdict))};
    for (std::size_t i = 0; i < fields.size(); ++i)
      out += (i ? "," : "") + csv_field(fields[i]);
    out += "\r\n";
  }
  return out;
}

/// Plot data, one file per (series, solver): columns lines, time, time_diff.
/// Returns file name -> contents.
inline std::map<std::string, std::string> report_dat(const std::vector<BenchRecord> &records,
                                                     int decimals = 6) {
  std::map<std::pair<std::string, std::string>, std::vector<const BenchRecord *>> groups;
  std::vector<std::pair<std::string, std::string>> order;
  for (const auto &r : records) {
    auto key = std::make_pair(r.series, r.solver);
    if (!groups.count(key))
      order.push_back(key);
    groups[key].push_back(&r);
  }
  std::map<std::string, std::string> out;
  for (const auto &key : order) {
    std::string text = "# " + key.first + " (" + key.second + ")\n# lines time time_diff\n";
    const auto &rs = groups[key];
    for (std::size_t i = 0; i < rs.size(); ++i) {
      text += std::to_string(rs[i]->lines) + " " + format_seconds(rs[i]->reported_time, decimals) +
              " " +
              (i ? format_seconds(rs[i]->reported_time - rs[i - 1]->reported_time, decimals)
                 : std::string("-")) +
              "\n";
    }
    out[key.first + "." + key.second + ".dat"] = text;
  }
  return out;
}

} // namespace pfq
