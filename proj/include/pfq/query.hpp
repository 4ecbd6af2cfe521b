// pfq/query.hpp - dialect detection, conversion and metrics of emitted queries.
#pragma once

#include "pfq/smtlib2.hpp"
#include "pfq/stp.hpp"

#include <cctype>

namespace pfq {

enum class Dialect : std::uint8_t { Stp, Smtlib2 };

inline std::string_view to_string(Dialect d) { return d == Dialect::Stp ? "stp" : "smt2"; }

inline Dialect parse_dialect(std::string_view s) {
  if (s == "stp")
    return Dialect::Stp;
  if (s == "smt2" || s == "smtlib2" || s == "smt-lib2")
    return Dialect::Smtlib2;
  throw Error("unknown dialect '" + std::string(s) + "' (expected stp or smt2)");
}

/// Guesses the dialect from the first meaningful character: SMT-LIB2 scripts
/// start with '(' once comments are skipped.
inline Dialect detect_dialect(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (c == ';' || c == '%') {
      while (i < text.size() && text[i] != '\n')
        ++i;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else {
      return c == '(' ? Dialect::Smtlib2 : Dialect::Stp;
    }
  }
  return Dialect::Stp;
}

inline std::string emit(const Formula &f, Dialect d) {
  return d == Dialect::Stp ? emit_stp(f) : emit_smtlib2(f);
}

inline Formula parse_query(std::string_view text, Dialect d) {
  return d == Dialect::Stp ? parse_stp(text) : parse_smtlib2(text);
}

inline std::string convert(std::string_view text, Dialect from, Dialect to) {
  return emit(parse_query(text, from), to);
}

/// Metrics of a formula as emitted in both dialects. ite and store counts are
/// taken from the STP text (ENDIF and WITH occurrences); they agree with the
/// term structure by construction.
inline QueryMetrics query_metrics(const Formula &f) {
  std::string stp = emit_stp(f);
  std::string smt2 = emit_smtlib2(f);
  QueryMetrics m;
  m.lines_stp = count_lines(stp);
  m.lines_smt2 = count_lines(smt2);
  m.ite_count = count_substr(stp, "ENDIF");
  m.store_count = count_substr(stp, " WITH [");
  m.ratio = ite_store_ratio(m.ite_count, m.store_count);
  return m;
}

} // namespace pfq
