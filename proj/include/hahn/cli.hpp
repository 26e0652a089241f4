#pragma once

#include <cstdint>
#include <cstdlib>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hahn/format.hpp"

namespace hahn::cli {

// A job is a semicolon-separated list of statements:
//
//   field 2^1; roots x^2 + x + t^-1; window 2 10; bounds 4 4; budget 4096;
//   format text; seed 0
//
// `field` and exactly one command statement (`roots`, `as-solve`, `certify`,
// `eval`) are required; everything else has defaults. The same job can be
// assembled from argv: `hahnroots roots 'x^2 + x + t^-1' --field 2^1
// --window 2,10`. HAHNROOTS_FIELD supplies the field when no statement or
// flag does.

enum class Command { Roots, AsSolve, Certify, Eval };
enum class OutputFormat { Text, JsonLike };

inline const char* command_name(Command c) {
  switch (c) {
    case Command::Roots: return "roots";
    case Command::AsSolve: return "as-solve";
    case Command::Certify: return "certify";
    case Command::Eval: return "eval";
  }
  return "?";
}

inline const char* format_name(OutputFormat f) {
  return f == OutputFormat::Text ? "text" : "json-like";
}

// Fully canonicalized job: printing and reparsing is the identity, and equal
// jobs run identically.
struct JobSpec {
  std::string field;  // p^d, with :c0,...,cd appended for a non-canonical modulus
  Command command = Command::Roots;
  std::string input;
  std::string window_r = "2";
  int64_t window_E = 8;
  int64_t period_M = 4;
  int64_t period_N = 4;
  int64_t budget = 4096;
  OutputFormat format = OutputFormat::Text;
  uint64_t seed = 0;

  bool operator==(const JobSpec&) const = default;
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  return out;
}

// Leading whitespace-delimited word and the trimmed remainder.
inline std::pair<std::string, std::string> split_head(const std::string& s) {
  std::string t = trim(s);
  size_t sp = 0;
  while (sp < t.size() && !std::isspace(static_cast<unsigned char>(t[sp]))) ++sp;
  return {t.substr(0, sp), trim(t.substr(sp))};
}

inline int64_t parse_int_word(const std::string& w, const char* what) {
  try {
    size_t used = 0;
    int64_t v = std::stoll(w, &used);
    if (used != w.size()) throw std::invalid_argument(w);
    return v;
  } catch (const std::exception&) {
    fail(Errc::SyntaxError, std::string("malformed ") + what + ": " + w);
  }
  return 0;
}

inline uint64_t parse_uint_word(const std::string& w, const char* what) {
  try {
    size_t used = 0;
    uint64_t v = std::stoull(w, &used);
    if (used != w.size()) throw std::invalid_argument(w);
    return v;
  } catch (const std::exception&) {
    fail(Errc::SyntaxError, std::string("malformed ") + what + ": " + w);
  }
  return 0;
}

}  // namespace detail

inline std::string canonical_field_text(const Field& f) {
  std::string full = f.to_string();
  if (Field::gf(f.p(), f.d()).modulus() == f.modulus()) return full.substr(0, full.find(':'));
  return full;
}

inline JobSpec parse_input(const std::string& text) {
  JobSpec job;
  std::optional<std::string> field_text;
  std::optional<Command> command;
  std::string input;
  std::string window_r = job.window_r;

  for (const std::string& raw : detail::split(text, ';')) {
    if (detail::trim(raw).empty()) continue;
    auto [head, rest] = detail::split_head(raw);
    if (head == "field") {
      field_text = rest;
    } else if (head == "roots" || head == "as-solve" || head == "certify" || head == "eval") {
      if (command) fail(Errc::SyntaxError, "job has more than one command statement");
      command = head == "roots"      ? Command::Roots
                : head == "as-solve" ? Command::AsSolve
                : head == "certify"  ? Command::Certify
                                     : Command::Eval;
      input = rest;
    } else if (head == "window") {
      auto words = detail::split_head(rest);
      if (words.first.empty() || words.second.empty())
        fail(Errc::SyntaxError, "window takes an exponent bound and a depth");
      window_r = words.first;
      job.window_E = detail::parse_int_word(words.second, "window depth");
    } else if (head == "bounds") {
      auto words = detail::split_head(rest);
      if (words.first.empty() || words.second.empty())
        fail(Errc::SyntaxError, "bounds takes a period and a prefix length");
      job.period_M = detail::parse_int_word(words.first, "period bound");
      job.period_N = detail::parse_int_word(words.second, "prefix bound");
    } else if (head == "budget") {
      job.budget = detail::parse_int_word(rest, "budget");
    } else if (head == "format") {
      if (rest == "text")
        job.format = OutputFormat::Text;
      else if (rest == "json-like")
        job.format = OutputFormat::JsonLike;
      else
        fail(Errc::SyntaxError, "format must be text or json-like: " + rest);
    } else if (head == "seed") {
      job.seed = detail::parse_uint_word(rest, "seed");
    } else {
      fail(Errc::SyntaxError, "unknown statement '" + head + "'");
    }
  }

  if (!field_text) fail(Errc::SyntaxError, "job needs a field statement");
  if (!command) fail(Errc::SyntaxError, "job needs one of roots, as-solve, certify, eval");
  if (job.window_E < 0) fail(Errc::InvalidArgument, "window depth must be >= 0");
  if (job.period_M < 1 || job.period_N < 0)
    fail(Errc::InvalidArgument, "period bounds need M >= 1, N >= 0");
  if (job.budget < 1) fail(Errc::InvalidArgument, "budget must be positive");

  Field f = Field::parse(*field_text);
  job.field = canonical_field_text(f);
  job.command = *command;
  job.window_r = ExpQ::parse(f.p(), window_r).to_string();
  switch (job.command) {
    case Command::Roots:
      job.input = format::print_poly_expr(format::parse_poly_expr(f, input));
      break;
    case Command::AsSolve:
    case Command::Eval:
      job.input = format::print_series_expr(format::parse_series_expr(f, input));
      break;
    case Command::Certify:
      job.input = format::print_certify_spec(format::parse_certify_spec(f, input));
      break;
  }
  return job;
}

inline std::string print_job(const JobSpec& job) {
  std::ostringstream os;
  os << "field " << job.field << "; " << command_name(job.command) << " " << job.input
     << "; window " << job.window_r << " " << job.window_E << "; bounds " << job.period_M << " "
     << job.period_N << "; budget " << job.budget << "; format " << format_name(job.format)
     << "; seed " << job.seed;
  return os.str();
}

namespace detail {

inline void json_terms(format::JsonWriter& w, const std::vector<std::pair<ExpQ, Fq>>& terms) {
  w.begin_array();
  for (const auto& [e, c] : terms)
    w.begin_array().value(e.to_string()).value(c.to_string()).end_array();
  w.end_array();
}

inline void json_verification(format::JsonWriter& w, const VerifyReport& ver) {
  w.begin_object();
  w.key("clean").value(ver.clean());
  w.key("exhaustive").value(ver.exhaustive);
  w.key("terms");
  json_terms(w, ver.window.terms);
  w.end_object();
}

inline void json_job_header(format::JsonWriter& w, const JobSpec& job) {
  w.key("job").value(print_job(job));
  w.key("command").value(command_name(job.command));
  w.key("field").value(job.field);
  w.key("window").begin_object();
  w.key("r").value(job.window_r);
  w.key("E").value(job.window_E);
  w.end_object();
}

inline int run_roots(const JobSpec& job, const Field& f, const ExpQ& r,
                     const DetectBounds& bounds, std::ostream& out) {
  SeriesPoly P = make_poly(f, format::parse_poly_expr(f, job.input));
  ExpandJob ej{r, job.window_E};
  ej.period_bounds = bounds;
  ej.max_steps = job.budget;
  ExpandOutcome outcome;
  if (auto fast = as_fast_path(P, ej))
    outcome.roots = std::move(*fast);
  else
    outcome = expand_root(P, ej);

  bool verified = outcome.blocked.empty();
  for (const RootResult& res : outcome.roots)
    if (!res.verification.clean()) verified = false;
  const char* status = verified ? "verified" : "unverified";

  if (job.format == OutputFormat::JsonLike) {
    format::JsonWriter w;
    w.begin_object();
    json_job_header(w, job);
    w.key("roots").begin_array();
    for (const RootResult& res : outcome.roots) {
      Window win = materialize(res.series, res.window_r, res.window_E);
      w.begin_object();
      w.key("terms");
      json_terms(w, win.terms);
      w.key("cert").value(res.series.cert().to_string());
      if (res.tr) w.key("period").value(res.tr->period.to_string());
      w.key("twist_down").value(res.twist_down);
      w.key("multiplicity").value(res.multiplicity);
      w.key("status").value(root_status_name(res.status));
      w.key("verification");
      json_verification(w, res.verification);
      w.end_object();
    }
    w.end_array();
    w.key("blocked").begin_array();
    for (const BlockedBranch& b : outcome.blocked) {
      w.begin_object();
      w.key("partial");
      json_terms(w, b.partial.terms);
      w.key("missing").value(b.missing);
      w.key("required_degree").value(b.required_degree);
      w.end_object();
    }
    w.end_array();
    w.key("status").value(status);
    w.end_object();
    out << w.str() << "\n";
  } else {
    out << "job: " << print_job(job) << "\n";
    out << "roots: " << outcome.roots.size() << "\n";
    for (size_t i = 0; i < outcome.roots.size(); ++i)
      out << "root " << i + 1 << ": " << root_result_to_string(outcome.roots[i]) << "\n";
    for (size_t i = 0; i < outcome.blocked.size(); ++i)
      out << "blocked " << i + 1 << ": missing=" << outcome.blocked[i].missing
          << " required_degree=" << outcome.blocked[i].required_degree
          << " partial=" << outcome.blocked[i].partial.to_string() << "\n";
    out << "status: " << status << "\n";
  }
  return verified ? 0 : 2;
}

inline int run_as_solve(const JobSpec& job, const Field& f, const ExpQ& r,
                        std::ostream& out) {
  Series y = format::parse_series_expr(f, job.input);
  Series x0 = as_solve(y);

  // x0 solves x^p - x = y; verify through that polynomial on the window.
  std::vector<Series> coeffs(size_t(f.p()) + 1, Series::from_terms(f, {}));
  coeffs[0] = negate(y);
  coeffs[1] = Series::from_terms(f, {{ExpQ(f.p(), 0), -f.one()}});
  coeffs[size_t(f.p())] = Series::from_terms(f, {{ExpQ(f.p(), 0), f.one()}});
  VerifyReport ver = verify_root(make_poly(f, std::move(coeffs)), x0, r, job.window_E);
  const char* status = ver.clean() ? "verified" : "unverified";
  Window win = materialize(x0, r, job.window_E);

  if (job.format == OutputFormat::JsonLike) {
    format::JsonWriter w;
    w.begin_object();
    json_job_header(w, job);
    w.key("solution").begin_object();
    w.key("terms");
    json_terms(w, win.terms);
    w.key("cert").value(x0.cert().to_string());
    w.end_object();
    w.key("orbit_size").value(f.p());
    w.key("verification");
    json_verification(w, ver);
    w.key("status").value(status);
    w.end_object();
    out << w.str() << "\n";
  } else {
    out << "job: " << print_job(job) << "\n";
    out << "solution: " << win.to_string() << " | cert: " << x0.cert().to_string() << "\n";
    out << "orbit: solution + c for each of the " << f.p() << " scalars c\n";
    out << "verify(r=" << r.to_string() << ",E=" << job.window_E
        << "): " << (ver.clean() ? "clean" : ver.window.to_string()) << "\n";
    out << "status: " << status << "\n";
  }
  return ver.clean() ? 0 : 2;
}

inline int run_certify(const JobSpec& job, const Field& f, const ExpQ& r,
                       const DetectBounds& bounds, std::ostream& out) {
  Series s = format::parse_certify_spec(f, job.input);
  std::optional<TRSeries> det = detect_tr(s, bounds);
  std::string status = "not-found";
  std::optional<Witness> witness;
  if (det) {
    try {
      witness = algebraicity_witness(*det, bounds, r, job.window_E);
      status = "verified";
    } catch (const Error& e) {
      if (e.code() != Errc::PeriodUnverified) throw;
      status = "unverified";
    }
  }

  if (job.format == OutputFormat::JsonLike) {
    format::JsonWriter w;
    w.begin_object();
    json_job_header(w, job);
    if (det) {
      w.key("period").value(det->period.to_string());
      w.key("cert").value(det->cert.to_string());
      w.key("tail").value(det->tail == TailMode::AllZero ? "all-zero" : "periodic-in-m");
    }
    if (witness) {
      w.key("chain").begin_array();
      for (const WitnessStep& step : witness->chain) {
        w.begin_object();
        w.key("order").value(step.spec.order());
        w.key("cert").value(step.cert.to_string());
        w.end_object();
      }
      w.end_array();
      w.key("terminal");
      json_terms(w, witness->terminal.terms);
      if (witness->terminal_spec) w.key("terminal_order").value(witness->terminal_spec->order());
    }
    w.key("status").value(status);
    w.end_object();
    out << w.str() << "\n";
  } else {
    out << "job: " << print_job(job) << "\n";
    if (det) out << "detected: " << tr_to_string(*det) << "\n";
    if (witness) {
      for (size_t i = 0; i < witness->chain.size(); ++i)
        out << "chain " << i + 1 << ": order=" << witness->chain[i].spec.order()
            << " cert=" << witness->chain[i].cert.to_string() << "\n";
      out << "terminal: " << witness->terminal.to_string() << "\n";
      if (witness->terminal_spec)
        out << "terminal recurrence order: " << witness->terminal_spec->order() << "\n";
    }
    out << "status: " << status << "\n";
  }
  return status == "verified" ? 0 : 2;
}

inline int run_eval(const JobSpec& job, const Field& f, const ExpQ& r, std::ostream& out) {
  Series s = format::parse_series_expr(f, job.input);
  Window win = materialize(s, r, job.window_E);
  if (job.format == OutputFormat::JsonLike) {
    format::JsonWriter w;
    w.begin_object();
    json_job_header(w, job);
    w.key("terms");
    json_terms(w, win.terms);
    w.key("cert").value(s.cert().to_string());
    w.key("status").value("verified");
    w.end_object();
    out << w.str() << "\n";
  } else {
    out << "job: " << print_job(job) << "\n";
    out << "window: " << win.to_string() << " | cert: " << s.cert().to_string() << "\n";
    out << "status: verified\n";
  }
  return 0;
}

}  // namespace detail

inline int run_job(const JobSpec& job, std::ostream& out) {
  Field f = Field::parse(job.field);
  ExpQ r = ExpQ::parse(f.p(), job.window_r);
  DetectBounds bounds;
  bounds.M_max = job.period_M;
  bounds.N_max = job.period_N;
  switch (job.command) {
    case Command::Roots: return detail::run_roots(job, f, r, bounds, out);
    case Command::AsSolve: return detail::run_as_solve(job, f, r, out);
    case Command::Certify: return detail::run_certify(job, f, r, bounds, out);
    case Command::Eval: return detail::run_eval(job, f, r, out);
  }
  fail(Errc::InvalidArgument, "unhandled command");
  return 1;
}

inline std::string usage_text() {
  return "usage:\n"
         "  hahnroots run '<job>'\n"
         "  hahnroots <roots|as-solve|certify|eval> '<input>' [flags]\n"
         "\n"
         "job statements (semicolon separated):\n"
         "  field p^d[:c0,...,cd]   ambient finite field (required)\n"
         "  roots <poly in x,t>     expand all roots of the polynomial\n"
         "  as-solve <series>       solve x^p - x = y\n"
         "  certify series a=.. b=.. c=.. table{exp:coeff,...}\n"
         "                          detect a period and build a witness\n"
         "  eval <series>           materialize a series on the window\n"
         "  window <r> <E>          report window: exponents < r, depth <= E (default 2 8)\n"
         "  bounds <M> <N>          period detection bounds (default 4 4)\n"
         "  budget <n>              branch translation budget (default 4096)\n"
         "  format text|json-like   report format (default text)\n"
         "  seed <n>                reserved for randomized drivers (default 0)\n"
         "\n"
         "flags: --field p^d  --window r,E  --period-bounds M,N  --budget n\n"
         "       --format text|json-like  --seed n\n"
         "HAHNROOTS_FIELD supplies the field when no statement or flag does.\n"
         "exit codes: 0 verified, 2 not-found/unverified, 1 error\n";
}

inline JobSpec parse_args(const std::vector<std::string>& args) {
  if (args.empty()) fail(Errc::SyntaxError, "no command given");

  auto env_field = []() -> std::optional<std::string> {
    const char* v = std::getenv("HAHNROOTS_FIELD");
    if (v && *v) return std::string(v);
    return std::nullopt;
  };

  if (args[0] == "run") {
    if (args.size() != 2) fail(Errc::SyntaxError, "run takes exactly one job string");
    std::string text = args[1];
    bool has_field = false;
    for (const std::string& st : detail::split(text, ';'))
      if (detail::split_head(st).first == "field") has_field = true;
    if (!has_field)
      if (auto ef = env_field()) text = "field " + *ef + "; " + text;
    return parse_input(text);
  }

  static const std::vector<std::string> commands = {"roots", "as-solve", "certify", "eval"};
  bool known = false;
  for (const std::string& c : commands) known = known || c == args[0];
  if (!known) fail(Errc::SyntaxError, "unknown command '" + args[0] + "'");
  if (args.size() < 2) fail(Errc::SyntaxError, args[0] + " needs an input expression");
  std::string input = args[1];
  if (input.find(';') != std::string::npos)
    fail(Errc::SyntaxError, "input may not contain ';'");

  std::optional<std::string> field = env_field();
  std::string window = "2,8";
  std::string bounds = "4,4";
  std::string budget = "4096";
  std::string fmt = "text";
  std::string seed = "0";
  for (size_t i = 2; i < args.size(); ++i) {
    std::string name = args[i], value;
    auto eq = name.find('=');
    if (eq != std::string::npos) {
      value = name.substr(eq + 1);
      name = name.substr(0, eq);
    } else {
      if (i + 1 >= args.size()) fail(Errc::SyntaxError, "flag " + name + " needs a value");
      value = args[++i];
    }
    if (value.find(';') != std::string::npos)
      fail(Errc::SyntaxError, "flag value may not contain ';'");
    if (name == "--field")
      field = value;
    else if (name == "--window")
      window = value;
    else if (name == "--period-bounds")
      bounds = value;
    else if (name == "--budget")
      budget = value;
    else if (name == "--format")
      fmt = value;
    else if (name == "--seed")
      seed = value;
    else
      fail(Errc::SyntaxError, "unknown flag '" + name + "'");
  }
  if (!field) fail(Errc::SyntaxError, "no field given: use --field or HAHNROOTS_FIELD");

  auto pair_of = [](const std::string& v, const char* what) {
    auto comma = v.find(',');
    if (comma == std::string::npos)
      fail(Errc::SyntaxError, std::string(what) + " takes two comma-separated values: " + v);
    return std::make_pair(v.substr(0, comma), v.substr(comma + 1));
  };
  auto [wr, we] = pair_of(window, "--window");
  auto [bm, bn] = pair_of(bounds, "--period-bounds");

  std::ostringstream text;
  text << "field " << *field << "; " << args[0] << " " << input << "; window " << wr << " " << we
       << "; bounds " << bm << " " << bn << "; budget " << budget << "; format " << fmt
       << "; seed " << seed;
  return parse_input(text.str());
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty() || args[0] == "--help" || args[0] == "-h" || args[0] == "help") {
    out << usage_text();
    return 0;
  }
  try {
    return run_job(parse_args(args), out);
  } catch (const Error& e) {
    err << "hahnroots: " << e.what();
    if (e.code() == Errc::FieldTooSmall && e.required_degree)
      err << " (required extension degree " << e.required_degree << ")";
    err << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "hahnroots: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace hahn::cli
