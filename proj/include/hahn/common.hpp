#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

namespace hahn {

using BigInt = boost::multiprecision::cpp_int;

// Error codes crossing module boundaries. The CLI prefixes these with the
// originating operation and maps every thrown Error to exit code 1.
enum class Errc {
  InvalidArgument,
  MixedFields,
  DivisionByZero,
  NotASubfield,
  FieldTooSmall,
  IncompatibleDenominator,
  DuplicateExponent,
  SingularSystem,
  NotInDomain,
  InconsistentDomain,
  SpecMismatch,
  PeriodUnverified,
  UnresolvedValuation,
  BudgetExceeded,
  SyntaxError,
  UnsupportedField,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::MixedFields: return "MixedFields";
    case Errc::DivisionByZero: return "DivisionByZero";
    case Errc::NotASubfield: return "NotASubfield";
    case Errc::FieldTooSmall: return "FieldTooSmall";
    case Errc::IncompatibleDenominator: return "IncompatibleDenominator";
    case Errc::DuplicateExponent: return "DuplicateExponent";
    case Errc::SingularSystem: return "SingularSystem";
    case Errc::NotInDomain: return "NotInDomain";
    case Errc::InconsistentDomain: return "InconsistentDomain";
    case Errc::SpecMismatch: return "SpecMismatch";
    case Errc::PeriodUnverified: return "PeriodUnverified";
    case Errc::UnresolvedValuation: return "UnresolvedValuation";
    case Errc::BudgetExceeded: return "BudgetExceeded";
    case Errc::SyntaxError: return "SyntaxError";
    case Errc::UnsupportedField: return "UnsupportedField";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

  Errc code() const noexcept { return code_; }

  // FieldTooSmall only: a total extension degree over F_p that suffices.
  // Zero when no bound was computed.
  int required_degree = 0;

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

[[noreturn]] inline void fail_field_too_small(const std::string& msg, int required_degree) {
  Error e(Errc::FieldTooSmall, msg);
  e.required_degree = required_degree;
  throw e;
}

// Floor/ceil division for b > 0; cpp_int's operator/ truncates toward zero.
inline BigInt floor_div(const BigInt& a, const BigInt& b) {
  BigInt q = a / b;
  if (a % b != 0 && a < 0) --q;
  return q;
}

inline BigInt ceil_div(const BigInt& a, const BigInt& b) {
  BigInt q = a / b;
  if (a % b != 0 && a > 0) ++q;
  return q;
}

inline BigInt pow_big(const BigInt& base, int64_t e) {
  BigInt r = 1, b = base;
  while (e > 0) {
    if (e & 1) r *= b;
    b *= b;
    e >>= 1;
  }
  return r;
}

inline int64_t to_i64(const BigInt& v, const char* what = "value") {
  if (v > std::numeric_limits<int64_t>::max() || v < std::numeric_limits<int64_t>::min())
    fail(Errc::InvalidArgument, std::string(what) + " exceeds 64-bit range");
  return v.convert_to<int64_t>();
}

}  // namespace hahn
