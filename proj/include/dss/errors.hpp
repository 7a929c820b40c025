#ifndef DSS_ERRORS_HPP
#define DSS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace dss {

/// Failure categories surfaced by the toolkit. Used by the CLI to map
/// exceptions to process exit codes (validation -> 2, convergence -> 3,
/// certificate -> 4).
enum class errc {
  invalid_argument,   // bad scale, resolution, exponent, config
  out_of_shell,       // evaluation outside stored spatial coverage
  out_of_band,        // evaluation outside stored time coverage
  singular_point,     // evaluation at the excluded origin
  grid_mismatch,      // incompatible sample layouts in a pairwise op
  convergence,        // quadrature or iteration failed to settle
  certificate,        // a measured certificate missed its target
  coverage,           // requested region exceeds stored coverage
  tuning,             // tuning loop exhausted its budget
  empty_region,       // fit/profile region contains no sample points
  io                  // serialization / filesystem problems
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::invalid_argument: return "invalid_argument";
    case errc::out_of_shell:     return "out_of_shell";
    case errc::out_of_band:      return "out_of_band";
    case errc::singular_point:   return "singular_point";
    case errc::grid_mismatch:    return "grid_mismatch";
    case errc::convergence:      return "convergence";
    case errc::certificate:      return "certificate";
    case errc::coverage:         return "coverage";
    case errc::tuning:           return "tuning";
    case errc::empty_region:     return "empty_region";
    case errc::io:               return "io";
  }
  return "unknown";
}

/// Process exit code for a failure category: 2 validation, 3 convergence,
/// 4 missed certificate (coverage and tuning exhaustion included: the
/// requested guarantee could not be delivered).
inline int exit_code(errc c) {
  switch (c) {
    case errc::convergence:
      return 3;
    case errc::certificate:
    case errc::coverage:
    case errc::tuning:
      return 4;
    default:
      return 2;
  }
}

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

}  // namespace dss

#endif
