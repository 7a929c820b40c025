#ifndef DSS_EXPONENTS_HPP
#define DSS_EXPONENTS_HPP

#include <cmath>
#include <optional>
#include <vector>

#include "dss/errors.hpp"

namespace dss {

/// The two published indexing conventions for the iterate-difference decay
/// exponents. They disagree (one is affine in k, the other shifted and capped
/// at 4); both are exposed and nothing converts silently between them.
enum class ExponentConvention { affine, capped };

struct ExponentRow {
  int k = 0;
  double a = 0.0;            // spatial decay exponent of the k-th difference
  std::optional<double> b;   // companion exponent; defined for k >= 1 only
};

struct ExponentTable {
  double q = 0.0;
  ExponentConvention convention = ExponentConvention::affine;
  int k_q = 0;               // first k whose affine exponent clears the cap
  std::vector<ExponentRow> rows;
};

/// Decay-exponent laws for roughness exponent q:
///  * affine convention:  a_k = (k + 2)(1 - 3/q), with the threshold index
///    k_q = ceil(4q/(q-3) - 2) marking where the affine law passes 4;
///  * capped convention:  a_k = min{(k + 1)(1 - 3/q), 4};
///  * companion sequence: b_1 = 1, b_2 = 2, then
///    b_{k+1} = min{b_k + 1 - 3/q, 4}  (b_0 is not defined by the law).
inline ExponentTable exponent_table(double q, int k_max,
                                    ExponentConvention conv) {
  if (!(q > 3.0) || !std::isfinite(q))
    throw error(errc::invalid_argument,
                "exponent laws require roughness exponent q > 3");
  if (k_max < 0)
    throw error(errc::invalid_argument, "k_max must be non-negative");

  ExponentTable tab;
  tab.q = q;
  tab.convention = conv;
  tab.k_q =
      static_cast<int>(std::ceil(4.0 * q / (q - 3.0) - 2.0 - 1e-12));

  const double step = 1.0 - 3.0 / q;
  double b = 1.0;  // value at k = 1
  for (int k = 0; k <= k_max; ++k) {
    ExponentRow row;
    row.k = k;
    row.a = conv == ExponentConvention::affine
                ? (k + 2) * step
                : std::min((k + 1) * step, 4.0);
    if (k >= 1) {
      row.b = b;
      b = k == 1 ? 2.0 : std::min(b + step, 4.0);
    }
    tab.rows.push_back(row);
  }
  return tab;
}

}  // namespace dss

#endif
