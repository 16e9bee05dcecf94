#include "jdsem/criteria.hpp"

#include "jdsem/error.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>

namespace jdsem {

const char* to_string(Criterion c) noexcept { return c == Criterion::QBIC ? "QBIC" : "QAIC"; }

double qbic(double h_value, std::size_t q, std::size_t n) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "QBIC needs n >= 2");
  return -2.0 * h_value + static_cast<double>(q) * std::log(static_cast<double>(n));
}

double qaic(double h_value, std::size_t q) { return -2.0 * h_value + 2.0 * static_cast<double>(q); }

CriterionValue make_criterion_value(std::string model_id, double h_value, std::size_t q, std::size_t n,
                                    bool converged) {
  return CriterionValue{std::move(model_id), qbic(h_value, q, n), qaic(h_value, q), q, h_value, converged};
}

Selection select(std::span<const CriterionValue> values, Criterion criterion) {
  if (values.empty()) throw Error(ErrorCode::EmptyCandidateList, "no candidates to select from");
  Selection best;
  for (std::size_t i = 1; i < values.size(); ++i) {
    const CriterionValue& a = values[i];
    const CriterionValue& b = values[best.index];
    const double va = a.value(criterion), vb = b.value(criterion);
    if (va < vb) {
      best = Selection{i, false};
    } else if (va == vb) {
      best.tie = true;
      if (a.q < b.q || (a.q == b.q && a.model_id < b.model_id)) best.index = i;
    }
  }
  // A tie only matters if it involves the winning value.
  if (best.tie) {
    const double v = values[best.index].value(criterion);
    std::size_t same = 0;
    for (const CriterionValue& c : values) same += c.value(criterion) == v ? 1 : 0;
    best.tie = same > 1;
  }
  return best;
}

double qaic_overfit_probability(unsigned dq) {
  if (dq == 0) throw Error(ErrorCode::InvalidArgument, "dq must be at least 1");
  const double k = static_cast<double>(dq);
  return boost::math::gamma_q(k / 2.0, k);
}

}  // namespace jdsem
