#include "entroflow/flow_field.hpp"

#include <algorithm>
#include <cmath>

#include "entroflow/errors.hpp"

namespace entroflow {

FlowField::FlowField(const Flow& flow, const GibbsReference& ref) : grid_(ref.grid) {
  if (flow.empty()) throw Error("flow is empty");
  for (const auto& p : flow) {
    auto f = likelihood_field(p, ref);
    times_.push_back(p.time);
    log_l_.push_back(std::move(f.log_l));
    score_.push_back(std::move(f.score));
    valid_.push_back(std::move(f.valid));
  }
  for (std::size_t k = 1; k < times_.size(); ++k)
    if (!(times_[k] > times_[k - 1])) throw Error("flow snapshot times must be increasing");
}

double FlowField::max_gap() const {
  double g = 0.0;
  for (std::size_t k = 1; k < times_.size(); ++k) g = std::max(g, times_[k] - times_[k - 1]);
  return g;
}

FlowField::Sample FlowField::spatial(std::size_t k, double x) const {
  Sample s;
  const double h = grid_.h();
  const double u = (x - grid_.center(0)) / h;
  if (!(u >= 1.0) || !(u < static_cast<double>(grid_.n_cells) - 2.0)) {
    s.ok = false;
    return s;
  }
  auto i = static_cast<std::size_t>(u);
  const double th = u - static_cast<double>(i);
  const auto& valid = valid_[k];
  if (!valid[i - 1] || !valid[i] || !valid[i + 1] || !valid[i + 2]) {
    s.ok = false;
    return s;
  }
  // Lagrange weights on nodes -1, 0, 1, 2.
  const double w[4] = {-th * (th - 1.0) * (th - 2.0) / 6.0, (th + 1.0) * (th - 1.0) * (th - 2.0) / 2.0,
                       -(th + 1.0) * th * (th - 2.0) / 2.0, (th + 1.0) * th * (th - 1.0) / 6.0};
  const auto& ll = log_l_[k];
  const auto& sc = score_[k];
  for (int j = 0; j < 4; ++j) {
    s.log_l += w[j] * ll[i - 1 + j];
    s.score += w[j] * sc[i - 1 + j];
  }
  return s;
}

FlowField::Sample FlowField::at_snapshot(std::size_t k, double x) const { return spatial(k, x); }

FlowField::Sample FlowField::at(double t, double x) const {
  const double tol = 1e-9 * (1.0 + std::abs(t));
  if (t < times_.front() - tol || t > times_.back() + tol) return Sample{0.0, 0.0, false};
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  std::size_t k1 = static_cast<std::size_t>(it - times_.begin());
  if (k1 == 0) return spatial(0, x);
  std::size_t k0 = k1 - 1;
  if (k1 >= times_.size() || std::abs(t - times_[k0]) <= tol) return spatial(k0, x);
  if (std::abs(times_[k1] - t) <= tol) return spatial(k1, x);
  const double lam = (t - times_[k0]) / (times_[k1] - times_[k0]);
  Sample a = spatial(k0, x), b = spatial(k1, x);
  Sample s;
  s.ok = a.ok && b.ok;
  s.log_l = (1.0 - lam) * a.log_l + lam * b.log_l;
  s.score = (1.0 - lam) * a.score + lam * b.score;
  return s;
}

}  // namespace entroflow
