#pragma once

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "entroflow/grid.hpp"

namespace testsupport {

// Frozen oracle values; regenerated and compared by the oracle target before use.
inline double fixture(const std::string& key) {
  static const nlohmann::json data = [] {
    std::ifstream in(ENTROFLOW_FIXTURE_DIR "/oracle.json");
    if (!in) throw std::runtime_error("missing oracle fixture file");
    return nlohmann::json::parse(in);
  }();
  return data.at(key).get<double>();
}

struct Gaussian {
  double m;
  double v;
};

// Ornstein-Uhlenbeck marginal at t from N(m0, s0^2).
inline Gaussian ou_marginal(double m0, double s0, double t) {
  return {m0 * std::exp(-t), s0 * s0 * std::exp(-2 * t) + 0.5 * (1 - std::exp(-2 * t))};
}

inline double gaussian_pdf(double x, Gaussian g) {
  return std::exp(-(x - g.m) * (x - g.m) / (2 * g.v)) / std::sqrt(2 * M_PI * g.v);
}

inline double l1_to_gaussian(const entroflow::GridDensity& p, Gaussian g) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.grid.n_cells; ++i) s += std::abs(p.values[i] - gaussian_pdf(p.grid.center(i), g));
  return s * p.grid.h();
}

}  // namespace testsupport
