#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace entroflow {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidPotential : Error {
  using Error::Error;
};

struct InvalidGrid : Error {
  using Error::Error;
};

struct InvalidDensity : Error {
  using Error::Error;
};

struct SupportTouchesBoundary : Error {
  using Error::Error;
};

// Implicit step produced a non-finite value or a vanishing pivot.
struct StepFailure : Error {
  double suggested_dt;
  StepFailure(const std::string& what, double dt) : Error(what), suggested_dt(dt) {}
};

struct SimulationDiverged : Error {
  std::size_t path;
  SimulationDiverged(const std::string& what, std::size_t p) : Error(what), path(p) {}
};

struct FlowTooCoarse : Error {
  using Error::Error;
};

struct DegenerateGeodesic : Error {
  using Error::Error;
};

struct StepTooLarge : Error {
  double max_step;
  StepTooLarge(const std::string& what, double tau) : Error(what), max_step(tau) {}
};

struct InsufficientCoverage : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace entroflow
