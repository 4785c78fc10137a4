#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nsctl/galerkin.hpp"

namespace nsctl {

struct ExtensionExperiment {
  std::shared_ptr<const StructureTable> table;
  std::vector<std::size_t> observed;    // table indices
  std::vector<std::size_t> controlled;  // table indices, must contain r and s
  double nu = 0.0;
  std::size_t r = 0, s = 0;             // table indices of the source modes
  PiecewiseLinear envelope_r, envelope_s;
  ControlSignal background;
  std::vector<double> q0;  // in system order; empty means zero
  std::vector<double> eps;  // strictly decreasing, >= 1e-3
  double horizon = 1.0;
  IntegrateOptions integrator;
};

struct LimitSystem {
  GalerkinSystem system;  // controlled set extended by the new direction
  ControlSignal control;  // background plus the product channel
  std::vector<std::pair<std::size_t, double>> direction;  // B(e_r, e_s) on observed modes
  double bracket_coefficient = 0.0;  // (r ^ s)(|r|^-2 - |s|^-2) for torus modes
};

/// The original system with the oscillatory substitution: control on r is
/// eps^-1 d/dt[sqrt(2) sin(t/eps^2) vbar_r], on s it is eps d/dt[...vbar_s].
std::pair<GalerkinSystem, ControlSignal> build_oscillatory_system(const ExtensionExperiment& exp, double eps);

LimitSystem build_limit_system(const ExtensionExperiment& exp);

struct ExtensionPoint {
  double eps = 0.0;
  double error = 0.0;
  bool failed = false;
  std::string failure;
  std::size_t steps = 0;
};

struct ExtensionRun {
  std::vector<ExtensionPoint> points;  // eps descending
  std::vector<double> limit_endpoint;
};

/// Endpoint error ||q_osc(T) - q_limit(T)||_2 per eps. Sweep members run
/// concurrently; integration failures are recorded per point.
ExtensionRun run_extension_experiment(const ExtensionExperiment& exp);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t used = 0;
  bool flagged = false;  // some points were dropped
};

/// Least-squares slope of log e against log eps.
SlopeFit convergence_order(std::span<const std::pair<double, double>> points);

// 9-mode torus experiment: cos/sin of (1,0), (0,1), (1,1), (1,-1) plus
// cos(2,1); r = cos(1,0), s = cos(1,1); triangular envelopes peaking at T/2.
ExtensionExperiment canonical_extension_experiment();

}  // namespace nsctl
