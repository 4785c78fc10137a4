#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "nsctl/spectral.hpp"

namespace nsctl {

// Time profiles. All of them vanish outside the time span they describe.
struct PiecewiseConstant {
  std::vector<double> breaks;  // P + 1 strictly increasing times
  std::vector<double> values;  // P values; segment i is [breaks[i], breaks[i+1])
};

struct PiecewiseLinear {
  std::vector<double> times;  // strictly increasing
  std::vector<double> values;

  double value(double t) const;
  double slope(double t) const;  // right derivative
  // Affine piece containing `locate`, evaluated at t (0 outside the span).
  double value_on(double t, double locate) const;
  double slope_on(double locate) const;
};

// scale * d/dt [ sqrt(2) sin(t / eps^2) envelope(t) ]
struct OscillatoryDerivative {
  double scale = 1.0;
  double eps = 0.1;
  PiecewiseLinear envelope;
};

// a(t) * b(t)
struct EnvelopeProduct {
  PiecewiseLinear a, b;
};

using Profile = std::variant<PiecewiseConstant, PiecewiseLinear, OscillatoryDerivative, EnvelopeProduct>;

double profile_value(const Profile& p, double t);
// Piece selection uses `locate` instead of t, so a step ending exactly on a
// breakpoint still sees the piece it started in.
double profile_value(const Profile& p, double t, double locate);
// Times where the profile or its derivative may jump.
std::vector<double> profile_breaks(const Profile& p);
// Smallest carrier period present, if any.
std::optional<double> profile_carrier_period(const Profile& p);
void validate_profile(const Profile& p);

// Forcing direction (sparse, over table indices) times a scalar profile.
struct ControlChannel {
  std::vector<std::pair<std::size_t, double>> direction;
  Profile profile;
};

struct ControlSignal {
  std::vector<ControlChannel> channels;

  static ControlChannel on_mode(std::size_t table_index, Profile p) {
    return ControlChannel{{{table_index, 1.0}}, std::move(p)};
  }
};

struct Diagnostics {
  double energy = 0.0;
  double enstrophy = 0.0;
};

struct Triad {
  std::size_t i, j, k;  // local indices
  double w;             // C^{ij}_k / lambda_i
};

class GalerkinSystem;

// A control signal checked against a system, with directions in local indices.
class BoundControl {
 public:
  std::size_t channel_count() const { return channels_.size(); }
  void add_forcing(double t, std::span<double> dq) const { add_forcing(t, t, dq); }
  void add_forcing(double t, double locate, std::span<double> dq) const;
  const std::vector<double>& breaks() const { return breaks_; }
  std::optional<double> carrier_period() const { return carrier_; }

 private:
  friend class GalerkinSystem;
  struct Channel {
    std::vector<std::pair<std::size_t, double>> direction;
    Profile profile;
  };
  std::vector<Channel> channels_;
  std::vector<double> breaks_;
  std::optional<double> carrier_;
};

/// q'_k = sum_{i,j} C^{ij}_k q_i q_j / lambda_i + nu lambda_k q_k + v_k over the
/// observed modes. Ordered pairs are summed; table antisymmetry makes every
/// unordered interaction enter as (1/lambda_i - 1/lambda_j) C^{ij}_k.
class GalerkinSystem {
 public:
  GalerkinSystem(std::shared_ptr<const StructureTable> table, std::vector<std::size_t> observed,
                 std::vector<std::size_t> controlled, double nu);

  const StructureTable& table() const { return *table_; }
  std::shared_ptr<const StructureTable> table_ptr() const { return table_; }
  std::size_t dimension() const { return observed_.size(); }
  double nu() const { return nu_; }
  // Table indices of the state coordinates, sorted by mode label.
  const std::vector<std::size_t>& observed() const { return observed_; }
  const std::vector<std::size_t>& controlled() const { return controlled_; }
  std::vector<std::string> labels() const;
  std::span<const double> eigenvalues() const { return lambda_; }
  const std::vector<Triad>& triads() const { return triads_; }
  std::optional<std::size_t> local_index(std::size_t table_index) const;
  std::size_t require_local(std::size_t table_index) const;

  BoundControl bind(const ControlSignal& u) const;

  void drift(std::span<const double> q, std::span<double> dq) const;
  void rhs(std::span<const double> q, double t, const BoundControl& u, std::span<double> dq) const {
    rhs(q, t, t, u, dq);
  }
  void rhs(std::span<const double> q, double t, double locate, const BoundControl& u, std::span<double> dq) const;
  std::vector<double> rhs(std::span<const double> q, double t, const ControlSignal& u) const;

  Diagnostics diagnostics(std::span<const double> q) const;

  // Same dynamics with a different controlled set.
  GalerkinSystem with_controlled(std::vector<std::size_t> controlled) const;

 private:
  std::shared_ptr<const StructureTable> table_;
  std::vector<std::size_t> observed_;
  std::vector<std::size_t> controlled_;
  std::vector<long> local_;  // table index -> local index or -1
  std::vector<double> lambda_;
  double nu_;
  std::vector<Triad> triads_;
};

struct IntegrateOptions {
  double abs_tol = 1e-12;
  double rel_tol = 1e-9;
  double max_dt = 0.0;       // 0: no cap besides the carrier guard
  std::size_t samples = 0;   // uniform output samples after t = 0; 0 keeps endpoints only
  int steps_per_carrier = 20;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> states;
  std::vector<Diagnostics> diagnostics;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;

  const std::vector<double>& endpoint() const { return states.back(); }
};

/// Adaptive Dormand-Prince 5(4) integration on [0, T]. Steps never cross a
/// control breakpoint, and oscillatory controls cap the step at
/// carrier_period / steps_per_carrier.
Trajectory integrate(const GalerkinSystem& sys, std::span<const double> q0, const ControlSignal& u, double t_end,
                     const IntegrateOptions& options = {});

/// Classic fourth-order Runge-Kutta with a fixed number of equal steps.
std::vector<double> integrate_fixed(const GalerkinSystem& sys, std::span<const double> q0, const ControlSignal& u,
                                    double t_end, std::size_t steps);

// Table modes within a sup-norm box (torus, rectangle) or degree cutoff
// (sphere); box <= 0 selects every mode.
std::vector<std::size_t> modes_within(const StructureTable& table, int box);

}  // namespace nsctl
