#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "dlca/mat2.hpp"
#include "dlca/qcore.hpp"

namespace dlca::dynamics {

inline constexpr int kDefaultBinFactor = 10;

// Channel and integration parameters. Times are in the same units as the
// inverse rates; the CLI works in gamma_D-scaled units (gamma_D = 1).
struct ChannelParams {
  double gamma_D = 1.0;   // intrinsic dissipation rate (bit-flip channel)
  double gamma_E = 1.0;   // eavesdropper measurement rate
  double eta = 0.5;       // homodyne efficiency in [0, 1]
  double omega = 1.0;     // Hamiltonian frequency
  double t_final = 3.0;   // total travel time
  double dt = 1e-3;       // fine integration step

  void validate() const;  // throws ConfigError

  static ChannelParams defaults() { return {}; }
};

struct MeasurementWindow {
  double t_start = 0.0;
  double delta_t = 0.0;

  double t_end() const { return t_start + delta_t; }
  static MeasurementWindow full(const ChannelParams& p) { return {0.0, p.t_final}; }
};

// One simulated qubit: the coarse-grained homodyne record plus the state Bob
// receives. Bit-identical for identical (seed, params).
struct TrajectoryRecord {
  std::uint64_t seed = 0;
  std::vector<double> coarse_current;
  std::int64_t fine_steps = 0;  // fine steps inside the measurement window
  StateLabel label = StateLabel::Zero;
  Mat2 final_state;
};

struct Jump {
  double rate;
  Mat2 op;
};

// Closed-form solution of the bit-flip master equation; Hamiltonian-independent.
Mat2 analytic_dissipative_state(const Mat2& rho0, double gamma_D, double t);

Mat2 lindblad_rhs(const Mat2& rho, const Mat2& H, std::span<const Jump> jumps);

// RK4 integration of rho' = -i[H,rho] + sum_k rate_k D[L_k]rho, trace
// renormalized every step.
Mat2 lindblad_solve(const Mat2& rho0, const Mat2& H, std::span<const Jump> jumps, double t,
                    double dt);

// Same integrator, returning the state at each requested time (sorted ascending).
std::vector<Mat2> lindblad_path(const Mat2& rho0, const Mat2& H, std::span<const Jump> jumps,
                                std::span<const double> times, double dt);

// Precomputed operators for the diffusive stochastic master equation with
// dissipation d = sigma_x and measurement operator e.
struct SmeSystem {
  Mat2 H;
  ChannelParams p;
  Mat2 e;
  Mat2 e_dag;
  Mat2 ede;          // e^dag e
  Mat2 e_plus_edag;  // e + e^dag
  double sqrt_gamma_E = 0.0;
  double noise_coef = 0.0;    // sqrt(gamma_E * eta)
  double inv_sqrt_eta = 0.0;  // 1/sqrt(eta), 0 if eta == 0

  SmeSystem(const Mat2& hamiltonian, const ChannelParams& params, const Mat2& meas_op);
};

// One Euler-Maruyama step of the conditioned state. The same dW enters the
// state update and the current sample J = sqrt(gamma_E)<e+e^dag> + dW/(sqrt(eta) dt).
// With measuring=false the gamma_E terms and the record are omitted (J = 0).
std::pair<Mat2, double> sme_step(const SmeSystem& sys, const Mat2& rho, double dW,
                                 bool measuring);

// Integrates one qubit from t=0 to t_final; measurement active only inside the
// window. The coarse record holds block means of bin_factor fine J samples.
TrajectoryRecord simulate_trajectory(StateLabel initial, const ChannelParams& p, const Mat2& e,
                                     const MeasurementWindow& w, std::uint64_t seed,
                                     int bin_factor = kDefaultBinFactor);

// Right-hand side of the deterministic homodyne-feedback master equation
// (ensemble average of the feedback unraveling).
Mat2 feedback_liouvillian(const Mat2& rho, const Mat2& H, const ChannelParams& p, const Mat2& e,
                          const Mat2& f);

// RK4 solution with the measurement+feedback terms active only inside the window.
Mat2 feedback_master_solve(const Mat2& rho0, const Mat2& H, const ChannelParams& p,
                           const Mat2& e, const Mat2& f, const MeasurementWindow& w);

// The printed form of the feedback unraveling carries a dW prefactor gamma_E,
// which is dimensionally inconsistent with its own ensemble average; SqrtRate
// uses sqrt(gamma_E), which reproduces the deterministic equation (and reduces
// to the plain SME at f = 0). Verbatim keeps the printed prefactor.
enum class NoiseScaling { SqrtRate, Verbatim };

struct FeedbackSmeSystem {
  Mat2 H;
  ChannelParams p;
  Mat2 e;
  Mat2 f;
  NoiseScaling scaling = NoiseScaling::SqrtRate;
  Mat2 e_dag;
  Mat2 e_plus_edag;
  Mat2 h_op;  // sqrt(eta) e - i f / sqrt(eta)
  double noise_prefactor = 0.0;
  double inv_sqrt_eta = 0.0;

  FeedbackSmeSystem(const Mat2& hamiltonian, const ChannelParams& params, const Mat2& meas_op,
                    const Mat2& feedback_op, NoiseScaling scaling = NoiseScaling::SqrtRate);
};

std::pair<Mat2, double> feedback_sme_step(const FeedbackSmeSystem& sys, const Mat2& rho,
                                          double dW);

// Mean conditioned state over n_traj trajectories at the given checkpoint
// times, with the elementwise standard error of the mean (real and imaginary
// parts stored in the matching entry). Deterministic for any worker count.
struct EnsembleMoments {
  std::vector<Mat2> mean;
  std::vector<Mat2> standard_error;
};

EnsembleMoments sme_ensemble_mean(StateLabel initial, const ChannelParams& p, const Mat2& e,
                                  const MeasurementWindow& w, std::span<const double> times,
                                  std::size_t n_traj, std::uint64_t master_seed, int workers);

EnsembleMoments feedback_sme_ensemble_mean(StateLabel initial, const ChannelParams& p,
                                           const Mat2& e, const Mat2& f,
                                           const MeasurementWindow& w,
                                           std::span<const double> times, std::size_t n_traj,
                                           std::uint64_t master_seed, int workers,
                                           NoiseScaling scaling = NoiseScaling::SqrtRate);

// Grid helpers shared by the trajectory engine and its callers; throw
// ConfigError when the window does not sit on the integration grid or the
// windowed step count is not divisible by bin_factor.
struct StepGrid {
  std::int64_t total_steps;
  std::int64_t window_begin;
  std::int64_t window_end;
};

StepGrid make_step_grid(const ChannelParams& p, const MeasurementWindow& w, int bin_factor);

}  // namespace dlca::dynamics
