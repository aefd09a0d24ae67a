#include "dlca/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "dlca/errors.hpp"
#include "dlca/parallel.hpp"
#include "dlca/rng.hpp"

namespace dlca::dynamics {

namespace {

constexpr double kStepGuard = 0.01 * (1.0 + 1e-9);
constexpr cplx kI{0.0, 1.0};

// D[sigma_x]rho = sigma_x rho sigma_x - rho; the conjugation swaps both indices.
inline Mat2 bitflip_dissipator(const Mat2& rho) {
  return {rho.a[3] - rho.a[0], rho.a[2] - rho.a[1], rho.a[1] - rho.a[2], rho.a[0] - rho.a[3]};
}

inline void renormalize_trace(Mat2& rho) {
  const double tr = rho.a[0].real() + rho.a[3].real();
  const double inv = 1.0 / tr;
  for (auto& x : rho.a) x *= inv;
}

inline void check_positivity(const Mat2& rho, double dt) {
  const double min_eig = hermitian_eigenvalues(rho)[0];
  if (min_eig < DensityMatrix2::kEigTol) {
    std::ostringstream os;
    os << "conditioned state lost positivity (min eigenvalue " << min_eig
       << "); reduce the integration step dt=" << dt;
    throw NumericalError(os.str());
  }
}

std::int64_t steps_on_grid(double t, double dt, const char* what) {
  const double raw = t / dt;
  const auto n = static_cast<std::int64_t>(std::llround(raw));
  if (std::abs(raw - static_cast<double>(n)) > 1e-6) {
    std::ostringstream os;
    os << what << " (" << t << ") is not a multiple of dt (" << dt << ")";
    throw ConfigError(os.str());
  }
  return n;
}

void guard_step_size(double dt, std::span<const Jump> jumps, const Mat2& H) {
  double limit = max_abs_entry(H);
  for (const auto& j : jumps) limit = std::max(limit, j.rate);
  if (dt * limit > kStepGuard) {
    std::ostringstream os;
    os << "step-size guard: dt*max(rate, |H|) = " << dt * limit << " exceeds 0.01";
    throw NumericalError(os.str());
  }
}

// Generic RK4 over [0, t] for any rhs(rho) -> drho/dt, trace renormalized and
// hermitized (round-off only) each step.
template <typename Rhs>
Mat2 rk4_solve(Mat2 rho, double t, double dt, Rhs&& rhs) {
  if (t <= 0.0) return rho;
  const auto n = static_cast<std::int64_t>(std::ceil(t / dt - 1e-12));
  const double h = t / static_cast<double>(n);
  for (std::int64_t i = 0; i < n; ++i) {
    const Mat2 k1 = rhs(rho);
    const Mat2 k2 = rhs(rho + 0.5 * h * k1);
    const Mat2 k3 = rhs(rho + 0.5 * h * k2);
    const Mat2 k4 = rhs(rho + h * k3);
    rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    rho = hermitize(rho);
    renormalize_trace(rho);
  }
  return rho;
}

EnsembleMoments ensemble_moments_impl(std::span<const double> times, std::size_t n_traj,
                                      std::uint64_t master_seed, int workers,
                                      const std::function<void(std::uint64_t, std::vector<Mat2>&)>&
                                          run_one) {
  const std::size_t n_times = times.size();
  std::vector<Mat2> states(n_traj * n_times);
  parallel_for(n_traj, workers, [&](std::size_t i) {
    std::vector<Mat2> checkpoints(n_times);
    run_one(derive_seed(master_seed, i), checkpoints);
    std::copy(checkpoints.begin(), checkpoints.end(), states.begin() + i * n_times);
  });

  EnsembleMoments out;
  out.mean.assign(n_times, Mat2::zero());
  out.standard_error.assign(n_times, Mat2::zero());
  // Reduce in trajectory order: deterministic for any worker count.
  std::vector<Mat2> sum(n_times, Mat2::zero()), sumsq(n_times, Mat2::zero());
  for (std::size_t i = 0; i < n_traj; ++i) {
    for (std::size_t k = 0; k < n_times; ++k) {
      const Mat2& s = states[i * n_times + k];
      for (int j = 0; j < 4; ++j) {
        sum[k].a[j] += s.a[j];
        sumsq[k].a[j] += cplx(s.a[j].real() * s.a[j].real(), s.a[j].imag() * s.a[j].imag());
      }
    }
  }
  const double n = static_cast<double>(n_traj);
  for (std::size_t k = 0; k < n_times; ++k) {
    for (int j = 0; j < 4; ++j) {
      const double mr = sum[k].a[j].real() / n;
      const double mi = sum[k].a[j].imag() / n;
      out.mean[k].a[j] = cplx(mr, mi);
      const double var_r = std::max(0.0, sumsq[k].a[j].real() / n - mr * mr);
      const double var_i = std::max(0.0, sumsq[k].a[j].imag() / n - mi * mi);
      out.standard_error[k].a[j] = cplx(std::sqrt(var_r / n), std::sqrt(var_i / n));
    }
  }
  return out;
}

}  // namespace

void ChannelParams::validate() const {
  std::ostringstream os;
  if (!(gamma_D >= 0.0)) {
    os << "gamma_D must be >= 0, got " << gamma_D;
    throw ConfigError(os.str());
  }
  if (!(gamma_E >= 0.0)) {
    os << "gamma_E must be >= 0, got " << gamma_E;
    throw ConfigError(os.str());
  }
  if (!(eta >= 0.0 && eta <= 1.0)) {
    os << "eta must be in [0, 1], got " << eta;
    throw ConfigError(os.str());
  }
  if (!(dt > 0.0)) {
    os << "dt must be > 0, got " << dt;
    throw ConfigError(os.str());
  }
  if (!(t_final >= 0.0)) {
    os << "t_final must be >= 0, got " << t_final;
    throw ConfigError(os.str());
  }
  const double limit = std::max({gamma_D, gamma_E, std::abs(omega)});
  if (dt * limit > kStepGuard) {
    os << "stability guard: dt*max(gamma_D, gamma_E, omega) = " << dt * limit
       << " exceeds 0.01";
    throw ConfigError(os.str());
  }
}

StepGrid make_step_grid(const ChannelParams& p, const MeasurementWindow& w, int bin_factor) {
  p.validate();
  if (w.t_start < 0.0 || w.t_end() > p.t_final * (1.0 + 1e-12) + 1e-12) {
    std::ostringstream os;
    os << "measurement window [" << w.t_start << ", " << w.t_end() << "] outside [0, "
       << p.t_final << "]";
    throw ConfigError(os.str());
  }
  if (bin_factor < 1) throw ConfigError("bin_factor must be >= 1");
  StepGrid g{};
  g.total_steps = steps_on_grid(p.t_final, p.dt, "t_final");
  g.window_begin = steps_on_grid(w.t_start, p.dt, "window t_start");
  g.window_end = g.window_begin + steps_on_grid(w.delta_t, p.dt, "window delta_t");
  const std::int64_t w_steps = g.window_end - g.window_begin;
  if (w_steps % bin_factor != 0) {
    std::ostringstream os;
    os << "window step count " << w_steps << " not divisible by bin_factor " << bin_factor;
    throw ConfigError(os.str());
  }
  return g;
}

Mat2 analytic_dissipative_state(const Mat2& rho0, double gamma_D, double t) {
  const double decay = std::exp(-2.0 * gamma_D * t);
  const double keep = 0.5 * (1.0 + decay);
  const double swap = 0.5 * (1.0 - decay);
  return {keep * rho0.a[0] + swap * rho0.a[3], keep * rho0.a[1] + swap * rho0.a[2],
          swap * rho0.a[1] + keep * rho0.a[2], swap * rho0.a[0] + keep * rho0.a[3]};
}

Mat2 lindblad_rhs(const Mat2& rho, const Mat2& H, std::span<const Jump> jumps) {
  Mat2 out = -kI * commutator(H, rho);
  for (const auto& j : jumps) out += j.rate * dissipator(j.op, rho);
  return out;
}

Mat2 lindblad_solve(const Mat2& rho0, const Mat2& H, std::span<const Jump> jumps, double t,
                    double dt) {
  guard_step_size(dt, jumps, H);
  return rk4_solve(rho0, t, dt, [&](const Mat2& r) { return lindblad_rhs(r, H, jumps); });
}

std::vector<Mat2> lindblad_path(const Mat2& rho0, const Mat2& H, std::span<const Jump> jumps,
                                std::span<const double> times, double dt) {
  guard_step_size(dt, jumps, H);
  std::vector<Mat2> out;
  out.reserve(times.size());
  Mat2 rho = rho0;
  double t_prev = 0.0;
  for (const double t : times) {
    if (t < t_prev - 1e-12) throw ConfigError("lindblad_path: times must be ascending");
    rho = rk4_solve(rho, t - t_prev, dt, [&](const Mat2& r) { return lindblad_rhs(r, H, jumps); });
    out.push_back(rho);
    t_prev = t;
  }
  return out;
}

SmeSystem::SmeSystem(const Mat2& hamiltonian, const ChannelParams& params, const Mat2& meas_op)
    : H(hamiltonian), p(params), e(meas_op) {
  p.validate();
  e_dag = adjoint(e);
  ede = e_dag * e;
  e_plus_edag = e + e_dag;
  sqrt_gamma_E = std::sqrt(p.gamma_E);
  noise_coef = std::sqrt(p.gamma_E * p.eta);
  inv_sqrt_eta = p.eta > 0.0 ? 1.0 / std::sqrt(p.eta) : 0.0;
}

std::pair<Mat2, double> sme_step(const SmeSystem& sys, const Mat2& rho, double dW,
                                 bool measuring) {
  const double dt = sys.p.dt;
  Mat2 next = rho;
  // -i[H, rho] dt
  next += (-kI * dt) * commutator(sys.H, rho);
  // gamma_D D[sigma_x] rho dt
  next += (sys.p.gamma_D * dt) * bitflip_dissipator(rho);
  double current = 0.0;
  if (measuring) {
    if (sys.p.eta <= 0.0)
      throw ConfigError("homodyne record requires eta > 0 (record noise diverges)");
    // gamma_E D[e] rho dt
    const Mat2 de = sys.e * rho * sys.e_dag - 0.5 * (sys.ede * rho + rho * sys.ede);
    next += (sys.p.gamma_E * dt) * de;
    // sqrt(gamma_E eta) dW H[e] rho, with the same dW entering the record.
    Mat2 inn = sys.e * rho + rho * sys.e_dag;
    inn -= trace(inn) * rho;
    next += (sys.noise_coef * dW) * inn;
    current = sys.sqrt_gamma_E * expectation(sys.e_plus_edag, rho).real() +
              dW * sys.inv_sqrt_eta / dt;
  }
  next = hermitize(next);
  renormalize_trace(next);
  check_positivity(next, dt);
  return {next, current};
}

TrajectoryRecord simulate_trajectory(StateLabel initial, const ChannelParams& p, const Mat2& e,
                                     const MeasurementWindow& w, std::uint64_t seed,
                                     int bin_factor) {
  const StepGrid g = make_step_grid(p, w, bin_factor);
  const SmeSystem sys(hamiltonian_for(initial, p.omega).m, p, e);

  TrajectoryRecord rec;
  rec.seed = seed;
  rec.label = initial;
  rec.fine_steps = g.window_end - g.window_begin;
  rec.coarse_current.assign(static_cast<std::size_t>(rec.fine_steps / bin_factor), 0.0);

  WienerStream noise(seed);
  Mat2 rho = projector(pure_state(initial));
  const double inv_bin = 1.0 / static_cast<double>(bin_factor);
  for (std::int64_t i = 0; i < g.total_steps; ++i) {
    const bool measuring = i >= g.window_begin && i < g.window_end;
    const double dW = measuring ? noise.next(p.dt) : 0.0;
    auto [next, current] = sme_step(sys, rho, dW, measuring);
    rho = next;
    if (measuring) {
      const std::int64_t k = (i - g.window_begin) / bin_factor;
      rec.coarse_current[static_cast<std::size_t>(k)] += current * inv_bin;
    }
  }
  rec.final_state = rho;
  return rec;
}

Mat2 feedback_liouvillian(const Mat2& rho, const Mat2& H, const ChannelParams& p, const Mat2& e,
                          const Mat2& f) {
  if (p.eta <= 0.0 && max_abs_entry(f) > 0.0)
    throw ConfigError("feedback with eta = 0 is ill-defined");
  const Mat2 e_dag = adjoint(e);
  const Mat2 h_eff = H + (0.5 * p.gamma_E) * (e_dag * f + f * e);
  Mat2 out = -kI * commutator(h_eff, rho);
  out += p.gamma_D * bitflip_dissipator(rho);
  const Mat2 e_fb = e - kI * f;
  out += p.gamma_E * dissipator(e_fb, rho);
  if (p.eta > 0.0 && p.eta < 1.0)
    out += ((1.0 - p.eta) / p.eta * p.gamma_E) * dissipator(f, rho);
  return out;
}

Mat2 feedback_master_solve(const Mat2& rho0, const Mat2& H, const ChannelParams& p,
                           const Mat2& e, const Mat2& f, const MeasurementWindow& w) {
  make_step_grid(p, w, 1);
  if (p.eta <= 0.0 && max_abs_entry(f) > 0.0)
    throw ConfigError("feedback with eta = 0 is ill-defined");
  const auto drift_only = [&](const Mat2& r) {
    return -kI * commutator(H, r) + p.gamma_D * bitflip_dissipator(r);
  };
  const auto with_feedback = [&](const Mat2& r) {
    return feedback_liouvillian(r, H, p, e, f);
  };
  Mat2 rho = rk4_solve(rho0, w.t_start, p.dt, drift_only);
  rho = rk4_solve(rho, w.delta_t, p.dt, with_feedback);
  rho = rk4_solve(rho, p.t_final - w.t_end(), p.dt, drift_only);
  return rho;
}

FeedbackSmeSystem::FeedbackSmeSystem(const Mat2& hamiltonian, const ChannelParams& params,
                                     const Mat2& meas_op, const Mat2& feedback_op,
                                     NoiseScaling noise_scaling)
    : H(hamiltonian), p(params), e(meas_op), f(feedback_op), scaling(noise_scaling) {
  p.validate();
  if (p.eta <= 0.0) throw ConfigError("feedback unraveling requires eta > 0");
  e_dag = adjoint(e);
  e_plus_edag = e + e_dag;
  const double sqrt_eta = std::sqrt(p.eta);
  h_op = sqrt_eta * e - (kI / sqrt_eta) * f;
  noise_prefactor = scaling == NoiseScaling::SqrtRate ? std::sqrt(p.gamma_E) : p.gamma_E;
  inv_sqrt_eta = 1.0 / sqrt_eta;
}

std::pair<Mat2, double> feedback_sme_step(const FeedbackSmeSystem& sys, const Mat2& rho,
                                          double dW) {
  const double dt = sys.p.dt;
  Mat2 next = rho;
  next += (-kI * dt) * commutator(sys.H, rho);
  next += (sys.p.gamma_E * dt) * dissipator(sys.e, rho);
  // -i gamma_E [f, e rho + rho e^dag] dt
  next += (-kI * sys.p.gamma_E * dt) * commutator(sys.f, sys.e * rho + rho * sys.e_dag);
  next += (sys.p.gamma_E / sys.p.eta * dt) * dissipator(sys.f, rho);
  next += (sys.p.gamma_D * dt) * bitflip_dissipator(rho);
  Mat2 inn = sys.h_op * rho + rho * adjoint(sys.h_op);
  inn -= trace(inn) * rho;
  next += (sys.noise_prefactor * dW) * inn;
  const double current = std::sqrt(sys.p.gamma_E) * expectation(sys.e_plus_edag, rho).real() +
                         dW * sys.inv_sqrt_eta / dt;
  next = hermitize(next);
  renormalize_trace(next);
  check_positivity(next, dt);
  return {next, current};
}

EnsembleMoments sme_ensemble_mean(StateLabel initial, const ChannelParams& p, const Mat2& e,
                                  const MeasurementWindow& w, std::span<const double> times,
                                  std::size_t n_traj, std::uint64_t master_seed, int workers) {
  const StepGrid g = make_step_grid(p, w, 1);
  const SmeSystem sys(hamiltonian_for(initial, p.omega).m, p, e);
  std::vector<std::int64_t> time_steps;
  time_steps.reserve(times.size());
  for (const double t : times) {
    const auto s = static_cast<std::int64_t>(std::llround(t / p.dt));
    if (s < 0 || s > g.total_steps) throw ConfigError("checkpoint outside [0, t_final]");
    time_steps.push_back(s);
  }
  return ensemble_moments_impl(times, n_traj, master_seed, workers,
                               [&](std::uint64_t seed, std::vector<Mat2>& checkpoints) {
                                 WienerStream noise(seed);
                                 Mat2 rho = projector(pure_state(initial));
                                 std::size_t k = 0;
                                 for (std::int64_t i = 0; i <= g.total_steps; ++i) {
                                   while (k < time_steps.size() && time_steps[k] == i)
                                     checkpoints[k++] = rho;
                                   if (i == g.total_steps) break;
                                   const bool measuring = i >= g.window_begin && i < g.window_end;
                                   const double dW = measuring ? noise.next(p.dt) : 0.0;
                                   rho = sme_step(sys, rho, dW, measuring).first;
                                 }
                               });
}

EnsembleMoments feedback_sme_ensemble_mean(StateLabel initial, const ChannelParams& p,
                                           const Mat2& e, const Mat2& f,
                                           const MeasurementWindow& w,
                                           std::span<const double> times, std::size_t n_traj,
                                           std::uint64_t master_seed, int workers,
                                           NoiseScaling scaling) {
  const StepGrid g = make_step_grid(p, w, 1);
  const FeedbackSmeSystem fsys(hamiltonian_for(initial, p.omega).m, p, e, f, scaling);
  const SmeSystem plain(hamiltonian_for(initial, p.omega).m, p, e);
  std::vector<std::int64_t> time_steps;
  for (const double t : times)
    time_steps.push_back(static_cast<std::int64_t>(std::llround(t / p.dt)));
  return ensemble_moments_impl(times, n_traj, master_seed, workers,
                               [&](std::uint64_t seed, std::vector<Mat2>& checkpoints) {
                                 WienerStream noise(seed);
                                 Mat2 rho = projector(pure_state(initial));
                                 std::size_t k = 0;
                                 for (std::int64_t i = 0; i <= g.total_steps; ++i) {
                                   while (k < time_steps.size() && time_steps[k] == i)
                                     checkpoints[k++] = rho;
                                   if (i == g.total_steps) break;
                                   const bool in_window =
                                       i >= g.window_begin && i < g.window_end;
                                   if (in_window) {
                                     const double dW = noise.next(p.dt);
                                     rho = feedback_sme_step(fsys, rho, dW).first;
                                   } else {
                                     rho = sme_step(plain, rho, 0.0, false).first;
                                   }
                                 }
                               });
}

}  // namespace dlca::dynamics
