#include "dlca/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dlca/errors.hpp"
#include "dlca/parallel.hpp"
#include "dlca/rng.hpp"

namespace dlca::experiments {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

struct PointOutcome {
  double qber = 0.0;
  std::vector<double> accuracies;
};

// Shared body of the accuracy sweeps: datasets -> retrains -> accuracies,
// plus the deterministic ensemble QBER for the same (theta, window).
PointOutcome run_sweep_point(const ChannelParams& params, double theta,
                             const MeasurementWindow& window, const SweepSizes& sizes,
                             std::uint64_t point_seed, int workers) {
  const Mat2 e = measurement_operator(theta).m;

  auto train_raw = data::generate_dataset(sizes.n_train, params, theta, window,
                                          derive_seed(point_seed, 1),
                                          dynamics::kDefaultBinFactor, workers);
  auto test_raw = data::generate_dataset(sizes.n_test, params, theta, window,
                                         derive_seed(point_seed, 2),
                                         dynamics::kDefaultBinFactor, workers);
  const data::Standardizer standardizer = data::fit_standardizer(train_raw);
  const auto train_set = data::preprocess(train_raw, standardizer);
  const auto test_set = data::preprocess(test_raw, standardizer);
  train_raw.currents.clear();
  test_raw.currents.clear();

  PointOutcome out;
  out.accuracies.reserve(sizes.retrains);
  for (int r = 0; r < sizes.retrains; ++r) {
    nn::TrainConfig cfg;
    cfg.init_seed = derive_seed(point_seed, 100 + static_cast<std::uint64_t>(r));
    cfg.shuffle_seed = derive_seed(point_seed, 200 + static_cast<std::uint64_t>(r));
    cfg.workers = workers;
    const auto trained = nn::train(train_set, nn::Architecture{}, cfg);
    out.accuracies.push_back(nn::evaluate(trained.model, test_set, workers).accuracy);
  }
  out.qber = bb84::qber_from_final_states(bb84::evolve_four_states(params, e, window));
  return out;
}

SweepPoint to_point(double axis, PointOutcome&& o) {
  SweepPoint pt;
  pt.axis = axis;
  pt.qber = o.qber;
  pt.accuracies = std::move(o.accuracies);
  const double n = static_cast<double>(pt.accuracies.size());
  double mean = 0.0;
  for (const double a : pt.accuracies) mean += a;
  mean /= n;
  double var = 0.0;
  for (const double a : pt.accuracies) var += (a - mean) * (a - mean);
  pt.acc_mean = mean;
  pt.acc_std = std::sqrt(var / n);
  pt.lambda = mean > 0.0 ? pt.qber / mean : 0.0;
  return pt;
}

}  // namespace

SweepResult sweep_theta(std::span<const double> theta_grid, const ChannelParams& params,
                        const MeasurementWindow& window, const SweepSizes& sizes,
                        std::uint64_t master_seed, int workers, const ProgressFn& progress) {
  if (theta_grid.empty()) throw ConfigError("empty theta grid");
  SweepResult result;
  result.axis_name = "theta";
  result.params = params;
  result.window = window;
  result.n_train = sizes.n_train;
  result.n_test = sizes.n_test;
  result.retrains = sizes.retrains;
  result.master_seed = master_seed;
  for (std::size_t i = 0; i < theta_grid.size(); ++i) {
    const double theta = theta_grid[i];
    if (progress) {
      std::ostringstream os;
      os << "theta " << i + 1 << "/" << theta_grid.size() << " (" << theta / 3.14159265358979
         << " pi)";
      progress(os.str());
    }
    result.points.push_back(to_point(
        theta,
        run_sweep_point(params, theta, window, sizes, derive_seed(master_seed, i), workers)));
  }
  return result;
}

SweepResult accuracy_vs_window(std::span<const double> delta_t_grid,
                               const ChannelParams& params, double theta, double t_start,
                               const SweepSizes& sizes, std::uint64_t master_seed, int workers,
                               const ProgressFn& progress) {
  if (delta_t_grid.empty()) throw ConfigError("empty delta_t grid");
  SweepResult result;
  result.axis_name = "delta_t";
  result.params = params;
  result.window = {t_start, 0.0};
  result.n_train = sizes.n_train;
  result.n_test = sizes.n_test;
  result.retrains = sizes.retrains;
  result.master_seed = master_seed;
  for (std::size_t i = 0; i < delta_t_grid.size(); ++i) {
    const MeasurementWindow w{t_start, delta_t_grid[i]};
    if (progress) {
      std::ostringstream os;
      os << "delta_t " << i + 1 << "/" << delta_t_grid.size() << " (" << delta_t_grid[i] << ")";
      progress(os.str());
    }
    result.points.push_back(to_point(
        delta_t_grid[i],
        run_sweep_point(params, theta, w, sizes, derive_seed(master_seed, i), workers)));
  }
  return result;
}

Heatmap qber_heatmap(std::span<const double> theta_grid, std::span<const double> time_grid,
                     const ChannelParams& params, int workers) {
  params.validate();
  for (const double t : time_grid)
    if (t < 0.0 || t > params.t_final * (1.0 + 1e-12))
      throw ConfigError("heatmap time outside [0, t_final]");
  Heatmap map;
  map.rows.assign(theta_grid.begin(), theta_grid.end());
  map.cols.assign(time_grid.begin(), time_grid.end());
  map.qber.assign(theta_grid.size() * time_grid.size(), 0.0);
  parallel_for(theta_grid.size(), workers, [&](std::size_t r) {
    const Mat2 e = measurement_operator(theta_grid[r]).m;
    std::array<std::vector<Mat2>, 4> paths;
    for (std::size_t s = 0; s < 4; ++s) {
      const StateLabel label = kAllStates[s];
      const std::array<dynamics::Jump, 2> jumps = {
          dynamics::Jump{params.gamma_D, sigma_x()}, dynamics::Jump{params.gamma_E, e}};
      paths[s] = dynamics::lindblad_path(projector(pure_state(label)),
                                         hamiltonian_for(label, params.omega).m, jumps,
                                         time_grid, params.dt);
    }
    for (std::size_t c = 0; c < time_grid.size(); ++c) {
      const std::array<Mat2, 4> states = {paths[0][c], paths[1][c], paths[2][c], paths[3][c]};
      map.qber[r * time_grid.size() + c] = bb84::qber_from_final_states(states);
    }
  });
  return map;
}

Heatmap feedback_heatmap(std::span<const double> theta_grid, std::span<const double> phi_grid,
                         const ChannelParams& params, const MeasurementWindow& window,
                         int workers) {
  if (params.eta <= 0.0) throw ConfigError("feedback heatmap requires eta > 0");
  Heatmap map;
  map.rows.assign(theta_grid.begin(), theta_grid.end());
  map.cols.assign(phi_grid.begin(), phi_grid.end());
  map.qber.assign(theta_grid.size() * phi_grid.size(), 0.0);
  parallel_for(theta_grid.size() * phi_grid.size(), workers, [&](std::size_t k) {
    const std::size_t r = k / phi_grid.size();
    const std::size_t c = k % phi_grid.size();
    const Mat2 e = measurement_operator(theta_grid[r]).m;
    const Mat2 f = feedback_operator(phi_grid[c]).m;
    map.qber[k] = bb84::qber_from_final_states(bb84::evolve_four_states(params, e, window, &f));
  });
  return map;
}

std::vector<double> lambda_curve(const SweepResult& sweep) {
  std::vector<double> out;
  out.reserve(sweep.points.size());
  for (const SweepPoint& pt : sweep.points) {
    if (!(pt.acc_mean > 0.0)) throw NumericalError("lambda undefined: accuracy is zero");
    out.push_back(pt.qber / pt.acc_mean);
  }
  return out;
}

const char* to_string(ScheduleObjective o) {
  switch (o) {
    case ScheduleObjective::MinQber: return "min_qber";
    case ScheduleObjective::MaxAccuracy: return "max_accuracy";
    case ScheduleObjective::MinLambda: return "min_lambda";
  }
  return "?";
}

double AccuracyProfile::at(double theta_query) const {
  if (theta.empty() || theta.size() != accuracy.size())
    throw ConfigError("accuracy profile is empty or ragged");
  double best = accuracy[0];
  double best_dist = 1e300;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    double d = std::fmod(std::abs(theta_query - theta[i]), kTwoPi);
    d = std::min(d, kTwoPi - d);
    if (d < best_dist) {
      best_dist = d;
      best = accuracy[i];
    }
  }
  return best;
}

ScheduleTrace optimized_angle_trace(ScheduleObjective objective, const ChannelParams& params,
                                    std::span<const double> theta_grid,
                                    const AccuracyProfile* accuracy, double segment_length,
                                    int workers) {
  params.validate();
  if (theta_grid.empty()) throw ConfigError("empty theta grid");
  const double n_seg_raw = params.t_final / segment_length;
  const auto n_seg = static_cast<std::size_t>(std::llround(n_seg_raw));
  if (n_seg == 0 || std::abs(n_seg_raw - static_cast<double>(n_seg)) > 1e-9)
    throw ConfigError("segment length must tile [0, t_final] exactly");
  const bool needs_profile =
      objective == ScheduleObjective::MaxAccuracy || objective == ScheduleObjective::MinLambda;
  if (needs_profile && accuracy == nullptr)
    throw ConfigError("accuracy-driven schedule needs a static accuracy profile");

  std::array<Mat2, 4> states;
  std::array<Mat2, 4> hams;
  for (std::size_t s = 0; s < 4; ++s) {
    states[s] = projector(pure_state(kAllStates[s]));
    hams[s] = hamiltonian_for(kAllStates[s], params.omega).m;
  }

  ScheduleTrace trace;
  trace.schedule.segment_length = segment_length;
  trace.schedule.objective = objective;

  for (std::size_t seg = 0; seg < n_seg; ++seg) {
    std::vector<double> objective_value(theta_grid.size(), 0.0);
    std::vector<std::array<Mat2, 4>> end_states(theta_grid.size());
    parallel_for(theta_grid.size(), workers, [&](std::size_t gi) {
      const Mat2 e = measurement_operator(theta_grid[gi]).m;
      std::array<Mat2, 4> next;
      for (std::size_t s = 0; s < 4; ++s) {
        const std::array<dynamics::Jump, 2> jumps = {
            dynamics::Jump{params.gamma_D, sigma_x()}, dynamics::Jump{params.gamma_E, e}};
        next[s] = dynamics::lindblad_solve(states[s], hams[s], jumps, segment_length, params.dt);
      }
      end_states[gi] = next;
      const double qber_end = bb84::qber_from_final_states(next);
      switch (objective) {
        case ScheduleObjective::MinQber: objective_value[gi] = qber_end; break;
        case ScheduleObjective::MaxAccuracy:
          objective_value[gi] = -accuracy->at(theta_grid[gi]);
          break;
        case ScheduleObjective::MinLambda:
          objective_value[gi] = qber_end / accuracy->at(theta_grid[gi]);
          break;
      }
    });
    std::size_t best = 0;
    for (std::size_t gi = 1; gi < theta_grid.size(); ++gi)
      if (objective_value[gi] < objective_value[best]) best = gi;
    states = end_states[best];
    trace.schedule.theta.push_back(theta_grid[best]);
    trace.times.push_back(static_cast<double>(seg + 1) * segment_length);
    trace.qber.push_back(bb84::qber_from_final_states(states));
  }
  return trace;
}

std::vector<SummaryRow> summary_table(const ChannelParams& params,
                                      const MeasuredAccuracies& measured) {
  params.validate();
  const double gdt = params.gamma_D * params.t_final;
  if (!measured.continuous_sigma_z || !measured.windowed_optimal)
    throw ConfigError(
        "missing prerequisite runs: evaluate the sigma_z and windowed-theta classifiers first "
        "(dlca train + dlca eval), then pass their accuracies to the report");

  const auto pct = [](double v) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(1);
    os << 100.0 * v << "%";
    return os.str();
  };

  std::vector<SummaryRow> rows;
  rows.push_back({"none", "none", "0.0%", "n/a", "", true});
  rows.push_back(
      {"bit-flip", "none", pct(bb84::analytic_qber_no_attack(gdt)), "n/a", "", true});
  rows.push_back({"bit-flip", "projective (gamma_D t*=0.3)",
                  pct(bb84::analytic_qber_projective(gdt)),
                  pct(bb84::analytic_accuracy_projective(0.3)), "", true});

  const Mat2 e_z = sigma_z();
  const double qber_sigma_z = bb84::qber_from_final_states(
      bb84::evolve_four_states(params, e_z, MeasurementWindow::full(params)));
  rows.push_back({"bit-flip", "continuous sigma_z, full window", pct(qber_sigma_z),
                  pct(*measured.continuous_sigma_z), "", true});

  const double theta_opt = 1.86 * 3.14159265358979323846;
  const Mat2 e_opt = measurement_operator(theta_opt).m;
  const MeasurementWindow w{0.1 / params.gamma_D, 0.4 / params.gamma_D};
  const double qber_windowed =
      bb84::qber_from_final_states(bb84::evolve_four_states(params, e_opt, w));
  rows.push_back({"bit-flip", "continuous theta=1.86pi, window [0.1, 0.5]/gamma_D",
                  pct(qber_windowed), pct(*measured.windowed_optimal), "", true});

  rows.push_back({"bit-flip", "time-shift (literature)", "+1-2 pt", "60-70%",
                  "literature comparison, not computed", false});
  return rows;
}

}  // namespace dlca::experiments
