#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dlca/bb84.hpp"
#include "dlca/classifier.hpp"
#include "dlca/dataset.hpp"

namespace dlca::experiments {

using dynamics::ChannelParams;
using dynamics::MeasurementWindow;

// The four angles where the accuracy curve peaks (reference values used by
// refinement grids and reports).
inline constexpr std::array<double, 4> kPeakAnglesOverPi = {0.16, 0.87, 1.15, 1.86};

struct SweepPoint {
  double axis = 0.0;       // theta, phi, time or delta_t, depending on the sweep
  double qber = 0.0;       // deterministic ensemble QBER
  double acc_mean = 0.0;   // mean test accuracy over retrains
  double acc_std = 0.0;    // stddev over retrains (population)
  double lambda = 0.0;     // qber / acc_mean
  std::vector<double> accuracies;  // one per retrain
};

struct SweepResult {
  std::string axis_name;
  std::vector<SweepPoint> points;
  ChannelParams params;
  MeasurementWindow window;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  int retrains = 0;
  std::uint64_t master_seed = 0;
};

struct SweepSizes {
  std::size_t n_train = 20000;  // desk scale; the reference regimen is 90000/10000
  std::size_t n_test = 5000;
  int retrains = 4;
};

using ProgressFn = std::function<void(const std::string&)>;

// Per theta: generate datasets, train `retrains` classifiers with independent
// seeds and report mean/std accuracy plus the deterministic QBER.
SweepResult sweep_theta(std::span<const double> theta_grid, const ChannelParams& params,
                        const MeasurementWindow& window, const SweepSizes& sizes,
                        std::uint64_t master_seed, int workers,
                        const ProgressFn& progress = nullptr);

struct Heatmap {
  std::vector<double> rows;  // row axis values (theta)
  std::vector<double> cols;  // column axis values (time or phi)
  std::vector<double> qber;  // rows.size() x cols.size(), row-major

  double at(std::size_t r, std::size_t c) const { return qber[r * cols.size() + c]; }
};

// QBER(theta, t) under full-time continuous measurement (deterministic).
Heatmap qber_heatmap(std::span<const double> theta_grid, std::span<const double> time_grid,
                     const ChannelParams& params, int workers = 1);

// QBER(theta, phi) from the deterministic feedback equation on the given window.
Heatmap feedback_heatmap(std::span<const double> theta_grid, std::span<const double> phi_grid,
                         const ChannelParams& params, const MeasurementWindow& window,
                         int workers = 1);

// lambda = qber/accuracy per point; fails on zero accuracy.
std::vector<double> lambda_curve(const SweepResult& sweep);

// Accuracy/QBER versus measurement duration at fixed theta and start time.
SweepResult accuracy_vs_window(std::span<const double> delta_t_grid,
                               const ChannelParams& params, double theta, double t_start,
                               const SweepSizes& sizes, std::uint64_t master_seed, int workers,
                               const ProgressFn& progress = nullptr);

enum class ScheduleObjective { MinQber, MaxAccuracy, MinLambda };

const char* to_string(ScheduleObjective o);

// A static accuracy profile A(theta) used as the per-segment proxy objective
// for the accuracy-driven schedules (retraining a network per segment is not
// tractable, so the curve is supplied by a prior sweep).
struct AccuracyProfile {
  std::vector<double> theta;
  std::vector<double> accuracy;

  double at(double theta_query) const;  // nearest-angle lookup (periodic)
};

struct AngleSchedule {
  double segment_length = 0.0;
  std::vector<double> theta;  // one angle per segment
  ScheduleObjective objective = ScheduleObjective::MinQber;
};

struct ScheduleTrace {
  AngleSchedule schedule;
  std::vector<double> times;  // segment-end times
  std::vector<double> qber;   // ensemble QBER at those times
};

// Greedy per-segment optimization over theta_grid, updating every
// gamma_D t = 0.3 by default; propagates the four ensemble states.
ScheduleTrace optimized_angle_trace(ScheduleObjective objective, const ChannelParams& params,
                                    std::span<const double> theta_grid,
                                    const AccuracyProfile* accuracy,
                                    double segment_length = 0.3, int workers = 1);

struct SummaryRow {
  std::string dissipation;
  std::string attack;
  std::string qber;      // formatted percentage
  std::string accuracy;  // formatted percentage, "n/a" when no spy estimate exists
  std::string note;
  bool computed = true;  // false for literature annotation rows
};

// Measured classifier accuracies for the continuous rows, keyed by scheme.
struct MeasuredAccuracies {
  std::optional<double> continuous_sigma_z;
  std::optional<double> windowed_optimal;
};

std::vector<SummaryRow> summary_table(const ChannelParams& params,
                                      const MeasuredAccuracies& measured);

}  // namespace dlca::experiments
