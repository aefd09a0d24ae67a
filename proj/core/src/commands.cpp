#include "dlca/commands.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "dlca/bb84.hpp"
#include "dlca/csv.hpp"
#include "dlca/errors.hpp"
#include "dlca/experiments.hpp"
#include "dlca/parallel.hpp"
#include "dlca/rng.hpp"
#include "dlca/selftest.hpp"
#include "dlca/version.hpp"

namespace dlca::cli {

namespace {

constexpr double kPi = 3.14159265358979323846;

namespace fs = std::filesystem;

fs::path out_path(const RunConfig& cfg, const std::string& name) {
  return fs::path(cfg.output.dir) / name;
}

void ensure_output_dir(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.output.dir, ec);
  if (ec) throw IoError("cannot create output directory " + cfg.output.dir);
}

csv::MetaLines base_meta(const RunConfig& cfg) {
  return {{"config", cfg.to_json_string()},
          {"master_seed", std::to_string(cfg.master_seed)}};
}

std::ofstream open_csv(const RunConfig& cfg, const std::string& name, csv::MetaLines extra) {
  std::ofstream out(out_path(cfg, name), std::ios::trunc);
  if (!out) throw IoError("cannot open " + out_path(cfg, name).string() + " for writing");
  csv::MetaLines meta = base_meta(cfg);
  for (auto& kv : extra) meta.push_back(std::move(kv));
  csv::write_header(out, meta);
  return out;
}

std::vector<double> linspace(double lo, double hi, int n, bool include_hi) {
  std::vector<double> v;
  v.reserve(n);
  const double step = (hi - lo) / (include_hi ? std::max(1, n - 1) : n);
  for (int i = 0; i < n; ++i) v.push_back(lo + step * i);
  return v;
}

// Grid times snapped onto the integration grid so window validation passes.
std::vector<double> snapped_times(const RunConfig& cfg, int n) {
  std::vector<double> v;
  v.reserve(n);
  const double tf = cfg.channel.t_final;
  for (int i = 0; i < n; ++i) {
    const double raw = tf * static_cast<double>(i) / (n - 1);
    v.push_back(std::round(raw / cfg.channel.dt) * cfg.channel.dt);
  }
  return v;
}

data::PhotocurrentDataset load_dataset(const fs::path& path, std::ostream& out) {
  if (!fs::exists(path))
    throw IoError("dataset " + path.string() + " not found (run `dlca generate` first)");
  auto loaded = data::load(path);
  for (const auto& w : loaded.warnings) out << "warning: " << w << "\n";
  return std::move(loaded.dataset);
}

struct ModelBundle {
  nn::LstmClassifier model;
  data::Standardizer standardizer;
  std::size_t seq_len = 0;
  double theta_over_pi = 0.0;
  dynamics::MeasurementWindow window;
};

ModelBundle load_model_bundle(const fs::path& path, std::ostream& out) {
  if (!fs::exists(path))
    throw IoError("model " + path.string() + " not found (run `dlca train` first)");
  auto loaded = nn::load_model(path);
  for (const auto& w : loaded.warnings) out << "warning: " << w << "\n";
  ModelBundle bundle{std::move(loaded.model), {}, 0, 0.0, {}};
  try {
    const auto meta = nlohmann::json::parse(loaded.metadata_json);
    bundle.standardizer.mean = std::stod(meta.at("standardizer_mean").get<std::string>());
    bundle.standardizer.std_dev = std::stod(meta.at("standardizer_std").get<std::string>());
    bundle.seq_len = std::stoull(meta.at("seq_len").get<std::string>());
    bundle.theta_over_pi = std::stod(meta.at("theta_over_pi").get<std::string>());
    bundle.window.t_start = std::stod(meta.at("window_t_start").get<std::string>());
    bundle.window.delta_t = std::stod(meta.at("window_delta_t").get<std::string>());
  } catch (const std::exception& ex) {
    throw IoError("model checkpoint lacks training metadata: " + std::string(ex.what()));
  }
  return bundle;
}

// Scheme tag used by `report` to find the accuracies it needs.
std::string scheme_key(const RunConfig& cfg, double theta_over_pi,
                       const dynamics::MeasurementWindow& w) {
  const bool full =
      std::abs(w.t_start) < 1e-9 && std::abs(w.t_end() - cfg.channel.t_final) < 1e-9;
  if (std::abs(theta_over_pi - 0.5) < 1e-9 && full) return "continuous_sigma_z";
  if (std::abs(theta_over_pi - 1.86) < 1e-9 && std::abs(w.t_start - 0.1) < 1e-9 &&
      std::abs(w.delta_t - 0.4) < 1e-9)
    return "windowed_optimal";
  std::ostringstream os;
  os << "theta_" << theta_over_pi << "pi_window_" << w.t_start << "_" << w.t_end();
  return os.str();
}

void merge_accuracy_record(const RunConfig& cfg, const std::string& key, double accuracy) {
  const fs::path path = out_path(cfg, "accuracies.json");
  nlohmann::json j = nlohmann::json::object();
  if (fs::exists(path)) {
    std::ifstream in(path);
    try {
      in >> j;
    } catch (const nlohmann::json::exception&) {
      j = nlohmann::json::object();
    }
  }
  j[key] = accuracy;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

// Reads a previously written accuracy-vs-theta figure back as a profile.
experiments::AccuracyProfile load_accuracy_profile(const RunConfig& cfg) {
  const fs::path path = out_path(cfg, "fig_accuracy_vs_theta.csv");
  if (!fs::exists(path))
    throw IoError("missing cached sweep " + path.string() +
                  "; produce it with `dlca sweep --figure accuracy-vs-theta`");
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  experiments::AccuracyProfile profile;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;  // column header row
      continue;
    }
    std::istringstream row(line);
    std::string cell;
    std::vector<double> cells;
    while (std::getline(row, cell, ',')) cells.push_back(std::stod(cell));
    if (cells.size() < 3) throw IoError("malformed row in " + path.string());
    profile.theta.push_back(cells[0]);
    profile.accuracy.push_back(cells[2]);
  }
  if (profile.theta.empty()) throw IoError("no data rows in " + path.string());
  return profile;
}

void write_heatmap_csv(const RunConfig& cfg, const std::string& name,
                       const experiments::Heatmap& map, const std::string& col_name) {
  auto out = open_csv(cfg, name, {{"rows", "theta"}, {"cols", col_name}});
  out << "theta";
  for (const double c : map.cols) out << "," << csv::format_double(c);
  out << "\n";
  for (std::size_t r = 0; r < map.rows.size(); ++r) {
    out << csv::format_double(map.rows[r]);
    for (std::size_t c = 0; c < map.cols.size(); ++c)
      out << "," << csv::format_double(map.at(r, c));
    out << "\n";
  }
}

void write_sweep_csv(const RunConfig& cfg, const std::string& name,
                     const experiments::SweepResult& sweep) {
  auto out = open_csv(cfg, name,
                      {{"axis", sweep.axis_name},
                       {"n_train", std::to_string(sweep.n_train)},
                       {"n_test", std::to_string(sweep.n_test)},
                       {"retrains", std::to_string(sweep.retrains)}});
  out << sweep.axis_name << ",qber,acc_mean,acc_std,lambda\n";
  for (const auto& pt : sweep.points) {
    out << csv::format_double(pt.axis) << "," << csv::format_double(pt.qber) << ","
        << csv::format_double(pt.acc_mean) << "," << csv::format_double(pt.acc_std) << ","
        << csv::format_double(pt.lambda) << "\n";
  }
}

}  // namespace

int effective_workers(const RunConfig& cfg) {
  return cfg.workers > 0 ? cfg.workers : default_workers();
}

void cmd_generate(const RunConfig& cfg, bool export_csv, std::ostream& out) {
  cfg.validate();
  ensure_output_dir(cfg);
  const int workers = effective_workers(cfg);
  const double theta = cfg.attack.theta_over_pi * kPi;

  const auto train = data::generate_dataset(cfg.dataset.n_train, cfg.channel, theta,
                                            cfg.attack.window, derive_seed(cfg.master_seed, 1),
                                            cfg.dataset.bin_factor, workers);
  data::save(train, cfg.train_set_path());
  const auto test = data::generate_dataset(cfg.dataset.n_test, cfg.channel, theta,
                                           cfg.attack.window, derive_seed(cfg.master_seed, 2),
                                           cfg.dataset.bin_factor, workers);
  data::save(test, cfg.test_set_path());
  if (export_csv) {
    data::export_csv(train, fs::path(cfg.train_set_path()).replace_extension(".csv"));
    data::export_csv(test, fs::path(cfg.test_set_path()).replace_extension(".csv"));
  }
  out << "wrote " << cfg.train_set_path().string() << " (" << train.size() << " x "
      << train.seq_len << ")\n";
  out << "wrote " << cfg.test_set_path().string() << " (" << test.size() << " x " << test.seq_len
      << ")\n";
  out << "config: " << cfg.to_json_string() << "\n";
}

void cmd_train(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  ensure_output_dir(cfg);
  const int workers = effective_workers(cfg);
  const auto raw = load_dataset(cfg.train_set_path(), out);
  const auto standardizer = data::fit_standardizer(raw);
  const auto train_set = data::preprocess(raw, standardizer);

  nn::TrainConfig tc;
  tc.batch_size = cfg.training.batch_size;
  tc.epochs = cfg.training.epochs;
  tc.init_seed = cfg.training.init_seed;
  tc.shuffle_seed = cfg.training.shuffle_seed;
  tc.workers = workers;
  if (tc.epochs != 1) out << "note: epochs=" << tc.epochs << " (reference regimen is 1)\n";
  const auto result = nn::train(train_set, nn::Architecture{}, tc);

  nn::save_model(result.model, cfg.model_path(),
                 {{"standardizer_mean", csv::format_double(standardizer.mean)},
                  {"standardizer_std", csv::format_double(standardizer.std_dev)},
                  {"seq_len", std::to_string(train_set.seq_len)},
                  {"theta_over_pi", csv::format_double(raw.meta.theta / kPi)},
                  {"window_t_start", csv::format_double(raw.meta.window.t_start)},
                  {"window_delta_t", csv::format_double(raw.meta.window.delta_t)},
                  {"epochs", std::to_string(tc.epochs)},
                  {"batch_size", std::to_string(tc.batch_size)},
                  {"init_seed", std::to_string(tc.init_seed)},
                  {"shuffle_seed", std::to_string(tc.shuffle_seed)},
                  {"config", cfg.to_json_string()}});

  {
    auto curve = open_csv(cfg, "loss_curve.csv", {{"what", "per-batch training loss"}});
    curve << "batch,loss\n";
    for (std::size_t i = 0; i < result.batch_loss.size(); ++i)
      curve << i << "," << csv::format_double(result.batch_loss[i]) << "\n";
  }
  out << "wrote " << cfg.model_path().string() << " (" << result.batch_loss.size()
      << " batches)\n";
  out << "first-batch loss " << result.batch_loss.front() << ", last-batch loss "
      << result.batch_loss.back() << "\n";
}

void cmd_eval(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  ensure_output_dir(cfg);
  const int workers = effective_workers(cfg);
  const auto bundle = load_model_bundle(cfg.model_path(), out);
  const auto raw = load_dataset(cfg.test_set_path(), out);
  if (raw.seq_len != bundle.seq_len) {
    std::ostringstream os;
    os << "sequence length mismatch: model expects " << bundle.seq_len << ", dataset has "
       << raw.seq_len;
    throw ConfigError(os.str());
  }
  const auto test_set = data::preprocess(raw, bundle.standardizer);
  const auto eval = nn::evaluate(bundle.model, test_set, workers);
  const auto confidence = nn::confidence_report(bundle.model, test_set, workers);

  {
    auto conf = open_csv(cfg, "confusion.csv", {{"what", "rows true, cols predicted"}});
    conf << "true\\pred,zero,one,plus,minus\n";
    const char* names[4] = {"zero", "one", "plus", "minus"};
    for (int t = 0; t < 4; ++t) {
      conf << names[t];
      for (int p = 0; p < 4; ++p) conf << "," << eval.confusion[t][p];
      conf << "\n";
    }
  }
  {
    auto metrics = open_csv(cfg, "metrics.csv", {{"what", "test metrics"}});
    metrics << "metric,value\n";
    metrics << "accuracy," << csv::format_double(eval.accuracy) << "\n";
    for (int c = 0; c < 4; ++c)
      metrics << "class_accuracy_" << c << "," << csv::format_double(eval.class_accuracy(c))
              << "\n";
    for (int c = 0; c < 4; ++c)
      metrics << "summed_confidence_" << c << ","
              << csv::format_double(confidence[c].summed_confidence) << "\n";
  }
  merge_accuracy_record(cfg, scheme_key(cfg, bundle.theta_over_pi, bundle.window),
                        eval.accuracy);
  out << "test accuracy " << std::fixed << std::setprecision(4) << eval.accuracy << "\n";
  out.unsetf(std::ios::fixed);
  for (int c = 0; c < 4; ++c)
    out << "  class " << c << ": accuracy " << eval.class_accuracy(c) << " ("
        << eval.class_total(c) << " samples)\n";
}

void cmd_sweep(const RunConfig& cfg, const std::string& figure, std::ostream& out) {
  cfg.validate();
  ensure_output_dir(cfg);
  const int workers = effective_workers(cfg);
  const auto progress = [&out](const std::string& msg) { out << "  " << msg << "\n"; };

  if (figure == "qber-map") {
    const auto thetas = linspace(0.0, 2.0 * kPi, cfg.sweep.theta_points, false);
    const auto times = snapped_times(cfg, cfg.sweep.time_points);
    const auto map = experiments::qber_heatmap(thetas, times, cfg.channel, workers);
    write_heatmap_csv(cfg, "fig_qber_map.csv", map, "time");
    out << "wrote " << out_path(cfg, "fig_qber_map.csv").string() << " ("
        << cfg.sweep.theta_points << " x " << cfg.sweep.time_points << ")\n";
  } else if (figure == "feedback-map") {
    const auto thetas = linspace(0.0, 2.0 * kPi, cfg.sweep.theta_points, false);
    const auto phis = linspace(0.0, 2.0 * kPi, cfg.sweep.phi_points, false);
    const dynamics::MeasurementWindow w{cfg.sweep.t_start, 0.4};
    const auto map = experiments::feedback_heatmap(thetas, phis, cfg.channel, w, workers);
    write_heatmap_csv(cfg, "fig_feedback_map.csv", map, "phi");
    out << "wrote " << out_path(cfg, "fig_feedback_map.csv").string() << " ("
        << cfg.sweep.theta_points << " x " << cfg.sweep.phi_points << ")\n";
  } else if (figure == "accuracy-vs-theta") {
    const auto thetas = linspace(0.0, 2.0 * kPi, cfg.sweep.theta_points, false);
    experiments::SweepSizes sizes{cfg.dataset.n_train, cfg.dataset.n_test, cfg.sweep.retrains};
    const auto sweep =
        experiments::sweep_theta(thetas, cfg.channel, cfg.attack.window, sizes,
                                 derive_seed(cfg.master_seed, 10), workers, progress);
    write_sweep_csv(cfg, "fig_accuracy_vs_theta.csv", sweep);
    out << "wrote " << out_path(cfg, "fig_accuracy_vs_theta.csv").string() << "\n";
  } else if (figure == "lambda") {
    const auto profile = load_accuracy_profile(cfg);
    // Rebuild lambda from the cached sweep rows: lambda = qber / accuracy.
    const fs::path src = out_path(cfg, "fig_accuracy_vs_theta.csv");
    std::ifstream in(src);
    auto lambda_csv = open_csv(cfg, "fig_lambda.csv", {{"source", src.string()}});
    lambda_csv << "theta,lambda\n";
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      if (!header_seen) {
        header_seen = true;
        continue;
      }
      std::istringstream row(line);
      std::string cell;
      std::vector<double> cells;
      while (std::getline(row, cell, ',')) cells.push_back(std::stod(cell));
      if (cells.size() < 3 || !(cells[2] > 0.0))
        throw NumericalError("lambda undefined: accuracy is zero in cached sweep");
      lambda_csv << csv::format_double(cells[0]) << "," << csv::format_double(cells[1] / cells[2])
                 << "\n";
    }
    out << "wrote " << out_path(cfg, "fig_lambda.csv").string() << "\n";
  } else if (figure == "accuracy-vs-window") {
    std::vector<double> deltas;
    for (int i = 1; i <= cfg.sweep.delta_t_points; ++i) deltas.push_back(0.2 * i);
    experiments::SweepSizes sizes{cfg.dataset.n_train, cfg.dataset.n_test, cfg.sweep.retrains};
    const auto sweep = experiments::accuracy_vs_window(
        deltas, cfg.channel, 1.86 * kPi, cfg.sweep.t_start, sizes,
        derive_seed(cfg.master_seed, 11), workers, progress);
    write_sweep_csv(cfg, "fig_accuracy_vs_window.csv", sweep);
    out << "wrote " << out_path(cfg, "fig_accuracy_vs_window.csv").string() << "\n";
  } else if (figure == "qber-traces") {
    const auto profile = load_accuracy_profile(cfg);
    const auto thetas = linspace(0.0, 2.0 * kPi, cfg.sweep.theta_points, false);
    const auto min_qber = experiments::optimized_angle_trace(
        experiments::ScheduleObjective::MinQber, cfg.channel, thetas, nullptr, 0.3, workers);
    const auto max_acc = experiments::optimized_angle_trace(
        experiments::ScheduleObjective::MaxAccuracy, cfg.channel, thetas, &profile, 0.3,
        workers);
    const auto min_lambda = experiments::optimized_angle_trace(
        experiments::ScheduleObjective::MinLambda, cfg.channel, thetas, &profile, 0.3, workers);

    // Continuous sigma_z reference trace on the same grid.
    std::array<std::vector<Mat2>, 4> paths;
    for (std::size_t s = 0; s < 4; ++s) {
      const StateLabel label = kAllStates[s];
      const std::array<dynamics::Jump, 2> jumps = {
          dynamics::Jump{cfg.channel.gamma_D, sigma_x()},
          dynamics::Jump{cfg.channel.gamma_E, sigma_z()}};
      paths[s] =
          dynamics::lindblad_path(projector(pure_state(label)),
                                  hamiltonian_for(label, cfg.channel.omega).m, jumps,
                                  min_qber.times, cfg.channel.dt);
    }

    auto trace_csv = open_csv(cfg, "fig_qber_traces.csv",
                              {{"what", "QBER vs time for the attack schedules"}});
    trace_csv << "t,no_attack,projective,sigma_z,min_qber,max_accuracy,min_lambda\n";
    for (std::size_t k = 0; k < min_qber.times.size(); ++k) {
      const double t = min_qber.times[k];
      const std::array<Mat2, 4> states = {paths[0][k], paths[1][k], paths[2][k], paths[3][k]};
      trace_csv << csv::format_double(t) << ","
                << csv::format_double(bb84::analytic_qber_no_attack(cfg.channel.gamma_D * t))
                << ","
                << csv::format_double(bb84::analytic_qber_projective(cfg.channel.gamma_D * t))
                << "," << csv::format_double(bb84::qber_from_final_states(states)) << ","
                << csv::format_double(min_qber.qber[k]) << ","
                << csv::format_double(max_acc.qber[k]) << ","
                << csv::format_double(min_lambda.qber[k]) << "\n";
    }
    auto sched_csv = open_csv(cfg, "fig_optimized_angles.csv",
                              {{"what", "per-segment optimized angles"}});
    sched_csv << "t,theta_min_qber,theta_max_accuracy,theta_min_lambda\n";
    for (std::size_t k = 0; k < min_qber.times.size(); ++k)
      sched_csv << csv::format_double(min_qber.times[k]) << ","
                << csv::format_double(min_qber.schedule.theta[k]) << ","
                << csv::format_double(max_acc.schedule.theta[k]) << ","
                << csv::format_double(min_lambda.schedule.theta[k]) << "\n";
    out << "wrote " << out_path(cfg, "fig_qber_traces.csv").string() << " and "
        << out_path(cfg, "fig_optimized_angles.csv").string() << "\n";
  } else {
    throw ConfigError(
        "unknown figure '" + figure +
        "'; expected one of qber-map, feedback-map, accuracy-vs-theta, lambda, "
        "accuracy-vs-window, qber-traces");
  }
}

void cmd_report(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  ensure_output_dir(cfg);
  const fs::path acc_path = out_path(cfg, "accuracies.json");
  experiments::MeasuredAccuracies measured;
  if (fs::exists(acc_path)) {
    std::ifstream in(acc_path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& ex) {
      throw IoError("corrupt " + acc_path.string() + ": " + ex.what());
    }
    if (j.contains("continuous_sigma_z"))
      measured.continuous_sigma_z = j.at("continuous_sigma_z").get<double>();
    if (j.contains("windowed_optimal"))
      measured.windowed_optimal = j.at("windowed_optimal").get<double>();
  }
  if (!measured.continuous_sigma_z || !measured.windowed_optimal) {
    std::ostringstream os;
    os << "missing classifier accuracies in " << acc_path.string() << ".\n";
    if (!measured.continuous_sigma_z)
      os << "  produce continuous_sigma_z: dlca generate/train/eval with attack "
            "theta_over_pi=0.5 and the full window\n";
    if (!measured.windowed_optimal)
      os << "  produce windowed_optimal: dlca generate/train/eval with attack "
            "theta_over_pi=1.86 and window {\"t_start\":0.1,\"delta_t\":0.4}";
    throw IoError(os.str());
  }

  const auto rows = experiments::summary_table(cfg.channel, measured);
  auto report = open_csv(cfg, "report.csv", {{"what", "attack-scheme summary"}});
  report << "dissipation,attack,qber,accuracy,note\n";
  out << "attack-scheme summary (gamma_D t_f = " << cfg.channel.gamma_D * cfg.channel.t_final
      << ")\n";
  for (const auto& row : rows) {
    report << row.dissipation << "," << row.attack << "," << row.qber << "," << row.accuracy
           << "," << row.note << "\n";
    out << "  " << std::left << std::setw(12) << row.dissipation << std::setw(48) << row.attack
        << std::setw(10) << row.qber << std::setw(10) << row.accuracy << row.note << "\n";
  }
  out << "wrote " << out_path(cfg, "report.csv").string() << "\n";
}

void cmd_selftest(const RunConfig& cfg, std::ostream& out) {
  const int workers = effective_workers(cfg);
  const auto results = selftest::run_selftest(workers, &out);
  std::size_t passed = 0;
  for (const auto& r : results) passed += r.passed ? 1 : 0;
  out << passed << "/" << results.size() << " checks passed\n";
  if (passed != results.size()) throw NumericalError("selftest failed");
}

int run_guarded(const std::function<void()>& body, std::ostream& err) {
  try {
    body();
    return kExitOk;
  } catch (const ConfigError& ex) {
    err << "config error: " << ex.what() << "\n";
    return kExitConfig;
  } catch (const IoError& ex) {
    err << "io error: " << ex.what() << "\n";
    return kExitIo;
  } catch (const NumericalError& ex) {
    err << "numerical error: " << ex.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace dlca::cli
