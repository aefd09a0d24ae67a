#include "dlca/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dlca/errors.hpp"

namespace dlca::cli {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                         const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!known.contains(key))
      throw ConfigError("unknown config key '" + where + key + "'");
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

template <typename T>
T require(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError("missing config key '" + where + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + where + key + "' has the wrong type");
  }
}

}  // namespace

std::filesystem::path RunConfig::train_set_path() const {
  if (!dataset.train_path.empty()) return dataset.train_path;
  return std::filesystem::path(output.dir) / "train_set.dset";
}

std::filesystem::path RunConfig::test_set_path() const {
  if (!dataset.test_path.empty()) return dataset.test_path;
  return std::filesystem::path(output.dir) / "test_set.dset";
}

std::filesystem::path RunConfig::model_path() const {
  return std::filesystem::path(output.dir) / "model.mdl";
}

void RunConfig::validate() const {
  channel.validate();
  static const std::set<std::string> variants = {"none", "projective", "continuous", "feedback"};
  if (!variants.contains(attack.variant))
    throw ConfigError("attack.variant must be one of none|projective|continuous|feedback, got '" +
                      attack.variant + "'");
  if (attack.t_star < 0.0 || attack.t_star > channel.t_final)
    throw ConfigError("attack.t_star outside [0, t_final]");
  if (attack.window.t_start < 0.0 || attack.window.t_end() > channel.t_final + 1e-12)
    throw ConfigError("attack.window outside [0, t_final]");
  if (dataset.n_train < 1 || dataset.n_test < 1) throw ConfigError("dataset sizes must be >= 1");
  if (dataset.bin_factor < 1) throw ConfigError("dataset.bin_factor must be >= 1");
  if (training.batch_size < 1) throw ConfigError("training.batch_size must be >= 1");
  if (training.epochs < 1) throw ConfigError("training.epochs must be >= 1");
  if (sweep.theta_points < 1 || sweep.phi_points < 1 || sweep.time_points < 2 ||
      sweep.delta_t_points < 1 || sweep.retrains < 1)
    throw ConfigError("sweep grids must be non-degenerate");
  if (workers < 0) throw ConfigError("workers must be >= 0");
  if (output.dir.empty()) throw ConfigError("output.dir must not be empty");
}

std::string RunConfig::to_json_string() const {
  json j{
      {"channel",
       {{"gamma_D", channel.gamma_D},
        {"gamma_E", channel.gamma_E},
        {"eta", channel.eta},
        {"omega", channel.omega},
        {"t_final", channel.t_final},
        {"dt", channel.dt}}},
      {"attack",
       {{"variant", attack.variant},
        {"theta_over_pi", attack.theta_over_pi},
        {"phi_over_pi", attack.phi_over_pi},
        {"t_star", attack.t_star},
        {"window", {{"t_start", attack.window.t_start}, {"delta_t", attack.window.delta_t}}}}},
      {"dataset",
       {{"n_train", dataset.n_train},
        {"n_test", dataset.n_test},
        {"bin_factor", dataset.bin_factor},
        {"train_path", dataset.train_path},
        {"test_path", dataset.test_path}}},
      {"training",
       {{"batch_size", training.batch_size},
        {"epochs", training.epochs},
        {"init_seed", training.init_seed},
        {"shuffle_seed", training.shuffle_seed}}},
      {"sweep",
       {{"theta_points", sweep.theta_points},
        {"phi_points", sweep.phi_points},
        {"time_points", sweep.time_points},
        {"delta_t_points", sweep.delta_t_points},
        {"retrains", sweep.retrains},
        {"t_start", sweep.t_start}}},
      {"output", {{"dir", output.dir}}},
      {"master_seed", master_seed},
      {"workers", workers}};
  return j.dump();
}

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("config is not valid JSON: ") + ex.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  reject_unknown_keys(
      j, {"channel", "attack", "dataset", "training", "sweep", "output", "master_seed", "workers"},
      "");

  RunConfig cfg;
  {
    if (!j.contains("channel")) throw ConfigError("missing config key 'channel'");
    const json& c = j.at("channel");
    reject_unknown_keys(c, {"gamma_D", "gamma_E", "eta", "omega", "t_final", "dt"}, "channel.");
    cfg.channel.gamma_D = require<double>(c, "gamma_D", "channel.");
    cfg.channel.gamma_E = require<double>(c, "gamma_E", "channel.");
    cfg.channel.eta = require<double>(c, "eta", "channel.");
    cfg.channel.omega = require<double>(c, "omega", "channel.");
    cfg.channel.t_final = require<double>(c, "t_final", "channel.");
    cfg.channel.dt = require<double>(c, "dt", "channel.");
  }
  if (j.contains("attack")) {
    const json& a = j.at("attack");
    reject_unknown_keys(a, {"variant", "theta_over_pi", "phi_over_pi", "t_star", "window"},
                        "attack.");
    cfg.attack.variant = get_or<std::string>(a, "variant", cfg.attack.variant);
    cfg.attack.theta_over_pi = get_or<double>(a, "theta_over_pi", cfg.attack.theta_over_pi);
    cfg.attack.phi_over_pi = get_or<double>(a, "phi_over_pi", cfg.attack.phi_over_pi);
    cfg.attack.t_star = get_or<double>(a, "t_star", cfg.attack.t_star);
    if (a.contains("window")) {
      const json& w = a.at("window");
      reject_unknown_keys(w, {"t_start", "delta_t"}, "attack.window.");
      cfg.attack.window.t_start = require<double>(w, "t_start", "attack.window.");
      cfg.attack.window.delta_t = require<double>(w, "delta_t", "attack.window.");
    } else {
      cfg.attack.window = dynamics::MeasurementWindow::full(cfg.channel);
    }
  } else {
    cfg.attack.window = dynamics::MeasurementWindow::full(cfg.channel);
  }
  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    reject_unknown_keys(d, {"n_train", "n_test", "bin_factor", "train_path", "test_path"},
                        "dataset.");
    cfg.dataset.n_train = get_or<std::size_t>(d, "n_train", cfg.dataset.n_train);
    cfg.dataset.n_test = get_or<std::size_t>(d, "n_test", cfg.dataset.n_test);
    cfg.dataset.bin_factor = get_or<int>(d, "bin_factor", cfg.dataset.bin_factor);
    cfg.dataset.train_path = get_or<std::string>(d, "train_path", cfg.dataset.train_path);
    cfg.dataset.test_path = get_or<std::string>(d, "test_path", cfg.dataset.test_path);
  }
  if (j.contains("training")) {
    const json& t = j.at("training");
    reject_unknown_keys(t, {"batch_size", "epochs", "init_seed", "shuffle_seed"}, "training.");
    cfg.training.batch_size = get_or<int>(t, "batch_size", cfg.training.batch_size);
    cfg.training.epochs = get_or<int>(t, "epochs", cfg.training.epochs);
    cfg.training.init_seed = get_or<std::uint64_t>(t, "init_seed", cfg.training.init_seed);
    cfg.training.shuffle_seed =
        get_or<std::uint64_t>(t, "shuffle_seed", cfg.training.shuffle_seed);
  }
  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    reject_unknown_keys(
        s, {"theta_points", "phi_points", "time_points", "delta_t_points", "retrains", "t_start"},
        "sweep.");
    cfg.sweep.theta_points = get_or<int>(s, "theta_points", cfg.sweep.theta_points);
    cfg.sweep.phi_points = get_or<int>(s, "phi_points", cfg.sweep.phi_points);
    cfg.sweep.time_points = get_or<int>(s, "time_points", cfg.sweep.time_points);
    cfg.sweep.delta_t_points = get_or<int>(s, "delta_t_points", cfg.sweep.delta_t_points);
    cfg.sweep.retrains = get_or<int>(s, "retrains", cfg.sweep.retrains);
    cfg.sweep.t_start = get_or<double>(s, "t_start", cfg.sweep.t_start);
  }
  if (j.contains("output")) {
    const json& o = j.at("output");
    reject_unknown_keys(o, {"dir"}, "output.");
    cfg.output.dir = get_or<std::string>(o, "dir", cfg.output.dir);
  }
  cfg.master_seed = get_or<std::uint64_t>(j, "master_seed", cfg.master_seed);
  cfg.workers = get_or<int>(j, "workers", cfg.workers);
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace dlca::cli
