#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "dlca/dynamics.hpp"

namespace dlca::cli {

// Effective run configuration. Rates and times are in gamma_D-scaled units
// (gamma_D = 1 unless overridden); angles are in units of pi. The built-in
// defaults reproduce the headline setting eta = 0.5, omega = gamma_E =
// gamma_D, gamma_D t_f = 3.
struct RunConfig {
  dynamics::ChannelParams channel;  // defaults: 1, 1, 0.5, 1, 3, 1e-3

  struct Attack {
    std::string variant = "continuous";  // none | projective | continuous | feedback
    double theta_over_pi = 0.5;
    double phi_over_pi = 0.94;
    double t_star = 0.3;
    dynamics::MeasurementWindow window{0.0, 3.0};
  } attack;

  struct Dataset {
    std::size_t n_train = 20000;  // desk scale; reference regimen is 90000/10000
    std::size_t n_test = 5000;
    int bin_factor = dynamics::kDefaultBinFactor;
    std::string train_path;  // default: <output.dir>/train_set.dset
    std::string test_path;   // default: <output.dir>/test_set.dset
  } dataset;

  struct Training {
    int batch_size = 32;
    int epochs = 1;
    std::uint64_t init_seed = 2;
    std::uint64_t shuffle_seed = 1;
  } training;

  struct Sweep {
    int theta_points = 64;
    int phi_points = 64;
    int time_points = 61;
    int delta_t_points = 6;
    int retrains = 4;
    double t_start = 0.1;
  } sweep;

  struct Output {
    std::string dir = "out";
  } output;

  std::uint64_t master_seed = 20240901;
  int workers = 0;  // 0 -> hardware concurrency

  std::filesystem::path train_set_path() const;
  std::filesystem::path test_set_path() const;
  std::filesystem::path model_path() const;

  void validate() const;  // throws ConfigError
  std::string to_json_string() const;
};

// Parses and validates a JSON config file. The channel section must be
// complete; unknown keys anywhere are rejected by name.
RunConfig load_config(const std::filesystem::path& path);

// Parses the same JSON from a string (used by tests and the config echo).
RunConfig parse_config(const std::string& text);

}  // namespace dlca::cli
