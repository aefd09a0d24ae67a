#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dlca/dynamics.hpp"
#include "dlca/qcore.hpp"

namespace dlca::data {

using dynamics::ChannelParams;
using dynamics::MeasurementWindow;

struct DatasetMeta {
  ChannelParams params;
  double theta = 0.0;
  MeasurementWindow window;
  int bin_factor = dynamics::kDefaultBinFactor;
  std::uint64_t master_seed = 0;
  std::string generator_version;
  std::string transform;  // empty for raw currents
};

// Labeled photocurrents, one row per simulated qubit; rows are stored
// contiguously (n x seq_len).
struct PhotocurrentDataset {
  DatasetMeta meta;
  std::size_t seq_len = 0;
  std::vector<std::uint8_t> labels;        // values 0..3
  std::vector<double> currents;            // labels.size() * seq_len

  std::size_t size() const { return labels.size(); }
  std::span<const double> current(std::size_t i) const {
    return {currents.data() + i * seq_len, seq_len};
  }
  std::span<double> current(std::size_t i) { return {currents.data() + i * seq_len, seq_len}; }
};

// Global scalar standardization, fit on the training split only.
struct Standardizer {
  double mean = 0.0;
  double std_dev = 1.0;
};

// n labeled trajectories with e = e(theta); sample i draws its label and its
// Wiener stream from seeds derived from (master_seed, i). Bit-stable across
// runs and worker counts.
PhotocurrentDataset generate_dataset(std::size_t n, const ChannelParams& params, double theta,
                                     const MeasurementWindow& window, std::uint64_t master_seed,
                                     int bin_factor = dynamics::kDefaultBinFactor,
                                     int workers = 1);

Standardizer fit_standardizer(const PhotocurrentDataset& train);

// x -> reverse_time((x - mean)/std); the transform is recorded in the metadata.
PhotocurrentDataset preprocess(const PhotocurrentDataset& ds, const Standardizer& s);

// Seeded shuffle, then split at the fraction; throws on degenerate splits.
std::pair<PhotocurrentDataset, PhotocurrentDataset> split(const PhotocurrentDataset& ds,
                                                          double train_fraction,
                                                          std::uint64_t seed);

// Binary container: magic "DLCADSET", version u16, length-prefixed UTF-8
// metadata, n x (label byte + little-endian f64 samples), CRC-32 trailer.
void save(const PhotocurrentDataset& ds, const std::filesystem::path& path);

struct LoadResult {
  PhotocurrentDataset dataset;
  std::vector<std::string> warnings;  // e.g. generator version mismatch
};

LoadResult load(const std::filesystem::path& path);

// One row per sample: label, samples...; header comments carry the metadata.
void export_csv(const PhotocurrentDataset& ds, const std::filesystem::path& path);

}  // namespace dlca::data
