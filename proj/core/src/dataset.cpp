#include "dlca/dataset.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "dlca/csv.hpp"
#include "dlca/errors.hpp"
#include "dlca/parallel.hpp"
#include "dlca/rng.hpp"
#include "dlca/version.hpp"

namespace dlca::data {

namespace {

constexpr char kMagic[8] = {'D', 'L', 'C', 'A', 'D', 'S', 'E', 'T'};
constexpr std::uint16_t kFormatVersion = 1;

void put_bytes(std::vector<std::uint8_t>& buf, const void* p, std::size_t n) {
  const auto* b = static_cast<const std::uint8_t*>(p);
  buf.insert(buf.end(), b, b + n);
}

template <typename T>
void put_le(std::vector<std::uint8_t>& buf, T v) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i)
    buf.push_back(static_cast<std::uint8_t>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
}

void put_f64_le(std::vector<std::uint8_t>& buf, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_le(buf, bits);
}

class Reader {
 public:
  Reader(const std::uint8_t* p, std::size_t n) : p_(p), n_(n) {}

  const std::uint8_t* take(std::size_t n) {
    if (pos_ + n > n_) throw IoError("dataset file truncated");
    const std::uint8_t* out = p_ + pos_;
    pos_ += n;
    return out;
  }

  template <typename T>
  T le() {
    const std::uint8_t* b = take(sizeof(T));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return static_cast<T>(v);
  }

  double f64_le() {
    const std::uint64_t bits = le<std::uint64_t>();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }

  std::size_t pos() const { return pos_; }

 private:
  const std::uint8_t* p_;
  std::size_t n_;
  std::size_t pos_ = 0;
};

nlohmann::json meta_to_json(const PhotocurrentDataset& ds) {
  const DatasetMeta& m = ds.meta;
  return nlohmann::json{
      {"params",
       {{"gamma_D", m.params.gamma_D},
        {"gamma_E", m.params.gamma_E},
        {"eta", m.params.eta},
        {"omega", m.params.omega},
        {"t_final", m.params.t_final},
        {"dt", m.params.dt}}},
      {"theta", m.theta},
      {"window", {{"t_start", m.window.t_start}, {"delta_t", m.window.delta_t}}},
      {"bin_factor", m.bin_factor},
      {"master_seed", m.master_seed},
      {"generator_version", m.generator_version},
      {"transform", m.transform},
      {"n_samples", ds.size()},
      {"seq_len", ds.seq_len}};
}

}  // namespace

PhotocurrentDataset generate_dataset(std::size_t n, const ChannelParams& params, double theta,
                                     const MeasurementWindow& window, std::uint64_t master_seed,
                                     int bin_factor, int workers) {
  if (n < 1) throw ConfigError("dataset size must be >= 1");
  const dynamics::StepGrid grid = dynamics::make_step_grid(params, window, bin_factor);
  const std::size_t seq_len =
      static_cast<std::size_t>((grid.window_end - grid.window_begin) / bin_factor);
  const Mat2 e = measurement_operator(theta).m;

  PhotocurrentDataset ds;
  ds.meta = {params, theta, window, bin_factor, master_seed, kVersion, ""};
  ds.seq_len = seq_len;
  ds.labels.assign(n, 0);
  ds.currents.assign(n * seq_len, 0.0);

  parallel_for(n, workers, [&](std::size_t i) {
    Rng head(derive_seed(master_seed, i));
    const auto label = static_cast<StateLabel>(head.below(4));
    const std::uint64_t traj_seed = head.next_u64();
    const auto rec =
        dynamics::simulate_trajectory(label, params, e, window, traj_seed, bin_factor);
    ds.labels[i] = static_cast<std::uint8_t>(label);
    std::copy(rec.coarse_current.begin(), rec.coarse_current.end(),
              ds.currents.begin() + i * seq_len);
  });
  return ds;
}

Standardizer fit_standardizer(const PhotocurrentDataset& train) {
  if (train.size() == 0 || train.seq_len == 0) throw ConfigError("empty training split");
  const double n = static_cast<double>(train.currents.size());
  double sum = 0.0;
  for (const double v : train.currents) sum += v;
  const double mean = sum / n;
  double ss = 0.0;
  for (const double v : train.currents) ss += (v - mean) * (v - mean);
  const double std_dev = std::sqrt(ss / n);  // population convention
  if (!(std_dev > 1e-300)) throw NumericalError("zero variance: cannot standardize");
  return {mean, std_dev};
}

PhotocurrentDataset preprocess(const PhotocurrentDataset& ds, const Standardizer& s) {
  if (!(s.std_dev > 0.0)) throw ConfigError("standardizer not fitted");
  PhotocurrentDataset out = ds;
  const double inv = 1.0 / s.std_dev;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto src = ds.current(i);
    auto dst = out.current(i);
    for (std::size_t j = 0; j < ds.seq_len; ++j)
      dst[j] = (src[ds.seq_len - 1 - j] - s.mean) * inv;
  }
  std::ostringstream tag;
  tag << "standardized(mean=" << s.mean << ",std=" << s.std_dev << ")+time_flipped";
  if (!out.meta.transform.empty()) out.meta.transform += ";";
  out.meta.transform += tag.str();
  return out;
}

std::pair<PhotocurrentDataset, PhotocurrentDataset> split(const PhotocurrentDataset& ds,
                                                          double train_fraction,
                                                          std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ConfigError("train fraction must lie strictly between 0 and 1");
  const std::size_t n = ds.size();
  const auto n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(n)));
  if (n_train == 0 || n_train == n) throw ConfigError("split produces an empty side");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = rng.below(i + 1);
    std::swap(order[i], order[j]);
  }

  const auto take = [&](std::size_t begin, std::size_t end) {
    PhotocurrentDataset part;
    part.meta = ds.meta;
    part.seq_len = ds.seq_len;
    part.labels.reserve(end - begin);
    part.currents.reserve((end - begin) * ds.seq_len);
    for (std::size_t k = begin; k < end; ++k) {
      const std::size_t i = order[k];
      part.labels.push_back(ds.labels[i]);
      const auto row = ds.current(i);
      part.currents.insert(part.currents.end(), row.begin(), row.end());
    }
    return part;
  };
  return {take(0, n_train), take(n_train, n)};
}

void save(const PhotocurrentDataset& ds, const std::filesystem::path& path) {
  std::vector<std::uint8_t> buf;
  buf.reserve(64 + ds.size() * (1 + 8 * ds.seq_len));
  put_bytes(buf, kMagic, sizeof(kMagic));
  put_le(buf, kFormatVersion);
  const std::string meta = meta_to_json(ds).dump();
  put_le(buf, static_cast<std::uint32_t>(meta.size()));
  put_bytes(buf, meta.data(), meta.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    buf.push_back(ds.labels[i]);
    for (const double v : ds.current(i)) put_f64_le(buf, v);
  }
  const auto crc = static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(buf.size())));
  put_le(buf, crc);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("short write to " + path.string());
}

LoadResult load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open " + path.string());
  const auto size = static_cast<std::size_t>(in.tellg());
  if (size < sizeof(kMagic) + 2 + 4 + 4) throw IoError("dataset file truncated");
  std::vector<std::uint8_t> buf(size);
  in.seekg(0);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(size));
  if (!in) throw IoError("read failure on " + path.string());

  const auto stored_crc = static_cast<std::uint32_t>(buf[size - 4]) |
                          static_cast<std::uint32_t>(buf[size - 3]) << 8 |
                          static_cast<std::uint32_t>(buf[size - 2]) << 16 |
                          static_cast<std::uint32_t>(buf[size - 1]) << 24;
  const auto computed_crc = static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(size - 4)));
  if (stored_crc != computed_crc) throw IoError("dataset checksum mismatch");

  Reader r(buf.data(), size - 4);
  if (std::memcmp(r.take(sizeof(kMagic)), kMagic, sizeof(kMagic)) != 0)
    throw IoError("not a photocurrent dataset (bad magic)");
  const auto version = r.le<std::uint16_t>();
  if (version != kFormatVersion) {
    std::ostringstream os;
    os << "unsupported dataset format version " << version;
    throw IoError(os.str());
  }
  const auto meta_len = r.le<std::uint32_t>();
  const std::uint8_t* meta_bytes = r.take(meta_len);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(meta_bytes, meta_bytes + meta_len);
  } catch (const nlohmann::json::exception& ex) {
    throw IoError(std::string("corrupt dataset metadata: ") + ex.what());
  }

  LoadResult result;
  PhotocurrentDataset& ds = result.dataset;
  try {
    const auto& p = meta.at("params");
    ds.meta.params = {p.at("gamma_D"), p.at("gamma_E"), p.at("eta"),
                      p.at("omega"),   p.at("t_final"), p.at("dt")};
    ds.meta.theta = meta.at("theta");
    ds.meta.window = {meta.at("window").at("t_start"), meta.at("window").at("delta_t")};
    ds.meta.bin_factor = meta.at("bin_factor");
    ds.meta.master_seed = meta.at("master_seed");
    ds.meta.generator_version = meta.at("generator_version");
    ds.meta.transform = meta.at("transform");
    ds.seq_len = meta.at("seq_len");
    const std::size_t n = meta.at("n_samples");
    ds.labels.reserve(n);
    ds.currents.reserve(n * ds.seq_len);
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint8_t label = *r.take(1);
      if (label > 3) throw IoError("dataset label out of range");
      ds.labels.push_back(label);
      for (std::size_t j = 0; j < ds.seq_len; ++j) ds.currents.push_back(r.f64_le());
    }
  } catch (const nlohmann::json::exception& ex) {
    throw IoError(std::string("corrupt dataset metadata: ") + ex.what());
  }
  if (ds.meta.generator_version != kVersion) {
    result.warnings.push_back("dataset was generated by '" + ds.meta.generator_version +
                              "', this build is '" + kVersion + "'");
  }
  return result;
}

void export_csv(const PhotocurrentDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  csv::write_header(out, {{"meta", meta_to_json(ds).dump()}});
  out << "label";
  for (std::size_t j = 0; j < ds.seq_len; ++j) out << ",c" << j;
  out << "\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << static_cast<int>(ds.labels[i]);
    for (const double v : ds.current(i)) out << "," << csv::format_double(v);
    out << "\n";
  }
  if (!out) throw IoError("short write to " + path.string());
}

}  // namespace dlca::data
