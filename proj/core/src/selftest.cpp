#include "dlca/selftest.hpp"

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "dlca/bb84.hpp"
#include "dlca/classifier.hpp"
#include "dlca/dataset.hpp"
#include "dlca/dynamics.hpp"
#include "dlca/qcore.hpp"
#include "dlca/rng.hpp"

namespace dlca::selftest {

namespace {

Mat2 random_hermitian(Rng& rng, double scale) {
  const double a = scale * (2.0 * rng.uniform() - 1.0);
  const double d = scale * (2.0 * rng.uniform() - 1.0);
  const cplx b(scale * (2.0 * rng.uniform() - 1.0), scale * (2.0 * rng.uniform() - 1.0));
  return {a, b, std::conj(b), d};
}

Mat2 random_density(Rng& rng) {
  // G G^dag / Tr, always a valid state.
  Mat2 g;
  for (auto& x : g.a) x = cplx(2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0);
  Mat2 rho = g * adjoint(g);
  const double tr = trace(rho).real();
  rho *= 1.0 / tr;
  return rho;
}

Mat2 random_operator(Rng& rng) {
  Mat2 o;
  for (auto& x : o.a) x = cplx(2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0);
  return o;
}

struct Suite {
  std::vector<CheckResult> results;
  std::ostream* log = nullptr;

  void record(const std::string& name, bool passed, const std::string& detail) {
    results.push_back({name, passed, detail});
    if (log != nullptr)
      *log << (passed ? "[PASS] " : "[FAIL] ") << name << (detail.empty() ? "" : ": ") << detail
           << "\n";
  }

  void check(const std::string& name, double worst, double tolerance) {
    std::ostringstream os;
    os << "max deviation " << worst << " (tolerance " << tolerance << ")";
    record(name, worst <= tolerance, os.str());
  }
};

}  // namespace

std::vector<CheckResult> run_selftest(int workers, std::ostream* log) {
  Suite suite;
  suite.log = log;
  Rng rng(0xd1cau);

  // Superoperator trace/Hermiticity invariants on random inputs.
  {
    double worst_trace = 0.0, worst_herm = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const Mat2 rho = random_density(rng);
      const Mat2 o = random_operator(rng);
      worst_trace = std::max(worst_trace, std::abs(trace(dissipator(o, rho))));
      worst_trace = std::max(worst_trace, std::abs(trace(innovation(o, rho))));
      const Mat2 oh = random_hermitian(rng, 1.0);
      worst_herm = std::max(worst_herm, hermiticity_defect(dissipator(oh, rho)));
      worst_herm = std::max(worst_herm, hermiticity_defect(innovation(oh, rho)));
    }
    suite.check("superoperators traceless (1000 random states)", worst_trace, 1e-12);
    suite.check("superoperators preserve Hermiticity", worst_herm, 1e-12);
  }

  // Dark states of the bit-flip dissipator.
  {
    double worst = 0.0;
    for (const StateLabel s : {StateLabel::Plus, StateLabel::Minus})
      worst = std::max(worst, max_abs_entry(dissipator(sigma_x(), projector(pure_state(s)))));
    suite.check("dark states |+->/|-> of sigma_x dissipation", worst, 0.0);
  }

  // e(theta)^2 = I across the circle.
  {
    double worst = 0.0;
    for (int i = 0; i < 257; ++i) {
      const double theta = 6.28318530717958647 * i / 257.0;
      const Mat2 e = measurement_operator(theta).m;
      worst = std::max(worst, max_abs_entry(e * e - Mat2::identity()));
    }
    suite.check("measurement operator squares to identity", worst, 1e-12);
  }

  // Born statistics of project().
  {
    const Mat2 rho{0.7, 0.0, 0.0, 0.3};
    const int n = 100000;
    int zeros = 0;
    Rng prng(0xb0f1u);
    for (int i = 0; i < n; ++i)
      if (project(rho, Basis::PauliZ, prng.uniform()).first == 0) ++zeros;
    const double freq = static_cast<double>(zeros) / n;
    const double tol = 3.0 * std::sqrt(0.7 * 0.3 / n);
    suite.check("Born frequencies (diag(0.7,0.3), 1e5 draws)", std::abs(freq - 0.7), tol);
  }

  // Conditioned states stay valid along an SME trajectory.
  {
    dynamics::ChannelParams p;
    const auto w = dynamics::MeasurementWindow::full(p);
    const auto rec = dynamics::simulate_trajectory(StateLabel::Plus, p, sigma_z(), w, 42);
    bool ok = true;
    std::string detail = "final state valid";
    try {
      (void)DensityMatrix2(rec.final_state);
    } catch (const std::exception& ex) {
      ok = false;
      detail = ex.what();
    }
    suite.record("SME trajectory keeps a valid density matrix", ok, detail);
  }

  // Projective-attack QBER does not depend on the measurement time t*.
  {
    dynamics::ChannelParams p;
    const std::uint64_t n = 30000;
    std::array<double, 3> q{};
    std::array<double, 3> se{};
    const std::array<double, 3> t_stars = {0.3, 1.5, 2.7};
    for (std::size_t k = 0; k < 3; ++k) {
      const auto stats = bb84::run_protocol(n, p, bb84::ProjectiveAttack{t_stars[k]},
                                            derive_seed(0xabcd, k), workers);
      q[k] = stats.qber;
      se[k] = stats.stderr_qber;
    }
    double worst = 0.0;
    for (std::size_t a = 0; a < 3; ++a)
      for (std::size_t b = a + 1; b < 3; ++b) {
        const double gap = std::abs(q[a] - q[b]);
        const double tol = 3.0 * std::sqrt(se[a] * se[a] + se[b] * se[b]);
        worst = std::max(worst, gap - tol);
      }
    suite.check("projective QBER independent of t* (3x pairwise)", worst, 0.0);
  }

  // Softmax outputs are normalized probabilities for random models and inputs.
  {
    double worst = 0.0;
    bool in_range = true;
    for (int trial = 0; trial < 20; ++trial) {
      const auto model = nn::LstmClassifier::initialized(nn::Architecture{8, 8, 6},
                                                         derive_seed(7, trial));
      std::vector<double> seq(25);
      for (auto& v : seq) v = 3.0 * (2.0 * rng.uniform() - 1.0);
      const auto probs = nn::forward(model, seq);
      double sum = 0.0;
      for (const double pv : probs) {
        sum += pv;
        in_range = in_range && pv > 0.0 && pv < 1.0;
      }
      worst = std::max(worst, std::abs(sum - 1.0));
    }
    suite.check("softmax normalized to 1e-9", worst, 1e-9);
    suite.record("softmax outputs in (0,1)", in_range, "");
  }

  // Determinism by seed: trajectories and datasets are bit-identical.
  {
    dynamics::ChannelParams p;
    const auto w = dynamics::MeasurementWindow::full(p);
    const auto a = dynamics::simulate_trajectory(StateLabel::Zero, p, sigma_z(), w, 99);
    const auto b = dynamics::simulate_trajectory(StateLabel::Zero, p, sigma_z(), w, 99);
    const bool same = a.coarse_current == b.coarse_current &&
                      max_abs_entry(a.final_state - b.final_state) == 0.0;
    suite.record("trajectory bit-identical under one seed", same, "");

    const auto d1 = data::generate_dataset(24, p, 1.0, w, 123, 10, 1);
    const auto d2 = data::generate_dataset(24, p, 1.0, w, 123, 10, workers > 1 ? workers : 2);
    suite.record("dataset bit-identical across worker counts",
                 d1.labels == d2.labels && d1.currents == d2.currents, "");
  }

  // Dataset round-trip through the binary container is bit-exact.
  {
    dynamics::ChannelParams p;
    p.t_final = 0.5;
    const dynamics::MeasurementWindow w{0.0, 0.5};
    const auto ds = data::generate_dataset(16, p, 0.7, w, 321, 10, workers);
    const auto path = std::filesystem::temp_directory_path() /
                      ("dlca_selftest_" + std::to_string(::getpid()) + ".dset");
    data::save(ds, path);
    const auto loaded = data::load(path);
    std::filesystem::remove(path);
    suite.record("dataset save/load round-trip bit-exact",
                 loaded.dataset.labels == ds.labels && loaded.dataset.currents == ds.currents &&
                     loaded.warnings.empty(),
                 "");
  }

  // Wiener increments have mean ~0 and variance ~dt.
  {
    WienerStream ws(2024);
    const double dt = 1e-3;
    const int n = 200000;
    double sum = 0.0, ss = 0.0;
    for (int i = 0; i < n; ++i) {
      const double dw = ws.next(dt);
      sum += dw;
      ss += dw * dw;
    }
    const double mean = sum / n;
    const double var = ss / n - mean * mean;
    const double mean_tol = 4.0 * std::sqrt(dt / n);
    const double var_tol = 4.0 * dt * std::sqrt(2.0 / n);
    suite.check("Wiener increments mean ~ 0", std::abs(mean), mean_tol);
    suite.check("Wiener increments variance ~ dt", std::abs(var - dt), var_tol);
  }

  return suite.results;
}

bool all_passed(const std::vector<CheckResult>& results) {
  for (const auto& r : results)
    if (!r.passed) return false;
  return true;
}

}  // namespace dlca::selftest
