#include "dlca/bb84.hpp"

#include <atomic>
#include <cmath>

#include "dlca/errors.hpp"
#include "dlca/parallel.hpp"

namespace dlca::bb84 {

namespace {

using dynamics::FeedbackSmeSystem;
using dynamics::SmeSystem;
using dynamics::StepGrid;

StateLabel state_for(int bit, Basis basis) {
  if (basis == Basis::PauliZ) return bit == 0 ? StateLabel::Zero : StateLabel::One;
  return bit == 0 ? StateLabel::Plus : StateLabel::Minus;
}

// Conditioned evolution of one round under a continuous attack; the record
// itself is not needed here, only the state Bob receives.
Mat2 evolve_continuous(StateLabel initial, const ChannelParams& p, const Mat2& e, const Mat2* f,
                       const MeasurementWindow& w, std::uint64_t seed) {
  const StepGrid g = dynamics::make_step_grid(p, w, 1);
  const Mat2 H = hamiltonian_for(initial, p.omega).m;
  const SmeSystem plain(H, p, e);
  std::optional<FeedbackSmeSystem> fb;
  if (f != nullptr) fb.emplace(H, p, e, *f);
  WienerStream noise(seed);
  Mat2 rho = projector(pure_state(initial));
  for (std::int64_t i = 0; i < g.total_steps; ++i) {
    const bool in_window = i >= g.window_begin && i < g.window_end;
    if (!in_window) {
      rho = dynamics::sme_step(plain, rho, 0.0, false).first;
    } else if (fb) {
      rho = dynamics::feedback_sme_step(*fb, rho, noise.next(p.dt)).first;
    } else {
      rho = dynamics::sme_step(plain, rho, noise.next(p.dt), true).first;
    }
  }
  return rho;
}

}  // namespace

Preparation alice_prepare(double u1, double u2) {
  Preparation prep;
  prep.bit = u1 < 0.5 ? 0 : 1;
  prep.basis = u2 < 0.5 ? Basis::PauliZ : Basis::PauliX;
  prep.state = state_for(prep.bit, prep.basis);
  return prep;
}

ProjectiveOutcome projective_attack(const Mat2& rho, Rng& rng) {
  const Basis basis = rng.uniform() < 0.5 ? Basis::PauliZ : Basis::PauliX;
  const auto [outcome, post] = project(rho, basis, rng.uniform());
  const StateLabel guess = basis_states(basis)[static_cast<std::size_t>(outcome)].label;
  return {guess, basis, post};
}

RoundRecord run_round(const ChannelParams& params, const AttackStrategy& attack,
                      std::uint64_t round_seed) {
  Rng rng(round_seed);
  RoundRecord rec;
  const Preparation prep = alice_prepare(rng.uniform(), rng.uniform());
  rec.alice_bit = prep.bit;
  rec.alice_basis = prep.basis;
  rec.initial_state = prep.state;

  Mat2 rho = projector(pure_state(prep.state));
  if (std::holds_alternative<NoAttack>(attack)) {
    rho = dynamics::analytic_dissipative_state(rho, params.gamma_D, params.t_final);
  } else if (const auto* pa = std::get_if<ProjectiveAttack>(&attack)) {
    if (pa->t_star < 0.0 || pa->t_star > params.t_final)
      throw ConfigError("projective attack time outside [0, t_final]");
    rho = dynamics::analytic_dissipative_state(rho, params.gamma_D, pa->t_star);
    const ProjectiveOutcome eve = projective_attack(rho, rng);
    // Eve hears the basis announcement of Step 4: a wrong-basis measurement
    // leaves her guessing uniformly between the two announced-basis states.
    if (eve.basis == prep.basis) {
      rec.eve_guess = eve.guess;
    } else {
      rec.eve_guess = basis_states(prep.basis)[rng.below(2)].label;
    }
    rho = dynamics::analytic_dissipative_state(eve.post_state, params.gamma_D,
                                               params.t_final - pa->t_star);
  } else if (const auto* ca = std::get_if<ContinuousAttack>(&attack)) {
    rho = evolve_continuous(prep.state, params, ca->e.m, nullptr, ca->window,
                            derive_seed(round_seed, 0x5a));
  } else if (const auto* cf = std::get_if<ContinuousFeedbackAttack>(&attack)) {
    rho = evolve_continuous(prep.state, params, cf->e.m, &cf->f.m, cf->window,
                            derive_seed(round_seed, 0x5a));
  }

  rec.bob_basis = rng.uniform() < 0.5 ? Basis::PauliZ : Basis::PauliX;
  const auto [outcome, post] = project(rho, rec.bob_basis, rng.uniform());
  (void)post;
  rec.bob_bit = outcome;
  rec.sifted = rec.bob_basis == rec.alice_basis;
  return rec;
}

ProtocolStats run_protocol(std::uint64_t n_rounds, const ChannelParams& params,
                           const AttackStrategy& attack, std::uint64_t master_seed,
                           int workers) {
  if (n_rounds < 1) throw ConfigError("n_rounds must be >= 1");
  params.validate();
  std::atomic<std::uint64_t> sifted{0}, errors{0}, guesses{0}, guesses_right{0};
  parallel_for(n_rounds, workers, [&](std::size_t i) {
    const RoundRecord rec = run_round(params, attack, derive_seed(master_seed, i));
    if (rec.sifted) {
      sifted.fetch_add(1, std::memory_order_relaxed);
      if (rec.bob_bit != rec.alice_bit) errors.fetch_add(1, std::memory_order_relaxed);
    }
    if (rec.eve_guess) {
      guesses.fetch_add(1, std::memory_order_relaxed);
      if (*rec.eve_guess == rec.initial_state)
        guesses_right.fetch_add(1, std::memory_order_relaxed);
    }
  });

  ProtocolStats stats;
  stats.n_rounds = n_rounds;
  stats.n_total = sifted.load();
  stats.n_error = errors.load();
  if (stats.n_total > 0) {
    stats.qber = static_cast<double>(stats.n_error) / static_cast<double>(stats.n_total);
    stats.stderr_qber =
        std::sqrt(stats.qber * (1.0 - stats.qber) / static_cast<double>(stats.n_total));
  }
  if (guesses.load() > 0)
    stats.eve_accuracy =
        static_cast<double>(guesses_right.load()) / static_cast<double>(guesses.load());
  return stats;
}

double qber_from_final_states(const std::array<Mat2, 4>& final_states) {
  double fidelity = 0.0;
  for (std::size_t s = 0; s < 4; ++s) {
    const Mat2 proj = projector(pure_state(kAllStates[s]));
    fidelity += expectation(proj, final_states[s]).real();
  }
  return 1.0 - 0.25 * fidelity;
}

std::array<Mat2, 4> evolve_four_states(const ChannelParams& params, const Mat2& e,
                                       const MeasurementWindow& window, const Mat2* f) {
  std::array<Mat2, 4> out;
  const Mat2 fb = f != nullptr ? *f : Mat2::zero();
  for (std::size_t s = 0; s < 4; ++s) {
    const StateLabel label = kAllStates[s];
    const Mat2 H = hamiltonian_for(label, params.omega).m;
    out[s] = dynamics::feedback_master_solve(projector(pure_state(label)), H, params, e, fb,
                                             window);
  }
  return out;
}

double analytic_qber_no_attack(double gamma_D_tf) {
  if (gamma_D_tf < 0.0) throw ConfigError("gamma_D*t must be >= 0");
  return 0.25 - 0.25 * std::exp(-2.0 * gamma_D_tf);
}

double analytic_accuracy_projective(double gamma_D_tstar) {
  if (gamma_D_tstar < 0.0) throw ConfigError("gamma_D*t must be >= 0");
  return 0.625 + 0.125 * std::exp(-2.0 * gamma_D_tstar);
}

double analytic_qber_projective(double gamma_D_tf) {
  if (gamma_D_tf < 0.0) throw ConfigError("gamma_D*t must be >= 0");
  return 0.375 - 0.125 * std::exp(-2.0 * gamma_D_tf);
}

}  // namespace dlca::bb84
