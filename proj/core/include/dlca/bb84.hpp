#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <variant>

#include "dlca/dynamics.hpp"
#include "dlca/qcore.hpp"
#include "dlca/rng.hpp"

namespace dlca::bb84 {

using dynamics::ChannelParams;
using dynamics::MeasurementWindow;

struct RoundRecord {
  int alice_bit = 0;
  Basis alice_basis = Basis::PauliZ;
  StateLabel initial_state = StateLabel::Zero;
  std::optional<StateLabel> eve_guess;
  Basis bob_basis = Basis::PauliZ;
  int bob_bit = 0;
  bool sifted = false;
};

struct ProtocolStats {
  std::uint64_t n_rounds = 0;
  std::uint64_t n_total = 0;  // sifted rounds
  std::uint64_t n_error = 0;  // sifted errors
  double qber = 0.0;
  double stderr_qber = 0.0;
  std::optional<double> eve_accuracy;
};

struct NoAttack {};
struct ProjectiveAttack {
  double t_star = 0.0;
};
struct ContinuousAttack {
  Operator2 e;
  MeasurementWindow window;
};
struct ContinuousFeedbackAttack {
  Operator2 e;
  Operator2 f;
  MeasurementWindow window;
};

using AttackStrategy =
    std::variant<NoAttack, ProjectiveAttack, ContinuousAttack, ContinuousFeedbackAttack>;

struct Preparation {
  int bit = 0;
  Basis basis = Basis::PauliZ;
  StateLabel state = StateLabel::Zero;
};

// Step-1 encoding: bit and basis uniform and independent; the bit->state
// convention is frozen project-wide as 0 -> {|0>, |+>}, 1 -> {|1>, |->}.
Preparation alice_prepare(double u1, double u2);

struct ProjectiveOutcome {
  StateLabel guess;
  Basis basis;
  Mat2 post_state;
};

// Intercept-and-resend step: uniform random basis, Born-rule collapse; the
// photon continues in the measured projector.
ProjectiveOutcome projective_attack(const Mat2& rho, Rng& rng);

// Full protocol Monte Carlo. Rounds derive independent seeds from
// (master_seed, round): deterministic for any worker count.
ProtocolStats run_protocol(std::uint64_t n_rounds, const ChannelParams& params,
                           const AttackStrategy& attack, std::uint64_t master_seed,
                           int workers = 1);

// One protocol round, exposed for direct inspection.
RoundRecord run_round(const ChannelParams& params, const AttackStrategy& attack,
                      std::uint64_t round_seed);

// Deterministic QBER from the four evolved initial states (by label order):
// 1 - mean_s <s|rho_s|s>.
double qber_from_final_states(const std::array<Mat2, 4>& final_states);

// Evolves the four initial states under measurement angle theta (feedback
// angle phi optional) with the given window, and returns them by label order.
std::array<Mat2, 4> evolve_four_states(const ChannelParams& params, const Mat2& e,
                                       const MeasurementWindow& window,
                                       const Mat2* f = nullptr);

// QBER = 1/4 - exp(-2 gamma_D t_f)/4
double analytic_qber_no_attack(double gamma_D_tf);
// A = 5/8 + exp(-2 gamma_D t*)/8
double analytic_accuracy_projective(double gamma_D_tstar);
// QBER = 3/8 - exp(-2 gamma_D t_f)/8
double analytic_qber_projective(double gamma_D_tf);

}  // namespace dlca::bb84
