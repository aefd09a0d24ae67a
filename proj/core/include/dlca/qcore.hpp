#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>

#include "dlca/mat2.hpp"

namespace dlca {

// The four BB84 states, in the canonical label order 0..3 used for dataset
// labels and classifier classes.
enum class StateLabel : int { Zero = 0, One = 1, Plus = 2, Minus = 3 };

enum class Basis : int { PauliZ = 0, PauliX = 1 };

inline constexpr std::array<StateLabel, 4> kAllStates = {StateLabel::Zero, StateLabel::One,
                                                         StateLabel::Plus, StateLabel::Minus};

const char* to_string(StateLabel s);
const char* to_string(Basis b);

struct PureState {
  StateLabel label;
  std::array<cplx, 2> amplitude;
};

PureState pure_state(StateLabel label);

// The two eigenstates of a basis, in outcome order (outcome 0 first).
std::array<PureState, 2> basis_states(Basis b);

// |psi><psi|
Mat2 projector(const PureState& s);

// An operator with an optional symbolic tag; the tag is reporting-only, all
// arithmetic goes through the matrix.
struct Operator2 {
  Mat2 m;
  std::optional<std::string> label;

  Operator2() = default;
  Operator2(Mat2 matrix) : m(matrix) {}  // NOLINT: implicit by design
  Operator2(Mat2 matrix, std::string tag) : m(matrix), label(std::move(tag)) {}
};

// A validated density matrix. Construction enforces Hermiticity (1e-12),
// unit trace (1e-9) and positivity down to eigenvalue -1e-6; the slack on the
// eigenvalue absorbs transient Euler-Maruyama excursions without clipping,
// which would bias current statistics.
class DensityMatrix2 {
 public:
  static constexpr double kHermTol = 1e-12;
  static constexpr double kTraceTol = 1e-9;
  static constexpr double kEigTol = -1e-6;

  explicit DensityMatrix2(const Mat2& m);

  static DensityMatrix2 from_pure(StateLabel label);
  static DensityMatrix2 maximally_mixed();

  const Mat2& matrix() const { return m_; }

 private:
  Mat2 m_;
};

// Lindblad dissipator D[o]rho = o rho o^dag - 1/2 (o^dag o rho + rho o^dag o).
Mat2 dissipator(const Mat2& o, const Mat2& rho);

// Measurement back-action H[o]rho = o rho + rho o^dag - Tr[o rho + rho o^dag] rho.
// Requires Tr rho = 1; vanishes on eigenstates of a Hermitian o.
Mat2 innovation(const Mat2& o, const Mat2& rho);

// Tr[o rho]
cplx expectation(const Mat2& o, const Mat2& rho);

// e(theta) = cos(theta) sigma_x + sin(theta) sigma_z
Operator2 measurement_operator(double theta);

// f(phi) = cos(phi) sigma_x + sin(phi) sigma_z
Operator2 feedback_operator(double phi);

// omega*sigma_z for the Pauli-Z eigenstates, omega*sigma_x for the Pauli-X ones.
Operator2 hamiltonian_for(StateLabel initial, double omega);

// Born-rule projective measurement: outcome 0 iff u < <b0|rho|b0>; the state
// collapses onto the measured basis projector.
std::pair<int, Mat2> project(const Mat2& rho, Basis basis, double u);

// Typed conveniences mirroring the raw-matrix API.
inline Mat2 dissipator(const Operator2& o, const DensityMatrix2& rho) {
  return dissipator(o.m, rho.matrix());
}
inline Mat2 innovation(const Operator2& o, const DensityMatrix2& rho) {
  return innovation(o.m, rho.matrix());
}
inline cplx expectation(const Operator2& o, const DensityMatrix2& rho) {
  return expectation(o.m, rho.matrix());
}

}  // namespace dlca
