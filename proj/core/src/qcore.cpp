#include "dlca/qcore.hpp"

#include <cmath>
#include <sstream>

#include "dlca/errors.hpp"

namespace dlca {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440084436210485;
}

const char* to_string(StateLabel s) {
  switch (s) {
    case StateLabel::Zero: return "zero";
    case StateLabel::One: return "one";
    case StateLabel::Plus: return "plus";
    case StateLabel::Minus: return "minus";
  }
  return "?";
}

const char* to_string(Basis b) { return b == Basis::PauliZ ? "pauli_z" : "pauli_x"; }

PureState pure_state(StateLabel label) {
  switch (label) {
    case StateLabel::Zero: return {label, {cplx(1.0), cplx(0.0)}};
    case StateLabel::One: return {label, {cplx(0.0), cplx(1.0)}};
    case StateLabel::Plus: return {label, {cplx(kInvSqrt2), cplx(kInvSqrt2)}};
    case StateLabel::Minus: return {label, {cplx(kInvSqrt2), cplx(-kInvSqrt2)}};
  }
  throw ConfigError("pure_state: bad label");
}

std::array<PureState, 2> basis_states(Basis b) {
  if (b == Basis::PauliZ) return {pure_state(StateLabel::Zero), pure_state(StateLabel::One)};
  return {pure_state(StateLabel::Plus), pure_state(StateLabel::Minus)};
}

Mat2 projector(const PureState& s) {
  const cplx a = s.amplitude[0];
  const cplx b = s.amplitude[1];
  return {a * std::conj(a), a * std::conj(b), b * std::conj(a), b * std::conj(b)};
}

DensityMatrix2::DensityMatrix2(const Mat2& m) : m_(m) {
  if (!all_finite(m_)) throw NumericalError("density matrix has non-finite entries");
  const double herm = hermiticity_defect(m_);
  if (herm >= kHermTol) {
    std::ostringstream os;
    os << "density matrix not Hermitian (defect " << herm << ")";
    throw NumericalError(os.str());
  }
  const double tr_err = std::abs(trace(m_) - cplx(1.0));
  if (tr_err >= kTraceTol) {
    std::ostringstream os;
    os << "density matrix trace off by " << tr_err;
    throw NumericalError(os.str());
  }
  const double min_eig = hermitian_eigenvalues(m_)[0];
  if (min_eig < kEigTol) {
    std::ostringstream os;
    os << "density matrix negative beyond tolerance (min eigenvalue " << min_eig
       << "); decrease the integration step";
    throw NumericalError(os.str());
  }
}

DensityMatrix2 DensityMatrix2::from_pure(StateLabel label) {
  return DensityMatrix2(projector(pure_state(label)));
}

DensityMatrix2 DensityMatrix2::maximally_mixed() {
  return DensityMatrix2(Mat2::identity() * 0.5);
}

Mat2 dissipator(const Mat2& o, const Mat2& rho) {
  const Mat2 od = adjoint(o);
  const Mat2 odo = od * o;
  return o * rho * od - 0.5 * (odo * rho + rho * odo);
}

Mat2 innovation(const Mat2& o, const Mat2& rho) {
  Mat2 t = o * rho + rho * adjoint(o);
  t -= trace(t) * rho;
  return t;
}

cplx expectation(const Mat2& o, const Mat2& rho) { return trace(o * rho); }

Operator2 measurement_operator(double theta) {
  std::ostringstream tag;
  tag << "cos(" << theta << ")*sigma_x + sin(" << theta << ")*sigma_z";
  return {std::cos(theta) * sigma_x() + std::sin(theta) * sigma_z(), tag.str()};
}

Operator2 feedback_operator(double phi) {
  std::ostringstream tag;
  tag << "cos(" << phi << ")*sigma_x + sin(" << phi << ")*sigma_z";
  return {std::cos(phi) * sigma_x() + std::sin(phi) * sigma_z(), tag.str()};
}

Operator2 hamiltonian_for(StateLabel initial, double omega) {
  if (initial == StateLabel::Zero || initial == StateLabel::One)
    return {omega * sigma_z(), "omega*sigma_z"};
  return {omega * sigma_x(), "omega*sigma_x"};
}

std::pair<int, Mat2> project(const Mat2& rho, Basis basis, double u) {
  const auto states = basis_states(basis);
  const Mat2 p0 = projector(states[0]);
  const double prob0 = expectation(p0, rho).real();
  const int outcome = u < prob0 ? 0 : 1;
  return {outcome, outcome == 0 ? p0 : projector(states[1])};
}

}  // namespace dlca
