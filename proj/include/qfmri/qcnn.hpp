#pragma once

// The 4-qubit QCNN block: SU(4)-parameterized convolution gates, controlled-
// rotation pooling, forward pass to a probability pair, and exact gradients.
//
// Circuit layout (pinned): conv layer 1 on pairs (0,1)(2,3)(1,2)(3,0) sharing
// one set of 15 angles, pooling (0,1)(2,3) sharing 2 angles, conv layer 2 on
// (1,3), pooling (1,3), readout = marginal of qubit 3. Pool control qubits are
// frozen, not traced out; readout marginalizes over them.
//
// Gradients come in three flavors:
//   - qcnn_gradient: reverse-mode (adjoint) differentiation over the gate tape
//   - qcnn_gradient_parameter_shift: per-occurrence +-pi/2 shifts (oracle)
// Controlled rotations are decomposed onto plain rotations inside the tape so
// every parameterized occurrence has a +-1/2 eigenvalue generator, which keeps
// the two-term shift rule exact even with weight sharing.

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "qfmri/errors.hpp"
#include "qfmri/qsim.hpp"

namespace qfmri::qcnn {

using qsim::Axis;
using qsim::cplx;
using qsim::Gate2x2;
using qsim::Gate4x4;
using qsim::StateVector;

inline constexpr int kConvAngles = 15;
inline constexpr int kPoolAngles = 2;
inline constexpr int kQcnnAngles = 2 * (kConvAngles + kPoolAngles);  // 34

struct ConvGateParams {
  std::array<double, kConvAngles> angles{};
};

struct PoolGateParams {
  std::array<double, kPoolAngles> angles{};
};

struct QcnnParams {
  ConvGateParams conv1;
  PoolGateParams pool1;
  ConvGateParams conv2;
  PoolGateParams pool2;

  static QcnnParams from_flat(std::span<const double> flat) {
    if (flat.size() != kQcnnAngles)
      throw ShapeError("QcnnParams: expected 34 angles");
    QcnnParams p;
    std::size_t k = 0;
    for (double& a : p.conv1.angles) a = flat[k++];
    for (double& a : p.pool1.angles) a = flat[k++];
    for (double& a : p.conv2.angles) a = flat[k++];
    for (double& a : p.pool2.angles) a = flat[k++];
    return p;
  }

  std::array<double, kQcnnAngles> to_flat() const {
    std::array<double, kQcnnAngles> flat{};
    std::size_t k = 0;
    for (double a : conv1.angles) flat[k++] = a;
    for (double a : pool1.angles) flat[k++] = a;
    for (double a : conv2.angles) flat[k++] = a;
    for (double a : pool2.angles) flat[k++] = a;
    return flat;
  }
};

// Three-CNOT entangler: CNOT(b->a) [Rz(a0) on a, Ry(a1) on b] CNOT(a->b)
// [Ry(a2) on b] CNOT(b->a), as a matrix product (rightmost factor acts first).
inline Gate4x4 entangler(double a0, double a1, double a2) {
  using namespace qsim;
  Gate4x4 g = cnot_second_control();
  g = mul(kron(identity2(), rotation(Axis::Y, a2)), g);
  g = mul(cnot_first_control(), g);
  g = mul(kron(rotation(Axis::Z, a0), rotation(Axis::Y, a1)), g);
  g = mul(cnot_second_control(), g);
  return g;
}

// (U3(p0..p2) (x) U3(p3..p5)) . ENT(p6,p7,p8) . (U3(p9..p11) (x) U3(p12..p14))
inline Gate4x4 conv_unitary(const ConvGateParams& p) {
  using namespace qsim;
  const auto& a = p.angles;
  Gate4x4 g = kron(u3(a[9], a[10], a[11]), u3(a[12], a[13], a[14]));
  g = mul(entangler(a[6], a[7], a[8]), g);
  g = mul(kron(u3(a[0], a[1], a[2]), u3(a[3], a[4], a[5])), g);
  return g;
}

inline StateVector apply_conv_layer(
    const StateVector& state, const ConvGateParams& p,
    const std::vector<std::pair<int, int>>& pairs) {
  const Gate4x4 g = conv_unitary(p);
  StateVector s = state;
  for (auto [a, b] : pairs) s = qsim::apply_2q(s, g, a, b);
  return s;
}

// For each (control, target): CRz(p0), X on control, CRx(p1), X on control.
// Returns the state plus the surviving (non-control) qubit set.
inline std::pair<StateVector, std::vector<int>> apply_pool_layer(
    const StateVector& state, const PoolGateParams& p,
    const std::vector<std::pair<int, int>>& pools) {
  std::vector<bool> is_control(state.num_qubits, false);
  for (auto [c, t] : pools) {
    qsim::check_qubit(state, c, "apply_pool_layer");
    qsim::check_qubit(state, t, "apply_pool_layer");
    if (c == t || is_control[c])
      throw ShapeError("apply_pool_layer: overlapping pools");
    is_control[c] = true;
  }
  for (auto [c, t] : pools)
    if (is_control[t]) throw ShapeError("apply_pool_layer: overlapping pools");

  StateVector s = state;
  const Gate2x2 x = qsim::pauli_x();
  for (auto [c, t] : pools) {
    s = qsim::apply_controlled_rotation(s, Axis::Z, p.angles[0], c, t);
    s = qsim::apply_1q(s, x, c);
    s = qsim::apply_controlled_rotation(s, Axis::X, p.angles[1], c, t);
    s = qsim::apply_1q(s, x, c);
  }
  std::vector<int> surviving;
  for (int q = 0; q < state.num_qubits; ++q)
    if (!is_control[q]) surviving.push_back(q);
  return {std::move(s), std::move(surviving)};
}

// --- differentiation tape -------------------------------------------------

namespace detail {

enum class OpKind { Fixed1Q, Rot1Q, Cnot };

struct TapeEntry {
  OpKind kind;
  int q0 = 0;        // Fixed1Q/Rot1Q qubit, Cnot control
  int q1 = 0;        // Cnot target
  Gate2x2 fixed{};   // Fixed1Q
  Axis axis = Axis::Z;
  int param = -1;    // Rot1Q: index into the 34-angle vector
  double scale = 1.0;  // Rot1Q: gate angle = scale * angles[param]
};

using Tape = std::vector<TapeEntry>;

inline void push_fixed(Tape& t, const Gate2x2& g, int q) {
  TapeEntry e;
  e.kind = OpKind::Fixed1Q;
  e.q0 = q;
  e.fixed = g;
  t.push_back(e);
}

inline void push_rot(Tape& t, Axis axis, int q, int param, double scale) {
  TapeEntry e;
  e.kind = OpKind::Rot1Q;
  e.q0 = q;
  e.axis = axis;
  e.param = param;
  e.scale = scale;
  t.push_back(e);
}

inline void push_cnot(Tape& t, int control, int target) {
  TapeEntry e;
  e.kind = OpKind::Cnot;
  e.q0 = control;
  e.q1 = target;
  t.push_back(e);
}

// U3(theta,phi,lambda) in application order: Rz(lambda), Rx(pi/2), Rz(theta),
// Rx(-pi/2), Rz(phi).
inline void push_u3(Tape& t, int q, int i_theta, int i_phi, int i_lambda) {
  const double half_pi = std::acos(0.0);
  push_rot(t, Axis::Z, q, i_lambda, 1.0);
  push_fixed(t, qsim::rotation(Axis::X, half_pi), q);
  push_rot(t, Axis::Z, q, i_theta, 1.0);
  push_fixed(t, qsim::rotation(Axis::X, -half_pi), q);
  push_rot(t, Axis::Z, q, i_phi, 1.0);
}

inline void push_conv(Tape& t, int a, int b, int base) {
  push_u3(t, a, base + 9, base + 10, base + 11);
  push_u3(t, b, base + 12, base + 13, base + 14);
  push_cnot(t, b, a);
  push_rot(t, Axis::Y, b, base + 8, 1.0);
  push_cnot(t, a, b);
  push_rot(t, Axis::Z, a, base + 6, 1.0);
  push_rot(t, Axis::Y, b, base + 7, 1.0);
  push_cnot(t, b, a);
  push_u3(t, a, base + 0, base + 1, base + 2);
  push_u3(t, b, base + 3, base + 4, base + 5);
}

// CRz(theta; c,t) = CNOT . Rz(-theta/2 on t) . CNOT . Rz(theta/2 on t)
// (rightmost acts first); equal to |0><0| (x) I + |1><1| (x) Rz(theta).
inline void push_crz(Tape& t, int c, int tq, int param) {
  push_rot(t, Axis::Z, tq, param, 0.5);
  push_cnot(t, c, tq);
  push_rot(t, Axis::Z, tq, param, -0.5);
  push_cnot(t, c, tq);
}

inline void push_pool(Tape& t, int c, int tq, int base) {
  const Gate2x2 x = qsim::pauli_x();
  const Gate2x2 h = qsim::hadamard();
  push_crz(t, c, tq, base + 0);
  push_fixed(t, x, c);
  // CRx = (I (x) H) CRz (I (x) H)
  push_fixed(t, h, tq);
  push_crz(t, c, tq, base + 1);
  push_fixed(t, h, tq);
  push_fixed(t, x, c);
}

inline Tape build_qcnn_tape() {
  Tape t;
  for (auto [a, b] :
       std::vector<std::pair<int, int>>{{0, 1}, {2, 3}, {1, 2}, {3, 0}})
    push_conv(t, a, b, 0);
  push_pool(t, 0, 1, kConvAngles);
  push_pool(t, 2, 3, kConvAngles);
  push_conv(t, 1, 3, kConvAngles + kPoolAngles);
  push_pool(t, 1, 3, 2 * kConvAngles + kPoolAngles);
  return t;
}

inline StateVector run_entry(const StateVector& s, const TapeEntry& e,
                             std::span<const double> angles,
                             double shift = 0.0) {
  switch (e.kind) {
    case OpKind::Fixed1Q:
      return qsim::apply_1q(s, e.fixed, e.q0);
    case OpKind::Rot1Q:
      return qsim::apply_1q(
          s, qsim::rotation(e.axis, e.scale * angles[e.param] + shift), e.q0);
    case OpKind::Cnot:
    default:
      return qsim::apply_2q(s, qsim::cnot_first_control(), e.q0, e.q1);
  }
}

inline StateVector run_entry_inverse(const StateVector& s, const TapeEntry& e,
                                     std::span<const double> angles) {
  switch (e.kind) {
    case OpKind::Fixed1Q:
      return qsim::apply_1q(s, qsim::dagger(e.fixed), e.q0);
    case OpKind::Rot1Q:
      return qsim::apply_1q(
          s, qsim::rotation(e.axis, -e.scale * angles[e.param]), e.q0);
    case OpKind::Cnot:
    default:
      return qsim::apply_2q(s, qsim::cnot_first_control(), e.q0, e.q1);
  }
}

// Applies -i/2 * sigma_axis on `qubit` (the rotation-gate generator).
inline StateVector apply_generator(const StateVector& s, Axis axis,
                                   int qubit) {
  Gate2x2 g;
  const cplx half = cplx{0.0, -0.5};
  switch (axis) {
    case Axis::X:
      g = Gate2x2{{0.0, half, half, 0.0}};
      break;
    case Axis::Y:
      g = Gate2x2{{0.0, -half * qsim::kImag, half * qsim::kImag, 0.0}};
      break;
    case Axis::Z:
    default:
      g = Gate2x2{{half, 0.0, 0.0, -half}};
      break;
  }
  return qsim::apply_1q(s, g, qubit);
}

inline cplx inner(const StateVector& a, const StateVector& b) {
  cplx acc = 0.0;
  for (std::size_t i = 0; i < a.amps.size(); ++i)
    acc += std::conj(a.amps[i]) * b.amps[i];
  return acc;
}

}  // namespace detail

inline constexpr int kReadoutQubit = 3;

inline std::pair<double, double> qcnn_forward(std::span<const double> x,
                                              const QcnnParams& params) {
  if (x.size() != 16) throw ShapeError("qcnn_forward: expected 16 inputs");
  const auto angles = params.to_flat();
  StateVector s = qsim::amplitude_encode(x);
  static const detail::Tape tape = detail::build_qcnn_tape();
  for (const auto& e : tape) s = detail::run_entry(s, e, angles);
  return qsim::marginal_probabilities(s, kReadoutQubit);
}

// d(upstream . (p0,p1)) / d(angles), reverse-mode through the statevector.
inline std::array<double, kQcnnAngles> qcnn_gradient(
    std::span<const double> x, const QcnnParams& params,
    std::array<double, 2> upstream) {
  if (x.size() != 16) throw ShapeError("qcnn_gradient: expected 16 inputs");
  const auto angles = params.to_flat();
  static const detail::Tape tape = detail::build_qcnn_tape();

  StateVector psi = qsim::amplitude_encode(x);
  for (const auto& e : tape) psi = detail::run_entry(psi, e, angles);

  // lambda = M psi with M = diag(upstream[bit of readout qubit])
  StateVector lam = psi;
  const std::size_t bit =
      std::size_t{1} << (psi.num_qubits - 1 - kReadoutQubit);
  for (std::size_t i = 0; i < lam.amps.size(); ++i)
    lam.amps[i] *= (i & bit) ? upstream[1] : upstream[0];

  std::array<double, kQcnnAngles> grad{};
  for (auto it = tape.rbegin(); it != tape.rend(); ++it) {
    const auto& e = *it;
    if (e.kind == detail::OpKind::Rot1Q) {
      // psi currently holds the post-gate state for this entry.
      StateVector mu = detail::apply_generator(psi, e.axis, e.q0);
      grad[e.param] += e.scale * 2.0 * detail::inner(lam, mu).real();
    }
    psi = detail::run_entry_inverse(psi, e, angles);
    lam = detail::run_entry_inverse(lam, e, angles);
  }
  return grad;
}

// Parameter-shift oracle: +-pi/2 shift applied to each parameterized gate
// occurrence separately, contributions summed per shared parameter.
inline std::array<double, kQcnnAngles> qcnn_gradient_parameter_shift(
    std::span<const double> x, const QcnnParams& params,
    std::array<double, 2> upstream) {
  if (x.size() != 16)
    throw ShapeError("qcnn_gradient_parameter_shift: expected 16 inputs");
  const auto angles = params.to_flat();
  static const detail::Tape tape = detail::build_qcnn_tape();
  const StateVector initial = qsim::amplitude_encode(x);
  const double half_pi = std::acos(0.0);

  auto eval_with_shift = [&](std::size_t entry_idx, double shift) {
    StateVector s = initial;
    for (std::size_t j = 0; j < tape.size(); ++j)
      s = detail::run_entry(s, tape[j], angles, j == entry_idx ? shift : 0.0);
    auto [p0, p1] = qsim::marginal_probabilities(s, kReadoutQubit);
    return upstream[0] * p0 + upstream[1] * p1;
  };

  std::array<double, kQcnnAngles> grad{};
  for (std::size_t j = 0; j < tape.size(); ++j) {
    const auto& e = tape[j];
    if (e.kind != detail::OpKind::Rot1Q) continue;
    const double fp = eval_with_shift(j, half_pi);
    const double fm = eval_with_shift(j, -half_pi);
    grad[e.param] += e.scale * 0.5 * (fp - fm);
  }
  return grad;
}

}  // namespace qfmri::qcnn
