#pragma once

// Dense statevector simulator for small registers.
//
// Basis ordering convention (used everywhere in this project): qubit 0 is the
// most significant bit of the computational-basis index. For an n-qubit state,
// the bit of qubit q in basis index i is (i >> (n-1-q)) & 1.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qfmri/errors.hpp"

namespace qfmri::qsim {

using cplx = std::complex<double>;

inline constexpr cplx kImag{0.0, 1.0};

// Row-major 2x2 / 4x4 complex matrices.
struct Gate2x2 {
  std::array<cplx, 4> m{};
  cplx& at(int r, int c) { return m[2 * r + c]; }
  const cplx& at(int r, int c) const { return m[2 * r + c]; }
};

struct Gate4x4 {
  std::array<cplx, 16> m{};
  cplx& at(int r, int c) { return m[4 * r + c]; }
  const cplx& at(int r, int c) const { return m[4 * r + c]; }
};

enum class Axis { X, Y, Z };

inline Gate2x2 identity2() {
  return Gate2x2{{1.0, 0.0, 0.0, 1.0}};
}

inline Gate4x4 identity4() {
  Gate4x4 g;
  for (int i = 0; i < 4; ++i) g.at(i, i) = 1.0;
  return g;
}

inline Gate2x2 pauli_x() {
  return Gate2x2{{0.0, 1.0, 1.0, 0.0}};
}

inline Gate2x2 hadamard() {
  const double s = 1.0 / std::sqrt(2.0);
  return Gate2x2{{s, s, s, -s}};
}

// exp(-i theta sigma_axis / 2)
inline Gate2x2 rotation(Axis axis, double theta) {
  const double c = std::cos(theta / 2.0);
  const double s = std::sin(theta / 2.0);
  switch (axis) {
    case Axis::X:
      return Gate2x2{{c, -kImag * s, -kImag * s, c}};
    case Axis::Y:
      return Gate2x2{{c, -s, s, c}};
    case Axis::Z:
    default:
      return Gate2x2{{std::exp(-kImag * (theta / 2.0)), 0.0, 0.0,
                      std::exp(kImag * (theta / 2.0))}};
  }
}

inline Gate2x2 mul(const Gate2x2& a, const Gate2x2& b) {
  Gate2x2 r;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      cplx acc = 0.0;
      for (int k = 0; k < 2; ++k) acc += a.at(i, k) * b.at(k, j);
      r.at(i, j) = acc;
    }
  return r;
}

inline Gate4x4 mul(const Gate4x4& a, const Gate4x4& b) {
  Gate4x4 r;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      cplx acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += a.at(i, k) * b.at(k, j);
      r.at(i, j) = acc;
    }
  return r;
}

inline Gate2x2 dagger(const Gate2x2& g) {
  Gate2x2 r;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) r.at(i, j) = std::conj(g.at(j, i));
  return r;
}

inline Gate4x4 dagger(const Gate4x4& g) {
  Gate4x4 r;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) r.at(i, j) = std::conj(g.at(j, i));
  return r;
}

// Tensor product; `a` acts on the more significant qubit of the pair.
inline Gate4x4 kron(const Gate2x2& a, const Gate2x2& b) {
  Gate4x4 r;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l)
          r.at(2 * i + k, 2 * j + l) = a.at(i, j) * b.at(k, l);
  return r;
}

// |0><0| (x) I + |1><1| (x) U, control = more significant qubit of the pair.
inline Gate4x4 controlled(const Gate2x2& u) {
  Gate4x4 r;
  r.at(0, 0) = 1.0;
  r.at(1, 1) = 1.0;
  r.at(2, 2) = u.at(0, 0);
  r.at(2, 3) = u.at(0, 1);
  r.at(3, 2) = u.at(1, 0);
  r.at(3, 3) = u.at(1, 1);
  return r;
}

// CNOT with the more significant pair qubit as control.
inline Gate4x4 cnot_first_control() { return controlled(pauli_x()); }

// CNOT with the less significant pair qubit as control.
inline Gate4x4 cnot_second_control() {
  Gate4x4 r;
  r.at(0, 0) = 1.0;
  r.at(1, 3) = 1.0;
  r.at(2, 2) = 1.0;
  r.at(3, 1) = 1.0;
  return r;
}

inline double max_unitarity_defect(const Gate2x2& g) {
  Gate2x2 p = mul(dagger(g), g);
  double worst = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      worst = std::max(worst, std::abs(p.at(i, j) - (i == j ? 1.0 : 0.0)));
  return worst;
}

inline double max_unitarity_defect(const Gate4x4& g) {
  Gate4x4 p = mul(dagger(g), g);
  double worst = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      worst = std::max(worst, std::abs(p.at(i, j) - (i == j ? 1.0 : 0.0)));
  return worst;
}

// General single-qubit gate, composed literally as
// Rz(phi) Rx(-pi/2) Rz(theta) Rx(pi/2) Rz(lambda).
inline Gate2x2 u3(double theta, double phi, double lambda) {
  const double half_pi = std::acos(0.0);
  Gate2x2 g = rotation(Axis::Z, lambda);
  g = mul(rotation(Axis::X, half_pi), g);
  g = mul(rotation(Axis::Z, theta), g);
  g = mul(rotation(Axis::X, -half_pi), g);
  g = mul(rotation(Axis::Z, phi), g);
  return g;
}

struct StateVector {
  int num_qubits = 0;
  std::vector<cplx> amps;

  static StateVector zero_state(int n) {
    if (n < 1 || n > 10) throw ShapeError("num_qubits must be in [1,10]");
    StateVector s;
    s.num_qubits = n;
    s.amps.assign(std::size_t{1} << n, 0.0);
    s.amps[0] = 1.0;
    return s;
  }

  double norm() const {
    double acc = 0.0;
    for (const cplx& a : amps) acc += std::norm(a);
    return std::sqrt(acc);
  }
};

// Eq.-style amplitude encoding: amps[i] = x[i] / ||x||. The input length must
// be a power of two (2^n); index i addresses the basis state whose bit pattern
// is i under the qubit-0-is-MSB convention.
inline StateVector amplitude_encode(std::span<const double> x) {
  const std::size_t len = x.size();
  if (len < 2 || (len & (len - 1)) != 0)
    throw ShapeError("amplitude_encode: input length " + std::to_string(len) +
                     " is not a power of two");
  int n = 0;
  while ((std::size_t{1} << n) < len) ++n;
  if (n > 10) throw ShapeError("amplitude_encode: too many qubits");

  double sq = 0.0;
  for (double v : x) sq += v * v;
  if (sq <= 0.0)
    throw EncodingError("amplitude_encode: zero-norm input segment");
  const double inv = 1.0 / std::sqrt(sq);

  StateVector s;
  s.num_qubits = n;
  s.amps.resize(len);
  for (std::size_t i = 0; i < len; ++i) s.amps[i] = x[i] * inv;
  return s;
}

inline void check_qubit(const StateVector& s, int q, const char* where) {
  if (q < 0 || q >= s.num_qubits)
    throw ShapeError(std::string(where) + ": qubit index " + std::to_string(q) +
                     " out of range for " + std::to_string(s.num_qubits) +
                     " qubits");
}

inline StateVector apply_1q(const StateVector& state, const Gate2x2& gate,
                            int qubit) {
  check_qubit(state, qubit, "apply_1q");
  const int shift = state.num_qubits - 1 - qubit;
  const std::size_t bit = std::size_t{1} << shift;
  StateVector out = state;
  const std::size_t dim = state.amps.size();
  for (std::size_t i = 0; i < dim; ++i) {
    if (i & bit) continue;
    const cplx a0 = state.amps[i];
    const cplx a1 = state.amps[i | bit];
    out.amps[i] = gate.at(0, 0) * a0 + gate.at(0, 1) * a1;
    out.amps[i | bit] = gate.at(1, 0) * a0 + gate.at(1, 1) * a1;
  }
  return out;
}

// qubit_a addresses the more significant sub-index of the 4x4 gate.
inline StateVector apply_2q(const StateVector& state, const Gate4x4& gate,
                            int qubit_a, int qubit_b) {
  check_qubit(state, qubit_a, "apply_2q");
  check_qubit(state, qubit_b, "apply_2q");
  if (qubit_a == qubit_b) throw ShapeError("apply_2q: qubits must be distinct");
  const std::size_t bit_a = std::size_t{1} << (state.num_qubits - 1 - qubit_a);
  const std::size_t bit_b = std::size_t{1} << (state.num_qubits - 1 - qubit_b);
  StateVector out = state;
  const std::size_t dim = state.amps.size();
  for (std::size_t i = 0; i < dim; ++i) {
    if ((i & bit_a) || (i & bit_b)) continue;
    const std::size_t idx[4] = {i, i | bit_b, i | bit_a, i | bit_a | bit_b};
    cplx in[4];
    for (int k = 0; k < 4; ++k) in[k] = state.amps[idx[k]];
    for (int r = 0; r < 4; ++r) {
      cplx acc = 0.0;
      for (int c = 0; c < 4; ++c) acc += gate.at(r, c) * in[c];
      out.amps[idx[r]] = acc;
    }
  }
  return out;
}

inline StateVector apply_controlled_rotation(const StateVector& state,
                                             Axis axis, double theta,
                                             int control, int target) {
  return apply_2q(state, controlled(rotation(axis, theta)), control, target);
}

inline std::pair<double, double> marginal_probabilities(
    const StateVector& state, int qubit) {
  check_qubit(state, qubit, "marginal_probabilities");
  const std::size_t bit = std::size_t{1} << (state.num_qubits - 1 - qubit);
  double p0 = 0.0, p1 = 0.0;
  for (std::size_t i = 0; i < state.amps.size(); ++i) {
    if (i & bit)
      p1 += std::norm(state.amps[i]);
    else
      p0 += std::norm(state.amps[i]);
  }
  return {p0, p1};
}

}  // namespace qfmri::qsim
