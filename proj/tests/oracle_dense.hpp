#pragma once

// Test-side dense linear algebra, written independently of the simulator:
// full 2^n x 2^n embeddings, brute-force matrix products and mat-vec. Used as
// the oracle everything gate-level is checked against.

#include <cassert>
#include <complex>
#include <cstddef>
#include <vector>

namespace oracle {

using cx = std::complex<double>;

struct CMat {
  int n = 0;  // dimension
  std::vector<cx> a;
  explicit CMat(int dim = 0) : n(dim), a(static_cast<std::size_t>(dim) * dim) {}
  cx& at(int r, int c) { return a[static_cast<std::size_t>(r) * n + c]; }
  const cx& at(int r, int c) const {
    return a[static_cast<std::size_t>(r) * n + c];
  }
  static CMat eye(int dim) {
    CMat m(dim);
    for (int i = 0; i < dim; ++i) m.at(i, i) = 1.0;
    return m;
  }
};

inline CMat cmul(const CMat& x, const CMat& y) {
  assert(x.n == y.n);
  CMat r(x.n);
  for (int i = 0; i < x.n; ++i)
    for (int k = 0; k < x.n; ++k) {
      const cx v = x.at(i, k);
      if (v == cx{}) continue;
      for (int j = 0; j < x.n; ++j) r.at(i, j) += v * y.at(k, j);
    }
  return r;
}

inline std::vector<cx> cmatvec(const CMat& m, const std::vector<cx>& v) {
  assert(static_cast<int>(v.size()) == m.n);
  std::vector<cx> r(v.size());
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) r[i] += m.at(i, j) * v[j];
  return r;
}

inline CMat ckron(const CMat& x, const CMat& y) {
  CMat r(x.n * y.n);
  for (int i = 0; i < x.n; ++i)
    for (int j = 0; j < x.n; ++j)
      for (int k = 0; k < y.n; ++k)
        for (int l = 0; l < y.n; ++l)
          r.at(i * y.n + k, j * y.n + l) = x.at(i, j) * y.at(k, l);
  return r;
}

// Embeds a gate acting on `qubits` (qubits[0] = most significant sub-index)
// into the full 2^n space under the qubit-0-is-MSB convention.
inline CMat embed(int num_qubits, const std::vector<int>& qubits,
                  const CMat& gate) {
  const int dim = 1 << num_qubits;
  const int m = static_cast<int>(qubits.size());
  assert(gate.n == (1 << m));
  auto sub_index = [&](int full) {
    int s = 0;
    for (int k = 0; k < m; ++k) {
      const int bit = (full >> (num_qubits - 1 - qubits[k])) & 1;
      s |= bit << (m - 1 - k);
    }
    return s;
  };
  auto rest_mask = [&]() {
    int mask = dim - 1;
    for (int q : qubits) mask &= ~(1 << (num_qubits - 1 - q));
    return mask;
  }();
  CMat r(dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      if ((i & rest_mask) == (j & rest_mask))
        r.at(i, j) = gate.at(sub_index(i), sub_index(j));
  return r;
}

// Hand-coded elementary matrices (independent of the library definitions).
inline CMat rx(double t) {
  CMat m(2);
  m.at(0, 0) = std::cos(t / 2);
  m.at(0, 1) = cx(0, -std::sin(t / 2));
  m.at(1, 0) = cx(0, -std::sin(t / 2));
  m.at(1, 1) = std::cos(t / 2);
  return m;
}

inline CMat ry(double t) {
  CMat m(2);
  m.at(0, 0) = std::cos(t / 2);
  m.at(0, 1) = -std::sin(t / 2);
  m.at(1, 0) = std::sin(t / 2);
  m.at(1, 1) = std::cos(t / 2);
  return m;
}

inline CMat rz(double t) {
  CMat m(2);
  m.at(0, 0) = std::exp(cx(0, -t / 2));
  m.at(1, 1) = std::exp(cx(0, t / 2));
  return m;
}

inline CMat cnot_high_control() {
  CMat m(4);
  m.at(0, 0) = m.at(1, 1) = m.at(2, 3) = m.at(3, 2) = 1.0;
  return m;
}

inline CMat cnot_low_control() {
  CMat m(4);
  m.at(0, 0) = m.at(1, 3) = m.at(2, 2) = m.at(3, 1) = 1.0;
  return m;
}

inline double max_abs_diff(const CMat& x, const CMat& y) {
  double worst = 0.0;
  for (std::size_t i = 0; i < x.a.size(); ++i)
    worst = std::max(worst, std::abs(x.a[i] - y.a[i]));
  return worst;
}

inline double max_abs_diff(const std::vector<cx>& x, const std::vector<cx>& y) {
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    worst = std::max(worst, std::abs(x[i] - y[i]));
  return worst;
}

}  // namespace oracle
