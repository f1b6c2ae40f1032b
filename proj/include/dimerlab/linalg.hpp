#pragma once

// Dense PLU factorization templated over the scalar, shared by the exact
// backend (ExactScalar) and the small-system float backend.

#include <complex>
#include <stdexcept>
#include <vector>

#include "dimerlab/exact.hpp"

namespace dimerlab {

template <class S>
struct ScalarOps;

template <>
struct ScalarOps<ExactScalar> {
  static ExactScalar zero() { return ExactScalar::zero(); }
  static ExactScalar one() { return ExactScalar::one(); }
  static bool is_zero(const ExactScalar& s) { return s.is_zero(); }
  static ExactScalar conj(const ExactScalar& s) { return s.conj(); }
  // Prefer small exact representations as pivots to slow coefficient growth.
  static double pivot_score(const ExactScalar& s) {
    if (s.is_zero()) return 0.0;
    return 1.0 / (1.0 + double(s.bit_size()));
  }
};

template <>
struct ScalarOps<std::complex<double>> {
  using C = std::complex<double>;
  static C zero() { return {0.0, 0.0}; }
  static C one() { return {1.0, 0.0}; }
  static bool is_zero(const C& s) { return std::abs(s) == 0.0; }
  static C conj(const C& s) { return std::conj(s); }
  static double pivot_score(const C& s) { return std::abs(s); }
};

template <class S>
struct Mat {
  int rows = 0, cols = 0;
  std::vector<S> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(size_t(r) * c, ScalarOps<S>::zero()) {}
  S& at(int i, int j) { return a[size_t(i) * cols + j]; }
  const S& at(int i, int j) const { return a[size_t(i) * cols + j]; }
};

// PLU with per-column pivot choice by ScalarOps::pivot_score.
template <class S>
struct DenseLU {
  Mat<S> lu;
  std::vector<int> perm;  // row permutation: perm[k] = original row in slot k
  int swap_parity = 1;
  bool singular = false;

  int n() const { return lu.rows; }

  S det() const {
    if (singular) return ScalarOps<S>::zero();
    S d = swap_parity >= 0 ? ScalarOps<S>::one() : -ScalarOps<S>::one();
    for (int k = 0; k < n(); ++k) d = d * lu.at(k, k);
    return d;
  }

  // Solve A x = b.
  std::vector<S> solve(const std::vector<S>& b) const {
    if (singular) throw std::domain_error("DenseLU: singular system");
    const int N = n();
    std::vector<S> y(N);
    for (int k = 0; k < N; ++k) y[k] = b[perm[k]];
    for (int k = 0; k < N; ++k)
      for (int j = 0; j < k; ++j) y[k] = y[k] - lu.at(k, j) * y[j];
    for (int k = N - 1; k >= 0; --k) {
      for (int j = k + 1; j < N; ++j) y[k] = y[k] - lu.at(k, j) * y[j];
      y[k] = y[k] / lu.at(k, k);
    }
    return y;
  }
};

template <class S>
DenseLU<S> factor(Mat<S> A) {
  if (A.rows != A.cols) throw std::invalid_argument("factor: square matrix required");
  const int N = A.rows;
  DenseLU<S> f;
  f.perm.resize(N);
  for (int k = 0; k < N; ++k) f.perm[k] = k;
  for (int k = 0; k < N && !f.singular; ++k) {
    int best = -1;
    double best_score = 0.0;
    for (int i = k; i < N; ++i) {
      double sc = ScalarOps<S>::pivot_score(A.at(i, k));
      if (sc > best_score) { best_score = sc; best = i; }
    }
    if (best < 0) { f.singular = true; break; }
    if (best != k) {
      for (int j = 0; j < N; ++j) std::swap(A.at(k, j), A.at(best, j));
      std::swap(f.perm[k], f.perm[best]);
      f.swap_parity = -f.swap_parity;
    }
    S pinv = ScalarOps<S>::one() / A.at(k, k);
    for (int i = k + 1; i < N; ++i) {
      if (ScalarOps<S>::is_zero(A.at(i, k))) continue;
      S m = A.at(i, k) * pinv;
      A.at(i, k) = m;
      for (int j = k + 1; j < N; ++j)
        A.at(i, j) = A.at(i, j) - m * A.at(k, j);
    }
  }
  f.lu = std::move(A);
  return f;
}

}  // namespace dimerlab
