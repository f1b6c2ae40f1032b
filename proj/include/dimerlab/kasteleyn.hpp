#pragma once

// Signed bipartite adjacency matrix of a Domain; rows are white squares,
// columns black squares, both in lexicographic (n,m) order.  The row of a
// white square v holds unit weights
//   +1 at v+(1,1)   -1 at v-(1,1)   -i at v+(1,-1)   +i at v-(1,-1)
// so a vanishing row sum against a black-square field is exactly the
// discrete d-bar equation at v, and |det| counts the perfect matchings
// (the alternating product around every interior vertex is -1).

#include <complex>
#include <memory>
#include <tuple>
#include <vector>

#include "dimerlab/exact.hpp"
#include "dimerlab/lattice.hpp"
#include "dimerlab/linalg.hpp"

namespace dimerlab {

enum class Backend { Exact, Float };

template <class S>
struct Units;

template <>
struct Units<ExactScalar> {
  static ExactScalar one() { return ExactScalar::one(); }
  static ExactScalar i() { return ExactScalar::i(); }
  static ExactScalar lambda() { return ExactScalar::lambda(); }
  static ExactScalar lambda_bar() { return ExactScalar::lambda_bar(); }
  static ExactScalar real(double) = delete;
};

template <>
struct Units<std::complex<double>> {
  using C = std::complex<double>;
  static C one() { return {1, 0}; }
  static C i() { return {0, 1}; }
  static C lambda() { return {std::sqrt(0.5), std::sqrt(0.5)}; }
  static C lambda_bar() { return {std::sqrt(0.5), -std::sqrt(0.5)}; }
};

// Unit weight of the edge (white v, black u); throws if not adjacent.
template <class S>
S kasteleyn_weight(Sq v, Sq u) {
  int dn = u.n - v.n, dm = u.m - v.m;
  if (dn == 1 && dm == 1) return Units<S>::one();
  if (dn == -1 && dm == -1) return -Units<S>::one();
  if (dn == 1 && dm == -1) return -Units<S>::i();
  if (dn == -1 && dm == 1) return Units<S>::i();
  throw std::invalid_argument("kasteleyn_weight: squares not adjacent");
}

template <class S>
Mat<S> kasteleyn_matrix(const Domain& d) {
  const auto& ws = d.whites();
  const auto& bs = d.blacks();
  Mat<S> K(int(ws.size()), int(bs.size()));
  for (size_t r = 0; r < ws.size(); ++r)
    for (Sq u : Domain::neighbors(ws[r])) {
      int c = d.black_index(u);
      if (c >= 0) K.at(int(r), c) = kasteleyn_weight<S>(ws[r], u);
    }
  return K;
}

struct TilingCount {
  bool balanced = true;
  mpz_class count = 0;       // exact when is_exact
  bool is_exact = true;
  double log_abs_det = 0.0;  // float backend diagnostic
};

// Floating-point sparse complex solver (Eigen SparseLU under the hood).
class ComplexSolver {
 public:
  ComplexSolver(int n,
                const std::vector<std::tuple<int, int, std::complex<double>>>& entries);
  ~ComplexSolver();
  ComplexSolver(ComplexSolver&&) noexcept;
  bool singular() const;
  double log_abs_det() const;
  std::vector<std::complex<double>> solve(
      const std::vector<std::complex<double>>& rhs) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

class KasteleynSystem {
 public:
  explicit KasteleynSystem(const Domain& d, Backend backend = Backend::Exact);

  const Domain& domain() const { return *dom_; }
  Backend backend() const { return backend_; }
  bool square() const;
  bool singular() const;

  TilingCount count_tilings() const;

  // Column of the inverse at white pole v (indexed like domain().blacks()).
  std::vector<ExactScalar> coupling_column_exact(Sq v) const;
  std::vector<std::complex<double>> coupling_column(Sq v) const;
  ExactScalar coupling_entry_exact(Sq u, Sq v) const;
  std::complex<double> coupling_entry(Sq u, Sq v) const;

  // |C(u,v)| for adjacent squares.
  Rational edge_probability_exact(Sq u, Sq v) const;
  double edge_probability(Sq u, Sq v) const;

  // P(all edges present) = |det C[edges]|; edges vertex-disjoint.
  Rational local_statistic_exact(const std::vector<std::pair<Sq, Sq>>& edges) const;
  double local_statistic(const std::vector<std::pair<Sq, Sq>>& edges) const;

  // Whole inverse as dense matrix, rows = blacks, cols = whites.
  const Mat<ExactScalar>& inverse_exact() const;
  const Mat<std::complex<double>>& inverse_float() const;

  // CSV dump `u_n,u_m,v_n,v_m,re,im` (float) or `u_n,u_m,v_n,v_m,a,b,c,d`.
  std::string coupling_csv() const;

 private:
  const Domain* dom_;
  Backend backend_;
  // exact state
  mutable std::unique_ptr<DenseLU<ExactScalar>> exact_lu_;
  mutable std::unique_ptr<Mat<ExactScalar>> exact_inv_;
  // float state
  mutable std::unique_ptr<ComplexSolver> float_lu_;
  mutable std::unique_ptr<Mat<std::complex<double>>> float_inv_;

  void require_square() const;
  const DenseLU<ExactScalar>& elu() const;
  const ComplexSolver& flu() const;
};

// Exact square root of a nonnegative rational that is a perfect square.
Rational exact_sqrt(const Rational& r);
// |z| of an exact scalar whose modulus is rational (throws otherwise).
Rational exact_abs_rational(const ExactScalar& z);

}  // namespace dimerlab
