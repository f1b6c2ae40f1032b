#include "dimerlab/kasteleyn.hpp"

#include <sstream>
#include <stdexcept>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

namespace dimerlab {

// -- ComplexSolver ----------------------------------------------------------

struct ComplexSolver::Impl {
  Eigen::SparseMatrix<std::complex<double>> A;
  Eigen::SparseLU<Eigen::SparseMatrix<std::complex<double>>> lu;
  bool ok = false;
};

ComplexSolver::ComplexSolver(
    int n, const std::vector<std::tuple<int, int, std::complex<double>>>& entries)
    : impl_(new Impl) {
  std::vector<Eigen::Triplet<std::complex<double>>> trips;
  trips.reserve(entries.size());
  for (auto& [r, c, v] : entries) trips.emplace_back(r, c, v);
  impl_->A.resize(n, n);
  impl_->A.setFromTriplets(trips.begin(), trips.end());
  impl_->A.makeCompressed();
  impl_->lu.compute(impl_->A);
  impl_->ok = impl_->lu.info() == Eigen::Success;
}

ComplexSolver::~ComplexSolver() = default;
ComplexSolver::ComplexSolver(ComplexSolver&&) noexcept = default;

bool ComplexSolver::singular() const { return !impl_->ok; }

double ComplexSolver::log_abs_det() const {
  if (!impl_->ok) return -std::numeric_limits<double>::infinity();
  return std::real(impl_->lu.logAbsDeterminant());
}

std::vector<std::complex<double>> ComplexSolver::solve(
    const std::vector<std::complex<double>>& rhs) const {
  if (!impl_->ok) throw std::domain_error("ComplexSolver: singular system");
  Eigen::VectorXcd b(rhs.size());
  for (size_t k = 0; k < rhs.size(); ++k) b[long(k)] = rhs[k];
  Eigen::VectorXcd x = impl_->lu.solve(b);
  return {x.data(), x.data() + x.size()};
}

// -- helpers ----------------------------------------------------------------

Rational exact_sqrt(const Rational& r) {
  if (sgn(r) < 0) throw std::domain_error("exact_sqrt: negative");
  Rational c = r;
  c.canonicalize();
  mpz_class num = c.get_num(), den = c.get_den();
  if (mpz_perfect_square_p(num.get_mpz_t()) == 0 ||
      mpz_perfect_square_p(den.get_mpz_t()) == 0)
    throw std::domain_error("exact_sqrt: not a perfect square");
  mpz_class sn, sd;
  mpz_sqrt(sn.get_mpz_t(), num.get_mpz_t());
  mpz_sqrt(sd.get_mpz_t(), den.get_mpz_t());
  return Rational(sn, sd);
}

Rational exact_abs_rational(const ExactScalar& z) {
  Qr2 a2 = z.abs2();
  if (sgn(a2.y) != 0)
    throw std::domain_error("exact_abs_rational: modulus not rational");
  return exact_sqrt(a2.x);
}

// -- KasteleynSystem --------------------------------------------------------

KasteleynSystem::KasteleynSystem(const Domain& d, Backend backend)
    : dom_(&d), backend_(backend) {}

bool KasteleynSystem::square() const { return dom_->balanced(); }

void KasteleynSystem::require_square() const {
  if (!square())
    throw std::domain_error("KasteleynSystem: unbalanced domain, matrix not square");
}

const DenseLU<ExactScalar>& KasteleynSystem::elu() const {
  require_square();
  if (!exact_lu_) {
    exact_lu_ = std::make_unique<DenseLU<ExactScalar>>(
        factor(kasteleyn_matrix<ExactScalar>(*dom_)));
  }
  return *exact_lu_;
}

const ComplexSolver& KasteleynSystem::flu() const {
  require_square();
  if (!float_lu_) {
    std::vector<std::tuple<int, int, std::complex<double>>> entries;
    const auto& ws = dom_->whites();
    for (size_t r = 0; r < ws.size(); ++r)
      for (Sq u : Domain::neighbors(ws[r])) {
        int c = dom_->black_index(u);
        if (c >= 0)
          entries.emplace_back(int(r), c,
                               kasteleyn_weight<std::complex<double>>(ws[r], u));
      }
    float_lu_ = std::make_unique<ComplexSolver>(int(ws.size()), entries);
  }
  return *float_lu_;
}

bool KasteleynSystem::singular() const {
  if (!square()) return true;
  return backend_ == Backend::Exact ? elu().singular : flu().singular();
}

TilingCount KasteleynSystem::count_tilings() const {
  TilingCount out;
  if (!square()) {
    out.balanced = false;
    out.count = 0;
    return out;
  }
  if (backend_ == Backend::Exact) {
    const auto& f = elu();
    if (f.singular) { out.count = 0; return out; }
    ExactScalar det = f.det();
    // det lies in Z[i] up to a unit, so |det| is a nonnegative integer
    out.count = exact_abs_rational(det).get_num();
    return out;
  }
  const auto& f = flu();
  out.is_exact = false;
  if (f.singular()) { out.count = 0; out.log_abs_det = -1e300; return out; }
  out.log_abs_det = f.log_abs_det();
  if (out.log_abs_det < 60) {
    double v = std::exp(out.log_abs_det);
    out.count = mpz_class(long(std::llround(v)));
  }
  return out;
}

std::vector<ExactScalar> KasteleynSystem::coupling_column_exact(Sq v) const {
  int r = dom_->white_index(v);
  if (r < 0) throw std::invalid_argument("coupling_column: not a domain white square");
  if (exact_inv_) {
    std::vector<ExactScalar> col(dom_->black_count());
    for (int i = 0; i < dom_->black_count(); ++i) col[i] = exact_inv_->at(i, r);
    return col;
  }
  std::vector<ExactScalar> rhs(dom_->white_count(), ExactScalar::zero());
  rhs[r] = ExactScalar::one();
  return elu().solve(rhs);
}

std::vector<std::complex<double>> KasteleynSystem::coupling_column(Sq v) const {
  if (backend_ == Backend::Exact) {
    auto col = coupling_column_exact(v);
    std::vector<std::complex<double>> out(col.size());
    for (size_t k = 0; k < col.size(); ++k) out[k] = col[k].to_complex();
    return out;
  }
  int r = dom_->white_index(v);
  if (r < 0) throw std::invalid_argument("coupling_column: not a domain white square");
  std::vector<std::complex<double>> rhs(dom_->white_count(), {0, 0});
  rhs[r] = {1, 0};
  return flu().solve(rhs);
}

ExactScalar KasteleynSystem::coupling_entry_exact(Sq u, Sq v) const {
  int bi = dom_->black_index(u);
  if (bi < 0) throw std::invalid_argument("coupling_entry: not a domain black square");
  return coupling_column_exact(v)[bi];
}

std::complex<double> KasteleynSystem::coupling_entry(Sq u, Sq v) const {
  int bi = dom_->black_index(u);
  if (bi < 0) throw std::invalid_argument("coupling_entry: not a domain black square");
  return coupling_column(v)[bi];
}

Rational KasteleynSystem::edge_probability_exact(Sq u, Sq v) const {
  kasteleyn_weight<ExactScalar>(v, u);  // adjacency check
  return exact_abs_rational(coupling_entry_exact(u, v));
}

double KasteleynSystem::edge_probability(Sq u, Sq v) const {
  kasteleyn_weight<std::complex<double>>(v, u);
  return std::abs(coupling_entry(u, v));
}

Rational KasteleynSystem::local_statistic_exact(
    const std::vector<std::pair<Sq, Sq>>& edges) const {
  const int k = int(edges.size());
  for (int a = 0; a < k; ++a)
    for (int b = a + 1; b < k; ++b)
      if (edges[a].first == edges[b].first || edges[a].second == edges[b].second)
        throw std::invalid_argument("local_statistic: edges share a square");
  Mat<ExactScalar> M(k, k);
  for (int a = 0; a < k; ++a) {
    auto col = coupling_column_exact(edges[a].second);
    for (int b = 0; b < k; ++b) {
      int bi = dom_->black_index(edges[b].first);
      M.at(b, a) = col[bi];
    }
  }
  ExactScalar det = factor(M).det();
  // the k unit edge weights have modulus 1
  Qr2 a2 = det.abs2();
  if (sgn(a2.y) != 0) {
    // modulus may live in Q(sqrt 2); compare via doubles is not acceptable
    // here, but the probability itself is rational, so this signals misuse
    throw std::domain_error("local_statistic: non-rational probability");
  }
  return exact_sqrt(a2.x);
}

double KasteleynSystem::local_statistic(
    const std::vector<std::pair<Sq, Sq>>& edges) const {
  if (backend_ == Backend::Exact)
    return local_statistic_exact(edges).get_d();
  const int k = int(edges.size());
  Mat<std::complex<double>> M(k, k);
  for (int a = 0; a < k; ++a) {
    auto col = coupling_column(edges[a].second);
    for (int b = 0; b < k; ++b)
      M.at(b, a) = col[dom_->black_index(edges[b].first)];
  }
  return std::abs(factor(M).det());
}

const Mat<ExactScalar>& KasteleynSystem::inverse_exact() const {
  if (!exact_inv_) {
    const auto& f = elu();
    int N = dom_->black_count();
    auto inv = std::make_unique<Mat<ExactScalar>>(N, N);
    std::vector<ExactScalar> rhs(N, ExactScalar::zero());
    for (int c = 0; c < N; ++c) {
      rhs[c] = ExactScalar::one();
      auto col = f.solve(rhs);
      rhs[c] = ExactScalar::zero();
      for (int i = 0; i < N; ++i) inv->at(i, c) = col[i];
    }
    exact_inv_ = std::move(inv);
  }
  return *exact_inv_;
}

const Mat<std::complex<double>>& KasteleynSystem::inverse_float() const {
  if (!float_inv_) {
    const auto& f = flu();
    int N = dom_->black_count();
    auto inv = std::make_unique<Mat<std::complex<double>>>(N, N);
    std::vector<std::complex<double>> rhs(N, {0, 0});
    for (int c = 0; c < N; ++c) {
      rhs[c] = {1, 0};
      auto col = f.solve(rhs);
      rhs[c] = {0, 0};
      for (int i = 0; i < N; ++i) inv->at(i, c) = col[i];
    }
    float_inv_ = std::move(inv);
  }
  return *float_inv_;
}

std::string KasteleynSystem::coupling_csv() const {
  std::ostringstream os;
  const auto& bs = dom_->blacks();
  const auto& ws = dom_->whites();
  if (backend_ == Backend::Exact) {
    os << "u_n,u_m,v_n,v_m,a,b,c,d\n";
    const auto& inv = inverse_exact();
    for (size_t i = 0; i < bs.size(); ++i)
      for (size_t j = 0; j < ws.size(); ++j) {
        const ExactScalar& z = inv.at(int(i), int(j));
        os << bs[i].n << "," << bs[i].m << "," << ws[j].n << "," << ws[j].m << ","
           << z.re.x.get_str() << "," << z.re.y.get_str() << ","
           << z.im.x.get_str() << "," << z.im.y.get_str() << "\n";
      }
  } else {
    os << "u_n,u_m,v_n,v_m,re,im\n";
    const auto& inv = inverse_float();
    os.precision(17);
    for (size_t i = 0; i < bs.size(); ++i)
      for (size_t j = 0; j < ws.size(); ++j) {
        auto z = inv.at(int(i), int(j));
        os << bs[i].n << "," << bs[i].m << "," << ws[j].n << "," << ws[j].m << ","
           << z.real() << "," << z.imag() << "\n";
      }
  }
  return os.str();
}

}  // namespace dimerlab
