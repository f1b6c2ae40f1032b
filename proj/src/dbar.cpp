#include "dimerlab/dbar.hpp"

#include <sstream>
#include <stdexcept>

namespace dimerlab {

namespace {

double magnitude(const std::complex<double>& z) { return std::abs(z); }
double magnitude(const ExactScalar& z) { return std::abs(z.to_complex()); }
bool exactly_zero(const std::complex<double>& z) { return z == std::complex<double>(0, 0); }
bool exactly_zero(const ExactScalar& z) { return z.is_zero(); }

template <class S>
S quarter_inv_mesh(double mesh) {
  return Units<S>::one() / (S(4) * scalar_from_mesh<S>(mesh));
}

template <>
std::complex<double> quarter_inv_mesh<std::complex<double>>(double mesh) {
  return {1.0 / (4.0 * mesh), 0.0};
}

template <class S>
Evaluated<S> first_order(const SquareField<S>& X, Sq s, bool bar) {
  if (is_black(s) == X.on_black)
    throw std::invalid_argument("derivative: evaluation square has the field's color");
  Sq pl{s.n + 1, s.m + 1}, ml{s.n - 1, s.m - 1};
  Sq pb{s.n + 1, s.m - 1}, mb{s.n - 1, s.m + 1};
  if (!X.defined(pl) || !X.defined(ml) || !X.defined(pb) || !X.defined(mb))
    return std::nullopt;
  S dl = X.at(pl) - X.at(ml);
  S db = X.at(pb) - X.at(mb);
  S l = Units<S>::lambda(), lb = Units<S>::lambda_bar();
  S num = bar ? l * dl + lb * db : lb * dl + l * db;
  return num * quarter_inv_mesh<S>(X.dom->mesh());
}

}  // namespace

template <class S>
Evaluated<S> dbar_at(const SquareField<S>& X, Sq s) {
  return first_order(X, s, true);
}

template <class S>
Evaluated<S> d_at(const SquareField<S>& X, Sq s) {
  return first_order(X, s, false);
}

template <class S>
Evaluated<S> laplacian_at(const SquareField<S>& X, Sq s) {
  if (is_black(s) != X.on_black)
    throw std::invalid_argument("laplacian: evaluation square has the opposite color");
  S sum{};
  for (int dn : {-2, 2})
    for (int dm : {-2, 2}) {
      Sq t{s.n + dn, s.m + dm};
      if (!X.defined(t)) return std::nullopt;
      sum += X.at(t);
    }
  sum -= S(4) * X.at(s);
  S q = quarter_inv_mesh<S>(X.dom->mesh());
  // 1/(4 delta^2) = (1/(4 delta)) * (1/delta)
  return sum * q * (S(4) * q);
}

template <class S>
HoloReport check_holomorphic(const SquareField<S>& X, const std::vector<Sq>& poles) {
  HoloReport rep;
  const auto& sqs = X.on_black ? X.dom->whites() : X.dom->blacks();
  for (Sq s : sqs) {
    bool skip = false;
    for (Sq p : poles) skip = skip || p == s;
    if (skip) continue;
    auto r = dbar_at(X, s);
    if (!r) continue;
    ++rep.checked;
    if (!exactly_zero(*r)) rep.exact_zero = false;
    double a = magnitude(*r);
    if (a > rep.max_residual) { rep.max_residual = a; rep.worst = s; }
  }
  return rep;
}

template Evaluated<ExactScalar> dbar_at(const SquareField<ExactScalar>&, Sq);
template Evaluated<std::complex<double>> dbar_at(const SquareField<std::complex<double>>&, Sq);
template Evaluated<ExactScalar> d_at(const SquareField<ExactScalar>&, Sq);
template Evaluated<std::complex<double>> d_at(const SquareField<std::complex<double>>&, Sq);
template Evaluated<ExactScalar> laplacian_at(const SquareField<ExactScalar>&, Sq);
template Evaluated<std::complex<double>> laplacian_at(const SquareField<std::complex<double>>&, Sq);
template HoloReport check_holomorphic(const SquareField<ExactScalar>&, const std::vector<Sq>&);
template HoloReport check_holomorphic(const SquareField<std::complex<double>>&, const std::vector<Sq>&);

template <class S>
std::string SquareField<S>::to_csv() const {
  std::ostringstream os;
  const auto& sqs = on_black ? dom->blacks() : dom->whites();
  if constexpr (std::is_same_v<S, ExactScalar>) {
    os << "n,m,value\n";
    for (size_t k = 0; k < sqs.size(); ++k)
      os << sqs[k].n << "," << sqs[k].m << "," << interior[k].str() << "\n";
  } else {
    os << "n,m,re,im\n";
    os.precision(17);
    for (size_t k = 0; k < sqs.size(); ++k)
      os << sqs[k].n << "," << sqs[k].m << "," << interior[k].real() << ","
         << interior[k].imag() << "\n";
  }
  return os.str();
}

template std::string SquareField<ExactScalar>::to_csv() const;
template std::string SquareField<std::complex<double>>::to_csv() const;

// -- solvers ----------------------------------------------------------------

namespace {

// rhs scale for a row equation row . X = 4*delta*lbar*(dbar X), given the
// imposed value of 4*delta*lbar*dbar at the pole.
template <class S>
S pole_rhs_F(double mesh, PoleNorm norm) {
  S d = scalar_from_mesh<S>(mesh);
  // dbar F(v0) = lambda  ->  rhs = 4*delta ; lambda/delta^2 -> 4/delta
  return norm == PoleNorm::Mesh1 ? S(4) * d : S(4) / d;
}

template <class S>
S pole_rhs_G(double mesh, PoleNorm norm) {
  S d = scalar_from_mesh<S>(mesh);
  S l = Units<S>::lambda();
  // dbar G(u0) = i  ->  rhs = 4*delta*lambda ; i/delta^2 -> 4*lambda/delta
  return norm == PoleNorm::Mesh1 ? S(4) * d * l : S(4) * l / d;
}

// Transposed-orientation solve: rows indexed by `rows` squares, columns by
// the opposite-color interior squares of d; exact dense backend.
Mat<ExactScalar> adjacency_rows(const Domain& d, const std::vector<Sq>& rows,
                                bool cols_black) {
  const auto& cols = cols_black ? d.blacks() : d.whites();
  Mat<ExactScalar> A(int(rows.size()), int(cols.size()));
  for (size_t r = 0; r < rows.size(); ++r)
    for (Sq t : Domain::neighbors(rows[r])) {
      int c = cols_black ? d.black_index(t) : d.white_index(t);
      if (c >= 0) A.at(int(r), c) = kasteleyn_weight<ExactScalar>(rows[r], t);
    }
  return A;
}

ComplexSolver adjacency_solver_float(const Domain& d, const std::vector<Sq>& rows,
                                     bool cols_black) {
  std::vector<std::tuple<int, int, std::complex<double>>> entries;
  for (size_t r = 0; r < rows.size(); ++r)
    for (Sq t : Domain::neighbors(rows[r])) {
      int c = cols_black ? d.black_index(t) : d.white_index(t);
      if (c >= 0)
        entries.emplace_back(int(r), c, kasteleyn_weight<std::complex<double>>(rows[r], t));
    }
  return ComplexSolver(int(rows.size()), entries);
}

void require_balanced(const Domain& d) {
  if (!d.balanced())
    throw std::domain_error("solver: balanced domain required");
}

void require_interior_white(const Domain& d, Sq v0) {
  if (!is_white(v0) || d.white_index(v0) < 0)
    throw std::invalid_argument("solver: pole is not an interior white square");
}

void require_interior_black(const Domain& d, Sq u0) {
  if (!is_black(u0) || d.black_index(u0) < 0)
    throw std::invalid_argument("solver: pole is not an interior black square");
}

}  // namespace

BlackFieldE solve_F_exact(const Domain& d, Sq v0, PoleNorm norm) {
  require_balanced(d);
  require_interior_white(d, v0);
  auto lu = factor(adjacency_rows(d, d.whites(), true));
  if (lu.singular) throw std::domain_error("solve_F: singular system (untileable domain)");
  std::vector<ExactScalar> rhs(d.white_count());
  rhs[size_t(d.white_index(v0))] = pole_rhs_F<ExactScalar>(d.mesh(), norm);
  BlackFieldE F;
  F.dom = &d;
  F.on_black = true;
  F.interior = lu.solve(rhs);
  return F;
}

BlackFieldF solve_F_float(const Domain& d, Sq v0, PoleNorm norm) {
  require_balanced(d);
  require_interior_white(d, v0);
  auto slv = adjacency_solver_float(d, d.whites(), true);
  if (slv.singular()) throw std::domain_error("solve_F: singular system (untileable domain)");
  std::vector<std::complex<double>> rhs(d.white_count());
  rhs[size_t(d.white_index(v0))] = pole_rhs_F<std::complex<double>>(d.mesh(), norm);
  BlackFieldF F;
  F.dom = &d;
  F.on_black = true;
  F.interior = slv.solve(rhs);
  return F;
}

WhiteFieldE solve_G_exact(const Domain& d, Sq u0, PoleNorm norm) {
  require_balanced(d);
  require_interior_black(d, u0);
  auto lu = factor(adjacency_rows(d, d.blacks(), false));
  if (lu.singular) throw std::domain_error("solve_G: singular system (untileable domain)");
  std::vector<ExactScalar> rhs(d.black_count());
  rhs[size_t(d.black_index(u0))] = pole_rhs_G<ExactScalar>(d.mesh(), norm);
  WhiteFieldE G;
  G.dom = &d;
  G.on_black = false;
  G.interior = lu.solve(rhs);
  return G;
}

WhiteFieldF solve_G_float(const Domain& d, Sq u0, PoleNorm norm) {
  require_balanced(d);
  require_interior_black(d, u0);
  auto slv = adjacency_solver_float(d, d.blacks(), false);
  if (slv.singular()) throw std::domain_error("solve_G: singular system (untileable domain)");
  std::vector<std::complex<double>> rhs(d.black_count());
  rhs[size_t(d.black_index(u0))] = pole_rhs_G<std::complex<double>>(d.mesh(), norm);
  WhiteFieldF G;
  G.dom = &d;
  G.on_black = false;
  G.interior = slv.solve(rhs);
  return G;
}

BlackFieldE solve_F_odd_exact(const Domain& d, Sq u1) {
  if (d.black_count() != d.white_count() + 1)
    throw std::domain_error("solve_F_odd: needs one extra black square");
  require_interior_black(d, u1);
  const int m = d.white_count();
  const int j1 = d.black_index(u1);
  Mat<ExactScalar> K = adjacency_rows(d, d.whites(), true);
  Mat<ExactScalar> A(m, m);
  std::vector<ExactScalar> rhs(m);
  for (int r = 0; r < m; ++r) {
    for (int c = 0, cc = 0; c < d.black_count(); ++c) {
      if (c == j1) continue;
      A.at(r, cc++) = K.at(r, c);
    }
    rhs[size_t(r)] = -K.at(r, j1);
  }
  auto lu = factor(std::move(A));
  if (lu.singular) throw std::domain_error("solve_F_odd: singular system");
  auto x = lu.solve(rhs);
  BlackFieldE F;
  F.dom = &d;
  F.on_black = true;
  F.interior.resize(size_t(d.black_count()));
  for (int c = 0, cc = 0; c < d.black_count(); ++c)
    F.interior[size_t(c)] = (c == j1) ? ExactScalar::one() : x[size_t(cc++)];
  return F;
}

BlackFieldF solve_F_odd_float(const Domain& d, Sq u1) {
  if (d.black_count() != d.white_count() + 1)
    throw std::domain_error("solve_F_odd: needs one extra black square");
  require_interior_black(d, u1);
  const int j1 = d.black_index(u1);
  std::vector<std::tuple<int, int, std::complex<double>>> entries;
  std::vector<std::complex<double>> rhs(size_t(d.white_count()));
  const auto& ws = d.whites();
  for (size_t r = 0; r < ws.size(); ++r)
    for (Sq u : Domain::neighbors(ws[r])) {
      int c = d.black_index(u);
      if (c < 0) continue;
      auto w = kasteleyn_weight<std::complex<double>>(ws[r], u);
      if (c == j1)
        rhs[r] -= w;
      else
        entries.emplace_back(int(r), c < j1 ? c : c - 1, w);
    }
  ComplexSolver slv(d.white_count(), entries);
  if (slv.singular()) throw std::domain_error("solve_F_odd: singular system");
  auto x = slv.solve(rhs);
  BlackFieldF F;
  F.dom = &d;
  F.on_black = true;
  F.interior.resize(size_t(d.black_count()));
  for (int c = 0, cc = 0; c < d.black_count(); ++c)
    F.interior[size_t(c)] = (c == j1) ? std::complex<double>(1, 0) : x[size_t(cc++)];
  return F;
}

WhiteFieldE solve_G_odd_exact(const Domain& d, Sq u1, Sq u2, PoleNorm norm) {
  if (d.black_count() != d.white_count() + 1)
    throw std::domain_error("solve_G_odd: needs one extra black square");
  require_interior_black(d, u1);
  require_interior_black(d, u2);
  if (u1 == u2) throw std::invalid_argument("solve_G_odd: poles coincide");
  std::vector<Sq> rows;
  for (Sq u : d.blacks())
    if (!(u == u2)) rows.push_back(u);
  auto lu = factor(adjacency_rows(d, rows, false));
  if (lu.singular) throw std::domain_error("solve_G_odd: singular system");
  std::vector<ExactScalar> rhs(rows.size());
  for (size_t r = 0; r < rows.size(); ++r)
    if (rows[r] == u1) rhs[r] = pole_rhs_G<ExactScalar>(d.mesh(), norm);
  WhiteFieldE G;
  G.dom = &d;
  G.on_black = false;
  G.interior = lu.solve(rhs);
  return G;
}

WhiteFieldF solve_G_odd_float(const Domain& d, Sq u1, Sq u2, PoleNorm norm) {
  if (d.black_count() != d.white_count() + 1)
    throw std::domain_error("solve_G_odd: needs one extra black square");
  require_interior_black(d, u1);
  require_interior_black(d, u2);
  if (u1 == u2) throw std::invalid_argument("solve_G_odd: poles coincide");
  std::vector<Sq> rows;
  for (Sq u : d.blacks())
    if (!(u == u2)) rows.push_back(u);
  auto slv = adjacency_solver_float(d, rows, false);
  if (slv.singular()) throw std::domain_error("solve_G_odd: singular system");
  std::vector<std::complex<double>> rhs(rows.size());
  for (size_t r = 0; r < rows.size(); ++r)
    if (rows[r] == u1) rhs[r] = pole_rhs_G<std::complex<double>>(d.mesh(), norm);
  WhiteFieldF G;
  G.dom = &d;
  G.on_black = false;
  G.interior = slv.solve(rhs);
  return G;
}

// -- kernels ----------------------------------------------------------------

namespace {

Domain kernel_box(double mesh, int R, int y_lo, int y_hi) {
  std::vector<std::pair<int, int>> cells;
  for (int x = 1 - R; x <= R; ++x)
    for (int y = y_lo; y <= y_hi; ++y) cells.emplace_back(x, y);
  return Domain::from_cells(mesh, cells);
}

}  // namespace

KernelField kernel_fullplane(double mesh, int radius_cells) {
  const int R = radius_cells;
  if (R < 4) throw std::invalid_argument("kernel_fullplane: radius too small");
  KernelField out{std::make_shared<Domain>(kernel_box(mesh, R, -R, R - 1)),
                  {},
                  cell_to_square(1, 0)};
  out.F = solve_F_float(*out.box, out.v0, PoleNorm::MeshDelta);
  return out;
}

KernelField kernel_halfplane(double mesh, int radius_cells) {
  const int R = radius_cells;
  if (R < 4) throw std::invalid_argument("kernel_halfplane: radius too small");
  KernelField out{std::make_shared<Domain>(kernel_box(mesh, R, -1 - R, R - 1)),
                  {},
                  cell_to_square(1, 0)};
  const Domain& d = *out.box;
  Sq mirror = cell_to_square(1, -2);
  auto slv = adjacency_solver_float(d, d.whites(), true);
  if (slv.singular()) throw std::domain_error("kernel_halfplane: singular system");
  std::vector<std::complex<double>> rhs(size_t(d.white_count()));
  auto scale = pole_rhs_F<std::complex<double>>(mesh, PoleNorm::MeshDelta);
  rhs[size_t(d.white_index(out.v0))] = scale;
  rhs[size_t(d.white_index(mirror))] = scale;
  out.F.dom = &d;
  out.F.on_black = true;
  out.F.interior = slv.solve(rhs);
  return out;
}

}  // namespace dimerlab
