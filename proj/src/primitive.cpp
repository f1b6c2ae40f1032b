#include "dimerlab/primitive.hpp"

#include <map>
#include <queue>
#include <sstream>
#include <type_traits>
#include <unordered_set>

namespace dimerlab {

namespace {

double magnitude(const std::complex<double>& z) { return std::abs(z); }
double magnitude(const ExactScalar& z) { return std::abs(z.to_complex()); }

template <class S>
bool negligible(const S& z, double tol) {
  if constexpr (std::is_same_v<S, ExactScalar>)
    return z.is_zero();
  else
    return magnitude(z) <= tol;
}

template <class S>
S imag_unit() {
  return Units<S>::i();
}

// 1/sqrt(2) as a scalar.
template <class S>
S inv_sqrt2();
template <>
std::complex<double> inv_sqrt2() { return {std::sqrt(0.5), 0.0}; }
template <>
ExactScalar inv_sqrt2() { return ExactScalar(Qr2(Rational(0), Rational(1, 2))); }

// Displacement vector (mesh/sqrt2)*(dp + i*dq) between vertices.
template <class S>
S step_vector(double mesh, int dp, int dq) {
  S c = scalar_from_mesh<S>(mesh) * inv_sqrt2<S>();
  return c * (S(dp) + imag_unit<S>() * S(dq));
}

double imag_size(const std::complex<double>& z) { return std::abs(z.imag()); }
double imag_size(const ExactScalar& z) { return std::abs(z.im.to_double()); }
bool imag_vanishes(const std::complex<double>&) { return true; }  // float: tol only
bool imag_vanishes(const ExactScalar& z) { return z.im.is_zero(); }

template <class S>
void record(CheckSummary& cs, const S& err, double tol, Vx z) {
  ++cs.checked;
  double m = magnitude(err);
  if (m > cs.max_err) {
    cs.max_err = m;
    cs.worst = z;
  }
  if (!negligible(err, tol)) ++cs.violations;
}

// A real <= 0 test for the saddle product.
bool nonpositive(const std::complex<double>& z, double tol) {
  return z.real() <= tol;
}
bool nonpositive(const ExactScalar& z, double /*tol*/) {
  return z.im.is_zero() && z.re.sign() <= 0;
}

template <class S>
bool near_excluded(Vx z, const std::vector<Sq>& excluded, int radius) {
  for (Sq s : excluded)
    if (std::abs(s.n - z.p) <= radius && std::abs(s.m - z.q) <= radius) return true;
  return false;
}

// The four diagonal neighbor vertices in cyclic order.
std::array<Vx, 4> diagonal_neighbors(Vx z) {
  return {Vx{z.p + 1, z.q + 1}, Vx{z.p - 1, z.q + 1}, Vx{z.p - 1, z.q - 1},
          Vx{z.p + 1, z.q - 1}};
}

template <class S>
S projection(const S& tau, const S& w) {
  // tau * Re[w * conj(tau)]
  if constexpr (std::is_same_v<S, ExactScalar>) {
    ExactScalar prod = w * tau.conj();
    return tau * ExactScalar(prod.re);
  } else {
    return tau * std::real(w * std::conj(tau));
  }
}

}  // namespace

// -- VertexField -------------------------------------------------------------

template <class S>
std::string VertexField<S>::to_csv() const {
  std::ostringstream os;
  os << "p,q,value\n";
  const auto& vs = dom->vertices();
  for (size_t k = 0; k < vs.size(); ++k) {
    if (!known[k]) continue;
    os << vs[k].p << "," << vs[k].q << ",";
    if constexpr (std::is_same_v<S, ExactScalar>) {
      os << values[k].str();
    } else {
      os.precision(17);
      os << values[k].real();
    }
    os << "\n";
  }
  return os.str();
}

template std::string VertexField<ExactScalar>::to_csv() const;
template std::string VertexField<std::complex<double>>::to_csv() const;

// -- integration -------------------------------------------------------------

template <class S>
PrimitiveResult<S> integrate_primitive(const Domain& d, const SquareField<S>& F,
                                       const SquareField<S>& G,
                                       const std::vector<Sq>& excluded, Vx z0) {
  std::unordered_set<Sq, SqHash> excl(excluded.begin(), excluded.end());
  PrimitiveResult<S> out;
  out.H.dom = &d;
  out.H.values.assign(d.vertices().size(), S{});
  out.H.known.assign(d.vertices().size(), 0);

  // Increment for the oriented edge key.first -> key.second (key.first < key.second).
  std::map<std::pair<Vx, Vx>, S> incs;
  for (Sq s : d.squares()) {
    if (excl.count(s)) continue;
    auto cs = Domain::corners_of(s);
    for (int k = 0; k < 4; ++k) {
      Vx a = cs[size_t(k)], b = cs[size_t((k + 1) % 4)];
      auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
      if (incs.count(key)) continue;
      auto [s1, s2] = Domain::edge_squares(key.first, key.second);
      if (excl.count(s1) || excl.count(s2)) continue;
      Sq u = is_black(s1) ? s1 : s2;
      Sq v = is_black(s1) ? s2 : s1;
      S inc = step_vector<S>(d.mesh(), key.second.p - key.first.p,
                             key.second.q - key.first.q) *
              F.at_or_zero(u) * G.at_or_zero(v);
      double im = imag_size(inc);
      if (im > out.max_imag) out.max_imag = im;
      if (!imag_vanishes(inc)) out.exact_real = false;
      incs.emplace(key, std::move(inc));
    }
  }

  std::unordered_map<Vx, std::vector<std::pair<Vx, const S*>>, VxHash> adj;
  for (const auto& [key, inc] : incs) {
    adj[key.first].emplace_back(key.second, &inc);
    adj[key.second].emplace_back(key.first, &inc);
  }

  int i0 = d.vertex_index(z0);
  if (i0 < 0) throw std::invalid_argument("integrate_primitive: gauge not a vertex");
  out.H.known[size_t(i0)] = 1;
  std::queue<Vx> bfs;
  bfs.push(z0);
  while (!bfs.empty()) {
    Vx a = bfs.front();
    bfs.pop();
    S ha = out.H.values[size_t(d.vertex_index(a))];
    auto it = adj.find(a);
    if (it == adj.end()) continue;
    for (auto& [b, inc] : it->second) {
      int ib = d.vertex_index(b);
      if (ib < 0 || out.H.known[size_t(ib)]) continue;
      out.H.values[size_t(ib)] = (a < b) ? ha + *inc : ha - *inc;
      out.H.known[size_t(ib)] = 1;
      bfs.push(b);
    }
  }
  for (char k : out.H.known)
    if (!k) ++out.unreached;

  // Closedness: residual of every integrated edge against the realized field.
  for (const auto& [key, inc] : incs) {
    int ia = d.vertex_index(key.first), ib = d.vertex_index(key.second);
    if (ia < 0 || ib < 0 || !out.H.known[size_t(ia)] || !out.H.known[size_t(ib)])
      continue;
    S res = out.H.values[size_t(ib)] - out.H.values[size_t(ia)] - inc;
    double m = magnitude(res);
    if (m > out.max_loop_residual) {
      out.max_loop_residual = m;
      out.worst_square = Domain::edge_squares(key.first, key.second).first;
    }
    if constexpr (std::is_same_v<S, ExactScalar>) {
      if (!res.is_zero()) out.exact_closed = false;
    }
  }
  if constexpr (!std::is_same_v<S, ExactScalar>) {
    out.exact_closed = out.max_loop_residual == 0.0;
  }
  return out;
}

template PrimitiveResult<ExactScalar> integrate_primitive(
    const Domain&, const SquareField<ExactScalar>&, const SquareField<ExactScalar>&,
    const std::vector<Sq>&, Vx);
template PrimitiveResult<std::complex<double>> integrate_primitive(
    const Domain&, const SquareField<std::complex<double>>&,
    const SquareField<std::complex<double>>&, const std::vector<Sq>&, Vx);

// -- leap-frog Laplacian ------------------------------------------------------

template <class S>
Evaluated<S> leapfrog_laplacian(const VertexField<S>& H, Vx z) {
  static const int off[4][2] = {{2, 2}, {-2, 2}, {-2, -2}, {2, -2}};
  if (!H.defined(z)) return std::nullopt;
  S sum{};
  for (auto& o : off) {
    Vx w{z.p + o[0], z.q + o[1]};
    if (!H.defined(w)) return std::nullopt;
    sum += H.at(w);
  }
  sum -= S(4) * H.at(z);
  S m = scalar_from_mesh<S>(H.dom->mesh());
  return sum / (S(4) * m * m);
}

template Evaluated<ExactScalar> leapfrog_laplacian(const VertexField<ExactScalar>&, Vx);
template Evaluated<std::complex<double>> leapfrog_laplacian(
    const VertexField<std::complex<double>>&, Vx);

// -- bilinear Laplacian formula ----------------------------------------------

template <class S>
CheckSummary leapfrog_formula_check(const VertexField<S>& H, const SquareField<S>& F,
                                    const SquareField<S>& G,
                                    const std::vector<Sq>& excluded, double tol) {
  CheckSummary cs;
  const Domain& d = *H.dom;
  const S lam = Units<S>::lambda();
  const S lbar = Units<S>::lambda_bar();
  const S mesh = scalar_from_mesh<S>(d.mesh());
  // First derivative of the opposite-colored field at a square.
  auto deriv = [&](Sq s) -> Evaluated<S> {
    return is_white(s) ? d_at(F, s) : d_at(G, s);
  };
  for (Vx z : d.vertices()) {
    if (near_excluded<S>(z, excluded, 3)) continue;
    auto lhs = leapfrog_laplacian(H, z);
    if (!lhs) continue;
    Sq up{z.p, z.q + 1}, down{z.p, z.q - 1}, left{z.p - 1, z.q}, right{z.p + 1, z.q};
    auto pu = deriv(up), pd = deriv(down), pl = deriv(left), pr = deriv(right);
    if (!pu || !pd || !pl || !pr) continue;
    S rhs = mesh * (lam * (*pu) * (*pl) - lbar * (*pu) * (*pr) +
                    lbar * (*pd) * (*pl) - lam * (*pd) * (*pr));
    record(cs, S(*lhs - rhs), tol, z);
  }
  return cs;
}

template CheckSummary leapfrog_formula_check(const VertexField<ExactScalar>&,
                                             const SquareField<ExactScalar>&,
                                             const SquareField<ExactScalar>&,
                                             const std::vector<Sq>&, double);
template CheckSummary leapfrog_formula_check(const VertexField<std::complex<double>>&,
                                             const SquareField<std::complex<double>>&,
                                             const SquareField<std::complex<double>>&,
                                             const std::vector<Sq>&, double);

// -- vertex identities --------------------------------------------------------

namespace {

// Differences H(z) - H(z_i) over the diagonal neighbors, if all present and
// no incident square is excluded.
template <class S>
bool vertex_diffs(const VertexField<S>& H, Vx z, const std::vector<Sq>& excluded,
                  std::array<S, 4>& out) {
  if (!H.defined(z)) return false;
  for (Sq s : {Sq{z.p + 1, z.q}, Sq{z.p - 1, z.q}, Sq{z.p, z.q + 1}, Sq{z.p, z.q - 1}})
    for (Sq e : excluded)
      if (s == e) return false;
  auto nb = diagonal_neighbors(z);
  for (int k = 0; k < 4; ++k) {
    if (!H.defined(nb[size_t(k)])) return false;
    out[size_t(k)] = H.at(z) - H.at(nb[size_t(k)]);
  }
  return true;
}

}  // namespace

template <class S>
CheckSummary saddle_check(const VertexField<S>& H, const std::vector<Sq>& excluded,
                          double tol) {
  CheckSummary cs;
  for (Vx z : H.dom->vertices()) {
    std::array<S, 4> dd;
    if (!vertex_diffs(H, z, excluded, dd)) continue;
    S prod = dd[0] * dd[1] * dd[2] * dd[3];
    ++cs.checked;
    double m = magnitude(prod);
    if (!nonpositive(prod, tol)) {
      ++cs.violations;
      if (m > cs.max_err) {
        cs.max_err = m;
        cs.worst = z;
      }
    }
  }
  return cs;
}

template CheckSummary saddle_check(const VertexField<ExactScalar>&,
                                   const std::vector<Sq>&, double);
template CheckSummary saddle_check(const VertexField<std::complex<double>>&,
                                   const std::vector<Sq>&, double);

template <class S>
CheckSummary nonlinear_check(const VertexField<S>& H, const std::vector<Sq>& excluded,
                             double tol) {
  CheckSummary cs;
  for (Vx z : H.dom->vertices()) {
    std::array<S, 4> dd;
    if (!vertex_diffs(H, z, excluded, dd)) continue;
    record(cs, S(dd[0] * dd[2] + dd[1] * dd[3]), tol, z);
  }
  return cs;
}

template CheckSummary nonlinear_check(const VertexField<ExactScalar>&,
                                      const std::vector<Sq>&, double);
template CheckSummary nonlinear_check(const VertexField<std::complex<double>>&,
                                      const std::vector<Sq>&, double);

// -- boundary values ----------------------------------------------------------

template <class S>
BoundaryValues<S> boundary_values(const Domain& d, const VertexField<S>& H,
                                  const BoundaryArcPair& arcs, const SquareField<S>& F,
                                  const SquareField<S>& G, double tol) {
  BoundaryValues<S> out;
  auto arc_value = [&](const std::vector<Vx>& arc, S& val) {
    if (arc.empty()) return;
    val = H.at(arc.front());
    for (Vx z : arc) {
      S dev = H.at(z) - val;
      double m = magnitude(dev);
      if (m > out.max_arc_dev) out.max_arc_dev = m;
      if (!negligible(dev, tol)) out.constant_on_arcs = false;
    }
  };
  arc_value(arcs.arc_v0u0, out.on_v0u0);
  arc_value(arcs.arc_u0v0, out.on_u0v0);

  auto dbF = dbar_at(F, arcs.v0);
  auto dbG = dbar_at(G, arcs.u0);
  if (dbF && dbG) {
    S m2 = scalar_from_mesh<S>(d.mesh());
    m2 = m2 * m2;
    S i = imag_unit<S>();
    out.closed_form_F = S(4) * i * m2 * G.at(arcs.v0) * (*dbF);
    out.closed_form_G = -(S(4) * i * m2 * F.at(arcs.u0) * (*dbG));
    out.closed_forms_agree = negligible(S(out.closed_form_F - out.closed_form_G), tol);
    out.nonzero = !negligible(out.closed_form_F, tol);
    S diff = out.on_u0v0 - out.on_v0u0;
    if (negligible(S(diff - out.closed_form_F), tol))
      out.fitted_sign = 1;
    else if (negligible(S(diff + out.closed_form_F), tol))
      out.fitted_sign = -1;
  }
  return out;
}

template BoundaryValues<ExactScalar> boundary_values(const Domain&,
                                                     const VertexField<ExactScalar>&,
                                                     const BoundaryArcPair&,
                                                     const SquareField<ExactScalar>&,
                                                     const SquareField<ExactScalar>&,
                                                     double);
template BoundaryValues<std::complex<double>> boundary_values(
    const Domain&, const VertexField<std::complex<double>>&, const BoundaryArcPair&,
    const SquareField<std::complex<double>>&, const SquareField<std::complex<double>>&,
    double);

// -- projection correspondence ------------------------------------------------

template <class S>
S tau_of(SqType t) {
  switch (t) {
    case SqType::B0: return Units<S>::one();
    case SqType::B1: return Units<S>::i();
    case SqType::W0: return Units<S>::lambda();
    default: return Units<S>::lambda_bar();
  }
}

template ExactScalar tau_of<ExactScalar>(SqType);
template std::complex<double> tau_of<std::complex<double>>(SqType);

template <class S>
SholReport sholomorphic_check(const Domain& d, const SquareField<S>& F,
                              const SquareField<S>& G, const VertexField<S>& H,
                              const std::vector<Sq>& excluded, double tol) {
  SholReport rep;
  std::unordered_set<Sq, SqHash> excl(excluded.begin(), excluded.end());
  // Vertex sums on the even sublattice (p even, q odd): the two incident
  // blacks sit above/below, the two incident whites left/right.
  auto F_vert = [&](Vx z) { return F.at_or_zero({z.p, z.q + 1}) + F.at_or_zero({z.p, z.q - 1}); };
  auto G_vert = [&](Vx z) { return G.at_or_zero({z.p + 1, z.q}) + G.at_or_zero({z.p - 1, z.q}); };

  auto note = [&](const S& err, int& bad) {
    double m = magnitude(err);
    if (m > rep.max_err) rep.max_err = m;
    if (!negligible(err, tol)) ++bad;
  };

  for (Sq a : d.squares()) {
    if (excl.count(a)) continue;
    S tau = tau_of<S>(classify_square(a));
    Vx zw0, zw1, zb0, zb1;
    if (is_black(a)) {
      zw0 = {a.n, a.m - 1};
      zw1 = {a.n, a.m + 1};
      zb0 = {a.n - 1, a.m};
      zb1 = {a.n + 1, a.m};
    } else {
      zw0 = {a.n - 1, a.m};
      zw1 = {a.n + 1, a.m};
      zb0 = {a.n, a.m - 1};
      zb1 = {a.n, a.m + 1};
    }
    S fa = projection(tau, F_vert(zw0));
    S ga = projection(tau, G_vert(zw0));
    ++rep.projection_checked;
    note(S(fa - projection(tau, F_vert(zw1))), rep.projection_violations);
    note(S(ga - projection(tau, G_vert(zw1))), rep.projection_violations);

    if (H.defined(zb0) && H.defined(zb1)) {
      S dz = step_vector<S>(d.mesh(), zb1.p - zb0.p, zb1.q - zb0.q);
      ++rep.increment_checked;
      note(S(H.at(zb1) - H.at(zb0) - fa * ga * dz), rep.increment_violations);
    }
  }
  return rep;
}

template SholReport sholomorphic_check(const Domain&, const SquareField<ExactScalar>&,
                                       const SquareField<ExactScalar>&,
                                       const VertexField<ExactScalar>&,
                                       const std::vector<Sq>&, double);
template SholReport sholomorphic_check(const Domain&,
                                       const SquareField<std::complex<double>>&,
                                       const SquareField<std::complex<double>>&,
                                       const VertexField<std::complex<double>>&,
                                       const std::vector<Sq>&, double);

}  // namespace dimerlab
