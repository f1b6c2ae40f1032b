#include "dimerlab/doubledimer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_set>

#include <json.hpp>

namespace dimerlab {

namespace {

// -- boundary arcs between two marked boundary squares (any colors) ----------

struct MarkedArcs {
  std::vector<Vx> arc_ab;  // CCW from the side of a to the side of b
  std::vector<Vx> arc_ba;
  Vx gauge{0, 0};  // midpoint of arc_ba, where the height is pinned to 0
  Vx probe{0, 0};  // midpoint of arc_ab, where the normalized height is 1
};

// First exposed side (in corner order) of an interior-boundary square; unlike
// boundary_side this tolerates squares with several exposed sides.
std::pair<Vx, Vx> any_exposed_side(const Domain& d, Sq s) {
  auto cs = Domain::corners_of(s);
  for (int k = 0; k < 4; ++k) {
    Vx a = cs[size_t(k)], b = cs[size_t((k + 1) % 4)];
    Sq across{a.p + b.p - s.n, a.q + b.q - s.m};
    if (!d.contains(across)) return {a, b};
  }
  throw std::invalid_argument("any_exposed_side: square not on interior boundary");
}

// True when z stays a vertex after the marked squares are removed, i.e. it is
// a corner of some other domain square.
bool survives_removal(const Domain& d, Vx z, Sq a, Sq b) {
  const Sq around[4] = {{z.p + 1, z.q}, {z.p - 1, z.q}, {z.p, z.q + 1}, {z.p, z.q - 1}};
  for (Sq s : around)
    if (d.contains(s) && !(s == a) && !(s == b)) return true;
  return false;
}

// Arc vertex nearest the midpoint that survives the removal of the marked
// squares (needed for the gauge and probe of the height normalization).
Vx arc_anchor(const Domain& d, const std::vector<Vx>& arc, Sq a, Sq b) {
  size_t mid = arc.size() / 2;
  for (size_t off = 0; off < arc.size(); ++off) {
    for (long sgn : {1L, -1L}) {
      long i = long(mid) + sgn * long(off);
      if (i < 0 || i >= long(arc.size())) continue;
      if (survives_removal(d, arc[size_t(i)], a, b)) return arc[size_t(i)];
    }
  }
  throw std::domain_error("arc_anchor: no usable vertex on the arc");
}

MarkedArcs arcs_between(const Domain& d, Sq a, Sq b) {
  auto sa = any_exposed_side(d, a);
  auto sb = any_exposed_side(d, b);
  const auto& walk = d.boundary_walk();
  size_t W = walk.size();
  auto edge_at = [&](std::pair<Vx, Vx> side) -> size_t {
    for (size_t i = 0; i < W; ++i) {
      Vx x = walk[i], y = walk[(i + 1) % W];
      if ((x == side.first && y == side.second) ||
          (x == side.second && y == side.first))
        return i;
    }
    throw std::logic_error("arcs_between: side edge not on boundary walk");
  };
  size_t ia = edge_at(sa), ib = edge_at(sb);
  if (ia == ib) throw std::invalid_argument("arcs_between: coincident sides");
  MarkedArcs out;
  for (size_t i = (ia + 1) % W;; i = (i + 1) % W) {
    out.arc_ab.push_back(walk[i]);
    if (i == ib) break;
  }
  for (size_t i = (ib + 1) % W;; i = (i + 1) % W) {
    out.arc_ba.push_back(walk[i]);
    if (i == ia) break;
  }
  out.gauge = arc_anchor(d, out.arc_ba, a, b);
  out.probe = arc_anchor(d, out.arc_ab, a, b);
  return out;
}

MarkedArcs even_arcs(const Domain& d, Sq u0, Sq v0) {
  BoundaryArcPair p = boundary_arcs(d, u0, v0);  // validates colors and corners
  MarkedArcs out;
  out.arc_ab = p.arc_u0v0;
  out.arc_ba = p.arc_v0u0;
  out.gauge = arc_anchor(d, out.arc_ba, u0, v0);
  out.probe = arc_anchor(d, out.arc_ab, u0, v0);
  return out;
}

// -- height evaluation plan ---------------------------------------------------

// Precomputed traversal of the vertex graph of a domain so heights of many
// tilings can be read off without rebuilding adjacency.
struct HeightPlan {
  const Domain* dom = nullptr;
  int root = -1;
  struct Step {
    int from = -1, to = -1;
    int base = 0;       // +1 if the left square is black, else -1
    int bi = -1, wi = -1;  // black/white indices of the flanking squares
  };
  std::vector<Step> order;      // spanning tree in fill order
  std::vector<Step> all_edges;  // every edge once, for consistency checks

  HeightPlan(const Domain& d, Vx z0) : dom(&d) {
    root = d.vertex_index(z0);
    if (root < 0) throw std::invalid_argument("height plan: gauge not a vertex");
    std::set<std::pair<Vx, Vx>> seen;
    for (Sq s : d.squares()) {
      auto cs = Domain::corners_of(s);
      for (int k = 0; k < 4; ++k) {
        Vx a = cs[size_t(k)], b = cs[size_t((k + 1) % 4)];
        auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
        if (!seen.insert(key).second) continue;
        Step e;
        e.from = d.vertex_index(key.first);
        e.to = d.vertex_index(key.second);
        auto [sl, sr] = Domain::edge_squares(key.first, key.second);
        e.base = is_black(sl) ? 1 : -1;
        Sq blk = is_black(sl) ? sl : sr;
        Sq wht = is_black(sl) ? sr : sl;
        e.bi = d.black_index(blk);
        e.wi = d.white_index(wht);
        all_edges.push_back(e);
      }
    }
    // breadth-first fill order
    std::vector<std::vector<std::pair<int, int>>> adj(d.vertices().size());
    for (size_t k = 0; k < all_edges.size(); ++k) {
      adj[size_t(all_edges[k].from)].emplace_back(all_edges[k].to, int(k));
      adj[size_t(all_edges[k].to)].emplace_back(all_edges[k].from, int(k));
    }
    std::vector<char> done(d.vertices().size(), 0);
    done[size_t(root)] = 1;
    std::vector<int> bfs{root};
    for (size_t h = 0; h < bfs.size(); ++h) {
      int a = bfs[h];
      for (auto [b, ei] : adj[size_t(a)]) {
        if (done[size_t(b)]) continue;
        done[size_t(b)] = 1;
        Step s = all_edges[size_t(ei)];
        if (s.from != a) {  // orient from -> to along the traversal
          std::swap(s.from, s.to);
          s.base = -s.base;
        }
        order.push_back(s);
        bfs.push_back(b);
      }
    }
    for (char c : done)
      if (!c) throw std::logic_error("height plan: vertex graph disconnected");
  }

  static int step_quarters(const Step& e, const Tiling& t) {
    bool crossed = e.bi >= 0 && e.wi >= 0 && t.partner[size_t(e.wi)] == e.bi;
    return e.base * (crossed ? -3 : 1);
  }

  std::vector<int> run(const Tiling& t, bool check) const {
    std::vector<int> q(dom->vertices().size(), 0);
    for (const Step& e : order) q[size_t(e.to)] = q[size_t(e.from)] + step_quarters(e, t);
    if (check) {
      for (const Step& e : all_edges)
        if (q[size_t(e.to)] - q[size_t(e.from)] != step_quarters(e, t))
          throw std::runtime_error("height function: path-dependent increments");
    }
    return q;
  }
};

bool tileable_float(const Domain& d) {
  if (!d.balanced()) return false;
  KasteleynSystem sys(d, Backend::Float);
  if (sys.singular()) return false;
  return sys.count_tilings().log_abs_det > -0.5;
}

int env_thread_cap() {
  if (const char* s = std::getenv("DIMERLAB_THREADS")) {
    int v = std::atoi(s);
    if (v > 0) return v;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : int(hc);
}

}  // namespace

// -- Tiling -------------------------------------------------------------------

std::vector<std::pair<Sq, Sq>> Tiling::dominoes(const Domain& d) const {
  std::vector<std::pair<Sq, Sq>> out;
  for (size_t i = 0; i < partner.size(); ++i)
    out.emplace_back(d.blacks()[size_t(partner[i])], d.whites()[i]);
  return out;
}

bool Tiling::covers(const Domain& d, Sq black, Sq white) const {
  int bi = d.black_index(black), wi = d.white_index(white);
  if (bi < 0 || wi < 0) return false;
  return partner[size_t(wi)] == bi;
}

std::string Tiling::to_json(const Domain& d) const {
  nlohmann::json j;
  auto& arr = j["dominoes"] = nlohmann::json::array();
  for (auto& [b, w] : dominoes(d))
    arr.push_back({{b.n, b.m}, {w.n, w.m}});
  return j.dump();
}

// -- enumeration --------------------------------------------------------------

std::vector<Tiling> enumerate_tilings(const Domain& d, int cap) {
  if (int(d.squares().size()) > cap)
    throw std::invalid_argument("enumerate_tilings: domain exceeds enumeration cap");
  std::vector<Tiling> out;
  if (!d.balanced()) return out;
  const int nw = d.white_count();
  std::vector<std::vector<int>> adj(static_cast<size_t>(nw));
  for (int j = 0; j < nw; ++j)
    for (Sq u : Domain::neighbors(d.whites()[size_t(j)])) {
      int bi = d.black_index(u);
      if (bi >= 0) adj[size_t(j)].push_back(bi);
    }
  std::vector<int> partner(size_t(nw), -1);
  std::vector<char> used(size_t(d.black_count()), 0);
  auto rec = [&](auto&& self, int j) -> void {
    if (j == nw) {
      Tiling t;
      t.partner = partner;
      out.push_back(std::move(t));
      return;
    }
    for (int bi : adj[size_t(j)]) {
      if (used[size_t(bi)]) continue;
      used[size_t(bi)] = 1;
      partner[size_t(j)] = bi;
      self(self, j + 1);
      used[size_t(bi)] = 0;
    }
    partner[size_t(j)] = -1;
  };
  rec(rec, 0);
  return out;
}

// -- heights ------------------------------------------------------------------

int HeightField::at(Vx v) const {
  int i = dom->vertex_index(v);
  if (i < 0) throw std::invalid_argument("HeightField: not a domain vertex");
  return quarters[size_t(i)];
}

HeightField height_of_tiling(const Domain& d, const Tiling& t, Vx z0) {
  HeightPlan plan(d, z0);
  HeightField out;
  out.dom = &d;
  out.quarters = plan.run(t, /*check=*/true);
  return out;
}

// -- enumeration oracle -------------------------------------------------------

bool RationalVertexField::defined(Vx v) const {
  int i = dom->vertex_index(v);
  return i >= 0 && known[size_t(i)];
}

const Rational& RationalVertexField::at(Vx v) const {
  int i = dom->vertex_index(v);
  if (i < 0 || !known[size_t(i)])
    throw std::invalid_argument("RationalVertexField: value not defined");
  return values[size_t(i)];
}

namespace {

// Average height over all tilings of dd, in units of quarters, as rationals
// indexed by dd's vertices.
std::vector<Rational> average_heights(const Domain& dd, Vx z0, int cap) {
  auto ts = enumerate_tilings(dd, cap);
  if (ts.empty()) throw std::domain_error("enumeration oracle: domain not tileable");
  HeightPlan plan(dd, z0);
  std::vector<long> sums(dd.vertices().size(), 0);
  for (const Tiling& t : ts) {
    auto q = plan.run(t, false);
    for (size_t k = 0; k < q.size(); ++k) sums[k] += q[k];
  }
  std::vector<Rational> avg(sums.size());
  for (size_t k = 0; k < sums.size(); ++k) {
    avg[k] = Rational(sums[k], 4 * long(ts.size()));
    avg[k].canonicalize();
  }
  return avg;
}

RationalVertexField pair_expectation(const Domain& d, const Domain& d1,
                                     const Domain& d2, Vx z0, Vx probe, int cap) {
  auto a1 = average_heights(d1, z0, cap);
  auto a2 = average_heights(d2, z0, cap);
  RationalVertexField out;
  out.dom = &d;
  out.values.assign(d.vertices().size(), Rational(0));
  out.known.assign(d.vertices().size(), 0);
  for (size_t k = 0; k < d.vertices().size(); ++k) {
    Vx z = d.vertices()[k];
    int i1 = d1.vertex_index(z), i2 = d2.vertex_index(z);
    if (i1 < 0 || i2 < 0) continue;
    out.values[k] = a1[size_t(i1)] - a2[size_t(i2)];
    out.known[k] = 1;
  }
  Rational denom = out.at(probe);
  if (sgn(denom) == 0)
    throw std::domain_error("enumeration oracle: zero normalization value");
  for (size_t k = 0; k < out.values.size(); ++k)
    if (out.known[k]) {
      out.values[k] /= denom;
      out.values[k].canonicalize();
    }
  return out;
}

}  // namespace

RationalVertexField enumerate_double_dimer_expectation(const Domain& d, Sq u0, Sq v0,
                                                       int cap) {
  MarkedArcs arcs = even_arcs(d, u0, v0);
  Domain d2 = d.without({u0, v0});
  return pair_expectation(d, d, d2, arcs.gauge, arcs.probe, cap);
}

RationalVertexField enumerate_odd_double_dimer_expectation(const Domain& d, Sq u1,
                                                           Sq u2, int cap) {
  MarkedArcs arcs = arcs_between(d, u1, u2);
  Domain d1 = d.without({u1});
  Domain d2 = d.without({u2});
  return pair_expectation(d, d1, d2, arcs.gauge, arcs.probe, cap);
}

// -- coupling factorization ---------------------------------------------------

CouplingFactorization coupling_dbl(const Domain& d0, Sq u0, Sq v0) {
  // The factorization constant is stated in mesh-1 normalization.
  Domain d = d0.mesh() == 1.0 ? d0 : d0.with_mesh(1.0);
  Domain dp = d.without({u0, v0});
  KasteleynSystem sysA(d, Backend::Exact), sysB(dp, Backend::Exact);
  const auto& CA = sysA.inverse_exact();
  const auto& CB = sysB.inverse_exact();
  BlackFieldE F = solve_F_exact(d, v0, PoleNorm::Mesh1);
  WhiteFieldE G = solve_G_exact(d, u0, PoleNorm::Mesh1);

  CouplingFactorization out;
  out.expected_constant = ExactScalar::one() / (ExactScalar(4) * G.at(v0));
  bool have_fit = false;
  out.equal_everywhere = true;
  for (int bi = 0; bi < d.black_count(); ++bi)
    for (int wi = 0; wi < d.white_count(); ++wi) {
      Sq u = d.blacks()[size_t(bi)], v = d.whites()[size_t(wi)];
      ExactScalar cb = ExactScalar::zero();
      if (u != u0 && v != v0) cb = CB.at(dp.black_index(u), dp.white_index(v));
      ExactScalar diff = CA.at(bi, wi) - cb;
      ExactScalar prod = F.at(u) * G.at(v);
      if (!have_fit && !prod.is_zero()) {
        out.constant = diff / prod;
        have_fit = true;
      }
      if (have_fit) {
        ++out.checked_pairs;
        if (!(diff - out.constant * prod).is_zero()) out.equal_everywhere = false;
      }
    }
  if (!have_fit) throw std::domain_error("coupling_dbl: F*G vanishes identically");
  out.constant_matches = out.constant == out.expected_constant;
  return out;
}

// -- expected height ----------------------------------------------------------

bool ExactVertexField::defined(Vx v) const {
  int i = dom->vertex_index(v);
  return i >= 0 && known[size_t(i)];
}

const Qr2& ExactVertexField::at(Vx v) const {
  int i = dom->vertex_index(v);
  if (i < 0 || !known[size_t(i)])
    throw std::invalid_argument("ExactVertexField: value not defined");
  return values[size_t(i)];
}

bool FloatVertexField::defined(Vx v) const {
  int i = dom->vertex_index(v);
  return i >= 0 && known[size_t(i)];
}

double FloatVertexField::at(Vx v) const {
  int i = dom->vertex_index(v);
  if (i < 0 || !known[size_t(i)])
    throw std::invalid_argument("FloatVertexField: value not defined");
  return values[size_t(i)];
}

std::string FloatVertexField::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << (stderrs.empty() ? "p,q,value\n" : "p,q,value,stderr\n");
  for (size_t k = 0; k < dom->vertices().size(); ++k) {
    os << dom->vertices()[k].p << "," << dom->vertices()[k].q << "," << values[k];
    if (!stderrs.empty()) os << "," << stderrs[k];
    os << "\n";
  }
  return os.str();
}

namespace {

ExactVertexField normalize_exact(const Domain& d, const PrimitiveResult<ExactScalar>& res,
                                 Vx probe) {
  if (!res.exact_closed || !res.exact_real)
    throw std::runtime_error("expected height: primitive integration inconsistent");
  ExactScalar denom = res.H.at(probe);
  if (denom.is_zero())
    throw std::domain_error("expected height: zero normalization value");
  ExactVertexField out;
  out.dom = &d;
  out.values.resize(d.vertices().size());
  out.known = res.H.known;
  for (size_t k = 0; k < d.vertices().size(); ++k) {
    if (!out.known[k]) continue;
    ExactScalar v = res.H.values[k] / denom;
    if (!v.im.is_zero())
      throw std::runtime_error("expected height: non-real normalized value");
    out.values[k] = v.re;
  }
  return out;
}

FloatVertexField normalize_float(const Domain& d,
                                 const PrimitiveResult<std::complex<double>>& res,
                                 Vx probe) {
  std::complex<double> denom = res.H.at(probe);
  if (std::abs(denom) == 0.0)
    throw std::domain_error("expected height: zero normalization value");
  FloatVertexField out;
  out.dom = &d;
  out.values.assign(d.vertices().size(), 0.0);
  out.known = res.H.known;
  for (size_t k = 0; k < d.vertices().size(); ++k)
    if (out.known[k]) out.values[k] = std::real(res.H.values[k] / denom);
  return out;
}

}  // namespace

ExactVertexField expected_height_exact(const Domain& d, Sq u0, Sq v0) {
  MarkedArcs arcs = even_arcs(d, u0, v0);
  BlackFieldE F = solve_F_exact(d, v0, PoleNorm::Mesh1);
  WhiteFieldE G = solve_G_exact(d, u0, PoleNorm::Mesh1);
  auto res = integrate_primitive(d, F, G, {u0, v0}, arcs.gauge);
  return normalize_exact(d, res, arcs.probe);
}

FloatVertexField expected_height_float(const Domain& d, Sq u0, Sq v0) {
  MarkedArcs arcs = even_arcs(d, u0, v0);
  BlackFieldF F = solve_F_float(d, v0, PoleNorm::Mesh1);
  WhiteFieldF G = solve_G_float(d, u0, PoleNorm::Mesh1);
  auto res = integrate_primitive(d, F, G, {u0, v0}, arcs.gauge);
  return normalize_float(d, res, arcs.probe);
}

// -- odd case -----------------------------------------------------------------

ExactVertexField expected_height_odd_exact(const Domain& d, Sq u1, Sq u2) {
  MarkedArcs arcs = arcs_between(d, u1, u2);
  BlackFieldE F = solve_F_odd_exact(d, u1);
  WhiteFieldE G = solve_G_odd_exact(d, u1, u2, PoleNorm::Mesh1);
  auto res = integrate_primitive(d, F, G, {u1, u2}, arcs.gauge);
  return normalize_exact(d, res, arcs.probe);
}

namespace {

FloatVertexField expected_height_odd_float(const Domain& d, Sq u1, Sq u2) {
  MarkedArcs arcs = arcs_between(d, u1, u2);
  BlackFieldF F = solve_F_odd_float(d, u1);
  WhiteFieldF G = solve_G_odd_float(d, u1, u2, PoleNorm::Mesh1);
  auto res = integrate_primitive(d, F, G, {u1, u2}, arcs.gauge);
  return normalize_float(d, res, arcs.probe);
}

template <class Value, class Mag, class Bad>
Theorem1Report leapfrog_scan(const Domain& d, const std::vector<Value>& vals,
                             const std::vector<char>& known, Mag&& mag, Bad&& bad) {
  Theorem1Report rep;
  rep.is_odd_temperley = d.is_odd_temperley();
  for (size_t k = 0; k < d.vertices().size(); ++k) {
    Vx z = d.vertices()[k];
    if (d.on_boundary(z) || !known[k]) continue;
    static const int off[4][2] = {{2, 2}, {-2, 2}, {-2, -2}, {2, -2}};
    bool full = true;
    Value sum{};
    for (auto& o : off) {
      Vx w{z.p + o[0], z.q + o[1]};
      int i = d.vertex_index(w);
      if (i < 0 || !known[size_t(i)]) {
        full = false;
        break;
      }
      sum = sum + vals[size_t(i)];
    }
    if (!full) continue;
    sum = sum - Value(4) * vals[k];
    ++rep.interior_vertices;
    double lap = mag(sum) / (4.0 * d.mesh() * d.mesh());
    if (lap > rep.max_abs_laplacian) rep.max_abs_laplacian = lap;
    if (bad(sum)) ++rep.violations;
  }
  return rep;
}

}  // namespace

Theorem1Report verify_theorem1(const Domain& d, Sq u1, Sq u2) {
  if (d.black_count() != d.white_count() + 1)
    throw std::invalid_argument("verify_theorem1: domain must have one extra black square");
  ExactVertexField eh = expected_height_odd_exact(d, u1, u2);
  return leapfrog_scan(
      d, eh.values, eh.known, [](const Qr2& s) { return std::abs(s.to_double()); },
      [](const Qr2& s) { return !s.is_zero(); });
}

Theorem1Report verify_theorem1_float(const Domain& d, Sq u1, Sq u2, double rel_tol) {
  if (d.black_count() != d.white_count() + 1)
    throw std::invalid_argument("verify_theorem1: domain must have one extra black square");
  FloatVertexField eh = expected_height_odd_float(d, u1, u2);
  double scale = 0.0;
  for (double v : eh.values) scale = std::max(scale, std::abs(v));
  double tol = rel_tol * 8.0 * std::max(scale, 1.0);
  return leapfrog_scan(
      d, eh.values, eh.known, [](double s) { return std::abs(s); },
      [tol](double s) { return std::abs(s) > tol; });
}

// -- marked pair search -------------------------------------------------------

namespace {

// Interior-boundary squares with exactly one exposed side whose endpoints are
// not corner vertices of the domain.
std::vector<Sq> side_candidates(const Domain& d, bool black) {
  std::set<Vx> corner_vx;
  for (const Corner& c : d.corners()) corner_vx.insert(c.vertex);
  std::vector<Sq> out;
  for (Sq s : d.interior_boundary()) {
    if (is_black(s) != black) continue;
    try {
      auto side = boundary_side(d, s);
      if (corner_vx.count(side.first) || corner_vx.count(side.second)) continue;
      out.push_back(s);
    } catch (const std::invalid_argument&) {
      continue;
    }
  }
  return out;
}

long sq_dist(Sq a, Sq b) {
  long dn = a.n - b.n, dm = a.m - b.m;
  return dn * dn + dm * dm;
}

// Removing squares can disconnect the domain; treat that as untileable.
bool complement_tileable(const Domain& d, const std::vector<Sq>& gone) {
  try {
    return tileable_float(d.without(gone));
  } catch (const std::invalid_argument&) {
    return false;
  }
}

}  // namespace

std::optional<std::pair<Sq, Sq>> find_odd_pair(const Domain& d) {
  if (d.black_count() != d.white_count() + 1) return std::nullopt;
  std::vector<Sq> blacks;
  for (Sq s : d.interior_boundary())
    if (is_black(s)) blacks.push_back(s);
  std::vector<Sq> ok1, ok2;
  for (Sq s : blacks) {
    if (!complement_tileable(d, {s})) continue;
    ok2.push_back(s);
    if (classify_square(s) == SqType::B0) ok1.push_back(s);
  }
  std::optional<std::pair<Sq, Sq>> best;
  long best_d = -1;
  for (Sq u1 : ok1)
    for (Sq u2 : ok2) {
      if (u1 == u2) continue;
      long dd = sq_dist(u1, u2);
      if (dd <= best_d) continue;
      try {
        arcs_between(d, u1, u2);  // arcs and anchors must exist
      } catch (const std::exception&) {
        continue;
      }
      best_d = dd;
      best = std::make_pair(u1, u2);
    }
  return best;
}

std::optional<std::pair<Sq, Sq>> find_even_pair(const Domain& d) {
  if (!d.balanced()) return std::nullopt;
  auto blacks = side_candidates(d, true);
  auto whites = side_candidates(d, false);
  std::optional<std::pair<Sq, Sq>> best;
  long best_d = -1;
  for (Sq u0 : blacks) {
    if (classify_square(u0) != SqType::B0) continue;
    for (Sq v0 : whites) {
      if (classify_square(v0) != SqType::W0) continue;
      long dd = sq_dist(u0, v0);
      if (dd <= best_d) continue;
      if (!complement_tileable(d, {u0, v0})) continue;
      try {
        even_arcs(d, u0, v0);  // arcs and anchors must exist
      } catch (const std::exception&) {
        continue;
      }
      best_d = dd;
      best = std::make_pair(u0, v0);
    }
  }
  return best;
}

// -- sampling -----------------------------------------------------------------

namespace {

// Sequential determinantal sampling over one backend's inverse matrix.
template <class S>
std::optional<Tiling> sample_attempt(const KasteleynSystem& sys, Mat<S> C,
                                     std::mt19937_64& rng) {
  const Domain& d = sys.domain();
  const int n = d.white_count();
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Tiling t;
  t.partner.assign(size_t(n), -1);
  for (int j = 0; j < n; ++j) {
    Sq w = d.whites()[size_t(j)];
    int cand[4];
    double prob[4];
    int nc = 0;
    double total = 0.0;
    for (Sq u : Domain::neighbors(w)) {
      int bi = d.black_index(u);
      if (bi < 0) continue;
      double p;
      if constexpr (std::is_same_v<S, ExactScalar>)
        p = std::abs(C.at(bi, j).to_complex());
      else
        p = std::abs(C.at(bi, j));
      cand[nc] = bi;
      prob[nc] = p;
      total += p;
      ++nc;
    }
    double x = U(rng) * total;
    int pick = -1;
    for (int k = 0; k < nc; ++k) {
      x -= prob[k];
      if (x <= 0.0) {
        pick = k;
        break;
      }
    }
    if (pick < 0) pick = nc - 1;
    if (std::abs(total - 1.0) > 0.3 || prob[pick] < 1e-9) return std::nullopt;
    int b = cand[pick];
    t.partner[size_t(j)] = b;
    // condition on the chosen domino: rank-one update of the inverse
    S pivot = C.at(b, j);
    for (int y = j + 1; y < n; ++y) {
      S f = C.at(b, y) / pivot;
      for (int x2 = 0; x2 < n; ++x2) C.at(x2, y) -= C.at(x2, j) * f;
    }
  }
  return t;
}

std::mutex exact_fallback_mutex;

}  // namespace

Tiling sample_tiling(const KasteleynSystem& sys, std::mt19937_64& rng) {
  if (!sys.square() || sys.singular())
    throw std::domain_error("sample_tiling: domain not tileable");
  std::mt19937_64 snapshot = rng;
  auto t = sample_attempt(sys, sys.inverse_float(), rng);
  if (t) return *t;
  // numerical breakdown: rerun the same draws on the exact inverse
  rng = snapshot;
  std::lock_guard<std::mutex> lock(exact_fallback_mutex);
  auto te = sample_attempt(sys, sys.inverse_exact(), rng);
  if (!te) throw std::runtime_error("sample_tiling: exact conditioning failed");
  return *te;
}

FloatVertexField mc_expected_height(const Domain& d, Sq u0, Sq v0, int samples,
                                    uint64_t seed, int batches) {
  if (samples <= 0 || batches <= 0 || samples < batches)
    throw std::invalid_argument("mc_expected_height: bad sample/batch counts");
  MarkedArcs arcs = even_arcs(d, u0, v0);
  Domain dp = d.without({u0, v0});
  KasteleynSystem s1(d, Backend::Float), s2(dp, Backend::Float);
  s1.inverse_float();  // materialize before the workers share them read-only
  s2.inverse_float();
  HeightPlan p1(d, arcs.gauge), p2(dp, arcs.gauge);

  const size_t nv = d.vertices().size();
  std::vector<int> map2(nv, -1);  // d vertex index -> dp vertex index
  for (size_t k = 0; k < nv; ++k) map2[k] = dp.vertex_index(d.vertices()[k]);

  const int per = samples / batches;
  std::vector<std::vector<double>> batch_mean(size_t(batches),
                                              std::vector<double>(nv, 0.0));
  auto worker = [&](int b) {
    std::seed_seq sd{uint32_t(seed), uint32_t(seed >> 32), uint32_t(b)};
    std::mt19937_64 rng(sd);
    std::vector<double>& acc = batch_mean[size_t(b)];
    for (int it = 0; it < per; ++it) {
      Tiling t1 = sample_tiling(s1, rng);
      Tiling t2 = sample_tiling(s2, rng);
      auto q1 = p1.run(t1, false);
      auto q2 = p2.run(t2, false);
      for (size_t k = 0; k < nv; ++k)
        if (map2[k] >= 0) acc[k] += double(q1[k] - q2[size_t(map2[k])]);
    }
    for (double& v : acc) v /= 4.0 * per;
  };
  int workers = std::min(env_thread_cap(), batches);
  std::vector<std::thread> pool;
  std::atomic_int next{0};
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int b = next.fetch_add(1); b < batches; b = next.fetch_add(1)) worker(b);
    });
  for (auto& th : pool) th.join();

  std::vector<double> mean(nv, 0.0), var(nv, 0.0);
  for (int b = 0; b < batches; ++b)
    for (size_t k = 0; k < nv; ++k) mean[k] += batch_mean[size_t(b)][k];
  for (double& v : mean) v /= batches;
  for (int b = 0; b < batches; ++b)
    for (size_t k = 0; k < nv; ++k) {
      double e = batch_mean[size_t(b)][k] - mean[k];
      var[k] += e * e;
    }
  int pi = d.vertex_index(arcs.probe);
  double denom = mean[size_t(pi)];
  if (denom == 0.0)
    throw std::domain_error("mc_expected_height: zero normalization value");

  FloatVertexField out;
  out.dom = &d;
  out.values.assign(nv, 0.0);
  out.known.assign(nv, 0);
  out.stderrs.assign(nv, 0.0);
  for (size_t k = 0; k < nv; ++k) {
    if (map2[k] < 0) continue;
    out.known[k] = 1;
    out.values[k] = mean[k] / denom;
    double sd = batches > 1 ? std::sqrt(var[k] / (batches - 1)) : 0.0;
    out.stderrs[k] = sd / (std::abs(denom) * std::sqrt(double(batches)));
  }
  return out;
}

// -- superposition ------------------------------------------------------------

std::string DoubleDimerConfig::to_json() const {
  nlohmann::json j;
  auto sq = [](Sq s) { return nlohmann::json{s.n, s.m}; };
  auto& jl = j["loops"] = nlohmann::json::array();
  for (const auto& loop : loops) {
    nlohmann::json arr = nlohmann::json::array();
    for (Sq s : loop) arr.push_back(sq(s));
    jl.push_back(arr);
  }
  auto& jd = j["double_edges"] = nlohmann::json::array();
  for (auto& [b, w] : double_edges) jd.push_back({sq(b), sq(w)});
  auto& ji = j["interface"] = nlohmann::json::array();
  for (Sq s : interface_path) ji.push_back(sq(s));
  return j.dump();
}

DoubleDimerConfig superpose(const Tiling& t1, const Domain& d1, const Tiling& t2,
                            const Domain& d2) {
  std::set<Sq> s1(d1.squares().begin(), d1.squares().end());
  std::set<Sq> s2(d2.squares().begin(), d2.squares().end());
  std::vector<Sq> sym;
  std::set_symmetric_difference(s1.begin(), s1.end(), s2.begin(), s2.end(),
                                std::back_inserter(sym));
  if (sym.size() != 0 && sym.size() != 2)
    throw std::invalid_argument("superpose: domains must differ by 0 or 2 squares");

  std::unordered_map<Sq, Sq, SqHash> m1, m2;
  for (auto& [b, w] : t1.dominoes(d1)) {
    m1[b] = w;
    m1[w] = b;
  }
  for (auto& [b, w] : t2.dominoes(d2)) {
    m2[b] = w;
    m2[w] = b;
  }

  DoubleDimerConfig out;
  std::unordered_set<Sq, SqHash> visited;
  auto walk_from = [&](Sq start, bool first_in_m1) -> std::vector<Sq> {
    std::vector<Sq> path{start};
    visited.insert(start);
    bool use1 = first_in_m1;
    Sq cur = start;
    for (;;) {
      auto& m = use1 ? m1 : m2;
      auto it = m.find(cur);
      if (it == m.end()) break;
      Sq nxt = it->second;
      if (!visited.insert(nxt).second) break;  // closed the loop
      path.push_back(nxt);
      cur = nxt;
      use1 = !use1;
    }
    return path;
  };

  // double edges first
  for (auto& [b, w] : t1.dominoes(d1)) {
    auto it = m2.find(b);
    if (it != m2.end() && it->second == w) {
      out.double_edges.emplace_back(b, w);
      visited.insert(b);
      visited.insert(w);
    }
  }
  // open interface (iff the domains differ): starts at a square covered by
  // only one of the two matchings
  for (Sq s : sym) {
    if (visited.count(s)) continue;
    bool in1 = m1.count(s) != 0;
    out.interface_path = walk_from(s, in1);
    break;
  }
  // remaining alternating cycles
  for (Sq s : d1.squares()) {
    if (visited.count(s) || m1.find(s) == m1.end() || m2.find(s) == m2.end()) continue;
    out.loops.push_back(walk_from(s, true));
  }
  return out;
}

}  // namespace dimerlab
