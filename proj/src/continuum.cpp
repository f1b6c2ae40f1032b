#include "dimerlab/continuum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include "dimerlab/dbar.hpp"
#include "dimerlab/doubledimer.hpp"

namespace dimerlab {

// -- harmonic measure --------------------------------------------------------

double hm_halfplane(Cx z, double x1, double x2) {
  if (!(z.imag() > 0.0))
    throw std::invalid_argument("hm_halfplane: point must be in the open half plane");
  if (x1 == x2) throw std::invalid_argument("hm_halfplane: degenerate arc");
  double v = std::imag(std::log((z - Cx{x2, 0}) / (z - Cx{x1, 0}))) / M_PI;
  return v;
}

StaircaseShape StaircaseShape::unit_square() {
  return {{{0, 0}}, {{0, 0}, {1, 0}, {1, 1}, {0, 1}}};
}

StaircaseShape StaircaseShape::l_shape() {
  return {{{0, 0}, {1, 0}, {0, 1}},
          {{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}}};
}

bool StaircaseShape::contains_cell(int x, int y) const {
  for (auto& c : cells)
    if (c.first == x && c.second == y) return true;
  return false;
}

namespace {

double segment_distance(double px, double py, std::pair<double, double> a,
                        std::pair<double, double> b) {
  double vx = b.first - a.first, vy = b.second - a.second;
  double wx = px - a.first, wy = py - a.second;
  double t = (vx * wx + vy * wy) / (vx * vx + vy * vy);
  t = std::clamp(t, 0.0, 1.0);
  double dx = px - (a.first + t * vx), dy = py - (a.second + t * vy);
  return std::hypot(dx, dy);
}

}  // namespace

double StaircaseShape::boundary_distance(double x, double y) const {
  double best = std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < outline.size(); ++k)
    best = std::min(best, segment_distance(x, y, outline[k],
                                           outline[(k + 1) % outline.size()]));
  return best;
}

double StaircaseShape::perimeter() const {
  double total = 0.0;
  for (size_t k = 0; k < outline.size(); ++k) {
    auto a = outline[k], b = outline[(k + 1) % outline.size()];
    total += std::hypot(b.first - a.first, b.second - a.second);
  }
  return total;
}

double StaircaseShape::arc_parameter(double x, double y) const {
  double best = std::numeric_limits<double>::infinity();
  double best_s = 0.0, run = 0.0;
  for (size_t k = 0; k < outline.size(); ++k) {
    auto a = outline[k], b = outline[(k + 1) % outline.size()];
    double len = std::hypot(b.first - a.first, b.second - a.second);
    double d = segment_distance(x, y, a, b);
    if (d < best) {
      best = d;
      double vx = b.first - a.first, vy = b.second - a.second;
      double t = ((x - a.first) * vx + (y - a.second) * vy) / (len * len);
      best_s = run + std::clamp(t, 0.0, 1.0) * len;
    }
    run += len;
  }
  if (best > 1e-9)
    throw std::invalid_argument("arc_parameter: point not on the boundary");
  return best_s;
}

double GridHarmonicMeasure::at(double x, double y) const {
  double fx = x / h, fy = y / h;
  int i = int(std::floor(fx)), j = int(std::floor(fy));
  i = std::clamp(i, 0, nx - 2);
  j = std::clamp(j, 0, ny - 2);
  double tx = fx - i, ty = fy - j;
  auto v = [&](int a, int b) { return values[size_t(b) * size_t(nx) + size_t(a)]; };
  double v00 = v(i, j), v10 = v(i + 1, j), v01 = v(i, j + 1), v11 = v(i + 1, j + 1);
  if (std::isnan(v00) || std::isnan(v10) || std::isnan(v01) || std::isnan(v11))
    throw std::invalid_argument("GridHarmonicMeasure::at: point outside the grid interior");
  return (1 - tx) * (1 - ty) * v00 + tx * (1 - ty) * v10 + (1 - tx) * ty * v01 +
         tx * ty * v11;
}

double GridHarmonicMeasure::mean_value_defect() const {
  double worst = 0.0;
  for (int j = 1; j + 1 < ny; ++j)
    for (int i = 1; i + 1 < nx; ++i) {
      auto v = [&](int a, int b) { return values[size_t(b) * size_t(nx) + size_t(a)]; };
      double c = v(i, j);
      if (std::isnan(c)) continue;
      double n1 = v(i - 1, j), n2 = v(i + 1, j), n3 = v(i, j - 1), n4 = v(i, j + 1);
      if (std::isnan(n1) || std::isnan(n2) || std::isnan(n3) || std::isnan(n4)) continue;
      worst = std::max(worst, std::abs(c - 0.25 * (n1 + n2 + n3 + n4)));
    }
  return worst;
}

GridHarmonicMeasure hm_grid(const StaircaseShape& shape,
                            std::pair<double, double> split_a,
                            std::pair<double, double> split_b, int cells_per_unit,
                            double tol) {
  int maxx = 0, maxy = 0;
  for (auto& c : shape.cells) {
    maxx = std::max(maxx, c.first + 1);
    maxy = std::max(maxy, c.second + 1);
  }
  const int M = cells_per_unit;
  GridHarmonicMeasure out;
  out.nx = maxx * M + 1;
  out.ny = maxy * M + 1;
  out.h = 1.0 / M;
  const int nx = out.nx, ny = out.ny;

  auto fine_inside = [&](int i, int j) {
    if (i < 0 || j < 0 || i >= maxx * M || j >= maxy * M) return false;
    return shape.contains_cell(i / M, j / M);
  };

  enum : char { OUT, BND, INT };
  std::vector<char> kind(size_t(nx) * size_t(ny), OUT);
  auto K = [&](int i, int j) -> char& { return kind[size_t(j) * size_t(nx) + size_t(i)]; };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      int in = int(fine_inside(i, j)) + int(fine_inside(i - 1, j)) +
               int(fine_inside(i, j - 1)) + int(fine_inside(i - 1, j - 1));
      K(i, j) = in == 4 ? INT : (in > 0 ? BND : OUT);
    }

  out.values.assign(size_t(nx) * size_t(ny),
                    std::numeric_limits<double>::quiet_NaN());
  auto V = [&](int i, int j) -> double& {
    return out.values[size_t(j) * size_t(nx) + size_t(i)];
  };

  // Dirichlet data: 1 on the CCW arc from split_a to split_b, 0 otherwise.
  double sa = shape.arc_parameter(split_a.first, split_a.second);
  double sb = shape.arc_parameter(split_b.first, split_b.second);
  double per = shape.perimeter();
  auto on_hot_arc = [&](double s) {
    double rel = std::fmod(s - sa + per, per);
    double len = std::fmod(sb - sa + per, per);
    return rel > 0.0 && rel < len;
  };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      if (K(i, j) == BND)
        V(i, j) = on_hot_arc(shape.arc_parameter(i * out.h, j * out.h)) ? 1.0 : 0.0;
      else if (K(i, j) == INT)
        V(i, j) = 0.5;
    }

  // red-black SOR
  const double omega = 2.0 / (1.0 + std::sin(M_PI * out.h));
  const int cap = 200000;
  double res = 1.0;
  int it = 0;
  for (; it < cap && res > tol; ++it) {
    for (int color = 0; color < 2; ++color)
      for (int j = 1; j + 1 < ny; ++j)
        for (int i = 1 + ((j + color) & 1); i + 1 < nx; i += 2) {
          if (K(i, j) != INT) continue;
          double m = 0.25 * (V(i - 1, j) + V(i + 1, j) + V(i, j - 1) + V(i, j + 1));
          V(i, j) += omega * (m - V(i, j));
        }
    if ((it & 15) == 15 || it == cap - 1) {
      res = 0.0;
      for (int j = 1; j + 1 < ny; ++j)
        for (int i = 1; i + 1 < nx; ++i) {
          if (K(i, j) != INT) continue;
          double m = 0.25 * (V(i - 1, j) + V(i + 1, j) + V(i, j - 1) + V(i, j + 1));
          res = std::max(res, std::abs(m - V(i, j)));
        }
    }
  }
  if (res > tol) throw std::runtime_error("hm_grid: solver did not converge");
  out.iterations = it;
  out.final_residual = res;
  return out;
}

// -- half-plane closed forms -------------------------------------------------

void HalfPlaneMarks::validate() const {
  if (convex.size() != concave.size() + 2)
    throw std::invalid_argument(
        "HalfPlaneMarks: convex list must be longer by exactly two");
  std::set<double> all(convex.begin(), convex.end());
  all.insert(concave.begin(), concave.end());
  if (all.size() != convex.size() + concave.size())
    throw std::invalid_argument("HalfPlaneMarks: marked points must be distinct");
}

namespace {

// log(z - x) with the branch cut running into the lower half plane: the
// argument is taken in [0, 2 pi).
Cx cut_log(Cx z, double x) {
  Cx d = z - Cx{x, 0.0};
  double a = std::arg(d);
  if (a < 0) a += 2.0 * M_PI;
  return {std::log(std::abs(d)), a};
}

}  // namespace

Cx mark_product(Cx z, const HalfPlaneMarks& marks) {
  Cx half_log{0.0, 0.0};
  for (double x : marks.convex) half_log += 0.5 * cut_log(z, x);
  for (double x : marks.concave) half_log -= 0.5 * cut_log(z, x);
  return std::exp(half_log);
}

Cx eval_s(Cx w, const HalfPlaneMarks& marks) {
  Cx half_log{0.0, 0.0};
  for (double x : marks.convex) half_log -= 0.5 * cut_log(w, x);
  for (double x : marks.concave) half_log += 0.5 * cut_log(w, x);
  return std::exp(half_log);
}

Cx FittedPoleFunction::operator()(Cx z) const {
  return constant * mark_product(z, marks) / (z - Cx{pole, 0.0});
}

FittedPoleFunction make_f_halfplane(double v0, HalfPlaneMarks white_marks) {
  white_marks.validate();
  for (double x : white_marks.convex)
    if (x == v0) throw std::invalid_argument("make_f_halfplane: pole at a marked point");
  for (double x : white_marks.concave)
    if (x == v0) throw std::invalid_argument("make_f_halfplane: pole at a marked point");
  FittedPoleFunction out;
  out.pole = v0;
  out.marks = std::move(white_marks);
  // the constant is real; its magnitude is fitted so the pole residue has
  // unit modulus, matching the normalization lambda/(z - v0) up to the
  // boundary-direction phase absorbed by the conformal map
  out.constant = 1.0 / std::abs(mark_product(Cx{v0, 0.0}, out.marks));
  return out;
}

FittedPoleFunction make_g_halfplane(double u0, HalfPlaneMarks black_marks) {
  black_marks.validate();
  for (double x : black_marks.convex)
    if (x == u0) throw std::invalid_argument("make_g_halfplane: pole at a marked point");
  for (double x : black_marks.concave)
    if (x == u0) throw std::invalid_argument("make_g_halfplane: pole at a marked point");
  FittedPoleFunction out;
  out.pole = u0;
  out.marks = std::move(black_marks);
  // lambda times a real constant, so the boundary values lie on the two
  // diagonal lines; magnitude fitted to a unit-modulus pole residue
  const Cx lambda{std::sqrt(0.5), std::sqrt(0.5)};
  out.constant = lambda / std::abs(mark_product(Cx{u0, 0.0}, out.marks));
  return out;
}

Cx eval_f0(Cx z, Cx w, const HalfPlaneMarks& marks) {
  Cx sw = eval_s(w, marks);
  return mark_product(z, marks) *
         (sw / (z - w) + std::conj(sw) / (z - std::conj(w))) / M_PI;
}

Cx eval_f1(Cx z, Cx w, const HalfPlaneMarks& marks) {
  Cx sw = eval_s(w, marks);
  return mark_product(z, marks) *
         (sw / (z - w) - std::conj(sw) / (z - std::conj(w))) / M_PI;
}

Cx eval_fplus(Cx z, Cx w, const HalfPlaneMarks& marks) {
  return 2.0 / (z - w) * eval_s(w, marks) / eval_s(z, marks);
}

Cx eval_fminus(Cx z, Cx w, const HalfPlaneMarks& marks) {
  return 2.0 / (z - std::conj(w)) * std::conj(eval_s(w, marks)) / eval_s(z, marks);
}

Cx s_product(const std::vector<Cx>& zs, const std::vector<int>& eps,
             const std::vector<int>& alpha, const HalfPlaneMarks& marks) {
  const size_t m = zs.size();
  if (eps.size() != m || alpha.size() != m)
    throw std::invalid_argument("s_product: size mismatch");
  auto s_of = [&](size_t i) {
    Cx s = eval_s(zs[i], marks);
    return eps[i] == 1 ? s : std::conj(s);
  };
  Cx acc{1.0, 0.0};
  for (size_t i = 0; i < m; ++i) {
    if (alpha[i] == int(i)) return Cx{0.0, 0.0};
    acc *= s_of(i) / s_of(size_t(alpha[i]));
  }
  return acc;
}

// -- convergence reporting ---------------------------------------------------

namespace {

struct SideInfo {
  Sq s{0, 0};
  double mx = 0.0, my = 0.0;  // exposed-side midpoint, continuum cell frame
};

// Interior-boundary squares of the wanted subtype with an exposed side, with
// the side midpoint in continuum coordinates (cell size delta = 1/N).
std::vector<SideInfo> subtype_candidates(const Domain& d, SqType want, int N) {
  std::vector<SideInfo> out;
  for (Sq s : d.interior_boundary()) {
    if (classify_square(s) != want) continue;
    auto cs = Domain::corners_of(s);
    for (int k = 0; k < 4; ++k) {
      Vx a = cs[size_t(k)], b = cs[size_t((k + 1) % 4)];
      Sq across{a.p + b.p - s.n, a.q + b.q - s.m};
      if (d.contains(across)) continue;
      auto [ax, ay] = vertex_to_cell_corner(a);
      auto [bx, by] = vertex_to_cell_corner(b);
      out.push_back({s, 0.5 * (ax + bx) / N, 0.5 * (ay + by) / N});
      break;
    }
  }
  return out;
}

bool float_tileable(const Domain& d) {
  if (d.black_count() != d.white_count()) return false;
  KasteleynSystem sys(d, Backend::Float);
  return !sys.singular();
}

}  // namespace

std::string ConvergenceReport::to_csv() const {
  std::ostringstream os;
  os << "mesh,sup_error_Eh,sup_cauchy_F\n";
  for (const auto& r : rows) {
    os << r.mesh << "," << r.sup_err_eh << ",";
    if (r.sup_cauchy_f >= 0) os << r.sup_cauchy_f;
    os << "\n";
  }
  return os.str();
}

ConvergenceReport convergence_report(const StaircaseShape& shape, int base_cells,
                                     int levels, double margin,
                                     int oracle_cells_per_unit) {
  if (levels < 2) throw std::invalid_argument("convergence_report: need >= 2 meshes");
  ConvergenceReport rep;

  int maxx = 0, maxy = 0;
  for (auto& c : shape.cells) {
    maxx = std::max(maxx, c.first + 1);
    maxy = std::max(maxy, c.second + 1);
  }
  // marked-point targets: a black pole on the bottom edge, a white pole on
  // the top edge of the bounding box (both on the outline for staircases
  // anchored at the origin)
  std::pair<double, double> target_u{0.5 * maxx, 0.0};
  std::pair<double, double> target_v{0.5, double(maxy)};

  // fixed interior sample set for the Cauchy column
  std::vector<std::pair<double, double>> ksample;
  for (auto& c : shape.cells)
    ksample.emplace_back(c.first + 0.5, c.second + 0.5);

  std::vector<std::vector<Cx>> fvals(static_cast<size_t>(levels));

  for (int lev = 0; lev < levels; ++lev) {
    const int N = base_cells << lev;
    const double mesh = 1.0 / N;
    std::vector<std::pair<int, int>> cells;
    for (auto& c : shape.cells)
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
          cells.emplace_back(c.first * N + i, c.second * N + j);
    Domain d = Domain::from_cells(mesh, cells);
    if (lev == 0) rep.black_piecewise = classify_piecewise_temperley(d).black_piecewise;

    auto blacks = subtype_candidates(d, SqType::B0, N);
    auto whites = subtype_candidates(d, SqType::W0, N);
    auto by_dist = [](std::vector<SideInfo>& v, std::pair<double, double> t) {
      std::sort(v.begin(), v.end(), [&](const SideInfo& a, const SideInfo& b) {
        return std::hypot(a.mx - t.first, a.my - t.second) <
               std::hypot(b.mx - t.first, b.my - t.second);
      });
    };
    by_dist(blacks, target_u);
    by_dist(whites, target_v);

    bool picked = false;
    SideInfo u0, v0;
    for (size_t bi = 0; bi < blacks.size() && !picked && bi < 8; ++bi)
      for (size_t wi = 0; wi < whites.size() && !picked && wi < 8; ++wi) {
        try {
          if (!float_tileable(d.without({blacks[bi].s, whites[wi].s}))) continue;
          boundary_arcs(d, blacks[bi].s, whites[wi].s);
        } catch (const std::exception&) {
          continue;
        }
        u0 = blacks[bi];
        v0 = whites[wi];
        picked = true;
      }
    if (!picked)
      throw std::runtime_error("convergence_report: no admissible marked pair");

    FloatVertexField eh = expected_height_float(d, u0.s, v0.s);
    GridHarmonicMeasure hm =
        hm_grid(shape, {u0.mx, u0.my}, {v0.mx, v0.my}, oracle_cells_per_unit);

    double sup = 0.0;
    for (size_t k = 0; k < d.vertices().size(); ++k) {
      Vx z = d.vertices()[k];
      if (!eh.defined(z)) continue;
      auto [X, Y] = vertex_to_cell_corner(z);
      double px = double(X) / N, py = double(Y) / N;
      if (shape.boundary_distance(px, py) < margin) continue;
      sup = std::max(sup, std::abs(eh.values[k] - hm.at(px, py)));
    }

    // pole field samples for the Cauchy column
    BlackFieldF F = solve_F_float(d, v0.s, PoleNorm::MeshDelta);
    for (auto& p : ksample) {
      double best = std::numeric_limits<double>::infinity();
      Cx val{0, 0};
      for (size_t i = 0; i < d.blacks().size(); ++i) {
        Sq s = d.blacks()[i];
        if (classify_square(s) != SqType::B0) continue;
        auto [cx, cy] = square_to_cell(s);
        double dd = std::hypot((cx + 0.5) / N - p.first, (cy + 0.5) / N - p.second);
        if (dd < best) {
          best = dd;
          val = F.interior[i];
        }
      }
      fvals[size_t(lev)].push_back(val);
    }

    rep.rows.push_back({mesh, N, sup, -1.0});
  }

  for (int lev = 0; lev + 1 < levels; ++lev) {
    double sup = 0.0;
    for (size_t k = 0; k < fvals[size_t(lev)].size(); ++k)
      sup = std::max(sup, std::abs(fvals[size_t(lev)][k] - fvals[size_t(lev) + 1][k]));
    rep.rows[size_t(lev)].sup_cauchy_f = sup;
  }

  rep.eh_decreasing = true;
  for (size_t k = 0; k + 1 < rep.rows.size(); ++k)
    if (!(rep.rows[k + 1].sup_err_eh < rep.rows[k].sup_err_eh))
      rep.eh_decreasing = false;
  rep.cauchy_decreasing = true;
  for (size_t k = 0; k + 2 < rep.rows.size(); ++k)
    if (!(rep.rows[k + 1].sup_cauchy_f < rep.rows[k].sup_cauchy_f))
      rep.cauchy_decreasing = false;
  rep.finest_err = rep.rows.back().sup_err_eh;
  return rep;
}

}  // namespace dimerlab
