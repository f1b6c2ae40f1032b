#pragma once

// Continuum reference objects: harmonic measure (half-plane closed form and a
// grid Laplace oracle on staircase polygons), the half-plane closed forms for
// the pole functions and the two-point kernels, and convergence reporting for
// the discrete pipeline against these references.

#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "dimerlab/lattice.hpp"

namespace dimerlab {

using Cx = std::complex<double>;

// -- harmonic measure --------------------------------------------------------

// hm of the boundary arc (x1, x2) of the upper half plane seen from z,
// (1/pi) Im log((z - x2)/(z - x1)); requires Im z > 0.
double hm_halfplane(Cx z, double x1, double x2);

// Staircase polygon given by its unit footprint cells and its CCW outline.
struct StaircaseShape {
  std::vector<std::pair<int, int>> cells;
  std::vector<std::pair<double, double>> outline;  // CCW corner points

  static StaircaseShape unit_square();
  static StaircaseShape l_shape();  // 2x2 block minus the upper-right quadrant

  bool contains_cell(int x, int y) const;
  // distance from a point to the polygon boundary
  double boundary_distance(double x, double y) const;
  // cumulative CCW arclength of the projection of a boundary point
  double arc_parameter(double x, double y) const;
  double perimeter() const;
};

// Five-point Laplace solve with Dirichlet data 1 on the CCW boundary arc from
// split_a to split_b and 0 on the complementary arc.
struct GridHarmonicMeasure {
  int nx = 0, ny = 0;       // node counts
  double h = 0.0;           // node spacing
  std::vector<double> values;  // row-major nodes; quiet NaN outside
  int iterations = 0;
  double final_residual = 0.0;

  double at(double x, double y) const;  // bilinear interpolation
  // max deviation from the 4-neighbor mean over interior nodes
  double mean_value_defect() const;
};

GridHarmonicMeasure hm_grid(const StaircaseShape& shape,
                            std::pair<double, double> split_a,
                            std::pair<double, double> split_b,
                            int cells_per_unit = 256, double tol = 1e-10);

// -- half-plane closed forms -------------------------------------------------

// Marked points on the real axis; the convex list is longer by exactly two.
struct HalfPlaneMarks {
  std::vector<double> convex;   // n+1 points
  std::vector<double> concave;  // n-1 points
  void validate() const;
};

// Product of (z - x)^(1/2) over convex and (z - x)^(-1/2) over concave marks,
// evaluated as a sum of half-logs with branch cuts into the lower half plane.
Cx mark_product(Cx z, const HalfPlaneMarks& marks);
// s(w): the reciprocal exponent pattern.
Cx eval_s(Cx w, const HalfPlaneMarks& marks);

// Pole functions on the half plane; the overall constant is fitted to the
// pole normalization (lambda/(z - v0), resp. i/(z - u0)) and reported.
struct FittedPoleFunction {
  Cx constant;  // fitted scalar multiplying the bare product
  double pole;
  HalfPlaneMarks marks;
  Cx operator()(Cx z) const;
};
FittedPoleFunction make_f_halfplane(double v0, HalfPlaneMarks white_marks);
FittedPoleFunction make_g_halfplane(double u0, HalfPlaneMarks black_marks);

// Two-point kernels.  f0 has a simple pole of residue 1/pi at z = w; f1
// differs by the sign of the conjugate-pole term.  fplus/fminus follow the
// reduced products normalized so that with no marked points
// fplus(z,w) = 2/(z-w) exactly; hence pi*(f0+f1) == fplus.
Cx eval_f0(Cx z, Cx w, const HalfPlaneMarks& marks);
Cx eval_f1(Cx z, Cx w, const HalfPlaneMarks& marks);
Cx eval_fplus(Cx z, Cx w, const HalfPlaneMarks& marks);
Cx eval_fminus(Cx z, Cx w, const HalfPlaneMarks& marks);

// Numerical contour residue of f(.) at center, trapezoid on a circle.
template <class Fn>
Cx contour_residue(Fn&& f, Cx center, double radius = 0.05, int points = 512) {
  Cx acc{0.0, 0.0};
  for (int k = 0; k < points; ++k) {
    double t = 2.0 * M_PI * k / points;
    Cx dz = radius * Cx{std::cos(t), std::sin(t)};
    Cx tangent = radius * Cx{-std::sin(t), std::cos(t)} * (2.0 * M_PI / points);
    acc += f(center + dz) * tangent;
  }
  return acc / Cx{0.0, 2.0 * M_PI};
}

// Product of s-ratio factors over a permutation, each point's s conjugated
// according to its own sign; 1 for derangements, 0 when alpha has a fixed
// point.
Cx s_product(const std::vector<Cx>& zs, const std::vector<int>& eps,
             const std::vector<int>& alpha, const HalfPlaneMarks& marks);

// -- convergence reporting ---------------------------------------------------

struct ConvergenceRow {
  double mesh = 0.0;
  int cells_per_unit = 0;
  double sup_err_eh = 0.0;
  double sup_cauchy_f = -1.0;  // difference to the next finer mesh; -1 on the last row
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  bool eh_decreasing = false;
  bool cauchy_decreasing = false;
  bool black_piecewise = false;  // classification of the coarsest discretization
  double finest_err = 0.0;
  std::string to_csv() const;  // mesh,sup_error_Eh,sup_cauchy_F
};

// Runs the float pipeline at meshes 1/base, 1/(2 base), ... and compares the
// expected height with the grid harmonic measure on the interior compact
// { boundary distance >= margin }; also reports the Cauchy differences of the
// pole field between consecutive meshes on a fixed interior sample set.
ConvergenceReport convergence_report(const StaircaseShape& shape, int base_cells,
                                     int levels = 3, double margin = 0.2,
                                     int oracle_cells_per_unit = 256);

}  // namespace dimerlab
