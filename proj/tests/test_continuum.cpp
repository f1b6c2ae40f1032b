#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "dimerlab/continuum.hpp"

using namespace dimerlab;

TEST_CASE("half-plane harmonic measure closed form") {
  CHECK(doctest::Approx(hm_halfplane({0, 1}, -1, 1)) == 0.5);
  CHECK(doctest::Approx(hm_halfplane({0, 2}, -1, 1)) == 2.0 / M_PI * std::atan(0.5));
  // boundary limit: approaching the arc the measure tends to 1
  CHECK(hm_halfplane({0, 1e-6}, -1, 1) > 0.999);
  // approaching the complement it tends to 0
  CHECK(hm_halfplane({3, 1e-6}, -1, 1) < 0.001);
  CHECK_THROWS_AS(hm_halfplane({0, 0}, -1, 1), std::invalid_argument);
}

TEST_CASE("grid harmonic measure oracle on the unit square") {
  auto sq = StaircaseShape::unit_square();
  auto one_side = hm_grid(sq, {1, 0}, {1, 1}, 128);
  CHECK(std::abs(one_side.at(0.5, 0.5) - 0.25) < 1e-6);
  CHECK(one_side.final_residual < 1e-10);
  CHECK(one_side.mean_value_defect() < 1e-9);
  auto two_sides = hm_grid(sq, {1, 0}, {0, 1}, 128);
  CHECK(std::abs(two_sides.at(0.5, 0.5) - 0.5) < 1e-6);
  // maximum principle
  for (double x : {0.2, 0.5, 0.8})
    for (double y : {0.2, 0.5, 0.8}) {
      double v = two_sides.at(x, y);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
}

TEST_CASE("grid oracle agrees with the separable series solution") {
  // hot arc = full bottom side; the exact solution is the classical Fourier
  // sine series for the Laplace problem on the unit square
  auto exact = [](double x, double y) {
    double acc = 0.0;
    for (int n = 1; n < 400; n += 2) {
      double k = n * M_PI;
      acc += 4.0 / k * std::sin(k * x) * std::sinh(k * (1 - y)) / std::sinh(k);
    }
    return acc;
  };
  auto sq = StaircaseShape::unit_square();
  auto grid = hm_grid(sq, {0, 0}, {1, 0}, 128);
  double worst = 0;
  for (double x : {0.3, 0.5, 0.7})
    for (double y : {0.3, 0.5, 0.7})
      worst = std::max(worst, std::abs(grid.at(x, y) - exact(x, y)));
  CHECK(worst < 1e-3);
}

TEST_CASE("pole function boundary conditions alternate at the marks") {
  HalfPlaneMarks marks{{-2.0, 1.0, 4.0}, {0.5}};
  marks.validate();
  auto f = make_f_halfplane(-0.5, marks);
  // sample densely; classify each sample as axis-real or axis-imaginary
  std::vector<double> xs;
  std::vector<double> stops{-2.0, 0.5, 1.0, 4.0};
  for (double x = -6.0; x < 8.0; x += 0.01) xs.push_back(x);
  int flips = 0;
  int prev = -1;
  for (double x : xs) {
    bool near_stop = false;
    for (double s : stops)
      if (std::abs(x - s) < 0.02 || std::abs(x + 0.5) < 0.02) near_stop = true;
    if (near_stop) continue;
    Cx v = f(Cx{x, 0.0});
    int kind;
    if (std::abs(v.imag()) < 1e-12 * (1 + std::abs(v)))
      kind = 0;
    else if (std::abs(v.real()) < 1e-12 * (1 + std::abs(v)))
      kind = 1;
    else
      kind = 2;
    REQUIRE(kind != 2);
    if (prev >= 0 && kind != prev) ++flips;
    prev = kind;
  }
  // the boundary conditions flip at the four marks and nowhere else;
  // the pole at -0.5 keeps the condition of its segment
  CHECK(flips == 4);

  // g lies on the diagonal lines instead
  auto g = make_g_halfplane(-0.5, marks);
  const Cx l{std::sqrt(0.5), std::sqrt(0.5)}, lb{std::sqrt(0.5), -std::sqrt(0.5)};
  for (double x : {-3.0, -1.0, 0.7, 2.0, 5.0}) {
    Cx v = g(Cx{x, 0.0});
    double a = std::abs((lb * v).real()), b = std::abs((l * v).real());
    CHECK(std::min(a, b) < 1e-12 * (1 + std::abs(v)));
  }
}

TEST_CASE("pole function grows like an inverse square root at a concave mark") {
  HalfPlaneMarks marks{{-2.0, 1.0, 4.0}, {0.5}};
  auto f = make_f_halfplane(-3.0, marks);
  // log-log slope of |f| approaching the concave mark from above
  double r1 = 1e-3, r2 = 1e-5;
  double m1 = std::abs(f(Cx{0.5, r1})), m2 = std::abs(f(Cx{0.5, r2}));
  double slope = (std::log(m2) - std::log(m1)) / (std::log(r2) - std::log(r1));
  CHECK(std::abs(slope + 0.5) < 0.05);
  // and stays bounded at a convex mark
  CHECK(std::abs(f(Cx{1.0, 1e-8})) < 10.0);
}

TEST_CASE("two-point kernels: residue, reduction, reconstruction") {
  HalfPlaneMarks marks{{-2.0, 1.0, 4.0}, {0.5}};
  Cx w{0.3, 0.8};
  auto res = contour_residue([&](Cx z) { return eval_f0(z, w, marks); }, w);
  CHECK(std::abs(res - Cx{1.0 / M_PI, 0.0}) < 1e-8);

  // no marked points: the Temperley reduction is exact
  HalfPlaneMarks none{{}, {}};
  Cx z{0.4, 1.3}, v{-0.2, 0.7};
  CHECK(std::abs(eval_fplus(z, v, none) - 2.0 / (z - v)) < 1e-12);
  CHECK(std::abs(eval_fminus(z, v, none) - 2.0 / (z - std::conj(v))) < 1e-12);

  // f0 +- f1 reconstruct the reduced kernels up to the documented pi
  CHECK(std::abs(M_PI * (eval_f0(z, v, marks) + eval_f1(z, v, marks)) -
                 eval_fplus(z, v, marks)) < 1e-12);
  CHECK(std::abs(M_PI * (eval_f0(z, v, marks) - eval_f1(z, v, marks)) -
                 eval_fminus(z, v, marks)) < 1e-12);
}

TEST_CASE("s-ratio products telescope over permutations") {
  std::mt19937_64 rng(17);
  int checked = 0;
  for (int it = 0; it < 100; ++it) {
    // half-integer vs quarter-integer grids keep the marks distinct
    HalfPlaneMarks marks{{double(rng() % 9) - 6.5, 2.5, 5.5},
                         {double(rng() % 3) - 1.25}};
    marks.validate();
    int m = 2 + int(rng() % 5);
    std::vector<Cx> zs;
    std::vector<int> eps, alpha(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) {
      zs.push_back(Cx{double(rng() % 100) / 20 - 2.5, 0.3 + double(rng() % 100) / 50});
      eps.push_back(rng() % 2 ? 1 : -1);
      alpha[size_t(i)] = i;
    }
    std::shuffle(alpha.begin(), alpha.end(), rng);
    bool fixed = false;
    for (int i = 0; i < m; ++i)
      if (alpha[size_t(i)] == i) fixed = true;
    Cx p = s_product(zs, eps, alpha, marks);
    if (fixed)
      CHECK(std::abs(p) < 1e-10);
    else
      CHECK(std::abs(p - Cx{1.0, 0.0}) < 1e-10);
    ++checked;
  }
  CHECK(checked >= 90);
}

TEST_CASE("expected height converges to harmonic measure on the unit square") {
  auto rep = convergence_report(StaircaseShape::unit_square(), 20, 3, 0.2, 128);
  REQUIRE(rep.rows.size() == 3);
  CHECK(rep.black_piecewise);
  CHECK(rep.eh_decreasing);
  CHECK(rep.finest_err <= 0.05);
  CHECK(rep.cauchy_decreasing);
  CHECK(rep.rows[0].sup_cauchy_f > rep.rows[1].sup_cauchy_f);
  // CSV round structure
  auto csv = rep.to_csv();
  CHECK(csv.find("mesh,sup_error_Eh,sup_cauchy_F") == 0);
}

TEST_CASE("expected height converges on the l-shaped polygon") {
  auto rep = convergence_report(StaircaseShape::l_shape(), 10, 3, 0.2, 128);
  REQUIRE(rep.rows.size() == 3);
  CHECK(rep.eh_decreasing);
  CHECK(rep.finest_err <= 0.05);
}
