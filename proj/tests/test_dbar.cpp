#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "dimerlab/dbar.hpp"
#include "dimerlab/doubledimer.hpp"
#include "dimerlab/lattice.hpp"

using namespace dimerlab;

namespace {

// A deterministic pseudo-random exact scalar with small numerators.
ExactScalar rand_scalar(std::mt19937_64& rng) {
  auto q = [&]() {
    Rational a(long(rng() % 7) - 3, 1 + long(rng() % 4));
    Rational b(long(rng() % 5) - 2, 1 + long(rng() % 3));
    a.canonicalize();
    b.canonicalize();
    return Qr2(a, b);
  };
  return ExactScalar(q(), q());
}

}  // namespace

TEST_CASE("adjacency row evaluates the dbar operator") {
  Domain d = build_rectangle(6, 4);
  std::mt19937_64 rng(31);
  BlackFieldE X{&d, true, {}, {}};
  X.interior.resize(d.blacks().size());
  for (auto& v : X.interior) v = rand_scalar(rng);

  ExactScalar four_delta_lbar = ExactScalar(4) * ExactScalar::lambda_bar();
  for (Sq w : d.whites()) {
    auto db = dbar_at(X, w);
    REQUIRE(db.has_value());
    ExactScalar row = ExactScalar::zero();
    row += X.at(Sq{w.n + 1, w.m + 1});
    row -= X.at(Sq{w.n - 1, w.m - 1});
    row += -ExactScalar::i() * X.at(Sq{w.n + 1, w.m - 1});
    row += ExactScalar::i() * X.at(Sq{w.n - 1, w.m + 1});
    CHECK(row == four_delta_lbar * *db);
  }
}

TEST_CASE("laplacian factors through the first-order operators") {
  // On a field supported on interior blacks (zero ring), 4*d(dbar X) at an
  // inner black square equals the five-point second difference.
  Domain d = build_rectangle(8, 8);
  std::mt19937_64 rng(77);
  BlackFieldE X{&d, true, {}, {}};
  X.interior.resize(d.blacks().size());
  for (auto& v : X.interior) v = rand_scalar(rng);

  WhiteFieldE DB{&d, false, {}, {}};
  DB.interior.resize(d.whites().size());
  for (size_t i = 0; i < d.whites().size(); ++i) {
    auto e = dbar_at(X, d.whites()[i]);
    REQUIRE(e.has_value());
    DB.interior[i] = *e;
  }
  int inner = 0;
  for (Sq s : d.blacks()) {
    auto lap = laplacian_at(X, s);
    if (!lap.has_value()) continue;
    auto dd = d_at(DB, s);
    // d(dbar X) needs all four whites around s to have full dbar stencils;
    // on the interior of the rectangle both evaluations exist
    if (!dd.has_value()) continue;
    ++inner;
    CHECK(*lap == ExactScalar(4) * *dd);
  }
  CHECK(inner > 0);
}

TEST_CASE("pole field F solves its boundary value problem exactly") {
  Domain d = build_rectangle(6, 6);
  auto pr = find_even_pair(d);
  REQUIRE(pr.has_value());
  auto [u0, v0] = *pr;

  BlackFieldE F = solve_F_exact(d, v0, PoleNorm::Mesh1);
  auto hr = check_holomorphic(F, {v0});
  CHECK(hr.exact_zero);
  CHECK(hr.checked == d.white_count() - 1);
  auto pole = dbar_at(F, v0);
  REQUIRE(pole.has_value());
  CHECK(*pole == ExactScalar::lambda());

  // values are real on one black subtype and purely imaginary on the other
  for (size_t i = 0; i < d.blacks().size(); ++i) {
    if (classify_square(d.blacks()[i]) == SqType::B0)
      CHECK(F.interior[i].im.is_zero());
    else
      CHECK(F.interior[i].re.is_zero());
  }
}

TEST_CASE("pole field G solves its boundary value problem exactly") {
  Domain d = build_rectangle(6, 6);
  auto pr = find_even_pair(d);
  REQUIRE(pr.has_value());
  auto [u0, v0] = *pr;

  WhiteFieldE G = solve_G_exact(d, u0, PoleNorm::Mesh1);
  auto hr = check_holomorphic(G, {u0});
  CHECK(hr.exact_zero);
  auto pole = dbar_at(G, u0);
  REQUIRE(pole.has_value());
  CHECK(*pole == ExactScalar::i());

  // values lie on the diagonal lines: lambda*R on one white subtype,
  // conj(lambda)*R on the other
  for (size_t i = 0; i < d.whites().size(); ++i) {
    ExactScalar v = G.interior[i];
    if (classify_square(d.whites()[i]) == SqType::W0)
      CHECK((v * ExactScalar::lambda_bar()).im.is_zero());
    else
      CHECK((v * ExactScalar::lambda()).im.is_zero());
  }
}

TEST_CASE("pole normalizations differ by the mesh squared") {
  Domain d = build_rectangle(4, 4, 0.5);
  auto pr = find_even_pair(d);
  REQUIRE(pr.has_value());
  auto [u0, v0] = *pr;
  BlackFieldE F1 = solve_F_exact(d, v0, PoleNorm::Mesh1);
  BlackFieldE Fd = solve_F_exact(d, v0, PoleNorm::MeshDelta);
  ExactScalar mesh2 = ExactScalar(Rational(1, 4));
  for (size_t i = 0; i < F1.interior.size(); ++i)
    CHECK(F1.interior[i] == Fd.interior[i] * mesh2);
}

TEST_CASE("float solver tracks the exact one") {
  Domain d = build_rectangle(8, 6);
  auto pr = find_even_pair(d);
  REQUIRE(pr.has_value());
  auto [u0, v0] = *pr;
  BlackFieldE Fe = solve_F_exact(d, v0, PoleNorm::Mesh1);
  BlackFieldF Ff = solve_F_float(d, v0, PoleNorm::Mesh1);
  WhiteFieldE Ge = solve_G_exact(d, u0, PoleNorm::Mesh1);
  WhiteFieldF Gf = solve_G_float(d, u0, PoleNorm::Mesh1);
  for (size_t i = 0; i < Fe.interior.size(); ++i)
    CHECK(std::abs(Fe.interior[i].to_complex() - Ff.interior[i]) < 1e-10);
  for (size_t i = 0; i < Ge.interior.size(); ++i)
    CHECK(std::abs(Ge.interior[i].to_complex() - Gf.interior[i]) < 1e-10);
}

TEST_CASE("odd-case F is the subtype indicator on odd Temperley domains") {
  for (int side : {3, 5, 7}) {
    Domain d = build_odd_temperley_rect(side, side);
    auto pr = find_odd_pair(d);
    REQUIRE(pr.has_value());
    auto [u1, u2] = *pr;
    BlackFieldE F = solve_F_odd_exact(d, u1);
    CHECK(F.at(u1) == ExactScalar::one());
    auto hr = check_holomorphic(F);
    CHECK(hr.exact_zero);
    CHECK(hr.checked == d.white_count());
    for (size_t i = 0; i < d.blacks().size(); ++i) {
      ExactScalar want = classify_square(d.blacks()[i]) == SqType::B0
                             ? ExactScalar::one()
                             : ExactScalar::zero();
      CHECK(F.interior[i] == want);
    }
  }
}

TEST_CASE("odd-case G has poles exactly at the marked blacks") {
  Domain d = build_odd_temperley_rect(5, 5);
  auto pr = find_odd_pair(d);
  REQUIRE(pr.has_value());
  auto [u1, u2] = *pr;
  WhiteFieldE G = solve_G_odd_exact(d, u1, u2, PoleNorm::Mesh1);
  auto hr = check_holomorphic(G, {u1, u2});
  CHECK(hr.exact_zero);
  auto p1 = dbar_at(G, u1);
  REQUIRE(p1.has_value());
  CHECK(*p1 == ExactScalar::i());
}

TEST_CASE("full-plane kernel decays away from the pole") {
  KernelField k = kernel_fullplane(1.0, 20);
  auto zp = position(k.v0, 1.0);
  double at10 = 0, at20 = 0;
  for (size_t i = 0; i < k.box->blacks().size(); ++i) {
    double r = std::abs(position(k.box->blacks()[i], 1.0) - zp);
    double a = std::abs(k.F.interior[i]);
    if (std::abs(r - 10) < 0.8) at10 = std::max(at10, a);
    if (std::abs(r - 20) < 0.8) at20 = std::max(at20, a);
  }
  CHECK(at10 > 0);
  CHECK(at20 < at10);
}

TEST_CASE("half-plane kernel vanishes on the mirror row") {
  KernelField k = kernel_halfplane(1.0, 20);
  double maxline = 0, maxall = 0, at10 = 0, at20 = 0;
  auto zp = position(k.v0, 1.0);
  for (size_t i = 0; i < k.box->blacks().size(); ++i) {
    Sq s = k.box->blacks()[i];
    auto [x, y] = square_to_cell(s);
    double a = std::abs(k.F.interior[i]);
    maxall = std::max(maxall, a);
    if (y == -1) maxline = std::max(maxline, a);
    double r = std::abs(position(s, 1.0) - zp);
    if (std::abs(r - 10) < 0.8) at10 = std::max(at10, a);
    if (std::abs(r - 20) < 0.8) at20 = std::max(at20, a);
  }
  CHECK(maxall > 1.0);
  CHECK(maxline < 1e-10);
  CHECK(at20 < at10);
}

TEST_CASE("solutions are linear in the right-hand side") {
  // with two pole columns solved separately, the sum solves the two-pole
  // problem; verified against the odd-case two-pole solver structure by
  // direct residual evaluation
  Domain d = build_rectangle(6, 6);
  auto pr = find_even_pair(d);
  REQUIRE(pr.has_value());
  auto [u0, v0] = *pr;
  Sq v1{0, 0};
  bool found = false;
  for (Sq w : d.whites())
    if (!(w == v0)) { v1 = w; found = true; break; }
  REQUIRE(found);
  BlackFieldE Fa = solve_F_exact(d, v0, PoleNorm::Mesh1);
  BlackFieldE Fb = solve_F_exact(d, v1, PoleNorm::Mesh1);
  BlackFieldE S{&d, true, {}, {}};
  S.interior.resize(Fa.interior.size());
  for (size_t i = 0; i < S.interior.size(); ++i)
    S.interior[i] = Fa.interior[i] + Fb.interior[i];
  for (Sq w : d.whites()) {
    auto db = dbar_at(S, w);
    REQUIRE(db.has_value());
    ExactScalar want = (w == v0 || w == v1) ? ExactScalar::lambda() : ExactScalar::zero();
    CHECK(*db == want);
  }
}
