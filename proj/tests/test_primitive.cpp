#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dimerlab/dbar.hpp"
#include "dimerlab/doubledimer.hpp"
#include "dimerlab/primitive.hpp"

using namespace dimerlab;

namespace {

// the fields keep raw pointers into the domain, so it lives behind a
// stable address
struct Instance {
  std::shared_ptr<Domain> dp;
  Sq u0{0, 0}, v0{0, 0};
  BlackFieldE F;
  WhiteFieldE G;
  BoundaryArcPair arcs;
  PrimitiveResult<ExactScalar> res;
  const Domain& d() const { return *dp; }
};

Instance make_instance(int w, int h) {
  Instance in;
  in.dp = std::make_shared<Domain>(build_rectangle(w, h));
  auto pr = find_even_pair(*in.dp);
  REQUIRE(pr.has_value());
  std::tie(in.u0, in.v0) = *pr;
  in.F = solve_F_exact(*in.dp, in.v0, PoleNorm::Mesh1);
  in.G = solve_G_exact(*in.dp, in.u0, PoleNorm::Mesh1);
  in.arcs = boundary_arcs(*in.dp, in.u0, in.v0);
  Vx z0 = in.arcs.arc_v0u0[in.arcs.arc_v0u0.size() / 2];
  in.res = integrate_primitive(*in.dp, in.F, in.G, {in.u0, in.v0}, z0);
  return in;
}

}  // namespace

TEST_CASE("the product form integrates to a closed real primitive") {
  for (auto [w, h] : {std::pair{4, 4}, {6, 4}, {6, 6}}) {
    Instance in = make_instance(w, h);
    CHECK(in.res.exact_closed);
    CHECK(in.res.exact_real);
    CHECK(in.res.unreached == 0);
    CHECK(in.res.max_loop_residual == 0.0);
    CHECK(in.res.max_imag == 0.0);
    // every vertex carries a value
    for (Vx z : in.d().vertices()) CHECK(in.res.H.defined(z));
  }
}

TEST_CASE("the primitive is constant on each marked boundary arc") {
  Instance in = make_instance(6, 6);
  auto bv = boundary_values(in.d(), in.res.H, in.arcs, in.F, in.G);
  CHECK(bv.constant_on_arcs);
  CHECK(bv.max_arc_dev == 0.0);
  CHECK(bv.nonzero);
  // gauge: zero on the arc containing the integration base point
  CHECK(bv.on_v0u0 == ExactScalar::zero());
}

TEST_CASE("both closed forms give the same boundary jump") {
  for (auto [w, h] : {std::pair{4, 4}, {6, 6}, {8, 6}}) {
    Instance in = make_instance(w, h);
    auto bv = boundary_values(in.d(), in.res.H, in.arcs, in.F, in.G);
    CHECK(bv.closed_forms_agree);
    CHECK(bv.closed_form_F == bv.closed_form_G);
    CHECK(bv.fitted_sign == 1);
    CHECK(bv.on_u0v0 - bv.on_v0u0 == bv.closed_form_F);
    CHECK(!(bv.closed_form_F == ExactScalar::zero()));
  }
}

TEST_CASE("the bilinear increment formula reproduces the leap-frog laplacian") {
  Instance in = make_instance(8, 8);
  auto lf = leapfrog_formula_check(in.res.H, in.F, in.G, {in.u0, in.v0});
  CHECK(lf.checked > 0);
  CHECK(lf.violations == 0);
  CHECK(lf.max_err == 0.0);
}

TEST_CASE("saddle and nonlinear identities hold at every interior vertex") {
  for (auto [w, h] : {std::pair{4, 4}, {8, 8}}) {
    Instance in = make_instance(w, h);
    auto sc = saddle_check(in.res.H, {in.u0, in.v0});
    CHECK(sc.checked > 0);
    CHECK(sc.violations == 0);
    auto nc = nonlinear_check(in.res.H, {in.u0, in.v0});
    CHECK(nc.checked > 0);
    CHECK(nc.violations == 0);
    CHECK(nc.max_err == 0.0);
  }
}

TEST_CASE("corner projections define a single-valued function per square") {
  for (auto [w, h] : {std::pair{4, 4}, {6, 6}, {8, 8}}) {
    Instance in = make_instance(w, h);
    auto sh = sholomorphic_check(in.d(), in.F, in.G, in.res.H, {in.u0, in.v0});
    CHECK(sh.projection_checked > 0);
    CHECK(sh.projection_violations == 0);
    CHECK(sh.increment_checked > 0);
    CHECK(sh.increment_violations == 0);
    CHECK(sh.max_err == 0.0);
  }
}

TEST_CASE("a corrupted primitive is caught by every checker") {
  Instance in = make_instance(8, 8);
  // bump one interior value
  VertexField<ExactScalar> bad = in.res.H;
  Vx mid{0, 0};
  bool found = false;
  for (Vx z : in.d().vertices()) {
    bool interior = true;
    for (Vx b : in.d().boundary_walk())
      if (b == z) interior = false;
    if (interior && std::abs(z.p) <= 1 && std::abs(z.q) <= 2) {
      mid = z;
      found = true;
      break;
    }
  }
  REQUIRE(found);
  size_t k = 0;
  for (; k < in.d().vertices().size(); ++k)
    if (in.d().vertices()[k] == mid) break;
  bad.values[k] += ExactScalar(1);

  auto lf = leapfrog_formula_check(bad, in.F, in.G, {in.u0, in.v0});
  auto nc = nonlinear_check(bad, {in.u0, in.v0});
  auto sh = sholomorphic_check(in.d(), in.F, in.G, bad, {in.u0, in.v0});
  CHECK(lf.violations + nc.violations + sh.increment_violations > 0);
}

TEST_CASE("leap-frog laplacian stencil evaluates where defined") {
  Instance in = make_instance(6, 6);
  int have = 0, miss = 0;
  for (Vx z : in.d().vertices()) {
    auto v = leapfrog_laplacian(in.res.H, z);
    if (v.has_value())
      ++have;
    else
      ++miss;  // stencil leaves the vertex set near the boundary
  }
  CHECK(have > 0);
  CHECK(miss > 0);
  CHECK(have + miss == int(in.d().vertices().size()));
}
