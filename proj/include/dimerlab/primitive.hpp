#pragma once

// The discrete primitive H of Re[F G dz] on domain vertices, its leap-frog
// Laplacian, the bilinear formula for that Laplacian, saddle-freeness and
// the nonlinear vertex identity, boundary arc values, and the projection
// correspondence that rebuilds H on the odd vertex sublattice.

#include <complex>
#include <string>
#include <vector>

#include "dimerlab/dbar.hpp"
#include "dimerlab/lattice.hpp"

namespace dimerlab {

template <class S>
struct VertexField {
  const Domain* dom = nullptr;
  std::vector<S> values;     // by vertex index
  std::vector<char> known;   // reached during integration

  bool defined(Vx v) const {
    int i = dom->vertex_index(v);
    return i >= 0 && known[size_t(i)];
  }
  const S& at(Vx v) const {
    int i = dom->vertex_index(v);
    if (i < 0 || !known[size_t(i)])
      throw std::invalid_argument("VertexField: value not defined at vertex");
    return values[size_t(i)];
  }
  std::string to_csv() const;  // p,q,value
};

template <class S>
struct PrimitiveResult {
  VertexField<S> H;
  bool exact_closed = true;     // all co-tree edge residuals identically zero
  double max_loop_residual = 0.0;
  Sq worst_square{0, 0};        // a square bordering the worst residual edge
  bool exact_real = true;       // all increments have zero imaginary part
  double max_imag = 0.0;
  int unreached = 0;
};

// Spanning-tree integration of H(z')-H(z) = (z'-z) F(u) G(v) over all square
// edges except those bordering an excluded (pole) square; H(z0) = 0.
template <class S>
PrimitiveResult<S> integrate_primitive(const Domain& d, const SquareField<S>& F,
                                       const SquareField<S>& G,
                                       const std::vector<Sq>& excluded, Vx z0);

// Second difference over the four vertices z + (+-2, +-2), divided by
// 4*mesh^2; disengaged if a stencil vertex is missing.
template <class S>
Evaluated<S> leapfrog_laplacian(const VertexField<S>& H, Vx z);

struct CheckSummary {
  int checked = 0;
  int violations = 0;
  double max_err = 0.0;
  Vx worst{0, 0};
  bool ok() const { return violations == 0; }
};

// Leap-frog Laplacian of H versus the bilinear expression in the first
// derivatives of F and G at the four squares around z; exact equality on the
// exact backend.  Vertices within distance 3 of an excluded square are
// skipped (their H edges do not carry the defining increment).
template <class S>
CheckSummary leapfrog_formula_check(const VertexField<S>& H, const SquareField<S>& F,
                                    const SquareField<S>& G,
                                    const std::vector<Sq>& excluded,
                                    double tol = 0.0);

// Product of the four neighbor differences is <= 0 at every interior vertex.
template <class S>
CheckSummary saddle_check(const VertexField<S>& H, const std::vector<Sq>& excluded,
                          double tol = 0.0);

// (H-H1)(H-H3) + (H-H2)(H-H4) = 0 with z1..z4 the diagonal neighbors in
// cyclic order.
template <class S>
CheckSummary nonlinear_check(const VertexField<S>& H, const std::vector<Sq>& excluded,
                             double tol = 0.0);

template <class S>
struct BoundaryValues {
  S on_v0u0{};           // gauge arc value (0 when z0 lies on that arc)
  S on_u0v0{};
  bool constant_on_arcs = true;
  double max_arc_dev = 0.0;
  S closed_form_F{};     // 4 i mesh^2 G(v0) dbar F(v0)
  S closed_form_G{};     // -4 i mesh^2 F(u0) dbar G(u0)
  bool closed_forms_agree = false;       // exactly equal
  int fitted_sign = 0;   // (on_u0v0 - on_v0u0) == fitted_sign * closed_form_F
  bool nonzero = false;
};

template <class S>
BoundaryValues<S> boundary_values(const Domain& d, const VertexField<S>& H,
                                  const BoundaryArcPair& arcs, const SquareField<S>& F,
                                  const SquareField<S>& G, double tol = 0.0);

// -- projection correspondence ---------------------------------------------

// Direction tau of a square: 1, i, lambda, lambda_bar for B0, B1, W0, W1.
template <class S>
S tau_of(SqType t);

struct SholReport {
  int projection_checked = 0;
  int projection_violations = 0;
  int increment_checked = 0;
  int increment_violations = 0;
  double max_err = 0.0;
  bool ok() const { return projection_violations == 0 && increment_violations == 0; }
};

// Checks, for every interior non-pole square, that the two white-sublattice
// vertex values of F (sum of the two incident black squares) have equal
// tau-projections (same for G with its white neighbors), and that the square
// extensions built from those projections reproduce the H increment between
// the two black-sublattice corners of the square.
template <class S>
SholReport sholomorphic_check(const Domain& d, const SquareField<S>& F,
                              const SquareField<S>& G, const VertexField<S>& H,
                              const std::vector<Sq>& excluded, double tol = 0.0);

}  // namespace dimerlab
