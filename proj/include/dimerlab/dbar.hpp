#pragma once

// Discrete derivative operators on the two square sublattices, residual
// checks, and the boundary-value solvers producing the pole fields F
// (black squares) and G (white squares), plus plane/half-plane kernels.
//
// Conventions (mesh delta, positions (delta/sqrt2)*(n,m), l = exp(i pi/4)):
//   dbar X(s) = (1/4d) * [ l*(X(s+(1,1))-X(s-(1,1))) + lbar*(X(s+(1,-1))-X(s-(1,-1))) ]
//   d    X(s) = (1/4d) * [ lbar*(X(s+(1,1))-X(s-(1,1))) + l*(X(s+(1,-1))-X(s-(1,-1))) ]
//   lap  X(s) = (1/4d^2) * [ sum of X over s+(+-2,+-2) - 4 X(s) ] = 4*d(dbar X)(s)
// The signed adjacency row at a white square v satisfies
//   row(v) . X = 4*delta*lbar*(dbar X)(v),
// and the same identity holds with colors swapped, so every solver below is
// a unit-right-hand-side solve against the adjacency matrix or its transpose.

#include <complex>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include "dimerlab/exact.hpp"
#include "dimerlab/kasteleyn.hpp"
#include "dimerlab/lattice.hpp"

namespace dimerlab {

// Position of a square / vertex center in the plane, (mesh/sqrt2)*(n,m).
inline std::complex<double> position(Sq s, double mesh) {
  const double c = mesh / std::sqrt(2.0);
  return {c * s.n, c * s.m};
}
inline std::complex<double> position(Vx v, double mesh) {
  const double c = mesh / std::sqrt(2.0);
  return {c * v.p, c * v.q};
}

// Scalar embedding of the (dyadic rational) mesh.
template <class S>
S scalar_from_mesh(double mesh);
template <>
inline std::complex<double> scalar_from_mesh(double mesh) { return {mesh, 0.0}; }
template <>
inline ExactScalar scalar_from_mesh(double mesh) {
  Rational r;
  mpq_set_d(r.get_mpq_t(), mesh);  // exact for dyadic meshes
  return ExactScalar(r);
}

// Function on the black (or white) squares of a domain closure.  Interior
// values are indexed like Domain::blacks()/whites(); closure values on the
// exterior ring default to zero (the solvers' boundary condition).
template <class S>
struct SquareField {
  const Domain* dom = nullptr;
  bool on_black = true;
  std::vector<S> interior;
  std::unordered_map<Sq, S, SqHash> ring_override;

  bool defined(Sq s) const {
    if (is_black(s) != on_black) return false;
    return dom->in_closure(s);
  }
  S at(Sq s) const {
    if (is_black(s) != on_black)
      throw std::invalid_argument("SquareField: wrong square color");
    int i = on_black ? dom->black_index(s) : dom->white_index(s);
    if (i >= 0) return interior[size_t(i)];
    if (!dom->in_closure(s))
      throw std::invalid_argument("SquareField: square outside closure");
    auto it = ring_override.find(s);
    return it == ring_override.end() ? S{} : it->second;
  }
  // Closure lookup that extends by zero outside (used by vertex-based sums
  // whose diagonal squares may be only corner-connected to the domain).
  S at_or_zero(Sq s) const {
    int i = on_black ? dom->black_index(s) : dom->white_index(s);
    if (i >= 0) return interior[size_t(i)];
    auto it = ring_override.find(s);
    return it == ring_override.end() ? S{} : it->second;
  }
  std::string to_csv() const;  // n,m,re,im (float) / n,m,value (exact text)
};

using BlackFieldE = SquareField<ExactScalar>;
using WhiteFieldE = SquareField<ExactScalar>;
using BlackFieldF = SquareField<std::complex<double>>;
using WhiteFieldF = SquareField<std::complex<double>>;

// Result of a stencil evaluation; disengaged when the stencil leaves the
// domain closure.
template <class S>
using Evaluated = std::optional<S>;

// First-order operators: evaluate at a square s of the color opposite to the
// field, using the four diagonal neighbors of s.
template <class S>
Evaluated<S> dbar_at(const SquareField<S>& X, Sq s);
template <class S>
Evaluated<S> d_at(const SquareField<S>& X, Sq s);
// Same-color Laplacian with neighbors s + (+-2, +-2).
template <class S>
Evaluated<S> laplacian_at(const SquareField<S>& X, Sq s);

struct HoloReport {
  double max_residual = 0.0;
  Sq worst{0, 0};
  int checked = 0;
  bool exact_zero = true;  // meaningful for the exact backend only
};

// Max |dbar X| over interior squares of the opposite color, skipping poles.
template <class S>
HoloReport check_holomorphic(const SquareField<S>& X,
                             const std::vector<Sq>& poles = {});

enum class PoleNorm { Mesh1, MeshDelta };

// F: zero on exterior black ring, dbar F = 0 at every interior white except
// v0, dbar F(v0) = lambda (Mesh1) or lambda/delta^2 (MeshDelta).
BlackFieldE solve_F_exact(const Domain& d, Sq v0, PoleNorm norm = PoleNorm::MeshDelta);
BlackFieldF solve_F_float(const Domain& d, Sq v0, PoleNorm norm = PoleNorm::MeshDelta);

// G: zero on exterior white ring, dbar G = 0 at every interior black except
// u0, dbar G(u0) = i (Mesh1) or i/delta^2 (MeshDelta).
WhiteFieldE solve_G_exact(const Domain& d, Sq u0, PoleNorm norm = PoleNorm::MeshDelta);
WhiteFieldF solve_G_float(const Domain& d, Sq u0, PoleNorm norm = PoleNorm::MeshDelta);

// Odd case (one extra black square): F is holomorphic at every interior
// white, zero on the black ring, F(u1) = 1.
BlackFieldE solve_F_odd_exact(const Domain& d, Sq u1);
BlackFieldF solve_F_odd_float(const Domain& d, Sq u1);

// Odd case G: zero on the white ring, holomorphic at every interior black
// except u1 and u2, dbar G(u1) = i (Mesh1) or i/delta^2.
WhiteFieldE solve_G_odd_exact(const Domain& d, Sq u1, Sq u2,
                              PoleNorm norm = PoleNorm::MeshDelta);
WhiteFieldF solve_G_odd_float(const Domain& d, Sq u1, Sq u2,
                              PoleNorm norm = PoleNorm::MeshDelta);

// -- kernels ---------------------------------------------------------------

struct KernelField {
  std::shared_ptr<Domain> box;  // owned here so the field's pointer stays valid
  BlackFieldF F;
  Sq v0{0, 0};
};

// Pole field on a box of ~2R x 2R cells with zero boundary data and
// MeshDelta normalization; approximates the whole-plane kernel near v0.
KernelField kernel_fullplane(double mesh, int radius_cells = 40);

// Two-pole sum (mirror pole across the boundary line) on a box symmetric
// about the line; vanishes on the row of black squares along the line.
KernelField kernel_halfplane(double mesh, int radius_cells = 40);

}  // namespace dimerlab
