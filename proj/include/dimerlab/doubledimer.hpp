#pragma once

// Tilings, Thurston heights, the brute-force enumeration oracle, the
// double-dimer coupling factorization, expected heights (pipeline and
// oracle), exact determinantal sampling, and superposition decomposition.

#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dimerlab/dbar.hpp"
#include "dimerlab/kasteleyn.hpp"
#include "dimerlab/lattice.hpp"
#include "dimerlab/primitive.hpp"

namespace dimerlab {

struct Tiling {
  // partner[i] = black index matched to white i (domain ordering)
  std::vector<int> partner;

  std::vector<std::pair<Sq, Sq>> dominoes(const Domain& d) const;  // (black, white)
  bool covers(const Domain& d, Sq black, Sq white) const;
  std::string to_json(const Domain& d) const;
};

// All tilings by backtracking; throws if |squares| exceeds the cap.
std::vector<Tiling> enumerate_tilings(const Domain& d, int cap = 24);

// Thurston height in quarter units (stored value = 4h), h(z0) = 0.
// Crossing an edge with the black square on the left adds +1/4, or -3/4 when
// the edge crosses a domino of t; white on the left mirrors the signs.
struct HeightField {
  const Domain* dom = nullptr;
  std::vector<int> quarters;  // by vertex index
  int at(Vx v) const;
};
HeightField height_of_tiling(const Domain& d, const Tiling& t, Vx z0);

// Exact rational field on the vertices of a domain.
struct RationalVertexField {
  const Domain* dom = nullptr;
  std::vector<Rational> values;
  std::vector<char> known;  // defined on vertices shared by both domains
  bool defined(Vx v) const;
  const Rational& at(Vx v) const;
};

// Brute-force E[h1-h2] over all pairs (tiling of d, tiling of d minus
// {u0,v0}), normalized to boundary values 0 on arc (v0u0) and 1 on (u0v0).
RationalVertexField enumerate_double_dimer_expectation(const Domain& d, Sq u0,
                                                       Sq v0, int cap = 24);

// Odd-case oracle: average of h1-h2 over all pairs (tiling of d minus u1,
// tiling of d minus u2), same normalization with the arcs split at u1, u2.
RationalVertexField enumerate_odd_double_dimer_expectation(const Domain& d, Sq u1,
                                                           Sq u2, int cap = 24);

// -- coupling factorization -------------------------------------------------

struct CouplingFactorization {
  ExactScalar constant;           // fitted from the v = v0 column
  bool equal_everywhere = false;  // direct difference == constant*F(u)*G(v)
  ExactScalar expected_constant;  // 1/(4 G(v0)) in mesh-1 normalization
  bool constant_matches = false;
  int checked_pairs = 0;
};

// C_domain - C_{domain minus u0,v0} versus const*F(u)*G(v), exact backend.
CouplingFactorization coupling_dbl(const Domain& d, Sq u0, Sq v0);

// -- expected height --------------------------------------------------------

// Exact pipeline E[h] = H / H|(u0v0), boundary values 0/1.  Values lie in
// Q(sqrt 2); they are rational whenever the oracle applies.
struct ExactVertexField {
  const Domain* dom = nullptr;
  std::vector<Qr2> values;
  std::vector<char> known;  // vertices reachable by the defining increments
  bool defined(Vx v) const;
  const Qr2& at(Vx v) const;
};
ExactVertexField expected_height_exact(const Domain& d, Sq u0, Sq v0);

struct FloatVertexField {
  const Domain* dom = nullptr;
  std::vector<double> values;
  std::vector<char> known;
  std::vector<double> stderrs;  // empty unless Monte Carlo
  bool defined(Vx v) const;
  double at(Vx v) const;
  std::string to_csv() const;  // p,q,value[,stderr]
};
FloatVertexField expected_height_float(const Domain& d, Sq u0, Sq v0);

// -- odd case ---------------------------------------------------------------

struct Theorem1Report {
  bool is_odd_temperley = false;
  int interior_vertices = 0;
  int violations = 0;
  double max_abs_laplacian = 0.0;  // float backend diagnostic
  bool pass() const { return is_odd_temperley && violations == 0; }
};

// Expected height of the odd case via the degenerate F and the two-pole G;
// normalized to 0/1 boundary arcs (u1, u2 play the roles of the arc split).
ExactVertexField expected_height_odd_exact(const Domain& d, Sq u1, Sq u2);

// Asserts the leap-frog Laplacian of the normalized expected height vanishes
// at every interior vertex (exact backend).
Theorem1Report verify_theorem1(const Domain& d, Sq u1, Sq u2);
Theorem1Report verify_theorem1_float(const Domain& d, Sq u1, Sq u2,
                                     double rel_tol = 1e-9);

// Searches an odd Temperley domain for an admissible (u1,u2) pair:
// u1 interior-boundary B0 with tileable complement, u2 a different
// interior-boundary black with tileable complement.
std::optional<std::pair<Sq, Sq>> find_odd_pair(const Domain& d);

// Searches a balanced domain for (u0 black B0, v0 white W0), both single-side
// interior-boundary away from corners, with d minus {u0,v0} tileable.
std::optional<std::pair<Sq, Sq>> find_even_pair(const Domain& d);

// -- sampling ---------------------------------------------------------------

// Exact uniform sample by sequential conditioning in lexicographic white
// order with Schur updates of the inverse.  Falls back to the exact backend
// when the float inverse degenerates.
Tiling sample_tiling(const KasteleynSystem& sys, std::mt19937_64& rng);

FloatVertexField mc_expected_height(const Domain& d, Sq u0, Sq v0, int samples,
                                    uint64_t seed, int batches = 20);

// -- superposition ----------------------------------------------------------

struct DoubleDimerConfig {
  std::vector<std::vector<Sq>> loops;         // closed square cycles, even length
  std::vector<std::pair<Sq, Sq>> double_edges;  // (black, white)
  std::vector<Sq> interface_path;             // open path, empty iff same domain
  std::string to_json() const;
};

DoubleDimerConfig superpose(const Tiling& t1, const Domain& d1, const Tiling& t2,
                            const Domain& d2);

}  // namespace dimerlab
