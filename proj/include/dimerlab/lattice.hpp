#pragma once

// Integer model of the rotated checkerboard lattice.
//
// Squares sit at centers (delta/sqrt 2)*(n,m) with n+m even; they are black
// when n,m are both even and white when both odd.  Edge-adjacent squares
// differ by (+-1,+-1).  Square corners are the lattice points (p,q) with
// p+q odd; the four corners of square (n,m) are (n+-1,m), (n,m+-1).
//
// The unrotated "cell" frame used by generators and the grid oracle maps
// cell (x,y) to square (x-y, x+y) (plus an anchor offset); cells are unit
// squares of side delta with ordinary 4-adjacency.

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

namespace dimerlab {

struct Sq {
  int n = 0, m = 0;
  bool operator==(const Sq&) const = default;
  auto operator<=>(const Sq&) const = default;
};

struct Vx {
  int p = 0, q = 0;
  bool operator==(const Vx&) const = default;
  auto operator<=>(const Vx&) const = default;
};

struct SqHash {
  size_t operator()(const Sq& s) const {
    return std::hash<uint64_t>()((uint64_t(uint32_t(s.n)) << 32) | uint32_t(s.m));
  }
};
struct VxHash {
  size_t operator()(const Vx& v) const {
    return std::hash<uint64_t>()((uint64_t(uint32_t(v.p)) << 32) | uint32_t(v.q));
  }
};

enum class SqType { B0, B1, W0, W1 };

inline bool is_black(Sq s) { return (s.n & 1) == 0; }
inline bool is_white(Sq s) { return (s.n & 1) != 0; }

// Subtype from coordinate parities; throws on n+m odd.
SqType classify_square(Sq s);
const char* type_name(SqType t);

// Cell frame <-> rotated coordinates.
inline Sq cell_to_square(int x, int y, Sq anchor = {0, 0}) {
  return {x - y + anchor.n, x + y + anchor.m};
}
inline std::pair<int, int> square_to_cell(Sq s, Sq anchor = {0, 0}) {
  int n = s.n - anchor.n, m = s.m - anchor.m;
  return {(n + m) / 2, (m - n) / 2};
}
// Cell-frame corner coordinates of a vertex (integer lattice of cell corners).
inline std::pair<int, int> vertex_to_cell_corner(Vx v, Sq anchor = {0, 0}) {
  int p = v.p - anchor.n, q = v.q - anchor.m;
  return {(p + q + 1) / 2, (q - p + 1) / 2};
}
inline Vx cell_corner_to_vertex(int X, int Y, Sq anchor = {0, 0}) {
  return {X - Y + anchor.n, X + Y - 1 + anchor.m};
}

struct Corner {
  Vx vertex;
  bool convex = true;   // interior angle pi/2; false = concave (3 pi/2)
  Sq wedge;             // the square filling the pi/2 wedge
  bool white = false;   // color of the wedge square
};

struct CornerCounts {
  int white_convex = 0, white_concave = 0, black_convex = 0, black_concave = 0;
  int convex() const { return white_convex + black_convex; }
  int concave() const { return white_concave + black_concave; }
};

class Domain {
 public:
  static Domain from_squares(double mesh, std::vector<Sq> squares);
  static Domain from_cells(double mesh, const std::vector<std::pair<int, int>>& cells,
                           Sq anchor = {0, 0});

  double mesh() const { return mesh_; }

  // Interior squares, lexicographic by (n,m).
  const std::vector<Sq>& squares() const { return squares_; }
  const std::vector<Sq>& blacks() const { return blacks_; }
  const std::vector<Sq>& whites() const { return whites_; }
  // Exterior ring: squares sharing an edge with the domain.
  const std::vector<Sq>& boundary_ring() const { return ring_; }
  const std::vector<Sq>& exterior_blacks() const { return ring_blacks_; }
  const std::vector<Sq>& exterior_whites() const { return ring_whites_; }
  // Interior-boundary: interior squares with an exterior edge-neighbor.
  const std::vector<Sq>& interior_boundary() const { return int_boundary_; }

  bool contains(Sq s) const { return sq_index_.count(s) != 0; }
  bool in_closure(Sq s) const { return contains(s) || ring_index_.count(s) != 0; }
  bool on_interior_boundary(Sq s) const { return int_bd_set_.count(s) != 0; }
  int square_index(Sq s) const;        // index into squares(), -1 if absent
  int black_index(Sq s) const;         // index into blacks(), -1 if absent
  int white_index(Sq s) const;

  // Vertices of interior squares, lexicographic.
  const std::vector<Vx>& vertices() const { return vertices_; }
  bool has_vertex(Vx v) const { return vx_index_.count(v) != 0; }
  int vertex_index(Vx v) const;
  // Counter-clockwise boundary cycle (interior on the left); closed walk,
  // first vertex not repeated at the end.
  const std::vector<Vx>& boundary_walk() const { return walk_; }
  bool on_boundary(Vx v) const { return bd_vx_set_.count(v) != 0; }

  const std::vector<Corner>& corners() const { return corners_; }
  CornerCounts corner_counts() const;

  // Edge-adjacent neighbor squares (the <=4 of (n,m)+-(1,1),(1,-1)).
  static std::array<Sq, 4> neighbors(Sq s);
  // The four corners of a square, CCW starting from (n+1,m).
  static std::array<Vx, 4> corners_of(Sq s);
  // The two squares sharing the lattice edge {a,b}; a,b must be adjacent
  // vertices (|dp|=|dq|=1).
  static std::pair<Sq, Sq> edge_squares(Vx a, Vx b);

  int black_count() const { return int(blacks_.size()); }
  int white_count() const { return int(whites_.size()); }
  bool balanced() const { return black_count() == white_count(); }

  // |black| = |white| + 1 and every exterior black square has subtype B1
  // (equivalently all corner squares are B0).
  bool is_odd_temperley() const;

  Domain without(const std::vector<Sq>& removed) const;
  Domain with_mesh(double mesh) const;

  std::string to_json() const;
  static Domain from_json(const std::string& text);

 private:
  void build_derived();

  double mesh_ = 1.0;
  std::vector<Sq> squares_, blacks_, whites_, ring_, ring_blacks_, ring_whites_,
      int_boundary_;
  std::vector<Vx> vertices_, walk_;
  std::vector<Corner> corners_;
  std::unordered_map<Sq, int, SqHash> sq_index_, black_index_, white_index_,
      ring_index_;
  std::unordered_map<Sq, char, SqHash> int_bd_set_;
  std::unordered_map<Vx, int, VxHash> vx_index_;
  std::unordered_map<Vx, char, VxHash> bd_vx_set_;
};

// -- generators ------------------------------------------------------------

// w x h block of cells anchored at cell (0,0) mapped through `anchor`.
Domain build_rectangle(int width, int height, double mesh = 1.0, Sq anchor = {0, 0});

// Odd Temperley domain from a cell set; validates the corner condition.
Domain build_odd_temperley_cells(const std::vector<std::pair<int, int>>& cells,
                                 double mesh = 1.0);
// Odd w x h rectangle (w,h odd) anchored so corners are B0.
Domain build_odd_temperley_rect(int w, int h, double mesh = 1.0);
// Temperley variant: odd Temperley minus one interior-boundary B0 square.
// If `removed` is null the first admissible square is taken.
Domain build_temperley(const Domain& odd, const Sq* removed = nullptr);

// Random simply connected polyomino with `cells` cells (pinch-free growth);
// if `balanced`, rejection-samples until |black| = |white|.
Domain random_polyomino(std::mt19937_64& rng, int cells, bool balanced,
                        double mesh = 1.0);

// Random odd Temperley domain (union of odd rectangles on the even sublattice),
// bounding box at most `max_side` cells.
Domain random_odd_temperley(std::mt19937_64& rng, int max_side, double mesh = 1.0);

// Generator spec JSON -> Domain ({"kind": "rectangle"|"odd_temperley"|
// "temperley"|"polyomino"|"l_shape", ...}).
Domain domain_from_generator_spec(const std::string& json_text);

// -- classification --------------------------------------------------------

struct PiecewiseClass {
  bool black_piecewise = false;  // boundary splits at white corners
  int black_n = 0;               // 2n-black-piecewise
  bool white_piecewise = false;
  int white_m = 0;
};

// Boundary split at white corners into segments; black-piecewise iff each
// segment's exterior black squares carry a single subtype.  Symmetric check
// with colors swapped.
PiecewiseClass classify_piecewise_temperley(const Domain& d);

// -- boundary arcs ---------------------------------------------------------

struct BoundaryArcPair {
  Sq u0, v0;
  // Vertex paths; arc_u0v0 runs CCW from the boundary side of u0 to the
  // boundary side of v0.  Together (plus the two side midpoints) they cover
  // the whole boundary walk.
  std::vector<Vx> arc_u0v0, arc_v0u0;
};

// The unique boundary side of an interior-boundary square with exactly one
// exterior neighbor; error otherwise.
std::pair<Vx, Vx> boundary_side(const Domain& d, Sq s);

BoundaryArcPair boundary_arcs(const Domain& d, Sq u0, Sq v0);

}  // namespace dimerlab
