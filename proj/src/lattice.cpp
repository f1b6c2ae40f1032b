#include "dimerlab/lattice.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace dimerlab {

SqType classify_square(Sq s) {
  if (((s.n + s.m) & 1) != 0)
    throw std::invalid_argument("classify_square: n+m must be even");
  int r = ((s.n + s.m) % 4 + 4) % 4;
  if ((s.n & 1) == 0) return r == 0 ? SqType::B0 : SqType::B1;
  return r == 0 ? SqType::W1 : SqType::W0;
}

const char* type_name(SqType t) {
  switch (t) {
    case SqType::B0: return "B0";
    case SqType::B1: return "B1";
    case SqType::W0: return "W0";
    default: return "W1";
  }
}

std::array<Sq, 4> Domain::neighbors(Sq s) {
  return {Sq{s.n + 1, s.m + 1}, Sq{s.n + 1, s.m - 1}, Sq{s.n - 1, s.m + 1},
          Sq{s.n - 1, s.m - 1}};
}

std::array<Vx, 4> Domain::corners_of(Sq s) {
  // CCW in the embedding (angles 0, 90, 180, 270).
  return {Vx{s.n + 1, s.m}, Vx{s.n, s.m + 1}, Vx{s.n - 1, s.m}, Vx{s.n, s.m - 1}};
}

std::pair<Sq, Sq> Domain::edge_squares(Vx a, Vx b) {
  int dp = b.p - a.p, dq = b.q - a.q;
  if (!(std::abs(dp) == 1 && std::abs(dq) == 1))
    throw std::invalid_argument("edge_squares: not a lattice edge");
  int sp = a.p + b.p, sq_ = a.q + b.q;
  Sq s1{(sp - dq) / 2, (sq_ + dp) / 2};  // left of a->b
  Sq s2{(sp + dq) / 2, (sq_ - dp) / 2};  // right of a->b
  return {s1, s2};
}

Domain Domain::from_squares(double mesh, std::vector<Sq> squares) {
  if (mesh <= 0) throw std::invalid_argument("Domain: mesh must be positive");
  if (squares.empty()) throw std::invalid_argument("Domain: empty square set");
  std::sort(squares.begin(), squares.end());
  squares.erase(std::unique(squares.begin(), squares.end()), squares.end());
  for (Sq s : squares)
    if (((s.n + s.m) & 1) != 0)
      throw std::invalid_argument("Domain: square with odd n+m");
  Domain d;
  d.mesh_ = mesh;
  d.squares_ = std::move(squares);
  d.build_derived();
  return d;
}

Domain Domain::from_cells(double mesh, const std::vector<std::pair<int, int>>& cells,
                          Sq anchor) {
  std::vector<Sq> sqs;
  sqs.reserve(cells.size());
  for (auto [x, y] : cells) sqs.push_back(cell_to_square(x, y, anchor));
  return from_squares(mesh, std::move(sqs));
}

void Domain::build_derived() {
  for (size_t i = 0; i < squares_.size(); ++i) sq_index_[squares_[i]] = int(i);

  // edge connectivity
  {
    std::deque<Sq> bfs{squares_[0]};
    std::unordered_map<Sq, char, SqHash> seen{{squares_[0], 1}};
    while (!bfs.empty()) {
      Sq s = bfs.front();
      bfs.pop_front();
      for (Sq t : neighbors(s))
        if (contains(t) && !seen.count(t)) { seen[t] = 1; bfs.push_back(t); }
    }
    if (seen.size() != squares_.size())
      throw std::invalid_argument("Domain: squares not edge-connected");
  }

  // complement connectivity within a margin-2 bounding box (no holes)
  {
    int nlo = squares_[0].n, nhi = squares_[0].n, mlo = squares_[0].m,
        mhi = squares_[0].m;
    for (Sq s : squares_) {
      nlo = std::min(nlo, s.n); nhi = std::max(nhi, s.n);
      mlo = std::min(mlo, s.m); mhi = std::max(mhi, s.m);
    }
    nlo -= 4; nhi += 4; mlo -= 4; mhi += 4;
    Sq start{nlo, ((nlo + mlo) & 1) ? mlo + 1 : mlo};
    std::deque<Sq> bfs{start};
    std::unordered_map<Sq, char, SqHash> seen{{start, 1}};
    size_t total = 0;
    for (int n = nlo; n <= nhi; ++n)
      for (int m = mlo; m <= mhi; ++m)
        if (((n + m) & 1) == 0 && !contains({n, m})) ++total;
    while (!bfs.empty()) {
      Sq s = bfs.front();
      bfs.pop_front();
      for (Sq t : neighbors(s)) {
        if (t.n < nlo || t.n > nhi || t.m < mlo || t.m > mhi) continue;
        if (contains(t) || seen.count(t)) continue;
        seen[t] = 1;
        bfs.push_back(t);
      }
    }
    if (seen.size() != total)
      throw std::invalid_argument("Domain: complement disconnected (hole)");
  }

  for (Sq s : squares_) {
    (is_black(s) ? blacks_ : whites_).push_back(s);
    bool bd = false;
    for (Sq t : neighbors(s)) {
      if (!contains(t)) {
        bd = true;
        if (!ring_index_.count(t)) { ring_index_[t] = 0; ring_.push_back(t); }
      }
    }
    if (bd) { int_boundary_.push_back(s); int_bd_set_[s] = 1; }
    for (Vx v : corners_of(s))
      if (!vx_index_.count(v)) { vx_index_[v] = 0; vertices_.push_back(v); }
  }
  std::sort(ring_.begin(), ring_.end());
  for (size_t i = 0; i < ring_.size(); ++i) ring_index_[ring_[i]] = int(i);
  for (Sq s : ring_) (is_black(s) ? ring_blacks_ : ring_whites_).push_back(s);
  std::sort(vertices_.begin(), vertices_.end());
  for (size_t i = 0; i < vertices_.size(); ++i) vx_index_[vertices_[i]] = int(i);
  for (size_t i = 0; i < blacks_.size(); ++i) black_index_[blacks_[i]] = int(i);
  for (size_t i = 0; i < whites_.size(); ++i) white_index_[whites_[i]] = int(i);

  // boundary walk: directed boundary edges with the interior on the left
  std::unordered_map<Vx, Vx, VxHash> next;
  size_t nedges = 0;
  for (Sq s : squares_) {
    auto cs = corners_of(s);
    for (int k = 0; k < 4; ++k) {
      Vx a = cs[k], b = cs[(k + 1) % 4];
      Sq across{a.p + b.p - s.n, a.q + b.q - s.m};
      if (contains(across)) continue;
      if (next.count(a))
        throw std::invalid_argument("Domain: pinched boundary vertex");
      next[a] = b;
      ++nedges;
    }
  }
  Vx cur = next.begin()->first;
  for (size_t k = 0; k < nedges; ++k) {
    walk_.push_back(cur);
    bd_vx_set_[cur] = 1;
    auto it = next.find(cur);
    if (it == next.end())
      throw std::logic_error("Domain: broken boundary walk");
    cur = it->second;
  }
  if (cur != walk_.front() || walk_.size() != nedges)
    throw std::invalid_argument("Domain: boundary walk not a single cycle");

  // corners from turning direction of the walk
  size_t W = walk_.size();
  for (size_t k = 0; k < W; ++k) {
    Vx a = walk_[(k + W - 1) % W], b = walk_[k], c = walk_[(k + 1) % W];
    int d1p = b.p - a.p, d1q = b.q - a.q, d2p = c.p - b.p, d2q = c.q - b.q;
    int cross = d1p * d2q - d1q * d2p;
    if (cross == 0) continue;
    // wedge square: incident to both edges; interior for convex, exterior
    // for concave
    auto [l1, r1] = edge_squares(a, b);
    auto [l2, r2] = edge_squares(b, c);
    Sq wedge;
    if (cross > 0) {
      wedge = (l1 == l2 || l1 == r2) ? l1 : r1;  // the common interior square
      if (!contains(wedge)) throw std::logic_error("Domain: convex wedge not interior");
    } else {
      wedge = (r1 == l2 || r1 == r2) ? r1 : l1;
      if (contains(wedge)) throw std::logic_error("Domain: concave wedge not exterior");
    }
    corners_.push_back({b, cross > 0, wedge, is_white(wedge)});
  }
}

int Domain::square_index(Sq s) const {
  auto it = sq_index_.find(s);
  return it == sq_index_.end() ? -1 : it->second;
}
int Domain::black_index(Sq s) const {
  auto it = black_index_.find(s);
  return it == black_index_.end() ? -1 : it->second;
}
int Domain::white_index(Sq s) const {
  auto it = white_index_.find(s);
  return it == white_index_.end() ? -1 : it->second;
}
int Domain::vertex_index(Vx v) const {
  auto it = vx_index_.find(v);
  return it == vx_index_.end() ? -1 : it->second;
}

CornerCounts Domain::corner_counts() const {
  CornerCounts c;
  for (const Corner& k : corners_) {
    if (k.white) (k.convex ? c.white_convex : c.white_concave)++;
    else (k.convex ? c.black_convex : c.black_concave)++;
  }
  return c;
}

bool Domain::is_odd_temperley() const {
  if (black_count() != white_count() + 1) return false;
  for (Sq s : ring_blacks_)
    if (classify_square(s) != SqType::B1) return false;
  return true;
}

Domain Domain::without(const std::vector<Sq>& removed) const {
  std::vector<Sq> sqs;
  for (Sq s : squares_)
    if (std::find(removed.begin(), removed.end(), s) == removed.end())
      sqs.push_back(s);
  return from_squares(mesh_, std::move(sqs));
}

Domain Domain::with_mesh(double mesh) const {
  return from_squares(mesh, squares_);
}

std::string Domain::to_json() const {
  nlohmann::json j;
  j["mesh"] = mesh_;
  auto& arr = j["squares"] = nlohmann::json::array();
  for (Sq s : squares_) arr.push_back({s.n, s.m});
  return j.dump();
}

Domain Domain::from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  std::vector<Sq> sqs;
  for (const auto& e : j.at("squares")) sqs.push_back({e.at(0), e.at(1)});
  return from_squares(j.at("mesh"), std::move(sqs));
}

// -- generators ------------------------------------------------------------

Domain build_rectangle(int width, int height, double mesh, Sq anchor) {
  if (width <= 0 || height <= 0)
    throw std::invalid_argument("build_rectangle: positive dimensions required");
  std::vector<std::pair<int, int>> cells;
  for (int x = 0; x < width; ++x)
    for (int y = 0; y < height; ++y) cells.emplace_back(x, y);
  return Domain::from_cells(mesh, cells, anchor);
}

Domain build_odd_temperley_cells(const std::vector<std::pair<int, int>>& cells,
                                 double mesh) {
  Domain d = Domain::from_cells(mesh, cells);
  if (!d.is_odd_temperley())
    throw std::invalid_argument(
        "build_odd_temperley: corner squares must all be B0 "
        "(every exterior black square B1, one extra black square)");
  return d;
}

Domain build_odd_temperley_rect(int w, int h, double mesh) {
  if (w % 2 == 0 || h % 2 == 0)
    throw std::invalid_argument("build_odd_temperley_rect: odd dimensions required");
  std::vector<std::pair<int, int>> cells;
  for (int x = 0; x < w; ++x)
    for (int y = 0; y < h; ++y) cells.emplace_back(x, y);
  return build_odd_temperley_cells(cells, mesh);
}

Domain build_temperley(const Domain& odd, const Sq* removed) {
  if (!odd.is_odd_temperley())
    throw std::invalid_argument("build_temperley: input is not odd Temperley");
  Sq pick;
  bool found = false;
  if (removed) {
    pick = *removed;
    found = odd.on_interior_boundary(pick) && is_black(pick) &&
            classify_square(pick) == SqType::B0;
  } else {
    // prefer a convex-corner square so the result stays piecewise clean
    for (const Corner& c : odd.corners()) {
      if (c.convex && !c.white && classify_square(c.wedge) == SqType::B0) {
        pick = c.wedge;
        found = true;
        break;
      }
    }
  }
  if (!found)
    throw std::invalid_argument("build_temperley: no admissible B0 square");
  return odd.without({pick});
}

namespace {

bool cell_add_keeps_shape(const std::set<std::pair<int, int>>& cells,
                          std::pair<int, int> c) {
  auto has = [&](int x, int y) { return cells.count({x, y}) != 0; };
  auto [x, y] = c;
  // no pinch: a diagonal contact must come with an orthogonal bridge
  const int dx[4] = {1, 1, -1, -1}, dy[4] = {1, -1, 1, -1};
  for (int k = 0; k < 4; ++k)
    if (has(x + dx[k], y + dy[k]) && !has(x + dx[k], y) && !has(x, y + dy[k]))
      return false;
  // no hole: complement of cells+{c} stays connected in a margin box
  std::set<std::pair<int, int>> all(cells);
  all.insert(c);
  int xlo = c.first, xhi = c.first, ylo = c.second, yhi = c.second;
  for (auto& p : all) {
    xlo = std::min(xlo, p.first); xhi = std::max(xhi, p.first);
    ylo = std::min(ylo, p.second); yhi = std::max(yhi, p.second);
  }
  xlo -= 1; xhi += 1; ylo -= 1; yhi += 1;
  std::deque<std::pair<int, int>> bfs{{xlo, ylo}};
  std::set<std::pair<int, int>> seen{{xlo, ylo}};
  size_t total = 0;
  for (int xx = xlo; xx <= xhi; ++xx)
    for (int yy = ylo; yy <= yhi; ++yy)
      if (!all.count({xx, yy})) ++total;
  while (!bfs.empty()) {
    auto [cx, cy] = bfs.front();
    bfs.pop_front();
    const int ox[4] = {1, -1, 0, 0}, oy[4] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
      int nx = cx + ox[k], ny = cy + oy[k];
      if (nx < xlo || nx > xhi || ny < ylo || ny > yhi) continue;
      if (all.count({nx, ny}) || seen.count({nx, ny})) continue;
      seen.insert({nx, ny});
      bfs.push_back({nx, ny});
    }
  }
  return seen.size() == total;
}

}  // namespace

Domain random_polyomino(std::mt19937_64& rng, int n, bool balanced, double mesh) {
  if (n <= 0) throw std::invalid_argument("random_polyomino: n must be positive");
  for (int attempt = 0; attempt < 10000; ++attempt) {
    std::set<std::pair<int, int>> cells{{0, 0}};
    while (int(cells.size()) < n) {
      std::vector<std::pair<int, int>> frontier;
      const int ox[4] = {1, -1, 0, 0}, oy[4] = {0, 0, 1, -1};
      for (auto& c : cells)
        for (int k = 0; k < 4; ++k) {
          std::pair<int, int> t{c.first + ox[k], c.second + oy[k]};
          if (!cells.count(t)) frontier.push_back(t);
        }
      std::shuffle(frontier.begin(), frontier.end(), rng);
      bool grown = false;
      for (auto& t : frontier)
        if (cell_add_keeps_shape(cells, t)) { cells.insert(t); grown = true; break; }
      if (!grown) break;
    }
    if (int(cells.size()) != n) continue;
    int blk = 0;
    for (auto& c : cells) blk += ((c.first + c.second) & 1) == 0 ? 1 : 0;
    if (balanced && 2 * blk != n) continue;
    return Domain::from_cells(mesh, {cells.begin(), cells.end()});
  }
  throw std::runtime_error("random_polyomino: generation failed");
}

Domain random_odd_temperley(std::mt19937_64& rng, int max_side, double mesh) {
  auto odd_dim = [&](int lo, int hi) {
    std::uniform_int_distribution<int> d(lo / 2, (hi - 1) / 2);
    return 2 * d(rng) + 1;
  };
  auto even_in = [&](int lo, int hi) {
    std::uniform_int_distribution<int> d(lo / 2, hi / 2);
    return 2 * d(rng);
  };
  for (int attempt = 0; attempt < 2000; ++attempt) {
    std::set<std::pair<int, int>> cells;
    int nrect = 1 + int(rng() % 2);
    int w0 = odd_dim(3, std::min(max_side, 9)), h0 = odd_dim(3, std::min(max_side, 9));
    for (int x = 0; x < w0; ++x)
      for (int y = 0; y < h0; ++y) cells.insert({x, y});
    for (int r = 1; r < nrect; ++r) {
      int w = odd_dim(3, std::min(max_side, 7)), h = odd_dim(3, std::min(max_side, 7));
      int ax = even_in(0, std::max(0, w0 - 3)), ay = even_in(0, std::max(0, h0 - 3));
      for (int x = ax; x < ax + w; ++x)
        for (int y = ay; y < ay + h; ++y) cells.insert({x, y});
    }
    int xhi = 0, yhi = 0;
    for (auto& c : cells) { xhi = std::max(xhi, c.first); yhi = std::max(yhi, c.second); }
    if (xhi >= max_side || yhi >= max_side) continue;
    try {
      Domain d = Domain::from_cells(mesh, {cells.begin(), cells.end()});
      if (d.is_odd_temperley()) return d;
    } catch (const std::invalid_argument&) {
    }
  }
  throw std::runtime_error("random_odd_temperley: generation failed");
}

Domain domain_from_generator_spec(const std::string& json_text) {
  auto j = nlohmann::json::parse(json_text);
  std::string kind = j.at("kind");
  double mesh = j.value("mesh", 1.0);
  auto dim = [&](const char* brief, const char* full) -> int {
    if (j.count(brief)) return j.at(brief);
    return j.at(full);
  };
  if (kind == "rectangle") {
    Sq anchor{0, 0};
    if (j.count("anchor")) anchor = {j["anchor"][0], j["anchor"][1]};
    return build_rectangle(dim("w", "width"), dim("h", "height"), mesh, anchor);
  }
  if (kind == "odd_temperley") {
    if (j.count("cells")) {
      std::vector<std::pair<int, int>> cells;
      for (const auto& e : j["cells"]) cells.emplace_back(e.at(0), e.at(1));
      return build_odd_temperley_cells(cells, mesh);
    }
    return build_odd_temperley_rect(dim("w", "width"), dim("h", "height"), mesh);
  }
  if (kind == "temperley") {
    Domain odd = build_odd_temperley_rect(dim("w", "width"), dim("h", "height"), mesh);
    if (j.count("remove")) {
      Sq r{j["remove"][0], j["remove"][1]};
      return build_temperley(odd, &r);
    }
    return build_temperley(odd);
  }
  if (kind == "polyomino") {
    if (j.count("cells")) {
      std::vector<std::pair<int, int>> cells;
      for (const auto& e : j["cells"]) cells.emplace_back(e.at(0), e.at(1));
      return Domain::from_cells(mesh, cells);
    }
    std::mt19937_64 rng(uint64_t(j.value("seed", 1)));
    return random_polyomino(rng, j.at("n"), j.value("balanced", true), mesh);
  }
  if (kind == "l_shape") {
    int n = j.at("n");  // outer side in cells; upper-right quadrant removed
    std::vector<std::pair<int, int>> cells;
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y)
        if (x < n / 2 || y < n / 2) cells.emplace_back(x, y);
    return Domain::from_cells(mesh, cells);
  }
  throw std::invalid_argument("unknown generator kind: " + kind);
}

// -- classification --------------------------------------------------------

namespace {

// Splits the boundary walk at the given corner vertices and checks that the
// exterior squares of color `black_squares` adjacent to each segment carry a
// single subtype.
bool segments_single_subtype(const Domain& d, const std::vector<Vx>& split_at,
                             bool black_squares) {
  const auto& walk = d.boundary_walk();
  size_t W = walk.size();
  std::set<Vx> split(split_at.begin(), split_at.end());
  if (split.empty()) return false;
  // first split index
  size_t start = 0;
  while (start < W && !split.count(walk[start])) ++start;
  std::optional<SqType> seg_type;
  for (size_t k = 0; k <= W; ++k) {
    size_t i = (start + k) % W;
    if (k > 0 && split.count(walk[i])) seg_type.reset();
    if (k == W) break;
    Vx a = walk[i], b = walk[(i + 1) % W];
    auto [l, r] = Domain::edge_squares(a, b);
    Sq ext = d.contains(l) ? r : l;
    if (is_black(ext) != black_squares) continue;
    SqType t = classify_square(ext);
    if (!seg_type) seg_type = t;
    else if (*seg_type != t) return false;
  }
  return true;
}

}  // namespace

PiecewiseClass classify_piecewise_temperley(const Domain& d) {
  PiecewiseClass out;
  CornerCounts c = d.corner_counts();
  // black-piecewise: split at white corners, white counts (n+1, n-1)
  if (c.white_convex == c.white_concave + 2) {
    std::vector<Vx> split;
    for (const Corner& k : d.corners())
      if (k.white) split.push_back(k.vertex);
    if (segments_single_subtype(d, split, /*black_squares=*/true)) {
      out.black_piecewise = true;
      out.black_n = (c.white_convex + c.white_concave) / 2;
    }
  }
  if (c.black_convex == c.black_concave + 2) {
    std::vector<Vx> split;
    for (const Corner& k : d.corners())
      if (!k.white) split.push_back(k.vertex);
    if (segments_single_subtype(d, split, /*black_squares=*/false)) {
      out.white_piecewise = true;
      out.white_m = (c.black_convex + c.black_concave) / 2;
    }
  }
  return out;
}

// -- boundary arcs ---------------------------------------------------------

std::pair<Vx, Vx> boundary_side(const Domain& d, Sq s) {
  if (!d.on_interior_boundary(s))
    throw std::invalid_argument("boundary_side: square not on interior boundary");
  std::vector<std::pair<Vx, Vx>> sides;
  auto cs = Domain::corners_of(s);
  for (int k = 0; k < 4; ++k) {
    Vx a = cs[k], b = cs[(k + 1) % 4];
    Sq across{a.p + b.p - s.n, a.q + b.q - s.m};
    if (!d.contains(across)) sides.emplace_back(a, b);
  }
  if (sides.size() != 1)
    throw std::invalid_argument("boundary_side: square has multiple boundary sides");
  return sides[0];
}

BoundaryArcPair boundary_arcs(const Domain& d, Sq u0, Sq v0) {
  if (!is_black(u0) || !is_white(v0))
    throw std::invalid_argument("boundary_arcs: u0 must be black, v0 white");
  auto su = boundary_side(d, u0);
  auto sv = boundary_side(d, v0);
  std::set<Vx> corner_vx;
  for (const Corner& c : d.corners()) corner_vx.insert(c.vertex);
  for (Vx v : {su.first, su.second, sv.first, sv.second})
    if (corner_vx.count(v))
      throw std::invalid_argument("boundary_arcs: corner-adjacent placement");

  const auto& walk = d.boundary_walk();
  size_t W = walk.size();
  auto edge_at = [&](std::pair<Vx, Vx> side) -> size_t {
    for (size_t i = 0; i < W; ++i) {
      Vx a = walk[i], b = walk[(i + 1) % W];
      if ((a == side.first && b == side.second) ||
          (a == side.second && b == side.first))
        return i;
    }
    throw std::logic_error("boundary_arcs: side edge not on walk");
  };
  size_t iu = edge_at(su), iv = edge_at(sv);
  if (iu == iv) throw std::invalid_argument("boundary_arcs: coincident sides");

  BoundaryArcPair out;
  out.u0 = u0;
  out.v0 = v0;
  for (size_t i = (iu + 1) % W;; i = (i + 1) % W) {
    out.arc_u0v0.push_back(walk[i]);
    if (i == iv) break;
  }
  for (size_t i = (iv + 1) % W;; i = (i + 1) % W) {
    out.arc_v0u0.push_back(walk[i]);
    if (i == iu) break;
  }
  return out;
}

}  // namespace dimerlab
