#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "dimerlab/doubledimer.hpp"
#include "dimerlab/kasteleyn.hpp"
#include "dimerlab/lattice.hpp"

using namespace dimerlab;

namespace {

Rational enum_edge_probability(const Domain& d, Sq u, Sq v) {
  auto ts = enumerate_tilings(d);
  long hit = 0;
  for (const Tiling& t : ts)
    if (t.covers(d, u, v)) ++hit;
  Rational p(hit, long(ts.size()));
  p.canonicalize();
  return p;
}

}  // namespace

TEST_CASE("unit weights around one white square") {
  Sq v{1, 1};
  CHECK(kasteleyn_weight<ExactScalar>(v, {2, 2}) == ExactScalar::one());
  CHECK(kasteleyn_weight<ExactScalar>(v, {0, 0}) == -ExactScalar::one());
  CHECK(kasteleyn_weight<ExactScalar>(v, {2, 0}) == -ExactScalar::i());
  CHECK(kasteleyn_weight<ExactScalar>(v, {0, 2}) == ExactScalar::i());
  CHECK_THROWS_AS(kasteleyn_weight<ExactScalar>(v, {3, 3}), std::invalid_argument);
  // around the 4-cycle through vertex (1,2), conjugating every other edge
  // along the cycle, the product of weights is -1
  ExactScalar prod = kasteleyn_weight<ExactScalar>(v, {2, 2}) *
                     kasteleyn_weight<ExactScalar>({1, 3}, {2, 2}).conj() *
                     kasteleyn_weight<ExactScalar>({1, 3}, {0, 2}) *
                     kasteleyn_weight<ExactScalar>(v, {0, 2}).conj();
  CHECK(prod == -ExactScalar::one());
}

TEST_CASE("determinant counts tilings on fixed rectangles") {
  const int counts[][3] = {{2, 2, 2}, {2, 3, 3}, {2, 4, 5}, {4, 4, 36}};
  for (auto& c : counts) {
    Domain d = build_rectangle(c[0], c[1]);
    KasteleynSystem sys(d, Backend::Exact);
    auto tc = sys.count_tilings();
    CHECK(tc.is_exact);
    CHECK(tc.count == c[2]);
    CHECK(enumerate_tilings(d).size() == size_t(c[2]));
    KasteleynSystem fys(d, Backend::Float);
    auto fc = fys.count_tilings();
    CHECK(fc.count == c[2]);
  }
}

TEST_CASE("determinant equals enumeration on random small domains") {
  std::mt19937_64 rng(101);
  int done = 0;
  while (done < 50) {
    Domain d = random_polyomino(rng, 4 + 2 * int(rng() % 5), true);
    auto ts = enumerate_tilings(d);
    KasteleynSystem sys(d, Backend::Exact);
    auto tc = sys.count_tilings();
    CHECK(tc.count == long(ts.size()));
    if (!ts.empty()) ++done;
  }
}

TEST_CASE("inverse is exact") {
  Domain d = build_rectangle(4, 4);
  KasteleynSystem sys(d, Backend::Exact);
  const auto& inv = sys.inverse_exact();
  const int n = d.black_count();
  // K * inv = identity, assembled row by row
  for (int r = 0; r < n; ++r) {
    Sq w = d.whites()[size_t(r)];
    for (int c = 0; c < n; ++c) {
      ExactScalar acc = ExactScalar::zero();
      for (Sq u : Domain::neighbors(w)) {
        int bi = d.black_index(u);
        if (bi >= 0) acc += kasteleyn_weight<ExactScalar>(w, u) * inv.at(bi, c);
      }
      CHECK(acc == (r == c ? ExactScalar::one() : ExactScalar::zero()));
    }
  }
}

TEST_CASE("edge probabilities match enumeration frequencies") {
  std::mt19937_64 rng(404);
  int done = 0;
  while (done < 25) {
    Domain d = random_polyomino(rng, 4 + 2 * int(rng() % 5), true);
    auto ts = enumerate_tilings(d);
    if (ts.empty()) continue;
    ++done;
    KasteleynSystem sys(d, Backend::Exact);
    for (Sq w : d.whites())
      for (Sq u : Domain::neighbors(w)) {
        if (d.black_index(u) < 0) continue;
        CHECK(sys.edge_probability_exact(u, w) == enum_edge_probability(d, u, w));
      }
  }
}

TEST_CASE("edge probabilities of one white square sum to one") {
  Domain d = build_rectangle(6, 6);
  KasteleynSystem sys(d, Backend::Exact);
  for (Sq w : d.whites()) {
    Rational total(0);
    for (Sq u : Domain::neighbors(w))
      if (d.black_index(u) >= 0) total += sys.edge_probability_exact(u, w);
    CHECK(total == 1);
  }
  // central edge of 2x2 has probability 1/2
  Domain d2 = build_rectangle(2, 2);
  KasteleynSystem s2(d2, Backend::Exact);
  Sq w = d2.whites()[0];
  int covered = 0;
  for (Sq u : Domain::neighbors(w))
    if (d2.black_index(u) >= 0) {
      CHECK(s2.edge_probability_exact(u, w) == Rational(1, 2));
      ++covered;
    }
  CHECK(covered == 2);
}

TEST_CASE("local statistics match enumeration") {
  Domain d = build_rectangle(4, 4);
  auto ts = enumerate_tilings(d);
  KasteleynSystem sys(d, Backend::Exact);
  std::mt19937_64 rng(9);
  for (int it = 0; it < 12; ++it) {
    // pick 2 disjoint edges at random
    std::vector<std::pair<Sq, Sq>> edges;
    while (edges.size() < 2) {
      Sq w = d.whites()[rng() % d.whites().size()];
      auto nb = Domain::neighbors(w);
      Sq u = nb[rng() % 4];
      if (d.black_index(u) < 0) continue;
      bool clash = false;
      for (auto& [pu, pw] : edges)
        if (pu == u || pw == w) clash = true;
      if (!clash) edges.emplace_back(u, w);
    }
    long hit = 0;
    for (const Tiling& t : ts) {
      bool all = true;
      for (auto& [u, w] : edges)
        if (!t.covers(d, u, w)) all = false;
      if (all) ++hit;
    }
    Rational want(hit, long(ts.size()));
    want.canonicalize();
    CHECK(sys.local_statistic_exact(edges) == want);
  }
}

TEST_CASE("float inverse tracks the exact inverse") {
  Domain d = build_rectangle(20, 20);  // 400 squares
  KasteleynSystem sys(d, Backend::Float);
  const auto& inv = sys.inverse_float();
  KasteleynSystem esys(d, Backend::Exact);
  // spot check entries of one column
  Sq v = d.whites()[d.whites().size() / 2];
  auto col = esys.coupling_column_exact(v);
  int wi = d.white_index(v);
  for (int bi = 0; bi < d.black_count(); bi += 17) {
    auto e = col[size_t(bi)].to_complex();
    CHECK(std::abs(inv.at(bi, wi) - e) < 1e-10);
  }
}

TEST_CASE("unbalanced domains are rejected for square-matrix work") {
  Domain d = build_odd_temperley_rect(3, 3);
  KasteleynSystem sys(d, Backend::Exact);
  CHECK(!sys.square());
  auto tc = sys.count_tilings();
  CHECK(!tc.balanced);
  CHECK(tc.count == 0);
  CHECK_THROWS_AS(sys.inverse_exact(), std::domain_error);
}
