#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <random>
#include <set>

#include "oracles.hpp"
#include "parity_gate/fidelity.hpp"
#include "parity_gate/propagate.hpp"

using namespace parity_gate;
using constants::pi;

TEST_CASE("square geometry has canonical corners and diagonals") {
  const auto g = build_geometry("square", 2.0);
  REQUIRE(g.n_atoms() == 4);
  const Vec3 expected[4] = {{0, 0, 0}, {2, 0, 0}, {2, 2, 0}, {0, 2, 0}};
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < 3; ++k) CHECK(g.positions[i][k] == doctest::Approx(expected[i][k]).epsilon(1e-12));
  CHECK(g.distance_um(0, 2) == doctest::Approx(2.0 * std::sqrt(2.0)));
  CHECK(g.distance_um(1, 3) == doctest::Approx(2.0 * std::sqrt(2.0)));
}

TEST_CASE("tetrahedron and triangles") {
  const auto t = build_geometry("tetrahedron", 3.0);
  for (int i = 0; i < 4; ++i)
    for (int k = i + 1; k < 4; ++k) CHECK(t.distance_um(i, k) == doctest::Approx(3.0).epsilon(1e-12));
  const auto rt = build_geometry("right-triangle", 2.0);
  std::vector<double> d{rt.distance_um(0, 1), rt.distance_um(0, 2), rt.distance_um(1, 2)};
  std::sort(d.begin(), d.end());
  CHECK(d[0] == doctest::Approx(2.0));
  CHECK(d[1] == doctest::Approx(2.0));
  CHECK(d[2] == doctest::Approx(2.0 * std::sqrt(2.0)));
  const auto eq = build_geometry("equilateral-triangle", 2.5);
  CHECK(eq.distance_um(1, 2) == doctest::Approx(2.5));
  for (auto name : {"linear-pair", "equilateral-triangle", "right-triangle", "tetrahedron", "square"}) {
    const auto g = build_geometry(name, 2.0);
    CHECK(g.positions[0] == Vec3{0, 0, 0});
    CHECK(g.positions[1][1] == 0.0);
    double dmin = 1e9;
    for (int i = 0; i < g.n_atoms(); ++i)
      for (int k = i + 1; k < g.n_atoms(); ++k) dmin = std::min(dmin, g.distance_um(i, k));
    CHECK(dmin == doctest::Approx(2.0).epsilon(1e-12));
  }
  CHECK_THROWS(build_geometry("hexagon", 2.0));
  CHECK_THROWS(build_geometry("square", 0.0));
}

TEST_CASE("van der Waals interaction strengths") {
  PhysicalParams p;
  CHECK(std::abs(interaction_at(3.0, p)) / p.omega_max == doctest::Approx(20.58).epsilon(0.01));
  CHECK(interaction_at(2.0, p) / (2 * pi) == doctest::Approx(-2343.75e6).epsilon(1e-12));
  CHECK(std::abs(interaction_at(1e4, p)) < 1e-12 * std::abs(interaction_at(2.0, p)));
  const auto v = pairwise_interaction(build_geometry("right-triangle", 2.0), p);
  CHECK(v.isApprox(v.transpose()));
  CHECK(v(0, 0) == 0.0);
  CHECK(std::abs(v(0, 1)) > std::abs(v(1, 2)));
}

TEST_CASE("parity targets") {
  const auto t2 = build_parity_target(2, pi / 4);
  const cplx em = std::polar(1.0, -pi / 4), ep = std::polar(1.0, pi / 4);
  CHECK(std::abs(t2.phases[0] - em) < 1e-15);
  CHECK(std::abs(t2.phases[1] - ep) < 1e-15);
  CHECK(std::abs(t2.phases[2] - ep) < 1e-15);
  CHECK(std::abs(t2.phases[3] - em) < 1e-15);
  for (cplx z : build_parity_target(3, 0.0).phases) CHECK(std::abs(z - 1.0) < 1e-15);
  const auto t3 = build_parity_target(3, pi / 4);
  for (int mu = 0; mu < 8; ++mu) CHECK(std::abs(t3.phases[mu] - (popcount(mu) % 2 ? ep : em)) < 1e-15);
  const auto a = build_parity_target(3, 0.3), b = build_parity_target(3, 0.3 + pi);
  const cplx ratio = b.phases[0] / a.phases[0];
  for (int mu = 0; mu < 8; ++mu) CHECK(std::abs(b.phases[mu] / a.phases[mu] - ratio) < 1e-12);
  const auto n = build_parity_target(3, 0.3, true);
  CHECK(std::abs(n.phases[0] - 1.0) < 1e-15);
}

TEST_CASE("block enumeration and symmetry classes") {
  PhysicalParams p;
  const auto pair = enumerate_blocks(build_geometry("linear-pair", 2.0), p);
  CHECK(pair.n_blocks() == 4);
  CHECK(pair.class_of[1] == pair.class_of[2]);
  CHECK(pair.n_classes() == 3);
  CHECK(pair.blocks[0].trivial());

  const auto eq = enumerate_blocks(build_geometry("equilateral-triangle", 2.0), p);
  CHECK(eq.class_of[0b001] == eq.class_of[0b010]);
  CHECK(eq.class_of[0b001] == eq.class_of[0b100]);
  CHECK(eq.class_of[0b011] == eq.class_of[0b101]);
  CHECK(eq.class_of[0b011] == eq.class_of[0b110]);

  const auto rt = enumerate_blocks(build_geometry("right-triangle", 2.0), p);
  std::set<int> doubles{rt.class_of[0b011], rt.class_of[0b101], rt.class_of[0b110]};
  CHECK(doubles.size() == 2);

  // every computational state belongs to exactly one block
  const auto sq = enumerate_blocks(build_geometry("square", 2.0), p);
  CHECK(sq.n_blocks() == 16);
  for (int mu = 0; mu < 16; ++mu) CHECK(sq.blocks[mu].mask == static_cast<std::uint32_t>(mu));
}

TEST_CASE("symmetry deduplication matches per-block propagation") {
  PhysicalParams p;
  std::mt19937_64 rng(7);
  for (auto name : {"linear-pair", "equilateral-triangle", "right-triangle", "tetrahedron", "square"}) {
    const auto geo = build_geometry(name, 2.0);
    const auto blocks = enumerate_blocks(geo, p);
    BlockSet each = blocks;
    each.representatives.clear();
    each.multiplicity.assign(blocks.n_blocks(), 1);
    for (int b = 0; b < blocks.n_blocks(); ++b) {
      each.class_of[b] = b;
      each.representatives.push_back(b);
    }
    const auto pulse = oracle::random_pulse(rng, 30, physical_time(2.0, p), p, true, true);
    const auto target = build_parity_target(geo.n_atoms(), pi / 4);
    const double f1 = bell_fidelity(propagate_blocks(pulse, blocks), target);
    const double f2 = bell_fidelity(propagate_blocks(pulse, each), target);
    CHECK(std::abs(f1 - f2) < 1e-12);
  }
}

TEST_CASE("pulse validation") {
  PhysicalParams p;
  auto pulse = PulseSchedule::constant(4, 1e-9, p.omega_max);
  CHECK_NOTHROW(pulse.validate(&p));
  pulse.rabi[1] = -1.0;
  CHECK_THROWS(pulse.validate());
  pulse.rabi[1] = 2 * p.omega_max;
  CHECK_THROWS(pulse.validate(&p));
  pulse = PulseSchedule::constant(4, 0.0, p.omega_max);
  CHECK_THROWS(pulse.validate());
  CHECK(p.range_warnings(1.0).size() >= 1);
  CHECK(p.range_warnings(2.0).empty());
}
