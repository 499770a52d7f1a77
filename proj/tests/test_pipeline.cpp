#include <doctest.h>

#include <cmath>
#include <map>

#include "insardet/pipeline.hpp"
#include "insardet/random.hpp"

using namespace insardet;

namespace {

ProbabilityMap constant_map(const GridSpec& g, double v) {
  ProbabilityMap m(g);
  for (auto& x : m.values) x = v;
  return m;
}

const GridSpec kGrid{30, 20, 10.0, 0.0, 200.0};

}  // namespace

TEST_CASE("merge_patch_probs") {
  const GridSpec g{64, 64, 1.0, 0, 64};
  SUBCASE("single patch") {
    const auto m = merge_patch_probs({{10, 10, 1.0}}, g, 32);
    for (int r = 0; r < 64; ++r)
      for (int c = 0; c < 64; ++c) {
        const bool in = r >= 10 && r < 42 && c >= 10 && c < 42;
        CHECK(m.values(r, c) == (in ? doctest::Approx(1.0) : doctest::Approx(0.0)));
      }
  }
  SUBCASE("constant probabilities") {
    std::vector<PatchResult> ps;
    for (int r = 0; r <= 32; r += 8)
      for (int c = 0; c <= 32; c += 8) ps.push_back({r, c, 0.37});
    const auto m = merge_patch_probs(ps, g, 32);
    for (double v : m.values) CHECK(v == doctest::Approx(0.37));
  }
  SUBCASE("monotone transition between two adjacent patches") {
    const auto m = merge_patch_probs({{16, 0, 0.0}, {16, 16, 1.0}}, g, 32);
    const int row = 30;
    CHECK(m.values(row, 0) == doctest::Approx(0.0));
    CHECK(m.values(row, 47) == doctest::Approx(1.0));
    for (int c = 1; c < 48; ++c) CHECK(m.values(row, c) >= m.values(row, c - 1) - 1e-12);
    CHECK(m.values(row, 24) > 0.0);
    CHECK(m.values(row, 24) < 1.0);
  }
  SUBCASE("bounded") {
    Rng rng(5);
    std::uniform_real_distribution<double> u;
    std::vector<PatchResult> ps;
    for (int r = 0; r <= 40; r += 4)
      for (int c = 0; c <= 40; c += 4) ps.push_back({r, c, u(rng)});
    for (double v : merge_patch_probs(ps, g, 24).values) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  CHECK_THROWS(merge_patch_probs({}, g, 32));
}

TEST_CASE("fuse_ensemble") {
  SUBCASE("all equal") {
    std::vector<std::vector<ProbabilityMap>> maps(4, std::vector<ProbabilityMap>(4, constant_map(kGrid, 0.3)));
    for (double v : fuse_ensemble(maps, 4).values) CHECK(v == doctest::Approx(0.3).epsilon(1e-9));
  }
  SUBCASE("one member lit") {
    std::vector<std::vector<ProbabilityMap>> maps(4, std::vector<ProbabilityMap>(4, constant_map(kGrid, 0.0)));
    maps[2][1] = constant_map(kGrid, 1.0);
    for (double v : fuse_ensemble(maps, 4).values) CHECK(std::abs(v - 0.25) < 1e-9);
  }
  SUBCASE("max dominates mean and monotone") {
    Rng rng(3);
    std::uniform_real_distribution<double> u;
    std::vector<std::vector<ProbabilityMap>> maps(4, std::vector<ProbabilityMap>(4, ProbabilityMap(kGrid)));
    for (auto& row : maps)
      for (auto& m : row)
        for (auto& v : m.values) v = u(rng);
    const auto fused = fuse_ensemble(maps, 4);
    for (std::size_t i = 0; i < fused.values.size(); ++i) {
      double mm = 0;
      for (auto& row : maps)
        for (auto& m : row) mm += m.values[i] / 16.0;
      CHECK(fused.values[i] >= mm - 1e-12);
      CHECK(fused.values[i] <= 1.0);
    }
    auto raised = maps;
    raised[1][3].values[7] = std::min(1.0, raised[1][3].values[7] + 0.3);
    CHECK(fuse_ensemble(raised, 4).values[7] >= fused.values[7]);
  }
  SUBCASE("missing member") {
    std::vector<std::vector<ProbabilityMap>> maps(4, std::vector<ProbabilityMap>(4, constant_map(kGrid, 0.0)));
    maps[3].pop_back();
    CHECK_THROWS(fuse_ensemble(maps, 4));
  }
}

TEST_CASE("combine_looks") {
  const auto a8 = constant_map(kGrid, 0.8), d4 = constant_map(kGrid, 0.4);
  CHECK(combine_looks({a8}, {d4}).values[0] == doctest::Approx(0.6));
  CHECK(combine_looks({d4}, {a8}).values == combine_looks({a8}, {d4}).values);
  CHECK(combine_looks({a8}, {}).values == a8.values);
  CHECK(combine_looks({}, {d4}).values == d4.values);
  const auto p9 = constant_map(kGrid, 0.9), p1 = constant_map(kGrid, 0.1);
  CHECK(std::abs(combine_looks({p9, p1}, {p9, p1}).values[0] - 0.9) < 1e-9);
  CHECK(std::abs(combine_looks({p1, p9}, {p1, p1}).values[0] - 0.5) < 1e-9);
  CHECK_THROWS(combine_looks({a8, a8}, {d4}));
  CHECK_THROWS(combine_looks({a8, a8, a8}, {d4, d4, d4}));
  CHECK_THROWS(combine_looks({}, {}));
}

TEST_CASE("tiling") {
  CHECK(tile_map(300, 400, 512, 224).size() == 1);
  const auto t = tile_map(5000, 2500, 2500, 224);
  CHECK(t.size() == 3);
  for (const auto& tile : t) {
    CHECK(tile.rows == 2500);
    CHECK(tile.row + tile.rows <= 5000);
  }
  CHECK(t.back().row == 2500);
  CHECK_THROWS(tile_map(100, 100, 100, 100));

  // Every pixel is covered and consistent tiles reassemble seamlessly.
  const GridSpec g{700, 1100, 1.0, 0, 1100};
  const auto tiles = tile_map(1100, 700, 512, 224);
  std::vector<ProbabilityMap> maps;
  for (const auto& tl : tiles) {
    ProbabilityMap m(g.window(tl.row, tl.col, tl.rows, tl.cols));
    for (int r = 0; r < tl.rows; ++r)
      for (int c = 0; c < tl.cols; ++c) m.values(r, c) = std::fmod(0.001 * (tl.row + r) + 0.0007 * (tl.col + c), 1.0);
    maps.push_back(m);
  }
  const auto whole = reassemble(g, tiles, maps);
  for (int r = 0; r < 1100; r += 7)
    for (int c = 0; c < 700; c += 7)
      CHECK(std::abs(whole.values(r, c) - std::fmod(0.001 * r + 0.0007 * c, 1.0)) < 1e-6);
}

TEST_CASE("extract_detections") {
  const GridSpec g{40, 40, 10.0, 0.0, 400.0};
  SUBCASE("empty") { CHECK(extract_detections(ProbabilityMap(g)).empty()); }
  SUBCASE("10x10 block of 0.8") {
    ProbabilityMap m(g);
    for (int r = 5; r < 15; ++r)
      for (int c = 20; c < 30; ++c) m.values(r, c) = 0.8;
    const auto d = extract_detections(m);
    REQUIRE(d.size() == 2);
    CHECK(d[0].level == 0.5);
    CHECK(d[1].level == 0.75);
    for (const auto& x : d) {
      CHECK(x.area_km2 == doctest::Approx(0.01));
      CHECK(x.max_probability == doctest::Approx(0.8));
      CHECK(x.centroid_x == doctest::Approx(g.cell_x(24.5)));
      CHECK(x.centroid_y == doctest::Approx(g.cell_y(9.5)));
    }
  }
  SUBCASE("separated blocks") {
    ProbabilityMap m(g);
    for (int r = 2; r < 8; ++r)
      for (int c = 2; c < 8; ++c) m.values(r, c) = 0.6;
    for (int r = 20; r < 30; ++r)
      for (int c = 20; c < 33; ++c) m.values(r, c) = 0.6;
    CHECK(extract_detections(m, {0.5}).size() == 2);
    ProbabilityMap diag(g);  // diagonal neighbours join under 8-connectivity
    diag.values(1, 1) = 0.6;
    diag.values(2, 2) = 0.6;
    CHECK(extract_detections(diag, {0.5}).size() == 1);
  }
  SUBCASE("levels nest on smooth maps") {
    // Sums of Gaussian bumps, the shape merged probability maps take.
    Rng rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
      ProbabilityMap m(g);
      for (int k = 0; k < 3; ++k) {
        const double cr = 40 * u(rng), cc = 40 * u(rng), amp = 0.5 + 0.5 * u(rng), s = 2 + 4 * u(rng);
        for (int r = 0; r < 40; ++r)
          for (int c = 0; c < 40; ++c)
            m.values(r, c) = std::max(m.values(r, c),
                                      amp * std::exp(-((r - cr) * (r - cr) + (c - cc) * (c - cc)) / (2 * s * s)));
      }
      // Two bumps can share one 0.5 component yet split at 0.75, so counts
      // only nest for isolated bumps. Total area nests always.
      std::map<double, int> count;
      std::map<double, double> area;
      const auto dets = extract_detections(m);
      for (const auto& d : dets) {
        ++count[d.level];
        area[d.level] += d.area_km2;
        CHECK(d.max_probability >= d.level);
        CHECK(d.area_km2 > 0.0);
      }
      CHECK(area[0.9] <= area[0.75]);
      CHECK(area[0.75] <= area[0.5]);
      if (trial < 10) {  // single bump
        ProbabilityMap one(g);
        for (int r = 0; r < 40; ++r)
          for (int c = 0; c < 40; ++c) {
            const double s2 = 2.0 * (3.0 + trial) * (3.0 + trial);
            one.values(r, c) = std::exp(-((r - 20.0) * (r - 20.0) + (c - 17.0) * (c - 17.0)) / s2);
          }
        std::map<double, int> n1;
        for (const auto& d : extract_detections(one)) ++n1[d.level];
        CHECK(n1[0.9] <= n1[0.75]);
        CHECK(n1[0.75] <= n1[0.5]);
        CHECK(n1[0.5] == 1);
      }
    }
  }
}

TEST_CASE("scene probability uses the central crop") {
  CnnModel m(Architecture::tiny(), 1);
  const int P = m.architecture().input_size;
  Raster<double> v(P + 10, P + 10, 1.0);
  const double p = scene_probability(v, m, {});
  CHECK(p >= 0.0);
  CHECK(p <= 1.0);
  Raster<double> small(P - 1, P, 0.0);
  CHECK_THROWS(scene_probability(small, m, {}));
}

TEST_CASE("pipeline runs end to end on a small map") {
  // A tiny model on a 60x50 field with 24-pixel patches and 40-pixel tiles.
  CnnModel m(Architecture::tiny(), 2);
  DetectConfig cfg;
  cfg.patch = {24, 8};
  cfg.tile = 40;
  cfg.mc.max_inner = 20;
  cfg.mc.tol = 1e-2;
  const GridSpec g{60, 50, 10.0, 0, 500};
  SparseVelocityField f(g);
  Rng rng(7);
  std::normal_distribution<double> n;
  std::bernoulli_distribution keep(0.3);
  for (int r = 0; r < 50; ++r)
    for (int c = 0; c < 60; ++c)
      if (keep(rng)) f.set(r, c, n(rng));
  const auto res = detect({{Pass::ascending, f}, {Pass::descending, f}}, m, cfg);
  CHECK(res.look_maps.size() == 2);
  CHECK(res.fused.values.rows() == 50);
  for (double v : res.fused.values) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  const auto again = detect({{Pass::ascending, f}, {Pass::descending, f}}, m, cfg);
  CHECK(again.fused.values == res.fused.values);
  CHECK(again.detections.size() == res.detections.size());

  cfg.jobs = 3;
  CHECK(detect({{Pass::ascending, f}}, m, cfg).fused.values == res.look_maps[0].values);

  DetectConfig wrong = cfg;
  wrong.patch = {32, 8};
  CHECK_THROWS_WITH_AS(detect({{Pass::ascending, f}}, m, wrong), doctest::Contains("tile (0,0) inference"),
                       std::runtime_error);
  CHECK_THROWS(detect({}, m, cfg));
}
