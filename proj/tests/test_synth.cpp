#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "insardet/covariogram.hpp"
#include "insardet/synth.hpp"

using namespace insardet;
namespace fs = std::filesystem;

TEST_CASE("Mogi closed form") {
  MogiSource s{0.0, 0.0, 20.0, 10.0, 0.25};
  const double u0 = 0.75 * 10.0 / (std::numbers::pi * 400.0) * 1000.0;
  CHECK(mogi_uplift(s, 0.0) == doctest::Approx(u0).epsilon(1e-12));
  CHECK(mogi_uplift(s, 0.0) == doctest::Approx(5.968).epsilon(1e-3));
  CHECK(mogi_uplift(s, 20.0) == doctest::Approx(u0 / std::pow(2.0, 1.5)).epsilon(1e-12));

  MogiSource null = s;
  null.volume_change = 0.0;
  const GridSpec g{16, 16, 5.0, -40.0, 40.0};
  const auto d0 = mogi_displacement(null, g);
  for (std::size_t i = 0; i < d0.up.size(); ++i) {
    CHECK(d0.up[i] == 0.0);
    CHECK(d0.east[i] == 0.0);
    CHECK(d0.north[i] == 0.0);
  }
}

TEST_CASE("Mogi symmetry and far-field decay") {
  // Source at a cell centre so mirrored cells share the same radius.
  const GridSpec g{41, 41, 2.0, 0.0, 82.0};
  MogiSource s{g.cell_x(20), g.cell_y(20), 15.0, 50.0, 0.25};
  const auto d = mogi_displacement(s, g);
  for (int k = 1; k <= 20; ++k) {
    CHECK(std::abs(d.up(20 + k, 20) - d.up(20 - k, 20)) < 1e-9);
    CHECK(std::abs(d.up(20, 20 + k) - d.up(20 + k, 20)) < 1e-9);
    CHECK(std::abs(d.up(20 + k, 20 + k) - d.up(20 - k, 20 - k)) < 1e-9);
    // Horizontal motion points away from an inflating source.
    CHECK(d.east(20, 20 + k) > 0.0);
    CHECK(d.north(20 - k, 20) > 0.0);
  }
  const double r1 = 20.0 * s.depth, r2 = 200.0 * s.depth;
  const double slope = std::log(mogi_uplift(s, r2) / mogi_uplift(s, r1)) / std::log(r2 / r1);
  CHECK(slope == doctest::Approx(-3.0).epsilon(0.1 / 3.0));
}

TEST_CASE("tunnel profile") {
  const double l_sag = 50, l_hog = 40, d_sag = 6, d_hog = 2;
  CHECK(tunnel_profile(0.0, l_sag, l_hog, d_sag, d_hog) == doctest::Approx(-d_sag));
  CHECK(tunnel_profile(l_sag / 2 + l_hog + 0.01, l_sag, l_hog, d_sag, d_hog) == 0.0);
  CHECK(tunnel_profile(-(l_sag / 2 + l_hog + 5), l_sag, l_hog, d_sag, d_hog) == 0.0);
  int changes = 0;
  double prev = tunnel_profile(0.0, l_sag, l_hog, d_sag, d_hog);
  for (int i = 1; i <= 10000; ++i) {
    const double v = tunnel_profile(i * 0.01, l_sag, l_hog, d_sag, d_hog);
    if (v != 0.0 && prev != 0.0 && (v > 0) != (prev > 0)) ++changes;
    if (v != 0.0) prev = v;
  }
  CHECK(changes == 1);
}

TEST_CASE("tunnel displacement") {
  const GridSpec g{100, 60, 2.0, 0.0, 120.0};
  TunnelModel m;
  m.path = {{0.0, 60.0, 30, 30, 5, 2}, {200.0, 60.0, 60, 40, 9, 4}};
  const auto d = tunnel_displacement(m, g);
  for (std::size_t i = 0; i < d.east.size(); ++i) {
    CHECK(d.east[i] == 0.0);
    CHECK(d.north[i] == 0.0);
  }
  // Centerline settlement interpolates d_sag along the path.
  const int row = 30;  // y = 59
  CHECK(d.up(row, 0) < -4.5);
  CHECK(d.up(row, 99) < -8.5);
  const double f = 101.0 / 200.0;
  auto lerp = [&](double a, double b) { return a + f * (b - a); };
  CHECK(d.up(row, 50) ==
        doctest::Approx(tunnel_profile(1.0, lerp(30, 60), lerp(30, 40), lerp(5, 9), lerp(2, 4))).epsilon(1e-9));
  // Compact support around the path.
  TunnelModel narrow;
  narrow.path = {{0.0, 110.0, 30, 30, 5, 2}, {200.0, 110.0, 30, 30, 5, 2}};
  const auto dn = tunnel_displacement(narrow, g);
  for (int r = 0; r < 60; ++r)
    if (std::abs(g.cell_y(r) - 110.0) > 15 + 30) CHECK(dn.up(r, 50) == 0.0);

  TunnelModel bad;
  bad.path = {{1, 1}};
  CHECK_THROWS(bad.validate());
  bad.path = {{1, 1}, {1, 1}};
  CHECK_THROWS(tunnel_displacement(bad, g));
}

TEST_CASE("LOS projection") {
  const GridSpec g{1, 1, 1.0, 0, 1};
  Displacement3D up(g), east(g);
  up.up(0, 0) = 1.0;
  east.east(0, 0) = 1.0;
  CHECK(project_los(up, {39.0, -13.0, Pass::ascending})(0, 0) ==
        doctest::Approx(std::cos(39.0 * std::numbers::pi / 180)));
  CHECK(project_los(up, {39.0, -13.0, Pass::ascending})(0, 0) == doctest::Approx(0.777).epsilon(1e-3));
  Displacement3D mixed(g);
  mixed.up(0, 0) = 2.5;
  mixed.east(0, 0) = 0.3;
  mixed.north(0, 0) = -0.7;
  CHECK(project_los(mixed, {1e-300, 40.0, Pass::ascending})(0, 0) == doctest::Approx(2.5));
  const double asc = project_los(east, LosGeometry::ascending())(0, 0);
  const double desc = project_los(east, LosGeometry::descending())(0, 0);
  CHECK(asc * desc < 0.0);
  CHECK_THROWS(project_los(up, {90.0, 0.0, Pass::ascending}));

  // Linearity.
  Displacement3D a(g), b(g), c(g);
  a.east(0, 0) = 1.1, a.north(0, 0) = -0.4, a.up(0, 0) = 2.0;
  b.east(0, 0) = -0.2, b.north(0, 0) = 0.9, b.up(0, 0) = 0.5;
  c.east(0, 0) = 2 * a.east(0, 0) - 3 * b.east(0, 0);
  c.north(0, 0) = 2 * a.north(0, 0) - 3 * b.north(0, 0);
  c.up(0, 0) = 2 * a.up(0, 0) - 3 * b.up(0, 0);
  const auto geom = LosGeometry::descending();
  CHECK(project_los(c, geom)(0, 0) ==
        doctest::Approx(2 * project_los(a, geom)(0, 0) - 3 * project_los(b, geom)(0, 0)).epsilon(1e-12));
}

TEST_CASE("atmosphere") {
  SUBCASE("pure nugget is white noise with variance sill") {
    const GridSpec g{40, 40, 10.0, 0, 400};
    const CovarianceModel m{0.0, 1.0, 2.0, 2.0};
    const auto t = synth_atmosphere(m, g, 3);
    double s = 0, s2 = 0, lag = 0;
    for (int r = 0; r < 40; ++r)
      for (int c = 0; c < 40; ++c) {
        s += t(r, c);
        s2 += t(r, c) * t(r, c);
        if (c) lag += t(r, c) * t(r, c - 1);
      }
    const double n = 1600;
    CHECK(s2 / n - (s / n) * (s / n) == doctest::Approx(2.0).epsilon(0.1));
    CHECK(std::abs(lag / (40 * 39)) < 0.2);
  }
  SUBCASE("deterministic per seed") {
    const GridSpec g{30, 20, 50.0, 0, 1000};
    const CovarianceModel m{1.0, 1.0, 1.5, 0.5};
    CHECK(synth_atmosphere(m, g, 9).values() == synth_atmosphere(m, g, 9).values());
    CHECK_FALSE(synth_atmosphere(m, g, 9).values() == synth_atmosphere(m, g, 10).values());
  }
  SUBCASE("zero mean and pair covariance over realizations") {
    const GridSpec g{12, 12, 250.0, 0, 3000};
    const CovarianceModel m{1.0, 1.0, 1.5, 0.5};
    AtmosphereSampler sampler(m, g);
    CHECK(sampler.direct());
    Rng rng(31);
    const int N = 4000;
    double mean = 0, cov = 0;
    for (int k = 0; k < N; ++k) {
      const auto t = sampler.sample(rng);
      mean += t(5, 2);
      cov += t(5, 2) * t(5, 6);  // 1 km apart
    }
    mean /= N;
    cov /= N;
    CHECK(std::abs(mean) < 3.0 * std::sqrt(1.5 / N));
    CHECK(cov == doctest::Approx(std::exp(-1.0)).epsilon(0.1));
  }
  SUBCASE("large grids take the coarse route with the right variance") {
    const GridSpec g{256, 256, 2.0, 0, 512};
    const CovarianceModel m{1.0, 1.0, 1.5, 0.5};
    AtmosphereSampler sampler(m, g);
    CHECK_FALSE(sampler.direct());
    Rng rng(5);
    double s2 = 0;
    int n = 0;
    for (int k = 0; k < 200; ++k) {
      const auto t = sampler.sample(rng);
      s2 += t(128, 128) * t(128, 128);
      ++n;
    }
    CHECK(s2 / n == doctest::Approx(1.5).epsilon(0.25));
  }
}

TEST_CASE("layout and compose") {
  const GridSpec g{64, 64, 2.0, 0, 128};
  Rng rng(1);
  const auto layout = generate_layout(g, {}, rng);
  std::size_t on = 0;
  for (auto v : layout) on += v;
  CHECK(on > 0);
  CHECK(on < layout.size());

  DenseVelocityGrid D(g, 0.0), T(g, 0.0);
  for (int r = 0; r < 64; ++r)
    for (int c = 0; c < 64; ++c) T(r, c) = 0.01 * r - 0.02 * c;
  NoiseStats quiet;
  SUBCASE("full mask and no noise reproduces X") {
    Raster<std::uint8_t> all(64, 64, 1);
    ComposeOptions o;
    o.with_completion = false;
    o.with_delaunay = false;
    const auto s = compose_scene(D, T, all, quiet, rng, o);
    for (int r = 0; r < 64; ++r)
      for (int c = 0; c < 64; ++c) CHECK(s.sparse.value(r, c) == s.composed(r, c));
    CHECK(s.label == Label::negative);
    CHECK(s.composed.values() == T.values());
  }
  SUBCASE("errors") {
    Raster<std::uint8_t> none(64, 64, 0);
    CHECK_THROWS_WITH(compose_scene(D, T, none, quiet, rng), "empty layout");
    DenseVelocityGrid other(GridSpec{32, 32, 2.0, 0, 64});
    CHECK_THROWS(compose_scene(other, T, layout, quiet, rng));
  }
}

TEST_CASE("reference noise stats") {
  const auto n = reference_noise_stats(0);
  CHECK(n.impulse_rate > 0.0);
  CHECK(n.impulse_rate < 0.05);
  CHECK_FALSE(n.impulses().empty());
}

TEST_CASE("scene generator ranges and determinism") {
  SynthConfig cfg;
  cfg.grid = {64, 64, 2.0, 0.0, 128.0};
  cfg.compose.with_completion = false;
  const SceneGenerator gen(cfg, 77, reference_noise_stats(1));
  for (std::size_t i = 0; i < 40; ++i) {
    const auto rec = gen.draw(i, Label::positive);
    REQUIRE(rec.mogi.has_value());
    CHECK(rec.mogi->depth >= 3.0);
    CHECK(rec.mogi->depth <= 80.0);
    CHECK(std::abs(rec.mogi->volume_change) >= std::pow(10.0, 0.3) - 1e-9);
    CHECK(std::abs(rec.mogi->volume_change) <= 1e3 + 1e-9);
    CHECK(rec.peak_los <= 15.0 + 1e-9);
    CHECK(rec.peak_los >= cfg.los_min - 1e-9);
    const auto d = gen.deformation(rec);
    double peak = 0;
    for (double v : d.values()) peak = std::max(peak, std::abs(v));
    CHECK(peak > 0.0);
    CHECK(peak <= 15.0 + 1e-9);
    CHECK(rec.atmosphere.a == doctest::Approx(rec.atmosphere.sill - rec.atmosphere.nugget));

    const auto neg = gen.draw(i, Label::negative);
    CHECK_FALSE(neg.mogi.has_value());
    const auto flat = gen.deformation(neg);
    for (double v : flat.values()) CHECK(v == 0.0);
  }
  const auto a = gen.build(gen.draw(3, Label::positive));
  const auto b = gen.build(gen.draw(3, Label::positive));
  CHECK(a.sparse.values().size() == b.sparse.values().size());
  CHECK(a.sparse.mask() == b.sparse.mask());
  CHECK(a.label == Label::positive);

  SynthConfig line = cfg;
  line.cls = SceneClass::line;
  const SceneGenerator lg(line, 78, reference_noise_stats(1));
  const auto rec = lg.draw(0, Label::positive);
  REQUIRE(rec.tunnel.has_value());
  CHECK(rec.tunnel->path.size() >= 2);
  for (const auto& v : rec.tunnel->path) {
    CHECK(v.l_sag >= 30);
    CHECK(v.l_sag <= 80);
    CHECK(v.d_hog >= 1);
    CHECK(v.d_hog <= 5);
  }
}

TEST_CASE("generate_dataset writes and resumes deterministically") {
  SynthConfig cfg;
  cfg.grid = {32, 32, 2.0, 0.0, 64.0};
  const auto dir = fs::temp_directory_path() / "insardet_test_ds";
  fs::remove_all(dir);
  const auto ds = generate_dataset(cfg, 1, 7, dir, 1);
  REQUIRE(ds.entries.size() == 2);
  CHECK(ds.entries[0].record.label == Label::positive);
  CHECK(ds.entries[1].record.label == Label::negative);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  const auto m1 = slurp(dir / "manifest.jsonl");
  const auto dir2 = fs::temp_directory_path() / "insardet_test_ds2";
  fs::remove_all(dir2);
  generate_dataset(cfg, 1, 7, dir2, 1);
  CHECK(m1 == slurp(dir2 / "manifest.jsonl"));
  // Resume from the existing files.
  generate_dataset(cfg, 1, 7, dir, 1);
  CHECK(m1 == slurp(dir / "manifest.jsonl"));
  const auto back = read_manifest(dir / "manifest.jsonl");
  REQUIRE(back.entries.size() == 2);
  CHECK(back.entries[0].record.seed == ds.entries[0].record.seed);
  // A different configuration cannot reuse the directory.
  SynthConfig other = cfg;
  other.los_min = 5.0;
  CHECK_THROWS(generate_dataset(other, 1, 7, dir, 1));
}
