#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "insardet/grid.hpp"
#include "insardet/io.hpp"
#include "insardet/random.hpp"

using namespace insardet;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "insardet_test_grid";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("GridSpec validation and geometry") {
  CHECK_THROWS(GridSpec{0, 4, 1.0, 0, 0}.validate());
  CHECK_THROWS(GridSpec{4, 4, 0.0, 0, 0}.validate());
  const GridSpec g{4, 3, 10.0, 100.0, 500.0};
  CHECK(g.cell_x(0) == doctest::Approx(105.0));
  CHECK(g.cell_y(0) == doctest::Approx(495.0));
  const auto [r, c] = g.to_pixel(g.cell_x(2), g.cell_y(1));
  CHECK(r == doctest::Approx(1.5));
  CHECK(c == doctest::Approx(2.5));
}

TEST_CASE("rasterize") {
  const GridSpec g{4, 4, 10.0, 0.0, 40.0};
  SUBCASE("single point lands in its cell") {
    std::vector<VelocityPoint> pts{{5.0, 35.0, 3.2}};
    const auto res = rasterize(pts, g);
    CHECK(res.field.observed(0, 0));
    CHECK(res.field.value(0, 0) == 3.2);
    CHECK(res.field.count() == 1);
  }
  SUBCASE("two points in a cell average") {
    std::vector<VelocityPoint> pts{{5.0, 35.0, 2.0}, {6.0, 34.0, 4.0}};
    CHECK(rasterize(pts, g).field.value(0, 0) == 3.0);
  }
  SUBCASE("out of bounds points are dropped and counted") {
    std::vector<VelocityPoint> pts{{5.0, 35.0, 1.0}, {500.0, 35.0, 2.0}};
    const auto res = rasterize(pts, g);
    CHECK(res.dropped == 1);
    CHECK(res.field.count() == 1);
  }
  SUBCASE("empty input") {
    std::vector<VelocityPoint> none;
    CHECK_THROWS_WITH(rasterize(none, g), "no data");
  }
  SUBCASE("one point per cell round-trips exactly") {
    Rng rng(3);
    std::uniform_real_distribution<double> u(-5, 5);
    std::vector<VelocityPoint> pts;
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c)
        if ((r + c) % 2 == 0) pts.push_back({g.cell_x(c), g.cell_y(r), u(rng)});
    const auto f = rasterize(pts, g).field;
    for (const auto& p : pts) {
      const auto [r, c] = g.to_pixel(p.x, p.y);
      CHECK(f.value(int(r), int(c)) == p.velocity);
    }
  }
}

TEST_CASE("sparse field mask tracks finiteness") {
  SparseVelocityField f(GridSpec{3, 3, 1.0, 0, 3});
  CHECK(f.count() == 0);
  f.set(1, 1, 2.5);
  CHECK(f.observed(1, 1));
  CHECK(f.count() == 1);
  f.clear(1, 1);
  CHECK_FALSE(f.observed(1, 1));
  CHECK(std::isnan(f.value(1, 1)));
  for (std::size_t i = 0; i < f.values().size(); ++i) CHECK((f.mask()[i] != 0) == std::isfinite(f.values()[i]));
}

TEST_CASE("to_grayscale") {
  const GridSpec g{3, 1, 1.0, 0, 1};
  DenseVelocityGrid d(g);
  d(0, 0) = 0.0;
  d(0, 1) = 7.0;
  d(0, 2) = 13.999;
  const auto img = to_grayscale(d, 14.0);
  CHECK(img.pixels(0, 0) == 0);
  CHECK(img.pixels(0, 1) == 128);
  CHECK(img.pixels(0, 2) == 255);
  d(0, 2) = 14.0;
  CHECK_THROWS_WITH(to_grayscale(d, 14.0), "unwrapped input");
  d(0, 2) = -0.1;
  CHECK_THROWS_WITH(to_grayscale(d, 14.0), "unwrapped input");
}

TEST_CASE("to_grayscale is monotone") {
  const int n = 2000;
  DenseVelocityGrid d(GridSpec{n, 1, 1.0, 0, 1});
  for (int i = 0; i < n; ++i) d(0, i) = 3.5 * i / n;
  const auto img = to_grayscale(d, 3.5);
  for (int i = 1; i < n; ++i) CHECK(img.pixels(0, i) >= img.pixels(0, i - 1));
}

TEST_CASE("points CSV") {
  const auto path = scratch("pts.csv");
  {
    std::ofstream(path) << "x_m,y_m,vel_mm_yr\n100.0,200.0,-1.5\n";
    const auto pts = io::read_points_csv(path);
    REQUIRE(pts.size() == 1);
    CHECK(pts[0].x == 100.0);
    CHECK(pts[0].y == 200.0);
    CHECK(pts[0].velocity == -1.5);
  }
  {
    std::ofstream(path) << "x_m,y_m,vel_mm_yr\n1,2,3\n100.0,abc,1\n";
    try {
      io::read_points_csv(path);
      FAIL("expected a parse error");
    } catch (const io::ParseError& e) {
      CHECK(e.line() == 3);
    }
  }
  {
    std::vector<VelocityPoint> pts{{1.25, -2.5, 0.1}, {1e6, 2e6, -12.75}};
    io::write_points_csv(path, pts);
    const auto back = io::read_points_csv(path);
    REQUIRE(back.size() == 2);
    CHECK(back[1].velocity == -12.75);
  }
}

TEST_CASE("raster round trip is value exact") {
  const GridSpec g{5, 4, 10.0, 1000.0, 2000.0};
  SparseVelocityField f(g);
  Rng rng(11);
  std::uniform_real_distribution<float> u(-20.0f, 20.0f);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 5; ++c)
      if ((r * 5 + c) % 3) f.set(r, c, u(rng));
  const auto path = scratch("field.f32");
  io::write_sparse(path, f);
  const auto back = io::read_sparse(path);
  CHECK(back.spec() == g);
  CHECK(back.mask() == f.mask());
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 5; ++c)
      if (f.observed(r, c)) CHECK(back.value(r, c) == f.value(r, c));
  CHECK_THROWS(io::read_dense(path));
  CHECK(fs::exists(io::sidecar_path(path)));
}

TEST_CASE("PGM round trip") {
  Raster<std::uint8_t> img(3, 4);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<std::uint8_t>(i * 20);
  const auto path = scratch("img.pgm");
  io::write_pgm(path, img);
  CHECK(io::read_pgm(path) == img);
}
