#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

#include <boost/polygon/voronoi.hpp>

#include "insardet/interp.hpp"

namespace insardet {

namespace {

struct Site {
  int x;  // column
  int y;  // row
};

}  // namespace
}  // namespace insardet

namespace boost::polygon {
template <>
struct geometry_concept<insardet::Site> {
  using type = point_concept;
};
template <>
struct point_traits<insardet::Site> {
  using coordinate_type = int;
  static int get(const insardet::Site& s, orientation_2d o) { return o == HORIZONTAL ? s.x : s.y; }
};
}  // namespace boost::polygon

namespace insardet {

namespace {

// Squared-distance feature transform along one line (lower envelope of
// parabolas). f[i] is the input cost, out[i] the distance, arg[i] the index
// of the minimising sample.
void envelope_1d(const std::vector<double>& f, std::vector<double>& out, std::vector<int>& arg,
                 std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  constexpr double inf = std::numeric_limits<double>::infinity();
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (!std::isfinite(f[q])) continue;
    while (k >= 0) {
      const int p = v[k];
      const double s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
      if (s <= z[k]) {
        --k;
      } else {
        break;
      }
    }
    ++k;
    v[k] = q;
    if (k == 0) {
      z[0] = -inf;
    } else {
      const int p = v[k - 1];
      z[k] = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
    }
    z[k + 1] = inf;
  }
  if (k < 0) {
    std::fill(out.begin(), out.end(), inf);
    std::fill(arg.begin(), arg.end(), -1);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const int p = v[j];
    out[q] = double(q - p) * (q - p) + f[p];
    arg[q] = p;
  }
}

}  // namespace

DenseVelocityGrid nearest_fill(const SparseVelocityField& field) {
  const auto& spec = field.spec();
  const int H = spec.height, W = spec.width;
  if (field.count() == 0) throw std::invalid_argument("no observed cells");
  constexpr double inf = std::numeric_limits<double>::infinity();

  // Column pass: distance to the nearest observed row in each column.
  Raster<double> colDist(H, W, inf);
  Raster<int> colArg(H, W, -1);
  {
    std::vector<double> f(H), out(H), z(H + 1);
    std::vector<int> arg(H), v(H);
    for (int c = 0; c < W; ++c) {
      for (int r = 0; r < H; ++r) f[r] = field.observed(r, c) ? 0.0 : inf;
      envelope_1d(f, out, arg, v, z);
      for (int r = 0; r < H; ++r) {
        colDist(r, c) = out[r];
        colArg(r, c) = arg[r];
      }
    }
  }
  DenseVelocityGrid grid(spec);
  std::vector<double> f(W), out(W), z(W + 1);
  std::vector<int> arg(W), v(W);
  for (int r = 0; r < H; ++r) {
    for (int c = 0; c < W; ++c) f[c] = colDist(r, c);
    envelope_1d(f, out, arg, v, z);
    for (int c = 0; c < W; ++c) {
      const int sc = arg[c];
      const int sr = colArg(r, sc);
      grid(r, c) = field.value(sr, sc);
    }
  }
  return grid;
}

DenseVelocityGrid delaunay_interpolate(const SparseVelocityField& field) {
  const auto& spec = field.spec();
  std::vector<Site> sites;
  sites.reserve(field.count());
  for (int r = 0; r < spec.height; ++r)
    for (int c = 0; c < spec.width; ++c)
      if (field.observed(r, c)) sites.push_back({c, r});
  if (sites.size() < 3) throw std::invalid_argument("delaunay needs at least 3 observed cells");

  boost::polygon::voronoi_diagram<double> vd;
  boost::polygon::construct_voronoi(sites.begin(), sites.end(), &vd);
  if (vd.vertices().empty()) throw std::invalid_argument("observed cells are collinear");

  // Start from nearest-value extrapolation; triangles overwrite the hull.
  DenseVelocityGrid grid = nearest_fill(field);

  std::vector<std::size_t> ring;
  for (const auto& vertex : vd.vertices()) {
    // Each Voronoi vertex is dual to one Delaunay face; cocircular sites give
    // a convex polygon, which is fanned into triangles.
    ring.clear();
    const auto* edge = vertex.incident_edge();
    do {
      ring.push_back(edge->cell()->source_index());
      edge = edge->rot_next();
    } while (edge != vertex.incident_edge());
    if (ring.size() < 3) continue;

    for (std::size_t k = 1; k + 1 < ring.size(); ++k) {
      const Site& a = sites[ring[0]];
      const Site& b = sites[ring[k]];
      const Site& c = sites[ring[k + 1]];
      const std::int64_t area =
          std::int64_t(b.x - a.x) * (c.y - a.y) - std::int64_t(b.y - a.y) * (c.x - a.x);
      if (area == 0) continue;
      const double va = field.value(a.y, a.x), vb = field.value(b.y, b.x), vc = field.value(c.y, c.x);
      const int x0 = std::min({a.x, b.x, c.x}), x1 = std::max({a.x, b.x, c.x});
      const int y0 = std::min({a.y, b.y, c.y}), y1 = std::max({a.y, b.y, c.y});
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          // Exact integer edge functions; all share the sign of `area` inside.
          const std::int64_t wa = std::int64_t(b.x - x) * (c.y - y) - std::int64_t(b.y - y) * (c.x - x);
          const std::int64_t wb = std::int64_t(c.x - x) * (a.y - y) - std::int64_t(c.y - y) * (a.x - x);
          const std::int64_t wc = area - wa - wb;
          const bool inside = area > 0 ? (wa >= 0 && wb >= 0 && wc >= 0) : (wa <= 0 && wb <= 0 && wc <= 0);
          if (!inside) continue;
          grid(y, x) = (double(wa) * va + double(wb) * vb + double(wc) * vc) / double(area);
        }
      }
    }
  }
  return grid;
}

}  // namespace insardet
