#include <algorithm>
#include <cmath>
#include <numbers>

#include "insardet/synth.hpp"

namespace insardet {

using std::numbers::pi;

double mogi_uplift(const MogiSource& s, double r) {
  const double R2 = r * r + s.depth * s.depth;
  return (1.0 - s.poisson_ratio) * s.volume_change * s.depth / (pi * R2 * std::sqrt(R2)) * 1000.0;
}

Displacement3D mogi_displacement(const MogiSource& s, const GridSpec& spec) {
  spec.validate();
  if (!(s.depth > 0.0)) throw std::invalid_argument("source depth must be positive");
  Displacement3D d(spec);
  const double k = (1.0 - s.poisson_ratio) * s.volume_change / pi * 1000.0;  // mm m^3
  for (int r = 0; r < spec.height; ++r) {
    const double dy = spec.cell_y(r) - s.y;
    for (int c = 0; c < spec.width; ++c) {
      const double dx = spec.cell_x(c) - s.x;
      const double R2 = dx * dx + dy * dy + s.depth * s.depth;
      const double inv_R3 = 1.0 / (R2 * std::sqrt(R2));
      d.up(r, c) = k * s.depth * inv_R3;
      // u_r * (dx / r) == k * dx / R^3, so the axis has no singularity.
      d.east(r, c) = k * dx * inv_R3;
      d.north(r, c) = k * dy * inv_R3;
    }
  }
  return d;
}

void TunnelModel::validate() const {
  if (path.size() < 2) throw std::invalid_argument("tunnel path needs at least 2 vertices");
  double length = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i)
    length += std::hypot(path[i].x - path[i - 1].x, path[i].y - path[i - 1].y);
  if (!(length > 0.0)) throw std::invalid_argument("degenerate tunnel path");
  for (const auto& v : path)
    if (!(v.l_sag > 0.0) || !(v.l_hog > 0.0) || v.d_sag < 0.0 || v.d_hog < 0.0)
      throw std::invalid_argument("invalid tunnel profile parameters");
}

double tunnel_profile(double t, double l_sag, double l_hog, double d_sag, double d_hog) {
  const double half = 0.5 * l_sag;
  const double at = std::abs(t);
  if (at <= half) {
    const double c = std::cos(0.5 * pi * at / half);
    return -d_sag * c * c;
  }
  if (at <= half + l_hog) {
    const double s = std::sin(pi * (at - half) / l_hog);
    return d_hog * s * s;
  }
  return 0.0;
}

Displacement3D tunnel_displacement(const TunnelModel& model, const GridSpec& spec) {
  spec.validate();
  model.validate();
  Displacement3D d(spec);
  const auto& p = model.path;
  for (int r = 0; r < spec.height; ++r) {
    const double y = spec.cell_y(r);
    for (int c = 0; c < spec.width; ++c) {
      const double x = spec.cell_x(c);
      double best = std::numeric_limits<double>::infinity();
      std::size_t seg = 0;
      double along = 0.0;
      for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        const double ex = p[i + 1].x - p[i].x, ey = p[i + 1].y - p[i].y;
        const double len2 = ex * ex + ey * ey;
        if (len2 == 0.0) continue;
        const double u = std::clamp(((x - p[i].x) * ex + (y - p[i].y) * ey) / len2, 0.0, 1.0);
        const double dist = std::hypot(x - (p[i].x + u * ex), y - (p[i].y + u * ey));
        if (dist < best) {
          best = dist;
          seg = i;
          along = u;
        }
      }
      const auto& a = p[seg];
      const auto& b = p[seg + 1];
      auto lerp = [&](double va, double vb) { return va + along * (vb - va); };
      d.up(r, c) = tunnel_profile(best, lerp(a.l_sag, b.l_sag), lerp(a.l_hog, b.l_hog), lerp(a.d_sag, b.d_sag),
                                  lerp(a.d_hog, b.d_hog));
    }
  }
  return d;
}

void LosGeometry::validate() const {
  if (!(incidence_deg > 0.0 && incidence_deg < 90.0)) throw std::invalid_argument("incidence must lie in (0, 90)");
}

DenseVelocityGrid project_los(const Displacement3D& disp, const LosGeometry& geom) {
  geom.validate();
  const double inc = geom.incidence_deg * pi / 180.0;
  const double head = geom.heading_deg * pi / 180.0;
  const double ke = -std::sin(inc) * std::cos(head);
  const double kn = std::sin(inc) * std::sin(head);
  const double ku = std::cos(inc);
  DenseVelocityGrid los(disp.spec);
  auto& v = los.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = ke * disp.east[i] + kn * disp.north[i] + ku * disp.up[i];
  return los;
}

}  // namespace insardet
