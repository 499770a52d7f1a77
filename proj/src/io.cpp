#include "insardet/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace insardet::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint32_t kQuietNan = 0x7FC00000u;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, mode);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace

std::vector<VelocityPoint> read_points_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<VelocityPoint> points;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto row = trim(line);
    if (row.empty()) continue;
    if (lineno == 1 && row.starts_with("x_m")) continue;

    double f[3];
    std::size_t start = 0;
    int n = 0;
    for (; n < 3; ++n) {
      const auto comma = row.find(',', start);
      const auto cell = row.substr(start, comma == std::string_view::npos ? row.npos : comma - start);
      if (!parse_double(cell, f[n])) throw ParseError("malformed field '" + std::string(cell) + "'", lineno);
      if (comma == std::string_view::npos) {
        ++n;
        break;
      }
      start = comma + 1;
      if (n == 2) throw ParseError("too many fields", lineno);
    }
    if (n != 3) throw ParseError("expected 3 fields", lineno);
    points.push_back({f[0], f[1], f[2]});
  }
  return points;
}

void write_points_csv(const fs::path& path, const std::vector<VelocityPoint>& points) {
  auto out = open_out(path);
  out << "x_m,y_m,vel_mm_yr\n";
  out.precision(17);
  for (const auto& p : points) out << p.x << ',' << p.y << ',' << p.velocity << '\n';
}

fs::path sidecar_path(const fs::path& raster) {
  auto p = raster;
  p += ".json";
  return p;
}

void write_raster(const fs::path& path, const GridSpec& spec, const Raster<double>& values) {
  spec.validate();
  if (values.rows() != spec.height || values.cols() != spec.width)
    throw std::invalid_argument("raster shape does not match grid");

  std::vector<std::uint8_t> blob(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    std::uint32_t bits = std::isfinite(v) ? std::bit_cast<std::uint32_t>(static_cast<float>(v)) : kQuietNan;
    for (int b = 0; b < 4; ++b) blob[i * 4 + b] = static_cast<std::uint8_t>(bits >> (8 * b));
  }
  auto out = open_out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));

  json header = {{"width", spec.width},       {"height", spec.height},
                 {"pixel_size_m", spec.pixel_size}, {"origin_x_m", spec.origin_x},
                 {"origin_y_m", spec.origin_y},   {"dtype", "f32le"}};
  open_out(sidecar_path(path)) << header.dump(2) << '\n';
}

std::pair<GridSpec, Raster<double>> read_raster(const fs::path& path) {
  std::ifstream hin(sidecar_path(path));
  if (!hin) throw std::runtime_error("missing raster header " + sidecar_path(path).string());
  json header;
  try {
    header = json::parse(hin);
  } catch (const json::exception& e) {
    throw std::runtime_error("bad raster header: " + std::string(e.what()));
  }
  if (header.value("dtype", "") != "f32le") throw std::runtime_error("unsupported raster dtype");
  GridSpec spec{header.at("width").get<int>(), header.at("height").get<int>(),
                header.at("pixel_size_m").get<double>(), header.at("origin_x_m").get<double>(),
                header.at("origin_y_m").get<double>()};
  spec.validate();

  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::uint8_t> blob(spec.size() * 4);
  in.read(reinterpret_cast<char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
  if (static_cast<std::size_t>(in.gcount()) != blob.size())
    throw std::runtime_error("raster " + path.string() + " is truncated");

  Raster<double> values(spec.height, spec.width);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(blob[i * 4 + b]) << (8 * b);
    values[i] = static_cast<double>(std::bit_cast<float>(bits));
  }
  return {spec, std::move(values)};
}

void write_sparse(const fs::path& path, const SparseVelocityField& field) {
  write_raster(path, field.spec(), field.values());
}

void write_dense(const fs::path& path, const DenseVelocityGrid& grid) {
  write_raster(path, grid.spec(), grid.values());
}

SparseVelocityField read_sparse(const fs::path& path) {
  auto [spec, values] = read_raster(path);
  return SparseVelocityField(spec, std::move(values));
}

DenseVelocityGrid read_dense(const fs::path& path) {
  auto [spec, values] = read_raster(path);
  DenseVelocityGrid grid(spec, std::move(values));
  grid.check_finite();
  return grid;
}

void write_pgm(const fs::path& path, const Raster<std::uint8_t>& pixels) {
  auto out = open_out(path, std::ios::binary);
  out << "P5\n" << pixels.cols() << ' ' << pixels.rows() << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

Raster<std::uint8_t> read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P5" || w <= 0 || h <= 0 || maxval != 255) throw std::runtime_error("unsupported PGM");
  in.get();
  Raster<std::uint8_t> px(h, w);
  in.read(reinterpret_cast<char*>(px.data()), static_cast<std::streamsize>(px.size()));
  if (static_cast<std::size_t>(in.gcount()) != px.size()) throw std::runtime_error("truncated PGM");
  return px;
}

Raster<std::uint8_t> quicklook(const Raster<double>& values, double lo, double hi) {
  Raster<std::uint8_t> out(values.rows(), values.cols(), 0);
  const double span = hi > lo ? hi - lo : 1.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) continue;
    const double t = std::clamp((values[i] - lo) / span, 0.0, 1.0);
    out[i] = static_cast<std::uint8_t>(std::lround(t * 255.0));
  }
  return out;
}

}  // namespace insardet::io
