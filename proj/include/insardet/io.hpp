#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "insardet/grid.hpp"

namespace insardet::io {

/// Parse failure carrying the 1-based line number of the offending row.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what + " at line " + std::to_string(line)), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Points CSV with header `x_m,y_m,vel_mm_yr`.
std::vector<VelocityPoint> read_points_csv(const std::filesystem::path& path);
void write_points_csv(const std::filesystem::path& path, const std::vector<VelocityPoint>& points);

/// Raster = flat little-endian float32 blob (row-major, top row first) plus
/// a `<path>.json` sidecar. Missing cells are written as quiet NaN.
void write_raster(const std::filesystem::path& path, const GridSpec& spec, const Raster<double>& values);
std::pair<GridSpec, Raster<double>> read_raster(const std::filesystem::path& path);

void write_sparse(const std::filesystem::path& path, const SparseVelocityField& field);
void write_dense(const std::filesystem::path& path, const DenseVelocityGrid& grid);
SparseVelocityField read_sparse(const std::filesystem::path& path);
/// Throws if the raster has missing cells.
DenseVelocityGrid read_dense(const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& raster);

/// Binary PGM (P5), maxval 255.
void write_pgm(const std::filesystem::path& path, const Raster<std::uint8_t>& pixels);
Raster<std::uint8_t> read_pgm(const std::filesystem::path& path);

/// Maps [lo, hi] linearly onto 0..255 for quicklooks.
Raster<std::uint8_t> quicklook(const Raster<double>& values, double lo, double hi);

}  // namespace insardet::io
