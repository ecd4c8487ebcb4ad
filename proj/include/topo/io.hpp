#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "topo/mesh.hpp"
#include "topo/point_cloud.hpp"

namespace topo {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

void write_off(const std::filesystem::path& path, const TriangleMesh& mesh);
TriangleMesh read_off(const std::filesystem::path& path);

/// Vertices and faces only; polygonal faces are fan-triangulated on read.
void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh);
TriangleMesh read_obj(const std::filesystem::path& path);

/// Loads OFF or OBJ by extension.
TriangleMesh read_mesh(const std::filesystem::path& path);

/// "PCF1" magic, little-endian u32 count, then count x 3 float32.
void write_pcf(const std::filesystem::path& path, const PointCloud& cloud);
PointCloud read_pcf(const std::filesystem::path& path);

/// CSV with header "x,y,z".
void write_cloud_csv(const std::filesystem::path& path, const PointCloud& cloud);
PointCloud read_cloud_csv(const std::filesystem::path& path);

/// Loads PCF1 or CSV by extension.
PointCloud read_cloud(const std::filesystem::path& path);
void write_cloud(const std::filesystem::path& path, const PointCloud& cloud);

namespace binary {
void put_u32(std::ostream& out, std::uint32_t value);
void put_f32(std::ostream& out, float value);
std::uint32_t get_u32(std::istream& in);
float get_f32(std::istream& in);
}  // namespace binary

/// Opens for writing, creating parent directories; throws io_error on failure.
std::ofstream open_output(const std::filesystem::path& path, bool binary_mode = false);
std::ifstream open_input(const std::filesystem::path& path, bool binary_mode = false);

/// Splits a CSV line on commas (no quoting support; all files here are numeric).
std::vector<std::string> split_csv_line(const std::string& line);
double parse_double(const std::string& text);

}  // namespace topo
