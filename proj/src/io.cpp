#include "topo/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <fstream>
#include <sstream>

#include "topo/error.hpp"

namespace topo {

std::string format_double(double value) {
  std::array<char, 64> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc()) fail(Errc::io_error, "cannot format number");
  return std::string(buf.data(), end);
}

double parse_double(const std::string& text) {
  std::size_t begin = text.find_first_not_of(" \t\r");
  std::size_t end = text.find_last_not_of(" \t\r");
  if (begin == std::string::npos) fail(Errc::io_error, "empty numeric field");
  double value = 0.0;
  const char* first = text.data() + begin;
  const char* last = text.data() + end + 1;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) fail(Errc::io_error, "malformed number '" + text + "'");
  return value;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::ofstream open_output(const std::filesystem::path& path, bool binary_mode) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, binary_mode ? std::ios::binary : std::ios::out);
  if (!out) fail(Errc::io_error, "cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_input(const std::filesystem::path& path, bool binary_mode) {
  std::ifstream in(path, binary_mode ? std::ios::binary : std::ios::in);
  if (!in) fail(Errc::io_error, "cannot open '" + path.string() + "'");
  return in;
}

namespace binary {

void put_u32(std::ostream& out, std::uint32_t value) {
  const char bytes[4] = {static_cast<char>(value & 0xff), static_cast<char>((value >> 8) & 0xff),
                         static_cast<char>((value >> 16) & 0xff), static_cast<char>((value >> 24) & 0xff)};
  out.write(bytes, 4);
}

void put_f32(std::ostream& out, float value) { put_u32(out, std::bit_cast<std::uint32_t>(value)); }

std::uint32_t get_u32(std::istream& in) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) fail(Errc::io_error, "truncated binary file");
  return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
         (static_cast<std::uint32_t>(bytes[2]) << 16) | (static_cast<std::uint32_t>(bytes[3]) << 24);
}

float get_f32(std::istream& in) { return std::bit_cast<float>(get_u32(in)); }

}  // namespace binary

void write_off(const std::filesystem::path& path, const TriangleMesh& mesh) {
  auto out = open_output(path);
  out << "OFF\n" << mesh.vertices.size() << ' ' << mesh.triangles.size() << " 0\n";
  for (const auto& v : mesh.vertices) {
    out << format_double(v.x()) << ' ' << format_double(v.y()) << ' ' << format_double(v.z()) << '\n';
  }
  for (const auto& t : mesh.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

namespace {

// Reads the next whitespace token, skipping '#' comments.
bool next_token(std::istream& in, std::string& token) {
  while (in >> token) {
    if (token[0] != '#') return true;
    std::string rest;
    std::getline(in, rest);
  }
  return false;
}

long next_int(std::istream& in) {
  std::string token;
  if (!next_token(in, token)) fail(Errc::io_error, "unexpected end of OFF file");
  long value = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) fail(Errc::io_error, "malformed integer '" + token + "'");
  return value;
}

double next_double(std::istream& in) {
  std::string token;
  if (!next_token(in, token)) fail(Errc::io_error, "unexpected end of OFF file");
  return parse_double(token);
}

void add_polygon(TriangleMesh& mesh, const std::vector<int>& face) {
  if (face.size() < 3) fail(Errc::io_error, "face with fewer than 3 vertices");
  for (std::size_t k = 1; k + 1 < face.size(); ++k) mesh.triangles.push_back({face[0], face[k], face[k + 1]});
}

}  // namespace

TriangleMesh read_off(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string magic;
  if (!next_token(in, magic) || magic != "OFF") fail(Errc::io_error, "'" + path.string() + "' is not an OFF file");
  const long nv = next_int(in);
  const long nf = next_int(in);
  next_int(in);
  if (nv < 0 || nf < 0) fail(Errc::io_error, "negative OFF counts");
  TriangleMesh mesh;
  mesh.vertices.reserve(static_cast<std::size_t>(nv));
  for (long i = 0; i < nv; ++i) {
    const double x = next_double(in), y = next_double(in), z = next_double(in);
    mesh.vertices.emplace_back(x, y, z);
  }
  for (long f = 0; f < nf; ++f) {
    const long k = next_int(in);
    std::vector<int> face(static_cast<std::size_t>(std::max(0L, k)));
    for (auto& v : face) v = static_cast<int>(next_int(in));
    add_polygon(mesh, face);
  }
  validate_indices(mesh);
  return mesh;
}

void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh) {
  auto out = open_output(path);
  for (const auto& v : mesh.vertices) {
    out << "v " << format_double(v.x()) << ' ' << format_double(v.y()) << ' ' << format_double(v.z()) << '\n';
  }
  for (const auto& t : mesh.triangles) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
}

TriangleMesh read_obj(const std::filesystem::path& path) {
  auto in = open_input(path);
  TriangleMesh mesh;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      std::string x, y, z;
      if (!(ls >> x >> y >> z)) fail(Errc::io_error, "malformed OBJ vertex");
      mesh.vertices.emplace_back(parse_double(x), parse_double(y), parse_double(z));
    } else if (tag == "f") {
      std::vector<int> face;
      std::string item;
      while (ls >> item) {
        const long idx = std::stol(item.substr(0, item.find('/')));
        face.push_back(static_cast<int>(idx > 0 ? idx - 1 : static_cast<long>(mesh.vertices.size()) + idx));
      }
      add_polygon(mesh, face);
    }
  }
  validate_indices(mesh);
  return mesh;
}

TriangleMesh read_mesh(const std::filesystem::path& path) {
  return path.extension() == ".obj" ? read_obj(path) : read_off(path);
}

void write_pcf(const std::filesystem::path& path, const PointCloud& cloud) {
  auto out = open_output(path, true);
  out.write("PCF1", 4);
  binary::put_u32(out, static_cast<std::uint32_t>(cloud.size()));
  for (const auto& p : cloud.points) {
    for (int a = 0; a < 3; ++a) binary::put_f32(out, static_cast<float>(p[a]));
  }
  if (!out) fail(Errc::io_error, "failed writing '" + path.string() + "'");
}

PointCloud read_pcf(const std::filesystem::path& path) {
  auto in = open_input(path, true);
  char magic[4];
  if (!in.read(magic, 4) || std::string_view(magic, 4) != "PCF1") {
    fail(Errc::io_error, "'" + path.string() + "' is not a PCF1 file");
  }
  const std::uint32_t count = binary::get_u32(in);
  PointCloud cloud;
  cloud.points.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const double x = binary::get_f32(in), y = binary::get_f32(in), z = binary::get_f32(in);
    cloud.points.emplace_back(x, y, z);
  }
  return cloud;
}

void write_cloud_csv(const std::filesystem::path& path, const PointCloud& cloud) {
  auto out = open_output(path);
  out << "x,y,z\n";
  for (const auto& p : cloud.points) {
    out << format_double(p.x()) << ',' << format_double(p.y()) << ',' << format_double(p.z()) << '\n';
  }
}

PointCloud read_cloud_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) fail(Errc::io_error, "empty cloud CSV");
  PointCloud cloud;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 3) fail(Errc::io_error, "cloud CSV rows need 3 columns");
    cloud.points.emplace_back(parse_double(f[0]), parse_double(f[1]), parse_double(f[2]));
  }
  return cloud;
}

PointCloud read_cloud(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? read_cloud_csv(path) : read_pcf(path);
}

void write_cloud(const std::filesystem::path& path, const PointCloud& cloud) {
  if (path.extension() == ".csv") {
    write_cloud_csv(path, cloud);
  } else {
    write_pcf(path, cloud);
  }
}

}  // namespace topo
