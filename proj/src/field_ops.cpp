#include "nppl/field_ops.hpp"

#include <bit>
#include <cstring>

#include "json.hpp"

namespace nppl {

using nlohmann::json;

namespace {
void write_le64(std::ofstream& os, const double* data, std::size_t count) {
  static_assert(sizeof(double) == 8);
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * 8));
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      std::uint64_t bits;
      std::memcpy(&bits, &data[i], 8);
      char buf[8];
      for (int b = 0; b < 8; ++b) buf[b] = static_cast<char>((bits >> (8 * b)) & 0xff);
      os.write(buf, 8);
    }
  }
}

void read_le64(std::ifstream& is, double* data, std::size_t count) {
  if constexpr (std::endian::native == std::endian::little) {
    is.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * 8));
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      char buf[8];
      is.read(buf, 8);
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[b])) << (8 * b);
      std::memcpy(&data[i], &bits, 8);
    }
  }
}
}  // namespace

void save_field(const ScalarField& f, const std::string& path) {
  const GridDomain& d = f.domain;
  json hdr;
  hdr["n"] = d.n;
  hdr["points_per_axis"] = d.points_per_axis;
  json center = json::array(), radii = json::array();
  for (int j = 0; j < d.n; ++j) {
    center.push_back(json::array({d.center[static_cast<std::size_t>(j)].real(), d.center[static_cast<std::size_t>(j)].imag()}));
    radii.push_back(d.radii[static_cast<std::size_t>(j)]);
  }
  hdr["center"] = center;
  hdr["radii"] = radii;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_field: cannot open " + path);
  std::string h = hdr.dump();
  os << h << '\n';
  write_le64(os, f.values.data(), f.values.size());
  if (!os) throw std::runtime_error("save_field: write failed on " + path);
}

ScalarField load_field(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_field: cannot open " + path);
  std::string line;
  std::getline(is, line);
  json hdr = json::parse(line);
  int n = hdr.at("n").get<int>();
  std::array<complexd, kMaxDim> center{};
  std::array<double, kMaxDim> radii{};
  for (int j = 0; j < n; ++j) {
    auto c = hdr.at("center")[static_cast<std::size_t>(j)];
    center[static_cast<std::size_t>(j)] = complexd(c[0].get<double>(), c[1].get<double>());
    radii[static_cast<std::size_t>(j)] = hdr.at("radii")[static_cast<std::size_t>(j)].get<double>();
  }
  GridDomain d(n, center, radii, hdr.at("points_per_axis").get<int>());
  ScalarField f(d);
  read_le64(is, f.values.data(), f.values.size());
  if (!is) throw std::runtime_error("load_field: truncated file " + path);
  for (std::size_t c = 0; c < f.values.size(); ++c) f.finite[c] = std::isfinite(f.values[c]) ? 1 : 0;
  return f;
}

}  // namespace nppl
