#include "gpchaos/core/field_io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <ostream>

#include "gpchaos/error.hpp"

namespace gpchaos::core {
namespace {

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xffu);
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  require(static_cast<bool>(in), ErrorKind::kIo, "truncated field file");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

void put_f64(std::ostream& out, double x) { put_u64(out, std::bit_cast<std::uint64_t>(x)); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

}  // namespace

void write_binary(const ScalarField& field, std::ostream& out) {
  const Grid& g = field.grid();
  put_u64(out, static_cast<std::uint64_t>(g.dim()));
  put_u64(out, static_cast<std::uint64_t>(g.points_per_axis()));
  put_f64(out, g.half_width());
  for (double v : field.values()) put_f64(out, v);
  require(static_cast<bool>(out), ErrorKind::kIo, "failed writing field");
}

void write_binary(const ScalarField& field, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::kIo, "cannot open " + path + " for writing");
  write_binary(field, out);
}

ScalarField read_binary(std::istream& in) {
  const auto dim = get_u64(in);
  const auto n = get_u64(in);
  const double half_width = get_f64(in);
  require(dim >= 1 && dim <= static_cast<std::uint64_t>(kMaxDim) && n >= 8 && n < (1u << 20),
          ErrorKind::kIo, "corrupt field header");
  Grid grid(static_cast<int>(dim), half_width, static_cast<int>(n));
  std::vector<double> values(grid.size());
  for (double& v : values) v = get_f64(in);
  return ScalarField(std::move(grid), std::move(values));
}

ScalarField read_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::kIo, "cannot open " + path);
  return read_binary(in);
}

void write_csv(const ScalarField& field, std::ostream& out) {
  const Grid& g = field.grid();
  for (int a = 0; a < g.dim(); ++a) out << 'i' << a << ',';
  out << "value\n";
  std::vector<int> idx(static_cast<std::size_t>(g.dim()));
  char buf[32];
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.unravel(i, idx);
    for (int v : idx) out << v << ',';
    std::snprintf(buf, sizeof buf, "%.17g", field[i]);
    out << buf << '\n';
  }
}

}  // namespace gpchaos::core
