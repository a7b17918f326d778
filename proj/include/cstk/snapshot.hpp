#pragma once

// Binary snapshot format, little-endian throughout:
//
//   char[4]  magic "CSTK"
//   u32      version (1)
//   u32      ndim
//   u32      dims[ndim]
//   f64      spacing[ndim]
//   f64      time
//   u32      field count
//   per field: u32 name length, name bytes, u32 staggering tag
//              (0 = cell centered, 1 + a = faces normal to axis a)
//   per field, in header order: raw f64 values, first axis fastest;
//   face arrays have dims[a] + 1 entries along their own axis.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "cstk/grid.hpp"

namespace cstk {

inline constexpr std::uint32_t kSnapshotVersion = 1;

struct SnapshotField {
  std::string name;
  std::uint32_t staggering = 0;
  std::vector<double> values;

  bool operator==(const SnapshotField&) const = default;
};

struct Snapshot {
  Grid grid;
  double time = 0.0;
  std::vector<SnapshotField> fields;

  void add(const std::string& name, const ScalarField& f) {
    fields.push_back({name, 0, f.interior()});
  }
  /// Adds one entry per component: name_x, name_y[, name_z].
  void add(const std::string& name, const VectorField& v) {
    static const char* suffix[3] = {"_x", "_y", "_z"};
    for (int c = 0; c < v.grid().ndim(); ++c) {
      const auto comp = v.component(c);
      fields.push_back({name + suffix[c], static_cast<std::uint32_t>(c + 1),
                        std::vector<double>(comp.begin(), comp.end())});
    }
  }

  const SnapshotField& field(const std::string& name) const {
    for (const auto& f : fields)
      if (f.name == name) return f;
    throw FormatError("snapshot: no field named '" + name + "'");
  }
  bool has(const std::string& name) const {
    for (const auto& f : fields)
      if (f.name == name) return true;
    return false;
  }

  ScalarField scalar(const std::string& name) const {
    const auto& f = field(name);
    if (f.staggering != 0) throw FormatError("snapshot: '" + name + "' is not cell centered");
    return ScalarField::from_interior(grid, f.values);
  }
  VectorField vector(const std::string& name) const {
    static const char* suffix[3] = {"_x", "_y", "_z"};
    VectorField v(grid);
    for (int c = 0; c < grid.ndim(); ++c) {
      const auto& f = field(name + suffix[c]);
      if (f.staggering != static_cast<std::uint32_t>(c + 1) ||
          f.values.size() != v.component(c).size())
        throw FormatError("snapshot: bad component '" + f.name + "'");
      std::copy(f.values.begin(), f.values.end(), v.component(c).begin());
    }
    return v;
  }
};

namespace detail {

template <class T>
void put_le(std::ostream& os, T value) {
  static_assert(sizeof(T) == 4 || sizeof(T) == 8);
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  const U bits = std::bit_cast<U>(value);
  char buf[sizeof(T)];
  for (std::size_t b = 0; b < sizeof(T); ++b) buf[b] = static_cast<char>((bits >> (8 * b)) & 0xff);
  os.write(buf, sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(T)))
    throw FormatError("snapshot: truncated stream");
  U bits = 0;
  for (std::size_t b = 0; b < sizeof(T); ++b) bits |= static_cast<U>(buf[b]) << (8 * b);
  return std::bit_cast<T>(bits);
}

inline std::size_t staggered_size(const Grid& g, std::uint32_t tag) {
  std::size_t n = 1;
  for (int a = 0; a < g.ndim(); ++a)
    n *= static_cast<std::size_t>(g.n(a) + (tag == static_cast<std::uint32_t>(a + 1) ? 1 : 0));
  return n;
}

}  // namespace detail

inline void write_snapshot(std::ostream& os, const Snapshot& s) {
  const Grid& g = s.grid;
  os.write("CSTK", 4);
  detail::put_le<std::uint32_t>(os, kSnapshotVersion);
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.ndim()));
  for (int a = 0; a < g.ndim(); ++a) detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.n(a)));
  for (int a = 0; a < g.ndim(); ++a) detail::put_le<double>(os, g.h(a));
  detail::put_le<double>(os, s.time);
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(s.fields.size()));
  for (const auto& f : s.fields) {
    if (f.values.size() != detail::staggered_size(g, f.staggering))
      throw FormatError("snapshot: field '" + f.name + "' has the wrong length");
    detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(f.name.size()));
    os.write(f.name.data(), static_cast<std::streamsize>(f.name.size()));
    detail::put_le<std::uint32_t>(os, f.staggering);
  }
  for (const auto& f : s.fields)
    for (double v : f.values) detail::put_le<double>(os, v);
  if (!os) throw FormatError("snapshot: write failed");
}

inline Snapshot read_snapshot(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "CSTK", 4) != 0)
    throw FormatError("snapshot: bad magic");
  const auto version = detail::get_le<std::uint32_t>(is);
  if (version != kSnapshotVersion)
    throw FormatError("snapshot: unsupported version " + std::to_string(version));
  const auto ndim = detail::get_le<std::uint32_t>(is);
  if (ndim < 2 || ndim > 3) throw FormatError("snapshot: bad ndim");
  std::vector<int> dims(ndim);
  std::vector<double> spacing(ndim);
  for (auto& d : dims) d = static_cast<int>(detail::get_le<std::uint32_t>(is));
  for (auto& h : spacing) h = detail::get_le<double>(is);
  Snapshot s;
  s.grid = Grid::from_spacing(dims, spacing);
  s.time = detail::get_le<double>(is);
  const auto count = detail::get_le<std::uint32_t>(is);
  if (count > 1024) throw FormatError("snapshot: implausible field count");
  s.fields.resize(count);
  for (auto& f : s.fields) {
    const auto len = detail::get_le<std::uint32_t>(is);
    if (len > 4096) throw FormatError("snapshot: implausible name length");
    f.name.resize(len);
    if (!is.read(f.name.data(), len)) throw FormatError("snapshot: truncated name");
    f.staggering = detail::get_le<std::uint32_t>(is);
    if (f.staggering > ndim) throw FormatError("snapshot: bad staggering tag");
  }
  for (auto& f : s.fields) {
    f.values.resize(detail::staggered_size(s.grid, f.staggering));
    for (double& v : f.values) v = detail::get_le<double>(is);
  }
  return s;
}

inline void write_snapshot_file(const std::string& path, const Snapshot& s) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("snapshot: cannot open '" + path + "' for writing");
  write_snapshot(os, s);
}

inline Snapshot read_snapshot_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("snapshot: cannot open '" + path + "'");
  return read_snapshot(is);
}

}  // namespace cstk
