#include "graspd/sdf/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "graspd/errors.hpp"

namespace graspd::sdf {

static_assert(std::endian::native == std::endian::little,
              "GSDF writer assumes a little-endian host");

namespace {
constexpr char kMagic[4] = {'G', 'S', 'D', 'F'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void write_gsdf(const std::string& path, const SdfGrid& grid) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write SDF grid file: " + path);
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char*>(&kVersion), sizeof(kVersion));
  for (int a = 0; a < 3; ++a) {
    std::uint32_t d = static_cast<std::uint32_t>(grid.dims()[a]);
    out.write(reinterpret_cast<const char*>(&d), sizeof(d));
  }
  const double bounds[6] = {grid.bounds_min().x, grid.bounds_min().y, grid.bounds_min().z,
                            grid.bounds_max().x, grid.bounds_max().y, grid.bounds_max().z};
  out.write(reinterpret_cast<const char*>(bounds), sizeof(bounds));
  out.write(reinterpret_cast<const char*>(grid.values().data()),
            static_cast<std::streamsize>(grid.values().size() * sizeof(double)));
  if (!out) throw IoError("failed while writing SDF grid file: " + path);
}

SdfGrid read_gsdf(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open SDF grid file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw ValidationError(path + ": not a GSDF file (bad magic)");
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (!in || version != kVersion)
    throw ValidationError(path + ": unsupported GSDF version " + std::to_string(version));
  std::uint32_t dims_u[3];
  in.read(reinterpret_cast<char*>(dims_u), sizeof(dims_u));
  if (!in) throw ValidationError(path + ": truncated GSDF header");
  for (std::uint32_t d : dims_u)
    if (d < 2 || d > 4096)
      throw ValidationError(path + ": implausible grid dimension " + std::to_string(d));
  double bounds[6];
  in.read(reinterpret_cast<char*>(bounds), sizeof(bounds));
  if (!in) throw ValidationError(path + ": truncated GSDF header");
  std::size_t total = static_cast<std::size_t>(dims_u[0]) * dims_u[1] * dims_u[2];
  std::vector<double> values(total);
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(total * sizeof(double)));
  if (!in) throw ValidationError(path + ": truncated GSDF payload");
  // SdfGrid's constructor validates finiteness and bounds ordering.
  return SdfGrid({static_cast<std::int32_t>(dims_u[0]), static_cast<std::int32_t>(dims_u[1]),
                  static_cast<std::int32_t>(dims_u[2])},
                 Vec3d{bounds[0], bounds[1], bounds[2]},
                 Vec3d{bounds[3], bounds[4], bounds[5]}, std::move(values));
}

}  // namespace graspd::sdf
