#include "waveshape/grid.hpp"

#include <cstring>
#include <fstream>
#include <vector>

namespace waveshape {

namespace {

// All binary artifacts are little-endian; this code assumes a little-endian
// host (asserted at first write).
void put_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), 4);
}

void put_f32(std::ostream& os, float v) {
  os.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 4);
  return v;
}

float get_f32(std::istream& is) {
  float v = 0;
  is.read(reinterpret_cast<char*>(&v), 4);
  return v;
}

}  // namespace

void write_vol_stream(std::ostream& os, const VolumeGrid& grid) {
  os.write("WVOL", 4);
  put_u32(os, static_cast<std::uint32_t>(grid.res));
  put_f32(os, static_cast<float>(grid.extent));
  put_f32(os, static_cast<float>(grid.truncation));
  std::vector<float> buf(static_cast<std::size_t>(grid.size()));
  for (std::int64_t i = 0; i < grid.size(); ++i)
    buf[static_cast<std::size_t>(i)] = static_cast<float>(grid.values[i]);
  os.write(reinterpret_cast<const char*>(buf.data()),
           static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

VolumeGrid read_vol_stream(std::istream& is) {
  char magic[4] = {};
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "WVOL", 4) != 0)
    throw DataError("volume file: bad magic (expected WVOL)");
  const std::uint32_t res = get_u32(is);
  const float extent = get_f32(is);
  const float truncation = get_f32(is);
  if (res == 0 || res > 4096) throw DataError("volume file: bad resolution");
  VolumeGrid grid(static_cast<int>(res), extent, truncation);
  std::vector<float> buf(static_cast<std::size_t>(grid.size()));
  is.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!is) throw DataError("volume file: truncated payload");
  for (std::int64_t i = 0; i < grid.size(); ++i)
    grid.values[i] = buf[static_cast<std::size_t>(i)];
  return grid;
}

void write_vol(const std::string& path, const VolumeGrid& grid) {
  static_assert(sizeof(float) == 4);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for write: " + path);
  write_vol_stream(os, grid);
  if (!os) throw DataError("write failed: " + path);
}

VolumeGrid read_vol(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open: " + path);
  return read_vol_stream(is);
}

}  // namespace waveshape
