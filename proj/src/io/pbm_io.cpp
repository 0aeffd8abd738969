#include "io/pbm_io.hpp"

#include <fstream>
#include <sstream>

#include "core/errors.hpp"

namespace topdown {

void write_pbm(const std::string& path, const BitGrid& grid) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for write: " + path);
  out << "P4\n" << grid.width << " " << grid.height << "\n";
  int bytes_per_row = (grid.width + 7) / 8;
  std::string row(static_cast<size_t>(bytes_per_row), '\0');
  for (int r = 0; r < grid.height; ++r) {
    std::fill(row.begin(), row.end(), '\0');
    for (int c = 0; c < grid.width; ++c) {
      if (grid.get(r, c))
        row[static_cast<size_t>(c / 8)] |= static_cast<char>(0x80 >> (c % 8));
    }
    out.write(row.data(), bytes_per_row);
  }
  if (!out) throw DataError("pbm write failed: " + path);
}

BitGrid read_pbm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open for read: " + path);
  std::string magic;
  in >> magic;
  if (magic != "P4") throw DataError("not a P4 pbm: " + path);
  int w = 0, h = 0;
  in >> w >> h;
  if (w <= 0 || h <= 0) throw DataError("bad pbm header: " + path);
  in.get();  // single whitespace after header
  BitGrid grid(h, w);
  int bytes_per_row = (w + 7) / 8;
  std::string row(static_cast<size_t>(bytes_per_row), '\0');
  for (int r = 0; r < h; ++r) {
    in.read(row.data(), bytes_per_row);
    if (!in) throw DataError("pbm truncated: " + path);
    for (int c = 0; c < w; ++c)
      grid.set(r, c, (row[static_cast<size_t>(c / 8)] & (0x80 >> (c % 8))) != 0);
  }
  return grid;
}

}  // namespace topdown
