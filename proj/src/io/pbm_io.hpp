#pragma once

#include <string>

#include "core/image.hpp"

namespace topdown {

// Binary PBM (P4). Bit 1 = visible cell.
void write_pbm(const std::string& path, const BitGrid& grid);
BitGrid read_pbm(const std::string& path);

}  // namespace topdown
