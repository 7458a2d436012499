#pragma once

#include <string>

#include "ctm/tensor.hpp"

namespace ctm {

// TNT1 text format: line 1 "TNT1", line 2 rank, line 3 shape (space
// separated), then one "re im" pair per entry in row-major order with 17
// significant digits.
void write_tnt1(const std::string& path, const DenseTensor& t);
DenseTensor read_tnt1(const std::string& path);

}  // namespace ctm
