#pragma once

#include <iosfwd>
#include <string>

#include "gpchaos/core/grid.hpp"

namespace gpchaos::core {

// Binary layout: uint64 dim, uint64 n, float64 L (all little-endian),
// then n^dim float64 values in row-major order.
void write_binary(const ScalarField& field, std::ostream& out);
void write_binary(const ScalarField& field, const std::string& path);
ScalarField read_binary(std::istream& in);
ScalarField read_binary(const std::string& path);

/// One line per node: i_0,...,i_{dim-1},value (header row included).
void write_csv(const ScalarField& field, std::ostream& out);

}  // namespace gpchaos::core
