#pragma once

// Columnar curve text format. Each block is a header line
//   grid <lo> <hi> <n> <p>
// followed by n rows "<q> <y_1(q)> ... <y_p(q)>". A file holds any number of
// blocks; all components of one block share the block's grid.

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fband/func_core.hpp"

namespace fband {

void write_columnar(std::ostream& out, const FunctionalSample& sample);
void write_columnar(std::ostream& out, std::span<const FunctionalSample> samples);

/// Reads blocks until end of input. Blank lines and lines starting with '#'
/// between blocks are skipped.
std::vector<FunctionalSample> read_columnar(std::istream& in);

std::string format_double(double v);

}  // namespace fband
