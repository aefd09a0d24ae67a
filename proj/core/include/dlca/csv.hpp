#pragma once

#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace dlca::csv {

using MetaLines = std::vector<std::pair<std::string, std::string>>;

// Stamps the reproducibility header every output file carries: code version
// first, then the caller's key=value lines (effective config, seeds, grids).
void write_header(std::ostream& out, const MetaLines& meta);

std::string format_double(double v);

}  // namespace dlca::csv
