#include "dlca/csv.hpp"

#include <array>
#include <cstdio>

#include "dlca/version.hpp"

namespace dlca::csv {

void write_header(std::ostream& out, const MetaLines& meta) {
  out << "# version=" << kVersion << "\n";
  for (const auto& [key, value] : meta) out << "# " << key << "=" << value << "\n";
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return buf.data();
}

}  // namespace dlca::csv
