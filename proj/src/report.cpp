#include "gerbes/report.hpp"

#include <cstdio>
#include <sstream>

namespace gerbes {

std::string format_float(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

std::string Report::str() const {
  std::ostringstream os;
  if (ok()) {
    os << "valid\n";
  } else {
    os << "violations: " << items_.size() << "\n";
    for (const auto& v : items_) {
      os << "  " << v.where << ": " << v.what;
      if (v.residual != 0.0) os << " (residual " << format_float(v.residual) << ")";
      os << "\n";
    }
  }
  for (const auto& n : notes_) os << "note: " << n << "\n";
  return os.str();
}

} // namespace gerbes
