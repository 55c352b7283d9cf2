#include "jsqdiff/csv.hpp"

#include <cstdio>

namespace jsqdiff::csv {

std::string number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

void write_row(std::ostream& os, std::initializer_list<std::string_view> cells) {
  bool first = true;
  for (auto cell : cells) {
    if (!first) os << ',';
    os << cell;
    first = false;
  }
  os << '\n';
}

}  // namespace jsqdiff::csv
