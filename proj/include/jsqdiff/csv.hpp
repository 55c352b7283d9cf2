#pragma once

#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>

namespace jsqdiff::csv {

// 12 significant digits, "%.12g". Output is locale-independent.
std::string number(double x);

// Comma-joined row terminated by LF.
void write_row(std::ostream& os, std::initializer_list<std::string_view> cells);

}  // namespace jsqdiff::csv
