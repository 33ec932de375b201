#pragma once

#include <string>
#include <vector>

namespace g2cp {

// Shortest round-trip decimal form; always contains '.' or an exponent so the
// wire reader can tell doubles from integers.
std::string format_double(double x);

std::string quote(const std::string& s);    // wraps in '"' and escapes \ " \n \t \r
std::string unquote(const std::string& s);  // inverse; throws on bad escapes

std::vector<std::string> split_lines(const std::string& text);

bool starts_with(const std::string& s, const std::string& prefix);
std::string trim(const std::string& s);

}  // namespace g2cp
