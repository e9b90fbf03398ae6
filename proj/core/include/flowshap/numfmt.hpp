#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace flowshap {

// Shortest decimal string that round-trips to the exact double. Used for
// every real written to CSV or JSON so that re-parsing is bit-exact and
// re-serializing is byte-identical.
std::string fmt_double(double v);

std::string fmt_int(long long v);

// Parses a double from a whole field (leading '+' allowed, surrounding
// whitespace trimmed). Returns nullopt if the field is not fully numeric
// or overflows.
std::optional<double> parse_double(std::string_view field);

}  // namespace flowshap
