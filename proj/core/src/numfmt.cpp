#include "flowshap/numfmt.hpp"

#include <cassert>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace flowshap {

std::string fmt_double(double v) {
  assert(std::isfinite(v));
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  assert(ec == std::errc());
  return std::string(buf, ptr);
}

std::string fmt_int(long long v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  assert(ec == std::errc());
  return std::string(buf, ptr);
}

std::optional<double> parse_double(std::string_view field) {
  size_t b = 0, e = field.size();
  while (b < e && (field[b] == ' ' || field[b] == '\t')) ++b;
  while (e > b && (field[e - 1] == ' ' || field[e - 1] == '\t' || field[e - 1] == '\r')) --e;
  if (b == e) return std::nullopt;
  if (field[b] == '+') ++b;  // from_chars rejects an explicit plus
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(field.data() + b, field.data() + e, out);
  if (ec != std::errc() || ptr != field.data() + e) return std::nullopt;
  return out;
}

}  // namespace flowshap
