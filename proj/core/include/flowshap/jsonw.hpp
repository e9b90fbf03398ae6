#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "flowshap/numfmt.hpp"

namespace flowshap {

// Minimal streaming JSON writer. Keys are emitted in the order given, reals
// as shortest round-trip decimals, so identical data always produces
// identical bytes. Reading is done elsewhere (vendored parser); this class
// only writes.
class JsonWriter {
 public:
  JsonWriter& begin_object() {
    prefix();
    out_.push_back('{');
    first_.push_back(true);
    return *this;
  }
  JsonWriter& end_object() {
    first_.pop_back();
    out_.push_back('}');
    return *this;
  }
  JsonWriter& begin_array() {
    prefix();
    out_.push_back('[');
    first_.push_back(true);
    return *this;
  }
  JsonWriter& end_array() {
    first_.pop_back();
    out_.push_back(']');
    return *this;
  }
  JsonWriter& key(std::string_view k) {
    prefix();
    append_string(k);
    out_.push_back(':');
    pending_value_ = true;
    return *this;
  }
  JsonWriter& value(double v) {
    prefix();
    out_ += fmt_double(v);
    return *this;
  }
  JsonWriter& value(std::int64_t v) {
    prefix();
    out_ += fmt_int(v);
    return *this;
  }
  JsonWriter& value(std::uint64_t v) {
    prefix();
    char buf[32];
    int n = 0;
    do {
      buf[n++] = static_cast<char>('0' + v % 10);
      v /= 10;
    } while (v != 0);
    while (n > 0) out_.push_back(buf[--n]);
    return *this;
  }
  JsonWriter& value(int v) { return value(static_cast<std::int64_t>(v)); }
  JsonWriter& value(std::string_view v) {
    prefix();
    append_string(v);
    return *this;
  }
  JsonWriter& value(const char* v) { return value(std::string_view(v)); }
  JsonWriter& value(bool v) {
    prefix();
    out_ += v ? "true" : "false";
    return *this;
  }
  JsonWriter& null() {
    prefix();
    out_ += "null";
    return *this;
  }
  // Embeds text that is already valid JSON (e.g. a canonicalized subobject).
  JsonWriter& raw_value(std::string_view json) {
    prefix();
    out_ += json;
    return *this;
  }

  const std::string& str() const { return out_; }
  std::string take() { return std::move(out_); }

 private:
  void prefix() {
    if (pending_value_) {
      pending_value_ = false;
      return;
    }
    if (!first_.empty()) {
      if (!first_.back()) out_.push_back(',');
      first_.back() = false;
    }
  }
  void append_string(std::string_view s) {
    out_.push_back('"');
    for (char c : s) {
      switch (c) {
        case '"': out_ += "\\\""; break;
        case '\\': out_ += "\\\\"; break;
        case '\n': out_ += "\\n"; break;
        case '\r': out_ += "\\r"; break;
        case '\t': out_ += "\\t"; break;
        default:
          if (static_cast<unsigned char>(c) < 0x20) {
            static const char* hex = "0123456789abcdef";
            out_ += "\\u00";
            out_.push_back(hex[(c >> 4) & 0xF]);
            out_.push_back(hex[c & 0xF]);
          } else {
            out_.push_back(c);
          }
      }
    }
    out_.push_back('"');
  }

  std::string out_;
  std::vector<bool> first_;
  bool pending_value_ = false;
};

}  // namespace flowshap
