#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace semspan {

/// Incremental FNV-1a (64 bit). Stable across platforms, used for
/// fingerprints that end up in files.
class Fingerprint {
 public:
  Fingerprint& add(std::string_view bytes) {
    for (unsigned char c : bytes) {
      state_ ^= c;
      state_ *= 0x100000001b3ULL;
    }
    // Field separator so that ("ab","c") and ("a","bc") differ.
    state_ ^= 0xff;
    state_ *= 0x100000001b3ULL;
    return *this;
  }

  Fingerprint& add(std::int64_t value) { return add(std::to_string(value)); }

  std::uint64_t value() const { return state_; }

  std::string hex() const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(state_));
    return buf;
  }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

}  // namespace semspan
