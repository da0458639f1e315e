#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace bubble {

// FNV-1a, 64 bit. Stable across platforms, which is the whole point:
// chunk ids and config digests must not depend on std::hash.
std::uint64_t fnv1a64(std::string_view data);

std::string to_hex16(std::uint64_t value);

// Round to at most 6 fractional digits. Applied to every floating value
// before it reaches a trace line or CSV cell so emitted files are
// byte-stable across runs and platforms.
double round6(double value);

// Shortest decimal form of round6(value): "0.25", "3.75", "520".
std::string fmt_num(double value);

// Minimal CSV quoting: wraps fields containing comma, quote or newline.
std::string csv_escape(const std::string& field);

std::string iso8601_utc_now();

}  // namespace bubble
