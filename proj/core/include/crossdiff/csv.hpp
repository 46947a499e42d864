#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace crossdiff {

/// Shortest round-trip decimal form of a double, locale independent.
std::string format_double(double v);

/// One CSV line from already formatted cells.
std::string csv_line(const std::vector<std::string>& cells);

/// FNV-1a 64 bit running hash, used for manifest content hashes.
struct ContentHash {
    std::uint64_t state = 1469598103934665603ull;
    void update(std::string_view bytes);
    std::string hex() const;
};

}  // namespace crossdiff
