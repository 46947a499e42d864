#include "crossdiff/csv.hpp"

#include <charconv>
#include <cstdio>

namespace crossdiff {

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return buf;
    }
    return std::string(buf, ptr);
}

std::string csv_line(const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) line += ',';
        line += cells[i];
    }
    line += '\n';
    return line;
}

void ContentHash::update(std::string_view bytes) {
    for (unsigned char c : bytes) {
        state ^= c;
        state *= 1099511628211ull;
    }
}

std::string ContentHash::hex() const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(state));
    return buf;
}

}  // namespace crossdiff
