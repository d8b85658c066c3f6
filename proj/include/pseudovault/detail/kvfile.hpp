/**
 * @file kvfile.hpp
 * @brief Line-oriented `key = value` configuration parsing shared by schema
 *        profiles, lint configs, pseudonym policies, manifests and the store
 *        header. `#` starts a comment line; repeated keys are preserved in
 *        order.
 */

#pragma once

#include <cerrno>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pseudovault/errors.hpp"

namespace pseudovault::detail {

/// Full-consumption numeric parse; nullopt for anything else.
inline std::optional<double> parse_number(std::string_view cell);

inline std::string_view trim(std::string_view text) {
    while (!text.empty() &&
           (text.front() == ' ' || text.front() == '\t' ||
            text.front() == '\r')) {
        text.remove_prefix(1);
    }
    while (!text.empty() &&
           (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
        text.remove_suffix(1);
    }
    return text;
}

struct kv_entry {
    std::string key;
    std::string value;
    std::size_t line{0};  ///< 1-based
};

/// Parses `key = value` lines; malformed lines raise `on_malformed`.
inline std::vector<kv_entry> parse_kv(std::string_view text,
                                      errc on_malformed = errc::config) {
    std::vector<kv_entry> entries;
    std::size_t line_number = 0;
    while (!text.empty()) {
        ++line_number;
        const std::size_t eol = text.find('\n');
        std::string_view line =
            eol == std::string_view::npos ? text : text.substr(0, eol);
        text.remove_prefix(eol == std::string_view::npos ? text.size()
                                                         : eol + 1);
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw error(on_malformed, "line " + std::to_string(line_number) +
                                          ": expected `key = value`");
        }
        entries.push_back(kv_entry{
            std::string(trim(line.substr(0, eq))),
            std::string(trim(line.substr(eq + 1))),
            line_number,
        });
    }
    return entries;
}

inline std::optional<double> parse_number(std::string_view cell) {
    const std::string_view trimmed = trim(cell);
    if (trimmed.empty()) return std::nullopt;
    const std::string text(trimmed);
    char* end = nullptr;
    errno = 0;
    const double value = std::strtod(text.c_str(), &end);
    if (errno != 0 || end != text.c_str() + text.size()) return std::nullopt;
    return value;
}

/// Splits on `sep` and trims each piece. Empty input yields no pieces.
inline std::vector<std::string> split_list(std::string_view text,
                                           char sep = ',') {
    std::vector<std::string> pieces;
    if (trim(text).empty()) return pieces;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = text.find(sep, start);
        if (pos == std::string_view::npos) {
            pieces.emplace_back(trim(text.substr(start)));
            break;
        }
        pieces.emplace_back(trim(text.substr(start, pos - start)));
        start = pos + 1;
    }
    return pieces;
}

}  // namespace pseudovault::detail
