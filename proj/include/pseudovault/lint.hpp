/**
 * @file lint.hpp
 * @brief Data-quality lint rules for tabular health records.
 *
 * Five rules, evaluated without modifying the data:
 *
 *   R1  free text in a coded field (ERROR) — a CODED cell absent from the
 *       vocabulary; matching is exact and case-sensitive, a misspelling is
 *       precisely what must be flagged.
 *   R2  copy-paste duplication (WARN) — an identical TEXT cell of configured
 *       minimum length repeated across records that share the same
 *       identifying key. The identifying key columns themselves are not
 *       scanned; they repeat by definition.
 *   R3  unit-conversion implausibility (ERROR) — for configured column
 *       pairs, |a - b*factor| / (b*factor) > tolerance when both cells
 *       parse as numbers.
 *   R4  extra-character outlier (ERROR) — a NUMERIC cell that parses but
 *       falls outside its configured (min, max) range. Range bounds only,
 *       no digit-count heuristics: range config is auditable.
 *   R5  structured-vs-free-text dose contradiction (WARN) — the structured
 *       dose column (`<int> pill(s), <int>/day`) disagrees on pills/day
 *       with the free-text sig. Sigs outside the grammar yield no finding.
 *
 * Everything here is pure: same inputs, same findings, in (record, rule)
 * order.
 */

#pragma once

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pseudovault/detail/kvfile.hpp"
#include "pseudovault/errors.hpp"
#include "pseudovault/schema.hpp"

namespace pseudovault {

/// A pre-developed coded item list; lookup is exact and case-sensitive.
struct vocabulary {
    std::set<std::string> terms;
    std::string name;
    std::string version;

    bool contains(std::string_view term) const {
        return terms.find(std::string(term)) != terms.end();
    }
};

/// One term per line, UTF-8; duplicate lines collapse.
inline vocabulary load_vocabulary(std::string_view bytes,
                                  std::string name = {},
                                  std::string version = {}) {
    if (!detail::valid_utf8(bytes)) {
        throw error(errc::encoding, "vocabulary is not valid UTF-8");
    }
    vocabulary vocab;
    vocab.name = std::move(name);
    vocab.version = std::move(version);
    while (!bytes.empty()) {
        const std::size_t eol = bytes.find('\n');
        std::string_view line =
            eol == std::string_view::npos ? bytes : bytes.substr(0, eol);
        bytes.remove_prefix(eol == std::string_view::npos ? bytes.size()
                                                          : eol + 1);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!line.empty()) vocab.terms.insert(std::string(line));
    }
    if (vocab.terms.empty()) {
        throw error(errc::empty_vocabulary, "vocabulary contains no terms");
    }
    return vocab;
}

enum class severity : std::uint8_t { warn, error };

constexpr std::string_view to_string(severity s) noexcept {
    return s == severity::warn ? "WARN" : "ERROR";
}

/// One lint result, anchored to a record/column location.
struct finding {
    std::string rule;  ///< "R1".."R5"
    severity sev{severity::warn};
    std::size_t record_index{0};  ///< 0-based
    std::string column;
    std::string message;

    friend bool operator==(const finding&, const finding&) = default;
};

struct conversion_pair {
    std::string column_a;
    std::string column_b;
    double factor{1.0};
    double tolerance{0.0};
};

struct numeric_bounds {
    double min{0.0};
    double max{0.0};
};

struct dose_pair {
    std::string structured_column;
    std::string sig_column;
};

struct lint_config {
    std::set<std::string> enabled_rules{"R1", "R2", "R3", "R4", "R5"};
    std::vector<conversion_pair> r3_pairs;
    std::map<std::string, numeric_bounds> r4_bounds;
    std::vector<dose_pair> r5_pairs;
    std::size_t r2_min_length{20};
};

namespace detail {

inline std::string lowercase(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
        return static_cast<char>(std::tolower(c));
    });
    return out;
}

inline std::optional<int> parse_count_word(std::string_view token) {
    static const std::map<std::string, int, std::less<>> words = {
        {"one", 1}, {"two", 2},   {"three", 3}, {"four", 4}, {"five", 5},
        {"six", 6}, {"seven", 7}, {"eight", 8}, {"nine", 9}, {"ten", 10},
    };
    if (!token.empty() &&
        std::all_of(token.begin(), token.end(),
                    [](unsigned char c) { return c >= '0' && c <= '9'; })) {
        if (token.size() > 4) return std::nullopt;
        return std::stoi(std::string(token));
    }
    const auto it = words.find(token);
    if (it != words.end()) return it->second;
    return std::nullopt;
}

/// `<int> pill(s), <int>/day` -> pills per day, or nullopt.
inline std::optional<int> parse_structured_dose(std::string_view cell) {
    const std::string text = lowercase(trim(cell));
    std::size_t pos = 0;
    const auto skip_spaces = [&] {
        while (pos < text.size() && text[pos] == ' ') ++pos;
    };
    const auto read_int = [&]() -> std::optional<int> {
        std::size_t start = pos;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
            ++pos;
        }
        if (pos == start || pos - start > 4) return std::nullopt;
        return std::stoi(text.substr(start, pos - start));
    };
    const auto read_literal = [&](std::string_view literal) {
        if (text.compare(pos, literal.size(), literal) == 0) {
            pos += literal.size();
            return true;
        }
        return false;
    };

    skip_spaces();
    const auto count = read_int();
    if (!count) return std::nullopt;
    skip_spaces();
    if (!read_literal("pills") && !read_literal("pill")) return std::nullopt;
    skip_spaces();
    if (!read_literal(",")) return std::nullopt;
    skip_spaces();
    const auto frequency = read_int();
    if (!frequency) return std::nullopt;
    skip_spaces();
    if (!read_literal("/")) return std::nullopt;
    skip_spaces();
    if (!read_literal("day")) return std::nullopt;
    skip_spaces();
    if (pos != text.size()) return std::nullopt;
    return *count * *frequency;
}

/// Free-text sig grammar:
///   `<count> pill(s) <count> time(s) a day`
///   `<count> pill(s) in the morning [and <count> pill(s) in the evening]`
/// Counts are digits or the words one..ten. Anything else is unparseable
/// and yields no finding.
inline std::optional<int> parse_sig(std::string_view cell) {
    std::istringstream stream{lowercase(trim(cell))};
    std::vector<std::string> tokens;
    std::string token;
    while (stream >> token) tokens.push_back(token);

    std::size_t pos = 0;
    const auto next = [&]() -> std::optional<std::string> {
        if (pos >= tokens.size()) return std::nullopt;
        return tokens[pos++];
    };
    const auto expect = [&](std::string_view literal) {
        const auto t = next();
        return t && *t == literal;
    };
    const auto read_count = [&]() -> std::optional<int> {
        const auto t = next();
        if (!t) return std::nullopt;
        return parse_count_word(*t);
    };
    const auto read_pill = [&]() {
        const auto t = next();
        return t && (*t == "pill" || *t == "pills");
    };

    const auto first = read_count();
    if (!first || !read_pill()) return std::nullopt;

    if (pos < tokens.size() && (tokens[pos] == "in")) {
        // morning/evening form
        if (!expect("in") || !expect("the") || !expect("morning")) {
            return std::nullopt;
        }
        int total = *first;
        if (pos == tokens.size()) return total;
        if (!expect("and")) return std::nullopt;
        const auto second = read_count();
        if (!second || !read_pill()) return std::nullopt;
        if (!expect("in") || !expect("the") || !expect("evening")) {
            return std::nullopt;
        }
        if (pos != tokens.size()) return std::nullopt;
        return total + *second;
    }

    // times-a-day form
    const auto frequency = read_count();
    if (!frequency) return std::nullopt;
    const auto t = next();
    if (!t || (*t != "time" && *t != "times")) return std::nullopt;
    if (!expect("a") || !expect("day")) return std::nullopt;
    if (pos != tokens.size()) return std::nullopt;
    return *first * *frequency;
}

inline std::string format_double(double value) {
    std::ostringstream out;
    out << value;
    return out.str();
}

}  // namespace detail

/// Parses a lint configuration file. Keys:
///   rules         = R1,R2,R3,R4,R5         (default: all)
///   r2_min_length = 20
///   r3_pair       = col_a, col_b, factor, tolerance   (repeatable)
///   r4_bounds     = column, min, max                  (repeatable)
///   r5_pair       = structured_col, sig_col           (repeatable)
inline lint_config load_lint_config(std::string_view text) {
    lint_config cfg;
    for (const auto& entry : detail::parse_kv(text)) {
        const std::string where = "line " + std::to_string(entry.line) + ": ";
        if (entry.key == "rules") {
            cfg.enabled_rules.clear();
            for (const auto& rule : detail::split_list(entry.value)) {
                if (rule != "R1" && rule != "R2" && rule != "R3" &&
                    rule != "R4" && rule != "R5") {
                    throw error(errc::config,
                                where + "unknown rule \"" + rule + "\"");
                }
                cfg.enabled_rules.insert(rule);
            }
        } else if (entry.key == "r2_min_length") {
            const auto value = detail::parse_number(entry.value);
            if (!value || *value < 1 || *value != static_cast<int>(*value)) {
                throw error(errc::config,
                            where + "r2_min_length must be an integer >= 1");
            }
            cfg.r2_min_length = static_cast<std::size_t>(*value);
        } else if (entry.key == "r3_pair") {
            const auto parts = detail::split_list(entry.value);
            if (parts.size() != 4) {
                throw error(errc::config,
                            where + "expected `col_a, col_b, factor, "
                                    "tolerance`");
            }
            const auto factor = detail::parse_number(parts[2]);
            const auto tolerance = detail::parse_number(parts[3]);
            if (!factor || *factor <= 0 || !tolerance || *tolerance < 0) {
                throw error(errc::config,
                            where + "factor must be > 0 and tolerance >= 0");
            }
            cfg.r3_pairs.push_back(
                conversion_pair{parts[0], parts[1], *factor, *tolerance});
        } else if (entry.key == "r4_bounds") {
            const auto parts = detail::split_list(entry.value);
            if (parts.size() != 3) {
                throw error(errc::config,
                            where + "expected `column, min, max`");
            }
            const auto min = detail::parse_number(parts[1]);
            const auto max = detail::parse_number(parts[2]);
            if (!min || !max || !(*min < *max)) {
                throw error(errc::config, where + "bounds need min < max");
            }
            cfg.r4_bounds[parts[0]] = numeric_bounds{*min, *max};
        } else if (entry.key == "r5_pair") {
            const auto parts = detail::split_list(entry.value);
            if (parts.size() != 2) {
                throw error(errc::config,
                            where + "expected `structured_col, sig_col`");
            }
            cfg.r5_pairs.push_back(dose_pair{parts[0], parts[1]});
        } else {
            throw error(errc::config,
                        where + "unknown key \"" + entry.key + "\"");
        }
    }
    return cfg;
}

/// Runs the enabled rules over `d`. Pure; findings come back ordered by
/// (record_index, rule, column). Throws CONFIG when the configuration
/// references a column the schema does not have.
inline std::vector<finding> run_lints(const dataset& d,
                                      const vocabulary& vocab,
                                      const lint_config& cfg) {
    const auto& columns = d.schema.columns;
    const auto require_column = [&](const std::string& name) -> int {
        const int idx = d.schema.index_of(name);
        if (idx < 0) {
            throw error(errc::config,
                        "configured column \"" + name +
                            "\" does not exist in the schema");
        }
        return idx;
    };
    for (const auto& pair : cfg.r3_pairs) {
        require_column(pair.column_a);
        require_column(pair.column_b);
    }
    for (const auto& [name, bounds] : cfg.r4_bounds) {
        const int idx = require_column(name);
        if (columns[idx].kind != column_kind::numeric) {
            throw error(errc::config, "r4_bounds column \"" + name +
                                          "\" is not NUMERIC");
        }
    }
    for (const auto& pair : cfg.r5_pairs) {
        require_column(pair.structured_column);
        require_column(pair.sig_column);
    }

    std::vector<finding> findings;
    const bool r1 = cfg.enabled_rules.count("R1") > 0;
    const bool r2 = cfg.enabled_rules.count("R2") > 0;
    const bool r3 = cfg.enabled_rules.count("R3") > 0;
    const bool r4 = cfg.enabled_rules.count("R4") > 0;
    const bool r5 = cfg.enabled_rules.count("R5") > 0;

    // R1: coded cells must come from the vocabulary.
    if (r1) {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (columns[c].kind != column_kind::coded) continue;
            for (std::size_t r = 0; r < d.records.size(); ++r) {
                const std::string& cell = d.records[r][c];
                if (!vocab.contains(cell)) {
                    findings.push_back(finding{
                        "R1", severity::error, r, columns[c].name,
                        "coded value \"" + cell + "\" is not in vocabulary \"" +
                            vocab.name + "\""});
                }
            }
        }
    }

    // R2: identical long text repeated within one identifying key.
    if (r2) {
        std::vector<std::size_t> key_columns;
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (columns[c].cls == field_class::identifying) {
                key_columns.push_back(c);
            }
        }
        if (!key_columns.empty()) {
            for (std::size_t c = 0; c < columns.size(); ++c) {
                if (columns[c].kind != column_kind::text) continue;
                if (columns[c].cls == field_class::identifying) continue;
                std::map<std::string, std::size_t> first_seen;
                for (std::size_t r = 0; r < d.records.size(); ++r) {
                    const std::string& cell = d.records[r][c];
                    if (cell.size() < cfg.r2_min_length) continue;
                    std::string key;
                    for (const std::size_t kc : key_columns) {
                        key += d.records[r][kc];
                        key += '\x1f';
                    }
                    key += cell;
                    const auto [it, inserted] = first_seen.emplace(key, r);
                    if (!inserted) {
                        findings.push_back(finding{
                            "R2", severity::warn, r, columns[c].name,
                            "identical text already entered for the same "
                            "identity in record " +
                                std::to_string(it->second)});
                    }
                }
            }
        }
    }

    // R3: paired columns must agree up to the conversion factor.
    if (r3) {
        for (const auto& pair : cfg.r3_pairs) {
            const auto a_idx =
                static_cast<std::size_t>(d.schema.index_of(pair.column_a));
            const auto b_idx =
                static_cast<std::size_t>(d.schema.index_of(pair.column_b));
            for (std::size_t r = 0; r < d.records.size(); ++r) {
                const auto a = detail::parse_number(d.records[r][a_idx]);
                const auto b = detail::parse_number(d.records[r][b_idx]);
                if (!a || !b) continue;
                const double expected = *b * pair.factor;
                bool implausible;
                if (expected == 0.0) {
                    implausible = *a != 0.0;
                } else {
                    implausible = std::abs(*a - expected) /
                                      std::abs(expected) >
                                  pair.tolerance;
                }
                if (implausible) {
                    findings.push_back(finding{
                        "R3", severity::error, r, pair.column_a,
                        "value " + detail::format_double(*a) +
                            " does not match " + pair.column_b + " * " +
                            detail::format_double(pair.factor) + " = " +
                            detail::format_double(expected) +
                            " within tolerance " +
                            detail::format_double(pair.tolerance)});
                }
            }
        }
    }

    // R4: numeric cells must stay inside their configured range.
    if (r4) {
        for (const auto& [name, bounds] : cfg.r4_bounds) {
            const auto idx =
                static_cast<std::size_t>(d.schema.index_of(name));
            for (std::size_t r = 0; r < d.records.size(); ++r) {
                const auto value = detail::parse_number(d.records[r][idx]);
                if (!value) continue;
                if (*value < bounds.min || *value > bounds.max) {
                    findings.push_back(finding{
                        "R4", severity::error, r, name,
                        "value " + detail::format_double(*value) +
                            " outside configured range [" +
                            detail::format_double(bounds.min) + ", " +
                            detail::format_double(bounds.max) + "]"});
                }
            }
        }
    }

    // R5: structured dose and free-text sig must agree on pills/day.
    if (r5) {
        for (const auto& pair : cfg.r5_pairs) {
            const auto s_idx = static_cast<std::size_t>(
                d.schema.index_of(pair.structured_column));
            const auto t_idx =
                static_cast<std::size_t>(d.schema.index_of(pair.sig_column));
            for (std::size_t r = 0; r < d.records.size(); ++r) {
                const auto structured =
                    detail::parse_structured_dose(d.records[r][s_idx]);
                const auto sig = detail::parse_sig(d.records[r][t_idx]);
                if (!structured || !sig) continue;
                if (*structured != *sig) {
                    findings.push_back(finding{
                        "R5", severity::warn, r, pair.sig_column,
                        "structured dose says " +
                            std::to_string(*structured) +
                            " pills/day, free-text sig says " +
                            std::to_string(*sig)});
                }
            }
        }
    }

    std::stable_sort(findings.begin(), findings.end(),
                     [](const finding& x, const finding& y) {
                         if (x.record_index != y.record_index) {
                             return x.record_index < y.record_index;
                         }
                         if (x.rule != y.rule) return x.rule < y.rule;
                         return x.column < y.column;
                     });
    return findings;
}

}  // namespace pseudovault
