/**
 * @file schema.hpp
 * @brief Tabular record ingestion and emission with per-column integrity
 *        classifications.
 *
 * The interchange format is CSV with a mandatory header row, UTF-8, RFC 4180
 * quoting, LF newlines on output. Cells are preserved verbatim: no trimming,
 * no type coercion at ingestion. NUMERIC/DATE interpretation happens lazily
 * in the lint rules so malformed values can be reported instead of rejected.
 *
 * A schema profile file classifies columns, one line per column in order:
 *
 *     Healthcare Identifier = IDENTIFYING, TEXT
 *     Condition = CLEAR, CODED
 */

#pragma once

#include <cstdint>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pseudovault/detail/kvfile.hpp"
#include "pseudovault/errors.hpp"

namespace pseudovault {

/// Integrity class driving which cells are substituted at release time.
enum class field_class : std::uint8_t {
    identifying,
    quasi_identifying,
    sensitive_clear,
    clear,
};

enum class column_kind : std::uint8_t { text, numeric, date, coded };

constexpr std::string_view to_string(field_class c) noexcept {
    switch (c) {
        case field_class::identifying: return "IDENTIFYING";
        case field_class::quasi_identifying: return "QUASI_IDENTIFYING";
        case field_class::sensitive_clear: return "SENSITIVE_CLEAR";
        case field_class::clear: return "CLEAR";
    }
    return "UNKNOWN";
}

constexpr std::string_view to_string(column_kind k) noexcept {
    switch (k) {
        case column_kind::text: return "TEXT";
        case column_kind::numeric: return "NUMERIC";
        case column_kind::date: return "DATE";
        case column_kind::coded: return "CODED";
    }
    return "UNKNOWN";
}

struct column_descriptor {
    std::string name;
    field_class cls{field_class::clear};
    column_kind kind{column_kind::text};

    friend bool operator==(const column_descriptor&,
                           const column_descriptor&) = default;
};

struct schema_descriptor {
    std::vector<column_descriptor> columns;

    /// Index of `name`, or -1 when absent.
    int index_of(std::string_view name) const {
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (columns[i].name == name) return static_cast<int>(i);
        }
        return -1;
    }

    friend bool operator==(const schema_descriptor&,
                           const schema_descriptor&) = default;
};

using record = std::vector<std::string>;

/// Immutable after load. Record order is preserved end to end.
struct dataset {
    schema_descriptor schema;
    std::vector<record> records;
    std::string source_id;  ///< provenance only, not part of equality

    friend bool operator==(const dataset& a, const dataset& b) {
        return a.schema == b.schema && a.records == b.records;
    }
};

namespace detail {

/// True iff `bytes` is well-formed UTF-8 (no overlongs, surrogates or
/// values beyond U+10FFFF).
inline bool valid_utf8(std::string_view bytes) {
    std::size_t i = 0;
    const std::size_t n = bytes.size();
    while (i < n) {
        const auto b0 = static_cast<unsigned char>(bytes[i]);
        if (b0 < 0x80) {
            ++i;
            continue;
        }
        int trailing;
        std::uint32_t cp;
        if ((b0 & 0xE0) == 0xC0) {
            trailing = 1;
            cp = b0 & 0x1F;
        } else if ((b0 & 0xF0) == 0xE0) {
            trailing = 2;
            cp = b0 & 0x0F;
        } else if ((b0 & 0xF8) == 0xF0) {
            trailing = 3;
            cp = b0 & 0x07;
        } else {
            return false;
        }
        if (i + static_cast<std::size_t>(trailing) >= n) return false;
        for (int k = 1; k <= trailing; ++k) {
            const auto b = static_cast<unsigned char>(bytes[i + k]);
            if ((b & 0xC0) != 0x80) return false;
            cp = (cp << 6) | (b & 0x3F);
        }
        static constexpr std::uint32_t min_for[4] = {0, 0x80, 0x800, 0x10000};
        if (cp < min_for[trailing]) return false;              // overlong
        if (cp >= 0xD800 && cp <= 0xDFFF) return false;        // surrogate
        if (cp > 0x10FFFF) return false;
        i += static_cast<std::size_t>(trailing) + 1;
    }
    return true;
}

inline bool needs_quoting(std::string_view cell) {
    return cell.find_first_of(",\"\r\n") != std::string_view::npos;
}

inline void append_csv_cell(std::string& out, std::string_view cell) {
    if (!needs_quoting(cell)) {
        out.append(cell);
        return;
    }
    out.push_back('"');
    for (const char c : cell) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
}

inline void append_csv_row(std::string& out,
                           const std::vector<std::string>& cells) {
    // A lone empty cell would serialize as a blank line, which a reader
    // cannot tell from a trailing newline; quote it explicitly.
    if (cells.size() == 1 && cells[0].empty()) {
        out.append("\"\"\n");
        return;
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i > 0) out.push_back(',');
        append_csv_cell(out, cells[i]);
    }
    out.push_back('\n');
}

/// Single-pass RFC 4180-style reader. Quoted cells may contain commas,
/// doubled quotes and newlines; unquoted cells are taken verbatim.
class csv_reader {
public:
    explicit csv_reader(std::string_view text) : text_(text) {
        // UTF-8 byte-order mark carries no data.
        if (text_.substr(0, 3) == "\xEF\xBB\xBF") {
            text_.remove_prefix(3);
        }
    }

    bool at_end() const { return pos_ >= text_.size(); }

    /// 1-based physical line the next row starts on.
    std::size_t next_line() const { return line_; }

    std::vector<std::string> read_row() {
        std::vector<std::string> cells;
        std::string cell;
        bool in_quotes = false;
        while (pos_ < text_.size()) {
            const char c = text_[pos_];
            if (in_quotes) {
                if (c == '"') {
                    if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '"') {
                        cell.push_back('"');
                        pos_ += 2;
                    } else {
                        in_quotes = false;
                        ++pos_;
                    }
                } else {
                    if (c == '\n') ++line_;
                    cell.push_back(c);
                    ++pos_;
                }
                continue;
            }
            if (c == '"' && cell.empty()) {
                in_quotes = true;
                ++pos_;
            } else if (c == ',') {
                cells.push_back(std::move(cell));
                cell.clear();
                ++pos_;
            } else if (c == '\n' || (c == '\r' && pos_ + 1 < text_.size() &&
                                     text_[pos_ + 1] == '\n')) {
                pos_ += (c == '\r') ? 2 : 1;
                ++line_;
                cells.push_back(std::move(cell));
                return cells;
            } else {
                cell.push_back(c);
                ++pos_;
            }
        }
        cells.push_back(std::move(cell));
        return cells;
    }

private:
    std::string_view text_;
    std::size_t pos_{0};
    std::size_t line_{1};
};

}  // namespace detail

/// Parses CSV bytes against `schema`. The header row must match the schema
/// column names in order. Cells are kept byte-exact.
inline dataset load_dataset(std::string_view bytes,
                            const schema_descriptor& schema,
                            std::string source_id = {}) {
    if (!detail::valid_utf8(bytes)) {
        throw error(errc::encoding, "input is not valid UTF-8");
    }
    detail::csv_reader reader(bytes);
    if (reader.at_end()) {
        throw error(errc::header_mismatch, "missing header row");
    }
    const auto header = reader.read_row();
    if (header.size() != schema.columns.size()) {
        throw error(errc::header_mismatch,
                    "header has " + std::to_string(header.size()) +
                        " columns, schema expects " +
                        std::to_string(schema.columns.size()));
    }
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] != schema.columns[i].name) {
            throw error(errc::header_mismatch,
                        "column " + std::to_string(i + 1) + " is \"" +
                            header[i] + "\", schema expects \"" +
                            schema.columns[i].name + "\"");
        }
    }

    dataset d;
    d.schema = schema;
    d.source_id = std::move(source_id);
    while (!reader.at_end()) {
        const std::size_t row_line = reader.next_line();
        auto cells = reader.read_row();
        if (cells.size() != schema.columns.size()) {
            throw error(errc::ragged_row,
                        "line " + std::to_string(row_line) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(schema.columns.size()));
        }
        d.records.push_back(std::move(cells));
    }
    return d;
}

/// Serializes a dataset; load_dataset() round-trips the result bit-exactly.
inline std::string write_dataset(const dataset& d) {
    std::string out;
    std::vector<std::string> header;
    header.reserve(d.schema.columns.size());
    for (const auto& col : d.schema.columns) header.push_back(col.name);
    detail::append_csv_row(out, header);
    for (const auto& rec : d.records) {
        detail::append_csv_row(out, rec);
    }
    return out;
}

inline void write_dataset(const dataset& d, std::ostream& out) {
    out << write_dataset(d);
}

inline field_class parse_field_class(std::string_view text) {
    if (text == "IDENTIFYING") return field_class::identifying;
    if (text == "QUASI_IDENTIFYING") return field_class::quasi_identifying;
    if (text == "SENSITIVE_CLEAR") return field_class::sensitive_clear;
    if (text == "CLEAR") return field_class::clear;
    throw error(errc::config, "unknown field class \"" + std::string(text) +
                                  "\"");
}

inline column_kind parse_column_kind(std::string_view text) {
    if (text == "TEXT") return column_kind::text;
    if (text == "NUMERIC") return column_kind::numeric;
    if (text == "DATE") return column_kind::date;
    if (text == "CODED") return column_kind::coded;
    throw error(errc::config,
                "unknown column kind \"" + std::string(text) + "\"");
}

/// Parses a schema profile: one `name = class,kind` line per column, in
/// column order.
inline schema_descriptor load_schema(std::string_view text) {
    schema_descriptor schema;
    for (const auto& entry : detail::parse_kv(text)) {
        const auto parts = detail::split_list(entry.value);
        if (parts.size() != 2) {
            throw error(errc::config,
                        "line " + std::to_string(entry.line) +
                            ": expected `name = class,kind`");
        }
        if (schema.index_of(entry.key) >= 0) {
            throw error(errc::config,
                        "duplicate column \"" + entry.key + "\"");
        }
        schema.columns.push_back(column_descriptor{
            entry.key, parse_field_class(parts[0]),
            parse_column_kind(parts[1])});
    }
    if (schema.columns.empty()) {
        throw error(errc::config, "schema profile defines no columns");
    }
    return schema;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw error(errc::io, "cannot open " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) {
        throw error(errc::io, "read failed for " + path);
    }
    return buffer.str();
}

inline void write_file(const std::string& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw error(errc::io, "cannot create " + path);
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
        throw error(errc::io, "write failed for " + path);
    }
}

}  // namespace pseudovault
