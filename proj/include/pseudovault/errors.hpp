/**
 * @file errors.hpp
 * @brief Error codes and the exception type shared by all pseudovault modules.
 */

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pseudovault {

/// Machine-parseable failure codes. The CLI prints them as `CODE: message`.
enum class errc {
    length,                 ///< identifier has the wrong number of characters
    non_digit,              ///< identifier contains a non-decimal character
    checksum,               ///< Luhn mod-10 over the identifier is nonzero
    header_mismatch,        ///< CSV header row does not match the schema
    ragged_row,             ///< CSV row with the wrong cell count
    encoding,               ///< input is not valid UTF-8
    empty_vocabulary,       ///< vocabulary file contains no terms
    config,                 ///< bad column reference or malformed configuration
    store_write,            ///< mapping store could not be written
    store_colocation,       ///< store and release roots are not separate
    invalid_hi,             ///< dataset contains a non-Luhn-valid healthcare identifier
    token_space_exhausted,  ///< mapping table load exceeds half the token space
    auth,                   ///< credential missing or rejected
    unknown_token,          ///< token not present in the mapping table
    epoch_mismatch,         ///< release epoch does not match the store epoch
    exists,                 ///< store already initialised at this root
    io,                     ///< filesystem failure
    corrupt,                ///< store header or table failed its checksum
    lock,                   ///< advisory store lock is held elsewhere
};

constexpr std::string_view to_string(errc code) noexcept {
    switch (code) {
        case errc::length: return "LENGTH";
        case errc::non_digit: return "NON_DIGIT";
        case errc::checksum: return "CHECKSUM";
        case errc::header_mismatch: return "HEADER_MISMATCH";
        case errc::ragged_row: return "RAGGED_ROW";
        case errc::encoding: return "ENCODING";
        case errc::empty_vocabulary: return "EMPTY_VOCABULARY";
        case errc::config: return "CONFIG";
        case errc::store_write: return "STORE_WRITE";
        case errc::store_colocation: return "STORE_COLOCATION";
        case errc::invalid_hi: return "INVALID_HI";
        case errc::token_space_exhausted: return "TOKEN_SPACE_EXHAUSTED";
        case errc::auth: return "AUTH";
        case errc::unknown_token: return "UNKNOWN_TOKEN";
        case errc::epoch_mismatch: return "EPOCH_MISMATCH";
        case errc::exists: return "EXISTS";
        case errc::io: return "IO";
        case errc::corrupt: return "CORRUPT";
        case errc::lock: return "LOCK";
    }
    return "UNKNOWN";
}

/// Exception carrying a machine code plus a human message.
class error : public std::runtime_error {
public:
    error(errc code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message),
          code_(code) {}

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

}  // namespace pseudovault
