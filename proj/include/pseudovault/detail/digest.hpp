/**
 * @file digest.hpp
 * @brief Checksums and digests for store files and release manifests:
 *        zlib CRC-32 for corruption detection, OpenSSL SHA-256 for the
 *        credential digest and release content digest.
 */

#pragma once

#include <openssl/evp.h>
#include <zlib.h>

#include <cstdint>
#include <string>
#include <string_view>

#include "pseudovault/errors.hpp"

namespace pseudovault::detail {

inline std::uint32_t crc32_of(std::string_view bytes) {
    ::uLong crc = ::crc32(0L, Z_NULL, 0);
    crc = ::crc32(crc, reinterpret_cast<const ::Bytef*>(bytes.data()),
                  static_cast<::uInt>(bytes.size()));
    return static_cast<std::uint32_t>(crc);
}

inline std::string to_hex(const unsigned char* data, std::size_t size) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string hex(size * 2, '0');
    for (std::size_t i = 0; i < size; ++i) {
        hex[2 * i] = digits[data[i] >> 4];
        hex[2 * i + 1] = digits[data[i] & 0x0F];
    }
    return hex;
}

inline std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int digest_len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &digest_len,
                   EVP_sha256(), nullptr) != 1) {
        throw error(errc::io, "SHA-256 computation failed");
    }
    return to_hex(digest, digest_len);
}

/// Fixed-width uppercase CRC-32 line used to seal store files.
inline std::string crc32_line(std::string_view bytes) {
    static constexpr char digits[] = "0123456789ABCDEF";
    const std::uint32_t crc = crc32_of(bytes);
    std::string line = "#crc32=";
    for (int shift = 28; shift >= 0; shift -= 4) {
        line += digits[(crc >> shift) & 0xF];
    }
    line += '\n';
    return line;
}

/// Filename-safe encoding for mapping-table columns: everything outside
/// [A-Za-z0-9._-] becomes %XX.
inline std::string percent_encode(std::string_view text) {
    static constexpr char digits[] = "0123456789ABCDEF";
    std::string out;
    out.reserve(text.size());
    for (const char c : text) {
        const auto u = static_cast<unsigned char>(c);
        const bool safe = (u >= 'A' && u <= 'Z') || (u >= 'a' && u <= 'z') ||
                          (u >= '0' && u <= '9') || u == '.' || u == '_' ||
                          u == '-';
        if (safe) {
            out += c;
        } else {
            out += '%';
            out += digits[u >> 4];
            out += digits[u & 0x0F];
        }
    }
    return out;
}

inline int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

inline std::string percent_decode(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '%' && i + 2 < text.size()) {
            const int hi = hex_value(text[i + 1]);
            const int lo = hex_value(text[i + 2]);
            if (hi >= 0 && lo >= 0) {
                out += static_cast<char>((hi << 4) | lo);
                i += 2;
                continue;
            }
        }
        out += text[i];
    }
    return out;
}

}  // namespace pseudovault::detail
