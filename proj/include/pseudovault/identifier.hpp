/**
 * @file identifier.hpp
 * @brief 16-digit healthcare identifiers: ISO 7812 digit structure with a
 *        Luhn mod-10 check digit.
 *
 * Layout (left to right): a single-digit major industry identifier (MII),
 * which is also the first digit of the six-digit issuer identifier number
 * (IIN, digits 1-6), a nine-digit individual account identifier (IAI,
 * digits 7-15), and the Luhn check digit (digit 16).
 *
 * Inputs are taken bit-exact: whitespace or separators are rejected, never
 * stripped. All operations here are pure and stateless.
 */

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pseudovault/errors.hpp"

namespace pseudovault {

/// Outcome of validate_hi(). Errors are data here, never exceptions.
struct validation_report {
    bool well_formed{false};  ///< exactly 16 decimal digits
    bool luhn_valid{false};   ///< well-formed and Luhn mod-10 == 0
    std::vector<errc> failures;  ///< LENGTH / NON_DIGIT / CHECKSUM, in that order

    friend bool operator==(const validation_report&,
                           const validation_report&) = default;
};

/// A parsed, Luhn-valid 16-digit healthcare identifier.
class healthcare_identifier {
public:
    static constexpr std::size_t digit_count = 16;

    int mii() const { return digits_[0]; }
    std::string iin() const { return slice(0, 6); }
    std::string iai() const { return slice(6, 9); }
    int check_digit() const { return digits_[15]; }

    /// The full 16-character digit string.
    std::string text() const { return slice(0, digit_count); }

    const std::array<std::uint8_t, digit_count>& digits() const {
        return digits_;
    }

    friend bool operator==(const healthcare_identifier&,
                           const healthcare_identifier&) = default;

private:
    std::string slice(std::size_t offset, std::size_t count) const {
        std::string out(count, '0');
        for (std::size_t i = 0; i < count; ++i) {
            out[i] = static_cast<char>('0' + digits_[offset + i]);
        }
        return out;
    }

    friend healthcare_identifier parse_hi(std::string_view);
    friend healthcare_identifier generate_hi(std::string_view,
                                             std::string_view);

    std::array<std::uint8_t, digit_count> digits_{};
};

namespace detail {

/// Luhn mod-10 sum: every second digit counting from the rightmost is
/// doubled, digits above 9 are reduced by 9.
inline int luhn_sum(std::span<const std::uint8_t> digits) {
    int sum = 0;
    bool doubled = false;
    for (std::size_t i = digits.size(); i > 0; --i) {
        int d = digits[i - 1];
        if (doubled) {
            d *= 2;
            if (d > 9) d -= 9;
        }
        sum += d;
        doubled = !doubled;
    }
    return sum;
}

/// Converts text to digit values; throws on the first malformed character.
inline std::vector<std::uint8_t> to_digits(std::string_view text,
                                           std::size_t expected,
                                           std::string_view what) {
    if (text.size() != expected) {
        throw error(errc::length, std::string(what) + " must be " +
                                      std::to_string(expected) +
                                      " digits, got " +
                                      std::to_string(text.size()) +
                                      " characters");
    }
    std::vector<std::uint8_t> digits(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c < '0' || c > '9') {
            throw error(errc::non_digit,
                        std::string(what) + " has a non-digit at position " +
                            std::to_string(i + 1));
        }
        digits[i] = static_cast<std::uint8_t>(c - '0');
    }
    return digits;
}

}  // namespace detail

/// Check digit that makes `prefix` + digit Luhn-valid. `prefix` must be
/// exactly 15 decimal digits.
inline int luhn_check_digit(std::string_view prefix) {
    const auto digits = detail::to_digits(prefix, 15, "check-digit prefix");
    // The appended digit lands in the undoubled rightmost position, so it
    // simply tops the doubled-prefix sum up to the next multiple of 10.
    std::vector<std::uint8_t> with_check(digits);
    with_check.push_back(0);
    const int sum = detail::luhn_sum(with_check);
    return (10 - sum % 10) % 10;
}

/// Parses a 16-digit Luhn-valid identifier. Throws LENGTH, NON_DIGIT or
/// CHECKSUM identifying the first failed invariant.
inline healthcare_identifier parse_hi(std::string_view text) {
    const auto digits =
        detail::to_digits(text, healthcare_identifier::digit_count,
                          "healthcare identifier");
    if (detail::luhn_sum(digits) % 10 != 0) {
        throw error(errc::checksum, "Luhn mod-10 check failed");
    }
    healthcare_identifier id;
    std::copy(digits.begin(), digits.end(), id.digits_.begin());
    return id;
}

/// Never throws on bad input; the report carries the failures instead.
inline validation_report validate_hi(std::string_view text) noexcept {
    validation_report report;
    if (text.size() != healthcare_identifier::digit_count) {
        report.failures.push_back(errc::length);
    }
    bool all_digits = true;
    for (const char c : text) {
        if (c < '0' || c > '9') {
            all_digits = false;
            break;
        }
    }
    if (!all_digits) {
        report.failures.push_back(errc::non_digit);
    }
    report.well_formed = report.failures.empty();
    if (report.well_formed) {
        std::array<std::uint8_t, healthcare_identifier::digit_count> digits{};
        for (std::size_t i = 0; i < text.size(); ++i) {
            digits[i] = static_cast<std::uint8_t>(text[i] - '0');
        }
        report.luhn_valid = detail::luhn_sum(digits) % 10 == 0;
        if (!report.luhn_valid) {
            report.failures.push_back(errc::checksum);
        }
    }
    return report;
}

/// Builds iin + iai + Luhn check digit. parse_hi() accepts every result.
inline healthcare_identifier generate_hi(std::string_view iin,
                                         std::string_view iai) {
    const auto iin_digits = detail::to_digits(iin, 6, "IIN");
    const auto iai_digits = detail::to_digits(iai, 9, "IAI");
    std::string prefix;
    prefix.reserve(15);
    prefix.append(iin);
    prefix.append(iai);
    const int check = luhn_check_digit(prefix);

    healthcare_identifier id;
    std::copy(iin_digits.begin(), iin_digits.end(), id.digits_.begin());
    std::copy(iai_digits.begin(), iai_digits.end(), id.digits_.begin() + 6);
    id.digits_[15] = static_cast<std::uint8_t>(check);
    return id;
}

/// Issuer allow-list hook. An empty list (the shipped default) permits any
/// six-digit IIN; a populated list restricts to its members.
inline bool iin_allowed(const healthcare_identifier& id,
                        std::span<const std::string> allow_list) {
    if (allow_list.empty()) return true;
    const std::string iin = id.iin();
    for (const auto& allowed : allow_list) {
        if (allowed == iin) return true;
    }
    return false;
}

}  // namespace pseudovault
