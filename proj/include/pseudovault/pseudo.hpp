/**
 * @file pseudo.hpp
 * @brief Reversible pseudonymisation of identifying columns.
 *
 * Identifying cells are substituted with tokens drawn uniformly over
 * [A-Z0-9]; the original <-> token mapping lives only in the secure store.
 * Tokens carry no information derived from the original (no hashing: a
 * hashed token is dictionary-attackable), so possession of released data
 * alone recovers nothing — the sensitive values are hidden while the
 * relationships between records stay queryable.
 *
 * Two issuance modes:
 *   per_entity     — one token per distinct original, so equality patterns
 *                    survive the release (linkage/analysis preserved).
 *   per_occurrence — a fresh token per cell, so repeats of one original
 *                    are unlinkable within the release.
 *
 * Rotation reissues every active mapping under the next epoch; superseded
 * entries stay in the store so historical releases remain reversible when
 * pinned to their epoch.
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pseudovault/detail/digest.hpp"
#include "pseudovault/detail/kvfile.hpp"
#include "pseudovault/errors.hpp"
#include "pseudovault/identifier.hpp"
#include "pseudovault/schema.hpp"
#include "pseudovault/store.hpp"

namespace pseudovault {

enum class pseudonym_mode : std::uint8_t { per_entity, per_occurrence };

constexpr std::string_view to_string(pseudonym_mode m) noexcept {
    return m == pseudonym_mode::per_entity ? "per_entity" : "per_occurrence";
}

struct pseudonym_policy {
    pseudonym_mode mode{pseudonym_mode::per_entity};
    std::size_t token_length{8};
    std::optional<std::uint64_t> seed;
    std::vector<std::string> columns;     ///< IDENTIFYING columns to replace
    std::vector<std::string> hi_columns;  ///< cells must be Luhn-valid HIs
    bool enforce_hi_validity{true};
};

/// Policy snapshot plus the content digest of the released bytes. Written
/// next to the release; reidentification checks it for tamper evidence.
struct release_manifest {
    std::int64_t epoch{1};
    pseudonym_mode mode{pseudonym_mode::per_entity};
    std::size_t token_length{8};
    std::optional<std::uint64_t> seed;
    std::vector<std::string> columns;
    std::string digest_sha256;
};

struct release_bundle {
    dataset released;
    std::filesystem::path store_root;
    std::int64_t epoch{1};
    release_manifest manifest;
};

namespace detail {

/// Uniform tokens over [A-Z0-9] via rejection sampling on 6-bit chunks of
/// the raw 64-bit stream; bit-exact across platforms for a given seed.
class token_generator {
public:
    static constexpr std::string_view alphabet =
        "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ";

    token_generator(std::uint64_t seed, std::size_t length)
        : rng_(seed), length_(length) {}

    std::string next() {
        std::string token(length_, '0');
        for (std::size_t i = 0; i < length_; ++i) {
            token[i] = alphabet[next_index()];
        }
        return token;
    }

private:
    unsigned next_index() {
        while (true) {
            if (available_ < 6) {
                bits_ = rng_();
                available_ = 64;
            }
            const unsigned v = bits_ & 0x3F;
            bits_ >>= 6;
            available_ -= 6;
            if (v < alphabet.size()) return v;
        }
    }

    std::mt19937_64 rng_;
    std::size_t length_;
    std::uint64_t bits_{0};
    int available_{0};
};

inline long double token_space(std::size_t length) {
    return std::pow(static_cast<long double>(token_generator::alphabet.size()),
                    static_cast<long double>(length));
}

inline std::uint64_t fresh_seed() {
    std::random_device device;
    return (static_cast<std::uint64_t>(device()) << 32) ^ device();
}

inline bool token_alphabet_only(std::string_view text) {
    for (const char c : text) {
        if (!((c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9'))) return false;
    }
    return true;
}

/// Originals that could hide inside a token: token-alphabet strings of
/// length 4 up to the token length. Anything longer cannot fit and anything
/// with other characters cannot collide.
inline std::vector<std::string> containable_originals(
    const store_handle& store, const std::string& column,
    const std::set<std::string>& release_originals, std::size_t length) {
    std::set<std::string> risky;
    const auto consider = [&](const std::string& value) {
        if (value.size() >= 4 && value.size() <= length &&
            token_alphabet_only(value)) {
            risky.insert(value);
        }
    };
    for (const auto& value : release_originals) consider(value);
    for (const auto& entry : store.entries(column)) consider(entry.original);
    return {risky.begin(), risky.end()};
}

/// Issues one token unique within the column table, never equal to any
/// original, and never containing an original as a substring.
inline std::string issue_token(
    token_generator& generator, const store_handle& store,
    const std::string& column, const std::set<std::string>& batch_tokens,
    const std::set<std::string>& release_originals,
    const std::vector<std::string>& risky_substrings, std::size_t length) {
    const long double load =
        static_cast<long double>(store.token_count(column) +
                                 batch_tokens.size() + 1);
    if (load > token_space(length) / 2.0L) {
        throw error(errc::token_space_exhausted,
                    "mapping table \"" + column +
                        "\" would exceed half its token space at length " +
                        std::to_string(length));
    }
    for (int attempts = 0; attempts < 100000; ++attempts) {
        std::string candidate = generator.next();
        if (store.has_token(column, candidate)) continue;
        if (batch_tokens.count(candidate) > 0) continue;
        if (store.has_original(column, candidate)) continue;
        if (release_originals.count(candidate) > 0) continue;
        bool leaks = false;
        for (const auto& value : risky_substrings) {
            if (candidate.find(value) != std::string::npos) {
                leaks = true;
                break;
            }
        }
        if (leaks) continue;
        return candidate;
    }
    throw error(errc::token_space_exhausted,
                "no non-leaking token available for table \"" + column +
                    "\" at length " + std::to_string(length));
}

}  // namespace detail

/// Parses a pseudonym policy file. Keys:
///   mode         = per_entity | per_occurrence   (default per_entity)
///   token_length = 8                              (>= 3)
///   seed         = 42                             (optional)
///   columns      = Healthcare Identifier, Name
///   hi_columns   = Healthcare Identifier          (optional; when absent,
///                  any policy column named exactly "Healthcare Identifier")
inline pseudonym_policy load_policy(std::string_view text) {
    pseudonym_policy policy;
    bool saw_hi_columns = false;
    for (const auto& entry : detail::parse_kv(text)) {
        const std::string where = "line " + std::to_string(entry.line) + ": ";
        if (entry.key == "mode") {
            if (entry.value == "per_entity") {
                policy.mode = pseudonym_mode::per_entity;
            } else if (entry.value == "per_occurrence") {
                policy.mode = pseudonym_mode::per_occurrence;
            } else {
                throw error(errc::config, where + "mode must be per_entity "
                                                  "or per_occurrence");
            }
        } else if (entry.key == "token_length") {
            const auto value = detail::parse_number(entry.value);
            if (!value || *value != static_cast<int>(*value)) {
                throw error(errc::config,
                            where + "token_length must be an integer");
            }
            policy.token_length = static_cast<std::size_t>(*value);
        } else if (entry.key == "seed") {
            try {
                policy.seed = std::stoull(entry.value);
            } catch (const std::exception&) {
                throw error(errc::config, where + "seed must be a 64-bit "
                                                  "unsigned integer");
            }
        } else if (entry.key == "columns") {
            policy.columns = detail::split_list(entry.value);
        } else if (entry.key == "hi_columns") {
            policy.hi_columns = detail::split_list(entry.value);
            saw_hi_columns = true;
        } else {
            throw error(errc::config,
                        where + "unknown key \"" + entry.key + "\"");
        }
    }
    if (policy.token_length < 3 || policy.token_length > 16) {
        throw error(errc::config, "token_length must be between 3 and 16");
    }
    if (policy.columns.empty()) {
        throw error(errc::config, "policy must name at least one column");
    }
    if (!saw_hi_columns) {
        for (const auto& column : policy.columns) {
            if (column == "Healthcare Identifier") {
                policy.hi_columns.push_back(column);
            }
        }
    }
    return policy;
}

inline std::string write_manifest(const release_manifest& manifest) {
    std::string out;
    out += "format = 1\n";
    out += "epoch = " + std::to_string(manifest.epoch) + "\n";
    out += "mode = " + std::string(to_string(manifest.mode)) + "\n";
    out += "token_length = " + std::to_string(manifest.token_length) + "\n";
    if (manifest.seed) {
        out += "seed = " + std::to_string(*manifest.seed) + "\n";
    }
    out += "columns = ";
    for (std::size_t i = 0; i < manifest.columns.size(); ++i) {
        if (i > 0) out += ", ";
        out += manifest.columns[i];
    }
    out += "\n";
    out += "digest_sha256 = " + manifest.digest_sha256 + "\n";
    return out;
}

inline release_manifest parse_manifest(std::string_view text) {
    release_manifest manifest;
    bool saw_epoch = false, saw_columns = false, saw_digest = false;
    for (const auto& entry : detail::parse_kv(text)) {
        if (entry.key == "format") {
            if (entry.value != "1") {
                throw error(errc::config, "unsupported manifest format");
            }
        } else if (entry.key == "epoch") {
            manifest.epoch =
                detail::parse_int(entry.value, "manifest", errc::config);
            saw_epoch = true;
        } else if (entry.key == "mode") {
            manifest.mode = entry.value == "per_occurrence"
                                ? pseudonym_mode::per_occurrence
                                : pseudonym_mode::per_entity;
        } else if (entry.key == "token_length") {
            manifest.token_length = static_cast<std::size_t>(
                detail::parse_int(entry.value, "manifest", errc::config));
        } else if (entry.key == "seed") {
            try {
                manifest.seed = std::stoull(entry.value);
            } catch (const std::exception&) {
                throw error(errc::config, "manifest: bad seed value");
            }
        } else if (entry.key == "columns") {
            manifest.columns = detail::split_list(entry.value);
            saw_columns = true;
        } else if (entry.key == "digest_sha256") {
            manifest.digest_sha256 = entry.value;
            saw_digest = true;
        } else {
            throw error(errc::config,
                        "manifest: unknown key \"" + entry.key + "\"");
        }
    }
    if (!saw_epoch || !saw_columns || !saw_digest) {
        throw error(errc::config, "manifest is missing required fields");
    }
    return manifest;
}

/// Substitutes every cell of the policy columns with a token and writes the
/// mappings to the store. Non-identifying columns come through bit-exact.
/// The store must be disjoint from wherever the release will be written;
/// callers enforce that with check_separation() before writing files.
inline release_bundle pseudonymise(const dataset& d,
                                   const pseudonym_policy& policy,
                                   store_handle& store) {
    if (policy.columns.empty()) {
        throw error(errc::config, "policy must name at least one column");
    }
    if (policy.token_length < 3 || policy.token_length > 16) {
        throw error(errc::config, "token_length must be between 3 and 16");
    }
    for (const auto& column : policy.columns) {
        const int idx = d.schema.index_of(column);
        if (idx < 0) {
            throw error(errc::config, "policy column \"" + column +
                                          "\" does not exist");
        }
        if (d.schema.columns[static_cast<std::size_t>(idx)].cls !=
            field_class::identifying) {
            throw error(errc::config, "policy column \"" + column +
                                          "\" is not classed IDENTIFYING");
        }
    }
    if (policy.enforce_hi_validity) {
        for (const auto& column : policy.hi_columns) {
            const int idx = d.schema.index_of(column);
            if (idx < 0) {
                throw error(errc::config, "hi column \"" + column +
                                              "\" does not exist");
            }
            for (std::size_t r = 0; r < d.records.size(); ++r) {
                const auto& cell =
                    d.records[r][static_cast<std::size_t>(idx)];
                if (!validate_hi(cell).luhn_valid) {
                    throw error(errc::invalid_hi,
                                "record " + std::to_string(r) + " column \"" +
                                    column +
                                    "\" is not a Luhn-valid healthcare "
                                    "identifier (use --allow-invalid-hi to "
                                    "release anyway)");
                }
            }
        }
    }

    const bool had_lock = store.lock() == lock_state::exclusive;
    if (!had_lock) store.lock_exclusive();
    try {
        detail::token_generator generator(
            policy.seed ? *policy.seed : detail::fresh_seed(),
            policy.token_length);

        release_bundle bundle;
        bundle.released = d;
        bundle.store_root = store.root();
        bundle.epoch = store.epoch();

        for (const auto& column : policy.columns) {
            const auto col =
                static_cast<std::size_t>(d.schema.index_of(column));

            std::set<std::string> release_originals;
            for (const auto& rec : d.records) {
                release_originals.insert(rec[col]);
            }
            const auto risky = detail::containable_originals(
                store, column, release_originals, policy.token_length);

            std::set<std::string> batch_tokens;
            std::unordered_map<std::string, std::string> entity_tokens;
            std::unordered_map<std::string, std::int64_t> next_occurrence;
            std::vector<mapping_entry> new_entries;

            for (std::size_t r = 0; r < d.records.size(); ++r) {
                const std::string& original = d.records[r][col];
                std::string token;

                if (policy.mode == pseudonym_mode::per_entity) {
                    const auto seen = entity_tokens.find(original);
                    if (seen != entity_tokens.end()) {
                        token = seen->second;
                    } else if (const auto existing =
                                   store.find_active_original(column,
                                                              original)) {
                        token = existing->token;
                        entity_tokens.emplace(original, token);
                    } else {
                        token = detail::issue_token(
                            generator, store, column, batch_tokens,
                            release_originals, risky, policy.token_length);
                        batch_tokens.insert(token);
                        entity_tokens.emplace(original, token);
                        new_entries.push_back(mapping_entry{
                            store.epoch(), true, original, token,
                            store.next_occurrence(column, original)});
                    }
                } else {
                    token = detail::issue_token(
                        generator, store, column, batch_tokens,
                        release_originals, risky, policy.token_length);
                    batch_tokens.insert(token);
                    auto [it, inserted] = next_occurrence.try_emplace(
                        original, store.next_occurrence(column, original));
                    new_entries.push_back(mapping_entry{
                        store.epoch(), true, original, token, it->second});
                    ++it->second;
                }

                bundle.released.records[r][col] = token;
            }

            put_entries(store, column, new_entries);
        }

        bundle.manifest.epoch = bundle.epoch;
        bundle.manifest.mode = policy.mode;
        bundle.manifest.token_length = policy.token_length;
        bundle.manifest.seed = policy.seed;
        bundle.manifest.columns = policy.columns;
        bundle.manifest.digest_sha256 =
            detail::sha256_hex(write_dataset(bundle.released));

        if (!had_lock) store.unlock();
        return bundle;
    } catch (...) {
        if (!had_lock) store.unlock();
        throw;
    }
}

/// Reverses a release against the store. The release is pinned to its
/// manifest epoch: without `epoch_override` the store must still be at
/// that epoch; after a rotation, pass the release's epoch explicitly.
inline dataset reidentify(const dataset& released,
                          const release_manifest& manifest,
                          store_handle& store,
                          std::optional<std::int64_t> epoch_override = {}) {
    const std::int64_t effective =
        epoch_override ? *epoch_override : store.epoch();
    if (effective != manifest.epoch) {
        if (epoch_override) {
            throw error(errc::epoch_mismatch,
                        "release was made at epoch " +
                            std::to_string(manifest.epoch) + ", not " +
                            std::to_string(*epoch_override));
        }
        throw error(errc::epoch_mismatch,
                    "release epoch " + std::to_string(manifest.epoch) +
                        " predates the store epoch " +
                        std::to_string(store.epoch()) +
                        "; pass --epoch " + std::to_string(manifest.epoch));
    }

    dataset original = released;
    const bool had_lock = store.lock() != lock_state::none;
    if (!had_lock) store.lock_shared();
    try {
        for (const auto& column : manifest.columns) {
            const int idx = released.schema.index_of(column);
            if (idx < 0) {
                throw error(errc::config, "manifest column \"" + column +
                                              "\" is not in the released "
                                              "data");
            }
            const auto col = static_cast<std::size_t>(idx);
            for (std::size_t r = 0; r < released.records.size(); ++r) {
                const auto entry = get_by_token(store, column,
                                                released.records[r][col],
                                                manifest.epoch);
                original.records[r][col] = entry.original;
            }
        }
    } catch (...) {
        if (!had_lock) store.unlock();
        throw;
    }
    if (!had_lock) store.unlock();
    return original;
}

/// Authenticated single-token reversal at the current epoch.
inline std::string lookup_token(store_handle& store,
                                const std::string& column,
                                const std::string& token) {
    return get_by_token(store, column, token).original;
}

/// Reissues every active entry in the named columns under the next epoch.
/// Superseded entries are retained (active=false) so historical releases
/// stay reversible. Returns the new epoch.
inline std::int64_t rotate(store_handle& store,
                           const std::vector<std::string>& columns,
                           std::optional<std::uint64_t> rng_seed = {}) {
    const bool had_lock = store.lock() == lock_state::exclusive;
    if (!had_lock) store.lock_exclusive();
    try {
        const std::int64_t new_epoch = store.advance_epoch();
        std::mt19937_64 seeder(rng_seed ? *rng_seed : detail::fresh_seed());

        for (const auto& column : columns) {
            const auto& entries = store.entries(column);
            std::vector<mapping_entry> rows;
            std::set<std::string> batch_tokens;
            std::vector<const mapping_entry*> active;
            for (const auto& entry : entries) {
                if (entry.active) active.push_back(&entry);
            }
            for (const mapping_entry* entry : active) {
                rows.push_back(mapping_entry{entry->epoch, false,
                                             entry->original, entry->token,
                                             entry->occurrence});
            }
            // Tokens in one table share a length in practice; group by
            // length so each group draws from one deterministic stream.
            std::map<std::size_t, detail::token_generator> generators;
            std::map<std::size_t, std::vector<std::string>> risky_by_length;
            for (const mapping_entry* entry : active) {
                const std::size_t length = entry->token.size();
                auto gen = generators.find(length);
                if (gen == generators.end()) {
                    gen = generators
                              .emplace(length, detail::token_generator(
                                                   seeder(), length))
                              .first;
                    risky_by_length.emplace(
                        length, detail::containable_originals(store, column,
                                                              {}, length));
                }
                const std::string token = detail::issue_token(
                    gen->second, store, column, batch_tokens, {},
                    risky_by_length.at(length), length);
                batch_tokens.insert(token);
                rows.push_back(mapping_entry{new_epoch, true,
                                             entry->original, token,
                                             entry->occurrence});
            }
            put_entries(store, column, rows);
        }

        if (!had_lock) store.unlock();
        return new_epoch;
    } catch (...) {
        if (!had_lock) store.unlock();
        throw;
    }
}

}  // namespace pseudovault
