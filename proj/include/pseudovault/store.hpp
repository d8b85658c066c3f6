/**
 * @file store.hpp
 * @brief The secure mapping store: original <-> pseudonym tables persisted
 *        in a location separate from released data, behind a shared-secret
 *        credential.
 *
 * On-disk layout, human-auditable throughout:
 *
 *     <root>/header              key = value lines + trailing CRC-32 line
 *     <root>/lock                advisory flock target
 *     <root>/tables/<column>.csv one append-only table per mapping column
 *
 * Table files carry the columns (epoch, active, original, pseudonym,
 * occurrence) and end with a fixed-width `#crc32=XXXXXXXX` line that seals
 * everything before it. Entries are never overwritten: rotation appends a
 * deactivation row (active=0) for the superseded entry plus a fresh row
 * under the new epoch. open_store() verifies every checksum.
 *
 * Locking is single-writer/multi-reader via flock(2) on <root>/lock;
 * acquisition never blocks, contention surfaces as LOCK immediately.
 *
 * The "different PC" requirement cannot be verified locally; the
 * enforceable proxy is check_separation(): neither the store root nor the
 * release root may contain the other.
 */

#pragma once

#include <fcntl.h>
#include <sys/file.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pseudovault/detail/digest.hpp"
#include "pseudovault/detail/kvfile.hpp"
#include "pseudovault/errors.hpp"
#include "pseudovault/schema.hpp"

namespace pseudovault {

/// Shared secret for store access. Never written anywhere in clear.
struct credential {
    std::string secret;
};

enum class lock_state : std::uint8_t { none, shared, exclusive };

/// One original <-> pseudonym pair. `epoch` is the issue epoch; `active`
/// flips to false when a rotation supersedes the entry. `occurrence`
/// distinguishes repeated originals in per-occurrence mode.
struct mapping_entry {
    std::int64_t epoch{1};
    bool active{true};
    std::string original;
    std::string token;
    std::int64_t occurrence{0};

    friend bool operator==(const mapping_entry&,
                           const mapping_entry&) = default;
};

namespace detail {

inline constexpr std::string_view table_header =
    "epoch,active,original,pseudonym,occurrence\n";
inline constexpr std::size_t crc_line_size = 16;  // "#crc32=" + 8 hex + \n

/// Splits `bytes` into (payload, stored crc); CORRUPT when the trailing
/// checksum line is missing, malformed or wrong.
inline std::string_view verify_sealed(std::string_view bytes,
                                      const std::string& what) {
    if (bytes.size() < crc_line_size) {
        throw error(errc::corrupt, what + ": missing checksum line");
    }
    const std::string_view line = bytes.substr(bytes.size() - crc_line_size);
    if (line.substr(0, 7) != "#crc32=" || line.back() != '\n') {
        throw error(errc::corrupt, what + ": malformed checksum line");
    }
    std::uint32_t stored = 0;
    for (std::size_t i = 7; i < 15; ++i) {
        const int v = hex_value(line[i]);
        if (v < 0) {
            throw error(errc::corrupt, what + ": malformed checksum line");
        }
        stored = (stored << 4) | static_cast<std::uint32_t>(v);
    }
    const std::string_view payload =
        bytes.substr(0, bytes.size() - crc_line_size);
    if (crc32_of(payload) != stored) {
        throw error(errc::corrupt, what + ": checksum mismatch");
    }
    return payload;
}

inline void write_sealed(const std::filesystem::path& path,
                         std::string_view payload) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    std::string bytes(payload);
    bytes += crc32_line(payload);
    write_file(tmp.string(), bytes);
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw error(errc::io, "cannot replace " + path.string() + ": " +
                                  ec.message());
    }
}

inline std::int64_t parse_int(std::string_view text, const std::string& what,
                              errc code) {
    const std::string s{trim(text)};
    if (s.empty()) throw error(code, what + ": empty integer");
    std::size_t consumed = 0;
    std::int64_t value = 0;
    try {
        value = std::stoll(s, &consumed);
    } catch (const std::exception&) {
        throw error(code, what + ": bad integer \"" + s + "\"");
    }
    if (consumed != s.size()) {
        throw error(code, what + ": bad integer \"" + s + "\"");
    }
    return value;
}

}  // namespace detail

/// Handle over an opened store: header state, advisory lock, and the folded
/// in-memory view of every mapping table. Move-only; the advisory lock is
/// released on destruction.
class store_handle {
public:
    store_handle() = default;
    store_handle(const store_handle&) = delete;
    store_handle& operator=(const store_handle&) = delete;

    store_handle(store_handle&& other) noexcept { swap(other); }
    store_handle& operator=(store_handle&& other) noexcept {
        if (this != &other) {
            close();
            swap(other);
        }
        return *this;
    }

    ~store_handle() { close(); }

    const std::filesystem::path& root() const { return root_; }
    std::int64_t epoch() const { return epoch_; }
    lock_state lock() const { return lock_; }

    void lock_shared() { acquire(LOCK_SH, lock_state::shared); }
    void lock_exclusive() { acquire(LOCK_EX, lock_state::exclusive); }

    void unlock() {
        if (lock_ == lock_state::none) return;
        ::flock(lock_fd_, LOCK_UN);
        lock_ = lock_state::none;
    }

    /// Mapping columns present, sorted by name.
    std::vector<std::string> columns() const {
        std::vector<std::string> names;
        names.reserve(tables_.size());
        for (const auto& item : tables_) names.push_back(item.first);
        return names;
    }

    const std::vector<mapping_entry>& entries(
        const std::string& column) const {
        static const std::vector<mapping_entry> none;
        const auto it = tables_.find(column);
        return it == tables_.end() ? none : it->second.folded;
    }

    bool has_token(const std::string& column,
                   const std::string& token) const {
        const auto it = tables_.find(column);
        return it != tables_.end() &&
               it->second.by_token.count(token) > 0;
    }

    /// Number of tokens ever issued in a table (all epochs); this is the
    /// table load that bounds token-space consumption.
    std::size_t token_count(const std::string& column) const {
        const auto it = tables_.find(column);
        return it == tables_.end() ? 0 : it->second.by_token.size();
    }

    /// True when any entry (active or not) maps this original.
    bool has_original(const std::string& column,
                      const std::string& original) const {
        const auto it = tables_.find(column);
        if (it == tables_.end()) return false;
        const auto lo = it->second.by_key.lower_bound(
            {original, std::numeric_limits<std::int64_t>::min()});
        return lo != it->second.by_key.end() && lo->first.first == original;
    }

    /// Currently active entry for an original, if any (first occurrence
    /// wins). Used for per-entity reuse.
    std::optional<mapping_entry> find_active_original(
        const std::string& column, const std::string& original) const {
        const auto it = tables_.find(column);
        if (it == tables_.end()) return std::nullopt;
        const table& t = it->second;
        for (auto key_it = t.by_key.lower_bound(
                 {original, std::numeric_limits<std::int64_t>::min()});
             key_it != t.by_key.end() && key_it->first.first == original;
             ++key_it) {
            for (const std::size_t idx : key_it->second) {
                if (t.folded[idx].active) return t.folded[idx];
            }
        }
        return std::nullopt;
    }

    /// Next free occurrence ordinal for an original (rotation preserves
    /// ordinals, so this is max + 1 over all epochs).
    std::int64_t next_occurrence(const std::string& column,
                                 const std::string& original) const {
        const auto it = tables_.find(column);
        if (it == tables_.end()) return 0;
        const table& t = it->second;
        std::int64_t next = 0;
        for (auto key_it = t.by_key.lower_bound(
                 {original, std::numeric_limits<std::int64_t>::min()});
             key_it != t.by_key.end() && key_it->first.first == original;
             ++key_it) {
            for (const std::size_t idx : key_it->second) {
                next = std::max(next, t.folded[idx].occurrence + 1);
            }
        }
        return next;
    }

    /// Token lookup. Without an epoch the entry must be active; with an
    /// epoch it must be the latest entry for its (original, occurrence)
    /// key issued at or before that epoch.
    std::optional<mapping_entry> find_token(
        const std::string& column, const std::string& token,
        std::optional<std::int64_t> at_epoch = {}) const {
        const auto table_it = tables_.find(column);
        if (table_it == tables_.end()) return std::nullopt;
        const table& t = table_it->second;
        const auto it = t.by_token.find(token);
        if (it == t.by_token.end()) return std::nullopt;
        const std::size_t idx = it->second;
        if (!valid_at(t, idx, at_epoch)) return std::nullopt;
        return t.folded[idx];
    }

    /// Appends rows (active issues and deactivations) to one table.
    /// Requires the exclusive lock; acquires it for the call when none is
    /// held. The file is resealed with a fresh trailing checksum.
    void append(const std::string& column,
                const std::vector<mapping_entry>& rows) {
        if (rows.empty()) return;
        const scoped_exclusive guard(*this);
        validate_batch(column, rows);
        table& t = tables_[column];
        if (t.raw.empty()) t.raw = detail::table_header;
        for (const auto& row : rows) {
            fold(t, row, errc::store_write);
            std::string line;
            detail::append_csv_row(
                line, {std::to_string(row.epoch), row.active ? "1" : "0",
                       row.original, row.token,
                       std::to_string(row.occurrence)});
            t.raw += line;
        }
        std::error_code ec;
        std::filesystem::create_directories(root_ / "tables", ec);
        detail::write_sealed(table_path(column), t.raw);
    }

    /// Bumps the store epoch and rewrites the header. Exclusive lock
    /// required (acquired for the call when none is held).
    std::int64_t advance_epoch() {
        const scoped_exclusive guard(*this);
        ++epoch_;
        write_header();
        return epoch_;
    }

    /// Rows of `column` valid at `at_epoch` (default: currently active),
    /// in table order, as (original, pseudonym) pairs.
    std::vector<std::pair<std::string, std::string>> table_view(
        const std::string& column,
        std::optional<std::int64_t> at_epoch = {}) const {
        std::vector<std::pair<std::string, std::string>> rows;
        const auto it = tables_.find(column);
        if (it == tables_.end()) return rows;
        const table& t = it->second;
        for (std::size_t i = 0; i < t.folded.size(); ++i) {
            if (valid_at(t, i, at_epoch)) {
                rows.emplace_back(t.folded[i].original, t.folded[i].token);
            }
        }
        return rows;
    }

private:
    struct table {
        std::string raw;  ///< payload bytes, header row included, no seal
        std::vector<mapping_entry> folded;
        std::unordered_map<std::string, std::size_t> by_token;
        /// (original, occurrence) -> folded indices sorted by epoch
        std::map<std::pair<std::string, std::int64_t>,
                 std::vector<std::size_t>>
            by_key;
    };

    /// Holds the exclusive lock for one member-function call when the
    /// caller has not locked explicitly.
    class scoped_exclusive {
    public:
        explicit scoped_exclusive(store_handle& h) : handle_(h) {
            if (handle_.lock_ == lock_state::exclusive) return;
            if (handle_.lock_ == lock_state::shared) {
                throw error(errc::lock,
                            "operation needs the exclusive store lock but a "
                            "shared lock is held");
            }
            handle_.lock_exclusive();
            owned_ = true;
        }
        ~scoped_exclusive() {
            if (owned_) handle_.unlock();
        }

    private:
        store_handle& handle_;
        bool owned_{false};
    };

    static std::pair<std::string, std::int64_t> key_of(
        const mapping_entry& e) {
        return {e.original, e.occurrence};
    }

    static bool valid_at(const table& t, std::size_t idx,
                         std::optional<std::int64_t> at_epoch) {
        const mapping_entry& e = t.folded[idx];
        if (!at_epoch) return e.active;
        if (e.epoch > *at_epoch) return false;
        const auto& siblings = t.by_key.at(key_of(e));
        for (auto it = siblings.rbegin(); it != siblings.rend(); ++it) {
            if (t.folded[*it].epoch <= *at_epoch) return *it == idx;
        }
        return false;
    }

    void acquire(int operation, lock_state target) {
        if (lock_ == target) return;
        if (::flock(lock_fd_, operation | LOCK_NB) != 0) {
            throw error(errc::lock, "store lock is held elsewhere (" +
                                        root_.string() + ")");
        }
        lock_ = target;
    }

    std::filesystem::path table_path(const std::string& column) const {
        return root_ / "tables" / (detail::percent_encode(column) + ".csv");
    }

    void write_header() {
        std::string payload;
        payload += "format = 1\n";
        payload += "epoch = " + std::to_string(epoch_) + "\n";
        payload += "salt = " + salt_hex_ + "\n";
        payload += "credential = " + credential_digest_ + "\n";
        detail::write_sealed(root_ / "header", payload);
    }

    void validate_batch(const std::string& column,
                        const std::vector<mapping_entry>& rows) const {
        const auto table_it = tables_.find(column);
        const table* existing =
            table_it == tables_.end() ? nullptr : &table_it->second;

        using entry_key = std::pair<std::string, std::int64_t>;
        std::set<std::string> batch_tokens;
        std::set<entry_key> activated_keys;
        std::set<entry_key> deactivated_keys;

        const auto token_known = [&](const std::string& token) {
            return batch_tokens.count(token) > 0 ||
                   (existing && existing->by_token.count(token) > 0);
        };
        const auto key_active = [&](const entry_key& key) {
            if (activated_keys.count(key) > 0) return true;
            if (deactivated_keys.count(key) > 0) return false;
            if (!existing) return false;
            const auto it = existing->by_key.find(key);
            if (it == existing->by_key.end()) return false;
            for (const std::size_t idx : it->second) {
                if (existing->folded[idx].active) return true;
            }
            return false;
        };

        for (const auto& row : rows) {
            const entry_key key = key_of(row);
            if (row.active) {
                if (row.token.empty() || row.token == row.original) {
                    throw error(errc::store_write,
                                "refusing token equal to its original or "
                                "empty");
                }
                if (token_known(row.token)) {
                    throw error(errc::store_write,
                                "token already present in table \"" + column +
                                    "\"");
                }
                if (key_active(key)) {
                    throw error(errc::store_write,
                                "an active entry already exists for this "
                                "original/occurrence in \"" +
                                    column + "\"");
                }
                batch_tokens.insert(row.token);
                activated_keys.insert(key);
                deactivated_keys.erase(key);
            } else {
                if (!existing ||
                    existing->by_token.count(row.token) == 0) {
                    throw error(errc::store_write,
                                "deactivation of unknown token in \"" +
                                    column + "\"");
                }
                const mapping_entry& target =
                    existing->folded[existing->by_token.at(row.token)];
                if (!target.active || deactivated_keys.count(key) > 0 ||
                    target.epoch != row.epoch ||
                    target.original != row.original ||
                    target.occurrence != row.occurrence) {
                    throw error(errc::store_write,
                                "deactivation does not match the active "
                                "entry in \"" +
                                    column + "\"");
                }
                deactivated_keys.insert(key);
                activated_keys.erase(key);
            }
        }
    }

    /// Applies one physical row to the folded view. Loading uses CORRUPT,
    /// appending uses STORE_WRITE for violations.
    static void fold(table& t, const mapping_entry& row, errc on_violation) {
        if (row.active) {
            if (t.by_token.count(row.token) > 0) {
                throw error(on_violation, "duplicate token \"" + row.token +
                                              "\" in mapping table");
            }
            t.folded.push_back(row);
            const std::size_t idx = t.folded.size() - 1;
            t.by_token.emplace(row.token, idx);
            auto& siblings = t.by_key[key_of(row)];
            auto insert_at = siblings.end();
            while (insert_at != siblings.begin() &&
                   t.folded[*(insert_at - 1)].epoch > row.epoch) {
                --insert_at;
            }
            siblings.insert(insert_at, idx);
        } else {
            const auto it = t.by_token.find(row.token);
            if (it == t.by_token.end()) {
                throw error(on_violation,
                            "deactivation row for unknown token \"" +
                                row.token + "\"");
            }
            mapping_entry& target = t.folded[it->second];
            if (!target.active || target.epoch != row.epoch ||
                target.original != row.original ||
                target.occurrence != row.occurrence) {
                throw error(on_violation,
                            "deactivation row does not match its entry");
            }
            target.active = false;
        }
    }

    void load_table(const std::filesystem::path& path,
                    const std::string& column) {
        const std::string bytes = read_file(path.string());
        const std::string_view payload =
            detail::verify_sealed(bytes, path.filename().string());

        table t;
        t.raw = std::string(payload);
        detail::csv_reader reader(payload);
        if (reader.at_end()) {
            throw error(errc::corrupt,
                        path.filename().string() + ": missing table header");
        }
        const auto header = reader.read_row();
        const std::vector<std::string> expected = {
            "epoch", "active", "original", "pseudonym", "occurrence"};
        if (header != expected) {
            throw error(errc::corrupt,
                        path.filename().string() + ": bad table header");
        }
        const std::string what = path.filename().string();
        while (!reader.at_end()) {
            const auto cells = reader.read_row();
            if (cells.size() != 5) {
                throw error(errc::corrupt, what + ": ragged table row");
            }
            mapping_entry row;
            row.epoch = detail::parse_int(cells[0], what, errc::corrupt);
            if (cells[1] != "0" && cells[1] != "1") {
                throw error(errc::corrupt, what + ": bad active flag");
            }
            row.active = cells[1] == "1";
            row.original = cells[2];
            row.token = cells[3];
            row.occurrence = detail::parse_int(cells[4], what, errc::corrupt);
            if (row.epoch < 1 || row.epoch > epoch_) {
                throw error(errc::corrupt,
                            what + ": entry epoch outside store history");
            }
            fold(t, row, errc::corrupt);
        }
        tables_.emplace(column, std::move(t));
    }

    void open_lock_file() {
        const std::filesystem::path lock_path = root_ / "lock";
        lock_fd_ = ::open(lock_path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC,
                          0600);
        if (lock_fd_ < 0) {
            throw error(errc::io,
                        "cannot open lock file " + lock_path.string());
        }
    }

    void close() {
        if (lock_fd_ >= 0) {
            unlock();
            ::close(lock_fd_);
            lock_fd_ = -1;
        }
    }

    void swap(store_handle& other) noexcept {
        std::swap(root_, other.root_);
        std::swap(epoch_, other.epoch_);
        std::swap(lock_, other.lock_);
        std::swap(lock_fd_, other.lock_fd_);
        std::swap(salt_hex_, other.salt_hex_);
        std::swap(credential_digest_, other.credential_digest_);
        std::swap(tables_, other.tables_);
    }

    friend store_handle init_store(const std::filesystem::path&,
                                   const credential&,
                                   std::optional<std::uint64_t>);
    friend store_handle open_store(const std::filesystem::path&,
                                   const credential&);

    std::filesystem::path root_;
    std::int64_t epoch_{0};
    lock_state lock_{lock_state::none};
    int lock_fd_{-1};
    std::string salt_hex_;
    std::string credential_digest_;
    std::map<std::string, table> tables_;
};

namespace detail {

inline std::string credential_digest(const std::string& salt_hex,
                                     const std::string& secret) {
    return sha256_hex(salt_hex + ":" + secret);
}

}  // namespace detail

/// Creates a store at `root` (which must be empty or absent; its parent
/// must exist). The directory mode is restricted to the owner where the
/// platform supports it. `salt_seed` makes the header deterministic for
/// reproducible releases; omit it for a random salt.
inline store_handle init_store(const std::filesystem::path& root,
                               const credential& cred,
                               std::optional<std::uint64_t> salt_seed = {}) {
    if (cred.secret.size() < 12) {
        throw error(errc::auth,
                    "credential secret must be at least 12 characters");
    }
    std::error_code ec;
    if (std::filesystem::exists(root, ec)) {
        if (!std::filesystem::is_directory(root, ec)) {
            throw error(errc::exists, root.string() + " is not a directory");
        }
        if (!std::filesystem::is_empty(root, ec)) {
            throw error(errc::exists,
                        "store root " + root.string() + " is not empty");
        }
    } else {
        if (!std::filesystem::create_directory(root, ec) || ec) {
            throw error(errc::io, "cannot create store root " +
                                      root.string() +
                                      (ec ? ": " + ec.message() : ""));
        }
    }
    std::filesystem::permissions(root,
                                 std::filesystem::perms::owner_all,
                                 std::filesystem::perm_options::replace, ec);

    std::mt19937_64 rng(salt_seed ? *salt_seed : std::random_device{}());
    unsigned char salt[16];
    for (auto& byte : salt) {
        byte = static_cast<unsigned char>(rng() & 0xFF);
    }

    store_handle handle;
    handle.root_ = std::filesystem::weakly_canonical(root);
    handle.epoch_ = 1;
    handle.salt_hex_ = detail::to_hex(salt, sizeof(salt));
    handle.credential_digest_ =
        detail::credential_digest(handle.salt_hex_, cred.secret);
    std::filesystem::create_directory(handle.root_ / "tables", ec);
    handle.write_header();
    handle.open_lock_file();
    return handle;
}

/// Opens an existing store. The header checksum is verified before the
/// credential, so a tampered header reports CORRUPT, not AUTH.
inline store_handle open_store(const std::filesystem::path& root,
                               const credential& cred) {
    store_handle handle;
    std::error_code ec;
    handle.root_ = std::filesystem::weakly_canonical(root, ec);
    if (ec || !std::filesystem::is_directory(handle.root_)) {
        throw error(errc::io, "no store at " + root.string());
    }
    const std::string header_bytes =
        read_file((handle.root_ / "header").string());
    const std::string_view payload =
        detail::verify_sealed(header_bytes, "store header");

    std::string format, salt, digest, epoch_text;
    for (const auto& entry : detail::parse_kv(payload, errc::corrupt)) {
        if (entry.key == "format") format = entry.value;
        else if (entry.key == "epoch") epoch_text = entry.value;
        else if (entry.key == "salt") salt = entry.value;
        else if (entry.key == "credential") digest = entry.value;
        else throw error(errc::corrupt, "store header: unknown key \"" +
                                            entry.key + "\"");
    }
    if (format != "1") {
        throw error(errc::corrupt, "store header: unsupported format");
    }
    handle.epoch_ =
        detail::parse_int(epoch_text, "store header", errc::corrupt);
    if (handle.epoch_ < 1 || salt.size() != 32 || digest.size() != 64) {
        throw error(errc::corrupt, "store header: malformed fields");
    }
    handle.salt_hex_ = salt;
    handle.credential_digest_ = digest;

    if (detail::credential_digest(salt, cred.secret) != digest) {
        throw error(errc::auth, "credential rejected");
    }

    const std::filesystem::path tables_dir = handle.root_ / "tables";
    if (std::filesystem::exists(tables_dir)) {
        std::vector<std::filesystem::path> files;
        for (const auto& entry :
             std::filesystem::directory_iterator(tables_dir)) {
            if (entry.path().extension() == ".csv") {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
        for (const auto& file : files) {
            handle.load_table(
                file, detail::percent_decode(file.stem().string()));
        }
    }
    handle.open_lock_file();
    return handle;
}

/// Spec operation: append entries to one mapping table.
inline void put_entries(store_handle& handle, const std::string& column,
                        const std::vector<mapping_entry>& rows) {
    handle.append(column, rows);
}

/// Spec operation: resolve a token, optionally at a historical epoch.
/// Throws UNKNOWN_TOKEN when absent or not valid at that epoch.
inline mapping_entry get_by_token(store_handle& handle,
                                  const std::string& column,
                                  const std::string& token,
                                  std::optional<std::int64_t> at_epoch = {}) {
    const bool had_lock = handle.lock() != lock_state::none;
    if (!had_lock) handle.lock_shared();
    const auto entry = handle.find_token(column, token, at_epoch);
    if (!had_lock) handle.unlock();
    if (!entry) {
        throw error(errc::unknown_token,
                    "token \"" + token + "\" not found in table \"" + column +
                        "\"");
    }
    return *entry;
}

/// One mapping table in the two-column presentation.
struct exported_table {
    std::string column;
    std::vector<std::pair<std::string, std::string>> rows;  ///< original, token
};

/// All mapping tables, sorted by column name, rows in table order.
inline std::vector<exported_table> export_tables(
    store_handle& handle, std::optional<std::int64_t> at_epoch = {}) {
    const bool had_lock = handle.lock() != lock_state::none;
    if (!had_lock) handle.lock_shared();
    std::vector<exported_table> tables;
    for (const auto& column : handle.columns()) {
        tables.push_back(
            exported_table{column, handle.table_view(column, at_epoch)});
    }
    if (!had_lock) handle.unlock();
    return tables;
}

/// Errors with STORE_COLOCATION when one canonical path contains the other
/// (or they are the same path).
inline void check_separation(const std::filesystem::path& store_root,
                             const std::filesystem::path& release_root) {
    std::error_code ec;
    const auto store = std::filesystem::weakly_canonical(store_root, ec);
    if (ec) throw error(errc::io, "cannot canonicalize " + store_root.string());
    const auto release = std::filesystem::weakly_canonical(release_root, ec);
    if (ec) {
        throw error(errc::io, "cannot canonicalize " + release_root.string());
    }
    const auto contains = [](const std::filesystem::path& outer,
                             const std::filesystem::path& inner) {
        auto o = outer.begin();
        auto i = inner.begin();
        for (; o != outer.end() && i != inner.end(); ++o, ++i) {
            if (*o != *i) return false;
        }
        return o == outer.end();
    };
    if (contains(store, release) || contains(release, store)) {
        throw error(errc::store_colocation,
                    "store root " + store.string() +
                        " and release root " + release.string() +
                        " must live in separate locations");
    }
}

}  // namespace pseudovault
