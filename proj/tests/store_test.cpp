/**
 * @file store_test.cpp
 * @brief Secure mapping store: lifecycle, auth, checksums, locking,
 *        append-only tables and path separation.
 */

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "pseudovault/store.hpp"
#include "support/temp_dir.hpp"

using namespace pseudovault;
using testsupport::temp_dir;

namespace {

const credential good_cred{"correct-horse-battery"};

std::uintmax_t size_of(const std::filesystem::path& p) {
    return std::filesystem::file_size(p);
}

void flip_byte(const std::filesystem::path& p, std::size_t offset,
               unsigned char mask) {
    std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
    f.seekg(static_cast<std::streamoff>(offset));
    char c = 0;
    f.get(c);
    c = static_cast<char>(static_cast<unsigned char>(c) ^ mask);
    f.seekp(static_cast<std::streamoff>(offset));
    f.put(c);
}

}  // namespace

// =============================================================================
// init / open
// =============================================================================

TEST(InitStore, FreshDirectoryGetsEpochOne) {
    temp_dir dir;
    const auto root = dir / "store";
    const auto handle = init_store(root, good_cred, 1234);
    EXPECT_EQ(handle.epoch(), 1);
    EXPECT_TRUE(std::filesystem::exists(root / "header"));
    EXPECT_TRUE(std::filesystem::exists(root / "lock"));
    EXPECT_EQ(std::filesystem::status(root).permissions(),
              std::filesystem::perms::owner_all);
}

TEST(InitStore, AcceptsExistingEmptyDirectory) {
    temp_dir dir;
    const auto root = dir / "store";
    std::filesystem::create_directory(root);
    EXPECT_EQ(init_store(root, good_cred).epoch(), 1);
}

TEST(InitStore, NonexistentParentIsIoError) {
    temp_dir dir;
    try {
        init_store(dir / "missing" / "store", good_cred);
        FAIL() << "expected IO";
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::io);
    }
}

TEST(InitStore, ReinitOverExistingStoreFails) {
    temp_dir dir;
    const auto root = dir / "store";
    { init_store(root, good_cred); }
    try {
        init_store(root, good_cred);
        FAIL() << "expected EXISTS";
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::exists);
    }
}

TEST(InitStore, ShortSecretRejected) {
    temp_dir dir;
    try {
        init_store(dir / "store", credential{"short"});
        FAIL() << "expected AUTH";
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::auth);
    }
}

TEST(OpenStore, CorrectSecretOpens) {
    temp_dir dir;
    const auto root = dir / "store";
    { init_store(root, good_cred); }
    const auto handle = open_store(root, good_cred);
    EXPECT_EQ(handle.epoch(), 1);
}

TEST(OpenStore, WrongSecretIsAuthError) {
    temp_dir dir;
    const auto root = dir / "store";
    { init_store(root, good_cred); }
    try {
        open_store(root, credential{"definitely-not-right"});
        FAIL() << "expected AUTH";
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::auth);
    }
}

TEST(OpenStore, MissingStoreIsIoError) {
    temp_dir dir;
    try {
        open_store(dir / "nothing-here", good_cred);
        FAIL() << "expected IO";
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::io);
    }
}

TEST(OpenStore, FlippedHeaderByteIsCorrupt) {
    std::mt19937_64 rng(77);
    temp_dir dir;
    const auto root = dir / "store";
    { init_store(root, good_cred); }
    const auto header = root / "header";
    const auto size = size_of(header);
    for (int trial = 0; trial < 40; ++trial) {
        const auto offset =
            std::uniform_int_distribution<std::uintmax_t>(0, size - 1)(rng);
        const auto mask = static_cast<unsigned char>(
            std::uniform_int_distribution<int>(1, 255)(rng));
        flip_byte(header, offset, mask);
        try {
            open_store(root, good_cred);
            FAIL() << "expected CORRUPT at offset " << offset;
        } catch (const error& e) {
            EXPECT_EQ(e.code(), errc::corrupt) << e.what();
        }
        flip_byte(header, offset, mask);  // restore
    }
    EXPECT_NO_THROW(open_store(root, good_cred));
}

// =============================================================================
// put / get / export
// =============================================================================

namespace {

std::vector<mapping_entry> two_entries() {
    return {
        {1, true, "8001567898761234", "TOKAAA01", 0},
        {1, true, "8008123456785000", "TOKBBB02", 0},
    };
}

}  // namespace

TEST(PutGet, RoundTrip) {
    temp_dir dir;
    auto handle = init_store(dir / "store", good_cred);
    put_entries(handle, "Healthcare Identifier", two_entries());
    const auto entry =
        get_by_token(handle, "Healthcare Identifier", "TOKAAA01");
    EXPECT_EQ(entry.original, "8001567898761234");
    EXPECT_EQ(entry.epoch, 1);
    EXPECT_TRUE(entry.active);
}

TEST(PutGet, EmptyStoreHasNoTokens) {
    temp_dir dir;
    auto handle = init_store(dir / "store", good_cred);
    try {
        get_by_token(handle, "Healthcare Identifier", "TOKAAA01");
        FAIL() << "expected UNKNOWN_TOKEN";
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::unknown_token);
    }
}

TEST(PutGet, TokenIsScopedToItsColumn) {
    temp_dir dir;
    auto handle = init_store(dir / "store", good_cred);
    put_entries(handle, "Healthcare Identifier", two_entries());
    try {
        get_by_token(handle, "Name", "TOKAAA01");
        FAIL() << "expected UNKNOWN_TOKEN";
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::unknown_token);
    }
}

TEST(PutGet, EntriesSurviveReopen) {
    temp_dir dir;
    const auto root = dir / "store";
    {
        auto handle = init_store(root, good_cred);
        put_entries(handle, "Name", {{1, true, "John Smith", "N17ZZZ01", 0}});
    }
    auto handle = open_store(root, good_cred);
    EXPECT_EQ(get_by_token(handle, "Name", "N17ZZZ01").original,
              "John Smith");
}

TEST(PutGet, RejectsDuplicateTokenAndSelfToken) {
    temp_dir dir;
    auto handle = init_store(dir / "store", good_cred);
    put_entries(handle, "Name", {{1, true, "John Smith", "AAA111", 0}});
    try {
        put_entries(handle, "Name", {{1, true, "Jane Doe", "AAA111", 0}});
        FAIL() << "expected STORE_WRITE";
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::store_write);
    }
    EXPECT_THROW(
        put_entries(handle, "Name", {{1, true, "SAME", "SAME", 0}}),
        error);
    EXPECT_THROW(
        put_entries(handle, "Name", {{1, true, "John Smith", "BBB222", 0}}),
        error);  // second active entry for the same original/occurrence
}

TEST(PutGet, OriginalsWithCsvMetacharactersRoundTrip) {
    temp_dir dir;
    const auto root = dir / "store";
    {
        auto handle = init_store(root, good_cred);
        put_entries(handle, "Name",
                    {{1, true, "Smith, \"JJ\"\nJr", "QQQ777", 0}});
    }
    auto handle = open_store(root, good_cred);
    EXPECT_EQ(get_by_token(handle, "Name", "QQQ777").original,
              "Smith, \"JJ\"\nJr");
}

TEST(ExportTables, TwoColumnPresentation) {
    temp_dir dir;
    auto handle = init_store(dir / "store", good_cred);
    put_entries(handle, "Healthcare Identifier", two_entries());
    put_entries(handle, "Name", {{1, true, "John Smith", "A12XYZ01", 0}});
    const auto tables = export_tables(handle);
    ASSERT_EQ(tables.size(), 2u);
    EXPECT_EQ(tables[0].column, "Healthcare Identifier");
    ASSERT_EQ(tables[0].rows.size(), 2u);
    EXPECT_EQ(tables[0].rows[0].first, "8001567898761234");
    EXPECT_EQ(tables[0].rows[0].second, "TOKAAA01");
    EXPECT_EQ(tables[1].column, "Name");
    ASSERT_EQ(tables[1].rows.size(), 1u);
}

// =============================================================================
// Epoch supersession
// =============================================================================

TEST(Epochs, DeactivatedEntriesResolveOnlyByOldEpoch) {
    temp_dir dir;
    auto handle = init_store(dir / "store", good_cred);
    put_entries(handle, "Name", {{1, true, "John Smith", "OLD111", 0}});
    // Rotation shape: deactivate the epoch-1 entry, issue under epoch 2.
    put_entries(handle, "Name",
                {{1, false, "John Smith", "OLD111", 0},
                 {2, true, "John Smith", "NEW222", 0}});
    handle.advance_epoch();
    EXPECT_EQ(handle.epoch(), 2);

    // Default lookups see only the new epoch.
    EXPECT_EQ(get_by_token(handle, "Name", "NEW222").original, "John Smith");
    EXPECT_THROW(get_by_token(handle, "Name", "OLD111"), error);

    // Pinned to epoch 1, the old token still resolves and the new does not.
    EXPECT_EQ(get_by_token(handle, "Name", "OLD111", 1).original,
              "John Smith");
    EXPECT_THROW(get_by_token(handle, "Name", "NEW222", 1), error);
}

TEST(Epochs, RejectsMismatchedDeactivation) {
    temp_dir dir;
    auto handle = init_store(dir / "store", good_cred);
    put_entries(handle, "Name", {{1, true, "John Smith", "OLD111", 0}});
    EXPECT_THROW(put_entries(handle, "Name",
                             {{1, false, "Jane Doe", "OLD111", 0}}),
                 error);
    EXPECT_THROW(put_entries(handle, "Name",
                             {{1, false, "John Smith", "GHOST99", 0}}),
                 error);
}

// =============================================================================
// Append-only and corruption detection
// =============================================================================

TEST(TableFiles, ByteLengthNeverDecreases) {
    temp_dir dir;
    const auto root = dir / "store";
    auto handle = init_store(root, good_cred);
    const auto table_file = root / "tables" / "Name.csv";

    put_entries(handle, "Name", {{1, true, "John Smith", "AAA111", 0}});
    const auto size_one = size_of(table_file);
    put_entries(handle, "Name", {{1, true, "Jane Doe", "BBB222", 0}});
    const auto size_two = size_of(table_file);
    EXPECT_GT(size_two, size_one);
    put_entries(handle, "Name", {{1, false, "John Smith", "AAA111", 0},
                                 {2, true, "John Smith", "CCC333", 0}});
    EXPECT_GT(size_of(table_file), size_two);
}

TEST(TableFiles, EveryFileEndsWithChecksumLine) {
    temp_dir dir;
    const auto root = dir / "store";
    auto handle = init_store(root, good_cred);
    put_entries(handle, "Name", {{1, true, "John Smith", "AAA111", 0}});
    for (const auto& file :
         {root / "header", root / "tables" / "Name.csv"}) {
        const std::string bytes = read_file(file.string());
        ASSERT_GE(bytes.size(), 16u);
        EXPECT_EQ(bytes.substr(bytes.size() - 16, 7), "#crc32=") << file;
        EXPECT_EQ(bytes.back(), '\n');
    }
}

TEST(TableFiles, AnySingleFlippedByteIsCorrupt) {
    std::mt19937_64 rng(90210);
    temp_dir dir;
    const auto root = dir / "store";
    {
        auto handle = init_store(root, good_cred);
        put_entries(handle, "Name",
                    {{1, true, "John Smith", "AAA111", 0},
                     {1, true, "Jane, \"D\"", "BBB222", 0}});
    }
    const auto table_file = root / "tables" / "Name.csv";
    const auto size = size_of(table_file);
    for (int trial = 0; trial < 60; ++trial) {
        const auto offset =
            std::uniform_int_distribution<std::uintmax_t>(0, size - 1)(rng);
        const auto mask = static_cast<unsigned char>(
            std::uniform_int_distribution<int>(1, 255)(rng));
        flip_byte(table_file, offset, mask);
        try {
            open_store(root, good_cred);
            FAIL() << "expected CORRUPT at offset " << offset;
        } catch (const error& e) {
            EXPECT_EQ(e.code(), errc::corrupt) << e.what();
        }
        flip_byte(table_file, offset, mask);
    }
    EXPECT_NO_THROW(open_store(root, good_cred));
}

// =============================================================================
// Locking
// =============================================================================

TEST(Locking, SingleWriterMultiReader) {
    temp_dir dir;
    const auto root = dir / "store";
    { init_store(root, good_cred); }

    auto writer = open_store(root, good_cred);
    auto reader_a = open_store(root, good_cred);
    auto reader_b = open_store(root, good_cred);

    reader_a.lock_shared();
    reader_b.lock_shared();  // shared locks coexist
    try {
        writer.lock_exclusive();
        FAIL() << "expected LOCK";
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::lock);
    }
    reader_a.unlock();
    reader_b.unlock();

    writer.lock_exclusive();
    try {
        reader_a.lock_shared();
        FAIL() << "expected LOCK";
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::lock);
    }
    writer.unlock();
    EXPECT_NO_THROW(reader_a.lock_shared());
}

TEST(Locking, PutUnderSharedLockIsRefused) {
    temp_dir dir;
    auto handle = init_store(dir / "store", good_cred);
    handle.lock_shared();
    try {
        put_entries(handle, "Name", {{1, true, "x-orig", "YYY111", 0}});
        FAIL() << "expected LOCK";
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::lock);
    }
}

// =============================================================================
// check_separation
// =============================================================================

TEST(CheckSeparation, DisjointPathsAreFine) {
    temp_dir dir;
    std::filesystem::create_directories(dir / "data" / "store");
    std::filesystem::create_directories(dir / "out" / "release");
    EXPECT_NO_THROW(
        check_separation(dir / "data" / "store", dir / "out" / "release"));
    // Sibling with a shared name prefix is not containment.
    EXPECT_NO_THROW(
        check_separation(dir / "data" / "store", dir / "data" / "store2"));
}

TEST(CheckSeparation, NestedAndIdenticalPathsAreRejected) {
    temp_dir dir;
    const auto store = dir / "data" / "store";
    std::filesystem::create_directories(store / "release");
    try {
        check_separation(store, store / "release");
        FAIL() << "expected STORE_COLOCATION";
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::store_colocation);
    }
    EXPECT_THROW(check_separation(store / "release", store), error);
    EXPECT_THROW(check_separation(store, store), error);
    // Dot-segments cannot hide containment.
    EXPECT_THROW(
        check_separation(store, store / "release" / ".." / "release"),
        error);
}
