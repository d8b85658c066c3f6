/**
 * @file corpus.hpp
 * @brief Randomized release corpus for round-trip / leakage / linkage
 *        properties.
 *
 * Identifying values always start with '~' and lowercase text, characters
 * that can never appear in a token ([A-Z0-9]) or in manifest/header text,
 * so any occurrence of an identifying value in released bytes is a real
 * leak, not a coincidence. Clear cells draw from the random_cell atoms
 * (commas, quotes, unicode, newlines) and never contain '~'.
 */

#pragma once

#include <random>
#include <string>
#include <vector>

#include "pseudovault/pseudo.hpp"
#include "pseudovault/schema.hpp"
#include "support/random_cells.hpp"

namespace testsupport {

inline pseudovault::schema_descriptor corpus_schema() {
    using namespace pseudovault;
    return schema_descriptor{{
        {"pid", field_class::identifying, column_kind::text},
        {"name", field_class::identifying, column_kind::text},
        {"note", field_class::clear, column_kind::text},
        {"value", field_class::clear, column_kind::numeric},
        {"date", field_class::clear, column_kind::date},
    }};
}

/// Rows share identities drawn from a pool smaller than the row count, so
/// duplicate identities are forced for linkage-preservation checks.
inline pseudovault::dataset make_corpus_dataset(std::mt19937_64& rng,
                                                std::size_t min_rows = 1,
                                                std::size_t max_rows = 500) {
    pseudovault::dataset d;
    d.schema = corpus_schema();
    std::uniform_int_distribution<std::size_t> row_count(min_rows, max_rows);
    const std::size_t rows = row_count(rng);
    const std::size_t pool = 1 + rows / 3;

    std::vector<std::string> pids, names;
    std::uniform_int_distribution<int> accent(0, 4);
    for (std::size_t i = 0; i < pool; ++i) {
        pids.push_back("~pid-" + random_word(rng) + "-" + std::to_string(i));
        std::string name = "~" + random_word(rng);
        if (accent(rng) == 0) name += "é";  // some unicode identities
        name += " " + random_word(rng);
        names.push_back(std::move(name));
    }

    std::uniform_int_distribution<std::size_t> pick(0, pool - 1);
    std::uniform_int_distribution<int> number(-500, 5000);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t e = pick(rng);
        d.records.push_back({pids[e], names[e], random_cell(rng),
                             std::to_string(number(rng)),
                             random_cell(rng)});
    }
    return d;
}

inline pseudovault::pseudonym_policy corpus_policy(
    pseudovault::pseudonym_mode mode, std::uint64_t seed) {
    pseudovault::pseudonym_policy policy;
    policy.mode = mode;
    policy.token_length = 8;
    policy.seed = seed;
    policy.columns = {"pid", "name"};
    return policy;
}

}  // namespace testsupport
