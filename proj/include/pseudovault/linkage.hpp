/**
 * @file linkage.hpp
 * @brief Groups records by healthcare identifier and surfaces mismatch
 *        anomalies: invalid identifiers, one identifier carrying several
 *        names, one name spread over several identifiers.
 *
 * Name comparison is exact string equality after trimming outer whitespace.
 * The identifier is the linkage mechanism; anomalies are advisory, so no
 * phonetic or probabilistic matching happens here.
 */

#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "pseudovault/detail/kvfile.hpp"
#include "pseudovault/errors.hpp"
#include "pseudovault/identifier.hpp"
#include "pseudovault/schema.hpp"

namespace pseudovault {

/// Records sharing one Luhn-valid healthcare identifier.
struct link_group {
    healthcare_identifier hi;
    std::vector<std::size_t> record_indices;  ///< ascending, non-empty
    std::set<std::string> distinct_names;     ///< trimmed
};

enum class anomaly_kind : std::uint8_t {
    invalid_hi,
    name_conflict,
    possible_duplicate,
};

constexpr std::string_view to_string(anomaly_kind k) noexcept {
    switch (k) {
        case anomaly_kind::invalid_hi: return "INVALID_HI";
        case anomaly_kind::name_conflict: return "NAME_CONFLICT";
        case anomaly_kind::possible_duplicate: return "POSSIBLE_DUPLICATE";
    }
    return "UNKNOWN";
}

struct link_anomaly {
    anomaly_kind kind{anomaly_kind::invalid_hi};
    std::string detail;
    std::vector<std::size_t> record_indices;
};

namespace detail {

inline void require_linkage_columns(const dataset& d,
                                    const std::string& hi_column,
                                    const std::string& name_column) {
    const int hi_idx = d.schema.index_of(hi_column);
    if (hi_idx < 0) {
        throw error(errc::config,
                    "identifier column \"" + hi_column + "\" does not exist");
    }
    if (d.schema.columns[static_cast<std::size_t>(hi_idx)].cls !=
        field_class::identifying) {
        throw error(errc::config, "identifier column \"" + hi_column +
                                      "\" is not classed IDENTIFYING");
    }
    if (d.schema.index_of(name_column) < 0) {
        throw error(errc::config,
                    "name column \"" + name_column + "\" does not exist");
    }
}

}  // namespace detail

/// Groups every record with a Luhn-valid identifier; groups are ordered by
/// first occurrence. Records with invalid identifiers stay ungrouped (they
/// surface through detect_anomalies).
inline std::vector<link_group> group_by_hi(const dataset& d,
                                           const std::string& hi_column,
                                           const std::string& name_column) {
    detail::require_linkage_columns(d, hi_column, name_column);
    const auto hi_idx =
        static_cast<std::size_t>(d.schema.index_of(hi_column));
    const auto name_idx =
        static_cast<std::size_t>(d.schema.index_of(name_column));

    std::vector<link_group> groups;
    std::map<std::string, std::size_t> group_of;
    for (std::size_t r = 0; r < d.records.size(); ++r) {
        const std::string& cell = d.records[r][hi_idx];
        if (!validate_hi(cell).luhn_valid) continue;
        const auto [it, inserted] = group_of.emplace(cell, groups.size());
        if (inserted) {
            link_group g;
            g.hi = parse_hi(cell);
            groups.push_back(std::move(g));
        }
        auto& group = groups[it->second];
        group.record_indices.push_back(r);
        group.distinct_names.insert(
            std::string(detail::trim(d.records[r][name_idx])));
    }
    return groups;
}

/// Anomaly report over groups produced from `d` by group_by_hi with the
/// same columns. Ordering: INVALID_HI by record, NAME_CONFLICT by group,
/// POSSIBLE_DUPLICATE by first appearance of the shared name.
inline std::vector<link_anomaly> detect_anomalies(
    const std::vector<link_group>& groups, const dataset& d,
    const std::string& hi_column, const std::string& name_column) {
    detail::require_linkage_columns(d, hi_column, name_column);
    const auto hi_idx =
        static_cast<std::size_t>(d.schema.index_of(hi_column));
    const auto name_idx =
        static_cast<std::size_t>(d.schema.index_of(name_column));

    std::vector<link_anomaly> anomalies;

    for (std::size_t r = 0; r < d.records.size(); ++r) {
        const std::string& cell = d.records[r][hi_idx];
        const auto report = validate_hi(cell);
        if (report.luhn_valid) continue;
        std::string reasons;
        for (const errc code : report.failures) {
            if (!reasons.empty()) reasons += ",";
            reasons += to_string(code);
        }
        anomalies.push_back(link_anomaly{
            anomaly_kind::invalid_hi,
            "record " + std::to_string(r) +
                " has an invalid healthcare identifier (" + reasons + ")",
            {r}});
    }

    for (const auto& group : groups) {
        if (group.distinct_names.size() < 2) continue;
        std::string names;
        for (const auto& name : group.distinct_names) {
            if (!names.empty()) names += " / ";
            names += "\"" + name + "\"";
        }
        anomalies.push_back(link_anomaly{
            anomaly_kind::name_conflict,
            "identifier " + group.hi.text() + " carries " +
                std::to_string(group.distinct_names.size()) + " names: " +
                names,
            group.record_indices});
    }

    // A name attached to two or more distinct identifiers. Empty names are
    // not evidence of a duplicate person; skip them.
    std::map<std::string, std::set<std::size_t>> groups_of_name;
    std::vector<std::string> name_order;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        for (const auto& name : groups[g].distinct_names) {
            if (name.empty()) continue;
            auto& bucket = groups_of_name[name];
            if (bucket.empty()) name_order.push_back(name);
            bucket.insert(g);
        }
    }
    for (const auto& name : name_order) {
        const auto& in_groups = groups_of_name[name];
        if (in_groups.size() < 2) continue;
        std::vector<std::size_t> indices;
        for (const std::size_t g : in_groups) {
            for (const std::size_t r : groups[g].record_indices) {
                if (detail::trim(d.records[r][name_idx]) == name) {
                    indices.push_back(r);
                }
            }
        }
        std::sort(indices.begin(), indices.end());
        anomalies.push_back(link_anomaly{
            anomaly_kind::possible_duplicate,
            "name \"" + name + "\" appears under " +
                std::to_string(in_groups.size()) + " distinct identifiers",
            std::move(indices)});
    }

    return anomalies;
}

}  // namespace pseudovault
