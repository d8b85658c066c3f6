/**
 * @file main.cpp
 * @brief pseudovault command-line tool: identifier checks, dataset linting,
 *        record linkage, pseudonymised releases and their reversal.
 *
 * Exit codes: 0 success / nothing to report, 1 findings or anomalies were
 * emitted, 2 operational error (one `CODE: message` line on stderr).
 * stdout carries data; stderr carries diagnostics.
 *
 * The store credential is never accepted as a flag (shell history leaks);
 * it comes from PSEUDOVAULT_SECRET or an interactive prompt.
 */

#include <termios.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pseudovault/identifier.hpp"
#include "pseudovault/lint.hpp"
#include "pseudovault/linkage.hpp"
#include "pseudovault/pseudo.hpp"
#include "pseudovault/schema.hpp"
#include "pseudovault/store.hpp"

namespace pv = pseudovault;
namespace fs = std::filesystem;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_reported = 1;
constexpr int exit_error = 2;

std::string csv_field(const std::string& cell) {
    std::string out;
    pv::detail::append_csv_cell(out, cell);
    return out;
}

pv::credential obtain_credential() {
    if (const char* secret = std::getenv("PSEUDOVAULT_SECRET")) {
        return pv::credential{secret};
    }
    std::string secret;
    if (::isatty(STDIN_FILENO)) {
        std::cerr << "store secret: " << std::flush;
        ::termios before{};
        const bool have_tty = ::tcgetattr(STDIN_FILENO, &before) == 0;
        ::termios quiet = before;
        quiet.c_lflag &= ~static_cast<tcflag_t>(ECHO);
        if (have_tty) ::tcsetattr(STDIN_FILENO, TCSANOW, &quiet);
        std::getline(std::cin, secret);
        if (have_tty) ::tcsetattr(STDIN_FILENO, TCSANOW, &before);
        std::cerr << "\n";
    } else {
        std::getline(std::cin, secret);
    }
    if (secret.empty()) {
        throw pv::error(pv::errc::auth,
                        "no credential: set PSEUDOVAULT_SECRET or answer "
                        "the prompt");
    }
    return pv::credential{secret};
}

pv::store_handle open_or_init_store(const fs::path& root,
                                    const pv::credential& cred,
                                    std::optional<std::uint64_t> salt_seed) {
    if (fs::exists(root / "header")) {
        return pv::open_store(root, cred);
    }
    auto handle = pv::init_store(root, cred, salt_seed);
    std::cerr << "initialized store at " << handle.root().string() << "\n";
    return handle;
}

std::string join_indices(const std::vector<std::size_t>& indices) {
    std::string out;
    for (const std::size_t r : indices) {
        if (!out.empty()) out += ",";
        out += std::to_string(r);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Subcommand payloads
// ---------------------------------------------------------------------------

struct lint_options {
    std::string schema_path, vocab_path, config_path, csv_path;
    std::string format{"text"};
};

int run_lint(const lint_options& opt) {
    const auto schema = pv::load_schema(pv::read_file(opt.schema_path));
    const auto vocab =
        pv::load_vocabulary(pv::read_file(opt.vocab_path),
                            fs::path(opt.vocab_path).stem().string());
    const auto cfg = pv::load_lint_config(pv::read_file(opt.config_path));
    const auto data =
        pv::load_dataset(pv::read_file(opt.csv_path), schema, opt.csv_path);

    const auto findings = pv::run_lints(data, vocab, cfg);
    if (opt.format == "csv" && !findings.empty()) {
        std::cout << "rule,severity,record_index,column,message\n";
    }
    for (const auto& f : findings) {
        if (opt.format == "csv") {
            std::cout << f.rule << "," << pv::to_string(f.sev) << ","
                      << f.record_index << "," << csv_field(f.column) << ","
                      << csv_field(f.message) << "\n";
        } else {
            std::cout << f.rule << " " << pv::to_string(f.sev) << " record "
                      << f.record_index << " \"" << f.column
                      << "\": " << f.message << "\n";
        }
    }
    return findings.empty() ? exit_ok : exit_reported;
}

struct link_options {
    std::string schema_path, csv_path;
    std::string hi_column{"Healthcare Identifier"};
    std::string name_column{"Name"};
    std::string format{"text"};
};

int run_link(const link_options& opt) {
    const auto schema = pv::load_schema(pv::read_file(opt.schema_path));
    const auto data =
        pv::load_dataset(pv::read_file(opt.csv_path), schema, opt.csv_path);
    const auto groups = pv::group_by_hi(data, opt.hi_column, opt.name_column);
    const auto anomalies =
        pv::detect_anomalies(groups, data, opt.hi_column, opt.name_column);

    if (opt.format == "csv") {
        if (!anomalies.empty()) {
            std::cout << "kind,detail,record_indices\n";
            for (const auto& a : anomalies) {
                std::cout << pv::to_string(a.kind) << ","
                          << csv_field(a.detail) << ","
                          << csv_field(join_indices(a.record_indices))
                          << "\n";
            }
        }
    } else {
        for (const auto& g : groups) {
            std::string names;
            for (const auto& name : g.distinct_names) {
                if (!names.empty()) names += " / ";
                names += "\"" + name + "\"";
            }
            std::cout << "group " << g.hi.text() << ": records "
                      << join_indices(g.record_indices) << " names " << names
                      << "\n";
        }
        for (const auto& a : anomalies) {
            std::cout << "anomaly " << pv::to_string(a.kind) << ": "
                      << a.detail << " (records "
                      << join_indices(a.record_indices) << ")\n";
        }
    }
    return anomalies.empty() ? exit_ok : exit_reported;
}

struct pseudo_options {
    std::string schema_path, policy_path, store_dir, out_dir, csv_path;
    std::optional<std::uint64_t> seed;
    bool allow_invalid_hi{false};
};

int run_pseudo(const pseudo_options& opt) {
    pv::check_separation(opt.store_dir, opt.out_dir);

    const auto schema = pv::load_schema(pv::read_file(opt.schema_path));
    auto policy = pv::load_policy(pv::read_file(opt.policy_path));
    if (opt.seed) policy.seed = opt.seed;
    if (opt.allow_invalid_hi) policy.enforce_hi_validity = false;
    const auto data =
        pv::load_dataset(pv::read_file(opt.csv_path), schema, opt.csv_path);

    const auto cred = obtain_credential();
    // Decouple the header salt stream from the token stream.
    std::optional<std::uint64_t> salt_seed;
    if (policy.seed) salt_seed = *policy.seed ^ 0x9E3779B97F4A7C15ULL;
    auto store = open_or_init_store(opt.store_dir, cred, salt_seed);

    const auto bundle = pv::pseudonymise(data, policy, store);

    std::error_code ec;
    fs::create_directories(opt.out_dir, ec);
    const fs::path release_path = fs::path(opt.out_dir) / "release.csv";
    const fs::path manifest_path = fs::path(opt.out_dir) / "manifest.txt";
    pv::write_file(release_path.string(),
                   pv::write_dataset(bundle.released));
    pv::write_file(manifest_path.string(),
                   pv::write_manifest(bundle.manifest));
    std::cerr << "release: " << release_path.string() << "\n"
              << "manifest: " << manifest_path.string() << "\n"
              << "epoch: " << bundle.epoch << "\n";
    return exit_ok;
}

struct reid_options {
    std::string store_dir, out_dir, csv_path, manifest_path;
    std::optional<std::int64_t> epoch;
};

int run_reid(const reid_options& opt) {
    const std::string released_bytes = pv::read_file(opt.csv_path);
    const fs::path manifest_path =
        opt.manifest_path.empty()
            ? fs::path(opt.csv_path).parent_path() / "manifest.txt"
            : fs::path(opt.manifest_path);
    const auto manifest =
        pv::parse_manifest(pv::read_file(manifest_path.string()));

    if (pv::detail::sha256_hex(released_bytes) != manifest.digest_sha256) {
        throw pv::error(pv::errc::corrupt,
                        "released data does not match the manifest digest");
    }

    // The released header carries the column names; classes beyond the
    // manifest columns are irrelevant for reversal.
    pv::detail::csv_reader header_reader(released_bytes);
    if (header_reader.at_end()) {
        throw pv::error(pv::errc::header_mismatch, "missing header row");
    }
    pv::schema_descriptor schema;
    for (const auto& name : header_reader.read_row()) {
        pv::field_class cls = pv::field_class::clear;
        for (const auto& column : manifest.columns) {
            if (column == name) cls = pv::field_class::identifying;
        }
        schema.columns.push_back(
            pv::column_descriptor{name, cls, pv::column_kind::text});
    }
    const auto released =
        pv::load_dataset(released_bytes, schema, opt.csv_path);

    const auto cred = obtain_credential();
    auto store = pv::open_store(opt.store_dir, cred);
    const auto original = pv::reidentify(released, manifest, store, opt.epoch);

    std::error_code ec;
    fs::create_directories(opt.out_dir, ec);
    const fs::path out_path = fs::path(opt.out_dir) / "reidentified.csv";
    pv::write_file(out_path.string(), pv::write_dataset(original));
    std::cerr << "reidentified: " << out_path.string() << "\n";
    return exit_ok;
}

struct rotate_options {
    std::string store_dir, columns;
    std::optional<std::uint64_t> seed;
};

int run_rotate(const rotate_options& opt) {
    const auto cred = obtain_credential();
    auto store = pv::open_store(opt.store_dir, cred);
    const auto new_epoch =
        pv::rotate(store, pv::detail::split_list(opt.columns), opt.seed);
    std::cout << new_epoch << "\n";
    return exit_ok;
}

struct store_options {
    std::string store_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> epoch;
    std::string format{"text"};
};

int run_store_init(const store_options& opt) {
    const auto cred = obtain_credential();
    const auto handle = pv::init_store(opt.store_dir, cred, opt.seed);
    std::cerr << "initialized store at " << handle.root().string()
              << " (epoch " << handle.epoch() << ")\n";
    return exit_ok;
}

int run_store_export(const store_options& opt) {
    const auto cred = obtain_credential();
    auto store = pv::open_store(opt.store_dir, cred);
    const auto tables = pv::export_tables(store, opt.epoch);
    bool first = true;
    bool csv_header_written = false;
    for (const auto& table : tables) {
        if (opt.format == "csv") {
            if (!csv_header_written && !table.rows.empty()) {
                std::cout << "column,original,pseudonym\n";
                csv_header_written = true;
            }
            for (const auto& [original, token] : table.rows) {
                std::cout << csv_field(table.column) << ","
                          << csv_field(original) << "," << csv_field(token)
                          << "\n";
            }
        } else {
            if (!first) std::cout << "\n";
            first = false;
            std::cout << "Table: " << table.column << "\n";
            std::cout << csv_field(table.column) << ","
                      << csv_field(table.column + " Pseudonym") << "\n";
            for (const auto& [original, token] : table.rows) {
                std::cout << csv_field(original) << "," << csv_field(token)
                          << "\n";
            }
        }
    }
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pseudovault - integrity linting, identifier linkage and "
                 "reversible pseudonymisation for tabular health records"};
    app.require_subcommand(1);

    // validate-hi
    std::vector<std::string> ids;
    auto* validate_cmd = app.add_subcommand(
        "validate-hi", "validate 16-digit healthcare identifiers");
    validate_cmd->add_option("ids", ids, "identifiers to check")->required();

    // gen-hi
    std::string iin, iai;
    auto* gen_cmd = app.add_subcommand(
        "gen-hi", "build an identifier from IIN and IAI parts");
    gen_cmd->add_option("--iin", iin, "6-digit issuer identifier")->required();
    gen_cmd->add_option("--iai", iai, "9-digit account identifier")
        ->required();

    // lint
    lint_options lint_opt;
    auto* lint_cmd =
        app.add_subcommand("lint", "run data-quality rules over a CSV file");
    lint_cmd->add_option("--schema", lint_opt.schema_path, "schema profile")
        ->required();
    lint_cmd->add_option("--vocab", lint_opt.vocab_path, "vocabulary file")
        ->required();
    lint_cmd->add_option("--config", lint_opt.config_path, "lint config")
        ->required();
    lint_cmd->add_option("--format", lint_opt.format, "text|csv")
        ->check(CLI::IsMember({"text", "csv"}));
    lint_cmd->add_option("csv", lint_opt.csv_path, "input CSV")->required();

    // link
    link_options link_opt;
    auto* link_cmd = app.add_subcommand(
        "link", "group records by healthcare identifier and report "
                "anomalies");
    link_cmd->add_option("--schema", link_opt.schema_path, "schema profile")
        ->required();
    link_cmd->add_option("--hi-column", link_opt.hi_column,
                         "identifier column name");
    link_cmd->add_option("--name-column", link_opt.name_column,
                         "name column name");
    link_cmd->add_option("--format", link_opt.format, "text|csv")
        ->check(CLI::IsMember({"text", "csv"}));
    link_cmd->add_option("csv", link_opt.csv_path, "input CSV")->required();

    // pseudo
    pseudo_options pseudo_opt;
    std::uint64_t pseudo_seed = 0;
    auto* pseudo_cmd = app.add_subcommand(
        "pseudo", "substitute identifying columns and write a release");
    pseudo_cmd->add_option("--schema", pseudo_opt.schema_path, "schema")
        ->required();
    pseudo_cmd->add_option("--policy", pseudo_opt.policy_path, "policy file")
        ->required();
    pseudo_cmd->add_option("--store", pseudo_opt.store_dir, "store dir")
        ->required();
    pseudo_cmd->add_option("--out", pseudo_opt.out_dir, "release dir")
        ->required();
    auto* seed_flag = pseudo_cmd->add_option(
        "--seed", pseudo_seed, "seed for reproducible releases");
    pseudo_cmd->add_flag("--allow-invalid-hi", pseudo_opt.allow_invalid_hi,
                         "release despite invalid identifiers");
    pseudo_cmd->add_option("csv", pseudo_opt.csv_path, "input CSV")
        ->required();

    // reid
    reid_options reid_opt;
    std::int64_t reid_epoch = 0;
    auto* reid_cmd = app.add_subcommand(
        "reid", "reverse a release against the mapping store");
    reid_cmd->add_option("--store", reid_opt.store_dir, "store dir")
        ->required();
    reid_cmd->add_option("--out", reid_opt.out_dir, "output dir")->required();
    auto* epoch_flag = reid_cmd->add_option(
        "--epoch", reid_epoch, "resolve at a historical epoch");
    reid_cmd->add_option("--manifest", reid_opt.manifest_path,
                         "manifest path (default: next to the release)");
    reid_cmd->add_option("csv", reid_opt.csv_path, "released CSV")
        ->required();

    // rotate
    rotate_options rotate_opt;
    std::uint64_t rotate_seed = 0;
    auto* rotate_cmd = app.add_subcommand(
        "rotate", "reissue active pseudonyms under a new epoch");
    rotate_cmd->add_option("--store", rotate_opt.store_dir, "store dir")
        ->required();
    rotate_cmd->add_option("--columns", rotate_opt.columns,
                           "comma-separated mapping columns")
        ->required();
    auto* rotate_seed_flag =
        rotate_cmd->add_option("--seed", rotate_seed, "token seed");

    // store init|export
    store_options store_opt;
    std::uint64_t store_seed = 0;
    std::int64_t store_epoch = 0;
    auto* store_cmd =
        app.add_subcommand("store", "mapping store maintenance");
    store_cmd->require_subcommand(1);
    auto* init_cmd = store_cmd->add_subcommand("init", "create a new store");
    init_cmd->add_option("--store", store_opt.store_dir, "store dir")
        ->required();
    auto* store_seed_flag =
        init_cmd->add_option("--seed", store_seed, "salt seed");
    auto* export_cmd = store_cmd->add_subcommand(
        "export", "print the mapping tables");
    export_cmd->add_option("--store", store_opt.store_dir, "store dir")
        ->required();
    auto* store_epoch_flag = export_cmd->add_option(
        "--epoch", store_epoch, "export entries valid at this epoch");
    export_cmd->add_option("--format", store_opt.format, "text|csv")
        ->check(CLI::IsMember({"text", "csv"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_error;
    }

    try {
        if (validate_cmd->parsed()) {
            bool all_valid = true;
            for (const auto& id : ids) {
                const auto report = pv::validate_hi(id);
                if (report.luhn_valid) {
                    std::cout << id << " VALID\n";
                } else {
                    all_valid = false;
                    std::string codes;
                    for (const auto code : report.failures) {
                        if (!codes.empty()) codes += ",";
                        codes += pv::to_string(code);
                    }
                    std::cout << id << " INVALID " << codes << "\n";
                }
            }
            return all_valid ? exit_ok : exit_reported;
        }
        if (gen_cmd->parsed()) {
            std::cout << pv::generate_hi(iin, iai).text() << "\n";
            return exit_ok;
        }
        if (lint_cmd->parsed()) return run_lint(lint_opt);
        if (link_cmd->parsed()) return run_link(link_opt);
        if (pseudo_cmd->parsed()) {
            if (seed_flag->count() > 0) pseudo_opt.seed = pseudo_seed;
            return run_pseudo(pseudo_opt);
        }
        if (reid_cmd->parsed()) {
            if (epoch_flag->count() > 0) reid_opt.epoch = reid_epoch;
            return run_reid(reid_opt);
        }
        if (rotate_cmd->parsed()) {
            if (rotate_seed_flag->count() > 0) rotate_opt.seed = rotate_seed;
            return run_rotate(rotate_opt);
        }
        if (store_cmd->parsed()) {
            if (init_cmd->parsed()) {
                if (store_seed_flag->count() > 0) store_opt.seed = store_seed;
                return run_store_init(store_opt);
            }
            if (store_epoch_flag->count() > 0) store_opt.epoch = store_epoch;
            return run_store_export(store_opt);
        }
    } catch (const pv::error& e) {
        std::cerr << e.what() << "\n";
        return exit_error;
    } catch (const std::exception& e) {
        std::cerr << "IO: " << e.what() << "\n";
        return exit_error;
    }
    return exit_error;
}
