#include "qgram/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <iomanip>
#include <sstream>

#include "qgram/ngram.hpp"

namespace qgram {

namespace {

using json = nlohmann::json;
using clock_type = std::chrono::steady_clock;

double ms_since(clock_type::time_point start)
{
    return std::chrono::duration<double, std::milli>(clock_type::now() - start).count();
}

int qubit_budget_from_env()
{
    if (const char* env = std::getenv("QGRAM_QUBIT_BUDGET")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1 || v > 62) {
            throw argument_error("QGRAM_QUBIT_BUDGET must be an integer in [1, 62], got '" +
                                 std::string(env) + "'");
        }
        return int(v);
    }
    return default_qubit_budget;
}

std::string human_bytes(std::uint64_t bytes)
{
    static constexpr const char* units[] = {"bytes", "KB", "MB", "GB", "TB", "PB"};
    int unit = 0;
    double v = double(bytes);
    while (v >= 1024.0 && unit < 5) {
        v /= 1024.0;
        ++unit;
    }
    std::ostringstream os;
    if (v == std::floor(v)) {
        os << std::uint64_t(v);
    } else {
        os << std::setprecision(3) << v;
    }
    os << ' ' << units[unit];
    return os.str();
}

struct SearchArgs {
    std::string table_path;
    std::string ngram_hex;
    std::string precision = "double";
    std::uint64_t seed = 0;
    bool trace = false;
    bool emit_json = false;
    bool allow_miss = false;
};

json trace_to_json(const SearchTrace& trace, const SearchArgs& args)
{
    json doc;
    doc["command"] = "search";
    doc["table"] = args.table_path;
    doc["target_ngram"] = args.ngram_hex;
    doc["precision"] = args.precision;
    doc["seed"] = args.seed;
    doc["plan"] = {{"index_bits", trace.plan.index_bits},
                   {"value_bits", trace.plan.value_bits},
                   {"carry_index", trace.plan.carry_index},
                   {"total_qubits", trace.plan.total_qubits},
                   {"iterations", trace.plan.iterations},
                   {"theta", trace.plan.theta}};
    doc["per_iteration_probability"] = trace.per_iteration_probability;
    doc["measured_hash"] = hex_of_value(trace.measured_hash);
    doc["measured_ngram"] = hex_of_bytes(trace.measured_ngram);
    doc["matched"] = trace.matched;
    doc["multiplicity"] = trace.multiplicity;
    return doc;
}

int cmd_search(const SearchArgs& args, std::ostream& out, std::ostream& err)
{
    const int budget = qubit_budget_from_env();

    auto t0 = clock_type::now();
    const LookupTable table = load_table(args.table_path);
    const double load_ms = ms_since(t0);

    const std::vector<std::uint8_t> target = parse_hex(args.ngram_hex);
    if (target.size() * 8 != std::size_t(table.value_bits)) {
        throw argument_error("--ngram is " + std::to_string(target.size()) +
                             " bytes; this table stores " + std::to_string(table.value_bits / 8) +
                             "-byte values");
    }
    if (pack_ngram(target) == 0) {
        err << "warning: target equals the empty-bucket sentinel 0; every unpopulated bucket "
               "matches, so this is a multi-match search\n";
    }

    SearchOptions options;
    options.seed = args.seed;
    options.qubit_budget = budget;

    t0 = clock_type::now();
    const SearchTrace trace = args.precision == "single"
                                  ? grover_search<float>(table, target, options)
                                  : grover_search<double>(table, target, options);
    const double search_ms = ms_since(t0);
    err << "[time] load: " << load_ms << " ms, search: " << search_ms << " ms\n";

    if (args.emit_json) {
        out << trace_to_json(trace, args).dump(2) << '\n';
    } else {
        render_trace(out, trace, args.trace);
    }
    return trace.matched || args.allow_miss ? 0 : 1;
}

int cmd_verify(const std::string& table_path, const std::string& ngram_hex, std::ostream& out,
               std::ostream& err)
{
    const LookupTable table = load_table(table_path);
    const std::vector<std::uint8_t> target = parse_hex(ngram_hex);
    if (target.size() * 8 != std::size_t(table.value_bits)) {
        throw argument_error("--ngram is " + std::to_string(target.size()) +
                             " bytes; this table stores " + std::to_string(table.value_bits / 8) +
                             "-byte values");
    }
    const auto t0 = clock_type::now();
    const auto hits = classical_find_value(table, pack_ngram(target));
    err << "[time] scan: " << ms_since(t0) << " ms over " << table.entries.size()
        << " entries\n";
    for (std::size_t i = 0; i < hits.size(); ++i) {
        out << (i ? " " : "") << hex_of_value(hits[i]);
    }
    out << '\n';
    return hits.empty() ? 1 : 0;
}

struct IngestArgs {
    std::string malicious_dir;
    std::string benign_dir;
    std::uint32_t n = 2;
    std::uint32_t index_bits = 10;
    std::size_t keep = 1024;
    std::string policy = "exclude";
    std::uint64_t benign_threshold = 1;
    std::string output;
};

int cmd_ingest(const IngestArgs& args, std::ostream& out, std::ostream& err)
{
    NgramConfig config;
    config.n = args.n;
    config.index_bits = args.index_bits;
    config.benign_policy =
        args.policy == "subtract" ? BenignPolicy::subtract : BenignPolicy::exclude;
    config.benign_threshold = args.benign_threshold;
    config.validate();

    auto t0 = clock_type::now();
    const auto malicious_files = collect_corpus_files(args.malicious_dir);
    const BucketCounter malicious = count_corpus(malicious_files, config, CorpusLabel::malicious);

    BucketCounter benign;
    if (!args.benign_dir.empty()) {
        const auto benign_files = collect_corpus_files(args.benign_dir);
        if (!benign_files.empty()) {
            benign = count_corpus(benign_files, config, CorpusLabel::benign);
        }
    }
    const double count_ms = ms_since(t0);

    t0 = clock_type::now();
    const Selection selection = select_top_k(malicious, benign, args.keep, config);
    TableBuild build = build_table(selection.records, int(config.index_bits),
                                   int(config.value_bits()));
    build.table.hash_base = config.hash_base;
    build.table.hash_modulus = config.hash_modulus;

    json meta;
    meta["n"] = config.n;
    meta["index_bits"] = config.index_bits;
    meta["policy"] = args.policy;
    meta["benign_threshold"] = config.benign_threshold;
    meta["malicious"] = args.malicious_dir;
    meta["benign"] = args.benign_dir;
    meta["kept"] = selection.records.size();
    build.table.metadata = meta.dump();

    save_table(build.table, args.output);
    err << "[time] count: " << count_ms << " ms, select+build: " << ms_since(t0) << " ms\n";

    for (const std::string& path : malicious.skipped_files) {
        err << "warning: skipped unreadable file " << path << '\n';
    }
    for (const std::string& path : benign.skipped_files) {
        err << "warning: skipped unreadable file " << path << '\n';
    }

    out << "files processed: " << malicious.files_processed << " malicious, "
        << benign.files_processed << " benign\n";
    out << "windows counted: " << malicious.total_ngrams << " malicious, "
        << benign.total_ngrams << " benign\n";
    out << "kept: " << selection.records.size() << " of " << args.keep << " requested";
    if (selection.shortfall) {
        out << " (shortfall)";
    }
    out << '\n';
    out << "collisions: " << build.collisions << '\n';
    out << "wrote " << args.output << '\n';
    return 0;
}

} // namespace

std::string hex_of_bytes(std::span<const std::uint8_t> bytes)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string hex;
    hex.reserve(bytes.size() * 2);
    for (std::uint8_t b : bytes) {
        hex.push_back(digits[b >> 4]);
        hex.push_back(digits[b & 0xF]);
    }
    return hex;
}

std::string hex_of_value(std::uint64_t value)
{
    std::ostringstream os;
    os << std::hex << value;
    return os.str();
}

std::vector<std::uint8_t> parse_hex(const std::string& hex)
{
    if (hex.empty() || hex.size() % 2 != 0) {
        throw argument_error("hex string must have an even, nonzero number of digits: '" + hex +
                             "'");
    }
    auto nibble = [&](char c) -> std::uint8_t {
        if (c >= '0' && c <= '9') {
            return std::uint8_t(c - '0');
        }
        if (c >= 'a' && c <= 'f') {
            return std::uint8_t(c - 'a' + 10);
        }
        if (c >= 'A' && c <= 'F') {
            return std::uint8_t(c - 'A' + 10);
        }
        throw argument_error("invalid hex digit '" + std::string(1, c) + "' in '" + hex + "'");
    };
    std::vector<std::uint8_t> bytes(hex.size() / 2);
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        bytes[i] = std::uint8_t(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
    }
    return bytes;
}

void render_trace(std::ostream& out, const SearchTrace& trace, bool per_iteration_lines)
{
    if (per_iteration_lines) {
        const int width =
            std::max<int>(2, int(std::to_string(std::max(trace.plan.iterations - 1, 0)).size()));
        for (std::size_t m = 0; m < trace.per_iteration_probability.size(); ++m) {
            out << '\t' << std::setw(width) << m
                << "> chance of match:" << trace.per_iteration_probability[m] << '\n';
        }
    }
    const std::uint64_t target = pack_ngram(trace.measured_ngram);
    out << "After measurement (of value, key, or both):\n";
    out << "Chance of match:" << (trace.matched && trace.measured_value == target ? 1 : 0)
        << '\n';
    out << "Ngram: " << hex_of_bytes(trace.measured_ngram) << '\n';
    out << "Hash: " << hex_of_value(trace.measured_hash) << '\n';
    out << "Total Iterations: " << trace.plan.iterations << '\n';
}

int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Grover key/value search over n-gram hash tables (state-vector simulation)",
                 "qgram"};
    app.require_subcommand(1);

    IngestArgs ingest;
    auto* ingest_cmd =
        app.add_subcommand("ingest", "Extract n-grams from corpora and build a table file");
    ingest_cmd->add_option("--malicious", ingest.malicious_dir, "Malicious corpus directory")
        ->required();
    ingest_cmd->add_option("--benign", ingest.benign_dir, "Benign corpus directory");
    ingest_cmd->add_option("-n,--ngram-bytes", ingest.n, "n-gram length in bytes (1-8)");
    ingest_cmd->add_option("--index-bits", ingest.index_bits, "Hash bucket bits k (table size 2^k)");
    ingest_cmd->add_option("--keep", ingest.keep, "How many top records to keep");
    ingest_cmd->add_option("--policy", ingest.policy, "Benign policy")
        ->check(CLI::IsMember({"exclude", "subtract"}));
    ingest_cmd->add_option("--benign-threshold", ingest.benign_threshold,
                           "Benign count at which exclude drops a bucket");
    ingest_cmd->add_option("-o,--output", ingest.output, "Table file to write")->required();

    SearchArgs search;
    auto* search_cmd = app.add_subcommand("search", "Grover-search a table for an n-gram value");
    search_cmd->add_option("--table", search.table_path, "Table file")->required();
    search_cmd->add_option("--ngram", search.ngram_hex, "Target n-gram as lowercase hex")
        ->required();
    search_cmd->add_option("--precision", search.precision, "Amplitude precision")
        ->check(CLI::IsMember({"single", "double"}));
    search_cmd->add_option("--seed", search.seed, "Measurement RNG seed");
    search_cmd->add_flag("--trace", search.trace, "Print per-iteration match probabilities");
    search_cmd->add_flag("--json", search.emit_json, "Emit the search trace as JSON");
    search_cmd->add_flag("--allow-miss", search.allow_miss, "Exit 0 even when the value is absent");

    std::string verify_table;
    std::string verify_ngram;
    auto* verify_cmd =
        app.add_subcommand("verify", "Classical linear-scan lookup (the ground-truth oracle)");
    verify_cmd->add_option("--table", verify_table, "Table file")->required();
    verify_cmd->add_option("--ngram", verify_ngram, "Target n-gram as lowercase hex")->required();

    int est_qubits = 0;
    int est_bytes_per_component = 8;
    auto* estimate_cmd =
        app.add_subcommand("estimate", "State-vector memory needed for a register width");
    estimate_cmd->add_option("--qubits", est_qubits, "Register width")->required();
    estimate_cmd
        ->add_option("--bytes-per-component", est_bytes_per_component,
                     "Bytes per real/imaginary component")
        ->check(CLI::IsMember({4, 8}));

    int iter_index_bits = 0;
    std::uint64_t iter_entries = 0;
    auto* iterations_cmd =
        app.add_subcommand("iterations", "Grover iteration count for an index width");
    iterations_cmd->add_option("--index-bits", iter_index_bits, "Index register bits")->required();
    iterations_cmd->add_option("--entries", iter_entries, "Table entry count for the lookup estimate");

    try {
        std::reverse(args.begin(), args.end()); // CLI11's vector overload wants reversed args
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*ingest_cmd) {
            return cmd_ingest(ingest, out, err);
        }
        if (*search_cmd) {
            return cmd_search(search, out, err);
        }
        if (*verify_cmd) {
            return cmd_verify(verify_table, verify_ngram, out, err);
        }
        if (*estimate_cmd) {
            if (est_qubits < 1 || est_qubits > 62) {
                throw argument_error("--qubits must be in [1, 62]");
            }
            const std::uint64_t bytes = memory_estimate(est_qubits, est_bytes_per_component);
            out << bytes << " bytes (~" << human_bytes(bytes) << ")\n";
            return 0;
        }
        if (*iterations_cmd) {
            out << "iterations: " << iteration_count(iter_index_bits) << '\n';
            if (iterations_cmd->count("--entries")) {
                out << "estimated lookups: " << lookup_estimate(iter_entries) << '\n';
            }
            return 0;
        }
    } catch (const resource_error& e) {
        err << "resource error: " << e.what() << '\n';
        return 3;
    } catch (const format_error& e) {
        err << "table format error: " << e.what() << '\n';
        return 4;
    } catch (const argument_error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return 5;
    }
    return 0;
}

} // namespace qgram
