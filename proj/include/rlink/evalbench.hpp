#pragma once

#include "rlink/blocking.hpp"
#include "rlink/entity_store.hpp"
#include "rlink/pipeline.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rlink::eval {

enum class Category { Matched, Unmatched, Undecided };

std::string_view to_string(Category c) noexcept;

struct GroundTruthEntry {
    store::QueryRecord query;
    Category category = Category::Unmatched;
    /// Correct reference ids (MATCHED) or the entry's own records (UNDECIDED).
    std::vector<std::uint32_t> ids;
};

/// Tab-separated with a header: name, street, city, postal, country, sic,
/// category, ids (semicolon separated).
std::vector<GroundTruthEntry> read_truth(std::istream& in);
std::vector<GroundTruthEntry> load_truth(const std::filesystem::path& path);
void write_truth(std::ostream& out, std::span<const GroundTruthEntry> entries);

/// Throws InvalidGroundTruth when a MATCHED entry has no ids or an id is not
/// below `store_size`.
void validate_truth(std::span<const GroundTruthEntry> entries, std::size_t store_size);

struct EvalReport {
    std::size_t entries = 0;
    std::size_t matched = 0;
    std::size_t unmatched = 0;
    std::size_t undecided = 0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;
    /// Part of `fp` coming from UNDECIDED entries.
    std::size_t undecided_fp = 0;
    double recall = 0;
    double precision = 0;
    double mean_comparisons = 0;

    nlohmann::json to_json() const;
};

/// Applies the category rules to one rank-1 decision per entry (nullopt: no
/// result above the threshold). A wrong id on a MATCHED entry is both a false
/// positive and a miss.
EvalReport tally(std::span<const GroundTruthEntry> entries, std::span<const std::optional<std::uint32_t>> decisions,
                 std::span<const std::size_t> comparisons = {});

EvalReport evaluate(std::span<const GroundTruthEntry> entries, const Linker& linker, const LinkOptions& options = {},
                    std::size_t workers = 1);

/// Case-insensitive exact name lookup; the lowest matching id wins.
EvalReport trivial_baseline(std::span<const GroundTruthEntry> entries, const store::EntityStore& store);

struct TradeoffRow {
    blocking::BandConfig config;
    double recall = 0;
    std::size_t index_bytes = 0;
    std::size_t keys = 0;
    double mean_comparisons = 0;
};

/// One row per band configuration with name-only scoring. `base` supplies the
/// scoring settings, lexicon and seed; when `workdir` is set each index is also
/// written there.
std::vector<TradeoffRow> blocking_tradeoff(const store::EntityStore& store, std::span<const blocking::BandConfig> configs,
                                           std::span<const GroundTruthEntry> truth, const Linker& base,
                                           const std::optional<std::filesystem::path>& workdir = std::nullopt,
                                           std::size_t workers = 1);

/// Empirical probability that two random sets with Jaccard similarity exactly
/// `similarity` share a band key.
double montecarlo_scurve(blocking::BandConfig cfg, double similarity, std::size_t trials, std::uint64_t seed);

struct BenchOptions {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::size_t clients = 1;
    std::size_t requests_per_client = 100;
};

struct BenchResult {
    std::size_t clients = 0;
    std::size_t requests = 0;
    std::size_t failures = 0;
    double mean_ms = 0;
    double p50_ms = 0;
    double p95_ms = 0;
    double throughput_rps = 0;
    /// Coefficient of variation of windowed mean latency over the second half.
    double steady_state_cv = 0;
    std::size_t high_water_mark = 0;
};

/// Drives `clients` concurrent HTTP clients posting `batch` to /link.
BenchResult bench(const BenchOptions& options, std::span<const store::QueryRecord> batch);

void write_bench_csv_header(std::ostream& out);
void write_bench_csv_row(std::ostream& out, const BenchResult& r);

}  // namespace rlink::eval
