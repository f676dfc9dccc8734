#include "rlink/evalbench.hpp"

#include "rlink/binary_io.hpp"
#include "rlink/csv.hpp"
#include "rlink/error.hpp"
#include "rlink/wire.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fmt/format.h>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>
#include <unordered_map>

namespace rlink::eval {

namespace {

constexpr std::array<std::string_view, 8> kTruthColumns = {"name",    "street", "city",     "postal",
                                                           "country", "sic",    "category", "ids"};

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::InvalidGroundTruth, what); }

std::optional<Category> parse_category(std::string_view s) {
    if (s == "MATCHED") return Category::Matched;
    if (s == "UNMATCHED") return Category::Unmatched;
    if (s == "UNDECIDED") return Category::Undecided;
    return std::nullopt;
}

std::vector<std::uint32_t> parse_ids(const std::string& text, std::size_t line) {
    std::vector<std::uint32_t> ids;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ';')) {
        if (item.empty()) continue;
        std::size_t used = 0;
        unsigned long v = 0;
        try {
            v = std::stoul(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size() || v > UINT32_MAX) invalid("truth line " + std::to_string(line) + ": bad id '" + item + "'");
        ids.push_back(static_cast<std::uint32_t>(v));
    }
    return ids;
}

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string lower(std::string_view s) {
    std::string out;
    icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<std::int32_t>(s.size()))).toLower().toUTF8String(out);
    return out;
}

std::optional<std::uint32_t> rank_one(const LinkOutcome& o) {
    if (o.error || o.matches.empty()) return std::nullopt;
    return o.matches.front().record_id;
}

double percentile(std::vector<double> v, double p) {
    if (v.empty()) return 0;
    std::sort(v.begin(), v.end());
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (v[hi] - v[lo]) * (pos - static_cast<double>(lo));
}

}  // namespace

std::string_view to_string(Category c) noexcept {
    switch (c) {
        case Category::Matched: return "MATCHED";
        case Category::Unmatched: return "UNMATCHED";
        case Category::Undecided: return "UNDECIDED";
    }
    return "UNKNOWN";
}

std::vector<GroundTruthEntry> read_truth(std::istream& in) {
    csv::Reader reader(in, '\t');
    std::vector<std::string> fields;
    if (reader.next(fields) != csv::Reader::Status::Row) invalid("ground truth has no header");
    std::vector<std::size_t> pos;
    for (auto col : kTruthColumns) {
        const auto it = std::find(fields.begin(), fields.end(), col);
        if (it == fields.end()) invalid("ground truth header lacks column '" + std::string(col) + "'");
        pos.push_back(static_cast<std::size_t>(it - fields.begin()));
    }
    const std::size_t width = fields.size();

    std::vector<GroundTruthEntry> out;
    while (true) {
        const auto st = reader.next(fields);
        if (st == csv::Reader::Status::End) break;
        if (st == csv::Reader::Status::Malformed || fields.size() != width) {
            invalid("ground truth line " + std::to_string(reader.line()) + " is malformed");
        }
        GroundTruthEntry e;
        e.query.name = fields[pos[0]];
        store::Address a{fields[pos[1]], fields[pos[2]], fields[pos[3]], fields[pos[4]]};
        if (!a.empty()) e.query.addresses.push_back(std::move(a));
        if (!fields[pos[5]].empty()) e.query.sics.push_back(fields[pos[5]]);
        const auto cat = parse_category(fields[pos[6]]);
        if (!cat) invalid("ground truth line " + std::to_string(reader.line()) + ": unknown category '" + fields[pos[6]] + "'");
        e.category = *cat;
        e.ids = parse_ids(fields[pos[7]], reader.line());
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<GroundTruthEntry> load_truth(const std::filesystem::path& path) {
    std::istringstream ss(io::read_file(path.string()));
    return read_truth(ss);
}

void write_truth(std::ostream& out, std::span<const GroundTruthEntry> entries) {
    out << csv::join_row({kTruthColumns.begin(), kTruthColumns.end()}, '\t') << '\n';
    for (const auto& e : entries) {
        const store::Address a = e.query.addresses.empty() ? store::Address{} : e.query.addresses.front();
        std::string ids;
        for (std::size_t i = 0; i < e.ids.size(); ++i) ids += (i ? ";" : "") + std::to_string(e.ids[i]);
        out << csv::join_row({e.query.name, a.street, a.city, a.postal, a.country,
                              e.query.sics.empty() ? std::string{} : e.query.sics.front(),
                              std::string(to_string(e.category)), ids},
                             '\t')
            << '\n';
    }
}

void validate_truth(std::span<const GroundTruthEntry> entries, std::size_t store_size) {
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        if (e.category == Category::Matched && e.ids.empty()) {
            invalid("entry " + std::to_string(i) + " is MATCHED without reference ids");
        }
        for (auto id : e.ids) {
            if (id >= store_size) invalid("entry " + std::to_string(i) + " refers to unknown id " + std::to_string(id));
        }
    }
}

nlohmann::json EvalReport::to_json() const {
    return {{"entries", entries},     {"matched", matched}, {"unmatched", unmatched},
            {"undecided", undecided}, {"tp", tp},           {"fp", fp},
            {"fn", fn},               {"tn", tn},           {"undecided_fp", undecided_fp},
            {"recall", recall},       {"precision", precision}, {"mean_comparisons", mean_comparisons}};
}

EvalReport tally(std::span<const GroundTruthEntry> entries, std::span<const std::optional<std::uint32_t>> decisions,
                 std::span<const std::size_t> comparisons) {
    if (decisions.size() != entries.size()) throw Error(ErrorCode::OutOfRange, "one decision per entry is required");
    EvalReport r;
    r.entries = entries.size();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        const auto& d = decisions[i];
        const bool listed = d && std::find(e.ids.begin(), e.ids.end(), *d) != e.ids.end();
        switch (e.category) {
            case Category::Matched:
                ++r.matched;
                if (listed) {
                    ++r.tp;
                } else {
                    ++r.fn;
                    if (d) ++r.fp;
                }
                break;
            case Category::Unmatched:
                ++r.unmatched;
                if (d) {
                    ++r.fp;
                } else {
                    ++r.tn;
                }
                break;
            case Category::Undecided:
                ++r.undecided;
                if (d && !listed) {
                    ++r.fp;
                    ++r.undecided_fp;
                }
                break;
        }
    }
    r.recall = ratio(r.tp, r.tp + r.fn);
    r.precision = ratio(r.tp, r.tp + r.fp);
    if (!comparisons.empty()) {
        r.mean_comparisons = static_cast<double>(std::accumulate(comparisons.begin(), comparisons.end(), std::size_t{0})) /
                             static_cast<double>(comparisons.size());
    }
    return r;
}

EvalReport evaluate(std::span<const GroundTruthEntry> entries, const Linker& linker, const LinkOptions& options,
                    std::size_t workers) {
    validate_truth(entries, linker.store().size());
    std::vector<store::QueryRecord> queries;
    queries.reserve(entries.size());
    for (const auto& e : entries) queries.push_back(e.query);
    LinkOptions opts = options;
    opts.top_n = 1;
    const auto outcomes = linker.link_batch(queries, workers, opts);

    std::vector<std::optional<std::uint32_t>> decisions;
    std::vector<std::size_t> comparisons;
    for (const auto& o : outcomes) {
        decisions.push_back(rank_one(o));
        comparisons.push_back(o.comparisons);
    }
    return tally(entries, decisions, comparisons);
}

EvalReport trivial_baseline(std::span<const GroundTruthEntry> entries, const store::EntityStore& store) {
    std::unordered_map<std::string, std::uint32_t> by_name;
    for (const auto& r : store) by_name.emplace(lower(r.name), r.id);
    std::vector<std::optional<std::uint32_t>> decisions;
    for (const auto& e : entries) {
        const auto it = by_name.find(lower(e.query.name));
        decisions.push_back(it == by_name.end() ? std::nullopt : std::optional<std::uint32_t>(it->second));
    }
    return tally(entries, decisions);
}

std::vector<TradeoffRow> blocking_tradeoff(const store::EntityStore& store, std::span<const blocking::BandConfig> configs,
                                           std::span<const GroundTruthEntry> truth, const Linker& base,
                                           const std::optional<std::filesystem::path>& workdir, std::size_t workers) {
    std::vector<GroundTruthEntry> name_only(truth.begin(), truth.end());
    for (auto& e : name_only) {
        e.query.addresses.clear();
        e.query.sics.clear();
    }

    std::vector<TradeoffRow> rows;
    for (const auto& cfg : configs) {
        Linker::Parts parts;
        parts.config = base.config();
        parts.config.band = cfg;
        parts.store = store;
        parts.lexicon = base.lexicon();
        if (base.trie()) parts.trie = *base.trie();

        blocking::KeyGenerator keygen(cfg, parts.config.seed, parts.lexicon);
        blocking::BlockingIndex index(cfg, parts.config.seed);
        for (const auto& r : store) {
            if (const auto keys = keygen.keys(r.name)) index.insert(r.id, *keys);
        }
        TradeoffRow row;
        row.config = cfg;
        const std::string bytes = index.serialize();
        row.index_bytes = bytes.size();
        row.keys = index.key_count();
        if (workdir) {
            io::write_file_atomic((*workdir / ("blocking-" + std::to_string(cfg.rows) + "x" + std::to_string(cfg.bands) +
                                               ".rlbk"))
                                      .string(),
                                  bytes);
        }
        parts.index = std::move(index);
        const Linker linker(std::move(parts));
        const auto report = evaluate(name_only, linker, {}, workers);
        row.recall = report.recall;
        row.mean_comparisons = report.mean_comparisons;
        rows.push_back(row);
    }
    return rows;
}

double montecarlo_scurve(blocking::BandConfig cfg, double similarity, std::size_t trials, std::uint64_t seed) {
    if (!(similarity >= 0 && similarity <= 1)) throw Error(ErrorCode::OutOfRange, "similarity must lie in [0,1]");
    if (trials < 1) throw Error(ErrorCode::OutOfRange, "at least one trial is required");

    // Smallest union size >= 100 for which similarity * union is an integer.
    std::size_t union_size = 0, shared = 0;
    for (std::size_t u = 100; u <= 10000; ++u) {
        const double k = similarity * static_cast<double>(u);
        if (std::abs(k - std::round(k)) < 1e-9) {
            union_size = u;
            shared = static_cast<std::size_t>(std::llround(k));
            break;
        }
    }
    if (union_size == 0) {
        throw Error(ErrorCode::InfeasibleSimilarity, fmt::format("similarity {} has no exact representation", similarity));
    }

    const blocking::HashFamily family(seed, cfg.total_hashes());
    std::mt19937_64 rng(seed ^ 0x5eed5eed5eed5eedULL);
    std::size_t hits = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        textnorm::ShingleSet a, b;
        const std::size_t only = union_size - shared;
        for (std::size_t i = 0; i < union_size; ++i) {
            std::string element = fmt::format("{:016x}", rng());
            if (i < shared) {
                a.push_back(element);
                b.push_back(std::move(element));
            } else if (i - shared < (only + 1) / 2) {
                a.push_back(std::move(element));
            } else {
                b.push_back(std::move(element));
            }
        }
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        if (a.empty() || b.empty()) {
            // Similarity 0 with one side empty cannot share a key.
            continue;
        }
        const auto ka = blocking::band_keys(blocking::minhash_signature(a, family), cfg);
        const auto kb = blocking::band_keys(blocking::minhash_signature(b, family), cfg);
        bool shared_key = false;
        for (std::size_t i = 0; i < ka.size() && !shared_key; ++i) shared_key = ka[i] == kb[i];
        hits += shared_key;
    }
    return static_cast<double>(hits) / static_cast<double>(trials);
}

// ---------------------------------------------------------------------------

BenchResult bench(const BenchOptions& options, std::span<const store::QueryRecord> batch) {
    nlohmann::json body_json = {{"queries", nlohmann::json::array()}};
    for (const auto& q : batch) body_json["queries"].push_back(wire::query_to_json(q));
    const std::string body = body_json.dump();

    {
        httplib::Client probe(options.host, options.port);
        const auto res = probe.Get("/health");
        if (!res || res->status != 200) {
            throw Error(ErrorCode::ServiceUnreachable,
                        fmt::format("service at {}:{} is not ready", options.host, options.port));
        }
    }

    using Clock = std::chrono::steady_clock;
    struct Sample {
        double finished_s;
        double latency_ms;
    };
    std::mutex mu;
    std::vector<Sample> samples;
    std::atomic<std::size_t> failures{0};
    const auto t0 = Clock::now();
    {
        std::vector<std::jthread> clients;
        for (std::size_t c = 0; c < options.clients; ++c) {
            clients.emplace_back([&] {
                httplib::Client cli(options.host, options.port);
                cli.set_keep_alive(true);
                cli.set_read_timeout(120, 0);
                std::vector<Sample> local;
                for (std::size_t r = 0; r < options.requests_per_client; ++r) {
                    const auto start = Clock::now();
                    const auto res = cli.Post("/link", body, "application/json");
                    const auto end = Clock::now();
                    if (!res || res->status != 200) {
                        ++failures;
                        continue;
                    }
                    local.push_back({std::chrono::duration<double>(end - t0).count(),
                                     std::chrono::duration<double, std::milli>(end - start).count()});
                }
                std::lock_guard lock(mu);
                samples.insert(samples.end(), local.begin(), local.end());
            });
        }
    }
    const double wall_s = std::chrono::duration<double>(Clock::now() - t0).count();

    BenchResult r;
    r.clients = options.clients;
    r.requests = samples.size();
    r.failures = failures;
    std::sort(samples.begin(), samples.end(), [](const Sample& a, const Sample& b) { return a.finished_s < b.finished_s; });
    std::vector<double> lat;
    for (const auto& s : samples) lat.push_back(s.latency_ms);
    if (!lat.empty()) {
        r.mean_ms = std::accumulate(lat.begin(), lat.end(), 0.0) / static_cast<double>(lat.size());
        r.p50_ms = percentile(lat, 0.5);
        r.p95_ms = percentile(lat, 0.95);
    }
    r.throughput_rps = wall_s > 0 ? static_cast<double>(r.requests) / wall_s : 0;

    // Windowed means over the second half of the run, in completion order.
    const std::size_t half = lat.size() / 2;
    const std::size_t windows = std::min<std::size_t>(10, lat.size() - half);
    if (windows >= 2) {
        std::vector<double> means;
        const std::size_t per = (lat.size() - half) / windows;
        for (std::size_t w = 0; w < windows; ++w) {
            const auto b = lat.begin() + static_cast<std::ptrdiff_t>(half + w * per);
            means.push_back(std::accumulate(b, b + static_cast<std::ptrdiff_t>(per), 0.0) / static_cast<double>(per));
        }
        const double m = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(means.size());
        double var = 0;
        for (double x : means) var += (x - m) * (x - m);
        var /= static_cast<double>(means.size());
        r.steady_state_cv = m > 0 ? std::sqrt(var) / m : 0;
    }

    httplib::Client info(options.host, options.port);
    if (const auto res = info.Get("/info"); res && res->status == 200) {
        r.high_water_mark = nlohmann::json::parse(res->body).value("high_water_mark", std::size_t{0});
    }
    return r;
}

void write_bench_csv_header(std::ostream& out) {
    out << "clients,requests,failures,mean_ms,p50_ms,p95_ms,throughput_rps,steady_state_cv,high_water_mark\n";
}

void write_bench_csv_row(std::ostream& out, const BenchResult& r) {
    out << fmt::format("{},{},{},{:.3f},{:.3f},{:.3f},{:.3f},{:.4f},{}\n", r.clients, r.requests, r.failures, r.mean_ms,
                       r.p50_ms, r.p95_ms, r.throughput_rps, r.steady_state_cv, r.high_water_mark);
}

}  // namespace rlink::eval
