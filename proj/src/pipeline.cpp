#include "rlink/pipeline.hpp"

#include "rlink/binary_io.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <thread>

namespace rlink {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

}  // namespace

textnorm::LegalEntityLexicon load_lexicon(const std::filesystem::path& path) {
    if (path.empty()) return {};
    return textnorm::LegalEntityLexicon::load(path);
}

PreprocessStats preprocess(std::istream& source, const store::DatasetSchema& schema, const LinkerConfig& config,
                           const PreprocessOptions& options) {
    config.validate();
    PreprocessStats st;

    auto t = Clock::now();
    auto records = store::ingest(source, schema, &st.ingest);
    if (records.empty()) throw Error(ErrorCode::EmptyCorpus, "source contains no usable records");
    st.ingest_ms = ms_since(t);

    t = Clock::now();
    if (options.short_names && !config.shortname_model.empty()) {
        const auto model = shortname::ShortNameModel::load(config.shortname_model);
        const auto freq =
            config.frequencies.empty() ? shortname::FrequencyTable{} : shortname::FrequencyTable::load(config.frequencies);
        for (auto& r : records) {
            if (!r.short_name.empty()) continue;
            r.short_name = shortname::predict(r.name, model, freq);
            ++st.short_names;
        }
    }
    st.short_name_ms = ms_since(t);

    t = Clock::now();
    store::EntityStore db(std::move(records));
    const std::string db_bytes = db.serialize();
    st.records = db.size();
    st.entity_db_ms = ms_since(t);

    t = Clock::now();
    const auto lexicon = load_lexicon(config.lexicon);
    blocking::KeyGenerator keygen(config.band, config.seed, lexicon);
    blocking::BlockingIndex index(config.band, config.seed);
    for (const auto& r : db) {
        const auto keys = keygen.keys(r.name);
        if (!keys) {
            ++st.unindexed;
            continue;
        }
        index.insert(r.id, *keys);
    }
    const std::string index_bytes = index.serialize();
    st.keys = index.key_count();
    st.postings = index.posting_count();
    st.blocking_ms = ms_since(t);

    io::write_file_atomic(config.entity_db.string(), db_bytes);
    try {
        io::write_file_atomic(config.blocking_db.string(), index_bytes);
    } catch (...) {
        std::error_code ec;
        std::filesystem::remove(config.entity_db, ec);
        throw;
    }
    spdlog::info("preprocess: {} records, {} unindexed, {} keys, {} postings", st.records, st.unindexed, st.keys,
                 st.postings);
    return st;
}

// ---------------------------------------------------------------------------

Linker::State::State(Parts p) : Parts(std::move(p)), keys(config.band, config.seed, lexicon) {}

Linker::Linker(Parts parts) {
    if (parts.index.config() != parts.config.band || parts.index.seed() != parts.config.seed) {
        throw Error(ErrorCode::InvalidConfig, "blocking database was built with " + parts.index.config().to_string() +
                                                  " seed " + std::to_string(parts.index.seed()) +
                                                  ", configuration asks for " + parts.config.band.to_string() +
                                                  " seed " + std::to_string(parts.config.seed));
    }
    state_ = std::make_shared<const State>(std::move(parts));
}

Linker Linker::load(const LinkerConfig& config) {
    config.validate();
    Parts p;
    p.config = config;
    p.store = store::EntityStore::load(config.entity_db);
    p.index = blocking::BlockingIndex::load(config.blocking_db);
    p.lexicon = load_lexicon(config.lexicon);
    if (!config.gazetteer.empty()) {
        geo::GazetteerStats gs;
        p.trie = geo::CityTrie::load(config.gazetteer, &gs);
        spdlog::info("gazetteer: {} cities ({} malformed rows)", gs.inserted, gs.malformed);
    }
    if (!config.shortname_model.empty()) p.model = shortname::ShortNameModel::load(config.shortname_model);
    if (!config.frequencies.empty()) p.frequencies = shortname::FrequencyTable::load(config.frequencies);
    return Linker(std::move(p));
}

std::vector<std::uint32_t> Linker::candidates(const store::QueryRecord& query) const {
    std::vector<std::uint32_t> out;
    auto add = [&](const std::string& name) {
        if (const auto keys = state_->keys.keys(name)) {
            const auto c = state_->index.candidates(*keys);
            out.insert(out.end(), c.begin(), c.end());
        }
    };
    add(query.name);
    for (const auto& alt : query.names_alt) add(alt);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

LinkOutcome Linker::link_one(const store::QueryRecord& query, const LinkOptions& options) const {
    const auto start = Clock::now();
    if (textnorm::clean_light(query.name).empty()) {
        throw Error(ErrorCode::EmptyQueryName, "query name is empty after cleaning");
    }
    const State& s = *state_;

    std::function<std::string(std::string_view)> short_namer;
    if (s.model) {
        short_namer = [&s](std::string_view name) { return shortname::predict(name, *s.model, s.frequencies); };
    }
    const auto tree = scoring::build_scoring_tree(query, s.config.weights, short_namer);

    scoring::ScoringEnv env;
    env.name = s.config.name;
    if (options.strategy) env.name.strategy = *options.strategy;
    env.tau_km = s.config.tau_km;
    env.lexicon = &s.lexicon;
    env.trie = s.trie ? &*s.trie : nullptr;

    const double threshold = options.threshold.value_or(s.config.threshold);
    const std::size_t top_n = std::max<std::size_t>(1, options.top_n.value_or(s.config.top_n));

    LinkOutcome out;
    const auto ids = candidates(query);
    out.comparisons = ids.size();
    for (std::uint32_t id : ids) {
        const auto& rec = s.store.get(id);
        std::vector<scoring::SubScore> subs;
        const double score = tree.evaluate(rec, env, &subs);
        if (score < threshold) continue;
        out.matches.push_back({id, score, std::move(subs), rec});
    }
    std::sort(out.matches.begin(), out.matches.end(), [](const MatchResult& a, const MatchResult& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.record_id < b.record_id;
    });
    if (out.matches.size() > top_n) out.matches.resize(top_n);
    out.elapsed_ms = ms_since(start);
    return out;
}

std::vector<LinkOutcome> Linker::link_batch(std::span<const store::QueryRecord> queries, std::size_t workers,
                                            const LinkOptions& options) const {
    std::vector<LinkOutcome> results(queries.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < queries.size();) {
            try {
                results[i] = link_one(queries[i], options);
            } catch (const Error& e) {
                results[i].error = e.code();
                results[i].error_message = e.what();
            } catch (const std::exception& e) {
                results[i].error = ErrorCode::Internal;
                results[i].error_message = e.what();
            }
        }
    };
    const std::size_t n = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(1, queries.size()));
    if (n == 1) {
        work();
        return results;
    }
    std::vector<std::jthread> pool;
    pool.reserve(n - 1);
    for (std::size_t k = 1; k < n; ++k) pool.emplace_back(work);
    work();
    return results;
}

}  // namespace rlink
