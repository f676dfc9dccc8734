#pragma once

#include "rlink/blocking.hpp"
#include "rlink/city_trie.hpp"
#include "rlink/config.hpp"
#include "rlink/entity_store.hpp"
#include "rlink/error.hpp"
#include "rlink/scoring_tree.hpp"
#include "rlink/shortname.hpp"

#include <istream>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rlink {

struct PreprocessOptions {
    /// Predict short names when a model is configured.
    bool short_names = true;
};

struct PreprocessStats {
    store::IngestStats ingest;
    std::size_t records = 0;
    std::size_t short_names = 0;
    /// Records whose blocking-cleaned name is empty (not indexed).
    std::size_t unindexed = 0;
    std::size_t keys = 0;
    std::size_t postings = 0;
    double ingest_ms = 0;
    double short_name_ms = 0;
    double entity_db_ms = 0;
    double blocking_ms = 0;
};

/// Source rows -> entity DB and blocking DB at the configured paths. Both files
/// are written atomically; on failure neither is left behind.
PreprocessStats preprocess(std::istream& source, const store::DatasetSchema& schema, const LinkerConfig& config,
                           const PreprocessOptions& options = {});

struct MatchResult {
    std::uint32_t record_id = 0;
    double score = 0;
    std::vector<scoring::SubScore> subscores;
    store::Record record;
};

struct LinkOptions {
    std::optional<std::size_t> top_n;
    std::optional<double> threshold;
    std::optional<scoring::Strategy> strategy;
};

/// Result of one query; `error` is set instead of throwing inside batches.
struct LinkOutcome {
    std::vector<MatchResult> matches;
    std::size_t comparisons = 0;
    double elapsed_ms = 0;
    std::optional<ErrorCode> error;
    std::string error_message;
};

/// Immutable linkage state over one dataset.
class Linker {
public:
    struct Parts {
        LinkerConfig config;
        store::EntityStore store;
        blocking::BlockingIndex index{blocking::BandConfig{}, 0};
        textnorm::LegalEntityLexicon lexicon;
        std::optional<geo::CityTrie> trie;
        std::optional<shortname::ShortNameModel> model;
        shortname::FrequencyTable frequencies;
    };

    explicit Linker(Parts parts);

    /// Loads every file named by the configuration.
    static Linker load(const LinkerConfig& config);

    /// Throws EmptyQueryName when the query name cleans to nothing.
    LinkOutcome link_one(const store::QueryRecord& query, const LinkOptions& options = {}) const;

    /// Results aligned with `queries`; per-query failures are reported in place.
    std::vector<LinkOutcome> link_batch(std::span<const store::QueryRecord> queries, std::size_t workers,
                                        const LinkOptions& options = {}) const;

    /// Sorted candidate ids for the query's names.
    std::vector<std::uint32_t> candidates(const store::QueryRecord& query) const;

    const LinkerConfig& config() const noexcept { return state_->config; }
    const store::EntityStore& store() const noexcept { return state_->store; }
    const blocking::BlockingIndex& index() const noexcept { return state_->index; }
    const textnorm::LegalEntityLexicon& lexicon() const noexcept { return state_->lexicon; }
    const geo::CityTrie* trie() const noexcept { return state_->trie ? &*state_->trie : nullptr; }

private:
    struct State : Parts {
        explicit State(Parts p);
        blocking::KeyGenerator keys;
    };
    std::shared_ptr<const State> state_;
};

/// Loads a legal-entity lexicon, or an empty one when `path` is empty.
textnorm::LegalEntityLexicon load_lexicon(const std::filesystem::path& path);

}  // namespace rlink
