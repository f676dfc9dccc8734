#pragma once

#include "rlink/textnorm.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace rlink::blocking {

/// MinHash layout: `bands` groups of `rows` consecutive hash values.
struct BandConfig {
    std::uint32_t rows = 6;
    std::uint32_t bands = 30;

    std::uint32_t total_hashes() const noexcept { return rows * bands; }
    std::string to_string() const;
    /// Parses "r/b", e.g. "6/30".
    static BandConfig parse(std::string_view text);

    friend bool operator==(const BandConfig&, const BandConfig&) = default;
};

/// The three configurations evaluated for the production system: 4/10, 5/18, 6/30.
std::vector<BandConfig> preset_configs();

/// Probability that two sets with Jaccard similarity `s` share at least one band:
/// 1 - (1 - s^r)^b.
double scurve_probability(double s, BandConfig cfg);

/// Cheapest candidate (fewest total hashes) whose S-curve at `min_similarity`
/// reaches `min_probability`. Throws NoFeasibleConfig if none does.
BandConfig choose_band_config(double min_similarity, double min_probability,
                              std::span<const BandConfig> candidates);

/// Seeded family of 64-bit hash functions over shingles. Function i mixes the
/// shingle's base Murmur3 hash with a per-function constant derived from (seed, i).
class HashFamily {
public:
    HashFamily(std::uint64_t seed, std::size_t count);

    std::uint64_t seed() const noexcept { return seed_; }
    std::size_t size() const noexcept { return params_.size(); }
    std::span<const std::uint64_t> parameters() const noexcept { return params_; }

    std::uint64_t base_hash(std::string_view shingle) const;
    std::uint64_t hash(std::size_t i, std::string_view shingle) const;

private:
    std::uint64_t seed_;
    std::vector<std::uint64_t> params_;
};

using MinHashSignature = std::vector<std::uint64_t>;

MinHashSignature minhash_signature(const textnorm::ShingleSet& shingles, const HashFamily& family);

/// Fraction of positions at which two equal-length signatures agree.
double signature_agreement(const MinHashSignature& a, const MinHashSignature& b);

/// One 64-bit key per band: Murmur3 over the band's little-endian row bytes,
/// seeded with the band index.
std::vector<std::uint64_t> band_keys(const MinHashSignature& sig, BandConfig cfg);

/// Maps band keys to ascending record-id posting lists.
class BlockingIndex {
public:
    static constexpr std::uint32_t kFormatVersion = 1;

    BlockingIndex(BandConfig cfg, std::uint64_t seed) : cfg_(cfg), seed_(seed) {}

    void insert(std::uint32_t record_id, std::span<const std::uint64_t> keys);

    /// Sorted union of the posting lists of `keys`.
    std::vector<std::uint32_t> candidates(std::span<const std::uint64_t> keys) const;
    std::span<const std::uint32_t> postings(std::uint64_t key) const;

    BandConfig config() const noexcept { return cfg_; }
    std::uint64_t seed() const noexcept { return seed_; }
    std::size_t key_count() const noexcept { return postings_.size(); }
    std::size_t record_count() const noexcept { return inserted_.size(); }
    std::size_t posting_count() const noexcept;

    std::string serialize() const;
    static BlockingIndex deserialize(std::string_view bytes);
    void write(const std::filesystem::path& path) const;
    static BlockingIndex load(const std::filesystem::path& path);

private:
    BandConfig cfg_;
    std::uint64_t seed_;
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> postings_;
    std::unordered_set<std::uint32_t> inserted_;
};

/// Name -> blocking keys: blocking clean, bigram shingles, MinHash, banding.
class KeyGenerator {
public:
    KeyGenerator(BandConfig cfg, std::uint64_t seed, const textnorm::LegalEntityLexicon& lex)
        : cfg_(cfg), family_(seed, cfg.total_hashes()), lex_(&lex) {}

    /// Empty when the blocking-cleaned name has no shingles.
    std::optional<std::vector<std::uint64_t>> keys(std::string_view raw_name) const;

    BandConfig config() const noexcept { return cfg_; }
    const HashFamily& family() const noexcept { return family_; }

private:
    BandConfig cfg_;
    HashFamily family_;
    const textnorm::LegalEntityLexicon* lex_;
};

}  // namespace rlink::blocking
