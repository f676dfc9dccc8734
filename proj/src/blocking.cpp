#include "rlink/blocking.hpp"

#include "rlink/binary_io.hpp"
#include "rlink/error.hpp"
#include "rlink/murmur3.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

namespace rlink::blocking {

namespace {
constexpr std::string_view kMagic = "RLBK";
}

std::string BandConfig::to_string() const {
    return std::to_string(rows) + "/" + std::to_string(bands);
}

BandConfig BandConfig::parse(std::string_view text) {
    const auto slash = text.find('/');
    BandConfig cfg{0, 0};
    if (slash != std::string_view::npos) {
        auto [p1, e1] = std::from_chars(text.data(), text.data() + slash, cfg.rows);
        auto [p2, e2] = std::from_chars(text.data() + slash + 1, text.data() + text.size(), cfg.bands);
        if (e1 == std::errc{} && e2 == std::errc{} && p1 == text.data() + slash &&
            p2 == text.data() + text.size() && cfg.rows > 0 && cfg.bands > 0) {
            return cfg;
        }
    }
    throw Error(ErrorCode::InvalidConfig, "bad band config '" + std::string(text) + "', expected rows/bands");
}

std::vector<BandConfig> preset_configs() {
    return {{4, 10}, {5, 18}, {6, 30}};
}

double scurve_probability(double s, BandConfig cfg) {
    if (!(s >= 0.0 && s <= 1.0)) {
        throw Error(ErrorCode::OutOfRange, "similarity must lie in [0,1]");
    }
    return 1.0 - std::pow(1.0 - std::pow(s, cfg.rows), cfg.bands);
}

BandConfig choose_band_config(double min_similarity, double min_probability,
                              std::span<const BandConfig> candidates) {
    if (candidates.empty()) {
        throw Error(ErrorCode::NoFeasibleConfig, "no candidate band configurations");
    }
    const BandConfig* best = nullptr;
    for (const auto& cfg : candidates) {
        if (scurve_probability(min_similarity, cfg) < min_probability) continue;
        if (best == nullptr || cfg.total_hashes() < best->total_hashes()) best = &cfg;
    }
    if (best == nullptr) {
        throw Error(ErrorCode::NoFeasibleConfig, "no configuration reaches the requested probability");
    }
    return *best;
}

// ---------------------------------------------------------------------------

HashFamily::HashFamily(std::uint64_t seed, std::size_t count) : seed_(seed) {
    params_.reserve(count);
    io::Writer w;
    for (std::size_t i = 0; i < count; ++i) {
        w = io::Writer{};
        w.u64(seed);
        w.u64(i);
        params_.push_back(murmur3_64(w.data(), seed));
    }
}

std::uint64_t HashFamily::base_hash(std::string_view shingle) const {
    return murmur3_64(shingle, seed_);
}

std::uint64_t HashFamily::hash(std::size_t i, std::string_view shingle) const {
    return fmix64(base_hash(shingle) ^ params_[i]);
}

MinHashSignature minhash_signature(const textnorm::ShingleSet& shingles, const HashFamily& family) {
    if (shingles.empty()) {
        throw Error(ErrorCode::EmptyShingleSet, "cannot compute MinHash of an empty shingle set");
    }
    MinHashSignature sig(family.size(), std::numeric_limits<std::uint64_t>::max());
    const auto params = family.parameters();
    for (const auto& sh : shingles) {
        const std::uint64_t base = family.base_hash(sh);
        for (std::size_t i = 0; i < sig.size(); ++i) {
            sig[i] = std::min(sig[i], fmix64(base ^ params[i]));
        }
    }
    return sig;
}

double signature_agreement(const MinHashSignature& a, const MinHashSignature& b) {
    if (a.size() != b.size() || a.empty()) {
        throw Error(ErrorCode::SignatureLengthMismatch, "signatures differ in length");
    }
    std::size_t same = 0;
    for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i];
    return static_cast<double>(same) / static_cast<double>(a.size());
}

std::vector<std::uint64_t> band_keys(const MinHashSignature& sig, BandConfig cfg) {
    if (sig.size() != cfg.total_hashes()) {
        throw Error(ErrorCode::SignatureLengthMismatch,
                    "signature length " + std::to_string(sig.size()) + " does not match " + cfg.to_string());
    }
    std::vector<std::uint64_t> keys;
    keys.reserve(cfg.bands);
    for (std::uint32_t band = 0; band < cfg.bands; ++band) {
        io::Writer w;
        for (std::uint32_t row = 0; row < cfg.rows; ++row) w.u64(sig[band * cfg.rows + row]);
        keys.push_back(murmur3_64(w.data(), band));
    }
    return keys;
}

// ---------------------------------------------------------------------------

void BlockingIndex::insert(std::uint32_t record_id, std::span<const std::uint64_t> keys) {
    if (!inserted_.insert(record_id).second) {
        throw Error(ErrorCode::DuplicateRecordId, "record " + std::to_string(record_id) + " already indexed");
    }
    for (std::uint64_t key : keys) {
        auto& list = postings_[key];
        if (list.empty() || list.back() < record_id) {
            list.push_back(record_id);
            continue;
        }
        auto it = std::lower_bound(list.begin(), list.end(), record_id);
        if (it == list.end() || *it != record_id) list.insert(it, record_id);
    }
}

std::vector<std::uint32_t> BlockingIndex::candidates(std::span<const std::uint64_t> keys) const {
    std::vector<std::uint32_t> out;
    for (std::uint64_t key : keys) {
        auto p = postings(key);
        out.insert(out.end(), p.begin(), p.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::span<const std::uint32_t> BlockingIndex::postings(std::uint64_t key) const {
    auto it = postings_.find(key);
    if (it == postings_.end()) return {};
    return it->second;
}

std::size_t BlockingIndex::posting_count() const noexcept {
    std::size_t n = 0;
    for (const auto& [key, list] : postings_) n += list.size();
    return n;
}

std::string BlockingIndex::serialize() const {
    std::vector<std::uint64_t> keys;
    keys.reserve(postings_.size());
    for (const auto& [key, list] : postings_) keys.push_back(key);
    std::sort(keys.begin(), keys.end());

    io::Writer w;
    w.bytes(kMagic);
    w.u32(kFormatVersion);
    w.u64(seed_);
    w.u32(cfg_.rows);
    w.u32(cfg_.bands);
    w.u64(keys.size());
    for (std::uint64_t key : keys) {
        const auto& list = postings_.at(key);
        w.u64(key);
        w.u32(static_cast<std::uint32_t>(list.size()));
        std::uint32_t prev = 0;
        for (std::uint32_t id : list) {
            w.varint(id - prev);
            prev = id;
        }
    }
    return w.take();
}

BlockingIndex BlockingIndex::deserialize(std::string_view bytes) {
    io::Reader r(bytes, ErrorCode::ChecksumMismatch);
    if (r.bytes(kMagic.size()) != kMagic) {
        throw Error(ErrorCode::VersionMismatch, "not a blocking index file");
    }
    if (const auto version = r.u32(); version != kFormatVersion) {
        throw Error(ErrorCode::VersionMismatch, "unsupported blocking index version " + std::to_string(version));
    }
    const std::uint64_t seed = r.u64();
    BandConfig cfg;
    cfg.rows = r.u32();
    cfg.bands = r.u32();
    BlockingIndex idx(cfg, seed);
    const std::uint64_t key_count = r.u64();
    idx.postings_.reserve(key_count);
    for (std::uint64_t k = 0; k < key_count; ++k) {
        const std::uint64_t key = r.u64();
        const std::uint32_t len = r.u32();
        std::vector<std::uint32_t> list;
        list.reserve(len);
        std::uint32_t prev = 0;
        for (std::uint32_t i = 0; i < len; ++i) {
            prev += static_cast<std::uint32_t>(r.varint());
            list.push_back(prev);
            idx.inserted_.insert(prev);
        }
        idx.postings_.emplace(key, std::move(list));
    }
    if (!r.done()) {
        throw Error(ErrorCode::ChecksumMismatch, "trailing bytes in blocking index");
    }
    return idx;
}

void BlockingIndex::write(const std::filesystem::path& path) const {
    io::write_file_atomic(path.string(), serialize());
}

BlockingIndex BlockingIndex::load(const std::filesystem::path& path) {
    return deserialize(io::read_file(path.string()));
}

// ---------------------------------------------------------------------------

std::optional<std::vector<std::uint64_t>> KeyGenerator::keys(std::string_view raw_name) const {
    const auto shingles = textnorm::shingle_bigrams(textnorm::clean_blocking(raw_name, *lex_));
    if (shingles.empty()) return std::nullopt;
    return band_keys(minhash_signature(shingles, family_), cfg_);
}

}  // namespace rlink::blocking
