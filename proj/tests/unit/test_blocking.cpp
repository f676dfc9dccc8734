#include "rlink/blocking.hpp"

#include "rlink/error.hpp"
#include "rlink/murmur3.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace rlink;
using namespace rlink::blocking;

namespace {

// Independent evaluation of the banding curve by the complement rule, one
// band at a time.
double curve_oracle(double s, std::uint32_t r, std::uint32_t b) {
    double per_band = 1.0;
    for (std::uint32_t i = 0; i < r; ++i) per_band *= s;
    double none = 1.0;
    for (std::uint32_t i = 0; i < b; ++i) none *= (1.0 - per_band);
    return 1.0 - none;
}

textnorm::ShingleSet make_set(std::set<std::string> s) { return {s.begin(), s.end()}; }

}  // namespace

TEST(BandConfig, ParseAndFormat) {
    const auto c = BandConfig::parse("5/18");
    EXPECT_EQ(c.rows, 5u);
    EXPECT_EQ(c.bands, 18u);
    EXPECT_EQ(c.total_hashes(), 90u);
    EXPECT_EQ(c.to_string(), "5/18");
}

TEST(BandConfig, RejectsMalformedText) {
    for (const char* bad : {"", "5", "5/", "/18", "0/3", "3/0", "a/b", "5/18x"}) {
        EXPECT_THROW(BandConfig::parse(bad), Error) << bad;
    }
}

TEST(SCurve, PublishedTableMatchesTruncatedClosedForm) {
    // Published percentages carry one decimal and are cut, not rounded (47.55 is listed as 47.5).
    const double published[4][3] = {{47.5, 43.5, 37.6}, {75.0, 76.7, 76.1}, {93.5, 96.3, 97.6}, {99.4, 99.9, 99.9}};
    const double sims[4] = {0.5, 0.6, 0.7, 0.8};
    const auto cfgs = preset_configs();
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 3; ++j) {
            const double pct = 100.0 * scurve_probability(sims[i], cfgs[static_cast<std::size_t>(j)]);
            EXPECT_DOUBLE_EQ(std::floor(pct * 10.0) / 10.0, published[i][j]) << sims[i] << " " << j;
        }
    }
    EXPECT_NEAR(scurve_probability(0.5, {4, 10}), 0.4755, 1e-4);
    EXPECT_NEAR(scurve_probability(0.6, {5, 18}), 0.767, 5e-4);
    EXPECT_DOUBLE_EQ(scurve_probability(1.0, {6, 30}), 1.0);
    EXPECT_DOUBLE_EQ(scurve_probability(0.0, {6, 30}), 0.0);
}

TEST(SCurve, MatchesIndependentOracle) {
    for (const auto& cfg : preset_configs()) {
        for (int k = 0; k <= 100; ++k) {
            const double s = k / 100.0;
            EXPECT_NEAR(scurve_probability(s, cfg), curve_oracle(s, cfg.rows, cfg.bands), 1e-12);
        }
    }
}

TEST(SCurve, RejectsOutOfRangeSimilarity) {
    EXPECT_THROW(scurve_probability(-0.01, {4, 10}), Error);
    EXPECT_THROW(scurve_probability(1.01, {4, 10}), Error);
    EXPECT_THROW(scurve_probability(std::nan(""), {4, 10}), Error);
}

TEST(ChooseBandConfig, CheapestFeasible) {
    const auto presets = preset_configs();
    EXPECT_EQ(choose_band_config(0.8, 0.99, presets), (BandConfig{4, 10}));
    EXPECT_EQ(choose_band_config(0.8, 0.999, presets), (BandConfig{5, 18}));
}

TEST(ChooseBandConfig, InfeasibleTargetThrows) {
    const std::vector<BandConfig> only = {{4, 10}};
    try {
        choose_band_config(0.9, 1.0, only);
        FAIL() << "expected NoFeasibleConfig";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NoFeasibleConfig);
    }
}

TEST(MinHash, IdenticalSetsGiveIdenticalSignatures) {
    const HashFamily fam(42, 180);
    const auto a = make_set({"ab", "bc", "cd"});
    EXPECT_EQ(minhash_signature(a, fam), minhash_signature(a, fam));
    EXPECT_EQ(minhash_signature(a, fam), minhash_signature(a, HashFamily(42, 180)));
}

TEST(MinHash, DisjointSingletonsNeverAgree) {
    const HashFamily fam(42, 180);
    EXPECT_EQ(signature_agreement(minhash_signature(make_set({"ab"}), fam), minhash_signature(make_set({"cd"}), fam)), 0.0);
}

TEST(MinHash, EmptySetThrows) {
    const HashFamily fam(1, 8);
    try {
        minhash_signature({}, fam);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyShingleSet);
    }
}

TEST(MinHash, SeedChangesTheFamily) {
    const auto s = make_set({"ab", "bc"});
    EXPECT_NE(minhash_signature(s, HashFamily(1, 16)), minhash_signature(s, HashFamily(2, 16)));
}

TEST(MinHash, AgreementLengthMismatchThrows) {
    EXPECT_THROW(signature_agreement({1, 2}, {1, 2, 3}), Error);
}

// Estimator property: agreement fraction tracks exact Jaccard computed by set
// arithmetic, at 180 hashes over 1,000 random pairs.
TEST(MinHash, AgreementEstimatesJaccard) {
    const HashFamily fam(7, 180);
    testsupport::Gen gen(99);
    double abs_err = 0;
    constexpr int kPairs = 1000;
    for (int p = 0; p < kPairs; ++p) {
        std::set<std::string> universe;
        const std::size_t n = 4 + gen.below(40);
        while (universe.size() < n) universe.insert(gen.word(2, 2, 12));
        std::set<std::string> a, b;
        const double pa = gen.unit();
        for (const auto& x : universe) {
            const double r = gen.unit();
            if (r < pa) a.insert(x);
            if (gen.unit() < pa || (r >= pa && a.empty())) b.insert(x);
        }
        if (a.empty()) a.insert(*universe.begin());
        if (b.empty()) b.insert(*universe.rbegin());
        std::size_t inter = 0;
        for (const auto& x : a) inter += b.count(x);
        const double exact = static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
        const double est = signature_agreement(minhash_signature(make_set(a), fam), minhash_signature(make_set(b), fam));
        abs_err += std::abs(est - exact);
    }
    EXPECT_LE(abs_err / kPairs, 0.05);
}

TEST(BandKeys, EqualSignaturesGiveEqualKeys) {
    const HashFamily fam(3, 30);
    const auto sig = minhash_signature(make_set({"xy", "yz"}), fam);
    EXPECT_EQ(band_keys(sig, {6, 5}), band_keys(sig, {6, 5}));
    EXPECT_EQ(band_keys(sig, {6, 5}).size(), 5u);
}

TEST(BandKeys, OnlyMatchingBandSharesItsKey) {
    MinHashSignature a(24), b(24);
    for (std::size_t i = 0; i < 24; ++i) {
        a[i] = i * 1000003u;
        b[i] = i < 6 ? a[i] : a[i] + 1;
    }
    const auto ka = band_keys(a, {6, 4});
    const auto kb = band_keys(b, {6, 4});
    EXPECT_EQ(ka[0], kb[0]);
    for (std::size_t i = 1; i < 4; ++i) EXPECT_NE(ka[i], kb[i]);
}

TEST(BandKeys, KeyIsMurmurOfTheBandRowsSaltedWithTheBandIndex) {
    MinHashSignature sig = {1, 2, 3, 4};
    const auto keys = band_keys(sig, {2, 2});
    // Rows serialized little-endian, 8 bytes each.
    auto band_bytes = [&](std::size_t band) {
        std::string s;
        for (std::size_t r = 0; r < 2; ++r) {
            for (int b = 0; b < 8; ++b) s.push_back(static_cast<char>(sig[band * 2 + r] >> (8 * b)));
        }
        return s;
    };
    EXPECT_EQ(keys[0], murmur3_64(band_bytes(0), 0));
    EXPECT_EQ(keys[1], murmur3_64(band_bytes(1), 1));
}

TEST(BandKeys, LengthMismatchThrows) { EXPECT_THROW(band_keys(MinHashSignature(10), {6, 30}), Error); }

TEST(Index, InsertCreatesOnePostingPerKey) {
    BlockingIndex idx({2, 3}, 0);
    const std::vector<std::uint64_t> keys = {10, 20, 30};
    idx.insert(0, keys);
    EXPECT_EQ(idx.key_count(), 3u);
    for (auto k : keys) EXPECT_EQ(idx.postings(k).size(), 1u);
    EXPECT_EQ(idx.candidates(keys), (std::vector<std::uint32_t>{0}));
}

TEST(Index, UnknownKeysGiveNoCandidates) {
    BlockingIndex idx({2, 3}, 0);
    idx.insert(0, std::vector<std::uint64_t>{1, 2, 3});
    EXPECT_TRUE(idx.candidates(std::vector<std::uint64_t>{7, 8}).empty());
}

TEST(Index, DuplicateIdThrows) {
    BlockingIndex idx({2, 3}, 0);
    idx.insert(4, std::vector<std::uint64_t>{1});
    EXPECT_THROW(idx.insert(4, std::vector<std::uint64_t>{2}), Error);
}

TEST(Index, SerializationRoundTripIsByteStable) {
    BlockingIndex idx({2, 2}, 9);
    testsupport::Gen gen(5);
    for (std::uint32_t id = 0; id < 200; ++id) {
        idx.insert(id, std::vector<std::uint64_t>{gen.below(50), 1000 + gen.below(50)});
    }
    const std::string bytes = idx.serialize();
    const auto back = BlockingIndex::deserialize(bytes);
    EXPECT_EQ(back.serialize(), bytes);
    EXPECT_EQ(back.config(), idx.config());
    EXPECT_EQ(back.seed(), 9u);
    EXPECT_EQ(back.posting_count(), idx.posting_count());
}

TEST(Index, CorruptHeaderIsRejected) {
    BlockingIndex idx({2, 2}, 9);
    idx.insert(0, std::vector<std::uint64_t>{1, 2});
    std::string bytes = idx.serialize();
    bytes[0] = 'X';
    EXPECT_THROW(BlockingIndex::deserialize(bytes), Error);
    EXPECT_THROW(BlockingIndex::deserialize(idx.serialize().substr(0, 10)), Error);
}

TEST(KeyGenerator, IdenticalCleanNamesShareAllKeys) {
    const textnorm::LegalEntityLexicon lex = textnorm::LegalEntityLexicon::load(testsupport::data_dir() / "legal_entities.txt");
    const KeyGenerator gen({6, 30}, 42, lex);
    const auto a = gen.keys("Müller und Berger AG");
    const auto b = gen.keys("MULLER UND BERGER");
    ASSERT_TRUE(a && b);
    EXPECT_EQ(*a, *b);
    EXPECT_EQ(a->size(), 30u);
}

TEST(KeyGenerator, NameWithoutContentHasNoKeys) {
    const textnorm::LegalEntityLexicon lex = textnorm::LegalEntityLexicon::load(testsupport::data_dir() / "legal_entities.txt");
    const KeyGenerator gen({6, 30}, 42, lex);
    EXPECT_FALSE(gen.keys("  ... ").has_value());
    EXPECT_FALSE(gen.keys("AG").has_value());
}

// ---------------------------------------------------------------------------

TEST(BlockingProperty, SCurveIsMonotoneInSimilarity) {
    testsupport::Gen gen(11);
    for (int i = 0; i < 2000; ++i) {
        const BandConfig cfg{static_cast<std::uint32_t>(1 + gen.below(8)), static_cast<std::uint32_t>(1 + gen.below(40))};
        const double a = gen.unit();
        const double b = gen.unit();
        EXPECT_LE(scurve_probability(std::min(a, b), cfg), scurve_probability(std::max(a, b), cfg) + 1e-15);
    }
}

TEST(BlockingProperty, EqualBlockingNamesAreMutualCandidates) {
    const textnorm::LegalEntityLexicon lex = textnorm::LegalEntityLexicon::load(testsupport::data_dir() / "legal_entities.txt");
    const KeyGenerator kg({5, 18}, 42, lex);
    testsupport::Gen gen(12);
    static const std::vector<std::string> decorations = {"", " AG", " GmbH", " Ltd.", ", Inc."};
    for (int i = 0; i < 1000; ++i) {
        const std::string core = gen.phrase(3);
        std::string upper = core;
        for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        const std::string a = core + decorations[gen.below(decorations.size())];
        const std::string b = upper + decorations[gen.below(decorations.size())];
        const auto ka = kg.keys(a);
        const auto kb = kg.keys(b);
        ASSERT_EQ(ka.has_value(), kb.has_value()) << a;
        if (!ka) continue;  // the whole phrase was a legal form
        BlockingIndex idx({5, 18}, 42);
        idx.insert(0, *ka);
        idx.insert(1, *kb);
        const auto from_a = idx.candidates(*ka);
        const auto from_b = idx.candidates(*kb);
        EXPECT_TRUE(std::ranges::find(from_a, 1u) != from_a.end()) << a << " / " << b;
        EXPECT_TRUE(std::ranges::find(from_b, 0u) != from_b.end()) << a << " / " << b;
    }
}

TEST(BlockingProperty, SignaturesAreDeterministic) {
    testsupport::Gen gen(13);
    for (int i = 0; i < 1000; ++i) {
        const std::uint64_t seed = gen.u64();
        std::set<std::string> s;
        const std::size_t n = 1 + gen.below(20);
        while (s.size() < n) s.insert(gen.word(2, 2));
        const auto set = make_set(s);
        EXPECT_EQ(minhash_signature(set, HashFamily(seed, 30)), minhash_signature(set, HashFamily(seed, 30)));
    }
}
