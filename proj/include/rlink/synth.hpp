#pragma once

// Deterministic generators for the bundled desk-scale data: a gazetteer, a
// company corpus, a perturbed ground-truth set and a short-name training
// corpus.

#include "rlink/entity_store.hpp"
#include "rlink/evalbench.hpp"
#include "rlink/shortname.hpp"

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace rlink::synth {

/// Small wrapper over mt19937_64 whose derived draws do not depend on the
/// standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    /// Uniform in [0, n).
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }
    /// Uniform in [0, 1).
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    bool chance(double p) { return unit() < p; }

    template <typename T>
    const T& pick(const std::vector<T>& v) {
        return v[below(v.size())];
    }

    /// Index drawn with probability proportional to 1 / (rank + 1)^s.
    std::size_t zipf(std::size_t n, double s);

private:
    std::mt19937_64 engine_;
};

struct City {
    std::string name;
    double lat = 0;
    double lon = 0;
    std::string country;
    bool real = false;
};

std::vector<City> make_gazetteer(std::uint64_t seed, std::size_t towns = 1200);
void write_gazetteer(std::ostream& out, const std::vector<City>& cities);

struct Corpus {
    std::vector<store::Record> records;
    /// Groups of record ids sharing a distinctive name core.
    std::vector<std::vector<std::uint32_t>> families;
};

Corpus make_corpus(const std::vector<City>& cities, std::size_t records, std::uint64_t seed);
void write_companies_csv(std::ostream& out, const std::vector<store::Record>& records);

struct TruthMix {
    std::size_t matched = 300;
    std::size_t unmatched = 90;
    std::size_t undecided = 60;
};

/// Perturbed queries with known answers (diacritic swaps, legal-entity
/// changes, word permutations, city mentions, typos, case changes).
std::vector<eval::GroundTruthEntry> make_truth(const Corpus& corpus, const std::vector<City>& cities,
                                               const textnorm::LegalEntityLexicon& lex, const TruthMix& mix,
                                               std::uint64_t seed);

/// Company-name families; each inner vector is one family's member names.
std::vector<std::vector<std::string>> make_name_families(std::size_t families, std::uint64_t seed);

/// Word counts over company names, short-name family names and city names.
shortname::FrequencyTable build_frequencies(const std::vector<store::Record>& records,
                                            const std::vector<std::vector<std::string>>& families,
                                            const std::vector<City>& cities);

/// Deterministic train/test split of labeled families (whole families stay together).
struct CorpusSplit {
    std::vector<shortname::LabeledName> train;
    std::vector<shortname::LabeledName> test;
};
CorpusSplit split_families(const std::vector<std::vector<shortname::LabeledName>>& families, double train_fraction,
                           std::uint64_t seed);

}  // namespace rlink::synth
