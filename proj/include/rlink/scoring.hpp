#pragma once

#include "rlink/city_trie.hpp"
#include "rlink/textnorm.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rlink::scoring {

/// Weight of a legal-entity pseudo-unit is one character minus this.
inline constexpr double kLegalEntityEpsilon = 1.0 / 256.0;

enum class Strategy { Jaccard, Levenshtein, Weighted, MaxMin, Rls };

std::string_view to_string(Strategy s) noexcept;
std::optional<Strategy> parse_strategy(std::string_view text) noexcept;

/// A string as weighted units. Unit keys are compared for equality only.
struct WeightedString {
    struct Unit {
        std::string key;
        double weight = 1.0;
        bool is_space = false;

        friend bool operator==(const Unit&, const Unit&) = default;
    };

    std::vector<Unit> units;

    double total_weight() const noexcept;

    /// One unit of weight 1 per grapheme, spaces included.
    static WeightedString uniform(const textnorm::CleanText& text);
};

/// Similarity between clean strings from indel edit distance
/// (substitution costs two): 1 - d / (|s1| + |s2|) over graphemes.
double lev_score(const textnorm::CleanText& s1, const textnorm::CleanText& s2);

/// Indel distance in graphemes.
std::size_t indel_distance(const textnorm::CleanText& s1, const textnorm::CleanText& s2);

double weighted_lev_score(const WeightedString& w1, const WeightedString& w2);

/// Jaccard similarity of the grapheme bigram sets.
double jaccard_score(const textnorm::CleanText& s1, const textnorm::CleanText& s2);

/// Bigrams over non-space units; each bigram weighs the mean of its two units
/// (the heavier occurrence when repeated). Shared bigrams count with the larger
/// of the two sides' weights.
double weighted_jaccard_score(const WeightedString& w1, const WeightedString& w2);

// ---------------------------------------------------------------------------
// Company names
// ---------------------------------------------------------------------------

struct NameParams {
    Strategy strategy = Strategy::Rls;
    double combining_weight = 0.25;
    double city_weight = 0.25;
    double short_name_multiplier = 3.0;
    double vicinity_km = 50.0;
    double max_coefficient = 0.9;
    double min_coefficient = 0.1;
};

/// Optional resources for the rls weighting; missing pieces disable the
/// corresponding adjustment.
struct NameContext {
    const textnorm::LegalEntityLexicon* lexicon = nullptr;
    const geo::CityTrie* trie = nullptr;
    /// Location of the company being compared; city tokens near it are down-weighted.
    std::optional<geo::GeoPoint> anchor;
};

/// A company name as seen by the scorer.
struct NameInput {
    textnorm::CleanText clean;
    /// Light-cleaned short name (space separated tokens); may be empty.
    std::string short_name;

    static NameInput from_raw(std::string_view raw_name, std::string_view short_name = {});
};

/// Weighted form of a name: split combining marks, legal-entity pseudo-units,
/// heavier short-name tokens and lighter city tokens.
WeightedString rls_weighted(const NameInput& name, const NameParams& params, const NameContext& ctx);

/// Combination of the Jaccard and edit scores for the given strategy.
double combine(double jaccard, double lev, Strategy strategy, const NameParams& params = {});

double company_name_score(const NameInput& query, const NameInput& record, const NameParams& params = {},
                          const NameContext& ctx = {});

double company_name_score(std::string_view query, std::string_view record, Strategy strategy);

// ---------------------------------------------------------------------------
// Other attributes
// ---------------------------------------------------------------------------

/// exp(-d / tau) when both cities resolve in the trie, else the edit score of the names.
double city_score(std::string_view query_city, std::string_view record_city, const geo::CityTrie* trie,
                  double tau_km = 30.0);

/// Common prefix over the longer length, ignoring case and spaces.
double postal_score(std::string_view p1, std::string_view p2);

double country_score(std::string_view c1, std::string_view c2);

double industry_score(std::string_view sic1, std::string_view sic2);

/// Order-invariant token matching: pairs taken greedily by edit score, each
/// matched pair weighted by its length; unmatched tokens contribute zero.
double street_score(std::string_view s1, std::string_view s2);

}  // namespace rlink::scoring
