#pragma once

#include "rlink/textnorm.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace rlink::shortname {

enum class Label : std::uint8_t { In = 0, Out = 1 };
constexpr std::size_t kLabels = 2;

std::string_view to_string(Label l) noexcept;

/// A tokenized company name with one IN/OUT label per token. `raw` keeps the
/// original casing (needed for capitalization features); `tokens` is its
/// lowercase form.
struct LabeledName {
    std::vector<std::string> raw;
    std::vector<std::string> tokens;
    std::vector<Label> labels;

    static LabeledName from_raw(std::vector<std::string> raw_tokens, std::vector<Label> labels);
    std::string short_name() const;

    friend bool operator==(const LabeledName&, const LabeledName&) = default;
};

/// One example per line: space separated `token/LABEL` pairs.
void write_corpus(std::ostream& out, std::span<const LabeledName> corpus);
std::vector<LabeledName> read_corpus(std::istream& in);

// ---------------------------------------------------------------------------
// Training corpus heuristics
// ---------------------------------------------------------------------------

/// Registrable-domain word of a homepage URL ("http://www.cessna.com/" -> "cessna").
std::string domain_word(std::string_view url);

/// Name/label/homepage heuristic. Returns up to two examples (the name labeled
/// from the evidence, and the label labeled against itself); empty when no
/// evidence applies.
std::vector<LabeledName> corpus_from_label_homepage(std::string_view name,
                                                    std::optional<std::string_view> label,
                                                    std::optional<std::string_view> homepage,
                                                    const textnorm::LegalEntityLexicon& lex);

/// Family heuristic: tokens shared by every member (minus legal-entity tokens)
/// form the short name of each member.
std::vector<LabeledName> corpus_from_family(std::span<const std::string> names,
                                            const textnorm::LegalEntityLexicon& lex);

// ---------------------------------------------------------------------------
// Word frequencies
// ---------------------------------------------------------------------------

class FrequencyTable {
public:
    void add(std::string_view word, std::uint64_t count = 1);
    void add_name(std::string_view raw_name);

    std::uint64_t count(std::string_view word) const;
    /// Count with unknown words smoothed to 1.
    std::uint64_t smoothed(std::string_view word) const { return std::max<std::uint64_t>(count(word), 1); }
    std::uint64_t total() const noexcept { return total_; }
    std::size_t size() const noexcept { return counts_.size(); }

    /// `word<TAB>count` lines, sorted by word.
    void write(std::ostream& out) const;
    static FrequencyTable read(std::istream& in);
    void save(const std::filesystem::path& path) const;
    static FrequencyTable load(const std::filesystem::path& path);

private:
    std::unordered_map<std::string, std::uint64_t> counts_;
    std::uint64_t total_ = 0;
};

// ---------------------------------------------------------------------------
// Features
// ---------------------------------------------------------------------------

/// Per-token observations. Neighbor features are read from the adjacent
/// entries when the feature vector is expanded; `bos`/`eos` mark the edges.
struct TokenFeatures {
    std::string word;
    bool capitalized = false;
    bool all_caps = false;
    std::string suffix2;
    std::string suffix3;
    std::uint32_t rank = 1;            // 1 = rarest word in the name
    double normalized_frequency = 1;   // count / max count within the name
    int frequency_bucket = 0;          // floor(log10(smoothed count))
    bool bos = false;
    bool eos = false;
};

std::vector<TokenFeatures> extract_features(std::span<const std::string> tokens,
                                            std::span<const std::string> raw_tokens,
                                            const FrequencyTable& freq);

struct Feature {
    std::string name;
    double value = 1.0;
};

/// Sparse emission features of token `i`, including its neighbors' features.
std::vector<Feature> expand_features(std::span<const TokenFeatures> seq, std::size_t i);

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

struct TrainOptions {
    int epochs = 20;
    double learning_rate = 0.1;
    double l2 = 1.0;
    std::uint64_t seed = 42;
};

/// Linear-chain CRF over {IN, OUT}.
class ShortNameModel {
public:
    static constexpr std::uint32_t kFormatVersion = 1;

    using Weights = std::array<double, kLabels>;

    /// Viterbi decoding of a tokenized name.
    std::vector<Label> decode(std::span<const TokenFeatures> seq) const;

    std::unordered_map<std::string, Weights>& emissions() noexcept { return emission_; }
    const std::unordered_map<std::string, Weights>& emissions() const noexcept { return emission_; }
    std::array<Weights, kLabels>& transitions() noexcept { return transition_; }
    const std::array<Weights, kLabels>& transitions() const noexcept { return transition_; }

    int epochs = 0;
    std::uint64_t seed = 0;
    /// Regularized negative log-likelihood after each epoch.
    std::vector<double> loss_history;

    std::string serialize() const;
    static ShortNameModel deserialize(std::string_view bytes);
    void save(const std::filesystem::path& path) const;
    static ShortNameModel load(const std::filesystem::path& path);

private:
    std::unordered_map<std::string, Weights> emission_;
    std::array<Weights, kLabels> transition_{};
};

ShortNameModel train(std::span<const LabeledName> corpus, const FrequencyTable& freq,
                     const TrainOptions& options = {});

/// Labels for a tokenized name; when nothing decodes IN, the rarest token is IN.
std::vector<Label> predict_labels(std::span<const std::string> tokens, std::span<const std::string> raw_tokens,
                                  const ShortNameModel& model, const FrequencyTable& freq);

/// Short name of a raw company name: its IN tokens, in order, space separated.
std::string predict(std::string_view name, const ShortNameModel& model, const FrequencyTable& freq);

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct ClassMetrics {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t support = 0;
    double precision = 0;
    double recall = 0;
    double f1 = 0;
};

struct Metrics {
    ClassMetrics in;
    ClassMetrics out;
    double micro_precision = 0;
    double micro_recall = 0;
    double micro_f1 = 0;
    double macro_precision = 0;
    double macro_recall = 0;
    double macro_f1 = 0;
};

/// Token-level metrics of predicted against true label sequences.
Metrics score_labels(std::span<const std::vector<Label>> truth, std::span<const std::vector<Label>> predicted);

Metrics evaluate(const ShortNameModel& model, std::span<const LabeledName> corpus, const FrequencyTable& freq);

/// Fraction of names whose rarest token is labeled IN.
double min_freq_statistic(std::span<const LabeledName> corpus, const FrequencyTable& freq);

}  // namespace rlink::shortname
