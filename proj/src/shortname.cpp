#include "rlink/shortname.hpp"

#include "rlink/binary_io.hpp"
#include "rlink/error.hpp"

#include <unicode/uchar.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace rlink::shortname {

namespace {

constexpr std::string_view kModelMagic = "RLSN";

std::string lower_token(std::string_view raw) { return textnorm::clean_light(raw).text; }

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) {
        if (!out.empty()) out.push_back(' ');
        out += p;
    }
    return out;
}

std::vector<Label> all_out(std::size_t n) { return std::vector<Label>(n, Label::Out); }

/// Marks every token covered by a legal-entity span as OUT.
void force_legal_entities_out(const std::vector<std::string>& tokens, std::vector<Label>& labels,
                              const textnorm::LegalEntityLexicon& lex) {
    for (const auto& span : textnorm::detect_legal_entity_spans(tokens, lex)) {
        for (std::size_t i = span.begin; i < span.end; ++i) labels[i] = Label::Out;
    }
}

bool any_in(const std::vector<Label>& labels) {
    return std::find(labels.begin(), labels.end(), Label::In) != labels.end();
}

/// Positions of `needle` as an in-order subsequence of `hay`, matched greedily.
std::optional<std::vector<std::size_t>> subsequence_positions(const std::vector<std::string>& hay,
                                                              const std::vector<std::string>& needle) {
    std::vector<std::size_t> pos;
    std::size_t j = 0;
    for (std::size_t i = 0; i < hay.size() && j < needle.size(); ++i) {
        if (hay[i] == needle[j]) {
            pos.push_back(i);
            ++j;
        }
    }
    if (j != needle.size()) return std::nullopt;
    return pos;
}

std::vector<std::string> suffixes(std::string_view word) {
    const std::u32string cps = textnorm::to_u32(word);
    auto tail = [&](std::size_t n) {
        return textnorm::to_utf8(std::u32string_view(cps).substr(cps.size() - std::min(n, cps.size())));
    };
    return {tail(2), tail(3)};
}

/// Log-sum-exp of two values.
double lse(double a, double b) {
    const double m = std::max(a, b);
    if (m == -INFINITY) return m;
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

/// Sparse feature row of one token: (feature index, value).
using FeatureRow = std::vector<std::pair<std::uint32_t, double>>;

struct Encoded {
    std::vector<FeatureRow> rows;
    std::vector<Label> gold;
};

/// Forward-backward over a two-label chain with per-position emission scores.
struct ChainPosteriors {
    double log_z = 0;
    std::vector<std::array<double, kLabels>> unary;                          // P(y_t)
    std::vector<std::array<std::array<double, kLabels>, kLabels>> pairwise;  // P(y_{t-1}, y_t)
};

ChainPosteriors posteriors(const std::vector<std::array<double, kLabels>>& emit,
                           const std::array<std::array<double, kLabels>, kLabels>& trans) {
    const std::size_t n = emit.size();
    std::vector<std::array<double, kLabels>> alpha(n), beta(n);
    alpha[0] = emit[0];
    for (std::size_t t = 1; t < n; ++t) {
        for (std::size_t y = 0; y < kLabels; ++y) {
            alpha[t][y] = lse(alpha[t - 1][0] + trans[0][y], alpha[t - 1][1] + trans[1][y]) + emit[t][y];
        }
    }
    beta[n - 1] = {0.0, 0.0};
    for (std::size_t t = n - 1; t-- > 0;) {
        for (std::size_t y = 0; y < kLabels; ++y) {
            beta[t][y] = lse(trans[y][0] + emit[t + 1][0] + beta[t + 1][0], trans[y][1] + emit[t + 1][1] + beta[t + 1][1]);
        }
    }
    ChainPosteriors p;
    p.log_z = lse(alpha[n - 1][0], alpha[n - 1][1]);
    p.unary.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t y = 0; y < kLabels; ++y) p.unary[t][y] = std::exp(alpha[t][y] + beta[t][y] - p.log_z);
    }
    p.pairwise.resize(n);
    for (std::size_t t = 1; t < n; ++t) {
        for (std::size_t a = 0; a < kLabels; ++a) {
            for (std::size_t b = 0; b < kLabels; ++b) {
                p.pairwise[t][a][b] = std::exp(alpha[t - 1][a] + trans[a][b] + emit[t][b] + beta[t][b] - p.log_z);
            }
        }
    }
    return p;
}

std::vector<Label> viterbi(const std::vector<std::array<double, kLabels>>& emit,
                           const std::array<std::array<double, kLabels>, kLabels>& trans) {
    const std::size_t n = emit.size();
    if (n == 0) return {};
    std::vector<std::array<double, kLabels>> best(n);
    std::vector<std::array<std::uint8_t, kLabels>> back(n);
    best[0] = emit[0];
    for (std::size_t t = 1; t < n; ++t) {
        for (std::size_t y = 0; y < kLabels; ++y) {
            const double via0 = best[t - 1][0] + trans[0][y];
            const double via1 = best[t - 1][1] + trans[1][y];
            back[t][y] = via1 > via0 ? 1 : 0;
            best[t][y] = std::max(via0, via1) + emit[t][y];
        }
    }
    std::vector<Label> out(n);
    std::uint8_t y = best[n - 1][1] > best[n - 1][0] ? 1 : 0;
    for (std::size_t t = n; t-- > 0;) {
        out[t] = static_cast<Label>(y);
        y = back[t][y];
    }
    return out;
}

void finalize(ClassMetrics& m) {
    m.precision = m.tp + m.fp == 0 ? 0.0 : static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
    m.recall = m.tp + m.fn == 0 ? 0.0 : static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
    m.f1 = m.precision + m.recall == 0 ? 0.0 : 2 * m.precision * m.recall / (m.precision + m.recall);
}

}  // namespace

std::string_view to_string(Label l) noexcept { return l == Label::In ? "IN" : "OUT"; }

LabeledName LabeledName::from_raw(std::vector<std::string> raw_tokens, std::vector<Label> labels) {
    LabeledName ln;
    ln.tokens.reserve(raw_tokens.size());
    for (const auto& r : raw_tokens) ln.tokens.push_back(lower_token(r));
    ln.raw = std::move(raw_tokens);
    ln.labels = std::move(labels);
    return ln;
}

std::string LabeledName::short_name() const {
    std::vector<std::string> kept;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (labels[i] == Label::In) kept.push_back(tokens[i]);
    }
    return join(kept);
}

void write_corpus(std::ostream& out, std::span<const LabeledName> corpus) {
    for (const auto& ln : corpus) {
        for (std::size_t i = 0; i < ln.raw.size(); ++i) {
            if (i > 0) out << ' ';
            out << ln.raw[i] << '/' << to_string(ln.labels[i]);
        }
        out << '\n';
    }
}

std::vector<LabeledName> read_corpus(std::istream& in) {
    std::vector<LabeledName> corpus;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ss(line);
        std::vector<std::string> raw;
        std::vector<Label> labels;
        std::string item;
        while (ss >> item) {
            const auto slash = item.rfind('/');
            const std::string_view label = slash == std::string::npos ? "" : std::string_view(item).substr(slash + 1);
            if (slash == 0 || (label != "IN" && label != "OUT")) {
                throw Error(ErrorCode::MalformedRow, "corpus line " + std::to_string(lineno) + ": bad item '" + item + "'");
            }
            raw.push_back(item.substr(0, slash));
            labels.push_back(label == "IN" ? Label::In : Label::Out);
        }
        if (!raw.empty()) corpus.push_back(LabeledName::from_raw(std::move(raw), std::move(labels)));
    }
    return corpus;
}

// ---------------------------------------------------------------------------

std::string domain_word(std::string_view url) {
    if (const auto scheme = url.find("://"); scheme != std::string_view::npos) url.remove_prefix(scheme + 3);
    url = url.substr(0, url.find_first_of("/:?#"));
    if (const auto at = url.find('@'); at != std::string_view::npos) url.remove_prefix(at + 1);

    std::vector<std::string> labels;
    std::string cur;
    for (char c : url) {
        if (c == '.') {
            if (!cur.empty()) labels.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    if (!cur.empty()) labels.push_back(std::move(cur));

    if (!labels.empty() && labels.front().starts_with("www")) labels.erase(labels.begin());
    if (labels.size() >= 2) labels.pop_back();  // top-level domain
    static const std::vector<std::string> kSecondLevel = {"co", "com", "org", "net", "ac", "gov", "edu", "ltd", "plc"};
    if (labels.size() >= 2 && std::find(kSecondLevel.begin(), kSecondLevel.end(), labels.back()) != kSecondLevel.end()) {
        labels.pop_back();
    }
    return labels.empty() ? std::string{} : labels.back();
}

std::vector<LabeledName> corpus_from_label_homepage(std::string_view name, std::optional<std::string_view> label,
                                                    std::optional<std::string_view> homepage,
                                                    const textnorm::LegalEntityLexicon& lex) {
    const LabeledName base = LabeledName::from_raw(textnorm::raw_tokens(name), {});
    if (base.tokens.empty()) return {};
    std::vector<Label> labels = all_out(base.tokens.size());
    std::vector<LabeledName> out;

    bool fired = false;
    if (label) {
        const LabeledName lab = LabeledName::from_raw(textnorm::raw_tokens(*label), {});
        if (!lab.tokens.empty()) {
            if (auto pos = subsequence_positions(base.tokens, lab.tokens)) {
                for (std::size_t p : *pos) labels[p] = Label::In;
                fired = true;
                std::vector<Label> self(lab.tokens.size(), Label::In);
                force_legal_entities_out(lab.tokens, self, lex);
                if (any_in(self)) out.push_back(LabeledName::from_raw(lab.raw, std::move(self)));
            }
        }
    }
    if (!fired && homepage) {
        const std::string word = domain_word(*homepage);
        // The domain word may be hyphenated ("aston-martin") or written solid
        // ("astonmartin"); accept either a contiguous token run or its concatenation.
        const auto parts = textnorm::clean_light(word).tokens();
        std::string solid;
        for (const auto& p : parts) solid += textnorm::strip_marks(p);
        for (std::size_t b = 0; b < base.tokens.size() && !fired && !parts.empty(); ++b) {
            std::string concat;
            for (std::size_t e = b; e < base.tokens.size(); ++e) {
                concat += textnorm::strip_marks(base.tokens[e]);
                if (concat.size() > solid.size()) break;
                if (concat == solid) {
                    for (std::size_t i = b; i <= e; ++i) labels[i] = Label::In;
                    fired = true;
                    break;
                }
            }
        }
    }
    if (!fired) return {};

    force_legal_entities_out(base.tokens, labels, lex);
    if (!any_in(labels)) return out;
    LabeledName full = LabeledName::from_raw(base.raw, std::move(labels));
    out.insert(out.begin(), std::move(full));
    return out;
}

std::vector<LabeledName> corpus_from_family(std::span<const std::string> names, const textnorm::LegalEntityLexicon& lex) {
    if (names.size() < 2) return {};
    std::vector<LabeledName> members;
    for (const auto& n : names) {
        auto m = LabeledName::from_raw(textnorm::raw_tokens(n), {});
        if (m.tokens.empty()) return {};
        members.push_back(std::move(m));
    }

    std::vector<std::string> common = members.front().tokens;
    std::sort(common.begin(), common.end());
    common.erase(std::unique(common.begin(), common.end()), common.end());
    for (std::size_t k = 1; k < members.size(); ++k) {
        std::vector<std::string> other = members[k].tokens;
        std::sort(other.begin(), other.end());
        std::vector<std::string> both;
        std::set_intersection(common.begin(), common.end(), other.begin(), other.end(), std::back_inserter(both));
        common = std::move(both);
    }
    if (common.empty()) return {};

    std::vector<LabeledName> out;
    for (auto& m : members) {
        std::vector<Label> labels(m.tokens.size(), Label::Out);
        for (std::size_t i = 0; i < m.tokens.size(); ++i) {
            if (std::binary_search(common.begin(), common.end(), m.tokens[i])) labels[i] = Label::In;
        }
        force_legal_entities_out(m.tokens, labels, lex);
        if (!any_in(labels)) return {};
        m.labels = std::move(labels);
        out.push_back(std::move(m));
    }
    return out;
}

// ---------------------------------------------------------------------------

void FrequencyTable::add(std::string_view word, std::uint64_t count) {
    if (word.empty() || count == 0) return;
    counts_[std::string(word)] += count;
    total_ += count;
}

void FrequencyTable::add_name(std::string_view raw_name) {
    for (const auto& t : textnorm::clean_light(raw_name).tokens()) add(t);
}

std::uint64_t FrequencyTable::count(std::string_view word) const {
    const auto it = counts_.find(std::string(word));
    return it == counts_.end() ? 0 : it->second;
}

void FrequencyTable::write(std::ostream& out) const {
    std::vector<std::pair<std::string_view, std::uint64_t>> rows(counts_.begin(), counts_.end());
    std::sort(rows.begin(), rows.end());
    for (const auto& [w, c] : rows) out << w << '\t' << c << '\n';
}

FrequencyTable FrequencyTable::read(std::istream& in) {
    FrequencyTable t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        std::uint64_t count = 0;
        try {
            if (tab == std::string::npos || tab == 0) throw std::invalid_argument("tab");
            std::size_t used = 0;
            count = std::stoull(line.substr(tab + 1), &used);
            if (used != line.size() - tab - 1) throw std::invalid_argument("count");
        } catch (const std::exception&) {
            throw Error(ErrorCode::MalformedRow, "frequency table line " + std::to_string(lineno) + " is malformed");
        }
        t.add(std::string_view(line).substr(0, tab), count);
    }
    return t;
}

void FrequencyTable::save(const std::filesystem::path& path) const {
    std::ostringstream ss;
    write(ss);
    io::write_file_atomic(path.string(), ss.str());
}

FrequencyTable FrequencyTable::load(const std::filesystem::path& path) {
    std::istringstream ss(io::read_file(path.string()));
    return read(ss);
}

// ---------------------------------------------------------------------------

std::vector<TokenFeatures> extract_features(std::span<const std::string> tokens, std::span<const std::string> raw_tokens,
                                            const FrequencyTable& freq) {
    const std::size_t n = tokens.size();
    std::vector<TokenFeatures> out(n);
    std::vector<std::uint64_t> counts(n);
    std::uint64_t max_count = 1;
    for (std::size_t i = 0; i < n; ++i) {
        counts[i] = freq.smoothed(tokens[i]);
        max_count = std::max(max_count, counts[i]);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return counts[a] < counts[b]; });

    for (std::size_t i = 0; i < n; ++i) {
        TokenFeatures& f = out[i];
        f.word = tokens[i];
        if (i < raw_tokens.size()) {
            const std::u32string cps = textnorm::to_u32(raw_tokens[i]);
            std::size_t letters = 0, upper = 0;
            for (char32_t cp : cps) {
                if (u_isalpha(static_cast<UChar32>(cp))) {
                    ++letters;
                    if (u_isupper(static_cast<UChar32>(cp))) ++upper;
                }
            }
            f.capitalized = !cps.empty() && u_isupper(static_cast<UChar32>(cps.front()));
            f.all_caps = letters >= 2 && upper == letters;
        }
        const auto sfx = suffixes(f.word);
        f.suffix2 = sfx[0];
        f.suffix3 = sfx[1];
        f.normalized_frequency = static_cast<double>(counts[i]) / static_cast<double>(max_count);
        f.frequency_bucket = static_cast<int>(std::floor(std::log10(static_cast<double>(counts[i]))));
        f.bos = i == 0;
        f.eos = i + 1 == n;
    }
    for (std::size_t r = 0; r < n; ++r) out[order[r]].rank = static_cast<std::uint32_t>(r + 1);
    return out;
}

std::vector<Feature> expand_features(std::span<const TokenFeatures> seq, std::size_t i) {
    const TokenFeatures& f = seq[i];
    const auto nf_bin = [](double nf) { return std::to_string(static_cast<int>(std::floor(nf * 10))); };
    const auto rank = [](std::uint32_t r) { return std::to_string(std::min<std::uint32_t>(r, 5)); };

    std::vector<Feature> out;
    out.reserve(24);
    out.push_back({"bias"});
    out.push_back({"w=" + f.word});
    out.push_back({"cap=" + std::to_string(f.capitalized)});
    out.push_back({"caps=" + std::to_string(f.all_caps)});
    out.push_back({"s2=" + f.suffix2});
    out.push_back({"s3=" + f.suffix3});
    out.push_back({"rank=" + rank(f.rank)});
    out.push_back({"rank=" + rank(f.rank) + "|len=" + std::to_string(std::min<std::size_t>(seq.size(), 5))});
    out.push_back({"nf", f.normalized_frequency});
    out.push_back({"nfb=" + nf_bin(f.normalized_frequency)});
    out.push_back({"fb=" + std::to_string(f.frequency_bucket)});
    if (f.bos) out.push_back({"BOS"});
    if (f.eos) out.push_back({"EOS"});

    const auto neighbor = [&](const char* side, std::optional<std::size_t> j) {
        const std::string p = side;
        if (!j) {
            out.push_back({p + "edge"});
            return;
        }
        const TokenFeatures& g = seq[*j];
        out.push_back({p + "w=" + g.word});
        out.push_back({p + "cap=" + std::to_string(g.capitalized)});
        out.push_back({p + "s3=" + g.suffix3});
        out.push_back({p + "rank=" + rank(g.rank)});
        out.push_back({p + "nf", g.normalized_frequency});
        out.push_back({p + "fb=" + std::to_string(g.frequency_bucket)});
    };
    neighbor("L:", i > 0 ? std::optional<std::size_t>(i - 1) : std::nullopt);
    neighbor("R:", i + 1 < seq.size() ? std::optional<std::size_t>(i + 1) : std::nullopt);
    return out;
}

// ---------------------------------------------------------------------------

std::vector<Label> ShortNameModel::decode(std::span<const TokenFeatures> seq) const {
    std::vector<std::array<double, kLabels>> emit(seq.size(), {0.0, 0.0});
    for (std::size_t t = 0; t < seq.size(); ++t) {
        for (const auto& f : expand_features(seq, t)) {
            if (auto it = emission_.find(f.name); it != emission_.end()) {
                for (std::size_t y = 0; y < kLabels; ++y) emit[t][y] += it->second[y] * f.value;
            }
        }
    }
    return viterbi(emit, transition_);
}

std::string ShortNameModel::serialize() const {
    io::Writer w;
    w.bytes(kModelMagic);
    w.u32(kFormatVersion);
    w.u32(static_cast<std::uint32_t>(epochs));
    w.u64(seed);
    w.u32(static_cast<std::uint32_t>(loss_history.size()));
    for (double l : loss_history) w.f64(l);
    for (const auto& row : transition_) {
        for (double v : row) w.f64(v);
    }
    std::vector<const std::pair<const std::string, Weights>*> entries;
    entries.reserve(emission_.size());
    for (const auto& e : emission_) entries.push_back(&e);
    std::sort(entries.begin(), entries.end(), [](auto* a, auto* b) { return a->first < b->first; });
    w.u64(entries.size());
    for (const auto* e : entries) {
        w.str(e->first);
        for (double v : e->second) w.f64(v);
    }
    return w.take();
}

ShortNameModel ShortNameModel::deserialize(std::string_view bytes) {
    io::Reader r(bytes, ErrorCode::VersionMismatch);
    if (bytes.size() < 8 || r.bytes(4) != kModelMagic) throw Error(ErrorCode::VersionMismatch, "not a short-name model");
    if (const auto v = r.u32(); v != kFormatVersion) {
        throw Error(ErrorCode::VersionMismatch, "unsupported short-name model version " + std::to_string(v));
    }
    ShortNameModel m;
    m.epochs = static_cast<int>(r.u32());
    m.seed = r.u64();
    m.loss_history.resize(r.u32());
    for (double& l : m.loss_history) l = r.f64();
    for (auto& row : m.transition_) {
        for (double& v : row) v = r.f64();
    }
    const std::uint64_t n = r.u64();
    for (std::uint64_t i = 0; i < n; ++i) {
        std::string name(r.str());
        Weights wts{};
        for (double& v : wts) v = r.f64();
        m.emission_.emplace(std::move(name), wts);
    }
    if (!r.done()) throw Error(ErrorCode::VersionMismatch, "trailing bytes in short-name model");
    return m;
}

void ShortNameModel::save(const std::filesystem::path& path) const { io::write_file_atomic(path.string(), serialize()); }

ShortNameModel ShortNameModel::load(const std::filesystem::path& path) { return deserialize(io::read_file(path.string())); }

// ---------------------------------------------------------------------------

ShortNameModel train(std::span<const LabeledName> corpus, const FrequencyTable& freq, const TrainOptions& options) {
    if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "training corpus is empty");

    // Intern feature names; std::map gives a deterministic index order.
    std::map<std::string, std::uint32_t> index;
    std::vector<Encoded> data;
    data.reserve(corpus.size());
    for (const auto& ln : corpus) {
        if (ln.tokens.empty() || ln.labels.size() != ln.tokens.size()) {
            throw Error(ErrorCode::MalformedRow, "labeled name with mismatched labels");
        }
        const auto seq = extract_features(ln.tokens, ln.raw, freq);
        Encoded enc;
        enc.gold = ln.labels;
        for (std::size_t t = 0; t < seq.size(); ++t) {
            FeatureRow row;
            for (auto& f : expand_features(seq, t)) {
                auto [it, _] = index.emplace(std::move(f.name), static_cast<std::uint32_t>(index.size()));
                row.emplace_back(it->second, f.value);
            }
            enc.rows.push_back(std::move(row));
        }
        data.push_back(std::move(enc));
    }

    // Weights are stored as scale * v so the L2 shrinkage of every weight is O(1).
    std::vector<double> v(index.size() * kLabels, 0.0);
    double scale = 1.0;
    std::array<std::array<double, kLabels>, kLabels> trans{};
    const double n_examples = static_cast<double>(data.size());

    auto emissions_of = [&](const Encoded& e) {
        std::vector<std::array<double, kLabels>> emit(e.rows.size(), {0.0, 0.0});
        for (std::size_t t = 0; t < e.rows.size(); ++t) {
            for (const auto& [f, val] : e.rows[t]) {
                for (std::size_t y = 0; y < kLabels; ++y) emit[t][y] += scale * v[f * kLabels + y] * val;
            }
        }
        return emit;
    };
    auto gold_score = [&](const Encoded& e, const std::vector<std::array<double, kLabels>>& emit) {
        double s = 0;
        for (std::size_t t = 0; t < e.gold.size(); ++t) {
            const auto y = static_cast<std::size_t>(e.gold[t]);
            s += emit[t][y];
            if (t > 0) s += trans[static_cast<std::size_t>(e.gold[t - 1])][y];
        }
        return s;
    };
    auto objective = [&]() {
        double loss = 0;
        for (const auto& e : data) {
            const auto emit = emissions_of(e);
            loss += posteriors(emit, trans).log_z - gold_score(e, emit);
        }
        double norm = 0;
        for (double x : v) norm += x * x;
        norm *= scale * scale;
        for (const auto& row : trans) {
            for (double x : row) norm += x * x;
        }
        return loss + 0.5 * options.l2 * norm;
    };

    ShortNameModel model;
    model.epochs = options.epochs;
    model.seed = options.seed;

    std::mt19937_64 rng(options.seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        // Fisher-Yates with the raw engine output, so the order does not depend
        // on the standard library's distribution implementation.
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);

        const double eta = options.learning_rate / (1.0 + epoch);
        const double decay = 1.0 - eta * options.l2 / n_examples;
        for (std::size_t idx : order) {
            const Encoded& e = data[idx];
            const auto emit = emissions_of(e);
            const auto post = posteriors(emit, trans);

            scale *= decay;
            for (auto& row : trans) {
                for (double& x : row) x *= decay;
            }
            for (std::size_t t = 0; t < e.rows.size(); ++t) {
                const auto gold = static_cast<std::size_t>(e.gold[t]);
                for (std::size_t y = 0; y < kLabels; ++y) {
                    const double g = (y == gold ? 1.0 : 0.0) - post.unary[t][y];
                    if (g == 0) continue;
                    for (const auto& [f, val] : e.rows[t]) v[f * kLabels + y] += eta * g * val / scale;
                }
                if (t > 0) {
                    const auto prev = static_cast<std::size_t>(e.gold[t - 1]);
                    for (std::size_t a = 0; a < kLabels; ++a) {
                        for (std::size_t b = 0; b < kLabels; ++b) {
                            const double observed = (a == prev && b == gold) ? 1.0 : 0.0;
                            trans[a][b] += eta * (observed - post.pairwise[t][a][b]);
                        }
                    }
                }
            }
            if (scale < 1e-9) {
                for (double& x : v) x *= scale;
                scale = 1.0;
            }
        }
        model.loss_history.push_back(objective());
    }

    for (const auto& [name, f] : index) {
        model.emissions().emplace(name, ShortNameModel::Weights{scale * v[f * kLabels], scale * v[f * kLabels + 1]});
    }
    model.transitions() = trans;
    return model;
}

std::vector<Label> predict_labels(std::span<const std::string> tokens, std::span<const std::string> raw_tokens,
                                  const ShortNameModel& model, const FrequencyTable& freq) {
    if (tokens.empty()) return {};
    const auto seq = extract_features(tokens, raw_tokens, freq);
    auto labels = model.decode(seq);
    if (!any_in(labels)) {
        for (std::size_t i = 0; i < seq.size(); ++i) {
            if (seq[i].rank == 1) labels[i] = Label::In;
        }
    }
    return labels;
}

std::string predict(std::string_view name, const ShortNameModel& model, const FrequencyTable& freq) {
    const LabeledName ln = LabeledName::from_raw(textnorm::raw_tokens(name), {});
    const auto labels = predict_labels(ln.tokens, ln.raw, model, freq);
    std::vector<std::string> kept;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == Label::In) kept.push_back(ln.tokens[i]);
    }
    return join(kept);
}

// ---------------------------------------------------------------------------

Metrics score_labels(std::span<const std::vector<Label>> truth, std::span<const std::vector<Label>> predicted) {
    if (truth.empty()) throw Error(ErrorCode::EmptyCorpus, "nothing to evaluate");
    if (truth.size() != predicted.size()) throw Error(ErrorCode::OutOfRange, "prediction count differs from truth");
    Metrics m;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        if (truth[k].size() != predicted[k].size()) throw Error(ErrorCode::OutOfRange, "label sequence length differs");
        for (std::size_t t = 0; t < truth[k].size(); ++t) {
            const Label g = truth[k][t];
            const Label p = predicted[k][t];
            ClassMetrics& gold_cls = g == Label::In ? m.in : m.out;
            ++gold_cls.support;
            if (g == p) {
                ++gold_cls.tp;
            } else {
                ++gold_cls.fn;
                ++(p == Label::In ? m.in : m.out).fp;
            }
        }
    }
    finalize(m.in);
    finalize(m.out);
    const double tp = static_cast<double>(m.in.tp + m.out.tp);
    const double fp = static_cast<double>(m.in.fp + m.out.fp);
    const double fn = static_cast<double>(m.in.fn + m.out.fn);
    m.micro_precision = tp + fp == 0 ? 0.0 : tp / (tp + fp);
    m.micro_recall = tp + fn == 0 ? 0.0 : tp / (tp + fn);
    m.micro_f1 = m.micro_precision + m.micro_recall == 0
                     ? 0.0
                     : 2 * m.micro_precision * m.micro_recall / (m.micro_precision + m.micro_recall);
    m.macro_precision = (m.in.precision + m.out.precision) / 2;
    m.macro_recall = (m.in.recall + m.out.recall) / 2;
    m.macro_f1 = (m.in.f1 + m.out.f1) / 2;
    return m;
}

Metrics evaluate(const ShortNameModel& model, std::span<const LabeledName> corpus, const FrequencyTable& freq) {
    if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "evaluation corpus is empty");
    std::vector<std::vector<Label>> truth, predicted;
    truth.reserve(corpus.size());
    predicted.reserve(corpus.size());
    for (const auto& ln : corpus) {
        truth.push_back(ln.labels);
        predicted.push_back(predict_labels(ln.tokens, ln.raw, model, freq));
    }
    return score_labels(truth, predicted);
}

double min_freq_statistic(std::span<const LabeledName> corpus, const FrequencyTable& freq) {
    if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "corpus is empty");
    std::size_t hits = 0;
    for (const auto& ln : corpus) {
        const auto seq = extract_features(ln.tokens, ln.raw, freq);
        for (std::size_t i = 0; i < seq.size(); ++i) {
            if (seq[i].rank == 1 && ln.labels[i] == Label::In) ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(corpus.size());
}

}  // namespace rlink::shortname
