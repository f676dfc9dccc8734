#include "rlink/scoring.hpp"

#include "rlink/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <tuple>

namespace rlink::scoring {

namespace {

constexpr std::array<std::pair<Strategy, std::string_view>, 5> kStrategyNames{{
    {Strategy::Jaccard, "jaccard"},
    {Strategy::Levenshtein, "levenshtein"},
    {Strategy::Weighted, "weighted"},
    {Strategy::MaxMin, "maxmin"},
    {Strategy::Rls, "rls"},
}};

/// Keys of pseudo-units start with a control byte so they never equal a grapheme.
constexpr char kPseudoPrefix = '\x02';
constexpr char kBigramSeparator = '\x1f';

void require_non_empty(const textnorm::CleanText& a, const textnorm::CleanText& b) {
    if (a.empty() || b.empty()) throw Error(ErrorCode::EmptyString, "cannot score an empty string");
}

std::vector<std::u32string> units_of(const textnorm::CleanText& t) { return textnorm::graphemes(t.codepoints()); }

std::vector<std::string> split_spaces(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        const auto sp = s.find(' ', i);
        const auto end = sp == std::string_view::npos ? s.size() : sp;
        if (end > i) out.emplace_back(s.substr(i, end - i));
        i = end + 1;
    }
    return out;
}

std::string join(const std::vector<std::string>& tokens, std::size_t b, std::size_t e) {
    std::string out;
    for (std::size_t i = b; i < e; ++i) {
        if (i > b) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

/// Bigram set with per-bigram weights (max over repeated occurrences).
std::map<std::string, double> weighted_bigrams(const WeightedString& w) {
    std::vector<const WeightedString::Unit*> units;
    for (const auto& u : w.units) {
        if (!u.is_space) units.push_back(&u);
    }
    std::map<std::string, double> out;
    if (units.size() == 1) {
        out.emplace(units[0]->key, units[0]->weight);
        return out;
    }
    for (std::size_t i = 0; i + 1 < units.size(); ++i) {
        std::string key = units[i]->key;
        key.push_back(kBigramSeparator);
        key += units[i + 1]->key;
        const double weight = (units[i]->weight + units[i + 1]->weight) / 2;
        auto [it, inserted] = out.emplace(std::move(key), weight);
        if (!inserted) it->second = std::max(it->second, weight);
    }
    return out;
}

std::string ascii_upper_without_spaces(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c == ' ' || c == '\t') continue;
        out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
    return out;
}

double prefix_ratio(std::string_view a, std::string_view b) {
    const std::size_t n = std::min(a.size(), b.size());
    std::size_t k = 0;
    while (k < n && a[k] == b[k]) ++k;
    return static_cast<double>(k) / static_cast<double>(std::max(a.size(), b.size()));
}

bool all_digits(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace

std::string_view to_string(Strategy s) noexcept {
    for (const auto& [k, name] : kStrategyNames) {
        if (k == s) return name;
    }
    return "unknown";
}

std::optional<Strategy> parse_strategy(std::string_view text) noexcept {
    for (const auto& [k, name] : kStrategyNames) {
        if (name == text) return k;
    }
    return std::nullopt;
}

double WeightedString::total_weight() const noexcept {
    double t = 0;
    for (const auto& u : units) t += u.weight;
    return t;
}

WeightedString WeightedString::uniform(const textnorm::CleanText& text) {
    WeightedString w;
    for (const auto& g : units_of(text)) {
        w.units.push_back({textnorm::to_utf8(g), 1.0, g == U" "});
    }
    return w;
}

// ---------------------------------------------------------------------------

std::size_t indel_distance(const textnorm::CleanText& s1, const textnorm::CleanText& s2) {
    const auto a = units_of(s1);
    const auto b = units_of(s2);
    // Longest common subsequence, one row at a time.
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return a.size() + b.size() - 2 * prev[b.size()];
}

double lev_score(const textnorm::CleanText& s1, const textnorm::CleanText& s2) {
    require_non_empty(s1, s2);
    const double total = static_cast<double>(units_of(s1).size() + units_of(s2).size());
    return 1.0 - static_cast<double>(indel_distance(s1, s2)) / total;
}

double weighted_lev_score(const WeightedString& w1, const WeightedString& w2) {
    const double total = w1.total_weight() + w2.total_weight();
    if (w1.units.empty() || w2.units.empty() || !(total > 0)) {
        throw Error(ErrorCode::EmptyString, "cannot score an empty weighted string");
    }
    const auto& a = w1.units;
    const auto& b = w2.units;
    std::vector<double> prev(b.size() + 1), cur(b.size() + 1);
    prev[0] = 0;
    for (std::size_t j = 1; j <= b.size(); ++j) prev[j] = prev[j - 1] + b[j - 1].weight;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = prev[0] + a[i - 1].weight;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            double best = std::min(prev[j] + a[i - 1].weight, cur[j - 1] + b[j - 1].weight);
            if (a[i - 1].key == b[j - 1].key) best = std::min(best, prev[j - 1]);
            cur[j] = best;
        }
        std::swap(prev, cur);
    }
    return std::clamp(1.0 - prev[b.size()] / total, 0.0, 1.0);
}

double jaccard_score(const textnorm::CleanText& s1, const textnorm::CleanText& s2) {
    require_non_empty(s1, s2);
    return textnorm::jaccard(textnorm::shingle_bigrams(s1), textnorm::shingle_bigrams(s2));
}

double weighted_jaccard_score(const WeightedString& w1, const WeightedString& w2) {
    const auto a = weighted_bigrams(w1);
    const auto b = weighted_bigrams(w2);
    if (a.empty() || b.empty()) throw Error(ErrorCode::EmptyString, "cannot score an empty weighted string");
    double inter = 0, uni = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() || ib != b.end()) {
        if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
            uni += ia->second;
            ++ia;
        } else if (ia == a.end() || ib->first < ia->first) {
            uni += ib->second;
            ++ib;
        } else {
            const double w = std::max(ia->second, ib->second);
            inter += w;
            uni += w;
            ++ia;
            ++ib;
        }
    }
    return uni > 0 ? inter / uni : 1.0;
}

// ---------------------------------------------------------------------------

NameInput NameInput::from_raw(std::string_view raw_name, std::string_view short_name) {
    return {textnorm::clean_light(raw_name), textnorm::clean_light(short_name).text};
}

WeightedString rls_weighted(const NameInput& name, const NameParams& params, const NameContext& ctx) {
    const auto tokens = name.clean.tokens();
    const std::size_t n = tokens.size();
    std::vector<double> multiplier(n, 1.0);
    std::vector<bool> fixed(n, false);  // token already claimed by a rule

    // Legal-entity spans, keyed by their first token.
    std::vector<std::optional<std::size_t>> le_end(n);
    if (ctx.lexicon) {
        for (const auto& span : textnorm::detect_legal_entity_spans(tokens, *ctx.lexicon)) {
            le_end[span.begin] = span.end;
            for (std::size_t i = span.begin; i < span.end; ++i) fixed[i] = true;
        }
    }

    std::vector<std::size_t> hits;
    if (!name.short_name.empty()) {
        const auto sn = split_spaces(name.short_name);
        std::size_t j = 0;
        for (std::size_t i = 0; i < n && j < sn.size(); ++i) {
            if (tokens[i] == sn[j]) {
                hits.push_back(i);
                ++j;
            }
        }
        if (j != sn.size()) {
            // Not an in-order subsequence; fall back to token membership.
            hits.clear();
            for (std::size_t i = 0; i < n; ++i) {
                if (std::find(sn.begin(), sn.end(), tokens[i]) != sn.end()) hits.push_back(i);
            }
        }
    }
    std::vector<bool> short_hit(n, false);
    for (std::size_t i : hits) {
        if (fixed[i]) continue;
        multiplier[i] = params.short_name_multiplier;
        short_hit[i] = true;
    }
    const auto short_count = static_cast<std::size_t>(std::count(short_hit.begin(), short_hit.end(), true));

    // A nearby city mention is down-weighted even when the short-name model
    // picked it up, unless the short name consists of nothing but that city.
    if (ctx.trie && ctx.anchor) {
        constexpr std::size_t kMaxCityTokens = 3;
        for (std::size_t b = 0; b < n; ++b) {
            if (fixed[b]) continue;
            for (std::size_t e = std::min(n, b + kMaxCityTokens); e > b; --e) {
                if (e - b == n) continue;  // the whole name is never a city mention
                const auto first = fixed.begin() + static_cast<std::ptrdiff_t>(b);
                if (std::any_of(first, first + static_cast<std::ptrdiff_t>(e - b), [](bool f) { return f; })) continue;
                const auto sfirst = short_hit.begin() + static_cast<std::ptrdiff_t>(b);
                const auto inside = static_cast<std::size_t>(
                    std::count(sfirst, sfirst + static_cast<std::ptrdiff_t>(e - b), true));
                if (inside > 0 && inside == short_count) continue;
                const auto where = ctx.trie->lookup(join(tokens, b, e));
                if (!where || geo::haversine_km(*where, *ctx.anchor) > params.vicinity_km) continue;
                for (std::size_t i = b; i < e; ++i) {
                    multiplier[i] = params.city_weight;
                    fixed[i] = true;
                }
                b = e - 1;
                break;
            }
        }
    }

    WeightedString out;
    bool absorb_next_space = false;
    for (std::size_t i = 0; i < n;) {
        if (le_end[i]) {
            const std::size_t e = *le_end[i];
            // The pseudo-unit swallows its separating space: the one before it,
            // or the one after it when the name starts with the legal form.
            if (i == 0 && e < n) absorb_next_space = true;
            out.units.push_back({kPseudoPrefix + textnorm::strip_marks(join(tokens, i, e)),
                                 1.0 - kLegalEntityEpsilon, false});
            i = e;
            continue;
        }
        if (i > 0 && !absorb_next_space) out.units.push_back({" ", 1.0, true});
        absorb_next_space = false;
        for (char32_t cp : textnorm::to_u32(tokens[i])) {
            const bool mark = textnorm::is_combining_mark(cp);
            out.units.push_back({textnorm::to_utf8(std::u32string(1, cp)),
                                 (mark ? params.combining_weight : 1.0) * multiplier[i], false});
        }
        ++i;
    }
    return out;
}

double combine(double jaccard, double lev, Strategy strategy, const NameParams& params) {
    double s = 0;
    switch (strategy) {
        case Strategy::Jaccard: s = jaccard; break;
        case Strategy::Levenshtein: s = lev; break;
        case Strategy::Weighted: s = (jaccard + lev) / 2; break;
        case Strategy::MaxMin:
        case Strategy::Rls:
            s = params.max_coefficient * std::max(jaccard, lev) + params.min_coefficient * std::min(jaccard, lev);
            break;
    }
    return std::clamp(s, 0.0, 1.0);
}

double company_name_score(const NameInput& query, const NameInput& record, const NameParams& params,
                          const NameContext& ctx) {
    require_non_empty(query.clean, record.clean);
    switch (params.strategy) {
        case Strategy::Jaccard: return jaccard_score(query.clean, record.clean);
        case Strategy::Levenshtein: return lev_score(query.clean, record.clean);
        case Strategy::Weighted:
        case Strategy::MaxMin:
            return combine(jaccard_score(query.clean, record.clean), lev_score(query.clean, record.clean),
                           params.strategy, params);
        case Strategy::Rls: {
            const auto wq = rls_weighted(query, params, ctx);
            const auto wr = rls_weighted(record, params, ctx);
            return combine(weighted_jaccard_score(wq, wr), weighted_lev_score(wq, wr), Strategy::Rls, params);
        }
    }
    return 0;
}

double company_name_score(std::string_view query, std::string_view record, Strategy strategy) {
    NameParams p;
    p.strategy = strategy;
    return company_name_score(NameInput::from_raw(query), NameInput::from_raw(record), p);
}

// ---------------------------------------------------------------------------

double city_score(std::string_view query_city, std::string_view record_city, const geo::CityTrie* trie, double tau_km) {
    if (trie) {
        const auto a = trie->lookup(query_city);
        const auto b = trie->lookup(record_city);
        if (a && b) return std::exp(-geo::haversine_km(*a, *b) / tau_km);
    }
    const auto qa = textnorm::clean_light(query_city);
    const auto rb = textnorm::clean_light(record_city);
    if (qa.empty() || rb.empty()) return 0.0;
    return lev_score(qa, rb);
}

double postal_score(std::string_view p1, std::string_view p2) {
    const auto a = ascii_upper_without_spaces(p1);
    const auto b = ascii_upper_without_spaces(p2);
    if (a.empty() || b.empty()) throw Error(ErrorCode::EmptyString, "empty postal code");
    return prefix_ratio(a, b);
}

double country_score(std::string_view c1, std::string_view c2) {
    return ascii_upper_without_spaces(c1) == ascii_upper_without_spaces(c2) ? 1.0 : 0.0;
}

double industry_score(std::string_view sic1, std::string_view sic2) {
    for (auto s : {sic1, sic2}) {
        if (s.empty() || s.size() > 4 || !all_digits(s)) {
            throw Error(ErrorCode::NonDigitInput, "industry code must be 1-4 digits: '" + std::string(s) + "'");
        }
    }
    return prefix_ratio(sic1, sic2);
}

double street_score(std::string_view s1, std::string_view s2) {
    const auto ta = textnorm::clean_light(s1).tokens();
    const auto tb = textnorm::clean_light(s2).tokens();
    if (ta.empty() || tb.empty()) throw Error(ErrorCode::EmptyString, "empty street");

    std::vector<textnorm::CleanText> ca, cb;
    std::vector<double> la, lb;
    double total = 0;
    for (const auto& t : ta) {
        ca.push_back(textnorm::CleanText::from_clean(t));
        la.push_back(static_cast<double>(textnorm::graphemes(ca.back().codepoints()).size()));
        total += la.back();
    }
    for (const auto& t : tb) {
        cb.push_back(textnorm::CleanText::from_clean(t));
        lb.push_back(static_cast<double>(textnorm::graphemes(cb.back().codepoints()).size()));
        total += lb.back();
    }

    std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
    pairs.reserve(ta.size() * tb.size());
    for (std::size_t i = 0; i < ta.size(); ++i) {
        for (std::size_t j = 0; j < tb.size(); ++j) pairs.emplace_back(lev_score(ca[i], cb[j]), i, j);
    }
    // Ties are broken by token text before position so the result does not
    // depend on token order or on which side is which.
    auto text_key = [&](std::size_t i, std::size_t j) { return std::minmax(ta[i], tb[j]); };
    std::sort(pairs.begin(), pairs.end(), [&](const auto& x, const auto& y) {
        if (std::get<0>(x) != std::get<0>(y)) return std::get<0>(x) > std::get<0>(y);
        const auto kx = text_key(std::get<1>(x), std::get<2>(x));
        const auto ky = text_key(std::get<1>(y), std::get<2>(y));
        if (kx != ky) return kx < ky;
        return std::tie(std::get<1>(x), std::get<2>(x)) < std::tie(std::get<1>(y), std::get<2>(y));
    });

    std::vector<bool> used_a(ta.size(), false), used_b(tb.size(), false);
    double matched = 0;
    for (const auto& [score, i, j] : pairs) {
        if (used_a[i] || used_b[j] || score <= 0) continue;
        used_a[i] = used_b[j] = true;
        matched += score * (la[i] + lb[j]);
    }
    return std::clamp(matched / total, 0.0, 1.0);
}

}  // namespace rlink::scoring
