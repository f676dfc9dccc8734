#include "rlink/textnorm.hpp"

#include "rlink/error.hpp"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <fstream>
#include <istream>

namespace rlink::textnorm {

namespace {

const icu::Normalizer2& nfd() {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* n = icu::Normalizer2::getNFDInstance(status);
    if (U_FAILURE(status) || n == nullptr) {
        throw std::runtime_error("ICU NFD normalizer unavailable");
    }
    return *n;
}

enum class CharClass { Keep, Mark, Space };

CharClass classify(char32_t cp) {
    switch (u_charType(static_cast<UChar32>(cp))) {
        case U_UPPERCASE_LETTER:
        case U_LOWERCASE_LETTER:
        case U_TITLECASE_LETTER:
        case U_MODIFIER_LETTER:
        case U_OTHER_LETTER:
        case U_DECIMAL_DIGIT_NUMBER:
        case U_LETTER_NUMBER:
        case U_OTHER_NUMBER:
            return CharClass::Keep;
        case U_NON_SPACING_MARK:
        case U_ENCLOSING_MARK:
        case U_COMBINING_SPACING_MARK:
            return CharClass::Mark;
        default:
            return CharClass::Space;
    }
}

// Lowercase + NFD, preserving case when `lower` is false.
std::u32string decompose(std::string_view raw, bool lower) {
    icu::UnicodeString u = icu::UnicodeString::fromUTF8(
        icu::StringPiece(raw.data(), static_cast<int32_t>(raw.size())));
    if (lower) {
        u.toLower(icu::Locale::getRoot());
    }
    UErrorCode status = U_ZERO_ERROR;
    icu::UnicodeString d = nfd().normalize(u, status);
    if (U_FAILURE(status)) {
        throw std::runtime_error("ICU normalization failed");
    }
    std::u32string out;
    out.reserve(static_cast<std::size_t>(d.length()));
    for (int32_t i = 0; i < d.length();) {
        UChar32 c = d.char32At(i);
        out.push_back(static_cast<char32_t>(c));
        i += U16_LENGTH(c);
    }
    return out;
}

// Maps non letter/mark/digit code points to spaces, collapses and trims.
std::u32string squash(std::u32string_view in) {
    std::u32string out;
    out.reserve(in.size());
    bool pending_space = false;
    for (char32_t cp : in) {
        if (classify(cp) == CharClass::Space) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(U' ');
            pending_space = false;
        }
        out.push_back(cp);
    }
    return out;
}

std::vector<std::string> split_spaces(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && s[i] == ' ') ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ') ++j;
        if (j > i) out.emplace_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

std::string join(std::span<const std::string> tokens, std::size_t begin, std::size_t end) {
    std::string out;
    for (std::size_t i = begin; i < end; ++i) {
        if (i > begin) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

bool is_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

bool single_char(std::string_view token) {
    return to_u32(token).size() == 1;
}

// Merges every run of two or more tokens satisfying `pred` into one token.
bool merge_runs(std::vector<std::string>& tokens, bool (*pred)(std::string_view)) {
    bool changed = false;
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (std::size_t i = 0; i < tokens.size();) {
        if (!pred(tokens[i])) {
            out.push_back(std::move(tokens[i++]));
            continue;
        }
        std::size_t j = i + 1;
        while (j < tokens.size() && pred(tokens[j])) ++j;
        std::string merged;
        for (std::size_t k = i; k < j; ++k) merged += tokens[k];
        changed |= (j - i) > 1;
        out.push_back(std::move(merged));
        i = j;
    }
    tokens = std::move(out);
    return changed;
}

bool remove_legal_entities(std::vector<std::string>& tokens, const LegalEntityLexicon& lex) {
    auto spans = detect_legal_entity_spans(tokens, lex);
    if (spans.empty()) return false;
    std::vector<std::string> out;
    std::size_t next = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (next < spans.size() && i >= spans[next].begin) {
            if (i + 1 == spans[next].end) ++next;
            continue;
        }
        out.push_back(std::move(tokens[i]));
    }
    tokens = std::move(out);
    return true;
}

}  // namespace

// ---------------------------------------------------------------------------

std::u32string to_u32(std::string_view utf8) {
    std::u32string out;
    out.reserve(utf8.size());
    const auto* s = reinterpret_cast<const std::uint8_t*>(utf8.data());
    const auto len = static_cast<int32_t>(utf8.size());
    for (int32_t i = 0; i < len;) {
        UChar32 c;
        U8_NEXT(s, i, len, c);
        out.push_back(c < 0 ? U'�' : static_cast<char32_t>(c));
    }
    return out;
}

std::string to_utf8(std::u32string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char32_t cp : text) {
        std::uint8_t buf[U8_MAX_LENGTH];
        int32_t n = 0;
        UBool err = false;
        U8_APPEND(buf, n, U8_MAX_LENGTH, static_cast<UChar32>(cp), err);
        if (err) {
            out += "\xEF\xBF\xBD";
        } else {
            out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(n));
        }
    }
    return out;
}

bool is_combining_mark(char32_t cp) noexcept {
    return classify(cp) == CharClass::Mark;
}

std::vector<std::u32string> graphemes(std::u32string_view text) {
    std::vector<std::u32string> out;
    for (char32_t cp : text) {
        if (is_combining_mark(cp) && !out.empty() && out.back().front() != U' ') {
            out.back().push_back(cp);
        } else {
            out.emplace_back(1, cp);
        }
    }
    return out;
}

std::vector<std::string> CleanText::tokens() const {
    return split_spaces(text);
}

CleanText CleanText::from_clean(std::string text) {
    CleanText ct{std::move(text), {}};
    std::uint32_t idx = 0;
    for (char32_t cp : to_u32(ct.text)) {
        if (is_combining_mark(cp)) ct.combining_marks.push_back(idx);
        ++idx;
    }
    return ct;
}

CleanText clean_light(std::string_view raw) {
    return CleanText::from_clean(to_utf8(squash(decompose(raw, true))));
}

std::string strip_marks(std::string_view text) {
    std::u32string cps = to_u32(text);
    std::erase_if(cps, [](char32_t cp) { return is_combining_mark(cp); });
    return to_utf8(cps);
}

CleanText clean_blocking(std::string_view raw, const LegalEntityLexicon& lex) {
    CleanText light = clean_light(raw);
    std::vector<std::string> tokens = split_spaces(strip_marks(light.text));

    // Each step can expose a new match for another, so iterate to a fixed point.
    // Legal-entity removal strictly shrinks the token list, which bounds the loop.
    bool changed = true;
    while (changed) {
        changed = remove_legal_entities(tokens, lex);
        changed |= merge_runs(tokens, single_char);
        changed |= merge_runs(tokens, is_digits);
    }
    return CleanText::from_clean(join(tokens, 0, tokens.size()));
}

std::vector<std::string> raw_tokens(std::string_view raw) {
    return split_spaces(to_utf8(squash(decompose(raw, false))));
}

// ---------------------------------------------------------------------------

LegalEntityLexicon::LegalEntityLexicon(std::span<const std::string> entries) {
    for (const auto& e : entries) add(e);
}

void LegalEntityLexicon::add(std::string_view phrase) {
    std::string key = strip_marks(clean_light(phrase).text);
    if (key.empty()) return;
    max_tokens_ = std::max(max_tokens_, split_spaces(key).size());
    entries_.insert(std::move(key));
}

bool LegalEntityLexicon::contains(std::string_view phrase) const {
    return entries_.contains(std::string(phrase));
}

LegalEntityLexicon LegalEntityLexicon::parse(std::istream& in) {
    LegalEntityLexicon lex;
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        lex.add(line);
    }
    return lex;
}

LegalEntityLexicon LegalEntityLexicon::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open lexicon " + path.string());
    }
    return parse(in);
}

std::vector<TokenSpan> detect_legal_entity_spans(std::span<const std::string> tokens,
                                                 const LegalEntityLexicon& lex) {
    std::vector<TokenSpan> spans;
    if (lex.size() == 0) return spans;

    std::vector<std::string> plain;
    plain.reserve(tokens.size());
    for (const auto& t : tokens) plain.push_back(strip_marks(t));

    for (std::size_t i = 0; i < plain.size();) {
        std::size_t longest = 0;
        const std::size_t limit = std::min(lex.max_tokens(), plain.size() - i);
        for (std::size_t n = limit; n >= 1; --n) {
            if (lex.contains(join(plain, i, i + n))) {
                longest = n;
                break;
            }
        }
        if (longest > 0) {
            spans.push_back({i, i + longest});
            i += longest;
        } else {
            ++i;
        }
    }
    return spans;
}

// ---------------------------------------------------------------------------

ShingleSet shingle_bigrams(const CleanText& ct) {
    std::u32string cps = ct.codepoints();
    std::erase(cps, U' ');
    auto units = graphemes(cps);

    ShingleSet out;
    if (units.size() == 1) {
        out.push_back(to_utf8(units.front()));
        return out;
    }
    for (std::size_t i = 0; i + 1 < units.size(); ++i) {
        out.push_back(to_utf8(units[i] + units[i + 1]));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

double jaccard(const ShingleSet& a, const ShingleSet& b) {
    if (a.empty() && b.empty()) return 1.0;
    std::size_t inter = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia < *ib) {
            ++ia;
        } else if (*ib < *ia) {
            ++ib;
        } else {
            ++inter;
            ++ia;
            ++ib;
        }
    }
    const std::size_t uni = a.size() + b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace rlink::textnorm
