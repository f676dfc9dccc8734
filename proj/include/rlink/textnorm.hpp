#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace rlink::textnorm {

// ---------------------------------------------------------------------------
// UTF-8 helpers
// ---------------------------------------------------------------------------

std::u32string to_u32(std::string_view utf8);
std::string to_utf8(std::u32string_view text);
bool is_combining_mark(char32_t cp) noexcept;

/// Splits decomposed text into grapheme-like units: a base code point followed by
/// its combining marks. A mark with no base forms a unit of its own.
std::vector<std::u32string> graphemes(std::u32string_view text);

// ---------------------------------------------------------------------------
// Clean text
// ---------------------------------------------------------------------------

/// Lowercased, decomposed (NFD) text containing only letters, marks, digits and
/// single interior spaces.
struct CleanText {
    std::string text;
    /// Code point indices of combining marks in `text`.
    std::vector<std::uint32_t> combining_marks;

    bool empty() const noexcept { return text.empty(); }
    std::u32string codepoints() const { return to_u32(text); }
    std::vector<std::string> tokens() const;

    /// Wraps text that is already in clean form, recomputing the mark index.
    static CleanText from_clean(std::string text);

    friend bool operator==(const CleanText&, const CleanText&) = default;
};

struct TokenSpan {
    std::size_t begin = 0;  // first token
    std::size_t end = 0;    // one past the last token

    friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

/// Legal-entity-type phrases ("ag", "gmbh", "pty ltd", ...). Entries are stored
/// light-cleaned with diacritics removed; lookups compare the same form.
class LegalEntityLexicon {
public:
    LegalEntityLexicon() = default;
    explicit LegalEntityLexicon(std::span<const std::string> entries);

    /// One entry per line, `#` starts a comment.
    static LegalEntityLexicon parse(std::istream& in);
    static LegalEntityLexicon load(const std::filesystem::path& path);

    void add(std::string_view phrase);
    bool contains(std::string_view phrase) const;
    std::size_t size() const noexcept { return entries_.size(); }
    std::size_t max_tokens() const noexcept { return max_tokens_; }

private:
    std::unordered_set<std::string> entries_;
    std::size_t max_tokens_ = 0;
};

CleanText clean_light(std::string_view raw);

/// Aggressive cleaning used only to derive blocking keys: light cleaning, then
/// diacritics dropped, legal-entity phrases removed, single-character runs and
/// digit groups merged.
CleanText clean_blocking(std::string_view raw, const LegalEntityLexicon& lex);

std::string strip_marks(std::string_view text);

/// Case-preserving tokens of a raw string: decomposed, punctuation removed.
/// Token i lowercases to token i of clean_light(raw).
std::vector<std::string> raw_tokens(std::string_view raw);

std::vector<TokenSpan> detect_legal_entity_spans(std::span<const std::string> tokens,
                                                 const LegalEntityLexicon& lex);

// ---------------------------------------------------------------------------
// Shingles
// ---------------------------------------------------------------------------

/// Sorted, duplicate-free set of UTF-8 encoded shingles.
using ShingleSet = std::vector<std::string>;

/// Grapheme bigrams of the text with spaces removed. A one-grapheme input yields
/// that grapheme as its only shingle.
ShingleSet shingle_bigrams(const CleanText& ct);

double jaccard(const ShingleSet& a, const ShingleSet& b);

}  // namespace rlink::textnorm
