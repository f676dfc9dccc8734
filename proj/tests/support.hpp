#pragma once

// Shared helpers for the test binaries: scratch directories and small
// hand-rolled random generators.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace testsupport {

inline std::filesystem::path data_dir() { return RLINK_DATA_DIR; }

/// Fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
public:
    explicit ScratchDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("rlink-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

class Gen {
public:
    explicit Gen(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t u64() { return eng_(); }
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(eng_() % n); }
    double unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
    bool chance(double p) { return unit() < p; }

    /// Lower-case ASCII letters drawn from the first `alphabet` letters.
    std::string word(std::size_t min_len, std::size_t max_len, std::size_t alphabet = 26) {
        const std::size_t len = min_len + below(max_len - min_len + 1);
        std::string s;
        for (std::size_t i = 0; i < len; ++i) s.push_back(static_cast<char>('a' + below(alphabet)));
        return s;
    }

    /// Mixed text: letters, accented letters, digits, punctuation and odd spacing.
    std::string messy(std::size_t max_len) {
        static const std::vector<std::string> pieces = {
            "a", "b", "c", "e", "o", "u", "x", "A", "B", "Z", "ä", "é", "ü", "Ö", "ß", "ç", "1", "7", " ", " ",
            "  ", ".", ",", "&", "-", "'", "!", "(", "\t", "e\xCC\x81", "n\xCC\x83", "Æ", "ø", "Ł"};
        const std::size_t len = below(max_len + 1);
        std::string s;
        for (std::size_t i = 0; i < len; ++i) s += pieces[below(pieces.size())];
        return s;
    }

    /// Space-separated words.
    std::string phrase(std::size_t max_words, std::size_t alphabet = 26) {
        const std::size_t n = 1 + below(max_words);
        std::string s;
        for (std::size_t i = 0; i < n; ++i) {
            if (i) s.push_back(' ');
            s += word(1, 8, alphabet);
        }
        return s;
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace testsupport
