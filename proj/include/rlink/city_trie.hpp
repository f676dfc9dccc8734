#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rlink::geo {

struct GeoPoint {
    double lat = 0;  // degrees
    double lon = 0;  // degrees

    friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Great-circle distance on a sphere of radius 6371 km.
double haversine_km(GeoPoint a, GeoPoint b);

struct GazetteerStats {
    std::size_t rows = 0;
    std::size_t inserted = 0;
    std::size_t malformed = 0;
    std::size_t duplicates = 0;
};

/// Exact-match character trie from city names to coordinates. Names are keyed
/// light-cleaned with diacritics removed, so "Zürich" and "zurich" collide.
class CityTrie {
public:
    static std::string key(std::string_view name);

    /// False (and no change) when the name is empty or already present.
    bool insert(std::string_view name, GeoPoint where);
    std::optional<GeoPoint> lookup(std::string_view name) const;
    /// True when some inserted key starts with key(prefix).
    bool has_prefix(std::string_view prefix) const;

    std::size_t size() const noexcept { return size_; }

    /// Rows `name<TAB>latitude<TAB>longitude`; malformed rows are skipped and counted.
    static CityTrie parse(std::istream& in, GazetteerStats* stats = nullptr);
    static CityTrie load(const std::filesystem::path& path, GazetteerStats* stats = nullptr);

private:
    struct Node {
        std::vector<std::pair<char, std::uint32_t>> children;  // sorted by byte
        std::optional<GeoPoint> value;
    };

    std::optional<std::uint32_t> find(std::string_view k) const;

    std::vector<Node> nodes_{Node{}};
    std::size_t size_ = 0;
};

}  // namespace rlink::geo
