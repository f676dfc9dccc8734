#include "rlink/city_trie.hpp"

#include "rlink/binary_io.hpp"
#include "rlink/error.hpp"
#include "rlink/textnorm.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numbers>
#include <sstream>

namespace rlink::geo {

namespace {

constexpr double kEarthRadiusKm = 6371.0;

void check(GeoPoint p) {
    if (!(p.lat >= -90 && p.lat <= 90 && p.lon >= -180 && p.lon <= 180)) {
        throw Error(ErrorCode::CoordinateOutOfRange,
                    "coordinate out of range: (" + std::to_string(p.lat) + ", " + std::to_string(p.lon) + ")");
    }
}

std::optional<double> parse_double(std::string_view s) {
    while (!s.empty() && (s.front() == ' ')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
    double v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

}  // namespace

double haversine_km(GeoPoint a, GeoPoint b) {
    check(a);
    check(b);
    constexpr double rad = std::numbers::pi / 180.0;
    const double dlat = (b.lat - a.lat) * rad;
    const double dlon = (b.lon - a.lon) * rad;
    const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                     std::cos(a.lat * rad) * std::cos(b.lat * rad) * std::sin(dlon / 2) * std::sin(dlon / 2);
    return 2 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

std::string CityTrie::key(std::string_view name) { return textnorm::strip_marks(textnorm::clean_light(name).text); }

std::optional<std::uint32_t> CityTrie::find(std::string_view k) const {
    std::uint32_t cur = 0;
    for (char c : k) {
        const auto& ch = nodes_[cur].children;
        auto it = std::lower_bound(ch.begin(), ch.end(), c, [](const auto& e, char x) { return e.first < x; });
        if (it == ch.end() || it->first != c) return std::nullopt;
        cur = it->second;
    }
    return cur;
}

bool CityTrie::insert(std::string_view name, GeoPoint where) {
    check(where);
    const std::string k = key(name);
    if (k.empty()) return false;
    std::uint32_t cur = 0;
    for (char c : k) {
        auto& ch = nodes_[cur].children;
        auto it = std::lower_bound(ch.begin(), ch.end(), c, [](const auto& e, char x) { return e.first < x; });
        if (it != ch.end() && it->first == c) {
            cur = it->second;
            continue;
        }
        const auto next = static_cast<std::uint32_t>(nodes_.size());
        ch.insert(it, {c, next});
        nodes_.emplace_back();
        cur = next;
    }
    if (nodes_[cur].value) return false;
    nodes_[cur].value = where;
    ++size_;
    return true;
}

std::optional<GeoPoint> CityTrie::lookup(std::string_view name) const {
    const std::string k = key(name);
    if (k.empty()) return std::nullopt;
    const auto node = find(k);
    return node ? nodes_[*node].value : std::nullopt;
}

bool CityTrie::has_prefix(std::string_view prefix) const { return find(key(prefix)).has_value(); }

CityTrie CityTrie::parse(std::istream& in, GazetteerStats* stats) {
    GazetteerStats local;
    GazetteerStats& st = stats ? *stats : local;
    st = GazetteerStats{};
    CityTrie trie;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r" || line.front() == '#') continue;
        ++st.rows;
        std::vector<std::string_view> fields;
        std::string_view rest = line;
        for (std::size_t tab; (tab = rest.find('\t')) != std::string_view::npos;) {
            fields.push_back(rest.substr(0, tab));
            rest.remove_prefix(tab + 1);
        }
        fields.push_back(rest);
        std::optional<double> lat, lon;
        if (fields.size() == 3) {
            lat = parse_double(fields[1]);
            lon = parse_double(fields[2]);
        }
        if (!lat || !lon || *lat < -90 || *lat > 90 || *lon < -180 || *lon > 180 || key(fields[0]).empty()) {
            ++st.malformed;
            spdlog::debug("gazetteer: skipping malformed row {}", st.rows);
            continue;
        }
        if (trie.insert(fields[0], {*lat, *lon})) {
            ++st.inserted;
        } else {
            ++st.duplicates;
        }
    }
    if (st.duplicates > 0) spdlog::info("gazetteer: {} duplicate city names kept their first entry", st.duplicates);
    return trie;
}

CityTrie CityTrie::load(const std::filesystem::path& path, GazetteerStats* stats) {
    std::istringstream ss(io::read_file(path.string()));
    return parse(ss, stats);
}

}  // namespace rlink::geo
