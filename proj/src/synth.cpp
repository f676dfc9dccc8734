#include "rlink/synth.hpp"

#include "rlink/csv.hpp"
#include "rlink/textnorm.hpp"

#include <fmt/format.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>
#include <unordered_set>

namespace rlink::synth {

std::size_t Rng::zipf(std::size_t n, double s) {
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) total += 1.0 / std::pow(static_cast<double>(i + 1), s);
    double x = unit() * total;
    for (std::size_t i = 0; i < n; ++i) {
        x -= 1.0 / std::pow(static_cast<double>(i + 1), s);
        if (x < 0) return i;
    }
    return n - 1;
}

namespace {

struct RealCity {
    const char* name;
    double lat;
    double lon;
    const char* country;
};

// clang-format off
constexpr RealCity kRealCities[] = {
    {"Zurich", 47.3769, 8.5417, "CH"}, {"Bern", 46.9480, 7.4474, "CH"}, {"Basel", 47.5596, 7.5886, "CH"},
    {"Geneva", 46.2044, 6.1432, "CH"}, {"Genève", 46.2044, 6.1432, "CH"}, {"Lausanne", 46.5197, 6.6323, "CH"},
    {"Winterthur", 47.4988, 8.7237, "CH"}, {"Lucerne", 47.0502, 8.3093, "CH"}, {"Luzern", 47.0502, 8.3093, "CH"},
    {"St. Gallen", 47.4245, 9.3767, "CH"}, {"Lugano", 46.0037, 8.9511, "CH"}, {"Zug", 47.1662, 8.5155, "CH"},
    {"Biel", 47.1368, 7.2468, "CH"}, {"Thun", 46.7580, 7.6280, "CH"}, {"Chur", 46.8508, 9.5320, "CH"},
    {"Fribourg", 46.8065, 7.1620, "CH"}, {"Neuchâtel", 46.9900, 6.9293, "CH"}, {"Schaffhausen", 47.6973, 8.6349, "CH"},
    {"Baden", 47.4733, 8.3059, "CH"}, {"Uster", 47.3471, 8.7209, "CH"}, {"Aarau", 47.3925, 8.0442, "CH"},
    {"Sion", 46.2331, 7.3606, "CH"},
    {"Berlin", 52.5200, 13.4050, "DE"}, {"Munich", 48.1351, 11.5820, "DE"}, {"München", 48.1351, 11.5820, "DE"},
    {"Hamburg", 53.5511, 9.9937, "DE"}, {"Frankfurt", 50.1109, 8.6821, "DE"}, {"Stuttgart", 48.7758, 9.1829, "DE"},
    {"Cologne", 50.9375, 6.9603, "DE"}, {"Köln", 50.9375, 6.9603, "DE"}, {"Düsseldorf", 51.2277, 6.7735, "DE"},
    {"Freiburg", 47.9990, 7.8420, "DE"}, {"Konstanz", 47.6779, 9.1732, "DE"},
    {"Vienna", 48.2082, 16.3738, "AT"}, {"Wien", 48.2082, 16.3738, "AT"}, {"Graz", 47.0707, 15.4395, "AT"},
    {"Salzburg", 47.8095, 13.0550, "AT"}, {"Innsbruck", 47.2692, 11.4041, "AT"},
    {"Paris", 48.8566, 2.3522, "FR"}, {"Lyon", 45.7640, 4.8357, "FR"}, {"Marseille", 43.2965, 5.3698, "FR"},
    {"Strasbourg", 48.5734, 7.7521, "FR"}, {"Annecy", 45.8992, 6.1294, "FR"},
    {"Milan", 45.4642, 9.1900, "IT"}, {"Milano", 45.4642, 9.1900, "IT"}, {"Rome", 41.9028, 12.4964, "IT"},
    {"Turin", 45.0703, 7.6869, "IT"}, {"Como", 45.8081, 9.0852, "IT"},
    {"London", 51.5074, -0.1278, "GB"}, {"Manchester", 53.4808, -2.2426, "GB"}, {"Birmingham", 52.4862, -1.8904, "GB"},
    {"Edinburgh", 55.9533, -3.1883, "GB"},
    {"New York", 40.7128, -74.0060, "US"}, {"San Francisco", 37.7749, -122.4194, "US"}, {"Chicago", 41.8781, -87.6298, "US"},
    {"Boston", 42.3601, -71.0589, "US"}, {"Seattle", 47.6062, -122.3321, "US"}, {"San Jose", 37.3382, -121.8863, "US"},
    {"Rüschlikon", 47.3070, 8.5560, "CH"},
    {"Sydney", -33.8688, 151.2093, "AU"}, {"Melbourne", -37.8136, 144.9631, "AU"}, {"Brisbane", -27.4698, 153.0251, "AU"},
    {"Beijing", 39.9042, 116.4074, "CN"}, {"Shanghai", 31.2304, 121.4737, "CN"}, {"Shenzhen", 22.5431, 114.0579, "CN"},
    {"Tokyo", 35.6762, 139.6503, "JP"}, {"Osaka", 34.6937, 135.5023, "JP"},
};
// clang-format on

const std::map<std::string, std::vector<std::string>> kTownSuffixes = {
    {"CH", {"ikon", "ingen", "wil", "dorf", "berg", "bach", "au"}},
    {"DE", {"ingen", "hausen", "dorf", "heim", "stadt", "feld"}},
    {"AT", {"dorf", "kirchen", "berg", "au", "hofen"}},
    {"FR", {"ville", "court", "ac", "ières", "mont"}},
    {"IT", {"ano", "ello", "ona", "ate", "ino"}},
    {"GB", {"ton", "ham", "ford", "bury", "wick"}},
    {"US", {"ville", "field", "port", "ton", "wood"}},
    {"AU", {"ville", "vale", "ton", "field"}},
    {"CN", {"zhou", "yang", "an", "ning"}},
    {"JP", {"gawa", "yama", "shima", "da"}},
};

const std::vector<std::string> kOnsets = {"b", "c", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v",
                                          "z", "br", "st", "tr", "kl", "gr", "sch", "pl", "fr", "w", "h"};
const std::vector<std::string> kVowels = {"a", "e", "i", "o", "u", "a", "e", "o", "ei", "au", "ie"};
const std::vector<std::string> kCodas = {"", "", "", "n", "r", "l", "s", "x", "m", "t", "nd", "rk"};

// Generic descriptor words, most frequent first.
const std::vector<std::string> kDescriptors = {
    "Holding",    "Services",   "Group",      "Trading",     "Systems",    "Technologies", "Consulting",
    "International", "Solutions", "Management", "Immobilien",  "Partners",   "Engineering",  "Software",
    "Capital",    "Logistics",  "Industries", "Invest",      "Media",      "Design",       "Bau",
    "Foods",      "Transport",  "Finance",    "Medical",     "Energy",     "Electronics",  "Automation",
    "Garage",     "Pharma",     "Research",   "Development", "Global",     "Swiss",        "Euro",
    "Textil",     "Handel",     "Verwaltung", "Treuhand",    "Architekten", "Beratung",    "Maschinen",
    "Digital",    "Networks",   "Security",   "Health",      "Print",      "Studio",       "Optik",
    "Motors",     "Chemicals",  "Metall",     "Elektro",     "Sanitär",    "Reisen",       "Verlag",
    "Products",   "Resources",  "Ventures",   "Labs",        "Analytics",  "Robotics",     "Aviation",
    "Marine",     "Gastro",     "Hotel",      "Restaurant",  "Immo",       "Kosmetik",     "Mode",
};

const std::map<std::string, std::vector<std::string>> kLegalForms = {
    {"CH", {"AG", "GmbH", "SA", "Sàrl", "AG", "GmbH"}},
    {"DE", {"GmbH", "AG", "GmbH & Co. KG", "KG", "GmbH"}},
    {"AT", {"GmbH", "AG", "KG", "GesmbH"}},
    {"FR", {"SA", "SAS", "SARL", "S.à r.l."}},
    {"IT", {"S.p.A.", "S.r.l.", "SpA", "Srl"}},
    {"GB", {"Ltd", "Limited", "PLC", "LLP", "Ltd."}},
    {"US", {"Inc.", "Inc", "LLC", "Corp.", "Corporation"}},
    {"AU", {"Pty Ltd", "Pty. Ltd.", "Limited"}},
    {"CN", {"Co., Ltd.", "Co. Ltd", "Limited"}},
    {"JP", {"K.K.", "Co., Ltd.", "Inc."}},
};

const std::vector<std::string> kSicCodes = {
    "0100", "1311", "1521", "1731", "2011", "2834", "2835", "2836", "3571", "3572", "3661", "3674", "3711", "3721",
    "4011", "4213", "4512", "4813", "4911", "5045", "5065", "5122", "5311", "5411", "5812", "6021", "6022", "6211",
    "6282", "6311", "6411", "6512", "6531", "7011", "7311", "7371", "7372", "7373", "7374", "8011", "8062", "8111",
    "8711", "8721", "8742", "8999"};

/// Mark-carrying replacements for plain vowels, and their ASCII transliterations.
const std::vector<std::pair<std::string, std::string>> kAccents = {
    {"a", "ä"}, {"o", "ö"}, {"u", "ü"}, {"e", "é"}, {"e", "è"}, {"a", "à"}};
const std::vector<std::pair<std::string, std::string>> kTransliterations = {
    {"ä", "ae"}, {"ö", "oe"}, {"ü", "ue"}, {"é", "e"}, {"è", "e"}, {"à", "a"}};

std::string capitalize(std::string w) {
    if (!w.empty() && w[0] >= 'a' && w[0] <= 'z') w[0] = static_cast<char>(w[0] - 'a' + 'A');
    return w;
}

std::string upper_case(std::string_view w) {
    std::string out;
    icu::UnicodeString::fromUTF8(icu::StringPiece(w.data(), static_cast<std::int32_t>(w.size()))).toUpper().toUTF8String(out);
    return out;
}

std::string lower_case(std::string_view w) {
    std::string out;
    icu::UnicodeString::fromUTF8(icu::StringPiece(w.data(), static_cast<std::int32_t>(w.size()))).toLower().toUTF8String(out);
    return out;
}

std::string syllables(Rng& rng, std::size_t n) {
    std::string w;
    for (std::size_t i = 0; i < n; ++i) {
        w += rng.pick(kOnsets);
        w += rng.pick(kVowels);
        if (i + 1 == n || rng.chance(0.3)) w += rng.pick(kCodas);
    }
    return w;
}

/// Replaces the first occurrence of `from` at or after a random position.
bool replace_one(Rng& rng, std::string& w, const std::string& from, const std::string& to) {
    std::vector<std::size_t> hits;
    for (std::size_t p = w.find(from); p != std::string::npos; p = w.find(from, p + 1)) hits.push_back(p);
    if (hits.empty()) return false;
    const std::size_t at = hits[rng.below(hits.size())];
    w.replace(at, from.size(), to);
    return true;
}

bool add_accent(Rng& rng, std::string& w) {
    for (int attempt = 0; attempt < 6; ++attempt) {
        const auto& [plain, marked] = rng.pick(kAccents);
        // Keep the first letter plain so capitalization stays ASCII.
        std::string tail = w.substr(1);
        if (replace_one(rng, tail, plain, marked)) {
            w = w.substr(0, 1) + tail;
            return true;
        }
    }
    return false;
}

bool has_accent(const std::string& w) {
    return std::any_of(kTransliterations.begin(), kTransliterations.end(),
                       [&](const auto& t) { return w.find(t.first) != std::string::npos; });
}

/// Unique pronounceable words.
class WordSource {
public:
    explicit WordSource(std::uint64_t seed) : rng_(seed) {}

    void reserve_word(const std::string& w) { used_.insert(lower_case(w)); }

    std::string fresh(double accent_probability) {
        while (true) {
            std::string w = capitalize(syllables(rng_, 2 + rng_.below(2)));
            if (w.size() < 4 || !used_.insert(lower_case(w)).second) continue;
            if (rng_.chance(accent_probability)) add_accent(rng_, w);
            return w;
        }
    }

private:
    Rng rng_;
    std::unordered_set<std::string> used_;
};

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) {
        if (p.empty()) continue;
        if (!out.empty()) out.push_back(' ');
        out += p;
    }
    return out;
}

std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ' ') {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::string street_for(Rng& rng, WordSource& words, const std::string& country) {
    const std::string base = words.fresh(0.1);
    const std::size_t number = 1 + rng.below(180);
    if (country == "CH" || country == "DE" || country == "AT") {
        static const std::vector<std::string> kinds = {"strasse", "weg", "gasse", "platz", "allee"};
        return fmt::format("{}{} {}", base, rng.pick(kinds), number);
    }
    if (country == "FR") return fmt::format("{} rue {}", number, base);
    if (country == "IT") return fmt::format("Via {} {}", base, number);
    static const std::vector<std::string> kinds = {"Street", "Road", "Avenue", "Lane"};
    return fmt::format("{} {} {}", number, base, rng.pick(kinds));
}

std::string postal_for(Rng& rng, const std::string& country) {
    if (country == "CH" || country == "AT" || country == "AU") return fmt::format("{}", 1000 + rng.below(9000));
    if (country == "GB") {
        return fmt::format("{}{}{} {}{}{}", static_cast<char>('A' + rng.below(26)), static_cast<char>('A' + rng.below(26)),
                           1 + rng.below(9), rng.below(10), static_cast<char>('A' + rng.below(26)),
                           static_cast<char>('A' + rng.below(26)));
    }
    if (country == "CN") return fmt::format("{}", 100000 + rng.below(900000));
    if (country == "JP") return fmt::format("{:03}-{:04}", 100 + rng.below(900), rng.below(10000));
    return fmt::format("{:05}", 1000 + rng.below(99000));
}

struct NameParts {
    std::vector<std::string> core;
    std::vector<std::string> descriptors;
    std::string city;  // empty when the name carries no city
    std::string legal;

    std::string render() const {
        std::vector<std::string> parts = core;
        parts.insert(parts.end(), descriptors.begin(), descriptors.end());
        parts.push_back(city);
        parts.push_back(legal);
        return join(parts);
    }
};

std::vector<std::string> pick_descriptors(Rng& rng, std::size_t n) {
    std::vector<std::string> out;
    while (out.size() < n) {
        const auto& d = kDescriptors[rng.zipf(kDescriptors.size(), 1.0)];
        if (std::find(out.begin(), out.end(), d) == out.end()) out.push_back(d);
    }
    return out;
}

/// Applies one typo to the longest word of the name.
std::string typo(Rng& rng, const std::string& name) {
    auto tokens = split(name);
    std::size_t best = 0;
    for (std::size_t i = 1; i < tokens.size(); ++i) {
        if (tokens[i].size() > tokens[best].size()) best = i;
    }
    std::string& w = tokens[best];
    // Operate on ASCII positions after the first character only.
    std::vector<std::size_t> pos;
    for (std::size_t i = 1; i < w.size(); ++i) {
        if (static_cast<unsigned char>(w[i]) < 0x80 && std::isalpha(static_cast<unsigned char>(w[i]))) pos.push_back(i);
    }
    if (pos.size() < 2) return name;
    const std::size_t at = pos[rng.below(pos.size())];
    switch (rng.below(4)) {
        case 0: w[at] = static_cast<char>('a' + rng.below(26)); break;
        case 1: w.erase(at, 1); break;
        case 2: w.insert(at, 1, static_cast<char>('a' + rng.below(26))); break;
        default:
            if (at + 1 < w.size() && static_cast<unsigned char>(w[at + 1]) < 0x80) std::swap(w[at], w[at + 1]);
            else w.erase(at, 1);
    }
    return join(tokens);
}

// A few hand-written records that the documentation and golden tests refer to.
struct Fixed {
    const char* name;
    const char* street;
    const char* city;
    const char* postal;
    const char* country;
    const char* sic;
};
constexpr Fixed kFixed[] = {
    {"Cisco Systems Inc", "170 West Tasman Drive", "San Jose", "95134", "US", "3661"},
    {"IBM Research", "Säumerstrasse 4", "Rüschlikon", "8803", "CH", "8731"},
    {"Garage Rex AG", "Seestrasse 12", "Zurich", "8002", "CH", "7538"},
    {"Garage Rey AG", "Bahnhofstrasse 3", "Bern", "3011", "CH", "7538"},
    {"Dürr AG", "Industriestrasse 7", "Basel", "4051", "CH", "3559"},
    {"Wächter GmbH", "Hauptstrasse 21", "Stuttgart", "70173", "DE", "5065"},
    {"Wachter GmbH", "Marktplatz 2", "Munich", "80331", "DE", "5065"},
    {"Aston Martin Lagonda Limited", "Banbury Road", "Manchester", "M1 1AA", "GB", "3711"},
};

}  // namespace

// ---------------------------------------------------------------------------

std::vector<City> make_gazetteer(std::uint64_t seed, std::size_t towns) {
    Rng rng(seed);
    std::vector<City> out;
    std::unordered_set<std::string> keys;
    for (const auto& c : kRealCities) {
        out.push_back({c.name, c.lat, c.lon, c.country, true});
        keys.insert(geo::CityTrie::key(c.name));
    }
    const std::size_t real = out.size();
    while (out.size() < real + towns) {
        const City& center = out[rng.below(real)];
        std::string name = capitalize(syllables(rng, 1 + rng.below(2)) + rng.pick(kTownSuffixes.at(center.country)));
        if (!keys.insert(geo::CityTrie::key(name)).second) continue;
        const double lat = std::clamp(center.lat + (rng.unit() - 0.5) * 1.0, -89.0, 89.0);
        const double lon = std::clamp(center.lon + (rng.unit() - 0.5) * 1.4, -179.0, 179.0);
        out.push_back({std::move(name), std::round(lat * 1e4) / 1e4, std::round(lon * 1e4) / 1e4, center.country, false});
    }
    return out;
}

void write_gazetteer(std::ostream& out, const std::vector<City>& cities) {
    out << "# name\tlatitude\tlongitude\n";
    for (const auto& c : cities) out << fmt::format("{}\t{:.4f}\t{:.4f}\n", c.name, c.lat, c.lon);
}

Corpus make_corpus(const std::vector<City>& cities, std::size_t records, std::uint64_t seed) {
    Rng rng(seed);
    WordSource words(seed ^ 0xc0ffeeULL);
    for (const auto& c : cities) {
        for (const auto& t : split(c.name)) words.reserve_word(t);
    }
    for (const auto& d : kDescriptors) words.reserve_word(d);

    std::vector<const City*> real, towns;
    for (const auto& c : cities) (c.real ? real : towns).push_back(&c);

    Corpus corpus;
    std::unordered_set<std::string> names;
    auto emit = [&](const NameParts& parts, const City& city) -> std::optional<std::uint32_t> {
        store::Record r;
        r.name = parts.render();
        if (!names.insert(lower_case(r.name)).second) return std::nullopt;
        r.id = static_cast<std::uint32_t>(corpus.records.size());
        r.street = street_for(rng, words, city.country);
        r.city = city.name;
        r.postal = postal_for(rng, city.country);
        r.country = city.country;
        r.sic = rng.pick(kSicCodes);
        store::refresh_caches(r);
        corpus.records.push_back(std::move(r));
        return corpus.records.back().id;
    };
    auto pick_city = [&]() -> const City& { return rng.chance(0.6) ? *rng.pick(real) : *rng.pick(towns); };
    auto make_parts = [&](std::vector<std::string> core, const City& city) {
        NameParts p;
        p.core = std::move(core);
        const double r = rng.unit();
        p.descriptors = pick_descriptors(rng, r < 0.25 ? 0 : (r < 0.75 ? 1 : 2));
        if (rng.chance(0.12)) p.city = city.name;
        if (rng.chance(0.85)) p.legal = rng.pick(kLegalForms.at(city.country));
        if (p.core.size() + p.descriptors.size() == 1 && p.city.empty() && p.legal.empty()) {
            p.legal = rng.pick(kLegalForms.at(city.country));
        }
        return p;
    };

    for (const auto& f : kFixed) {
        if (corpus.records.size() >= records) break;
        store::Record r;
        r.id = static_cast<std::uint32_t>(corpus.records.size());
        r.name = f.name;
        r.street = f.street;
        r.city = f.city;
        r.postal = f.postal;
        r.country = f.country;
        r.sic = f.sic;
        names.insert(lower_case(r.name));
        for (const auto& t : split(r.name)) words.reserve_word(t);
        store::refresh_caches(r);
        corpus.records.push_back(std::move(r));
    }

    while (corpus.records.size() < records) {
        std::vector<std::string> core = {words.fresh(0.25)};
        if (rng.chance(0.2)) core.push_back(rng.chance(0.5) ? words.fresh(0.1) : kDescriptors[rng.below(kDescriptors.size())]);

        if (rng.chance(0.04) && corpus.records.size() + 4 <= records) {
            std::vector<std::uint32_t> family;
            const std::size_t members = 2 + rng.below(3);
            const City& home = pick_city();
            for (std::size_t m = 0; m < members; ++m) {
                const City& city = rng.chance(0.6) ? home : pick_city();
                NameParts p = make_parts(core, city);
                if (p.descriptors.empty()) p.descriptors = pick_descriptors(rng, 1);
                if (const auto id = emit(p, city)) family.push_back(*id);
            }
            if (family.size() >= 2) corpus.families.push_back(std::move(family));
            continue;
        }
        const City& city = pick_city();
        emit(make_parts(core, city), city);
    }
    return corpus;
}

void write_companies_csv(std::ostream& out, const std::vector<store::Record>& records) {
    out << "name,short_name,street,city,postal,country,sic\n";
    for (const auto& r : records) {
        out << csv::join_row({r.name, r.short_name, r.street, r.city, r.postal, r.country, r.sic}, ',') << '\n';
    }
}

// ---------------------------------------------------------------------------

std::vector<eval::GroundTruthEntry> make_truth(const Corpus& corpus, const std::vector<City>& cities,
                                               const textnorm::LegalEntityLexicon& lex, const TruthMix& mix,
                                               std::uint64_t seed) {
    Rng rng(seed);
    WordSource words(seed ^ 0xfacadeULL);
    for (const auto& r : corpus.records) {
        for (const auto& t : split(r.name)) words.reserve_word(t);
    }
    for (const auto& c : cities) {
        for (const auto& t : split(c.name)) words.reserve_word(t);
    }

    std::unordered_set<std::uint32_t> in_family;
    for (const auto& f : corpus.families) in_family.insert(f.begin(), f.end());
    std::map<std::string, const City*> city_by_name;
    for (const auto& c : cities) city_by_name.emplace(c.name, &c);

    auto with_address = [&](store::QueryRecord& q, const store::Record& r, double p_address, double p_sic) {
        if (rng.chance(p_address)) {
            store::Address a{r.street, r.city, r.postal, r.country};
            if (rng.chance(0.15)) a.street = typo(rng, a.street);
            if (rng.chance(0.2)) a.postal.clear();
            q.addresses.push_back(std::move(a));
        }
        if (rng.chance(p_sic)) q.sics.push_back(r.sic);
    };

    // Legal-entity span of a name (token indices over the raw whitespace tokens).
    auto legal_span = [&](const std::vector<std::string>& tokens) -> std::optional<std::pair<std::size_t, std::size_t>> {
        // Try suffixes of decreasing length.
        for (std::size_t b = 0; b < tokens.size(); ++b) {
            std::vector<std::string> tail(tokens.begin() + static_cast<std::ptrdiff_t>(b), tokens.end());
            const auto clean = textnorm::strip_marks(textnorm::clean_light(join(tail)).text);
            if (!clean.empty() && lex.contains(clean)) return std::make_pair(b, tokens.size());
        }
        return std::nullopt;
    };

    auto perturb = [&](const store::Record& r, int kind) -> std::string {
        auto tokens = split(r.name);
        const auto le = legal_span(tokens);
        const std::size_t body_end = le ? le->first : tokens.size();
        switch (kind) {
            case 0: {  // diacritics
                for (std::size_t i = 0; i < body_end; ++i) {
                    if (!has_accent(tokens[i])) continue;
                    const bool transliterate = rng.chance(0.5);
                    for (const auto& [marked, ascii] : kTransliterations) {
                        while (replace_one(rng, tokens[i], marked, transliterate ? ascii : ascii.substr(0, 1))) {
                        }
                    }
                    return join(tokens);
                }
                for (int attempt = 0; attempt < 4; ++attempt) {
                    const std::size_t i = rng.below(std::max<std::size_t>(1, body_end));
                    if (add_accent(rng, tokens[i])) return join(tokens);
                }
                return typo(rng, r.name);
            }
            case 1: {  // legal entity add / remove / replace
                const std::string& country = r.country.empty() ? std::string("CH") : r.country;
                const auto& forms = kLegalForms.count(country) ? kLegalForms.at(country) : kLegalForms.at("CH");
                if (le && body_end > 0) {
                    tokens.resize(body_end);
                    if (rng.chance(0.5)) {
                        std::string other = rng.pick(forms);
                        tokens.push_back(other);
                    }
                } else {
                    tokens.push_back(rng.pick(forms));
                }
                return join(tokens);
            }
            case 2: {  // word permutation
                if (body_end < 2) return typo(rng, r.name);
                const std::size_t i = rng.below(body_end);
                std::size_t j = rng.below(body_end - 1);
                if (j >= i) ++j;
                std::swap(tokens[i], tokens[j]);
                return join(tokens);
            }
            case 3: {  // city mention
                const auto city_tokens = split(r.city);
                const auto it = std::search(tokens.begin(), tokens.end(), city_tokens.begin(), city_tokens.end());
                if (!city_tokens.empty() && it != tokens.end()) {
                    tokens.erase(it, it + static_cast<std::ptrdiff_t>(city_tokens.size()));
                } else {
                    tokens.insert(tokens.begin() + static_cast<std::ptrdiff_t>(body_end), city_tokens.begin(),
                                  city_tokens.end());
                }
                return join(tokens);
            }
            default: return typo(rng, r.name);
        }
    };

    std::vector<eval::GroundTruthEntry> out;

    // MATCHED: single records outside families.
    std::vector<std::uint32_t> pool;
    for (const auto& r : corpus.records) {
        if (!in_family.contains(r.id) && r.id >= std::size(kFixed)) pool.push_back(r.id);
    }
    for (std::size_t i = pool.size(); i > 1; --i) std::swap(pool[i - 1], pool[rng.below(i)]);
    for (std::size_t k = 0; k < mix.matched && k < pool.size(); ++k) {
        const auto& r = corpus.records[pool[k]];
        eval::GroundTruthEntry e;
        e.category = eval::Category::Matched;
        e.ids = {r.id};
        if (rng.chance(0.3)) {
            // Case change only.
            e.query.name = rng.chance(0.5) ? upper_case(r.name) : lower_case(r.name);
        } else {
            std::string name = r.name;
            const int edits = rng.chance(0.7) ? 1 : 2;
            store::Record tmp = r;
            for (int n = 0; n < edits; ++n) {
                tmp.name = name;
                name = perturb(tmp, static_cast<int>(rng.below(5)));
            }
            if (textnorm::clean_light(name).empty()) name = r.name;
            e.query.name = name;
        }
        with_address(e.query, r, 0.35, 0.3);
        out.push_back(std::move(e));
    }

    // UNMATCHED: unseen cores, half of them borrowing a stored name's remainder.
    for (std::size_t k = 0; k < mix.unmatched; ++k) {
        eval::GroundTruthEntry e;
        e.category = eval::Category::Unmatched;
        const City& city = cities[rng.below(cities.size())];
        if (rng.chance(0.5)) {
            const auto& r = corpus.records[rng.below(corpus.records.size())];
            auto tokens = split(r.name);
            tokens[0] = words.fresh(0.2);
            e.query.name = join(tokens);
        } else {
            NameParts p;
            p.core = {words.fresh(0.2)};
            p.descriptors = pick_descriptors(rng, 1 + rng.below(2));
            p.legal = rng.pick(kLegalForms.at(city.country));
            e.query.name = p.render();
        }
        if (rng.chance(0.5)) {
            e.query.addresses.push_back({street_for(rng, words, city.country), city.name, postal_for(rng, city.country),
                                         city.country});
        }
        out.push_back(std::move(e));
    }

    // UNDECIDED: a family's shared core with a new combination of descriptors.
    for (std::size_t k = 0; k < mix.undecided && !corpus.families.empty(); ++k) {
        const auto& fam = corpus.families[rng.below(corpus.families.size())];
        const auto& first = corpus.records[fam.front()];
        // The shared core is the common token prefix of the family's names.
        std::vector<std::string> core = split(first.name);
        for (auto id : fam) {
            const auto t = split(corpus.records[id].name);
            std::size_t n = 0;
            while (n < core.size() && n < t.size() && core[n] == t[n]) ++n;
            core.resize(n);
        }
        if (core.empty()) core = {split(first.name).front()};
        NameParts p;
        p.core = core;
        p.descriptors = pick_descriptors(rng, 1 + rng.below(2));
        if (rng.chance(0.7)) {
            const auto& forms = kLegalForms.count(first.country) ? kLegalForms.at(first.country) : kLegalForms.at("CH");
            p.legal = rng.pick(forms);
        }
        eval::GroundTruthEntry e;
        e.category = eval::Category::Undecided;
        e.query.name = p.render();
        e.ids = fam;
        std::sort(e.ids.begin(), e.ids.end());
        with_address(e.query, corpus.records[fam[rng.below(fam.size())]], 0.5, 0.3);
        out.push_back(std::move(e));
    }

    // Interleave categories deterministically.
    for (std::size_t i = out.size(); i > 1; --i) std::swap(out[i - 1], out[rng.below(i)]);
    return out;
}

// ---------------------------------------------------------------------------

std::vector<std::vector<std::string>> make_name_families(std::size_t families, std::uint64_t seed) {
    Rng rng(seed);
    WordSource words(seed ^ 0xbeefULL);
    for (const auto& d : kDescriptors) words.reserve_word(d);
    static const std::vector<std::string> kPlaceWords = {"County", "City", "Province", "District", "Valley", "Bay"};
    static const std::vector<std::string> kForms = {"AG",  "GmbH",  "Ltd",  "Limited",   "Inc.", "LLC",
                                                    "SA",  "S.r.l.", "Pty Ltd", "Co., Ltd.", "PLC", "Corp."};

    std::vector<std::vector<std::string>> out;
    while (out.size() < families) {
        std::vector<std::string> core;
        const double shape = rng.unit();
        if (shape < 0.7) {
            core = {words.fresh(0.15)};
        } else if (shape < 0.9) {
            core = {words.fresh(0.1), words.fresh(0.1)};
        } else {
            core = {words.fresh(0.0), rng.pick(kPlaceWords), words.fresh(0.0)};
        }
        const bool caps = rng.chance(0.2);
        const bool leading_descriptor = rng.chance(0.1);
        // Label noise: every member shares one descriptor, which then counts as part of the short name.
        const std::vector<std::string> shared = rng.chance(0.05) ? pick_descriptors(rng, 1) : std::vector<std::string>{};
        const std::string form = rng.pick(kForms);

        const std::size_t members = 2 + rng.below(3);
        std::vector<std::string> names;
        std::set<std::string> seen_descriptors;
        for (std::size_t m = 0; m < members; ++m) {
            std::vector<std::string> desc;
            // Members must differ in at least one descriptor so the core stays the only common part.
            for (int attempt = 0; attempt < 10; ++attempt) {
                desc = pick_descriptors(rng, 1 + rng.below(2));
                if (!seen_descriptors.contains(desc.front())) break;
            }
            seen_descriptors.insert(desc.front());
            std::vector<std::string> parts;
            if (leading_descriptor) parts.push_back(desc.front());
            parts.insert(parts.end(), core.begin(), core.end());
            parts.insert(parts.end(), desc.begin() + (leading_descriptor ? 1 : 0), desc.end());
            parts.insert(parts.end(), shared.begin(), shared.end());
            if (rng.chance(0.8)) parts.push_back(rng.chance(0.7) ? form : rng.pick(kForms));
            std::string name = join(parts);
            if (caps) name = upper_case(name);
            names.push_back(std::move(name));
        }
        out.push_back(std::move(names));
    }
    return out;
}

shortname::FrequencyTable build_frequencies(const std::vector<store::Record>& records,
                                            const std::vector<std::vector<std::string>>& families,
                                            const std::vector<City>& cities) {
    shortname::FrequencyTable t;
    for (const auto& r : records) t.add_name(r.name);
    for (const auto& f : families) {
        for (const auto& n : f) t.add_name(n);
    }
    for (const auto& c : cities) t.add_name(c.name);
    return t;
}

CorpusSplit split_families(const std::vector<std::vector<shortname::LabeledName>>& families, double train_fraction,
                           std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::size_t> order(families.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    std::size_t total = 0;
    for (const auto& f : families) total += f.size();
    const auto target = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(total)));

    CorpusSplit split;
    for (std::size_t idx : order) {
        auto& dest = split.train.size() < target ? split.train : split.test;
        dest.insert(dest.end(), families[idx].begin(), families[idx].end());
    }
    return split;
}

}  // namespace rlink::synth
