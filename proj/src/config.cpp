#include "rlink/config.hpp"

#include "rlink/binary_io.hpp"
#include "rlink/error.hpp"
#include "rlink/murmur3.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <fmt/format.h>
#include <functional>
#include <map>
#include <sstream>

namespace rlink {

namespace {

namespace pt = boost::property_tree;

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); }

template <typename T>
T convert(const std::string& key, const std::string& text) {
    std::istringstream ss(text);
    T value{};
    ss >> value;
    if (ss.fail() || !ss.eof()) {
        // Allow trailing whitespace only.
        std::string rest;
        if (ss.fail() || (ss >> rest, !rest.empty())) invalid("bad value for '" + key + "': '" + text + "'");
    }
    return value;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& text) {
    if (text.empty()) return {};
    std::filesystem::path p(text);
    return p.is_absolute() || base.empty() ? p : base / p;
}

void check_unit(const std::string& key, double v) {
    if (!(v >= 0.0 && v <= 1.0)) invalid(key + " must lie in [0,1]");
}

void check_non_negative(const std::string& key, double v) {
    if (!(v >= 0.0) || !std::isfinite(v)) invalid(key + " must be a finite non-negative number");
}

}  // namespace

void LinkerConfig::validate() const {
    check_unit("scoring.threshold", threshold);
    if (top_n < 1) invalid("scoring.top_n must be at least 1");
    if (band.rows < 1 || band.bands < 1) invalid("blocking.config needs rows and bands >= 1");
    check_unit("scoring.combining_weight", name.combining_weight);
    check_unit("scoring.city_weight", name.city_weight);
    check_non_negative("scoring.short_name_multiplier", name.short_name_multiplier);
    check_non_negative("scoring.vicinity_km", name.vicinity_km);
    check_non_negative("scoring.max_coefficient", name.max_coefficient);
    check_non_negative("scoring.min_coefficient", name.min_coefficient);
    if (!(tau_km > 0) || !std::isfinite(tau_km)) invalid("scoring.tau_km must be positive");
    for (const auto& [key, v] : std::initializer_list<std::pair<const char*, double>>{
             {"tree.name", weights.name}, {"tree.address", weights.address}, {"tree.industry", weights.industry},
             {"tree.street", weights.street}, {"tree.postal", weights.postal}, {"tree.city", weights.city},
             {"tree.country", weights.country}}) {
        check_non_negative(key, v);
    }
    if (weights.name <= 0) invalid("tree.name must be positive");
    if (max_concurrent_requests < 1) invalid("service.max_concurrent_requests must be at least 1");
    if (workers_per_request < 1) invalid("service.workers_per_request must be at least 1");
    if (port < 0 || port > 65535) invalid("service.port out of range");
}

LinkerConfig LinkerConfig::parse(std::istream& in, const std::filesystem::path& base_dir) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        invalid(std::string("config syntax: ") + e.what());
    }

    LinkerConfig c;
    using Setter = std::function<void(const std::string& key, const std::string& value)>;
    const auto path_setter = [&](std::filesystem::path& field) {
        return Setter([&field, &base_dir](const std::string&, const std::string& v) { field = resolve(base_dir, v); });
    };
    const auto double_setter = [](double& field) {
        return Setter([&field](const std::string& k, const std::string& v) { field = convert<double>(k, v); });
    };
    const auto size_setter = [](std::size_t& field) {
        return Setter([&field](const std::string& k, const std::string& v) { field = convert<std::size_t>(k, v); });
    };

    const std::map<std::string, Setter> setters = {
        {"data.dataset_id", [&](const std::string&, const std::string& v) { c.dataset_id = v; }},
        {"data.entity_db", path_setter(c.entity_db)},
        {"data.blocking_db", path_setter(c.blocking_db)},
        {"data.gazetteer", path_setter(c.gazetteer)},
        {"data.lexicon", path_setter(c.lexicon)},
        {"data.shortname_model", path_setter(c.shortname_model)},
        {"data.frequencies", path_setter(c.frequencies)},
        {"blocking.config",
         [&](const std::string& k, const std::string& v) {
             try {
                 c.band = blocking::BandConfig::parse(v);
             } catch (const Error&) {
                 invalid("bad value for '" + k + "': '" + v + "'");
             }
         }},
        {"blocking.seed", [&](const std::string& k, const std::string& v) { c.seed = convert<std::uint64_t>(k, v); }},
        {"scoring.strategy",
         [&](const std::string& k, const std::string& v) {
             const auto s = scoring::parse_strategy(v);
             if (!s) invalid("bad value for '" + k + "': '" + v + "'");
             c.name.strategy = *s;
         }},
        {"scoring.threshold", double_setter(c.threshold)},
        {"scoring.top_n", size_setter(c.top_n)},
        {"scoring.combining_weight", double_setter(c.name.combining_weight)},
        {"scoring.city_weight", double_setter(c.name.city_weight)},
        {"scoring.short_name_multiplier", double_setter(c.name.short_name_multiplier)},
        {"scoring.vicinity_km", double_setter(c.name.vicinity_km)},
        {"scoring.max_coefficient", double_setter(c.name.max_coefficient)},
        {"scoring.min_coefficient", double_setter(c.name.min_coefficient)},
        {"scoring.tau_km", double_setter(c.tau_km)},
        {"tree.name", double_setter(c.weights.name)},
        {"tree.address", double_setter(c.weights.address)},
        {"tree.industry", double_setter(c.weights.industry)},
        {"tree.street", double_setter(c.weights.street)},
        {"tree.postal", double_setter(c.weights.postal)},
        {"tree.city", double_setter(c.weights.city)},
        {"tree.country", double_setter(c.weights.country)},
        {"service.host", [&](const std::string&, const std::string& v) { c.host = v; }},
        {"service.port", [&](const std::string& k, const std::string& v) { c.port = convert<int>(k, v); }},
        {"service.max_concurrent_requests", size_setter(c.max_concurrent_requests)},
        {"service.workers_per_request", size_setter(c.workers_per_request)},
    };

    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) invalid("key '" + section + "' outside of a section");
        for (const auto& [key, value] : body) {
            const std::string full = section + "." + key;
            const auto it = setters.find(full);
            if (it == setters.end()) invalid("unknown config key '" + full + "'");
            it->second(full, value.data());
        }
    }
    c.validate();
    return c;
}

LinkerConfig LinkerConfig::load(const std::filesystem::path& path) {
    std::string text;
    try {
        text = io::read_file(path.string());
    } catch (const Error& e) {
        invalid("cannot read config file '" + path.string() + "': " + e.what());
    }
    std::istringstream ss(text);
    return parse(ss, std::filesystem::absolute(path).parent_path());
}

void LinkerConfig::write(std::ostream& out) const {
    const auto num = [](double v) { return fmt::format("{}", v); };
    out << "[data]\n"
        << "dataset_id = " << dataset_id << '\n'
        << "entity_db = " << entity_db.string() << '\n'
        << "blocking_db = " << blocking_db.string() << '\n'
        << "gazetteer = " << gazetteer.string() << '\n'
        << "lexicon = " << lexicon.string() << '\n'
        << "shortname_model = " << shortname_model.string() << '\n'
        << "frequencies = " << frequencies.string() << '\n'
        << "\n[blocking]\n"
        << "config = " << band.to_string() << '\n'
        << "seed = " << seed << '\n'
        << "\n[scoring]\n"
        << "strategy = " << scoring::to_string(name.strategy) << '\n'
        << "threshold = " << num(threshold) << '\n'
        << "top_n = " << top_n << '\n'
        << "combining_weight = " << num(name.combining_weight) << '\n'
        << "city_weight = " << num(name.city_weight) << '\n'
        << "short_name_multiplier = " << num(name.short_name_multiplier) << '\n'
        << "vicinity_km = " << num(name.vicinity_km) << '\n'
        << "max_coefficient = " << num(name.max_coefficient) << '\n'
        << "min_coefficient = " << num(name.min_coefficient) << '\n'
        << "tau_km = " << num(tau_km) << '\n'
        << "\n[tree]\n"
        << "name = " << num(weights.name) << '\n'
        << "address = " << num(weights.address) << '\n'
        << "industry = " << num(weights.industry) << '\n'
        << "street = " << num(weights.street) << '\n'
        << "postal = " << num(weights.postal) << '\n'
        << "city = " << num(weights.city) << '\n'
        << "country = " << num(weights.country) << '\n'
        << "\n[service]\n"
        << "host = " << host << '\n'
        << "port = " << port << '\n'
        << "max_concurrent_requests = " << max_concurrent_requests << '\n'
        << "workers_per_request = " << workers_per_request << '\n';
}

std::string LinkerConfig::digest() const {
    std::ostringstream ss;
    write(ss);
    const std::string text = ss.str();
    const auto [h1, h2] = murmur3_x64_128(std::as_bytes(std::span(text.data(), text.size())), 0);
    return fmt::format("{:016x}{:016x}", h1, h2);
}

}  // namespace rlink
