#include "rlink/wire.hpp"

#include "rlink/error.hpp"

namespace rlink::wire {

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::MalformedRequest, what); }

std::string string_field(const json& obj, const char* key, bool required = false) {
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        if (required) bad(std::string("missing field '") + key + "'");
        return {};
    }
    if (!it->is_string()) bad(std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
}

std::vector<std::string> string_list(const json& obj, const char* key) {
    std::vector<std::string> out;
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return out;
    if (!it->is_array()) bad(std::string("field '") + key + "' must be an array");
    for (const auto& v : *it) {
        if (v.is_string()) {
            out.push_back(v.get<std::string>());
        } else if (v.is_number_unsigned()) {
            out.push_back(std::to_string(v.get<std::uint64_t>()));
        } else {
            bad(std::string("entries of '") + key + "' must be strings");
        }
    }
    return out;
}

}  // namespace

store::QueryRecord query_from_json(const json& j) {
    if (!j.is_object()) bad("query must be an object");
    store::QueryRecord q;
    q.name = string_field(j, "name", true);
    q.names_alt = string_list(j, "namesAlt");
    q.sics = string_list(j, "sics");
    if (const auto it = j.find("addresses"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) bad("field 'addresses' must be an array");
        for (const auto& a : *it) {
            if (!a.is_object()) bad("address must be an object");
            q.addresses.push_back(
                {string_field(a, "street"), string_field(a, "city"), string_field(a, "postal"), string_field(a, "country")});
        }
    }
    return q;
}

json query_to_json(const store::QueryRecord& q) {
    json j = {{"name", q.name}};
    if (!q.names_alt.empty()) j["namesAlt"] = q.names_alt;
    if (!q.addresses.empty()) {
        json arr = json::array();
        for (const auto& a : q.addresses) {
            arr.push_back({{"street", a.street}, {"city", a.city}, {"postal", a.postal}, {"country", a.country}});
        }
        j["addresses"] = std::move(arr);
    }
    if (!q.sics.empty()) j["sics"] = q.sics;
    return j;
}

LinkRequest parse_link_request(std::string_view body) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::parse_error& e) {
        bad(std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) bad("request must be a JSON object");
    const auto qs = j.find("queries");
    if (qs == j.end() || !qs->is_array() || qs->empty()) bad("'queries' must be a non-empty array");

    LinkRequest req;
    for (const auto& q : *qs) req.queries.push_back(query_from_json(q));

    if (const auto o = j.find("options"); o != j.end() && !o->is_null()) {
        if (!o->is_object()) bad("'options' must be an object");
        if (const auto it = o->find("top_n"); it != o->end()) {
            if (!it->is_number_unsigned() || it->get<std::uint64_t>() < 1) bad("'top_n' must be a positive integer");
            req.options.top_n = it->get<std::size_t>();
        }
        if (const auto it = o->find("threshold"); it != o->end()) {
            if (!it->is_number() || it->get<double>() < 0 || it->get<double>() > 1) bad("'threshold' must lie in [0,1]");
            req.options.threshold = it->get<double>();
        }
        if (const auto it = o->find("strategy"); it != o->end()) {
            const auto s = it->is_string() ? scoring::parse_strategy(it->get<std::string>()) : std::nullopt;
            if (!s) bad("unknown 'strategy'");
            req.options.strategy = s;
        }
        if (const auto it = o->find("timing"); it != o->end()) {
            if (!it->is_boolean()) bad("'timing' must be a boolean");
            req.timing = it->get<bool>();
        }
    }
    return req;
}

json record_to_json(const store::Record& r) {
    json j = {{"id", r.id}, {"name", r.name}};
    for (const auto& [key, value] : {std::pair<const char*, const std::string*>{"short_name", &r.short_name},
                                     {"street", &r.street},
                                     {"city", &r.city},
                                     {"postal", &r.postal},
                                     {"country", &r.country},
                                     {"sic", &r.sic}}) {
        if (!value->empty()) j[key] = *value;
    }
    return j;
}

json error_to_json(ErrorCode code, std::string_view message) {
    return {{"code", std::string(to_string(code))}, {"message", std::string(message)}};
}

json outcome_to_json(const LinkOutcome& outcome, bool timing) {
    json j;
    if (outcome.error) {
        j["error"] = error_to_json(*outcome.error, outcome.error_message);
        j["matches"] = json::array();
        return j;
    }
    json matches = json::array();
    for (const auto& m : outcome.matches) {
        json subs = json::object();
        for (const auto& s : m.subscores) subs[std::string(scoring::to_string(s.field))] = s.score;
        matches.push_back({{"id", m.record_id}, {"score", m.score}, {"subscores", std::move(subs)},
                           {"record", record_to_json(m.record)}});
    }
    j["matches"] = std::move(matches);
    j["comparisons"] = outcome.comparisons;
    if (timing) j["elapsed_ms"] = outcome.elapsed_ms;
    return j;
}

json link_response(const std::vector<LinkOutcome>& outcomes, const ResponseMeta& meta, bool timing) {
    json results = json::array();
    for (const auto& o : outcomes) results.push_back(outcome_to_json(o, timing));
    return {{"dataset", meta.dataset_id}, {"config_digest", meta.config_digest}, {"results", std::move(results)}};
}

}  // namespace rlink::wire
