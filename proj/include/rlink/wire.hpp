#pragma once

// JSON encoding of queries, link requests and responses.

#include "rlink/entity_store.hpp"
#include "rlink/pipeline.hpp"

#include <json.hpp>

#include <string>
#include <string_view>
#include <vector>

namespace rlink::wire {

using json = nlohmann::json;

struct LinkRequest {
    std::vector<store::QueryRecord> queries;
    LinkOptions options;
    /// Include per-query elapsed time in the response.
    bool timing = false;
};

/// Throws Error(MalformedRequest) on bad JSON or wrong field types.
LinkRequest parse_link_request(std::string_view body);

/// `{"name", "namesAlt"[], "addresses"[{street, city, postal, country}], "sics"[]}`.
store::QueryRecord query_from_json(const json& j);
json query_to_json(const store::QueryRecord& q);

json record_to_json(const store::Record& r);
json outcome_to_json(const LinkOutcome& outcome, bool timing);
json error_to_json(ErrorCode code, std::string_view message);

struct ResponseMeta {
    std::string dataset_id;
    std::string config_digest;
};

json link_response(const std::vector<LinkOutcome>& outcomes, const ResponseMeta& meta, bool timing);

}  // namespace rlink::wire
