#pragma once

#include "rlink/blocking.hpp"
#include "rlink/scoring.hpp"
#include "rlink/scoring_tree.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

namespace rlink {

/// Run configuration: data files, blocking layout, scoring tunables and
/// service limits. Stored as an INI file; relative paths resolve against the
/// file's directory.
struct LinkerConfig {
    // [data]
    std::string dataset_id = "default";
    std::filesystem::path entity_db = "entities.rldb";
    std::filesystem::path blocking_db = "blocking.rlbk";
    std::filesystem::path gazetteer;
    std::filesystem::path lexicon;
    std::filesystem::path shortname_model;
    std::filesystem::path frequencies;

    // [blocking]
    blocking::BandConfig band;
    std::uint64_t seed = 42;

    // [scoring]
    scoring::NameParams name;
    double tau_km = 30.0;
    double threshold = 0.7;
    std::size_t top_n = 10;

    // [tree]
    scoring::TreeWeights weights;

    // [service]
    std::string host = "127.0.0.1";
    int port = 8080;
    std::size_t max_concurrent_requests = 8;
    std::size_t workers_per_request = 4;

    /// Throws InvalidConfig on out-of-range values.
    void validate() const;

    /// Unknown sections or keys are rejected.
    static LinkerConfig parse(std::istream& in, const std::filesystem::path& base_dir = {});
    static LinkerConfig load(const std::filesystem::path& path);
    void write(std::ostream& out) const;

    /// Hex digest of the canonical INI form.
    std::string digest() const;
};

}  // namespace rlink
