#include "rlink/config.hpp"

#include "rlink/error.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace rlink;

namespace {

ErrorCode parse_error(const std::string& text) {
    std::istringstream in(text);
    try {
        LinkerConfig::parse(in);
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "accepted: " << text;
    return ErrorCode::Internal;
}

}  // namespace

TEST(Config, DefaultsAreValid) {
    std::istringstream in("");
    const auto c = LinkerConfig::parse(in);
    EXPECT_EQ(c.band.rows, LinkerConfig{}.band.rows);
    EXPECT_DOUBLE_EQ(c.threshold, 0.7);
    EXPECT_EQ(c.top_n, 10u);
    EXPECT_DOUBLE_EQ(c.weights.name, 0.6);
    EXPECT_EQ(c.max_concurrent_requests, 8u);
    EXPECT_NO_THROW(c.validate());
}

TEST(Config, ParsesEverySection) {
    std::istringstream in(
        "[data]\ndataset_id = demo\nentity_db = e.rldb\n"
        "[blocking]\nconfig = 5/18\nseed = 9\n"
        "[scoring]\nstrategy = maxmin\nthreshold = 0.5\ntop_n = 3\ntau_km = 12.5\n"
        "[tree]\nname = 0.7\n"
        "[service]\nport = 9090\nmax_concurrent_requests = 2\nworkers_per_request = 1\n");
    const auto c = LinkerConfig::parse(in, "/srv/rlink");
    EXPECT_EQ(c.dataset_id, "demo");
    EXPECT_EQ(c.entity_db, std::filesystem::path("/srv/rlink/e.rldb"));
    EXPECT_EQ(c.band.rows, 5u);
    EXPECT_EQ(c.band.bands, 18u);
    EXPECT_EQ(c.seed, 9u);
    EXPECT_EQ(c.name.strategy, scoring::Strategy::MaxMin);
    EXPECT_DOUBLE_EQ(c.threshold, 0.5);
    EXPECT_EQ(c.top_n, 3u);
    EXPECT_DOUBLE_EQ(c.tau_km, 12.5);
    EXPECT_DOUBLE_EQ(c.weights.name, 0.7);
    EXPECT_EQ(c.port, 9090);
    EXPECT_EQ(c.max_concurrent_requests, 2u);
}

TEST(Config, AbsolutePathsAreKept) {
    std::istringstream in("[data]\ngazetteer = /opt/geo.tsv\n");
    EXPECT_EQ(LinkerConfig::parse(in, "/srv").gazetteer, std::filesystem::path("/opt/geo.tsv"));
}

TEST(Config, RejectsBadInput) {
    EXPECT_EQ(parse_error("[scoring]\nthreshold = 1.5\n"), ErrorCode::InvalidConfig);
    EXPECT_EQ(parse_error("[scoring]\nthreshold = high\n"), ErrorCode::InvalidConfig);
    EXPECT_EQ(parse_error("[scoring]\nstrategy = cosine\n"), ErrorCode::InvalidConfig);
    EXPECT_EQ(parse_error("[scoring]\ntop_n = 0\n"), ErrorCode::InvalidConfig);
    EXPECT_EQ(parse_error("[scoring]\nunknown_knob = 1\n"), ErrorCode::InvalidConfig);
    EXPECT_EQ(parse_error("[nonsense]\nx = 1\n"), ErrorCode::InvalidConfig);
    EXPECT_EQ(parse_error("[blocking]\nconfig = 6x30\n"), ErrorCode::InvalidConfig);
    EXPECT_EQ(parse_error("[service]\nport = 70000\n"), ErrorCode::InvalidConfig);
    EXPECT_EQ(parse_error("[service]\nmax_concurrent_requests = 0\n"), ErrorCode::InvalidConfig);
    EXPECT_EQ(parse_error("[tree\nname = 1\n"), ErrorCode::InvalidConfig);
}

TEST(Config, WriteParseRoundTripPreservesDigest) {
    std::istringstream in("[blocking]\nconfig = 4/10\n[scoring]\nthreshold = 0.65\nstrategy = jaccard\n");
    const auto c = LinkerConfig::parse(in, "/data");
    std::stringstream ss;
    c.write(ss);
    const auto back = LinkerConfig::parse(ss);
    EXPECT_EQ(back.digest(), c.digest());
    EXPECT_EQ(back.band.to_string(), "4/10");
    EXPECT_EQ(c.digest().size(), 32u);

    std::istringstream other("[scoring]\nthreshold = 0.66\n");
    EXPECT_NE(LinkerConfig::parse(other, "/data").digest(), c.digest());
}

TEST(Config, LoadResolvesAgainstTheFileDirectory) {
    const auto c = LinkerConfig::load(testsupport::data_dir() / "rlink.ini");
    EXPECT_EQ(c.dataset_id, "synthetic-10k");
    EXPECT_TRUE(c.gazetteer.is_absolute());
    EXPECT_TRUE(std::filesystem::exists(c.gazetteer));
    EXPECT_TRUE(std::filesystem::exists(c.lexicon));
    EXPECT_EQ(c.band.to_string(), "6/30");
}

TEST(Config, MissingFileIsAConfigError) {
    try {
        LinkerConfig::load("/nonexistent/rlink.ini");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
    }
}
