#include "rlink/pipeline.hpp"

#include "bundled.hpp"
#include "rlink/binary_io.hpp"
#include "rlink/evalbench.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace rlink;
using testsupport::bundled_linker;

namespace {

store::QueryRecord named(std::string name) {
    store::QueryRecord q;
    q.name = std::move(name);
    return q;
}

std::vector<store::QueryRecord> truth_queries(std::size_t limit) {
    const auto truth = eval::load_truth(testsupport::data_dir() / "truth.tsv");
    std::vector<store::QueryRecord> qs;
    for (const auto& e : truth) {
        if (qs.size() == limit) break;
        qs.push_back(e.query);
    }
    return qs;
}

/// Comparable digest of an outcome: ids and scores in rank order.
std::vector<std::pair<std::uint32_t, double>> ranked(const LinkOutcome& o) {
    std::vector<std::pair<std::uint32_t, double>> v;
    for (const auto& m : o.matches) v.emplace_back(m.record_id, m.score);
    return v;
}

}  // namespace

TEST(Pipeline, ExactNameRanksItsRecordFirst) {
    const auto& linker = bundled_linker();
    const auto out = linker.link_one(named("Cisco Systems, Inc."));
    ASSERT_FALSE(out.matches.empty());
    EXPECT_EQ(out.matches[0].record_id, 0u);
    EXPECT_DOUBLE_EQ(out.matches[0].score, 1.0);
    EXPECT_EQ(out.matches[0].record.name, "Cisco Systems Inc");
    EXPECT_GT(out.comparisons, 0u);
    EXPECT_LT(out.comparisons, linker.store().size() / 10);
}

TEST(Pipeline, CandidatesContainTheStoredRecord) {
    const auto& linker = bundled_linker();
    for (std::uint32_t id : {0u, 1u, 17u, 4242u, 9999u}) {
        const auto& r = linker.store().get(id);
        const auto c = linker.candidates(named(r.name));
        EXPECT_TRUE(std::binary_search(c.begin(), c.end(), id)) << r.name;
        EXPECT_TRUE(std::is_sorted(c.begin(), c.end()));
    }
}

TEST(Pipeline, ResultsAreSortedCappedAndAboveThreshold) {
    const auto& linker = bundled_linker();
    LinkOptions opts;
    opts.top_n = 3;
    opts.threshold = 0.3;
    for (const auto& q : truth_queries(60)) {
        const auto out = linker.link_one(q, opts);
        EXPECT_LE(out.matches.size(), 3u);
        for (std::size_t i = 0; i < out.matches.size(); ++i) {
            EXPECT_GE(out.matches[i].score, 0.3);
            EXPECT_LE(out.matches[i].score, 1.0);
            if (i) EXPECT_GE(out.matches[i - 1].score, out.matches[i].score);
        }
    }
}

TEST(Pipeline, EmptyQueryNameIsRejected) {
    const auto& linker = bundled_linker();
    try {
        linker.link_one(named("  !!! "));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyQueryName);
    }
    std::vector<store::QueryRecord> batch = {named("Cisco Systems"), named(""), named("IBM Research")};
    const auto out = linker.link_batch(batch, 2);
    ASSERT_EQ(out.size(), 3u);
    EXPECT_FALSE(out[0].error.has_value());
    EXPECT_EQ(out[1].error, ErrorCode::EmptyQueryName);
    EXPECT_FALSE(out[2].error.has_value());
}

TEST(Pipeline, WorkerCountDoesNotChangeResults) {
    const auto& linker = bundled_linker();
    const auto qs = truth_queries(120);
    const auto one = linker.link_batch(qs, 1);
    const auto four = linker.link_batch(qs, 4);
    ASSERT_EQ(one.size(), four.size());
    for (std::size_t i = 0; i < one.size(); ++i) {
        EXPECT_EQ(ranked(one[i]), ranked(four[i])) << qs[i].name;
        EXPECT_EQ(one[i].comparisons, four[i].comparisons);
    }
}

TEST(Pipeline, IdenticalQueriesInOneBatchGetIdenticalResults) {
    const auto& linker = bundled_linker();
    const std::vector<store::QueryRecord> qs(80, named("Garage Rex AG"));
    const auto out = linker.link_batch(qs, 4);
    ASSERT_EQ(out.size(), 80u);
    ASSERT_FALSE(out[0].matches.empty());
    for (const auto& o : out) EXPECT_EQ(ranked(o), ranked(out[0]));
}

TEST(Pipeline, StrategyOverrideChangesScoring) {
    const auto& linker = bundled_linker();
    store::QueryRecord q = named("IBM Research Zurich");
    LinkOptions rls, maxmin;
    rls.threshold = maxmin.threshold = 0.0;
    maxmin.strategy = scoring::Strategy::MaxMin;
    const auto a = linker.link_one(q, rls);
    const auto b = linker.link_one(q, maxmin);
    ASSERT_FALSE(a.matches.empty());
    ASSERT_FALSE(b.matches.empty());
    EXPECT_EQ(a.matches[0].record.name, "IBM Research");
    EXPECT_GT(a.matches[0].score, b.matches[0].score);
}

TEST(Preprocess, OutputIsByteIdenticalAcrossRuns) {
    testsupport::ScratchDir a("pp-a"), b("pp-b");
    const auto ca = testsupport::bundled_config(a.path());
    const auto cb = testsupport::bundled_config(b.path());
    const auto sa = testsupport::preprocess_bundled(ca);
    const auto sb = testsupport::preprocess_bundled(cb);
    EXPECT_EQ(sa.records, 10000u);
    EXPECT_EQ(sa.keys, sb.keys);
    EXPECT_EQ(io::read_file(ca.entity_db.string()), io::read_file(cb.entity_db.string()));
    EXPECT_EQ(io::read_file(ca.blocking_db.string()), io::read_file(cb.blocking_db.string()));
}

TEST(Preprocess, FailureLeavesNoDatabases) {
    testsupport::ScratchDir dir("pp-fail");
    const auto cfg = testsupport::bundled_config(dir.path());
    std::istringstream bad("company,town\nAcme,Bern\n");
    EXPECT_THROW(preprocess(bad, store::DatasetSchema::canonical(), cfg), Error);
    EXPECT_FALSE(std::filesystem::exists(cfg.entity_db));
    EXPECT_FALSE(std::filesystem::exists(cfg.blocking_db));
}

TEST(Preprocess, SmallSourceWithoutOptionalResources) {
    testsupport::ScratchDir dir("pp-small");
    LinkerConfig cfg;
    cfg.entity_db = dir / "e.rldb";
    cfg.blocking_db = dir / "b.rlbk";
    cfg.band = {4, 10};
    cfg.lexicon = testsupport::data_dir() / "legal_entities.txt";
    std::istringstream src("name,city\nDürr AG,Bietigheim\nDurr Holding,Stuttgart\nGmbH,Nowhere\n!!!,Void\n");
    const auto st = preprocess(src, store::DatasetSchema{{{"name", store::Attribute::Name}, {"city", store::Attribute::City}}},
                               cfg);
    EXPECT_EQ(st.records, 3u);
    EXPECT_EQ(st.unindexed, 1u);
    const auto linker = Linker::load(cfg);
    const auto out = linker.link_one(named("Durr AG"), {.threshold = 0.5});
    ASSERT_FALSE(out.matches.empty());
    EXPECT_EQ(out.matches[0].record_id, 0u);
}

TEST(Linker, MismatchedBlockingConfigIsRejected) {
    testsupport::ScratchDir dir("pp-mismatch");
    auto cfg = testsupport::bundled_config(dir.path());
    cfg.band = {4, 10};
    std::istringstream src("name\nAcme AG\n");
    preprocess(src, store::DatasetSchema::canonical(), cfg);
    cfg.band = {5, 18};
    try {
        Linker::load(cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
    }
}

TEST(Linker, BundledRecallFloor) {
    const auto truth = eval::load_truth(testsupport::data_dir() / "truth.tsv");
    const auto report = eval::evaluate(truth, bundled_linker(), {}, 2);
    EXPECT_GE(report.recall, 0.85);
    EXPECT_GE(report.precision, 0.9);
}
