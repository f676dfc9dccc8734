#include "rlink/evalbench.hpp"

#include "bundled.hpp"
#include "rlink/error.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <sstream>

using namespace rlink;
using namespace rlink::eval;

namespace {

GroundTruthEntry entry(Category c, std::vector<std::uint32_t> ids, std::string name = "q") {
    GroundTruthEntry e;
    e.query.name = std::move(name);
    e.category = c;
    e.ids = std::move(ids);
    return e;
}

}  // namespace

TEST(Tally, CategoryRules) {
    const std::vector<GroundTruthEntry> truth = {
        entry(Category::Matched, {1, 2}),   // right id
        entry(Category::Matched, {3}),      // wrong id
        entry(Category::Matched, {4}),      // nothing returned
        entry(Category::Unmatched, {}),     // something returned
        entry(Category::Unmatched, {}),     // nothing returned
        entry(Category::Undecided, {7, 8}), // own record
        entry(Category::Undecided, {7, 8}), // foreign record
        entry(Category::Undecided, {7, 8}), // nothing
    };
    const std::vector<std::optional<std::uint32_t>> d = {2, 9, std::nullopt, 5, std::nullopt, 8, 6, std::nullopt};
    const auto r = tally(truth, d);
    EXPECT_EQ(r.tp, 1u);
    EXPECT_EQ(r.fn, 2u);
    EXPECT_EQ(r.fp, 3u);
    EXPECT_EQ(r.tn, 1u);
    EXPECT_EQ(r.undecided_fp, 1u);
    EXPECT_EQ(r.matched, 3u);
    EXPECT_EQ(r.unmatched, 2u);
    EXPECT_EQ(r.undecided, 3u);
    EXPECT_DOUBLE_EQ(r.recall, 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(r.precision, 1.0 / 4.0);
}

TEST(Tally, NoPositivesGivesZeroPrecision) {
    const std::vector<GroundTruthEntry> truth = {entry(Category::Matched, {1})};
    const std::vector<std::optional<std::uint32_t>> d = {std::nullopt};
    const auto r = tally(truth, d);
    EXPECT_DOUBLE_EQ(r.precision, 0.0);
    EXPECT_DOUBLE_EQ(r.recall, 0.0);
}

TEST(Tally, SizeMismatchThrows) {
    const std::vector<GroundTruthEntry> truth = {entry(Category::Matched, {1})};
    EXPECT_THROW(tally(truth, std::vector<std::optional<std::uint32_t>>{}), Error);
}

TEST(TallyProperty, MatchesIndependentCount) {
    testsupport::Gen gen(41);
    for (int round = 0; round < 1000; ++round) {
        std::vector<GroundTruthEntry> truth;
        std::vector<std::optional<std::uint32_t>> d;
        std::size_t tp = 0, fp = 0, fn = 0;
        const std::size_t n = 1 + gen.below(20);
        for (std::size_t i = 0; i < n; ++i) {
            const auto cat = static_cast<Category>(gen.below(3));
            std::vector<std::uint32_t> ids;
            if (cat != Category::Unmatched) {
                ids = {static_cast<std::uint32_t>(gen.below(5))};
                if (gen.chance(0.3)) ids.push_back(static_cast<std::uint32_t>(5 + gen.below(5)));
            }
            std::optional<std::uint32_t> dec;
            if (gen.chance(0.7)) dec = static_cast<std::uint32_t>(gen.below(10));
            const bool hit = dec && std::count(ids.begin(), ids.end(), *dec) > 0;
            if (cat == Category::Matched) {
                tp += hit;
                fn += !hit;
                fp += dec && !hit;
            } else if (dec && !hit) {
                fp += 1;
            }
            truth.push_back(entry(cat, ids));
            d.push_back(dec);
        }
        const auto r = tally(truth, d);
        EXPECT_EQ(r.tp, tp);
        EXPECT_EQ(r.fp, fp);
        EXPECT_EQ(r.fn, fn);
        EXPECT_DOUBLE_EQ(r.recall, tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0);
        EXPECT_DOUBLE_EQ(r.precision, tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0);
    }
}

TEST(Truth, WriteReadRoundTrip) {
    std::vector<GroundTruthEntry> truth = {entry(Category::Matched, {4, 9}, "Dürr AG"),
                                           entry(Category::Unmatched, {}, "Acme \"Quoted\" Ltd"),
                                           entry(Category::Undecided, {1, 2, 3}, "Zumu")};
    truth[0].query.addresses.push_back({"Seestrasse 1", "Zürich", "8002", "CH"});
    truth[0].query.sics.push_back("2834");
    std::stringstream ss;
    write_truth(ss, truth);
    const auto back = read_truth(ss);
    ASSERT_EQ(back.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(back[i].query.name, truth[i].query.name);
        EXPECT_EQ(back[i].category, truth[i].category);
        EXPECT_EQ(back[i].ids, truth[i].ids);
    }
    ASSERT_EQ(back[0].query.addresses.size(), 1u);
    EXPECT_EQ(back[0].query.addresses[0].city, "Zürich");
    EXPECT_EQ(back[0].query.sics, std::vector<std::string>{"2834"});
    EXPECT_TRUE(back[1].query.addresses.empty());
}

TEST(Truth, ValidationAndMalformedInput) {
    const std::vector<GroundTruthEntry> no_ids = {entry(Category::Matched, {})};
    EXPECT_THROW(validate_truth(no_ids, 10), Error);
    const std::vector<GroundTruthEntry> unknown = {entry(Category::Matched, {10})};
    EXPECT_THROW(validate_truth(unknown, 10), Error);
    EXPECT_NO_THROW(validate_truth(unknown, 11));
    std::istringstream bad_cat("name\tstreet\tcity\tpostal\tcountry\tsic\tcategory\tids\nx\t\t\t\t\t\tMAYBE\t1\n");
    try {
        read_truth(bad_cat);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidGroundTruth);
    }
}

TEST(Truth, BundledSetIsConsistent) {
    const auto truth = load_truth(testsupport::data_dir() / "truth.tsv");
    EXPECT_EQ(truth.size(), 450u);
    EXPECT_NO_THROW(validate_truth(truth, 10000));
}

TEST(MonteCarlo, AgreesWithClosedForm) {
    EXPECT_NEAR(montecarlo_scurve({4, 10}, 0.5, 2000, 1), 0.475, 0.03);
    EXPECT_NEAR(montecarlo_scurve({6, 30}, 0.7, 2000, 2), blocking::scurve_probability(0.7, {6, 30}), 0.03);
    EXPECT_DOUBLE_EQ(montecarlo_scurve({4, 10}, 1.0, 200, 3), 1.0);
    EXPECT_DOUBLE_EQ(montecarlo_scurve({4, 10}, 0.0, 200, 3), 0.0);
}

TEST(MonteCarlo, RejectsBadArguments) {
    try {
        montecarlo_scurve({4, 10}, std::numbers::pi / 10, 10, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InfeasibleSimilarity);
    }
    EXPECT_THROW(montecarlo_scurve({4, 10}, 1.5, 10, 1), Error);
    EXPECT_THROW(montecarlo_scurve({4, 10}, 0.5, 0, 1), Error);
}

TEST(Baseline, ExactNamesOnly) {
    const auto& linker = testsupport::bundled_linker();
    const auto& r0 = linker.store().get(0);
    std::vector<GroundTruthEntry> truth = {entry(Category::Matched, {0}, r0.name),
                                           entry(Category::Matched, {0}, r0.name + " x")};
    const auto rep = trivial_baseline(truth, linker.store());
    EXPECT_EQ(rep.tp, 1u);
    EXPECT_EQ(rep.fn, 1u);
}

TEST(Tradeoff, LargerSignaturesGrowTheIndex) {
    const auto& linker = testsupport::bundled_linker();
    const auto truth = load_truth(testsupport::data_dir() / "truth.tsv");
    const std::vector<GroundTruthEntry> sample(truth.begin(), truth.begin() + 60);
    const std::vector<blocking::BandConfig> cfgs = {{4, 10}, {6, 30}};
    testsupport::ScratchDir dir("tradeoff");
    const auto rows = blocking_tradeoff(linker.store(), cfgs, sample, linker, dir.path(), 2);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_LT(rows[0].index_bytes, rows[1].index_bytes);
    EXPECT_GT(rows[0].mean_comparisons, rows[1].mean_comparisons);
    EXPECT_TRUE(std::filesystem::exists(dir / "blocking-4x10.rlbk"));
}
