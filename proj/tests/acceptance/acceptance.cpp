// Acceptance checks: one PASS/FAIL line per criterion.
//
//   acceptance                 run every criterion
//   acceptance --criterion N   run criterion N only (exit status 1 on FAIL)

#include "bundled.hpp"
#include "rlink/binary_io.hpp"
#include "rlink/blocking.hpp"
#include "rlink/evalbench.hpp"
#include "rlink/scoring.hpp"
#include "rlink/service.hpp"
#include "rlink/shortname.hpp"
#include "rlink/wire.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <httplib.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

using namespace rlink;
using nlohmann::json;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

const std::vector<blocking::BandConfig> kConfigs = {{4, 10}, {5, 18}, {6, 30}};
const std::vector<double> kSims = {0.5, 0.6, 0.7, 0.8};

// ---------------------------------------------------------------------------

Verdict scurve_table() {
    // Published matching probabilities in percent, rows by similarity, columns by configuration.
    const double published[4][3] = {{47.5, 43.5, 37.6}, {75.0, 76.7, 76.1}, {93.5, 96.3, 97.6}, {99.4, 99.9, 99.9}};
    const auto t0 = Clock::now();
    double worst = 0;
    std::string worst_cell;
    std::size_t within = 0, truncated = 0;
    for (std::size_t i = 0; i < kSims.size(); ++i) {
        for (std::size_t j = 0; j < kConfigs.size(); ++j) {
            const double got = 100.0 * blocking::scurve_probability(kSims[i], kConfigs[j]);
            const double delta = std::abs(got - published[i][j]);
            if (delta <= 0.05) ++within;
            if (std::floor(got * 10.0) / 10.0 == published[i][j]) ++truncated;
            if (delta > worst) {
                worst = delta;
                worst_cell = fmt::format("s={} {}: {:.4f}% vs {:.1f}%", kSims[i], kConfigs[j].to_string(), got,
                                         published[i][j]);
            }
        }
    }
    const double secs = seconds_since(t0);
    return {within == 12 && secs < 1.0,
            fmt::format("{}/12 cells within 0.05 pp; worst {} (delta {:.3f} pp); {}/12 equal after truncation to one "
                        "decimal; {:.4f}s",
                        within, worst_cell, worst, truncated, secs)};
}

Verdict worked_scores() {
    using textnorm::clean_light;
    using namespace scoring;
    const std::vector<std::string> lex_entries = {"ag", "gmbh"};
    const textnorm::LegalEntityLexicon lex(lex_entries);
    NameContext ctx;
    ctx.lexicon = &lex;
    auto w = [&](const char* s) { return rls_weighted(NameInput::from_raw(s), NameParams{}, ctx); };

    struct Check {
        const char* what;
        double got;
        double want;
        double tol;
    };
    const std::vector<Check> checks = {
        {"lev Dürr/Durr", lev_score(clean_light("Dürr"), clean_light("Durr")), 0.75, 1e-12},
        {"lev Dürr/Duerr", lev_score(clean_light("Dürr"), clean_light("Duerr")), 2.0 / 3.0, 1e-12},
        {"lev Garage Rex/Rey", lev_score(clean_light("garage rex ag"), clean_light("garage rey ag")), 0.92, 5e-3},
        {"jaccard téléski", jaccard_score(clean_light("téléski"), clean_light("teleski")), 0.2, 1e-12},
        {"jaccard Dürr/Durr", jaccard_score(clean_light("Dürr"), clean_light("Durr")), 0.2, 1e-12},
        {"jaccard Dürr/Duerr", jaccard_score(clean_light("Dürr"), clean_light("Duerr")), 1.0 / 6.0, 1e-12},
        {"wlev AG/GmbH", weighted_lev_score(w("garage rex AG"), w("garage rex GmbH")), 0.9092, 1e-3},
        {"wlev Rex/Rey AG", weighted_lev_score(w("garage rex AG"), w("garage rey AG")), 10.0 / 11.0, 1e-3},
        {"maxmin(1,0.4)", combine(1.0, 0.4, Strategy::MaxMin), 0.94, 1e-12},
        {"weighted(1,0.4)", combine(1.0, 0.4, Strategy::Weighted), 0.7, 1e-12},
    };
    std::size_t ok = 0;
    std::string misses;
    for (const auto& c : checks) {
        if (std::abs(c.got - c.want) <= c.tol) {
            ++ok;
        } else {
            misses += fmt::format(" [{}: {:.6f} vs {:.6f}]", c.what, c.got, c.want);
        }
    }
    return {ok == checks.size(), fmt::format("{}/{} goldens{}", ok, checks.size(), misses)};
}

Verdict montecarlo() {
    const auto t0 = Clock::now();
    double worst = 0;
    std::size_t ok = 0;
    std::uint64_t seed = 1;
    for (const auto& cfg : kConfigs) {
        for (double s : kSims) {
            const double emp = eval::montecarlo_scurve(cfg, s, 2000, seed++);
            const double delta = std::abs(emp - blocking::scurve_probability(s, cfg));
            worst = std::max(worst, delta);
            if (delta <= 0.03) ++ok;
        }
    }
    const double secs = seconds_since(t0);
    return {ok == 12 && secs < 60.0,
            fmt::format("{}/12 cells within 3 pp; worst {:.2f} pp; {:.1f}s", ok, 100 * worst, secs)};
}

std::size_t dp_indel(const std::u32string& a, const std::u32string& b) {
    std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
    for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
    for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 2)});
        }
    }
    return d[a.size()][b.size()];
}

Verdict oracles() {
    testsupport::Gen gen(404);
    std::size_t exact = 0;
    for (int i = 0; i < 10000; ++i) {
        const auto a = textnorm::clean_light(gen.phrase(3, 6));
        const auto b = textnorm::clean_light(gen.phrase(3, 6));
        const auto ua = a.codepoints(), ub = b.codepoints();
        const double want = 1.0 - static_cast<double>(dp_indel(ua, ub)) / static_cast<double>(ua.size() + ub.size());
        if (scoring::lev_score(a, b) == want) ++exact;
    }

    const blocking::HashFamily family(7, 180);
    double abs_err = 0;
    for (int i = 0; i < 1000; ++i) {
        textnorm::ShingleSet x, y;
        const std::size_t shared = gen.below(60), only_x = gen.below(40), only_y = 1 + gen.below(40);
        for (std::size_t k = 0; k < shared; ++k) {
            const auto e = fmt::format("s{}-{}", i, k);
            x.push_back(e);
            y.push_back(e);
        }
        for (std::size_t k = 0; k < only_x; ++k) x.push_back(fmt::format("x{}-{}", i, k));
        for (std::size_t k = 0; k < only_y; ++k) y.push_back(fmt::format("y{}-{}", i, k));
        if (x.empty()) x.push_back("x-fallback");
        std::sort(x.begin(), x.end());
        std::sort(y.begin(), y.end());
        const double exact_j = textnorm::jaccard(x, y);
        const double est = blocking::signature_agreement(blocking::minhash_signature(x, family),
                                                         blocking::minhash_signature(y, family));
        abs_err += std::abs(est - exact_j);
    }
    const double mae = abs_err / 1000;
    return {exact == 10000 && mae <= 0.05,
            fmt::format("lev exact on {}/10000 pairs; MinHash MAE {:.4f} at 180 hashes", exact, mae)};
}

Verdict linkage() {
    const auto t0 = Clock::now();
    testsupport::ScratchDir dir("ac5");
    const auto cfg = testsupport::bundled_config(dir.path());
    testsupport::preprocess_bundled(cfg);
    const auto linker = Linker::load(cfg);
    const auto truth = eval::load_truth(testsupport::data_dir() / "truth.tsv");

    const auto rls = eval::evaluate(truth, linker, {.strategy = scoring::Strategy::Rls}, 4);
    const auto jac = eval::evaluate(truth, linker, {.strategy = scoring::Strategy::Jaccard}, 4);
    const auto base = eval::trivial_baseline(truth, linker.store());
    const double secs = seconds_since(t0);
    const double gap_j = 100 * (rls.recall - jac.recall);
    const double gap_b = 100 * (rls.recall - base.recall);
    return {gap_j >= 10.0 && gap_b >= 20.0 && secs < 120.0,
            fmt::format("recall rls {:.1f}% (precision {:.1f}%), jaccard {:.1f}%, baseline {:.1f}%; gaps {:+.1f} / {:+.1f} "
                        "pts; {} entries; {:.1f}s",
                        100 * rls.recall, 100 * rls.precision, 100 * jac.recall, 100 * base.recall, gap_j, gap_b,
                        truth.size(), secs)};
}

Verdict tradeoff() {
    const auto& linker = testsupport::bundled_linker();
    const auto truth = eval::load_truth(testsupport::data_dir() / "truth.tsv");
    const auto rows = eval::blocking_tradeoff(linker.store(), kConfigs, truth, linker, std::nullopt, 4);
    bool size_up = true, comps_down = true;
    double rmin = 1, rmax = 0;
    std::string table;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i) {
            size_up &= rows[i].index_bytes > rows[i - 1].index_bytes;
            comps_down &= rows[i].mean_comparisons < rows[i - 1].mean_comparisons;
        }
        rmin = std::min(rmin, rows[i].recall);
        rmax = std::max(rmax, rows[i].recall);
        table += fmt::format(" [{}: {} B, {:.1f} cmp, recall {:.1f}%]", rows[i].config.to_string(), rows[i].index_bytes,
                             rows[i].mean_comparisons, 100 * rows[i].recall);
    }
    const double spread = 100 * (rmax - rmin);
    return {size_up && comps_down && spread <= 2.0,
            fmt::format("size {}, comparisons {}, recall spread {:.1f} pts;{}", size_up ? "increasing" : "NOT increasing",
                        comps_down ? "decreasing" : "NOT decreasing", spread, table)};
}

Verdict short_names() {
    auto read = [](const char* file) {
        std::ifstream in(testsupport::data_dir() / file);
        return shortname::read_corpus(in);
    };
    const auto train = read("shortname_train.txt");
    const auto test = read("shortname_test.txt");
    const auto freq = shortname::FrequencyTable::load(testsupport::data_dir() / "frequencies.tsv");
    const auto t0 = Clock::now();
    const auto model = shortname::train(train, freq);
    const double secs = seconds_since(t0);
    const auto m = shortname::evaluate(model, test, freq);

    std::size_t subseq = 0;
    for (const auto& ex : test) {
        std::string name;
        for (const auto& t : ex.raw) name += (name.empty() ? "" : " ") + t;
        const auto tokens = shortname::LabeledName::from_raw(textnorm::raw_tokens(name), {}).tokens;
        std::istringstream pred(shortname::predict(name, model, freq));
        std::size_t pos = 0;
        bool ok = true;
        for (std::string w; pred >> w;) {
            while (pos < tokens.size() && tokens[pos] != w) ++pos;
            if (pos == tokens.size()) {
                ok = false;
                break;
            }
            ++pos;
        }
        subseq += ok;
    }
    const std::size_t total = train.size() + test.size();
    const double share = static_cast<double>(train.size()) / static_cast<double>(total);
    const bool pass = total >= 1000 && std::abs(share - 0.8) < 0.02 && m.macro_f1 >= 0.85 && subseq == test.size() &&
                      secs < 120.0;
    return {pass, fmt::format("{} examples ({:.1f}% train); macro-F1 {:.3f} (IN {:.3f}, OUT {:.3f}); subsequence {}/{}; "
                              "training {:.2f}s",
                              total, 100 * share, m.macro_f1, m.in.f1, m.out.f1, subseq, test.size(), secs)};
}

Verdict determinism() {
    testsupport::ScratchDir a("ac8a"), b("ac8b");
    const auto ca = testsupport::bundled_config(a.path());
    const auto cb = testsupport::bundled_config(b.path());
    testsupport::preprocess_bundled(ca);
    testsupport::preprocess_bundled(cb);
    const bool db_same = io::read_file(ca.entity_db.string()) == io::read_file(cb.entity_db.string());
    const bool idx_same = io::read_file(ca.blocking_db.string()) == io::read_file(cb.blocking_db.string());

    const auto linker = Linker::load(ca);
    const auto truth = eval::load_truth(testsupport::data_dir() / "truth.tsv");
    std::vector<store::QueryRecord> qs;
    for (const auto& e : truth) qs.push_back(e.query);
    auto serialize = [](const std::vector<LinkOutcome>& v) {
        std::string s;
        for (const auto& o : v) s += wire::outcome_to_json(o, false).dump() + '\n';
        return s;
    };
    const bool batch_same = serialize(linker.link_batch(qs, 1)) == serialize(linker.link_batch(qs, 4));
    return {db_same && idx_same && batch_same,
            fmt::format("entity db {}, blocking db {}, {} queries 1 vs 4 workers {}", db_same ? "identical" : "DIFFERENT",
                        idx_same ? "identical" : "DIFFERENT", qs.size(), batch_same ? "identical" : "DIFFERENT")};
}

Verdict service_contract() {
    const auto& linker = testsupport::bundled_linker();
    service::ServiceOptions opts;
    opts.max_concurrent_requests = 8;
    opts.workers_per_request = 4;
    service::Service svc(opts);
    svc.set_linker(std::shared_ptr<const Linker>(&linker, [](const Linker*) {}));
    svc.start();

    const auto truth = eval::load_truth(testsupport::data_dir() / "truth.tsv");
    std::vector<store::QueryRecord> batch;
    for (std::size_t i = 0; i < 80; ++i) batch.push_back(truth[i].query);

    // Alignment and repeatability.
    json body = {{"queries", json::array()}};
    for (const auto& q : batch) body["queries"].push_back(wire::query_to_json(q));
    httplib::Client cli("127.0.0.1", svc.port());
    cli.set_read_timeout(120, 0);
    const auto r1 = cli.Post("/link", body.dump(), "application/json");
    const auto r2 = cli.Post("/link", body.dump(), "application/json");
    bool aligned = r1 && r1->status == 200;
    const bool repeatable = aligned && r2 && r2->status == 200 && r1->body == r2->body;
    if (aligned) {
        const auto j = json::parse(r1->body);
        aligned = j["results"].size() == batch.size();
        for (std::size_t i = 0; aligned && i < batch.size(); ++i) {
            const auto direct = linker.link_one(batch[i]);
            const auto& got = j["results"][i]["matches"];
            aligned = got.size() == direct.matches.size() &&
                      (got.empty() || got[0]["id"].get<std::uint32_t>() == direct.matches[0].record_id);
        }
    }

    eval::BenchOptions bo;
    bo.port = svc.port();
    std::map<std::size_t, eval::BenchResult> runs;
    for (std::size_t clients : {1, 4, 12}) {
        bo.clients = clients;
        bo.requests_per_client = clients == 12 ? 4 : 8;
        runs[clients] = eval::bench(bo, batch);
    }
    const std::size_t hwm = svc.gate().high_water_mark();
    svc.stop();
    const std::size_t failures = runs[1].failures + runs[4].failures + runs[12].failures;
    const bool faster = runs[4].throughput_rps > runs[1].throughput_rps;
    return {hwm <= 8 && aligned && repeatable && failures == 0 && faster,
            fmt::format("high-water mark {} (limit 8); aligned {}; repeatable {}; failures {}; throughput req/s "
                        "1={:.2f} 4={:.2f} 12={:.2f}; hardware threads {}",
                        hwm, aligned, repeatable, failures, runs[1].throughput_rps, runs[4].throughput_rps,
                        runs[12].throughput_rps, std::thread::hardware_concurrency())};
}

Verdict property_suites() {
    const std::vector<std::string> suites = {"textnorm", "blocking",     "entity_store", "shortname",
                                             "city_trie", "scoring",     "scoring_tree", "evalbench"};
    std::size_t ok = 0;
    std::string failed;
    for (const auto& s : suites) {
        const std::string cmd = fmt::format("'{}/test_{}' --gtest_filter='*Property*' --gtest_brief=1 >/dev/null 2>&1",
                                            RLINK_TEST_BIN_DIR, s);
        const int rc = std::system(cmd.c_str());
        if (rc == 0) {
            ++ok;
        } else {
            failed += " " + s;
        }
    }
    return {ok == suites.size(), fmt::format("{}/{} module property suites green{}{}", ok, suites.size(),
                                             failed.empty() ? "" : "; failing:", failed)};
}

const std::vector<std::pair<const char*, std::function<Verdict()>>> kCriteria = {
    {"S-curve table", scurve_table},        {"worked scores", worked_scores},
    {"blocking Monte Carlo", montecarlo},   {"oracle equivalence", oracles},
    {"end-to-end linkage", linkage},        {"blocking tradeoff", tradeoff},
    {"short-name extractor", short_names},  {"determinism", determinism},
    {"service contract", service_contract}, {"property suites", property_suites},
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance checks"};
    int only = 0;
    app.add_option("--criterion", only, "Run a single criterion (1-10)")->check(CLI::Range(1, 10));
    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(spdlog::level::warn);

    bool all_pass = true;
    for (std::size_t i = 0; i < kCriteria.size(); ++i) {
        if (only != 0 && static_cast<std::size_t>(only) != i + 1) continue;
        Verdict v;
        try {
            v = kCriteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
        }
        std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << (i + 1) << " (" << kCriteria[i].first
                  << "): " << v.detail << std::endl;
        all_pass &= v.pass;
    }
    return all_pass ? 0 : 1;
}
