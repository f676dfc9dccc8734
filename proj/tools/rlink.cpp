// Command-line front end: offline preprocessing, linking, evaluation,
// benchmarking and the HTTP service.

#include "rlink/blocking.hpp"
#include "rlink/config.hpp"
#include "rlink/error.hpp"
#include "rlink/evalbench.hpp"
#include "rlink/pipeline.hpp"
#include "rlink/service.hpp"
#include "rlink/shortname.hpp"
#include "rlink/synth.hpp"
#include "rlink/wire.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kUsageError = 2;
constexpr int kDataError = 1;

std::string resolve_config(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("RLINK_CONFIG")) return env;
    throw CLI::RequiredError("--config (or RLINK_CONFIG)");
}

std::ifstream open_in(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw rlink::Error(rlink::ErrorCode::IoError, "cannot open " + p.string());
    return in;
}

std::ofstream open_out(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw rlink::Error(rlink::ErrorCode::IoError, "cannot write " + p.string());
    return out;
}

std::vector<double> parse_doubles(const std::string& list) {
    std::vector<double> out;
    std::stringstream ss(list);
    for (std::string item; std::getline(ss, item, ',');) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw CLI::ValidationError("--sims", "not a number: " + item);
        }
    }
    return out;
}

std::vector<rlink::blocking::BandConfig> parse_configs(const std::string& list) {
    std::vector<rlink::blocking::BandConfig> out;
    std::stringstream ss(list);
    for (std::string item; std::getline(ss, item, ',');) out.push_back(rlink::blocking::BandConfig::parse(item));
    return out;
}

std::vector<std::size_t> parse_sizes(const std::string& list) {
    std::vector<std::size_t> out;
    std::stringstream ss(list);
    for (std::string item; std::getline(ss, item, ',');) out.push_back(std::stoul(item));
    return out;
}

rlink::LinkOptions link_options(const std::optional<std::size_t>& top_n, const std::optional<double>& threshold,
                                const std::string& strategy) {
    rlink::LinkOptions o;
    o.top_n = top_n;
    o.threshold = threshold;
    if (!strategy.empty()) {
        o.strategy = rlink::scoring::parse_strategy(strategy);
        if (!o.strategy) throw CLI::ValidationError("--strategy", "unknown strategy " + strategy);
    }
    return o;
}

std::vector<rlink::store::QueryRecord> read_queries(const fs::path& path) {
    auto in = open_in(path);
    std::vector<rlink::store::QueryRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw rlink::Error(rlink::ErrorCode::MalformedRequest, e.what());
        }
        out.push_back(rlink::wire::query_from_json(j));
    }
    return out;
}

// ---------------------------------------------------------------------------

struct Globals {
    std::string config;
    bool verbose = false;
};

void add_preprocess(CLI::App& app, Globals& g) {
    auto* cmd = app.add_subcommand("preprocess", "Ingest a company CSV and build the entity and blocking databases");
    auto source = std::make_shared<std::string>();
    auto no_short = std::make_shared<bool>(false);
    cmd->add_option("source", *source, "Company CSV (header row names the attributes)")->required();
    cmd->add_flag("--no-short-names", *no_short, "Skip short-name prediction");
    cmd->callback([&g, source, no_short] {
        const auto cfg = rlink::LinkerConfig::load(resolve_config(g.config));
        auto in = open_in(*source);
        const auto st = rlink::preprocess(in, rlink::store::DatasetSchema::canonical(), cfg, {.short_names = !*no_short});
        std::cout << json{{"records", st.records},
                          {"rows", st.ingest.rows},
                          {"malformed_rows", st.ingest.malformed_rows},
                          {"dropped_empty_name", st.ingest.dropped_empty_name},
                          {"short_names", st.short_names},
                          {"unindexed", st.unindexed},
                          {"keys", st.keys},
                          {"postings", st.postings},
                          {"entity_db", cfg.entity_db.string()},
                          {"blocking_db", cfg.blocking_db.string()}}
                         .dump()
                  << '\n';
    });
}

void add_link(CLI::App& app, Globals& g) {
    auto* cmd = app.add_subcommand("link", "Link queries and print one JSON result line per query");
    struct Opts {
        std::string name, street, city, postal, country, sic, queries, strategy;
        std::vector<std::string> alt;
        std::optional<std::size_t> top_n;
        std::optional<double> threshold;
        std::size_t workers = 4;
        bool timing = false;
    };
    auto o = std::make_shared<Opts>();
    auto* name = cmd->add_option("--name", o->name, "Company name");
    auto* file = cmd->add_option("--queries", o->queries, "File with one JSON query per line");
    name->excludes(file);
    cmd->add_option("--alt", o->alt, "Alternate name mention (repeatable)");
    cmd->add_option("--street", o->street);
    cmd->add_option("--city", o->city);
    cmd->add_option("--postal", o->postal);
    cmd->add_option("--country", o->country);
    cmd->add_option("--sic", o->sic);
    cmd->add_option("--top-n", o->top_n);
    cmd->add_option("--threshold", o->threshold)->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--strategy", o->strategy, "jaccard, levenshtein, weighted, maxmin or rls");
    cmd->add_option("--workers", o->workers)->check(CLI::PositiveNumber);
    cmd->add_flag("--timing", o->timing, "Include per-query elapsed time");
    cmd->callback([&g, o, name, file] {
        if (!*name && !*file) throw CLI::RequiredError("--name or --queries");
        const auto options = link_options(o->top_n, o->threshold, o->strategy);
        std::vector<rlink::store::QueryRecord> queries;
        if (*file) {
            queries = read_queries(o->queries);
        } else {
            rlink::store::QueryRecord q;
            q.name = o->name;
            q.names_alt = o->alt;
            rlink::store::Address a{o->street, o->city, o->postal, o->country};
            if (!a.empty()) q.addresses.push_back(a);
            if (!o->sic.empty()) q.sics.push_back(o->sic);
            queries.push_back(std::move(q));
        }
        const auto linker = rlink::Linker::load(rlink::LinkerConfig::load(resolve_config(g.config)));
        const auto outcomes = linker.link_batch(queries, o->workers, options);
        bool failed = false;
        for (const auto& out : outcomes) {
            std::cout << rlink::wire::outcome_to_json(out, o->timing).dump() << '\n';
            failed |= out.error.has_value();
        }
        if (failed) throw rlink::Error(rlink::ErrorCode::EmptyQueryName, "one or more queries failed");
    });
}

std::atomic<rlink::service::Service*> g_service{nullptr};

void add_serve(CLI::App& app, Globals& g) {
    auto* cmd = app.add_subcommand("serve", "Run the HTTP linkage service");
    auto port = std::make_shared<std::optional<int>>();
    auto host = std::make_shared<std::string>();
    cmd->add_option("--port", *port, "Port (0 picks a free one)");
    cmd->add_option("--host", *host);
    cmd->callback([&g, port, host] {
        const auto cfg = rlink::LinkerConfig::load(resolve_config(g.config));
        rlink::service::ServiceOptions so;
        so.host = host->empty() ? cfg.host : *host;
        so.port = port->value_or(cfg.port);
        so.max_concurrent_requests = cfg.max_concurrent_requests;
        so.workers_per_request = cfg.workers_per_request;
        rlink::service::Service svc(so);
        const int bound = svc.bind();
        std::cout << json{{"listening", fmt::format("{}:{}", so.host, bound)}}.dump() << std::endl;

        std::jthread loader([&svc, cfg] {
            try {
                const auto t0 = std::chrono::steady_clock::now();
                svc.set_linker(std::make_shared<const rlink::Linker>(rlink::Linker::load(cfg)));
                spdlog::info("dataset '{}' loaded in {:.0f} ms", cfg.dataset_id,
                             std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
            } catch (const std::exception& e) {
                spdlog::error("loading failed: {}", e.what());
                svc.stop();
            }
        });
        g_service = &svc;
        std::signal(SIGINT, [](int) {
            if (auto* s = g_service.load()) std::thread([s] { s->stop(); }).detach();
        });
        std::signal(SIGTERM, [](int) {
            if (auto* s = g_service.load()) std::thread([s] { s->stop(); }).detach();
        });
        svc.run();
        g_service = nullptr;
    });
}

void add_shortname(CLI::App& app) {
    auto* cmd = app.add_subcommand("shortname", "Train, apply and evaluate the short-name extractor");
    cmd->require_subcommand(1);

    struct Opts {
        std::string corpus, frequencies, model, out, name;
        rlink::shortname::TrainOptions train;
    };
    auto o = std::make_shared<Opts>();

    auto* train = cmd->add_subcommand("train", "Train a model from a labeled corpus");
    train->add_option("--corpus", o->corpus)->required();
    train->add_option("--frequencies", o->frequencies)->required();
    train->add_option("--out", o->out)->required();
    train->add_option("--epochs", o->train.epochs)->check(CLI::PositiveNumber);
    train->add_option("--learning-rate", o->train.learning_rate)->check(CLI::PositiveNumber);
    train->add_option("--l2", o->train.l2)->check(CLI::NonNegativeNumber);
    train->add_option("--seed", o->train.seed);
    train->callback([o] {
        auto in = open_in(o->corpus);
        const auto corpus = rlink::shortname::read_corpus(in);
        const auto freq = rlink::shortname::FrequencyTable::load(o->frequencies);
        const auto model = rlink::shortname::train(corpus, freq, o->train);
        model.save(o->out);
        std::cout << json{{"examples", corpus.size()}, {"features", model.emissions().size()},
                          {"loss_history", model.loss_history}}
                         .dump()
                  << '\n';
    });

    auto* predict = cmd->add_subcommand("predict", "Print the short name of each input name");
    predict->add_option("--model", o->model)->required();
    predict->add_option("--frequencies", o->frequencies)->required();
    predict->add_option("--name", o->name, "Name to shorten; reads names from stdin when absent");
    predict->callback([o] {
        const auto model = rlink::shortname::ShortNameModel::load(o->model);
        const auto freq = rlink::shortname::FrequencyTable::load(o->frequencies);
        auto emit = [&](const std::string& name) {
            std::cout << json{{"name", name}, {"short_name", rlink::shortname::predict(name, model, freq)}}.dump() << '\n';
        };
        if (!o->name.empty()) {
            emit(o->name);
            return;
        }
        for (std::string line; std::getline(std::cin, line);) {
            if (!line.empty()) emit(line);
        }
    });

    auto* eval = cmd->add_subcommand("eval", "Token-level precision, recall and F1 on a labeled corpus");
    eval->add_option("--model", o->model)->required();
    eval->add_option("--frequencies", o->frequencies)->required();
    eval->add_option("--corpus", o->corpus)->required();
    eval->callback([o] {
        const auto model = rlink::shortname::ShortNameModel::load(o->model);
        const auto freq = rlink::shortname::FrequencyTable::load(o->frequencies);
        auto in = open_in(o->corpus);
        const auto corpus = rlink::shortname::read_corpus(in);
        const auto m = rlink::shortname::evaluate(model, corpus, freq);
        auto cls = [](const rlink::shortname::ClassMetrics& c) {
            return json{{"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1}, {"support", c.support}};
        };
        std::cout << json{{"examples", corpus.size()},
                          {"in", cls(m.in)},
                          {"out", cls(m.out)},
                          {"macro_f1", m.macro_f1},
                          {"micro_f1", m.micro_f1},
                          {"min_freq", rlink::shortname::min_freq_statistic(corpus, freq)}}
                         .dump()
                  << '\n';
    });
}

void add_scurve(CLI::App& app) {
    auto* cmd = app.add_subcommand("scurve", "Print the banded MinHash match probability table");
    auto configs = std::make_shared<std::string>("4/10,5/18,6/30");
    auto sims = std::make_shared<std::string>("0.5,0.6,0.7,0.8");
    auto trials = std::make_shared<std::size_t>(0);
    auto seed = std::make_shared<std::uint64_t>(42);
    cmd->add_option("--configs", *configs, "Comma-separated rows/bands pairs");
    cmd->add_option("--sims", *sims, "Comma-separated Jaccard similarities");
    cmd->add_option("--trials", *trials, "Add a Monte Carlo column with this many pairs");
    cmd->add_option("--seed", *seed);
    cmd->callback([configs, sims, trials, seed] {
        const auto cfgs = parse_configs(*configs);
        const auto ss = parse_doubles(*sims);
        std::cout << "config";
        for (double s : ss) std::cout << fmt::format("\ts={:g}", s);
        std::cout << '\n';
        for (const auto& c : cfgs) {
            std::cout << c.to_string();
            for (double s : ss) {
                std::cout << fmt::format("\t{:.1f}%", 100.0 * rlink::blocking::scurve_probability(s, c));
                if (*trials > 0) {
                    std::cout << fmt::format(" ({:.1f}%)", 100.0 * rlink::eval::montecarlo_scurve(c, s, *trials, *seed));
                }
            }
            std::cout << '\n';
        }
    });
}

void add_eval(CLI::App& app, Globals& g) {
    auto* cmd = app.add_subcommand("eval", "Precision and recall against a ground-truth file");
    struct Opts {
        std::string truth, strategy, tradeoff, workdir;
        std::optional<double> threshold;
        std::size_t workers = 4;
        bool baseline = false;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--truth", o->truth)->required();
    cmd->add_option("--strategy", o->strategy, "Comma-separated strategies to compare (default: configured)");
    cmd->add_option("--threshold", o->threshold)->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--workers", o->workers)->check(CLI::PositiveNumber);
    cmd->add_flag("--baseline", o->baseline, "Also report the case-insensitive exact-match baseline");
    cmd->add_option("--tradeoff", o->tradeoff, "Comma-separated band configs for a blocking tradeoff table");
    cmd->add_option("--workdir", o->workdir, "Where tradeoff indexes are written");
    cmd->callback([&g, o] {
        const auto linker = rlink::Linker::load(rlink::LinkerConfig::load(resolve_config(g.config)));
        const auto truth = rlink::eval::load_truth(o->truth);
        rlink::eval::validate_truth(truth, linker.store().size());

        json report = json::object();
        std::vector<std::string> strategies;
        if (o->strategy.empty()) {
            strategies.emplace_back(rlink::scoring::to_string(linker.config().name.strategy));
        } else {
            std::stringstream ss(o->strategy);
            for (std::string s; std::getline(ss, s, ',');) strategies.push_back(s);
        }
        for (const auto& s : strategies) {
            const auto options = link_options(std::nullopt, o->threshold, s);
            report["strategies"][s] = rlink::eval::evaluate(truth, linker, options, o->workers).to_json();
        }
        if (o->baseline) report["trivial"] = rlink::eval::trivial_baseline(truth, linker.store()).to_json();
        if (!o->tradeoff.empty()) {
            const auto cfgs = parse_configs(o->tradeoff);
            std::optional<fs::path> workdir;
            if (!o->workdir.empty()) workdir = o->workdir;
            for (const auto& row :
                 rlink::eval::blocking_tradeoff(linker.store(), cfgs, truth, linker, workdir, o->workers)) {
                report["tradeoff"].push_back({{"config", row.config.to_string()},
                                              {"recall", row.recall},
                                              {"index_bytes", row.index_bytes},
                                              {"keys", row.keys},
                                              {"mean_comparisons", row.mean_comparisons}});
            }
        }
        std::cout << report.dump(2) << '\n';
    });
}

void add_bench(CLI::App& app) {
    auto* cmd = app.add_subcommand("bench", "Drive a running service with concurrent clients and print CSV");
    struct Opts {
        rlink::eval::BenchOptions bench;
        std::string clients = "1,2,4,8,12";
        std::string queries;
        std::size_t batch = 80;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--host", o->bench.host);
    cmd->add_option("--port", o->bench.port)->required();
    cmd->add_option("--clients", o->clients, "Comma-separated client counts");
    cmd->add_option("--requests", o->bench.requests_per_client, "Requests per client")->check(CLI::PositiveNumber);
    cmd->add_option("--queries", o->queries, "JSON-lines query file (a ground-truth TSV also works)")->required();
    cmd->add_option("--batch", o->batch, "Queries per request")->check(CLI::PositiveNumber);
    cmd->callback([o] {
        std::vector<rlink::store::QueryRecord> pool;
        if (fs::path(o->queries).extension() == ".tsv") {
            for (auto& e : rlink::eval::load_truth(o->queries)) pool.push_back(std::move(e.query));
        } else {
            pool = read_queries(o->queries);
        }
        if (pool.empty()) throw rlink::Error(rlink::ErrorCode::EmptyCorpus, "no queries in " + o->queries);
        std::vector<rlink::store::QueryRecord> batch;
        for (std::size_t i = 0; i < o->batch; ++i) batch.push_back(pool[i % pool.size()]);
        rlink::eval::write_bench_csv_header(std::cout);
        for (std::size_t c : parse_sizes(o->clients)) {
            auto opts = o->bench;
            opts.clients = c;
            rlink::eval::write_bench_csv_row(std::cout, rlink::eval::bench(opts, batch));
            std::cout.flush();
        }
    });
}

void add_synth(CLI::App& app) {
    auto* cmd = app.add_subcommand("synth", "Generate the synthetic gazetteer, corpus, truth set and short-name data");
    struct Opts {
        std::string out = "data";
        std::string lexicon = "data/legal_entities.txt";
        std::size_t records = 10000;
        std::size_t families = 900;
        std::uint64_t seed = 7;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--out", o->out, "Output directory");
    cmd->add_option("--lexicon", o->lexicon, "Legal-entity lexicon");
    cmd->add_option("--records", o->records)->check(CLI::PositiveNumber);
    cmd->add_option("--families", o->families, "Short-name training families")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", o->seed);
    cmd->callback([o] {
        namespace sy = rlink::synth;
        const fs::path dir = o->out;
        const auto lex = rlink::textnorm::LegalEntityLexicon::load(o->lexicon);
        const auto cities = sy::make_gazetteer(o->seed);
        const auto corpus = sy::make_corpus(cities, o->records, o->seed + 1);
        const auto truth = sy::make_truth(corpus, cities, lex, {}, o->seed + 2);
        const auto families = sy::make_name_families(o->families, o->seed + 3);

        std::vector<std::vector<rlink::shortname::LabeledName>> labeled;
        std::size_t examples = 0;
        for (const auto& f : families) {
            labeled.push_back(rlink::shortname::corpus_from_family(f, lex));
            examples += labeled.back().size();
        }
        const auto split = sy::split_families(labeled, 0.8, o->seed + 4);

        {
            auto out = open_out(dir / "gazetteer.tsv");
            sy::write_gazetteer(out, cities);
        }
        {
            auto out = open_out(dir / "companies.csv");
            sy::write_companies_csv(out, corpus.records);
        }
        {
            auto out = open_out(dir / "truth.tsv");
            rlink::eval::write_truth(out, truth);
        }
        {
            auto out = open_out(dir / "shortname_train.txt");
            rlink::shortname::write_corpus(out, split.train);
        }
        {
            auto out = open_out(dir / "shortname_test.txt");
            rlink::shortname::write_corpus(out, split.test);
        }
        sy::build_frequencies(corpus.records, families, cities).save(dir / "frequencies.tsv");
        std::cout << json{{"cities", cities.size()},
                          {"records", corpus.records.size()},
                          {"families", corpus.families.size()},
                          {"truth", truth.size()},
                          {"shortname_examples", examples},
                          {"shortname_train", split.train.size()},
                          {"shortname_test", split.test.size()}}
                         .dump()
                  << '\n';
    });
}

void add_inspect(CLI::App& app, Globals& g) {
    auto* cmd = app.add_subcommand("inspect", "Summarize the configuration and the preprocessed databases");
    cmd->callback([&g] {
        const auto cfg = rlink::LinkerConfig::load(resolve_config(g.config));
        const auto linker = rlink::Linker::load(cfg);
        std::ostringstream ini;
        cfg.write(ini);
        std::cout << json{{"dataset", cfg.dataset_id},
                          {"config_digest", cfg.digest()},
                          {"records", linker.store().size()},
                          {"band_config", linker.index().config().to_string()},
                          {"blocking_keys", linker.index().key_count()},
                          {"postings", linker.index().posting_count()},
                          {"gazetteer_cities", linker.trie() ? linker.trie()->size() : 0},
                          {"legal_entities", linker.lexicon().size()},
                          {"config", ini.str()}}
                         .dump(2)
                  << '\n';
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Company record linkage: MinHash blocking with tree-structured scoring"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("-c,--config", g.config, "Linker configuration file (default: $RLINK_CONFIG)");
    app.add_flag("-v,--verbose", g.verbose, "Debug logging");
    app.fallthrough();
    app.parse_complete_callback([&g] {
        // stdout carries JSON results; diagnostics go to stderr.
        spdlog::set_default_logger(spdlog::stderr_color_mt("rlink"));
        spdlog::set_level(g.verbose ? spdlog::level::debug : spdlog::level::info);
    });

    add_preprocess(app, g);
    add_link(app, g);
    add_serve(app, g);
    add_shortname(app);
    add_scurve(app);
    add_eval(app, g);
    add_bench(app);
    add_synth(app);
    add_inspect(app, g);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << json{{"error", {{"code", "UsageError"}, {"message", e.what()}}}}.dump() << '\n';
        return kUsageError;
    } catch (const rlink::Error& e) {
        std::cerr << rlink::wire::json{{"error", rlink::wire::error_to_json(e.code(), e.what())}}.dump() << '\n';
        return kDataError;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", {{"code", "IoError"}, {"message", e.what()}}}}.dump() << '\n';
        return kDataError;
    }
    return 0;
}
