// factcurve command-line tool: positional factuality analysis, self-judgment
// scoring and factuality estimation for long-form LLM generations.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "factcurve/claims.hpp"
#include "factcurve/core.hpp"
#include "factcurve/estimator.hpp"
#include "factcurve/gateway.hpp"
#include "factcurve/http_transport.hpp"
#include "factcurve/ingestion.hpp"
#include "factcurve/judgment.hpp"
#include "factcurve/rag.hpp"
#include "factcurve/report.hpp"
#include "factcurve/version.hpp"

namespace fs = std::filesystem;
using namespace factcurve;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitPartial = 3;

struct AppConfig {
    std::string endpoint;
    std::string model = "gpt-4";
    std::string qa_model; // empty -> model
    std::string cache_dir;
    std::string mode = "replay"; // replay | record
    double temperature = 0.0;
    int max_tokens = 1024;
    int k = 3;

    std::string qa_model_or_default() const { return qa_model.empty() ? model : qa_model; }

    nlohmann::json snapshot() const {
        return {{"endpoint", endpoint},   {"model", model},
                {"qa_model", qa_model},   {"cache_dir", cache_dir},
                {"mode", mode},           {"temperature", temperature},
                {"max_tokens", max_tokens}, {"k", k}};
    }
};

/// Precedence: command-line flag > config file > environment > built-in.
AppConfig load_config_file(int argc, char** argv) {
    AppConfig cfg;
    if (const char* env = std::getenv("FACTCURVE_CACHE_DIR")) cfg.cache_dir = env;
    if (cfg.cache_dir.empty()) cfg.cache_dir = "cache";

    std::string config_path;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc) config_path = argv[i + 1];
        else if (arg.rfind("--config=", 0) == 0) config_path = arg.substr(9);
    }
    if (config_path.empty()) return cfg;

    std::ifstream in(config_path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + config_path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad config file " + config_path + ": " + e.what());
    }
    cfg.endpoint = j.value("endpoint", cfg.endpoint);
    cfg.model = j.value("model", cfg.model);
    cfg.qa_model = j.value("qa_model", cfg.qa_model);
    cfg.cache_dir = j.value("cache_dir", cfg.cache_dir);
    cfg.mode = j.value("mode", cfg.mode);
    cfg.temperature = j.value("temperature", cfg.temperature);
    cfg.max_tokens = j.value("max_tokens", cfg.max_tokens);
    cfg.k = j.value("k", cfg.k);
    return cfg;
}

std::unique_ptr<Gateway> make_gateway(const AppConfig& cfg) {
    auto cache = std::make_shared<ResponseCache>(cfg.cache_dir);
    if (cfg.mode == "replay") return std::make_unique<Gateway>(GatewayMode::Replay, cache);
    if (cfg.mode != "record")
        throw ConfigError("mode must be \"replay\" or \"record\", got \"" + cfg.mode + "\"");

    const char* key = std::getenv("FACTCURVE_API_KEY");
    if (!key || !*key)
        throw ConfigError("record mode requires the FACTCURVE_API_KEY environment variable");
    if (cfg.endpoint.empty())
        throw ConfigError("record mode requires a provider endpoint (--endpoint or config file)");
    auto transport =
        std::make_shared<HttpTransport>(HttpTransport::Config{cfg.endpoint, key});
    return std::make_unique<Gateway>(GatewayMode::Record, cache, transport);
}

AnnotatedCorpus load_corpus(const std::string& path, const std::string& format,
                            const std::string& model_hint) {
    if (format == "native") return load_annotated(path);
    if (format == "factscore") {
        FactScoreConversionStats stats;
        auto corpus = convert_factscore(path, model_hint, &stats);
        std::cerr << "converted " << stats.n_records << " records ("
                  << stats.n_null_annotations << " unresponsive, " << stats.n_skipped_facts
                  << " facts skipped)\n";
        return corpus;
    }
    throw ConfigError("format must be \"native\" or \"factscore\", got \"" + format + "\"");
}

/// Writes `content` under out_dir and registers it with the manifest.
void emit(RunManifest& manifest, const fs::path& out_dir, const std::string& name,
          const std::string& content) {
    const auto path = out_dir / name;
    detail::write_text_file(path, content);
    manifest.add_output(path);
}

nlohmann::json simulation_json(const SimulationConfig& cfg, const SimulationResult& result) {
    auto sigma_or_null = [](std::optional<SelfScorePair> pair) -> nlohmann::json {
        if (!pair) return nullptr;
        try {
            return estimate_factuality(*pair).sigma;
        } catch (const DegenerateDenominatorError&) {
            return nullptr;
        }
    };
    nlohmann::json empirical{
        {"judged_correct_fraction", result.judged_correct_fraction},
        {"n_supported", result.n_supported},
        {"n_unsupported", result.n_unsupported},
        {"self_known",
         result.empirical_self_known ? nlohmann::json(*result.empirical_self_known) : nullptr},
        {"self_unknown", result.empirical_self_unknown
                             ? nlohmann::json(*result.empirical_self_unknown)
                             : nullptr},
    };
    std::optional<SelfScorePair> empirical_pair;
    if (result.empirical_self_known && result.empirical_self_unknown)
        empirical_pair = SelfScorePair{*result.empirical_self_known,
                                       *result.empirical_self_unknown};
    return {{"config",
             {{"n_claims", cfg.n_claims},
              {"true_sigma", cfg.true_sigma},
              {"self_known", cfg.self_known},
              {"self_unknown", cfg.self_unknown},
              {"seed", cfg.seed}}},
            {"empirical_rates", empirical},
            {"analytic_sigma", sigma_or_null(SelfScorePair{cfg.self_known, cfg.self_unknown})},
            {"estimate", sigma_or_null(empirical_pair)}};
}

int run(int argc, char** argv) {
    AppConfig cfg = load_config_file(argc, argv);

    CLI::App app{"Positional factuality analysis for long-form LLM generations"};
    app.set_version_flag("--version", FACTCURVE_VERSION);
    app.require_subcommand(1);
    std::string config_path_unused;
    app.add_option("--config", config_path_unused, "JSON config file");
    app.add_option("--endpoint", cfg.endpoint, "Provider base URL for record mode");
    app.add_option("--model", cfg.model, "Model id for generation and judging");
    app.add_option("--qa-model", cfg.qa_model, "Model id for QA derivation (defaults to --model)");
    app.add_option("--cache", cfg.cache_dir, "Response cache directory");
    app.add_option("--mode", cfg.mode, "Gateway mode: replay or record");
    app.add_option("--temperature", cfg.temperature, "Sampling temperature for generation");
    app.add_option("--max-tokens", cfg.max_tokens, "Token budget for generation");
    app.add_option("-k,--top-k", cfg.k, "Retrieved chunks per RAG prompt");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "Bucketed claim fractions and counts");
    std::string an_corpus, an_out, an_format = "native";
    analyze->add_option("corpus", an_corpus, "Annotated corpus (JSON-lines)")->required();
    analyze->add_option("--out", an_out, "Output directory")->required();
    analyze->add_option("--format", an_format, "Corpus format: native or factscore");

    // generate
    auto* generate = app.add_subcommand("generate", "Generate biographies for an entity list");
    std::string gen_entities, gen_out;
    generate->add_option("--entities", gen_entities, "Entity list, one per line")->required();
    generate->add_option("--out", gen_out, "Output directory")->required();

    // filter
    auto* filter = app.add_subcommand("filter", "Flag unresponsive generations");
    std::string fl_corpus, fl_out, fl_rules;
    bool fl_full_text = false;
    filter->add_option("corpus", fl_corpus, "Corpus to filter")->required();
    filter->add_option("--out", fl_out, "Output directory")->required();
    filter->add_option("--rules", fl_rules, "Filter phrases, one per line");
    filter->add_flag("--full-text", fl_full_text, "Scan whole texts, not just the opening");

    // decompose
    auto* decompose = app.add_subcommand("decompose", "Split sentences into atomic claims");
    std::string dc_corpus, dc_out;
    decompose->add_option("corpus", dc_corpus, "Corpus to decompose")->required();
    decompose->add_option("--out", dc_out, "Output directory")->required();

    // qa
    auto* qa_cmd = app.add_subcommand("qa", "Derive question-answer pairs from claims");
    std::string qa_corpus, qa_claims, qa_out;
    qa_cmd->add_option("corpus", qa_corpus, "Corpus the claims belong to")->required();
    qa_cmd->add_option("--claims", qa_claims, "Claims file (default: corpus annotations)");
    qa_cmd->add_option("--out", qa_out, "Output directory")->required();

    // judge
    auto* judge_cmd = app.add_subcommand("judge", "Self-judge claims under one setting");
    std::string jd_corpus, jd_out, jd_strategy = "qa-noa", jd_qa;
    judge_cmd->add_option("corpus", jd_corpus, "Annotated corpus")->required();
    judge_cmd->add_option("--strategy", jd_strategy, "direct, qa or qa-noa");
    judge_cmd->add_option("--qa", jd_qa, "Existing QA pairs (skips derivation)");
    judge_cmd->add_option("--out", jd_out, "Output directory")->required();

    // fliprate
    auto* fliprate_cmd = app.add_subcommand("fliprate", "Flip rate between two judgment tables");
    std::string fr_corpus, fr_b, fr_c, fr_out;
    fliprate_cmd->add_option("corpus", fr_corpus, "Annotated corpus")->required();
    fliprate_cmd->add_option("--judgments-b", fr_b, "First setting's table")->required();
    fliprate_cmd->add_option("--judgments-c", fr_c, "Second setting's table")->required();
    fliprate_cmd->add_option("--out", fr_out, "Output directory")->required();

    // estimate
    auto* estimate_cmd = app.add_subcommand("estimate", "Estimate factuality from self-scores");
    std::string es_scores, es_out;
    estimate_cmd->add_option("selfscores", es_scores, "selfscores.csv path")->required();
    estimate_cmd->add_option("--out", es_out, "Output directory")->required();

    // simulate
    auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo claim-stream simulation");
    SimulationConfig sim_cfg;
    std::string sim_out;
    simulate_cmd->add_option("--n", sim_cfg.n_claims, "Number of simulated claims")->required();
    simulate_cmd->add_option("--sigma", sim_cfg.true_sigma, "True factuality")->required();
    simulate_cmd->add_option("--self-known", sim_cfg.self_known, "Self-Known rate")->required();
    simulate_cmd->add_option("--self-unknown", sim_cfg.self_unknown, "Self-Unknown rate")
        ->required();
    simulate_cmd->add_option("--seed", sim_cfg.seed, "Random seed");
    simulate_cmd->add_option("--out", sim_out, "Output directory (JSON also goes to stdout)");

    // rag-index
    auto* rag_index_cmd = app.add_subcommand("rag-index", "Chunk a document corpus");
    std::string ri_docs, ri_out;
    rag_index_cmd->add_option("--docs", ri_docs, "Documents (JSON-lines)")->required();
    rag_index_cmd->add_option("--out", ri_out, "Output directory")->required();

    // rag-generate
    auto* rag_gen_cmd = app.add_subcommand("rag-generate", "Generate bios with retrieved context");
    std::string rg_index, rg_entities, rg_out;
    rag_gen_cmd->add_option("--index", rg_index, "Chunk index JSON")->required();
    rag_gen_cmd->add_option("--entities", rg_entities, "Entity list")->required();
    rag_gen_cmd->add_option("--out", rg_out, "Output directory")->required();

    // stats
    auto* stats_cmd = app.add_subcommand("stats", "Per-model corpus statistics");
    std::string st_corpus, st_out, st_format = "native";
    stats_cmd->add_option("corpus", st_corpus, "Annotated corpus")->required();
    stats_cmd->add_option("--out", st_out, "Output directory (default: stdout only)");
    stats_cmd->add_option("--format", st_format, "Corpus format: native or factscore");

    // report
    auto* report_cmd = app.add_subcommand("report", "Full analysis + judgment + estimation run");
    std::string rp_corpus, rp_out, rp_format = "native";
    report_cmd->add_option("corpus", rp_corpus, "Annotated corpus")->required();
    report_cmd->add_option("--out", rp_out, "Output directory")->required();
    report_cmd->add_option("--format", rp_format, "Corpus format: native or factscore");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    if (analyze->parsed()) {
        const auto corpus = load_corpus(an_corpus, an_format, cfg.model);
        const auto result = analyze_corpus(corpus);
        RunManifest manifest("analyze", cfg.snapshot());
        manifest.add_input(an_corpus);
        emit(manifest, an_out, "buckets.csv", buckets_csv(result));
        emit(manifest, an_out, "buckets.json", buckets_json(result).dump(2) + "\n");
        emit(manifest, an_out, "fractions.svg", fractions_svg(result));
        emit(manifest, an_out, "counts.svg", counts_svg(result));
        manifest.write(fs::path(an_out) / "manifest.json");
        return kExitOk;
    }

    if (generate->parsed()) {
        const auto entities = load_entities(gen_entities);
        auto gateway = make_gateway(cfg);
        const auto run = generate_bios(entities, cfg.model, *gateway, cfg.temperature,
                                       cfg.max_tokens);
        AnnotatedCorpus corpus;
        corpus.records = run.records;
        corpus.source_name = "generated";
        RunManifest manifest("generate", cfg.snapshot());
        manifest.add_input(gen_entities);
        save_annotated(corpus, fs::path(gen_out) / "generations.jsonl");
        manifest.add_output(fs::path(gen_out) / "generations.jsonl");
        manifest.write(fs::path(gen_out) / "manifest.json");
        std::cerr << "generated " << run.records.size() << "/" << entities.entities.size()
                  << " biographies\n";
        for (const auto& [entity, error] : run.errors)
            std::cerr << "  failed: " << entity << ": " << error << "\n";
        return run.errors.empty() ? kExitOk : kExitPartial;
    }

    if (filter->parsed()) {
        auto corpus = load_annotated(fl_corpus);
        const auto rules = fl_rules.empty() ? default_filter_rules() : load_filter_rules(fl_rules);
        const auto stats = apply_filters(corpus.records, rules, fl_full_text);
        RunManifest manifest("filter", cfg.snapshot());
        manifest.add_input(fl_corpus);
        save_annotated(corpus, fs::path(fl_out) / "filtered.jsonl");
        manifest.add_output(fs::path(fl_out) / "filtered.jsonl");
        nlohmann::json stats_json{{"n_total", stats.n_total},
                                  {"n_filtered", stats.n_filtered},
                                  {"filtered_rate", stats.filtered_rate}};
        emit(manifest, fl_out, "filterstats.json", stats_json.dump(2) + "\n");
        manifest.write(fs::path(fl_out) / "manifest.json");
        std::cerr << "filtered " << stats.n_filtered << "/" << stats.n_total << " ("
                  << fmt::pct(stats.filtered_rate) << "%)\n";
        return kExitOk;
    }

    if (decompose->parsed()) {
        const auto corpus = load_annotated(dc_corpus);
        auto gateway = make_gateway(cfg);
        std::vector<AtomicClaim> claims;
        int attempted = 0, failed = 0;
        for (const auto& record : corpus.records) {
            if (record.filtered) continue;
            for (const auto& sentence : record.sentences) {
                ++attempted;
                try {
                    const auto result =
                        decompose_claims(sentence, record, *gateway, cfg.model);
                    int ordinal = 1;
                    for (const auto& text : result.claims)
                        claims.push_back({make_claim_id(record.id, sentence.index, ordinal++),
                                          record.id, sentence.index, text,
                                          ClaimLabel::Unlabeled});
                } catch (const std::exception& e) {
                    ++failed;
                    std::cerr << "  decompose failed (" << record.id << " s" << sentence.index
                              << "): " << e.what() << "\n";
                }
            }
        }
        RunManifest manifest("decompose", cfg.snapshot());
        manifest.add_input(dc_corpus);
        save_claims(claims, fs::path(dc_out) / "claims.jsonl");
        manifest.add_output(fs::path(dc_out) / "claims.jsonl");
        manifest.write(fs::path(dc_out) / "manifest.json");
        std::cerr << "decomposed " << attempted - failed << "/" << attempted << " sentences into "
                  << claims.size() << " claims\n";
        return failed * 10 > attempted ? kExitPartial : kExitOk;
    }

    if (qa_cmd->parsed()) {
        const auto corpus = load_annotated(qa_corpus);
        const auto claims = qa_claims.empty() ? corpus.claims : load_claims(qa_claims);
        auto gateway = make_gateway(cfg);
        const auto result =
            derive_qa_for_claims(corpus.records, claims, *gateway, cfg.qa_model_or_default());
        RunManifest manifest("qa", cfg.snapshot());
        manifest.add_input(qa_corpus);
        if (!qa_claims.empty()) manifest.add_input(qa_claims);
        save_qa_pairs(result.pairs, fs::path(qa_out) / "qa.jsonl");
        manifest.add_output(fs::path(qa_out) / "qa.jsonl");
        std::string underivable;
        for (const auto& id : result.underivable) underivable += id + "\n";
        emit(manifest, qa_out, "underivable.txt", underivable);
        manifest.write(fs::path(qa_out) / "manifest.json");
        std::cerr << "derived " << result.pairs.size() << " QA pairs ("
                  << result.underivable.size() << " underivable)\n";
        return kExitOk;
    }

    if (judge_cmd->parsed()) {
        const auto corpus = load_annotated(jd_corpus);
        const auto strategy = strategy_from_string(jd_strategy);
        auto gateway = make_gateway(cfg);
        RunManifest manifest("judge", cfg.snapshot());
        manifest.add_input(jd_corpus);

        std::vector<QaPair> pairs;
        if (!jd_qa.empty()) {
            pairs = load_qa_pairs(jd_qa);
            manifest.add_input(jd_qa);
        } else if (strategy != JudgmentStrategy::DirectAsking) {
            const auto derived = derive_qa_stage(corpus, *gateway, cfg.qa_model_or_default());
            pairs = derived.pairs;
            save_qa_pairs(pairs, fs::path(jd_out) / "qa.jsonl");
            manifest.add_output(fs::path(jd_out) / "qa.jsonl");
            std::cerr << "derived " << pairs.size() << " QA pairs ("
                      << derived.underivable.size() << " underivable)\n";
        }

        const auto stage = judge_stage(corpus, strategy, pairs, *gateway, cfg.model);
        save_judgments(stage.judgments, fs::path(jd_out) / "judgments.jsonl");
        manifest.add_output(fs::path(jd_out) / "judgments.jsonl");
        emit(manifest, jd_out, "selfscores.csv", selfscores_csv(stage.scores));
        manifest.write(fs::path(jd_out) / "manifest.json");
        std::cerr << "judged " << stage.n_attempted - stage.n_failed << "/" << stage.n_attempted
                  << " claims under " << to_string(strategy) << "\n";
        return stage.n_failed * 10 > stage.n_attempted ? kExitPartial : kExitOk;
    }

    if (fliprate_cmd->parsed()) {
        const auto corpus = load_annotated(fr_corpus);
        const auto judgments_b = load_judgments(fr_b);
        const auto judgments_c = load_judgments(fr_c);
        const auto flips = flip_rate(corpus.records, corpus.claims, judgments_b, judgments_c);
        RunManifest manifest("fliprate", cfg.snapshot());
        manifest.add_input(fr_corpus);
        manifest.add_input(fr_b);
        manifest.add_input(fr_c);
        emit(manifest, fr_out, "fliprate.csv", fliprate_csv(flips));
        manifest.write(fs::path(fr_out) / "manifest.json");
        return kExitOk;
    }

    if (estimate_cmd->parsed()) {
        const auto rows = parse_selfscores_csv(detail::read_text_file(es_scores));
        RunManifest manifest("estimate", cfg.snapshot());
        manifest.add_input(es_scores);
        emit(manifest, es_out, "estimates.csv", estimates_csv(rows));
        manifest.write(fs::path(es_out) / "manifest.json");
        return kExitOk;
    }

    if (simulate_cmd->parsed()) {
        if (sim_cfg.n_claims <= 0) throw ConfigError("simulate: --n must be positive");
        const auto result = simulate_claim_stream(sim_cfg);
        const auto j = simulation_json(sim_cfg, result);
        std::cout << j.dump(2) << "\n";
        if (!sim_out.empty()) {
            RunManifest manifest("simulate", cfg.snapshot());
            emit(manifest, sim_out, "simulation.json", j.dump(2) + "\n");
            manifest.write(fs::path(sim_out) / "manifest.json");
        }
        return kExitOk;
    }

    if (rag_index_cmd->parsed()) {
        const auto docs = load_docs(ri_docs);
        ChunkIndex index(chunk_corpus(docs), docs);
        RunManifest manifest("rag-index", cfg.snapshot());
        manifest.add_input(ri_docs);
        fs::create_directories(ri_out);
        save_chunk_index(index, fs::path(ri_out) / "index.json");
        manifest.add_output(fs::path(ri_out) / "index.json");
        manifest.write(fs::path(ri_out) / "manifest.json");
        std::cerr << "indexed " << index.chunks().size() << " chunks from " << docs.size()
                  << " documents\n";
        return kExitOk;
    }

    if (rag_gen_cmd->parsed()) {
        const auto index = load_chunk_index(rg_index);
        const auto entities = load_entities(rg_entities);
        auto gateway = make_gateway(cfg);

        AnnotatedCorpus corpus;
        corpus.source_name = "rag-generated";
        std::vector<std::pair<std::string, std::string>> errors;
        int seq = 0;
        for (const auto& entity : entities.entities) {
            ++seq;
            try {
                const auto chunks = index.retrieve(entity, cfg.k);
                ModelRequest req;
                req.model_id = cfg.model;
                req.prompt = build_rag_prompt(entity, chunks);
                req.temperature = cfg.temperature;
                req.max_tokens = cfg.max_tokens;
                const auto resp = gateway->complete(req);
                GenerationRecord record;
                char buf[16];
                std::snprintf(buf, sizeof(buf), "%04d", seq);
                record.id = std::string("rag") + buf;
                record.entity = entity;
                record.prompt = req.prompt;
                record.model_id = cfg.model + "+rag";
                record.text = resp.text;
                if (!detail::trim(resp.text).empty())
                    record.sentences = segment_sentences(resp.text);
                corpus.records.push_back(std::move(record));
            } catch (const std::exception& e) {
                errors.emplace_back(entity, e.what());
            }
        }
        RunManifest manifest("rag-generate", cfg.snapshot());
        manifest.add_input(rg_index);
        manifest.add_input(rg_entities);
        save_annotated(corpus, fs::path(rg_out) / "generations.jsonl");
        manifest.add_output(fs::path(rg_out) / "generations.jsonl");
        manifest.write(fs::path(rg_out) / "manifest.json");
        std::cerr << "generated " << corpus.records.size() << "/" << entities.entities.size()
                  << " RAG biographies\n";
        for (const auto& [entity, error] : errors)
            std::cerr << "  failed: " << entity << ": " << error << "\n";
        return errors.empty() ? kExitOk : kExitPartial;
    }

    if (stats_cmd->parsed()) {
        const auto corpus = load_corpus(st_corpus, st_format, cfg.model);
        const auto csv = stats_csv(corpus_stats(corpus));
        std::cout << csv;
        if (!st_out.empty()) {
            RunManifest manifest("stats", cfg.snapshot());
            manifest.add_input(st_corpus);
            emit(manifest, st_out, "stats.csv", csv);
            manifest.write(fs::path(st_out) / "manifest.json");
        }
        return kExitOk;
    }

    if (report_cmd->parsed()) {
        const auto corpus = load_corpus(rp_corpus, rp_format, cfg.model);
        auto gateway = make_gateway(cfg);
        const auto result =
            run_report_pipeline(corpus, *gateway, cfg.model, cfg.qa_model_or_default());

        RunManifest manifest("report", cfg.snapshot());
        manifest.add_input(rp_corpus);
        emit(manifest, rp_out, "buckets.csv", buckets_csv(result.analyze));
        emit(manifest, rp_out, "buckets.json", buckets_json(result.analyze).dump(2) + "\n");
        emit(manifest, rp_out, "fractions.svg", fractions_svg(result.analyze));
        emit(manifest, rp_out, "counts.svg", counts_svg(result.analyze));
        save_qa_pairs(result.qa.pairs, fs::path(rp_out) / "qa.jsonl");
        manifest.add_output(fs::path(rp_out) / "qa.jsonl");
        save_judgments(result.judge_b.judgments, fs::path(rp_out) / "judgments_qa.jsonl");
        manifest.add_output(fs::path(rp_out) / "judgments_qa.jsonl");
        save_judgments(result.judge_c.judgments, fs::path(rp_out) / "judgments_qa_noa.jsonl");
        manifest.add_output(fs::path(rp_out) / "judgments_qa_noa.jsonl");
        emit(manifest, rp_out, "selfscores.csv", selfscores_csv(result.judge_c.scores));
        emit(manifest, rp_out, "selfscores_qa.csv", selfscores_csv(result.judge_b.scores));
        emit(manifest, rp_out, "fliprate.csv", fliprate_csv(result.flips));
        emit(manifest, rp_out, "estimates.csv",
             estimates_csv(selfscore_rows(result.judge_c.scores)));
        manifest.write(fs::path(rp_out) / "manifest.json");

        std::cerr << "report: " << result.qa.pairs.size() << " QA pairs ("
                  << result.qa.underivable.size() << " underivable), "
                  << result.judge_b.judgments.size() << "+" << result.judge_c.judgments.size()
                  << " judgments\n";
        const int attempted = result.judge_b.n_attempted + result.judge_c.n_attempted;
        const int failed = result.judge_b.n_failed + result.judge_c.n_failed;
        return failed * 10 > attempted ? kExitPartial : kExitOk;
    }

    return kExitUsage;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
}
