// behaviorgap: measure the distributional gap between the user behaviors of
// two conversation corpora (real vs simulated).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "bgap/corpus.hpp"
#include "bgap/error.hpp"
#include "bgap/facets.hpp"
#include "bgap/gateway.hpp"
#include "bgap/interpret.hpp"
#include "bgap/manifest.hpp"
#include "bgap/metrics.hpp"
#include "bgap/pipeline.hpp"
#include "bgap/probes.hpp"
#include "bgap/quantize.hpp"
#include "bgap/simgen.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalFlags {
    std::string config_path;
    std::optional<uint64_t> seed;
    std::string out_dir;
    bool offline = false;
};

bgap::ProviderConfig provider_from_json(const json& j) {
    bgap::ProviderConfig cfg;
    cfg.base_url = j.value("base_url", cfg.base_url);
    cfg.model = j.value("model", cfg.model);
    cfg.api_key_env = j.value("api_key_env", cfg.api_key_env);
    cfg.max_concurrency = j.value("max_concurrency", cfg.max_concurrency);
    cfg.timeout_seconds = j.value("timeout_seconds", cfg.timeout_seconds);
    cfg.max_retries = j.value("max_retries", cfg.max_retries);
    cfg.temperature = j.value("temperature", cfg.temperature);
    cfg.chat_path = j.value("chat_path", cfg.chat_path);
    cfg.embed_path = j.value("embed_path", cfg.embed_path);
    cfg.cache_dir = j.value("cache_dir", cfg.cache_dir);
    cfg.retry_backoff_seconds = j.value("retry_backoff_seconds", cfg.retry_backoff_seconds);
    cfg.embed_batch_size = j.value("embed_batch_size", cfg.embed_batch_size);
    cfg.stub_dim = j.value("stub_dim", cfg.stub_dim);
    return cfg;
}

// The config file fills RunConfig defaults; explicit flags override after.
struct CliConfig {
    bgap::RunConfig run;
    json raw;  // full config document for sections the RunConfig misses
};

CliConfig load_config(const GlobalFlags& flags) {
    CliConfig cfg;
    // offline default providers: everything runs without network
    cfg.run.chat_provider.base_url = "stub://offline";
    cfg.run.chat_provider.model = "offline-stub";
    cfg.run.embed_provider.base_url = "stub://hash";
    cfg.run.embed_provider.model = "hash-stub";

    if (!flags.config_path.empty()) {
        std::ifstream in(flags.config_path);
        if (!in) throw bgap::ValidationError("cannot open config: " + flags.config_path);
        try {
            cfg.raw = json::parse(in);
        } catch (const json::exception& e) {
            throw bgap::ValidationError("config parse error: " + std::string(e.what()));
        }
        if (cfg.raw.contains("chat_provider"))
            cfg.run.chat_provider = provider_from_json(cfg.raw["chat_provider"]);
        if (cfg.raw.contains("embed_provider"))
            cfg.run.embed_provider = provider_from_json(cfg.raw["embed_provider"]);
        if (cfg.raw.contains("quantize")) {
            const json& q = cfg.raw["quantize"];
            if (q.contains("algorithm"))
                cfg.run.quantize.cluster.algorithm =
                    bgap::cluster_algorithm_from_string(q["algorithm"].get<std::string>());
            cfg.run.quantize.cluster.k = q.value("k", cfg.run.quantize.cluster.k);
            cfg.run.quantize.cluster.iters = q.value("iters", cfg.run.quantize.cluster.iters);
            cfg.run.quantize.cluster.restarts =
                q.value("restarts", cfg.run.quantize.cluster.restarts);
            cfg.run.quantize.alpha = q.value("alpha", cfg.run.quantize.alpha);
            cfg.run.quantize.target_ratio =
                q.value("target_ratio", cfg.run.quantize.target_ratio);
        }
        cfg.run.truncate_dim = cfg.raw.value("truncate_dim", cfg.run.truncate_dim);
        cfg.run.history_char_budget =
            cfg.raw.value("history_char_budget", cfg.run.history_char_budget);
        cfg.run.parallelism = cfg.raw.value("parallelism", cfg.run.parallelism);
        cfg.run.mauve_c = cfg.raw.value("mauve_c", cfg.run.mauve_c);
        cfg.run.mauve_grid = cfg.raw.value("mauve_grid", cfg.run.mauve_grid);
        cfg.run.seed = cfg.raw.value("seed", cfg.run.seed);
        if (cfg.raw.contains("mode"))
            cfg.run.mode = bgap::repr_mode_from_string(cfg.raw["mode"].get<std::string>());
        if (cfg.raw.contains("facets")) {
            cfg.run.facets.clear();
            for (const auto& f : cfg.raw["facets"])
                cfg.run.facets.insert(bgap::facet_from_string(f.get<std::string>()));
        }
    }

    if (flags.seed) cfg.run.seed = *flags.seed;
    cfg.run.quantize.cluster.seed = cfg.run.seed;
    if (!flags.out_dir.empty()) cfg.run.out_dir = flags.out_dir;
    if (flags.offline) {
        cfg.run.chat_provider.offline = true;
        cfg.run.embed_provider.offline = true;
    }
    return cfg;
}

std::set<bgap::FacetId> parse_facets(const std::vector<std::string>& names) {
    std::set<bgap::FacetId> out;
    for (const auto& n : names) out.insert(bgap::facet_from_string(n));
    return out;
}

std::vector<std::string> load_goals(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw bgap::ValidationError("cannot open goals file: " + path);
    std::vector<std::string> goals;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.front() == '{') {
            json j = json::parse(line);
            goals.push_back(j.value("goal", j.value("intent", std::string())));
        } else {
            goals.push_back(line);
        }
        if (goals.back().empty())
            throw bgap::ValidationError(path + ": empty goal at line " +
                                        std::to_string(goals.size()));
    }
    if (goals.empty()) throw bgap::ValidationError(path + ": no goals");
    return goals;
}

void require(bool ok, const std::string& message) {
    if (!ok) throw bgap::ValidationError(message);
}

// Adds or replaces a named section of <dir>/reports.json.
void merge_into_reports(const std::string& dir, const std::string& key, const json& value) {
    std::string path = (fs::path(dir) / "reports.json").string();
    json doc = json::object();
    std::ifstream in(path);
    if (in) doc = json::parse(in);
    doc[key] = value;
    std::ofstream out(path, std::ios::trunc);
    out << doc.dump(2) << "\n";
}

int cmd_ingest(const CliConfig& cfg, const std::string& input, const std::string& kind) {
    require(!cfg.run.out_dir.empty(), "ingest: --out is required");
    fs::create_directories(cfg.run.out_dir);
    size_t repairs = 0;
    bgap::Corpus corpus = bgap::load_corpus(input, bgap::corpus_kind_from_string(kind),
                                            [&](const std::string&) { ++repairs; });
    std::string out_path = (fs::path(cfg.run.out_dir) / "corpus.jsonl").string();
    bgap::save_corpus(out_path, corpus);
    std::cout << "ingested " << corpus.conversations.size() << " conversations (" << repairs
              << " turn repairs) -> " << out_path << "\n";
    return 0;
}

int cmd_simulate(const CliConfig& cfg, const std::string& goals_path, int max_turns,
                 const std::string& termination_signal) {
    require(!cfg.run.out_dir.empty(), "simulate: --out is required");
    require(cfg.raw.contains("simulators") && !cfg.raw["simulators"].empty(),
            "simulate: config must define a \"simulators\" list");
    fs::create_directories(cfg.run.out_dir);

    std::vector<std::string> goals = load_goals(goals_path);

    std::vector<bgap::WeightedSimulator> sims;
    for (const auto& s : cfg.raw["simulators"]) {
        bgap::ProviderConfig pc =
            s.contains("provider") ? provider_from_json(s["provider"]) : cfg.run.chat_provider;
        pc.temperature = s.value("temperature", 1.0);  // behavioral diversity default
        if (cfg.run.chat_provider.offline) pc.offline = true;
        bgap::WeightedSimulator ws;
        ws.actor =
            bgap::make_simulator(s.value("name", pc.model), std::make_shared<bgap::ChatClient>(pc));
        if (!termination_signal.empty()) ws.actor.termination_signal = termination_signal;
        ws.weight = s.value("weight", 1.0 / double(cfg.raw["simulators"].size()));
        sims.push_back(std::move(ws));
    }

    bgap::ProviderConfig asst_cfg = cfg.run.chat_provider;
    if (cfg.raw.contains("assistant") && cfg.raw["assistant"].contains("provider"))
        asst_cfg = provider_from_json(cfg.raw["assistant"]["provider"]);
    asst_cfg.temperature =
        cfg.raw.contains("assistant") ? cfg.raw["assistant"].value("temperature", 0.7) : 0.7;
    if (cfg.run.chat_provider.offline) asst_cfg.offline = true;
    bgap::ActorSpec assistant = bgap::make_assistant(std::make_shared<bgap::ChatClient>(asst_cfg));

    std::string corpus_path = (fs::path(cfg.run.out_dir) / "corpus.jsonl").string();
    std::string assign_path = (fs::path(cfg.run.out_dir) / "assignments.jsonl").string();

    if (sims.size() == 1) {
        bgap::Corpus corpus;
        corpus.kind = bgap::Corpus::Kind::simulated;
        corpus.name = sims[0].actor.name;
        std::vector<std::pair<std::string, std::string>> assignments;
        for (size_t i = 0; i < goals.size(); ++i) {
            char id[24];
            std::snprintf(id, sizeof(id), "sim-%06zu", i);
            corpus.conversations.push_back(
                bgap::run_conversation(goals[i], sims[0].actor, assistant, max_turns, id));
            assignments.emplace_back(id, sims[0].actor.name);
        }
        bgap::save_corpus(corpus_path, corpus);
        bgap::save_assignments(assign_path, assignments);
        std::cout << "generated " << corpus.conversations.size() << " conversations -> "
                  << corpus_path << "\n";
        return 0;
    }

    bgap::MixtureRun run =
        bgap::run_mixture(goals, sims, assistant, max_turns, cfg.run.seed, cfg.run.parallelism);
    bgap::save_corpus(corpus_path, run.corpus);
    bgap::save_assignments(assign_path, run.assignments);
    std::cout << "generated " << run.corpus.conversations.size() << " conversations ("
              << sims.size() << "-simulator mixture) -> " << corpus_path << "\n";
    return 0;
}

int cmd_describe(const CliConfig& cfg, const std::string& corpus_path,
                 const std::vector<std::string>& facet_names) {
    require(!cfg.run.out_dir.empty(), "describe: --out is required");
    fs::create_directories(cfg.run.out_dir);
    std::set<bgap::FacetId> facets =
        facet_names.empty() ? cfg.run.facets : parse_facets(facet_names);

    bgap::Corpus corpus = bgap::load_corpus(corpus_path, bgap::Corpus::Kind::real);
    bgap::ChatClient chat(cfg.run.chat_provider);
    bgap::DescribeOptions options;
    options.history_char_budget = cfg.run.history_char_budget;
    options.warn = [](const std::string& w) { std::cerr << "warning: " << w << "\n"; };
    bgap::DescribeRun run = bgap::describe_corpus(corpus, facets, chat, options,
                                                  cfg.run.parallelism);

    std::string out_path = (fs::path(cfg.run.out_dir) / "descriptions.jsonl").string();
    bgap::save_descriptions(out_path, run.descriptions);
    std::cout << "described " << corpus.conversations.size() << " conversations, "
              << run.failed_conversation_ids.size() << " failed -> " << out_path << "\n";
    return 0;
}

int cmd_embed(const CliConfig& cfg, const std::string& corpus_path,
              const std::string& descriptions_path, const std::string& mode_name,
              const std::vector<std::string>& facet_names) {
    require(!cfg.run.out_dir.empty(), "embed: --out is required");
    fs::create_directories(cfg.run.out_dir);
    bgap::ReprMode mode = mode_name.empty() ? cfg.run.mode : bgap::repr_mode_from_string(mode_name);
    std::set<bgap::FacetId> facets =
        facet_names.empty() ? cfg.run.facets : parse_facets(facet_names);

    bgap::Corpus corpus = bgap::load_corpus(corpus_path, bgap::Corpus::Kind::real);
    std::vector<bgap::FacetDescription> descs;
    if (mode == bgap::ReprMode::behavior_descriptions) {
        require(!descriptions_path.empty(),
                "embed: --descriptions is required in behavior_descriptions mode");
        descs = bgap::load_descriptions(descriptions_path);
    }
    auto reps = bgap::representation_texts(corpus, descs, mode, facets,
                                           cfg.run.history_char_budget);
    require(!reps.empty(), "embed: no usable conversations");

    std::vector<std::string> ids, texts;
    for (auto& [id, text] : reps) {
        ids.push_back(id);
        texts.push_back(text);
    }
    bgap::EmbeddingClient embedder(cfg.run.embed_provider);
    bgap::MatF emb = embedder.embed(texts, cfg.run.truncate_dim);
    std::string out_path = (fs::path(cfg.run.out_dir) / "embeddings.bgm").string();
    bgap::write_matrix(out_path, emb, ids);
    std::cout << "embedded " << emb.rows() << " x " << emb.cols() << " -> " << out_path << "\n";
    return 0;
}

int cmd_quantize(const CliConfig& cfg, const std::string& real_path, const std::string& sim_path) {
    require(!cfg.run.out_dir.empty(), "quantize: --out is required");
    fs::create_directories(cfg.run.out_dir);

    bgap::MatrixFile real_mf = bgap::read_matrix(real_path);
    bgap::MatrixFile sim_mf = bgap::read_matrix(sim_path);
    bgap::QuantizeResult q = bgap::quantize_pair(bgap::to_double(real_mf.data),
                                                 bgap::to_double(sim_mf.data), cfg.run.quantize);

    bgap::save_quantize_model((fs::path(cfg.run.out_dir) / "model").string(), q.pca, q.model);
    json labels, hists;
    labels["k"] = cfg.run.quantize.cluster.k;
    hists["k"] = cfg.run.quantize.cluster.k;
    hists["alpha"] = q.histograms[0].alpha;
    labels["corpora"] = json::array();
    hists["corpora"] = json::array();
    const char* names[2] = {"real", "sim"};
    const std::vector<std::string>* ids[2] = {&real_mf.row_ids, &sim_mf.row_ids};
    for (int i = 0; i < 2; ++i) {
        labels["corpora"].push_back(
            {{"name", names[i]}, {"ids", *ids[i]}, {"labels", q.labels[size_t(i)]}});
        hists["corpora"].push_back({{"name", names[i]},
                                    {"total", q.histograms[size_t(i)].total},
                                    {"counts", q.histograms[size_t(i)].counts}});
    }
    std::ofstream((fs::path(cfg.run.out_dir) / "labels.json").string()) << labels.dump(2) << "\n";
    std::ofstream((fs::path(cfg.run.out_dir) / "histograms.json").string()) << hists.dump(2)
                                                                            << "\n";
    std::cout << "quantized into k=" << cfg.run.quantize.cluster.k << " clusters (objective "
              << q.model.objective << ") -> " << cfg.run.out_dir << "\n";
    return 0;
}

int cmd_measure(CliConfig cfg, const std::string& real_path, const std::string& sim_path,
                const std::vector<std::string>& facet_names, const std::string& mode_name,
                std::optional<int> k) {
    require(!cfg.run.out_dir.empty(), "measure: --out is required");
    cfg.run.real_path = real_path;
    cfg.run.sim_path = sim_path;
    if (!facet_names.empty()) cfg.run.facets = parse_facets(facet_names);
    if (!mode_name.empty()) cfg.run.mode = bgap::repr_mode_from_string(mode_name);
    if (k) cfg.run.quantize.cluster.k = *k;

    bgap::GapReport report = bgap::run_measure(cfg.run);
    std::cout << "KL_fwd=" << report.kl_fwd << " KL_bwd=" << report.kl_bwd << " JS=" << report.js
              << " MAUVE=" << report.mauve << " NN_sim=" << report.nn_sim << " (k=" << report.k
              << ")\n"
              << "reports -> " << (fs::path(cfg.run.out_dir) / "reports.json").string() << "\n";
    return 0;
}

int cmd_pairwise(CliConfig cfg, const std::vector<std::string>& corpora, std::optional<int> k) {
    require(!cfg.run.out_dir.empty(), "pairwise: --out is required");
    if (k) cfg.run.quantize.cluster.k = *k;
    bgap::PairwiseMatrix matrix = bgap::run_pairwise(corpora, cfg.run);
    std::cout << "pairwise JS over " << matrix.names.size() << " corpora -> "
              << (fs::path(cfg.run.out_dir) / "pairwise.csv").string() << "\n";
    return 0;
}

int cmd_interpret(const CliConfig& cfg, const std::string& run_dir, int top_clusters, long min_df,
                  double tau_lo, double tau_hi, bool llm_filter, int top_terms) {
    std::ifstream hist_in((fs::path(run_dir) / "histograms.json").string());
    require(bool(hist_in), "interpret: histograms.json missing from run dir");
    json hists = json::parse(hist_in);
    std::ifstream labels_in((fs::path(run_dir) / "labels.json").string());
    require(bool(labels_in), "interpret: labels.json missing from run dir");
    json labels = json::parse(labels_in);

    auto counts_real = hists["corpora"][0]["counts"].get<std::vector<long>>();
    auto counts_sim = hists["corpora"][1]["counts"].get<std::vector<long>>();
    long total_real = hists["corpora"][0]["total"].get<long>();
    long total_sim = hists["corpora"][1]["total"].get<long>();

    auto categories = bgap::categorize_clusters(counts_real, counts_sim, total_real, total_sim,
                                                tau_lo, tau_hi);

    std::map<int, bgap::ClusterCategoryKind> kind_of;
    for (const auto& c : categories) kind_of[c.cluster] = c.category;

    std::array<bgap::ClusterDocuments, 3> docs;
    for (int side = 0; side < 2; ++side) {
        std::string tag = side == 0 ? "real" : "sim";
        auto reps_path = fs::path(run_dir) / ("representations_" + tag + ".jsonl");
        std::ifstream reps_in(reps_path.string());
        require(bool(reps_in), "interpret: " + reps_path.string() + " missing");
        std::map<std::string, std::string> text_of;
        std::string line;
        while (std::getline(reps_in, line)) {
            if (line.empty()) continue;
            json j = json::parse(line);
            text_of[j["conversation_id"].get<std::string>()] = j["text"].get<std::string>();
        }
        const json& entry = labels["corpora"][size_t(side)];
        auto entry_ids = entry["ids"].get<std::vector<std::string>>();
        auto lab = entry["labels"].get<std::vector<int>>();
        for (size_t i = 0; i < entry_ids.size(); ++i) {
            auto it = kind_of.find(lab[i]);
            if (it == kind_of.end()) continue;
            docs[size_t(it->second)][lab[i]].push_back(text_of.at(entry_ids[i]));
        }
    }

    std::set<std::string> extra;
    if (llm_filter) {
        // preliminary pass supplies the candidates the provider reviews
        auto prelim = bgap::contrastive_tfidf_by_cluster(docs, top_clusters, min_df, {}, top_terms);
        std::vector<std::string> candidates;
        for (const auto& list : prelim)
            for (const auto& ts : list) candidates.push_back(ts.term);
        bgap::ChatClient chat(cfg.run.chat_provider);
        auto flagged = bgap::llm_term_filter(candidates, chat, [](const std::string& w) {
            std::cerr << "warning: " << w << "\n";
        });
        extra.insert(flagged.begin(), flagged.end());
    }

    auto terms = bgap::contrastive_tfidf_by_cluster(docs, top_clusters, min_df, extra, top_terms);

    json out;
    const char* cat_names[3] = {"well_captured", "missed", "hallucinated"};
    for (size_t cat = 0; cat < 3; ++cat) {
        json list = json::array();
        for (const auto& ts : terms[cat])
            list.push_back({{"term", ts.term}, {"score", ts.score}, {"df", ts.df}});
        out[cat_names[cat]] = std::move(list);
    }
    std::ofstream((fs::path(run_dir) / "terms.json").string()) << out.dump(2) << "\n";

    json clusters = json::array();
    for (const auto& c : categories)
        clusters.push_back({{"cluster", c.cluster},
                            {"n_real", c.n_real},
                            {"n_sim", c.n_sim},
                            {"real_share", c.real_share},
                            {"category", bgap::to_string(c.category)}});
    std::ofstream((fs::path(run_dir) / "clusters.json").string())
        << json{{"clusters", clusters}}.dump(2) << "\n";

    // plot-ready term CSV for external word-cloud rendering
    std::ofstream csv((fs::path(run_dir) / "terms.csv").string());
    csv << "category,term,score,df\n";
    for (size_t cat = 0; cat < 3; ++cat)
        for (const auto& ts : terms[cat])
            csv << cat_names[cat] << ",\"" << ts.term << "\"," << ts.score << "," << ts.df << "\n";

    std::cout << "interpreted " << categories.size() << " non-empty clusters -> "
              << (fs::path(run_dir) / "terms.json").string() << "\n";
    return 0;
}

int cmd_probe(const CliConfig& cfg, const std::string& real_path, const std::string& sim_path,
              int splits, double test_frac, double l2_c) {
    bgap::MatrixFile real_mf = bgap::read_matrix(real_path);
    bgap::MatrixFile sim_mf = bgap::read_matrix(sim_path);
    bgap::ProbeResult result =
        bgap::linear_probe(bgap::to_double(real_mf.data), bgap::to_double(sim_mf.data), splits,
                           test_frac, cfg.run.seed, l2_c);
    std::cout << "probe mean accuracy " << result.mean_accuracy << " over " << splits
              << " splits (";
    for (size_t i = 0; i < result.split_accuracies.size(); ++i)
        std::cout << (i ? " " : "") << result.split_accuracies[i];
    std::cout << ")\n";
    if (!cfg.run.out_dir.empty()) {
        fs::create_directories(cfg.run.out_dir);
        json j = {{"mean_accuracy", result.mean_accuracy},
                  {"split_accuracies", result.split_accuracies},
                  {"splits", splits},
                  {"test_frac", test_frac},
                  {"l2_c", l2_c},
                  {"seed", cfg.run.seed}};
        merge_into_reports(cfg.run.out_dir, "probe", j);
    }
    return 0;
}

int cmd_triplets(const CliConfig& cfg, const std::string& run_dir, int n) {
    std::ifstream labels_in((fs::path(run_dir) / "labels.json").string());
    require(bool(labels_in), "triplets: labels.json missing from run dir");
    json labels_doc = json::parse(labels_in);

    std::vector<int> labels;
    std::vector<std::string> ids, texts;
    for (const auto& entry : labels_doc["corpora"]) {
        std::string tag = entry["name"].get<std::string>();
        std::map<std::string, std::string> text_of;
        auto reps_path = fs::path(run_dir) / ("representations_" + tag + ".jsonl");
        std::ifstream reps_in(reps_path.string());
        require(bool(reps_in), "triplets: " + reps_path.string() + " missing");
        std::string line;
        while (std::getline(reps_in, line)) {
            if (line.empty()) continue;
            json j = json::parse(line);
            text_of[j["conversation_id"].get<std::string>()] = j["text"].get<std::string>();
        }
        auto entry_ids = entry["ids"].get<std::vector<std::string>>();
        auto entry_labels = entry["labels"].get<std::vector<int>>();
        for (size_t i = 0; i < entry_ids.size(); ++i) {
            ids.push_back(tag + "/" + entry_ids[i]);
            labels.push_back(entry_labels[i]);
            texts.push_back(text_of.at(entry_ids[i]));
        }
    }

    auto triplets = bgap::sample_triplets(labels, texts, n, cfg.run.seed, &ids);

    // answer key goes to a separate file so annotation can be blind
    json tj = json::array(), key = json::object();
    for (const auto& t : triplets) {
        json items = json::array();
        for (int i = 0; i < 3; ++i)
            items.push_back({{"id", t.item_ids[size_t(i)]}, {"text", t.texts[size_t(i)]}});
        tj.push_back({{"id", t.id}, {"items", items}});
        key[t.id] = {{"answer_index", t.answer_index},
                     {"same_cluster", t.same_cluster},
                     {"odd_cluster", t.odd_cluster}};
    }
    std::ofstream((fs::path(run_dir) / "triplets.json").string())
        << json{{"triplets", tj}}.dump(2) << "\n";
    std::ofstream((fs::path(run_dir) / "triplet_answers.json").string()) << key.dump(2) << "\n";
    std::cout << "sampled " << triplets.size() << " triplets -> "
              << (fs::path(run_dir) / "triplets.json").string() << "\n";
    return 0;
}

int cmd_score_annotations(const std::string& triplets_path, const std::string& answers_path,
                          const std::string& annotations_path) {
    std::ifstream t_in(triplets_path);
    require(bool(t_in), "score-annotations: cannot open " + triplets_path);
    json tj = json::parse(t_in);
    std::ifstream a_in(answers_path);
    require(bool(a_in), "score-annotations: cannot open " + answers_path);
    json key = json::parse(a_in);

    std::vector<bgap::Triplet> triplets;
    std::map<std::string, size_t> index_of;
    for (const auto& e : tj["triplets"]) {
        bgap::Triplet t;
        t.id = e["id"].get<std::string>();
        t.answer_index = key.at(t.id).at("answer_index").get<int>();
        index_of[t.id] = triplets.size();
        triplets.push_back(std::move(t));
    }

    // annotations.csv: triplet_id,annotator_id,choice (header optional)
    std::ifstream ann_in(annotations_path);
    require(bool(ann_in), "score-annotations: cannot open " + annotations_path);
    std::map<std::string, std::map<std::string, int>> by_triplet;
    std::set<std::string> annotators;
    std::string line;
    while (std::getline(ann_in, line)) {
        if (line.empty() || line.rfind("triplet_id", 0) == 0) continue;
        std::stringstream ss(line);
        std::string tid, aid, choice;
        if (!std::getline(ss, tid, ',') || !std::getline(ss, aid, ',') ||
            !std::getline(ss, choice, ','))
            throw bgap::ValidationError("score-annotations: bad CSV line: " + line);
        require(index_of.count(tid) > 0, "score-annotations: unknown triplet id " + tid);
        by_triplet[tid][aid] = std::stoi(choice);
        annotators.insert(aid);
    }

    bgap::AnnotationSheet sheet;
    sheet.choices.resize(triplets.size());
    for (const auto& t : triplets) {
        auto it = by_triplet.find(t.id);
        require(it != by_triplet.end() && it->second.size() == annotators.size(),
                "score-annotations: missing cells for triplet " + t.id);
        for (const auto& a : annotators) sheet.choices[index_of[t.id]].push_back(it->second.at(a));
    }

    bgap::AnnotationScore score = bgap::score_annotations(triplets, sheet);
    std::cout << "accuracy " << score.accuracy << ", fleiss_kappa " << score.kappa << " ("
              << triplets.size() << " triplets, " << annotators.size() << " annotators)\n";
    json out = {{"accuracy", score.accuracy},
                {"fleiss_kappa", score.kappa},
                {"triplets", triplets.size()},
                {"annotators", annotators.size()}};
    std::ofstream(fs::path(triplets_path).replace_filename("annotation_scores.json").string())
        << out.dump(2) << "\n";
    return 0;
}

int cmd_ablate(const CliConfig& cfg, const std::string& results_path, const std::string& metric) {
    std::ifstream in(results_path);
    require(bool(in), "ablate: cannot open " + results_path);
    json results = json::parse(in);

    std::map<std::string, bgap::MetricTable> by_variant;
    for (auto& [variant, datasets] : results.items()) {
        for (auto& [ds, sims] : datasets.items()) {
            for (auto& [sim, metrics] : sims.items()) {
                if (!metrics.contains(metric))
                    throw bgap::ValidationError("ablate: metric " + metric + " missing for " +
                                                variant + "/" + ds + "/" + sim);
                by_variant[variant][ds][sim] = metrics[metric].get<double>();
            }
        }
    }

    bgap::AblationCorrelation corr = bgap::ablation_correlation(by_variant);
    std::cout << "variant";
    for (const auto& v : corr.variants) std::cout << "," << v;
    std::cout << "\n";
    for (size_t i = 0; i < corr.variants.size(); ++i) {
        std::cout << corr.variants[i];
        for (Eigen::Index j = 0; j < corr.rho.cols(); ++j)
            std::cout << "," << corr.rho(Eigen::Index(i), j);
        std::cout << "\n";
    }
    if (!cfg.run.out_dir.empty()) {
        fs::create_directories(cfg.run.out_dir);
        json out;
        out["metric"] = metric;
        out["variants"] = corr.variants;
        json rows = json::array();
        for (Eigen::Index i = 0; i < corr.rho.rows(); ++i) {
            json row = json::array();
            for (Eigen::Index j = 0; j < corr.rho.cols(); ++j) row.push_back(corr.rho(i, j));
            rows.push_back(std::move(row));
        }
        out["rho"] = std::move(rows);
        merge_into_reports(cfg.run.out_dir, "ablation", out);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"behaviorgap: distributional gap between real and simulated user behaviors"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may appear after the subcommand

    GlobalFlags flags;
    app.add_option("--config", flags.config_path, "JSON config file (flags take precedence)");
    uint64_t seed_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value, "random seed for all stages");
    app.add_option("--out", flags.out_dir, "output/run directory");
    app.add_flag("--offline", flags.offline, "cache-only: no network requests");

    auto* ingest = app.add_subcommand("ingest", "validate and normalize a corpus JSONL");
    std::string ingest_input, ingest_kind = "real";
    ingest->add_option("--input", ingest_input, "corpus JSONL")->required();
    ingest->add_option("--kind", ingest_kind, "real|simulated");

    auto* simulate = app.add_subcommand("simulate", "generate conversations from goals");
    std::string goals_path, termination_signal;
    int max_turns = 10;
    simulate->add_option("--goals", goals_path, "goals file (text or JSONL)")->required();
    simulate->add_option("--max-turns", max_turns, "max user turns per conversation");
    simulate->add_option("--termination-signal", termination_signal,
                         "override the termination signal");

    auto* describe = app.add_subcommand("describe", "generate facet behavior descriptions");
    std::string describe_corpus_path;
    std::vector<std::string> describe_facets;
    describe->add_option("--corpus", describe_corpus_path, "corpus JSONL")->required();
    describe->add_option("--facets", describe_facets, "facet subset");

    auto* embed = app.add_subcommand("embed", "embed behavior representations");
    std::string embed_corpus_path, embed_descriptions, embed_mode;
    std::vector<std::string> embed_facets;
    embed->add_option("--corpus", embed_corpus_path, "corpus JSONL")->required();
    embed->add_option("--descriptions", embed_descriptions, "descriptions.jsonl");
    embed->add_option("--mode", embed_mode,
                      "behavior_descriptions|raw_conversation|user_utterances_only");
    embed->add_option("--facets", embed_facets, "facet subset");

    auto* quantize = app.add_subcommand("quantize", "fit PCA + clustering on two embedding sets");
    std::string quantize_real, quantize_sim;
    quantize->add_option("--real", quantize_real, "real embeddings .bgm")->required();
    quantize->add_option("--sim", quantize_sim, "sim embeddings .bgm")->required();

    auto* measure = app.add_subcommand("measure", "full pipeline: corpora to gap report");
    std::string measure_real, measure_sim, measure_mode;
    std::vector<std::string> measure_facets;
    std::optional<int> measure_k;
    measure->add_option("--real", measure_real, "real corpus JSONL")->required();
    measure->add_option("--sim", measure_sim, "simulated corpus JSONL")->required();
    measure->add_option("--facets", measure_facets, "facet subset");
    measure->add_option("--mode", measure_mode, "representation mode");
    measure->add_option("--k", measure_k, "cluster count");

    auto* pairwise = app.add_subcommand("pairwise", "pooled pairwise JS across corpora");
    std::vector<std::string> pairwise_corpora;
    std::optional<int> pairwise_k;
    pairwise->add_option("--corpora", pairwise_corpora, "2+ corpus JSONL paths")
        ->required()
        ->expected(2, -1);
    pairwise->add_option("--k", pairwise_k, "cluster count");

    auto* interpret = app.add_subcommand("interpret", "cluster categories + contrastive terms");
    std::string interpret_run;
    int top_clusters = 100, top_terms = 50;
    long min_df = 50;
    double tau_lo = 1.0 / 3.0, tau_hi = 2.0 / 3.0;
    bool llm_filter = false;
    interpret->add_option("--run", interpret_run, "run directory")->required();
    interpret->add_option("--top-clusters", top_clusters, "clusters per category");
    interpret->add_option("--min-df", min_df, "minimum document frequency");
    interpret->add_option("--top-terms", top_terms, "terms per category");
    interpret->add_option("--tau-lo", tau_lo, "hallucinated threshold");
    interpret->add_option("--tau-hi", tau_hi, "missed threshold");
    interpret->add_flag("--llm-filter", llm_filter, "ask the chat provider to flag filler terms");

    auto* probe = app.add_subcommand("probe", "real-vs-sim linear classification probe");
    std::string probe_real, probe_sim;
    int probe_splits = 5;
    double probe_test_frac = 0.2, probe_l2_c = 1.0;
    probe->add_option("--real", probe_real, "real embeddings .bgm")->required();
    probe->add_option("--sim", probe_sim, "sim embeddings .bgm")->required();
    probe->add_option("--splits", probe_splits, "stratified splits");
    probe->add_option("--test-frac", probe_test_frac, "test fraction");
    probe->add_option("--l2-c", probe_l2_c, "inverse L2 regularization strength");

    auto* triplets = app.add_subcommand("triplets", "sample odd-one-out triplets from a run");
    std::string triplets_run;
    int triplets_n = 25;
    triplets->add_option("--run", triplets_run, "run directory")->required();
    triplets->add_option("--n", triplets_n, "number of triplets");

    auto* score = app.add_subcommand("score-annotations", "accuracy + Fleiss kappa");
    std::string score_triplets, score_answers, score_annotations_path;
    score->add_option("--triplets", score_triplets, "triplets.json")->required();
    score->add_option("--answers", score_answers, "triplet_answers.json")->required();
    score->add_option("--annotations", score_annotations_path,
                      "CSV: triplet_id,annotator_id,choice")
        ->required();

    auto* ablate = app.add_subcommand("ablate", "z-scored Spearman correlations across variants");
    std::string ablate_results, ablate_metric = "js";
    ablate->add_option("--results", ablate_results, "results JSON (variant/dataset/simulator)")
        ->required();
    ablate->add_option("--metric", ablate_metric, "metric name (js, kl_fwd, kl_bwd, ...)");

    auto* report = app.add_subcommand("report", "render human-readable tables from a run");
    std::vector<std::string> report_runs;
    report->add_option("--run", report_runs, "run directories (repeatable)")
        ->required()
        ->expected(1, -1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            std::cout << app.help();
            return 0;
        }
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (seed_opt->count() > 0) flags.seed = seed_value;
        CliConfig cfg = load_config(flags);

        if (ingest->parsed()) return cmd_ingest(cfg, ingest_input, ingest_kind);
        if (simulate->parsed()) return cmd_simulate(cfg, goals_path, max_turns, termination_signal);
        if (describe->parsed()) return cmd_describe(cfg, describe_corpus_path, describe_facets);
        if (embed->parsed())
            return cmd_embed(cfg, embed_corpus_path, embed_descriptions, embed_mode, embed_facets);
        if (quantize->parsed()) return cmd_quantize(cfg, quantize_real, quantize_sim);
        if (measure->parsed())
            return cmd_measure(cfg, measure_real, measure_sim, measure_facets, measure_mode,
                               measure_k);
        if (pairwise->parsed()) return cmd_pairwise(cfg, pairwise_corpora, pairwise_k);
        if (interpret->parsed())
            return cmd_interpret(cfg, interpret_run, top_clusters, min_df, tau_lo, tau_hi,
                                 llm_filter, top_terms);
        if (probe->parsed())
            return cmd_probe(cfg, probe_real, probe_sim, probe_splits, probe_test_frac, probe_l2_c);
        if (triplets->parsed()) return cmd_triplets(cfg, triplets_run, triplets_n);
        if (score->parsed())
            return cmd_score_annotations(score_triplets, score_answers, score_annotations_path);
        if (ablate->parsed()) return cmd_ablate(cfg, ablate_results, ablate_metric);
        if (report->parsed()) {
            for (const auto& run : report_runs) bgap::render_report(run, std::cout);
            return 0;
        }
        std::cerr << "error: no subcommand\n";
        return 1;
    } catch (const bgap::ProviderError& e) {
        std::cerr << "provider error: " << e.what() << "\n";
        return 2;
    } catch (const bgap::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
