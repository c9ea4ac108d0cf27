#include "bgap/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "bgap/error.hpp"
#include "bgap/manifest.hpp"
#include "bgap/sha256.hpp"
#include "json.hpp"

namespace bgap {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(ReprMode m) {
    switch (m) {
        case ReprMode::behavior_descriptions: return "behavior_descriptions";
        case ReprMode::raw_conversation: return "raw_conversation";
        default: return "user_utterances_only";
    }
}

ReprMode repr_mode_from_string(const std::string& s) {
    if (s == "behavior_descriptions") return ReprMode::behavior_descriptions;
    if (s == "raw_conversation") return ReprMode::raw_conversation;
    if (s == "user_utterances_only") return ReprMode::user_utterances_only;
    throw ValidationError("unknown representation mode: " + s);
}

namespace {

std::string facets_tag(const std::set<FacetId>& subset) {
    std::string tag;
    for (FacetId f : kAllFacets)
        if (subset.count(f)) tag += (tag.empty() ? "" : ",") + to_string(f);
    return tag;
}

struct StageContext {
    Manifest& manifest;
    const RunConfig& config;

    // Runs `produce` unless the stage artifact verifies against the config
    // hash; either way the artifact ends up recorded.
    template <typename Fn>
    void stage(const std::string& name, const std::string& rel_path,
               const std::string& config_hash, Fn&& produce) {
        if (manifest.verify(name, config_hash, config.seed)) return;
        produce(manifest.abs_path(rel_path));
        manifest.record(name, rel_path, config_hash, config.seed);
    }
};

void save_representations(const std::string& path,
                          const std::vector<std::pair<std::string, std::string>>& reps) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + path);
    for (const auto& [id, text] : reps) {
        json j;
        j["conversation_id"] = id;
        j["text"] = text;
        out << j.dump() << "\n";
    }
}

std::vector<std::pair<std::string, std::string>> load_representations(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        out.emplace_back(j.at("conversation_id").get<std::string>(),
                         j.at("text").get<std::string>());
    }
    return out;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> representation_texts(
    const Corpus& corpus, const std::vector<FacetDescription>& descriptions, ReprMode mode,
    const std::set<FacetId>& subset, int history_char_budget) {
    std::vector<std::pair<std::string, std::string>> out;
    out.reserve(corpus.conversations.size());

    if (mode == ReprMode::raw_conversation) {
        for (const auto& conv : corpus.conversations)
            out.emplace_back(conv.id, render_history(conv, history_char_budget));
        return out;
    }
    if (mode == ReprMode::user_utterances_only) {
        for (const auto& conv : corpus.conversations)
            out.emplace_back(conv.id, render_history(conv, history_char_budget, true));
        return out;
    }

    // behavior descriptions: group by conversation, skip those with failures
    std::map<std::string, std::vector<FacetDescription>> by_conv;
    std::set<std::string> failed;
    for (const auto& d : descriptions) {
        if (d.failed) failed.insert(d.conversation_id);
        by_conv[d.conversation_id].push_back(d);
    }
    for (const auto& conv : corpus.conversations) {
        if (failed.count(conv.id)) continue;
        auto it = by_conv.find(conv.id);
        if (it == by_conv.end()) continue;
        out.emplace_back(conv.id, assemble_representation(it->second, subset).text);
    }
    return out;
}

namespace {

// Shared describe+represent+embed path for one corpus inside a run dir.
// Returns the embedding artifact path.
std::string corpus_to_embeddings(StageContext& ctx, const std::string& tag,
                                 const std::string& corpus_path, Corpus::Kind kind,
                                 PipelineProviders& providers) {
    const RunConfig& config = ctx.config;

    std::string corpus_rel = "corpus_" + tag + ".jsonl";
    std::string input_hash = sha256_file_hex(corpus_path);
    ctx.stage("ingest_" + tag, corpus_rel, sha256_hex("ingest\x1f" + input_hash),
              [&](const std::string& out_path) {
                  Corpus corpus = load_corpus(corpus_path, kind);
                  save_corpus(out_path, corpus);
              });

    std::string corpus_abs = ctx.manifest.abs_path(corpus_rel);
    std::string corpus_hash = sha256_file_hex(corpus_abs);

    std::string reps_rel = "representations_" + tag + ".jsonl";
    if (config.mode == ReprMode::behavior_descriptions) {
        json describe_cfg = {{"corpus", corpus_hash},
                             {"facets", facets_tag(config.facets)},
                             {"model", config.chat_provider.model},
                             {"budget", config.history_char_budget}};
        std::string desc_rel = "descriptions_" + tag + ".jsonl";
        ctx.stage("describe_" + tag, desc_rel, sha256_hex(describe_cfg.dump()),
                  [&](const std::string& out_path) {
                      Corpus corpus = load_corpus(corpus_abs, kind);
                      DescribeOptions options;
                      options.history_char_budget = config.history_char_budget;
                      DescribeRun run = describe_corpus(corpus, config.facets, *providers.chat,
                                                        options, config.parallelism);
                      save_descriptions(out_path, run.descriptions);
                  });

        json rep_cfg = {{"descriptions", sha256_file_hex(ctx.manifest.abs_path(desc_rel))},
                        {"mode", to_string(config.mode)},
                        {"facets", facets_tag(config.facets)}};
        ctx.stage("represent_" + tag, reps_rel, sha256_hex(rep_cfg.dump()),
                  [&](const std::string& out_path) {
                      Corpus corpus = load_corpus(corpus_abs, kind);
                      auto descs = load_descriptions(ctx.manifest.abs_path(desc_rel));
                      save_representations(
                          out_path, representation_texts(corpus, descs, config.mode,
                                                         config.facets,
                                                         config.history_char_budget));
                  });
    } else {
        json rep_cfg = {{"corpus", corpus_hash},
                        {"mode", to_string(config.mode)},
                        {"budget", config.history_char_budget}};
        ctx.stage("represent_" + tag, reps_rel, sha256_hex(rep_cfg.dump()),
                  [&](const std::string& out_path) {
                      Corpus corpus = load_corpus(corpus_abs, kind);
                      save_representations(
                          out_path, representation_texts(corpus, {}, config.mode, config.facets,
                                                         config.history_char_budget));
                  });
    }

    std::string emb_rel = "embeddings_" + tag + ".bgm";
    json embed_cfg = {{"representations", sha256_file_hex(ctx.manifest.abs_path(reps_rel))},
                      {"model", config.embed_provider.model},
                      {"truncate_dim", config.truncate_dim}};
    ctx.stage("embed_" + tag, emb_rel, sha256_hex(embed_cfg.dump()),
              [&](const std::string& out_path) {
                  auto reps = load_representations(ctx.manifest.abs_path(reps_rel));
                  if (reps.empty())
                      throw ValidationError("no usable conversations in corpus " + tag);
                  std::vector<std::string> texts, ids;
                  for (auto& [id, text] : reps) {
                      ids.push_back(id);
                      texts.push_back(text);
                  }
                  MatF emb = providers.embed->embed(texts, config.truncate_dim);
                  write_matrix(out_path, emb, ids);
              });
    return ctx.manifest.abs_path(emb_rel);
}

void ensure_providers(const RunConfig& config, PipelineProviders& providers) {
    if (!providers.chat) providers.chat = std::make_shared<ChatClient>(config.chat_provider);
    if (!providers.embed)
        providers.embed = std::make_shared<EmbeddingClient>(config.embed_provider);
}

json quantize_config_json(const RunConfig& config) {
    return json{{"algorithm", to_string(config.quantize.cluster.algorithm)},
                {"k", config.quantize.cluster.k},
                {"iters", config.quantize.cluster.iters},
                {"restarts", config.quantize.cluster.restarts},
                {"alpha", config.quantize.alpha},
                {"target_ratio", config.quantize.target_ratio}};
}

}  // namespace

GapReport run_measure(const RunConfig& config, PipelineProviders providers) {
    if (config.out_dir.empty()) throw ValidationError("run: output directory required");
    if (config.real_path.empty() || config.sim_path.empty())
        throw ValidationError("run: real and sim corpus paths required");
    ensure_providers(config, providers);

    Manifest manifest(config.out_dir);
    manifest.load();
    StageContext ctx{manifest, config};

    std::string real_emb_path =
        corpus_to_embeddings(ctx, "real", config.real_path, Corpus::Kind::real, providers);
    std::string sim_emb_path =
        corpus_to_embeddings(ctx, "sim", config.sim_path, Corpus::Kind::simulated, providers);

    json q_cfg = quantize_config_json(config);
    q_cfg["real"] = sha256_file_hex(real_emb_path);
    q_cfg["sim"] = sha256_file_hex(sim_emb_path);
    q_cfg["seed"] = config.quantize.cluster.seed;
    std::string q_hash = sha256_hex(q_cfg.dump());

    ctx.stage("quantize", "histograms.json", q_hash, [&](const std::string& out_path) {
        MatrixFile real_mf = read_matrix(real_emb_path);
        MatrixFile sim_mf = read_matrix(sim_emb_path);
        QuantizeResult q =
            quantize_pair(to_double(real_mf.data), to_double(sim_mf.data), config.quantize);

        json hists;
        hists["k"] = config.quantize.cluster.k;
        hists["alpha"] = q.histograms[0].alpha;
        hists["corpora"] = json::array();
        const char* names[2] = {"real", "sim"};
        for (int i = 0; i < 2; ++i)
            hists["corpora"].push_back({{"name", names[i]},
                                        {"total", q.histograms[size_t(i)].total},
                                        {"counts", q.histograms[size_t(i)].counts}});
        std::ofstream hist_out(out_path, std::ios::trunc);
        hist_out << hists.dump(2) << "\n";

        json labels;
        labels["k"] = config.quantize.cluster.k;
        labels["corpora"] = json::array();
        const std::vector<std::string>* id_lists[2] = {&real_mf.row_ids, &sim_mf.row_ids};
        for (int i = 0; i < 2; ++i)
            labels["corpora"].push_back({{"name", names[i]},
                                         {"ids", *id_lists[size_t(i)]},
                                         {"labels", q.labels[size_t(i)]}});
        std::ofstream labels_out(manifest.abs_path("labels.json"), std::ios::trunc);
        labels_out << labels.dump(2) << "\n";

        save_quantize_model(manifest.abs_path("model"), q.pca, q.model);
    });
    manifest.record("labels", "labels.json", q_hash, config.seed);
    manifest.record("model", "model.json", q_hash, config.seed);

    json r_cfg = q_cfg;
    r_cfg["mauve_c"] = config.mauve_c;
    r_cfg["mauve_grid"] = config.mauve_grid;
    std::string r_hash = sha256_hex(r_cfg.dump());

    ctx.stage("report", "reports.json", r_hash, [&](const std::string& out_path) {
        std::ifstream hist_in(manifest.abs_path("histograms.json"));
        json hists = json::parse(hist_in);
        int k = hists.at("k").get<int>();
        double alpha = hists.at("alpha").get<double>();

        auto hist_of = [&](size_t idx) {
            BehaviorHistogram h;
            h.alpha = alpha;
            h.counts = hists["corpora"][idx]["counts"].get<std::vector<long>>();
            h.total = hists["corpora"][idx]["total"].get<long>();
            double denom = double(h.total) + double(k) * alpha;
            for (long c : h.counts) h.probs.push_back((double(c) + alpha) / denom);
            return h;
        };
        BehaviorHistogram h_real = hist_of(0), h_sim = hist_of(1);
        GapMetrics gm = metrics_from_histograms(h_real, h_sim, config.mauve_c, config.mauve_grid);
        save_divergence_curve_csv(
            manifest.abs_path("mauve_curve.csv"),
            mauve(h_real.probs, h_sim.probs, config.mauve_c, config.mauve_grid).second);

        MatrixFile real_mf = read_matrix(real_emb_path);
        MatrixFile sim_mf = read_matrix(sim_emb_path);

        GapReport report;
        report.kl_fwd = gm.kl_fwd;
        report.kl_bwd = gm.kl_bwd;
        report.js = gm.js;
        report.mauve = gm.mauve;
        report.nn_sim = nn_cosine(to_double(real_mf.data), to_double(sim_mf.data));
        report.k = k;
        report.alpha = alpha;
        report.real_name = config.real_path;
        report.sim_name = config.sim_path;
        report.seed = config.seed;
        for (FacetId f : kAllFacets)
            if (config.facets.count(f)) report.facet_subset.push_back(to_string(f));

        // conversations dropped between ingest and embedding
        auto dropped_of = [&](const std::string& tag, const MatrixFile& mf) {
            Corpus corpus = load_corpus(manifest.abs_path("corpus_" + tag + ".jsonl"),
                                        Corpus::Kind::real);
            std::set<std::string> kept(mf.row_ids.begin(), mf.row_ids.end());
            std::vector<std::string> dropped;
            for (const auto& conv : corpus.conversations)
                if (!kept.count(conv.id)) dropped.push_back(conv.id);
            return dropped;
        };

        json j;
        json entry;
        entry["real"] = report.real_name;
        entry["sim"] = report.sim_name;
        entry["mode"] = to_string(config.mode);
        entry["kl_fwd"] = report.kl_fwd;
        entry["kl_bwd"] = report.kl_bwd;
        entry["js"] = report.js;
        entry["mauve"] = report.mauve;
        entry["nn_sim"] = report.nn_sim;
        entry["k"] = report.k;
        entry["alpha"] = report.alpha;
        entry["seed"] = report.seed;
        json facet_names = json::array();
        for (const auto& f : report.facet_subset) facet_names.push_back(f);
        entry["facets"] = std::move(facet_names);
        entry["dropped_real"] = dropped_of("real", real_mf);
        entry["dropped_sim"] = dropped_of("sim", sim_mf);
        j["reports"] = json::array({entry});
        std::ofstream out(out_path, std::ios::trunc);
        out << j.dump(2) << "\n";
    });

    // read the (possibly resumed) report back
    std::ifstream in(manifest.abs_path("reports.json"));
    json j = json::parse(in);
    const json& entry = j.at("reports").at(0);
    GapReport report;
    report.kl_fwd = entry.at("kl_fwd").get<double>();
    report.kl_bwd = entry.at("kl_bwd").get<double>();
    report.js = entry.at("js").get<double>();
    report.mauve = entry.at("mauve").get<double>();
    report.nn_sim = entry.at("nn_sim").get<double>();
    report.k = entry.at("k").get<int>();
    report.alpha = entry.at("alpha").get<double>();
    report.real_name = entry.at("real").get<std::string>();
    report.sim_name = entry.at("sim").get<std::string>();
    report.seed = entry.at("seed").get<uint64_t>();
    for (const auto& f : entry.at("facets"))
        report.facet_subset.push_back(f.get<std::string>());
    return report;
}

PairwiseMatrix run_pairwise(const std::vector<std::string>& corpus_paths,
                            const RunConfig& config, PipelineProviders providers) {
    if (corpus_paths.size() < 2)
        throw ValidationError("pairwise: need at least 2 corpora");
    if (config.out_dir.empty()) throw ValidationError("pairwise: output directory required");
    ensure_providers(config, providers);

    Manifest manifest(config.out_dir);
    manifest.load();
    StageContext ctx{manifest, config};

    std::vector<MatD> embeddings;
    PairwiseMatrix result;
    for (size_t i = 0; i < corpus_paths.size(); ++i) {
        std::string tag = "c" + std::to_string(i);
        std::string emb_path = corpus_to_embeddings(ctx, tag, corpus_paths[i],
                                                    Corpus::Kind::simulated, providers);
        embeddings.push_back(to_double(read_matrix(emb_path).data));
        result.names.push_back(fs::path(corpus_paths[i]).stem().string());
    }

    QuantizeResult q = quantize_pooled(embeddings, config.quantize);

    const size_t n = embeddings.size();
    result.js = MatD::Zero(Eigen::Index(n), Eigen::Index(n));
    std::vector<std::vector<double>> raw;
    for (const auto& h : q.histograms) raw.push_back(h.raw_probs());
    for (size_t i = 0; i < n; ++i)
        for (size_t j_idx = i + 1; j_idx < n; ++j_idx) {
            double v = js(raw[i], raw[j_idx]);
            result.js(Eigen::Index(i), Eigen::Index(j_idx)) = v;
            result.js(Eigen::Index(j_idx), Eigen::Index(i)) = v;
        }

    save_pairwise_csv(manifest.abs_path("pairwise.csv"), result);

    json hists;
    hists["k"] = config.quantize.cluster.k;
    hists["alpha"] = q.histograms[0].alpha;
    hists["corpora"] = json::array();
    for (size_t i = 0; i < n; ++i)
        hists["corpora"].push_back({{"name", result.names[i]},
                                    {"total", q.histograms[i].total},
                                    {"counts", q.histograms[i].counts}});
    std::ofstream hist_out(manifest.abs_path("histograms.json"), std::ios::trunc);
    hist_out << hists.dump(2) << "\n";
    return result;
}

void save_pairwise_csv(const std::string& path, const PairwiseMatrix& matrix) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + path);
    out << "simulator";
    for (const auto& name : matrix.names) out << "," << name;
    out << "\n";
    out << std::setprecision(12);
    for (Eigen::Index i = 0; i < matrix.js.rows(); ++i) {
        out << matrix.names[size_t(i)];
        for (Eigen::Index j = 0; j < matrix.js.cols(); ++j) out << "," << matrix.js(i, j);
        out << "\n";
    }
}

void render_report(const std::string& run_dir, std::ostream& out) {
    std::string reports_path = (fs::path(run_dir) / "reports.json").string();
    if (fs::exists(reports_path)) {
        std::ifstream in(reports_path);
        json j = json::parse(in);
        out << "pair                                   KL_fwd   KL_bwd       JS    MAUVE   NN-sim\n";
        for (const auto& e : j.at("reports")) {
            std::ostringstream name;
            name << fs::path(e.at("real").get<std::string>()).stem().string() << " vs "
                 << fs::path(e.at("sim").get<std::string>()).stem().string();
            if (e.contains("facets") && e["facets"].size() < 6) {
                name << " [";
                for (size_t i = 0; i < e["facets"].size(); ++i)
                    name << (i ? "," : "") << e["facets"][i].get<std::string>();
                name << "]";
            }
            out << std::left << std::setw(36) << name.str() << std::right << std::fixed
                << std::setprecision(4) << std::setw(9) << e.at("kl_fwd").get<double>()
                << std::setw(9) << e.at("kl_bwd").get<double>() << std::setw(9)
                << e.at("js").get<double>() << std::setw(9) << e.at("mauve").get<double>()
                << std::setw(9) << e.at("nn_sim").get<double>() << "\n";
            auto dropped = [&](const char* key) {
                if (!e.contains(key) || e[key].empty()) return;
                out << "  dropped (" << key << "):";
                for (const auto& id : e[key]) out << " " << id.get<std::string>();
                out << "\n";
            };
            dropped("dropped_real");
            dropped("dropped_sim");
        }
    }
    std::string pairwise_path = (fs::path(run_dir) / "pairwise.csv").string();
    if (fs::exists(pairwise_path)) {
        out << "\npairwise JS matrix (" << pairwise_path << "):\n";
        std::ifstream in(pairwise_path);
        out << in.rdbuf();
    }
    if (!fs::exists(reports_path) && !fs::exists(pairwise_path))
        throw ValidationError("no reports found in " + run_dir);
}

}  // namespace bgap
