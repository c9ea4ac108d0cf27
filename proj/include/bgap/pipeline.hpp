#pragma once

#include <iosfwd>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "bgap/corpus.hpp"
#include "bgap/facets.hpp"
#include "bgap/gateway.hpp"
#include "bgap/metrics.hpp"
#include "bgap/quantize.hpp"

namespace bgap {

enum class ReprMode { behavior_descriptions, raw_conversation, user_utterances_only };

std::string to_string(ReprMode m);
ReprMode repr_mode_from_string(const std::string& s);

struct RunConfig {
    std::string real_path;
    std::string sim_path;
    ProviderConfig chat_provider;
    ProviderConfig embed_provider;
    std::set<FacetId> facets{kAllFacets.begin(), kAllFacets.end()};
    ReprMode mode = ReprMode::behavior_descriptions;
    QuantizeConfig quantize;
    int truncate_dim = 1024;
    uint64_t seed = 0;
    std::string out_dir;
    int history_char_budget = 32000;
    int parallelism = 8;
    double mauve_c = 5.0;
    int mauve_grid = 99;
};

struct PipelineProviders {
    std::shared_ptr<ChatProvider> chat;
    std::shared_ptr<EmbeddingProvider> embed;
};

// ingest -> describe -> represent -> embed -> quantize -> measure, with every
// stage recorded in the run manifest and resumed from verified artifacts on
// rerun. Returns the written gap report.
GapReport run_measure(const RunConfig& config, PipelineProviders providers = {});

// Per-conversation texts fed to the embedder under the given representation
// mode. Conversations listed in `dropped` (failed descriptions) are skipped.
std::vector<std::pair<std::string, std::string>> representation_texts(
    const Corpus& corpus, const std::vector<FacetDescription>& descriptions, ReprMode mode,
    const std::set<FacetId>& subset, int history_char_budget);

struct PairwiseMatrix {
    std::vector<std::string> names;
    MatD js;  // symmetric, zero diagonal
};

// One quantization fit over the pooled embeddings of all corpora, then JS per
// unordered pair (raw histograms). Every corpus runs under the same
// representation mode.
PairwiseMatrix run_pairwise(const std::vector<std::string>& corpus_paths,
                            const RunConfig& config, PipelineProviders providers = {});

void save_pairwise_csv(const std::string& path, const PairwiseMatrix& matrix);

// Renders reports.json (and pairwise.csv when present) from a completed run
// directory as human-readable tables.
void render_report(const std::string& run_dir, std::ostream& out);

}  // namespace bgap
