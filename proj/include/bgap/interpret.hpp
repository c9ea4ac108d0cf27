#pragma once

#include <array>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace bgap {

class ChatProvider;

enum class ClusterCategoryKind { well_captured, missed, hallucinated };

std::string to_string(ClusterCategoryKind k);

struct ClusterCategory {
    int cluster = 0;
    long n_real = 0;
    long n_sim = 0;
    // Size-normalized real share: (n_real/N_real) / (n_real/N_real + n_sim/N_sim),
    // so unequal corpus sizes do not bias the split.
    double real_share = 0;
    ClusterCategoryKind category = ClusterCategoryKind::well_captured;
};

// missed when real users dominate (share >= tau_hi), hallucinated when
// simulated ones do (share <= tau_lo), well-captured in between. Clusters
// with no members are excluded.
std::vector<ClusterCategory> categorize_clusters(const std::vector<long>& counts_real,
                                                 const std::vector<long>& counts_sim,
                                                 long total_real, long total_sim,
                                                 double tau_lo = 1.0 / 3.0,
                                                 double tau_hi = 2.0 / 3.0);

struct TermScore {
    std::string term;  // unigram, or bigram joined with one space
    double score = 0;  // target-category mean TF-IDF minus mean of the other two
    long df = 0;       // pooled document frequency
};

// Documents grouped by cluster, for one category.
using ClusterDocuments = std::map<int, std::vector<std::string>>;

// The per-category documents entering TF-IDF: all texts from the
// top_clusters largest clusters (by document count) of that category.
std::vector<std::string> select_top_cluster_documents(const ClusterDocuments& clusters,
                                                      int top_clusters);

// Contrastive TF-IDF over lowercase word unigrams and bigrams. tf is the raw
// in-document count normalized by the document's token count; idf is
// ln((1+D)/(1+df)) + 1 over the pooled documents. A term's score for a
// category is its mean TF-IDF there minus the average of the other two
// category means. Stoplisted terms and terms with pooled df < min_df are
// dropped. Returns the top_terms highest-scoring terms per category.
std::array<std::vector<TermScore>, 3> contrastive_tfidf(
    const std::array<std::vector<std::string>, 3>& docs_by_category, long min_df = 50,
    const std::set<std::string>& stoplist = {}, int top_terms = 50);

// Convenience wrapper: selects top clusters per category, merges the built-in
// English stopword list with `extra_stoplist`, and scores.
std::array<std::vector<TermScore>, 3> contrastive_tfidf_by_cluster(
    const std::array<ClusterDocuments, 3>& clusters_by_category, int top_clusters = 100,
    long min_df = 50, const std::set<std::string>& extra_stoplist = {}, int top_terms = 50);

const std::set<std::string>& english_stopwords();

// Asks the chat provider to flag semantically empty terms; returns the
// flagged subset to append to the run's stoplist. Provider failures degrade
// to an empty addition (a warning is passed to `warn` when provided).
std::vector<std::string> llm_term_filter(const std::vector<std::string>& terms,
                                         ChatProvider& chat,
                                         const std::function<void(const std::string&)>& warn = nullptr);

}  // namespace bgap
