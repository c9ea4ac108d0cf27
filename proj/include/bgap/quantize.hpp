#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bgap/matrix.hpp"

namespace bgap {

// Normalizes every row to unit Euclidean norm. Zero rows are an error; the
// message names the row id when ids are supplied, the row index otherwise.
MatD l2_normalize(const MatD& m, const std::vector<std::string>* row_ids = nullptr);

// PCA fitted on centered data via thin SVD. Keeps the smallest number of
// leading components whose cumulative explained-variance ratio reaches
// target_ratio.
struct PcaModel {
    VecD mean;                      // d
    MatD components;                // r x d, orthonormal rows, variance-ordered
    VecD explained_variance_ratio;  // length r
    double target_ratio = 0.90;

    Eigen::Index retained() const { return components.rows(); }
    MatD transform(const MatD& m) const;
    MatD inverse_transform(const MatD& z) const;
};

PcaModel fit_pca(const MatD& m, double target_ratio = 0.90);

enum class ClusterAlgorithm { kmeans, gmm, agglomerative };

std::string to_string(ClusterAlgorithm a);
ClusterAlgorithm cluster_algorithm_from_string(const std::string& s);

struct ClusterConfig {
    ClusterAlgorithm algorithm = ClusterAlgorithm::kmeans;
    int k = 500;
    int iters = 500;
    int restarts = 5;
    uint64_t seed = 0;
    // Overrides k-means++ for the first restart; reproduction/debugging hook.
    std::optional<MatD> initial_centroids;
};

struct ClusteringModel {
    ClusterAlgorithm algorithm = ClusterAlgorithm::kmeans;
    int k = 0;
    uint64_t seed = 0;

    // k-means / agglomerative: centroids used by assign(). gmm: means.
    MatD centroids;

    // gmm only
    VecD weights;
    std::vector<MatD> covariances;

    // Winning restart's objective: within-cluster sum of squares for k-means
    // and agglomerative, total log-likelihood for gmm.
    double objective = 0;
    // Final assignment of the training set; equals assign() on it.
    std::vector<int> training_labels;
    int chosen_restart = 0;
    std::vector<double> restart_objectives;
    // Per restart, the objective after every iteration. k-means traces are
    // non-increasing, gmm traces non-decreasing; fit_clusters enforces both.
    std::vector<std::vector<double>> objective_traces;
};

ClusteringModel fit_clusters(const MatD& m, const ClusterConfig& config);

// Nearest centroid (k-means, agglomerative) or maximal posterior (gmm).
// Ties resolve to the lowest cluster index.
std::vector<int> assign(const ClusteringModel& model, const MatD& m);

struct BehaviorHistogram {
    std::vector<long> counts;   // length k
    std::vector<double> probs;  // (counts[c] + alpha) / (N + k*alpha)
    double alpha = 0;
    long total = 0;

    // Unsmoothed fractions counts[c] / N.
    std::vector<double> raw_probs() const;
};

// alpha < 0 selects the default 1/k.
BehaviorHistogram histogram(const std::vector<int>& labels, int k, double alpha = -1.0);

struct QuantizeConfig {
    ClusterConfig cluster;
    double target_ratio = 0.90;
    double alpha = -1.0;  // < 0 → 1/k
};

struct QuantizeResult {
    PcaModel pca;
    ClusteringModel model;
    std::vector<std::vector<int>> labels;        // one per input corpus
    std::vector<BehaviorHistogram> histograms;   // one per input corpus
};

// Fits normalizer + PCA + clusterer on the concatenation of all corpora,
// then assigns and builds one histogram per corpus.
QuantizeResult quantize_pooled(const std::vector<MatD>& corpora, const QuantizeConfig& config);

inline QuantizeResult quantize_pair(const MatD& real_emb, const MatD& sim_emb,
                                    const QuantizeConfig& config) {
    return quantize_pooled({real_emb, sim_emb}, config);
}

// Model artifact persistence: JSON header next to BGM1 payloads for the PCA
// mean/components and the centroids (gmm covariances flattened row-wise).
void save_quantize_model(const std::string& path_prefix, const PcaModel& pca,
                         const ClusteringModel& model);
std::pair<PcaModel, ClusteringModel> load_quantize_model(const std::string& path_prefix);

}  // namespace bgap
