#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "bgap/matrix.hpp"

namespace bgap {

// Odd-one-out item: two descriptions share a cluster, one comes from a
// different cluster, presentation order shuffled.
struct Triplet {
    std::string id;
    std::array<std::string, 3> item_ids;
    std::array<std::string, 3> texts;
    int answer_index = 0;  // position of the odd item, 0..2
    int same_cluster = 0;
    int odd_cluster = 0;
};

// Samples n triplets: the shared cluster is uniform over clusters with >= 2
// members, its two items are uniform without replacement, and the odd item
// is uniform over everything outside that cluster.
std::vector<Triplet> sample_triplets(const std::vector<int>& labels,
                                     const std::vector<std::string>& descriptions, int n = 25,
                                     uint64_t seed = 0,
                                     const std::vector<std::string>* item_ids = nullptr);

// choices[t][a] = position chosen by annotator a on triplet t. Rectangular.
struct AnnotationSheet {
    std::vector<std::vector<int>> choices;
};

struct AnnotationScore {
    double accuracy = 0;
    double kappa = 0;
};

AnnotationScore score_annotations(const std::vector<Triplet>& triplets,
                                  const AnnotationSheet& sheet);

// Fleiss' kappa from an items-by-categories count table; every row must sum
// to the same number of raters (>= 2).
double fleiss_kappa(const std::vector<std::vector<int>>& item_category_counts);

struct ProbeResult {
    std::vector<double> split_accuracies;
    // (real, sim) test-set sizes per split; exact class ratio when divisible
    std::vector<std::pair<long, long>> split_test_counts;
    double mean_accuracy = 0;
    uint64_t seed = 0;
    double l2_c = 1.0;  // inverse regularization strength, sklearn-style
};

// Real-vs-simulated linear separability: L2-regularized logistic regression
// over stratified random train/test splits, fitted by Newton iterations to
// gradient tolerance 1e-6.
ProbeResult linear_probe(const MatD& real_emb, const MatD& sim_emb, int splits = 5,
                         double test_frac = 0.2, uint64_t seed = 0, double l2_c = 1.0);

// Spearman rank correlation with mean ranks on ties. Constant inputs are an
// error (the correlation is undefined).
double spearman(std::span<const double> x, std::span<const double> y);

// dataset -> simulator -> metric value
using MetricTable = std::map<std::string, std::map<std::string, double>>;

struct AblationCorrelation {
    std::vector<std::string> variants;
    MatD rho;  // pairwise Spearman over z-scored, concatenated values
};

// Within each (variant, dataset) the metric values are z-scored (population
// std), datasets are concatenated in sorted order, then Spearman correlation
// is computed per variant pair. Every variant must cover the same datasets
// and simulators.
AblationCorrelation ablation_correlation(const std::map<std::string, MetricTable>& by_variant);

}  // namespace bgap
