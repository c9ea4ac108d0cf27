#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bgap/matrix.hpp"
#include "bgap/quantize.hpp"

namespace bgap {

// KL(p || q) in nats, with 0*ln(0/q) = 0. q must be strictly positive
// wherever p is (callers smooth first). Compensated summation keeps k=500
// vectors within 1e-12 of direct-order oracles.
double kl(std::span<const double> p, std::span<const double> q);

// Jensen-Shannon divergence in nats: (KL(p||m) + KL(q||m)) / 2 with
// m = (p+q)/2. Zeros are allowed; bounded by ln 2.
double js(std::span<const double> p, std::span<const double> q);

struct DivergenceCurve {
    double c = 5.0;
    std::vector<double> lambdas;                    // strictly inside (0,1)
    std::vector<std::pair<double, double>> points;  // (x, y) in [0,1]^2
};

// Divergence-frontier score: for each lambda on a uniform interior grid,
// r = lambda*p + (1-lambda)*q and the frontier point is
// (exp(-c*KL(q||r)), exp(-c*KL(p||r))). The score is the trapezoidal area
// under the frontier augmented with (0,1) and (1,0), clamped to [0,1].
std::pair<double, DivergenceCurve> mauve(std::span<const double> p, std::span<const double> q,
                                         double c = 5.0, int grid_size = 99);

// Mean over real rows of the maximal cosine similarity to any sim row,
// computed on raw embeddings.
double nn_cosine(const MatD& real_emb, const MatD& sim_emb);

// lambda,x,y rows for external plotting.
void save_divergence_curve_csv(const std::string& path, const DivergenceCurve& curve);

struct GapMetrics {
    double kl_fwd = 0;  // KL(real || sim), smoothed histograms
    double kl_bwd = 0;  // KL(sim || real), smoothed histograms
    double js = 0;      // JS on the raw (unsmoothed) histograms
    double mauve = 0;   // frontier score on smoothed histograms
};

// The metric bundle convention for a real/sim histogram pair. Forward and
// backward KL require strictly positive references and use the smoothed
// probabilities; JS is taken on the raw frequencies, which keeps it
// comparable across smoothing levels while staying within its ln 2 bound.
GapMetrics metrics_from_histograms(const BehaviorHistogram& real, const BehaviorHistogram& sim,
                                   double mauve_c = 5.0, int grid_size = 99);

struct GapReport {
    double kl_fwd = 0;
    double kl_bwd = 0;
    double js = 0;
    double mauve = 0;
    double nn_sim = 0;
    int k = 0;
    double alpha = 0;
    std::vector<std::string> facet_subset;
    std::string real_name;
    std::string sim_name;
    uint64_t seed = 0;
};

// Quantizes the pair and computes the full metric bundle. NN similarity is
// computed on the raw (truncated, pre-PCA) embeddings.
GapReport gap_report(const MatD& real_emb, const MatD& sim_emb, const QuantizeConfig& config,
                     double mauve_c = 5.0, int grid_size = 99);

}  // namespace bgap
