#include "bgap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "bgap/error.hpp"

namespace bgap {

namespace {

// Kahan-compensated accumulator.
struct Kahan {
    double sum = 0, comp = 0;
    void add(double x) {
        double y = x - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
};

void check_distribution(std::span<const double> p, const char* name) {
    Kahan s;
    for (double v : p) {
        if (v < 0) throw ValidationError(std::string(name) + ": negative probability");
        s.add(v);
    }
    if (std::abs(s.sum - 1.0) > 1e-9)
        throw ValidationError(std::string(name) + ": probabilities sum to " +
                              std::to_string(s.sum) + ", expected 1");
}

void check_pair(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size())
        throw ValidationError("distribution length mismatch: " + std::to_string(p.size()) +
                              " vs " + std::to_string(q.size()));
    check_distribution(p, "p");
    check_distribution(q, "q");
}

}  // namespace

double kl(std::span<const double> p, std::span<const double> q) {
    check_pair(p, q);
    Kahan acc;
    for (size_t c = 0; c < p.size(); ++c) {
        if (p[c] == 0.0) continue;
        if (q[c] <= 0.0)
            throw ValidationError("kl: q is zero at index " + std::to_string(c) +
                                  " where p > 0; smooth before calling");
        acc.add(p[c] * std::log(p[c] / q[c]));
    }
    return acc.sum;
}

double js(std::span<const double> p, std::span<const double> q) {
    check_pair(p, q);
    Kahan acc;
    for (size_t c = 0; c < p.size(); ++c) {
        double m = 0.5 * (p[c] + q[c]);
        if (p[c] > 0) acc.add(0.5 * p[c] * std::log(p[c] / m));
        if (q[c] > 0) acc.add(0.5 * q[c] * std::log(q[c] / m));
    }
    return acc.sum;
}

std::pair<double, DivergenceCurve> mauve(std::span<const double> p, std::span<const double> q,
                                         double c, int grid_size) {
    check_pair(p, q);
    if (c <= 0) throw ValidationError("mauve: scale c must be > 0");
    if (grid_size < 2) throw ValidationError("mauve: grid_size must be >= 2");

    DivergenceCurve curve;
    curve.c = c;
    std::vector<double> mix(p.size());
    for (int g = 1; g <= grid_size; ++g) {
        double lambda = double(g) / double(grid_size + 1);
        curve.lambdas.push_back(lambda);
        for (size_t i = 0; i < p.size(); ++i) mix[i] = lambda * p[i] + (1.0 - lambda) * q[i];
        double x = std::exp(-c * kl(q, mix));
        double y = std::exp(-c * kl(p, mix));
        curve.points.emplace_back(x, y);
    }

    // Integration points: frontier plus the (0,1) and (1,0) boundary anchors,
    // sorted by x ascending with y descending on ties so identical
    // distributions integrate to exactly 1.
    std::vector<std::pair<double, double>> pts = curve.points;
    pts.emplace_back(0.0, 1.0);
    pts.emplace_back(1.0, 0.0);
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second > b.second;
    });
    double area = 0;
    for (size_t i = 1; i < pts.size(); ++i) {
        double dx = pts[i].first - pts[i - 1].first;
        area += dx * 0.5 * (pts[i].second + pts[i - 1].second);
    }
    return {std::clamp(area, 0.0, 1.0), std::move(curve)};
}

double nn_cosine(const MatD& real_emb, const MatD& sim_emb) {
    if (real_emb.rows() == 0 || sim_emb.rows() == 0)
        throw ValidationError("nn_cosine: empty embedding set");
    if (real_emb.cols() != sim_emb.cols())
        throw ValidationError("nn_cosine: dimension mismatch");

    MatD a = l2_normalize(real_emb);
    MatD b = l2_normalize(sim_emb);

    Kahan total;
    const Eigen::Index block = 2048;
    for (Eigen::Index start = 0; start < a.rows(); start += block) {
        Eigen::Index len = std::min(block, a.rows() - start);
        Eigen::MatrixXd sims = a.middleRows(start, len) * b.transpose();
        for (Eigen::Index i = 0; i < len; ++i) total.add(sims.row(i).maxCoeff());
    }
    return total.sum / double(a.rows());
}

void save_divergence_curve_csv(const std::string& path, const DivergenceCurve& curve) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + path);
    out << "lambda,x,y\n" << std::setprecision(12);
    for (size_t i = 0; i < curve.lambdas.size(); ++i)
        out << curve.lambdas[i] << "," << curve.points[i].first << ","
            << curve.points[i].second << "\n";
}

GapMetrics metrics_from_histograms(const BehaviorHistogram& real, const BehaviorHistogram& sim,
                                   double mauve_c, int grid_size) {
    if (real.probs.size() != sim.probs.size())
        throw ValidationError("metrics_from_histograms: k mismatch");
    GapMetrics m;
    m.kl_fwd = kl(real.probs, sim.probs);
    m.kl_bwd = kl(sim.probs, real.probs);
    std::vector<double> raw_real = real.raw_probs();
    std::vector<double> raw_sim = sim.raw_probs();
    m.js = js(raw_real, raw_sim);
    m.mauve = mauve(real.probs, sim.probs, mauve_c, grid_size).first;
    return m;
}

GapReport gap_report(const MatD& real_emb, const MatD& sim_emb, const QuantizeConfig& config,
                     double mauve_c, int grid_size) {
    QuantizeResult q = quantize_pair(real_emb, sim_emb, config);
    GapMetrics m = metrics_from_histograms(q.histograms[0], q.histograms[1], mauve_c, grid_size);

    GapReport report;
    report.kl_fwd = m.kl_fwd;
    report.kl_bwd = m.kl_bwd;
    report.js = m.js;
    report.mauve = m.mauve;
    report.nn_sim = nn_cosine(real_emb, sim_emb);
    report.k = config.cluster.k;
    report.alpha = q.histograms[0].alpha;
    report.seed = config.cluster.seed;
    return report;
}

}  // namespace bgap
