#include "bgap/probes.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "bgap/error.hpp"
#include "bgap/rng.hpp"

namespace bgap {

std::vector<Triplet> sample_triplets(const std::vector<int>& labels,
                                     const std::vector<std::string>& descriptions, int n,
                                     uint64_t seed, const std::vector<std::string>* item_ids) {
    if (labels.size() != descriptions.size())
        throw ValidationError("sample_triplets: labels/descriptions size mismatch");
    if (n < 1) throw ValidationError("sample_triplets: n must be >= 1");

    std::map<int, std::vector<size_t>> members;
    for (size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);

    std::vector<int> pair_clusters;  // clusters able to donate the matched pair
    for (const auto& [c, m] : members)
        if (m.size() >= 2) pair_clusters.push_back(c);

    bool has_outsider = false;
    for (int c : pair_clusters)
        if (members[c].size() < labels.size()) has_outsider = true;
    if (pair_clusters.empty() || !has_outsider)
        throw ValidationError(
            "sample_triplets: need a cluster with >= 2 members and an item outside it");

    auto id_of = [&](size_t i) {
        return item_ids && i < item_ids->size() ? (*item_ids)[i] : std::to_string(i);
    };

    Rng rng(seed);
    std::vector<Triplet> out;
    out.reserve(size_t(n));
    for (int t = 0; t < n; ++t) {
        int same;
        size_t a, b, odd;
        for (;;) {
            same = pair_clusters[rng.below(pair_clusters.size())];
            const auto& m = members[same];
            if (m.size() == labels.size()) continue;  // nothing outside this cluster
            a = m[rng.below(m.size())];
            do {
                b = m[rng.below(m.size())];
            } while (b == a);
            do {
                odd = rng.below(labels.size());
            } while (labels[odd] == same);
            break;
        }

        Triplet tri;
        tri.id = "t" + std::to_string(t);
        tri.same_cluster = same;
        tri.odd_cluster = labels[odd];

        std::array<size_t, 3> order = {a, b, odd};
        // Fisher-Yates over the three positions
        for (int i = 2; i > 0; --i) {
            int j = int(rng.below(uint64_t(i) + 1));
            std::swap(order[size_t(i)], order[size_t(j)]);
        }
        for (int i = 0; i < 3; ++i) {
            tri.item_ids[size_t(i)] = id_of(order[size_t(i)]);
            tri.texts[size_t(i)] = descriptions[order[size_t(i)]];
            if (order[size_t(i)] == odd) tri.answer_index = i;
        }
        out.push_back(std::move(tri));
    }
    return out;
}

double fleiss_kappa(const std::vector<std::vector<int>>& counts) {
    if (counts.empty()) throw ValidationError("fleiss_kappa: no items");
    size_t n_cat = counts.front().size();
    long m = std::accumulate(counts.front().begin(), counts.front().end(), 0L);
    if (m < 2) throw ValidationError("fleiss_kappa: need at least 2 raters");

    double p_bar = 0;
    std::vector<double> p_cat(n_cat, 0.0);
    for (const auto& row : counts) {
        if (row.size() != n_cat) throw ValidationError("fleiss_kappa: ragged count table");
        long row_sum = std::accumulate(row.begin(), row.end(), 0L);
        if (row_sum != m)
            throw ValidationError("fleiss_kappa: all items must have the same rater count");
        double pi = 0;
        for (size_t j = 0; j < n_cat; ++j) {
            pi += double(row[j]) * (double(row[j]) - 1.0);
            p_cat[j] += double(row[j]);
        }
        p_bar += pi / (double(m) * (double(m) - 1.0));
    }
    p_bar /= double(counts.size());
    double pe = 0;
    for (double c : p_cat) {
        double pj = c / (double(m) * double(counts.size()));
        pe += pj * pj;
    }
    // All raters in one category on every item: perfect agreement by
    // convention (the chance-corrected form is 0/0).
    if (1.0 - pe < 1e-12) return 1.0;
    return (p_bar - pe) / (1.0 - pe);
}

AnnotationScore score_annotations(const std::vector<Triplet>& triplets,
                                  const AnnotationSheet& sheet) {
    if (sheet.choices.size() != triplets.size())
        throw ValidationError("score_annotations: sheet row count != triplet count");
    if (triplets.empty()) throw ValidationError("score_annotations: no triplets");
    size_t raters = sheet.choices.front().size();
    if (raters == 0) throw ValidationError("score_annotations: no annotators");

    long correct = 0;
    std::vector<std::vector<int>> counts(triplets.size(), std::vector<int>(3, 0));
    for (size_t t = 0; t < triplets.size(); ++t) {
        if (sheet.choices[t].size() != raters)
            throw ValidationError("score_annotations: sheet is not rectangular (triplet " +
                                  std::to_string(t) + ")");
        for (int choice : sheet.choices[t]) {
            if (choice < 0 || choice > 2)
                throw ValidationError("score_annotations: choice out of range 0..2");
            if (choice == triplets[t].answer_index) ++correct;
            ++counts[t][size_t(choice)];
        }
    }
    AnnotationScore score;
    score.accuracy = double(correct) / double(triplets.size() * raters);
    score.kappa = fleiss_kappa(counts);
    return score;
}

namespace {

// L2-regularized logistic regression by Newton's method with step halving.
// Returns d+1 weights, intercept last and unpenalized.
VecD fit_logreg(const MatD& x, const std::vector<int>& y, double l2_c, double grad_tol) {
    const Eigen::Index n = x.rows(), d = x.cols();
    VecD w = VecD::Zero(d + 1);
    double inv_c = 1.0 / l2_c;

    auto loss_of = [&](const VecD& wv) {
        double loss = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double z = x.row(i).dot(wv.head(d)) + wv(d);
            // log(1 + exp(-margin)) computed stably
            double margin = (y[size_t(i)] > 0 ? z : -z);
            loss += margin > 0 ? std::log1p(std::exp(-margin)) : -margin + std::log1p(std::exp(margin));
        }
        return loss + 0.5 * inv_c * wv.head(d).squaredNorm();
    };

    double loss = loss_of(w);
    for (int iter = 0; iter < 100; ++iter) {
        VecD z = x * w.head(d) + VecD::Constant(n, w(d));
        VecD p = (1.0 / (1.0 + (-z.array()).exp())).matrix();
        VecD resid(n);
        for (Eigen::Index i = 0; i < n; ++i) resid(i) = p(i) - double(y[size_t(i)]);

        VecD grad(d + 1);
        grad.head(d) = x.transpose() * resid + inv_c * w.head(d);
        grad(d) = resid.sum();
        if (grad.lpNorm<Eigen::Infinity>() <= grad_tol) break;

        VecD s = (p.array() * (1.0 - p.array())).cwiseMax(1e-10).matrix();
        Eigen::MatrixXd h(d + 1, d + 1);
        h.topLeftCorner(d, d) = x.transpose() * s.asDiagonal() * x;
        h.topLeftCorner(d, d).diagonal().array() += inv_c;
        VecD xs = x.transpose() * s;
        h.topRightCorner(d, 1) = xs;
        h.bottomLeftCorner(1, d) = xs.transpose();
        h(d, d) = s.sum();

        VecD step = h.ldlt().solve(grad);
        double scale = 1.0;
        for (int half = 0; half < 30; ++half) {
            VecD cand = w - scale * step;
            double cand_loss = loss_of(cand);
            if (cand_loss <= loss + 1e-12) {
                w = std::move(cand);
                loss = cand_loss;
                break;
            }
            scale *= 0.5;
        }
    }
    return w;
}

}  // namespace

ProbeResult linear_probe(const MatD& real_emb, const MatD& sim_emb, int splits,
                         double test_frac, uint64_t seed, double l2_c) {
    if (real_emb.rows() == 0 || sim_emb.rows() == 0)
        throw ValidationError("linear_probe: both classes must be non-empty");
    if (real_emb.cols() != sim_emb.cols())
        throw ValidationError("linear_probe: dimension mismatch");
    if (splits < 1) throw ValidationError("linear_probe: splits must be >= 1");
    if (!(test_frac > 0 && test_frac < 1))
        throw ValidationError("linear_probe: test_frac must be in (0,1)");
    if (real_emb.rows() < splits || sim_emb.rows() < splits)
        throw ValidationError("linear_probe: a class has fewer members than splits");

    const Eigen::Index n_real = real_emb.rows(), n_sim = sim_emb.rows();
    const Eigen::Index d = real_emb.cols();

    ProbeResult res;
    res.seed = seed;
    res.l2_c = l2_c;

    for (int s = 0; s < splits; ++s) {
        Rng rng(Rng::derive(seed, uint64_t(s)));

        // stratified shuffle: test items drawn per class so the class ratio
        // is preserved exactly when divisible, within one item otherwise
        auto pick_test = [&](Eigen::Index n_class) {
            std::vector<Eigen::Index> idx(static_cast<size_t>(n_class));
            std::iota(idx.begin(), idx.end(), Eigen::Index(0));
            for (size_t i = idx.size() - 1; i > 0; --i) {
                size_t j = rng.below(i + 1);
                std::swap(idx[i], idx[j]);
            }
            Eigen::Index n_test = Eigen::Index(std::llround(test_frac * double(n_class)));
            n_test = std::clamp<Eigen::Index>(n_test, 1, n_class - 1);
            return std::pair{std::vector<Eigen::Index>(idx.begin(), idx.begin() + n_test),
                             std::vector<Eigen::Index>(idx.begin() + n_test, idx.end())};
        };
        auto [test_r, train_r] = pick_test(n_real);
        auto [test_s, train_s] = pick_test(n_sim);

        MatD x_train(Eigen::Index(train_r.size() + train_s.size()), d);
        std::vector<int> y_train;
        Eigen::Index row = 0;
        for (auto i : train_r) {
            x_train.row(row++) = real_emb.row(i);
            y_train.push_back(0);
        }
        for (auto i : train_s) {
            x_train.row(row++) = sim_emb.row(i);
            y_train.push_back(1);
        }

        VecD w = fit_logreg(x_train, y_train, l2_c, 1e-6);

        res.split_test_counts.emplace_back(long(test_r.size()), long(test_s.size()));
        long correct = 0;
        long total = long(test_r.size() + test_s.size());
        for (auto i : test_r)
            if (real_emb.row(i).dot(w.head(d)) + w(d) < 0) ++correct;
        for (auto i : test_s)
            if (sim_emb.row(i).dot(w.head(d)) + w(d) >= 0) ++correct;
        res.split_accuracies.push_back(double(correct) / double(total));
    }

    res.mean_accuracy =
        std::accumulate(res.split_accuracies.begin(), res.split_accuracies.end(), 0.0) /
        double(res.split_accuracies.size());
    return res;
}

namespace {

std::vector<double> average_ranks(std::span<const double> x) {
    size_t n = x.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t(0));
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
        double mean_rank = 0.5 * (double(i) + double(j)) + 1.0;  // 1-based
        for (size_t t = i; t <= j; ++t) ranks[order[t]] = mean_rank;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ValidationError("spearman: length mismatch");
    if (x.size() < 2) throw ValidationError("spearman: need at least 2 points");

    auto rx = average_ranks(x);
    auto ry = average_ranks(y);

    double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / double(rx.size());
    double my = std::accumulate(ry.begin(), ry.end(), 0.0) / double(ry.size());
    double sxy = 0, sxx = 0, syy = 0;
    for (size_t i = 0; i < rx.size(); ++i) {
        double dx = rx[i] - mx, dy = ry[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0 || syy == 0)
        throw ValidationError("spearman: undefined for a constant input vector");
    return sxy / std::sqrt(sxx * syy);
}

AblationCorrelation ablation_correlation(const std::map<std::string, MetricTable>& by_variant) {
    if (by_variant.size() < 2)
        throw ValidationError("ablation_correlation: need at least 2 variants");

    // All variants must cover identical (dataset, simulator) grids.
    const MetricTable& ref = by_variant.begin()->second;
    for (const auto& [variant, table] : by_variant) {
        if (table.size() != ref.size())
            throw ValidationError("ablation_correlation: dataset sets differ (" + variant + ")");
        for (const auto& [ds, sims] : ref) {
            auto it = table.find(ds);
            if (it == table.end() || it->second.size() != sims.size())
                throw ValidationError("ablation_correlation: simulator sets differ in dataset " +
                                      ds);
            for (const auto& [sim, _] : sims)
                if (!it->second.count(sim))
                    throw ValidationError("ablation_correlation: simulator " + sim +
                                          " missing from variant " + variant);
        }
    }

    auto zscored_concat = [&](const MetricTable& table) {
        std::vector<double> out;
        for (const auto& [ds, sims] : table) {
            std::vector<double> vals;
            for (const auto& [sim, v] : sims) vals.push_back(v);
            double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / double(vals.size());
            double var = 0;
            for (double v : vals) var += (v - mean) * (v - mean);
            double sd = std::sqrt(var / double(vals.size()));
            if (sd == 0)
                throw ValidationError("ablation_correlation: constant metric in dataset " + ds);
            for (double v : vals) out.push_back((v - mean) / sd);
        }
        return out;
    };

    AblationCorrelation corr;
    std::vector<std::vector<double>> z;
    for (const auto& [variant, table] : by_variant) {
        corr.variants.push_back(variant);
        z.push_back(zscored_concat(table));
    }
    size_t v = corr.variants.size();
    corr.rho = MatD::Identity(Eigen::Index(v), Eigen::Index(v));
    for (size_t i = 0; i < v; ++i)
        for (size_t j = i + 1; j < v; ++j) {
            double r = spearman(z[i], z[j]);
            corr.rho(Eigen::Index(i), Eigen::Index(j)) = r;
            corr.rho(Eigen::Index(j), Eigen::Index(i)) = r;
        }
    return corr;
}

}  // namespace bgap
