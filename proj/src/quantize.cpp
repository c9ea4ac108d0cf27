#include "bgap/quantize.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "bgap/error.hpp"
#include "bgap/rng.hpp"
#include "json.hpp"

namespace bgap {

using nlohmann::json;

MatD l2_normalize(const MatD& m, const std::vector<std::string>* row_ids) {
    MatD out = m;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        double norm = out.row(i).norm();
        if (norm == 0.0) {
            std::string who = row_ids && size_t(i) < row_ids->size()
                                  ? (*row_ids)[size_t(i)]
                                  : ("row " + std::to_string(i));
            throw ValidationError("l2_normalize: zero vector at " + who);
        }
        out.row(i) /= norm;
    }
    return out;
}

MatD PcaModel::transform(const MatD& m) const {
    if (m.cols() != mean.size())
        throw ValidationError("pca transform: dimension mismatch");
    return (m.rowwise() - mean.transpose()) * components.transpose();
}

MatD PcaModel::inverse_transform(const MatD& z) const {
    if (z.cols() != components.rows())
        throw ValidationError("pca inverse transform: dimension mismatch");
    return (z * components).rowwise() + mean.transpose();
}

PcaModel fit_pca(const MatD& m, double target_ratio) {
    if (m.rows() < 2) throw ValidationError("fit_pca: need at least 2 rows");
    if (!(target_ratio > 0.0 && target_ratio <= 1.0))
        throw ValidationError("fit_pca: target_ratio must be in (0, 1]");

    PcaModel model;
    model.target_ratio = target_ratio;
    model.mean = m.colwise().mean();
    MatD centered = m.rowwise() - model.mean.transpose();

    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
    VecD sv = svd.singularValues();
    VecD var = sv.array().square();
    double total = var.sum();
    if (total <= 0.0)
        throw ValidationError("fit_pca: input has zero variance");

    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < var.size(); ++i)
        if (var(i) > 0) rank = i + 1;

    Eigen::Index r = rank;
    double cum = 0;
    for (Eigen::Index i = 0; i < rank; ++i) {
        cum += var(i) / total;
        if (cum >= target_ratio - 1e-12) {
            r = i + 1;
            break;
        }
    }

    Eigen::MatrixXd v = svd.matrixV().leftCols(r);
    // Deterministic sign: largest-|coefficient| entry of each component is
    // made positive, so refits of identical data agree exactly.
    for (Eigen::Index j = 0; j < r; ++j) {
        Eigen::Index arg = 0;
        v.col(j).cwiseAbs().maxCoeff(&arg);
        if (v(arg, j) < 0) v.col(j) = -v.col(j);
    }
    model.components = v.transpose();
    model.explained_variance_ratio = (var.head(r) / total).eval();
    return model;
}

std::string to_string(ClusterAlgorithm a) {
    switch (a) {
        case ClusterAlgorithm::kmeans: return "kmeans";
        case ClusterAlgorithm::gmm: return "gmm";
        default: return "agglomerative";
    }
}

ClusterAlgorithm cluster_algorithm_from_string(const std::string& s) {
    if (s == "kmeans") return ClusterAlgorithm::kmeans;
    if (s == "gmm") return ClusterAlgorithm::gmm;
    if (s == "agglomerative" || s == "ward") return ClusterAlgorithm::agglomerative;
    throw ValidationError("unknown clustering algorithm: " + s);
}

namespace {

// Nearest centroid per row; ties go to the lowest index. Returns labels and
// squared distances. Blocked GEMM keeps the distance buffer small.
void nearest_centroids(const MatD& m, const MatD& centroids, std::vector<int>& labels,
                       std::vector<double>& dist_sq) {
    const Eigen::Index n = m.rows(), k = centroids.rows();
    labels.assign(size_t(n), 0);
    dist_sq.assign(size_t(n), 0.0);
    VecD c_sq = centroids.rowwise().squaredNorm();

    const Eigen::Index block = 4096;
    for (Eigen::Index start = 0; start < n; start += block) {
        Eigen::Index len = std::min(block, n - start);
        Eigen::MatrixXd prod = m.middleRows(start, len) * centroids.transpose();
        for (Eigen::Index i = 0; i < len; ++i) {
            double row_sq = m.row(start + i).squaredNorm();
            int best = 0;
            double best_d = row_sq - 2.0 * prod(i, 0) + c_sq(0);
            for (Eigen::Index j = 1; j < k; ++j) {
                double d = row_sq - 2.0 * prod(i, j) + c_sq(j);
                if (d < best_d) {
                    best_d = d;
                    best = int(j);
                }
            }
            labels[size_t(start + i)] = best;
            dist_sq[size_t(start + i)] = std::max(0.0, best_d);
        }
    }
}

MatD kmeans_pp_init(const MatD& m, int k, Rng& rng) {
    const Eigen::Index n = m.rows();
    MatD centers(k, m.cols());
    std::vector<double> min_d(size_t(n), std::numeric_limits<double>::infinity());

    Eigen::Index first = Eigen::Index(rng.below(uint64_t(n)));
    centers.row(0) = m.row(first);
    for (int c = 1; c < k; ++c) {
        const auto& prev = centers.row(c - 1);
        double total = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double d = (m.row(i) - prev).squaredNorm();
            if (d < min_d[size_t(i)]) min_d[size_t(i)] = d;
            total += min_d[size_t(i)];
        }
        Eigen::Index pick;
        if (total <= 0) {
            pick = Eigen::Index(rng.below(uint64_t(n)));
        } else {
            double target = rng.next01() * total;
            double acc = 0;
            pick = n - 1;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += min_d[size_t(i)];
                if (acc >= target) {
                    pick = i;
                    break;
                }
            }
        }
        centers.row(c) = m.row(pick);
    }
    return centers;
}

struct LloydResult {
    MatD centroids;
    std::vector<int> labels;
    double objective = 0;
    std::vector<double> trace;
};

LloydResult lloyd(const MatD& m, MatD centroids, int iters) {
    const Eigen::Index n = m.rows(), d = m.cols();
    const int k = int(centroids.rows());

    LloydResult res;
    std::vector<double> dist_sq;
    nearest_centroids(m, centroids, res.labels, dist_sq);
    double obj = std::accumulate(dist_sq.begin(), dist_sq.end(), 0.0);
    res.trace.push_back(obj);

    std::vector<long> counts(static_cast<size_t>(k));
    for (int it = 0; it < iters; ++it) {
        // mean update
        MatD sums = MatD::Zero(k, d);
        std::fill(counts.begin(), counts.end(), 0L);
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.row(res.labels[size_t(i)]) += m.row(i);
            ++counts[size_t(res.labels[size_t(i)])];
        }
        for (int c = 0; c < k; ++c)
            if (counts[size_t(c)] > 0) centroids.row(c) = sums.row(c) / double(counts[size_t(c)]);

        // Empty-cluster repair: reseat each empty centroid at the point
        // farthest from its assigned centroid, keeping k fixed.
        for (int c = 0; c < k; ++c) {
            if (counts[size_t(c)] > 0) continue;
            Eigen::Index far = 0;
            double far_d = -1;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (dist_sq[size_t(i)] > far_d) {
                    far_d = dist_sq[size_t(i)];
                    far = i;
                }
            }
            centroids.row(c) = m.row(far);
            --counts[size_t(res.labels[size_t(far)])];
            res.labels[size_t(far)] = c;
            counts[size_t(c)] = 1;
            dist_sq[size_t(far)] = 0.0;
        }

        std::vector<int> new_labels;
        nearest_centroids(m, centroids, new_labels, dist_sq);
        double new_obj = std::accumulate(dist_sq.begin(), dist_sq.end(), 0.0);
        res.trace.push_back(new_obj);
        if (new_obj > obj + 1e-9 * std::max(1.0, obj))
            throw Error("k-means objective increased; numerical invariant violated");
        bool converged = (new_labels == res.labels);
        res.labels = std::move(new_labels);
        obj = new_obj;
        if (converged) break;
    }
    res.centroids = std::move(centroids);
    res.objective = obj;
    return res;
}

ClusteringModel fit_kmeans(const MatD& m, const ClusterConfig& config) {
    ClusteringModel model;
    model.algorithm = ClusterAlgorithm::kmeans;
    model.k = config.k;
    model.seed = config.seed;

    int restarts = config.initial_centroids ? 1 : config.restarts;
    LloydResult best;
    for (int r = 0; r < restarts; ++r) {
        MatD init;
        if (config.initial_centroids) {
            init = *config.initial_centroids;
            if (init.rows() != config.k || init.cols() != m.cols())
                throw ValidationError("initial_centroids shape mismatch");
        } else {
            Rng rng(Rng::derive(config.seed, uint64_t(r)));
            init = kmeans_pp_init(m, config.k, rng);
        }
        LloydResult run = lloyd(m, std::move(init), config.iters);
        model.restart_objectives.push_back(run.objective);
        model.objective_traces.push_back(run.trace);
        if (r == 0 || run.objective < best.objective) {
            best = std::move(run);
            model.chosen_restart = r;
        }
    }
    model.centroids = std::move(best.centroids);
    model.training_labels = std::move(best.labels);
    model.objective = best.objective;
    return model;
}

struct GmmState {
    MatD means;
    std::vector<MatD> covs;
    VecD weights;
    double loglik = 0;
    std::vector<double> trace;
};

constexpr double kCovReg = 1e-6;

// log responsibilities + total log-likelihood for the current parameters.
double gmm_e_step(const MatD& m, const GmmState& st, Eigen::MatrixXd& log_resp) {
    const Eigen::Index n = m.rows(), d = m.cols();
    const int k = int(st.means.rows());
    log_resp.resize(n, k);

    for (int j = 0; j < k; ++j) {
        Eigen::LLT<Eigen::MatrixXd> llt(st.covs[size_t(j)]);
        if (llt.info() != Eigen::Success)
            throw Error("gmm: covariance not positive definite despite regularization");
        double logdet = 0;
        for (Eigen::Index i = 0; i < d; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
        double log_norm = -0.5 * (double(d) * std::log(2.0 * M_PI) + logdet);
        double log_w = std::log(std::max(st.weights(j), 1e-300));

        MatD centered = m.rowwise() - st.means.row(j);
        // solve L y = xᵀ for the Mahalanobis quadratic form
        Eigen::MatrixXd y =
            llt.matrixL().solve(centered.transpose());
        for (Eigen::Index i = 0; i < n; ++i)
            log_resp(i, j) = log_w + log_norm - 0.5 * y.col(i).squaredNorm();
    }

    double total = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double mx = log_resp.row(i).maxCoeff();
        double sum = (log_resp.row(i).array() - mx).exp().sum();
        double lse = mx + std::log(sum);
        total += lse;
        log_resp.row(i).array() -= lse;
    }
    return total;
}

GmmState fit_gmm_once(const MatD& m, int k, int iters, uint64_t seed) {
    const Eigen::Index n = m.rows(), d = m.cols();
    Rng rng(seed);

    GmmState st;
    st.means = kmeans_pp_init(m, k, rng);
    double base_var = 0;
    VecD mean = m.colwise().mean();
    for (Eigen::Index i = 0; i < n; ++i)
        base_var += (m.row(i) - mean.transpose()).squaredNorm();
    base_var = std::max(base_var / double(n * d), kCovReg);
    st.covs.assign(size_t(k), MatD(Eigen::MatrixXd::Identity(d, d) * base_var));
    st.weights = VecD::Constant(k, 1.0 / k);

    Eigen::MatrixXd log_resp;
    double prev = -std::numeric_limits<double>::infinity();
    for (int it = 0; it < iters; ++it) {
        double ll = gmm_e_step(m, st, log_resp);
        if (ll + 1e-8 * std::max(1.0, std::abs(prev)) < prev)
            throw Error("gmm: log-likelihood decreased; EM invariant violated");
        st.trace.push_back(ll);
        st.loglik = ll;
        if (std::isfinite(prev) && std::abs(ll - prev) < 1e-9 * std::max(1.0, std::abs(ll)))
            break;
        prev = ll;

        Eigen::MatrixXd resp = log_resp.array().exp();
        for (int j = 0; j < k; ++j) {
            double nj = resp.col(j).sum();
            if (nj < 1e-10) {
                // Starved component: reseat on a random point with a broad
                // covariance; the next E-step rebalances.
                Eigen::Index pick = Eigen::Index(rng.below(uint64_t(n)));
                st.means.row(j) = m.row(pick);
                st.covs[size_t(j)] = Eigen::MatrixXd::Identity(d, d) * base_var;
                st.weights(j) = 1.0 / double(n);
                continue;
            }
            st.weights(j) = nj / double(n);
            VecD mu = (resp.col(j).transpose() * m).transpose() / nj;
            st.means.row(j) = mu.transpose();
            MatD centered = m.rowwise() - mu.transpose();
            Eigen::MatrixXd cov = centered.transpose() * resp.col(j).asDiagonal() * centered / nj;
            cov.diagonal().array() += kCovReg;
            st.covs[size_t(j)] = cov;
        }
        st.weights /= st.weights.sum();
    }
    return st;
}

ClusteringModel fit_gmm(const MatD& m, const ClusterConfig& config) {
    ClusteringModel model;
    model.algorithm = ClusterAlgorithm::gmm;
    model.k = config.k;
    model.seed = config.seed;

    GmmState best;
    bool have = false;
    for (int r = 0; r < config.restarts; ++r) {
        GmmState st = fit_gmm_once(m, config.k, config.iters, Rng::derive(config.seed, uint64_t(r)));
        model.restart_objectives.push_back(st.loglik);
        model.objective_traces.push_back(st.trace);
        if (!have || st.loglik > best.loglik) {
            best = std::move(st);
            model.chosen_restart = r;
            have = true;
        }
    }
    model.centroids = std::move(best.means);
    model.covariances = std::move(best.covs);
    model.weights = std::move(best.weights);
    model.objective = best.loglik;
    model.training_labels = assign(model, m);
    return model;
}

// Ward linkage via the nearest-neighbor chain algorithm, O(n^2) time and
// memory, then a cut at k clusters. Sized for ablation-scale inputs.
ClusteringModel fit_agglomerative(const MatD& m, const ClusterConfig& config) {
    const Eigen::Index n = m.rows();
    if (n > 20000)
        throw ValidationError("agglomerative: input too large (O(n^2) memory)");

    std::vector<double> dist(size_t(n) * size_t(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        dist[size_t(i) * size_t(n) + size_t(i)] = 0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double d = (m.row(i) - m.row(j)).squaredNorm();
            dist[size_t(i) * size_t(n) + size_t(j)] = d;
            dist[size_t(j) * size_t(n) + size_t(i)] = d;
        }
    }

    std::vector<bool> active(size_t(n), true);
    std::vector<double> size_of(size_t(n), 1.0);
    std::vector<int> node_of(static_cast<size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) node_of[size_t(i)] = int(i);

    struct Merge {
        int node_a, node_b, new_node;
        double height;
    };
    std::vector<Merge> merges;
    merges.reserve(size_t(n) - 1);

    std::vector<int> chain;
    auto nearest = [&](int x) {
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (int c = 0; c < int(n); ++c) {
            if (!active[size_t(c)] || c == x) continue;
            double d = dist[size_t(x) * size_t(n) + size_t(c)];
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        return best;
    };

    while (int(merges.size()) < int(n) - 1) {
        if (chain.empty()) {
            for (int c = 0; c < int(n); ++c)
                if (active[size_t(c)]) {
                    chain.push_back(c);
                    break;
                }
        }
        for (;;) {
            int x = chain.back();
            int y = nearest(x);
            if (chain.size() >= 2 && y == chain[chain.size() - 2]) {
                chain.pop_back();
                chain.pop_back();
                int a = std::min(x, y), b = std::max(x, y);
                double height = dist[size_t(a) * size_t(n) + size_t(b)];
                double na = size_of[size_t(a)], nb = size_of[size_t(b)];
                for (int c = 0; c < int(n); ++c) {
                    if (!active[size_t(c)] || c == a || c == b) continue;
                    double nc = size_of[size_t(c)];
                    double dac = dist[size_t(a) * size_t(n) + size_t(c)];
                    double dbc = dist[size_t(b) * size_t(n) + size_t(c)];
                    double d = ((na + nc) * dac + (nb + nc) * dbc - nc * height) /
                               (na + nb + nc);
                    dist[size_t(a) * size_t(n) + size_t(c)] = d;
                    dist[size_t(c) * size_t(n) + size_t(a)] = d;
                }
                int new_node = int(n) + int(merges.size());
                merges.push_back({node_of[size_t(a)], node_of[size_t(b)], new_node, height});
                node_of[size_t(a)] = new_node;
                size_of[size_t(a)] = na + nb;
                active[size_t(b)] = false;
                break;
            }
            chain.push_back(y);
        }
    }

    // Cut: apply the n-k lowest merges (stable by height) through a parent
    // forest over dendrogram node ids.
    std::vector<size_t> order(merges.size());
    std::iota(order.begin(), order.end(), size_t(0));
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return merges[a].height < merges[b].height;
    });
    std::vector<int> parent(size_t(2 * n - 1), -1);
    for (size_t t = 0; t < size_t(int(n) - config.k); ++t) {
        const Merge& mg = merges[order[t]];
        parent[size_t(mg.node_a)] = mg.new_node;
        parent[size_t(mg.node_b)] = mg.new_node;
    }
    auto root = [&](int x) {
        while (parent[size_t(x)] != -1) x = parent[size_t(x)];
        return x;
    };

    std::vector<int> labels(static_cast<size_t>(n));
    std::vector<int> label_of_root(size_t(2 * n - 1), -1);
    int next_label = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        int r = root(int(i));
        if (label_of_root[size_t(r)] == -1) label_of_root[size_t(r)] = next_label++;
        labels[size_t(i)] = label_of_root[size_t(r)];
    }
    if (next_label != config.k)
        throw Error("agglomerative cut produced " + std::to_string(next_label) +
                    " clusters, expected " + std::to_string(config.k));

    ClusteringModel model;
    model.algorithm = ClusterAlgorithm::agglomerative;
    model.k = config.k;
    model.seed = config.seed;
    model.centroids = MatD::Zero(config.k, m.cols());
    std::vector<long> counts(size_t(config.k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
        model.centroids.row(labels[size_t(i)]) += m.row(i);
        ++counts[size_t(labels[size_t(i)])];
    }
    double wcss = 0;
    for (int c = 0; c < config.k; ++c) model.centroids.row(c) /= double(counts[size_t(c)]);
    for (Eigen::Index i = 0; i < n; ++i)
        wcss += (m.row(i) - model.centroids.row(labels[size_t(i)])).squaredNorm();
    model.objective = wcss;
    model.training_labels = std::move(labels);
    model.restart_objectives = {wcss};
    model.objective_traces = {{wcss}};
    return model;
}

}  // namespace

ClusteringModel fit_clusters(const MatD& m, const ClusterConfig& config) {
    if (config.k < 1) throw ValidationError("fit_clusters: k must be >= 1");
    if (!m.allFinite()) throw ValidationError("fit_clusters: non-finite values in input");
    if (config.algorithm != ClusterAlgorithm::gmm && m.rows() < config.k)
        throw ValidationError("fit_clusters: need at least k=" + std::to_string(config.k) +
                              " points, got " + std::to_string(m.rows()));
    if (config.algorithm == ClusterAlgorithm::gmm && m.rows() < config.k)
        throw ValidationError("fit_clusters: need at least k points for gmm");

    switch (config.algorithm) {
        case ClusterAlgorithm::kmeans: return fit_kmeans(m, config);
        case ClusterAlgorithm::gmm: return fit_gmm(m, config);
        default: return fit_agglomerative(m, config);
    }
}

std::vector<int> assign(const ClusteringModel& model, const MatD& m) {
    if (m.cols() != model.centroids.cols())
        throw ValidationError("assign: dimension mismatch: input has " +
                              std::to_string(m.cols()) + " columns, model expects " +
                              std::to_string(model.centroids.cols()));

    if (model.algorithm == ClusterAlgorithm::gmm) {
        GmmState st;
        st.means = model.centroids;
        st.covs = model.covariances;
        st.weights = model.weights;
        Eigen::MatrixXd log_resp;
        gmm_e_step(m, st, log_resp);
        std::vector<int> labels(static_cast<size_t>(m.rows()));
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            int best = 0;
            double best_v = log_resp(i, 0);
            for (int j = 1; j < model.k; ++j) {
                if (log_resp(i, j) > best_v) {
                    best_v = log_resp(i, j);
                    best = j;
                }
            }
            labels[size_t(i)] = best;
        }
        return labels;
    }

    std::vector<int> labels;
    std::vector<double> dist_sq;
    nearest_centroids(m, model.centroids, labels, dist_sq);
    return labels;
}

std::vector<double> BehaviorHistogram::raw_probs() const {
    std::vector<double> out(counts.size(), 0.0);
    if (total > 0)
        for (size_t c = 0; c < counts.size(); ++c) out[c] = double(counts[c]) / double(total);
    return out;
}

BehaviorHistogram histogram(const std::vector<int>& labels, int k, double alpha) {
    if (k < 1) throw ValidationError("histogram: k must be >= 1");
    if (alpha < 0) alpha = 1.0 / double(k);

    BehaviorHistogram h;
    h.alpha = alpha;
    h.counts.assign(size_t(k), 0);
    for (int label : labels) {
        if (label < 0 || label >= k)
            throw ValidationError("histogram: label " + std::to_string(label) +
                                  " out of range [0, " + std::to_string(k) + ")");
        ++h.counts[size_t(label)];
    }
    h.total = long(labels.size());
    double denom = double(h.total) + double(k) * alpha;
    if (denom <= 0)
        throw ValidationError("histogram: empty labels with alpha = 0 leave probs undefined");
    h.probs.resize(size_t(k));
    for (size_t c = 0; c < size_t(k); ++c)
        h.probs[c] = (double(h.counts[c]) + alpha) / denom;
    return h;
}

QuantizeResult quantize_pooled(const std::vector<MatD>& corpora, const QuantizeConfig& config) {
    if (corpora.size() < 2)
        throw ValidationError("quantize_pooled: need at least two corpora");
    Eigen::Index total_rows = 0;
    Eigen::Index d = corpora.front().cols();
    for (const auto& c : corpora) {
        if (c.rows() == 0) throw ValidationError("quantize_pooled: empty corpus");
        if (c.cols() != d) throw ValidationError("quantize_pooled: dimension mismatch");
        total_rows += c.rows();
    }

    MatD pooled(total_rows, d);
    Eigen::Index at = 0;
    for (const auto& c : corpora) {
        pooled.middleRows(at, c.rows()) = c;
        at += c.rows();
    }

    QuantizeResult res;
    MatD normalized = l2_normalize(pooled);
    res.pca = fit_pca(normalized, config.target_ratio);
    MatD reduced = res.pca.transform(normalized);
    res.model = fit_clusters(reduced, config.cluster);
    std::vector<int> all_labels = assign(res.model, reduced);

    double alpha = config.alpha < 0 ? 1.0 / double(config.cluster.k) : config.alpha;
    at = 0;
    for (const auto& c : corpora) {
        std::vector<int> slice(all_labels.begin() + at, all_labels.begin() + at + c.rows());
        res.histograms.push_back(histogram(slice, config.cluster.k, alpha));
        res.labels.push_back(std::move(slice));
        at += c.rows();
    }
    return res;
}

void save_quantize_model(const std::string& path_prefix, const PcaModel& pca,
                         const ClusteringModel& model) {
    write_matrix(path_prefix + ".mean.bgm", to_float(MatD(pca.mean.transpose())));
    write_matrix(path_prefix + ".components.bgm", to_float(pca.components));
    write_matrix(path_prefix + ".centroids.bgm", to_float(model.centroids));
    json j;
    j["format"] = "behaviorgap-model-v1";
    j["algorithm"] = to_string(model.algorithm);
    j["k"] = model.k;
    j["seed"] = model.seed;
    j["objective"] = model.objective;
    j["chosen_restart"] = model.chosen_restart;
    j["pca"] = {{"target_ratio", pca.target_ratio},
                {"explained_variance_ratio",
                 std::vector<double>(pca.explained_variance_ratio.data(),
                                     pca.explained_variance_ratio.data() +
                                         pca.explained_variance_ratio.size())}};
    if (model.algorithm == ClusterAlgorithm::gmm) {
        j["weights"] = std::vector<double>(model.weights.data(),
                                           model.weights.data() + model.weights.size());
        MatD covs(model.k * model.centroids.cols(), model.centroids.cols());
        for (int c = 0; c < model.k; ++c)
            covs.middleRows(c * model.centroids.cols(), model.centroids.cols()) =
                model.covariances[size_t(c)];
        write_matrix(path_prefix + ".covariances.bgm", to_float(covs));
    }
    std::ofstream out(path_prefix + ".json", std::ios::trunc);
    if (!out) throw ValidationError("cannot write model header " + path_prefix + ".json");
    out << j.dump(2) << "\n";
}

std::pair<PcaModel, ClusteringModel> load_quantize_model(const std::string& path_prefix) {
    std::ifstream in(path_prefix + ".json");
    if (!in) throw ValidationError("cannot open model header " + path_prefix + ".json");
    json j = json::parse(in);
    if (j.value("format", std::string()) != "behaviorgap-model-v1")
        throw ValidationError("not a behaviorgap model: " + path_prefix);

    PcaModel pca;
    pca.target_ratio = j["pca"]["target_ratio"].get<double>();
    auto ratios = j["pca"]["explained_variance_ratio"].get<std::vector<double>>();
    pca.explained_variance_ratio =
        Eigen::Map<VecD>(ratios.data(), Eigen::Index(ratios.size()));
    pca.mean = to_double(read_matrix(path_prefix + ".mean.bgm").data).row(0).transpose();
    pca.components = to_double(read_matrix(path_prefix + ".components.bgm").data);

    ClusteringModel model;
    model.algorithm = cluster_algorithm_from_string(j["algorithm"].get<std::string>());
    model.k = j["k"].get<int>();
    model.seed = j["seed"].get<uint64_t>();
    model.objective = j["objective"].get<double>();
    model.chosen_restart = j.value("chosen_restart", 0);
    model.centroids = to_double(read_matrix(path_prefix + ".centroids.bgm").data);
    if (model.algorithm == ClusterAlgorithm::gmm) {
        auto w = j["weights"].get<std::vector<double>>();
        model.weights = Eigen::Map<VecD>(w.data(), Eigen::Index(w.size()));
        MatD covs = to_double(read_matrix(path_prefix + ".covariances.bgm").data);
        Eigen::Index dim = model.centroids.cols();
        for (int c = 0; c < model.k; ++c)
            model.covariances.push_back(covs.middleRows(c * dim, dim));
    }
    return {std::move(pca), std::move(model)};
}

}  // namespace bgap
