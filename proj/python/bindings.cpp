// Python bindings for the behaviorgap numeric core.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "bgap/error.hpp"
#include "bgap/interpret.hpp"
#include "bgap/matrix.hpp"
#include "bgap/metrics.hpp"
#include "bgap/probes.hpp"
#include "bgap/quantize.hpp"

namespace py = pybind11;
using namespace bgap;

namespace {

ClusterConfig make_cluster_config(const std::string& algorithm, int k, int iters, int restarts,
                                  uint64_t seed) {
    ClusterConfig cfg;
    cfg.algorithm = cluster_algorithm_from_string(algorithm);
    cfg.k = k;
    cfg.iters = iters;
    cfg.restarts = restarts;
    cfg.seed = seed;
    return cfg;
}

py::dict histogram_dict(const BehaviorHistogram& h) {
    py::dict d;
    d["counts"] = h.counts;
    d["probs"] = h.probs;
    d["raw_probs"] = h.raw_probs();
    d["alpha"] = h.alpha;
    d["total"] = h.total;
    return d;
}

}  // namespace

PYBIND11_MODULE(behaviorgap, m) {
    m.doc() = "Distributional gap between real and simulated user behaviors";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

    m.def(
        "kl", [](const std::vector<double>& p, const std::vector<double>& q) { return kl(p, q); },
        py::arg("p"), py::arg("q"), "KL(p || q) in nats; q must be positive wherever p is");
    m.def(
        "js", [](const std::vector<double>& p, const std::vector<double>& q) { return js(p, q); },
        py::arg("p"), py::arg("q"), "Jensen-Shannon divergence in nats");
    m.def(
        "mauve",
        [](const std::vector<double>& p, const std::vector<double>& q, double c, int grid_size) {
            return mauve(p, q, c, grid_size).first;
        },
        py::arg("p"), py::arg("q"), py::arg("c") = 5.0, py::arg("grid_size") = 99,
        "Divergence-frontier score in [0, 1]");
    m.def(
        "mauve_curve",
        [](const std::vector<double>& p, const std::vector<double>& q, double c, int grid_size) {
            auto [score, curve] = mauve(p, q, c, grid_size);
            return py::make_tuple(score, curve.lambdas, curve.points);
        },
        py::arg("p"), py::arg("q"), py::arg("c") = 5.0, py::arg("grid_size") = 99,
        "(score, lambdas, frontier points)");
    m.def("nn_cosine", &nn_cosine, py::arg("real_emb"), py::arg("sim_emb"),
          "Mean nearest-neighbor cosine similarity from real rows into the sim set");

    m.def(
        "l2_normalize", [](const MatD& m) { return l2_normalize(m); }, py::arg("m"));

    py::class_<PcaModel>(m, "PcaModel")
        .def_readonly("mean", &PcaModel::mean)
        .def_readonly("components", &PcaModel::components)
        .def_property_readonly("explained_variance_ratio",
                               [](const PcaModel& p) {
                                   return std::vector<double>(
                                       p.explained_variance_ratio.data(),
                                       p.explained_variance_ratio.data() +
                                           p.explained_variance_ratio.size());
                               })
        .def_readonly("target_ratio", &PcaModel::target_ratio)
        .def_property_readonly("retained", &PcaModel::retained)
        .def("transform", &PcaModel::transform, py::arg("m"))
        .def("inverse_transform", &PcaModel::inverse_transform, py::arg("z"));

    m.def("fit_pca", &fit_pca, py::arg("m"), py::arg("target_ratio") = 0.90);

    py::class_<ClusteringModel>(m, "ClusteringModel")
        .def_property_readonly("algorithm",
                               [](const ClusteringModel& c) { return to_string(c.algorithm); })
        .def_readonly("k", &ClusteringModel::k)
        .def_readonly("seed", &ClusteringModel::seed)
        .def_readonly("centroids", &ClusteringModel::centroids)
        .def_readonly("objective", &ClusteringModel::objective)
        .def_readonly("training_labels", &ClusteringModel::training_labels)
        .def_readonly("chosen_restart", &ClusteringModel::chosen_restart)
        .def_readonly("restart_objectives", &ClusteringModel::restart_objectives)
        .def_readonly("objective_traces", &ClusteringModel::objective_traces);

    m.def(
        "fit_clusters",
        [](const MatD& m, const std::string& algorithm, int k, int iters, int restarts,
           uint64_t seed) {
            return fit_clusters(m, make_cluster_config(algorithm, k, iters, restarts, seed));
        },
        py::arg("m"), py::arg("algorithm") = "kmeans", py::arg("k") = 500,
        py::arg("iters") = 500, py::arg("restarts") = 5, py::arg("seed") = 0);

    m.def("assign", &assign, py::arg("model"), py::arg("m"),
          "Cluster labels for new points under a fitted model");

    m.def(
        "histogram",
        [](const std::vector<int>& labels, int k, double alpha) {
            return histogram_dict(histogram(labels, k, alpha));
        },
        py::arg("labels"), py::arg("k"), py::arg("alpha") = -1.0,
        "Laplace-smoothed behavior histogram; alpha < 0 selects 1/k");

    m.def(
        "quantize_pair",
        [](const MatD& real_emb, const MatD& sim_emb, const std::string& algorithm, int k,
           int iters, int restarts, uint64_t seed, double alpha, double target_ratio) {
            QuantizeConfig cfg;
            cfg.cluster = make_cluster_config(algorithm, k, iters, restarts, seed);
            cfg.alpha = alpha;
            cfg.target_ratio = target_ratio;
            QuantizeResult q = quantize_pair(real_emb, sim_emb, cfg);
            py::dict d;
            d["labels_real"] = q.labels[0];
            d["labels_sim"] = q.labels[1];
            d["hist_real"] = histogram_dict(q.histograms[0]);
            d["hist_sim"] = histogram_dict(q.histograms[1]);
            d["objective"] = q.model.objective;
            d["retained_components"] = q.pca.retained();
            return d;
        },
        py::arg("real_emb"), py::arg("sim_emb"), py::arg("algorithm") = "kmeans",
        py::arg("k") = 500, py::arg("iters") = 500, py::arg("restarts") = 5, py::arg("seed") = 0,
        py::arg("alpha") = -1.0, py::arg("target_ratio") = 0.90);

    m.def(
        "gap_report",
        [](const MatD& real_emb, const MatD& sim_emb, const std::string& algorithm, int k,
           int iters, int restarts, uint64_t seed, double alpha, double target_ratio,
           double mauve_c, int mauve_grid) {
            QuantizeConfig cfg;
            cfg.cluster = make_cluster_config(algorithm, k, iters, restarts, seed);
            cfg.alpha = alpha;
            cfg.target_ratio = target_ratio;
            GapReport r = gap_report(real_emb, sim_emb, cfg, mauve_c, mauve_grid);
            py::dict d;
            d["kl_fwd"] = r.kl_fwd;
            d["kl_bwd"] = r.kl_bwd;
            d["js"] = r.js;
            d["mauve"] = r.mauve;
            d["nn_sim"] = r.nn_sim;
            d["k"] = r.k;
            d["alpha"] = r.alpha;
            return d;
        },
        py::arg("real_emb"), py::arg("sim_emb"), py::arg("algorithm") = "kmeans",
        py::arg("k") = 500, py::arg("iters") = 500, py::arg("restarts") = 5, py::arg("seed") = 0,
        py::arg("alpha") = -1.0, py::arg("target_ratio") = 0.90, py::arg("mauve_c") = 5.0,
        py::arg("mauve_grid") = 99);

    m.def(
        "linear_probe",
        [](const MatD& real_emb, const MatD& sim_emb, int splits, double test_frac, uint64_t seed,
           double l2_c) {
            ProbeResult r = linear_probe(real_emb, sim_emb, splits, test_frac, seed, l2_c);
            py::dict d;
            d["mean_accuracy"] = r.mean_accuracy;
            d["split_accuracies"] = r.split_accuracies;
            return d;
        },
        py::arg("real_emb"), py::arg("sim_emb"), py::arg("splits") = 5,
        py::arg("test_frac") = 0.2, py::arg("seed") = 0, py::arg("l2_c") = 1.0);

    m.def(
        "spearman",
        [](const std::vector<double>& x, const std::vector<double>& y) { return spearman(x, y); },
        py::arg("x"), py::arg("y"));
    m.def("fleiss_kappa", &fleiss_kappa, py::arg("item_category_counts"));

    m.def(
        "categorize_clusters",
        [](const std::vector<long>& counts_real, const std::vector<long>& counts_sim,
           long total_real, long total_sim, double tau_lo, double tau_hi) {
            py::list out;
            for (const auto& c : categorize_clusters(counts_real, counts_sim, total_real,
                                                     total_sim, tau_lo, tau_hi)) {
                py::dict d;
                d["cluster"] = c.cluster;
                d["n_real"] = c.n_real;
                d["n_sim"] = c.n_sim;
                d["real_share"] = c.real_share;
                d["category"] = to_string(c.category);
                out.append(d);
            }
            return out;
        },
        py::arg("counts_real"), py::arg("counts_sim"), py::arg("total_real"),
        py::arg("total_sim"), py::arg("tau_lo") = 1.0 / 3.0, py::arg("tau_hi") = 2.0 / 3.0);

    m.def(
        "contrastive_tfidf",
        [](const std::vector<std::string>& well_captured, const std::vector<std::string>& missed,
           const std::vector<std::string>& hallucinated, long min_df,
           const std::set<std::string>& stoplist, int top_terms) {
            auto result = contrastive_tfidf({well_captured, missed, hallucinated}, min_df,
                                            stoplist, top_terms);
            py::dict d;
            const char* names[3] = {"well_captured", "missed", "hallucinated"};
            for (size_t cat = 0; cat < 3; ++cat) {
                py::list list;
                for (const auto& ts : result[cat])
                    list.append(py::make_tuple(ts.term, ts.score, ts.df));
                d[names[cat]] = list;
            }
            return d;
        },
        py::arg("well_captured"), py::arg("missed"), py::arg("hallucinated"),
        py::arg("min_df") = 50, py::arg("stoplist") = std::set<std::string>{},
        py::arg("top_terms") = 50);

    m.def(
        "read_matrix",
        [](const std::string& path) {
            MatrixFile mf = read_matrix(path);
            return py::make_tuple(MatD(to_double(mf.data)), mf.row_ids);
        },
        py::arg("path"), "Reads a BGM1 matrix file; returns (matrix, row_ids)");
    m.def(
        "write_matrix",
        [](const std::string& path, const MatD& data, const std::vector<std::string>& ids) {
            write_matrix(path, to_float(data), ids);
        },
        py::arg("path"), py::arg("data"), py::arg("ids") = std::vector<std::string>{});
}
