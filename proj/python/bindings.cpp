#include "mmsechan/bessel.hpp"
#include "mmsechan/channel_model.hpp"
#include "mmsechan/cnn_estimator.hpp"
#include "mmsechan/dataset_io.hpp"
#include "mmsechan/experiment.hpp"
#include "mmsechan/grid_predictors.hpp"
#include "mmsechan/lmmse.hpp"
#include "mmsechan/nn_predictor.hpp"
#include "mmsechan/omp.hpp"
#include "mmsechan/snapshot.hpp"

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace mmsechan;

namespace {

CVector to_vector(const CovarianceFunction& c) {
    return Eigen::Map<const CVector>(c.samples().data(), static_cast<Eigen::Index>(c.size()));
}

CovarianceFunction from_vector(const CVector& v) { return CovarianceFunction(std::vector<cd>(v.begin(), v.end())); }

std::vector<CovarianceFunction> from_vectors(const std::vector<CVector>& vs) {
    std::vector<CovarianceFunction> out;
    for (const auto& v : vs) out.push_back(from_vector(v));
    return out;
}

TransformMode mode_arg(const std::string& name) { return transform_mode_from_string(name); }

py::list rows(const ResultTable& t) {
    py::list out;
    for (const auto& r : t.rows) out.append(py::make_tuple(r.snr_db, r.method, r.nmse, r.seed));
    return out;
}

}  // namespace

PYBIND11_MODULE(_mmsechan, m) {
    m.doc() = "Model-based MMSE channel prediction and estimation";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DecodeError>(m, "DecodeError", PyExc_ValueError);

    // channel model
    py::class_<DopplerSpec>(m, "DopplerSpec")
        .def(py::init<double, double, double>(), py::arg("velocity_mps"), py::arg("carrier_hz"),
             py::arg("symbol_duration_s"))
        .def_readwrite("velocity_mps", &DopplerSpec::velocity_mps)
        .def_readwrite("carrier_hz", &DopplerSpec::carrier_hz)
        .def_readwrite("symbol_duration_s", &DopplerSpec::symbol_duration_s)
        .def_property_readonly("doppler_bandwidth", &DopplerSpec::doppler_bandwidth)
        .def_property_readonly("normalized_bandwidth", &DopplerSpec::normalized_bandwidth);

    py::class_<Path>(m, "Path")
        .def_readonly("phase", &Path::phase)
        .def_readonly("doa", &Path::doa)
        .def_readonly("gain", &Path::gain)
        .def_readonly("doppler_hz", &Path::doppler_hz);

    py::class_<PathSet>(m, "PathSet")
        .def_readonly("paths", &PathSet::paths)
        .def("strongest", &PathSet::strongest)
        .def("__len__", &PathSet::size);

    m.def("kmh_to_mps", &kmh_to_mps);
    m.def("bessel_j0", &bessel_j0);
    m.def("make_path", &make_path, py::arg("doa"), py::arg("phase"), py::arg("amplitude"), py::arg("spec"));
    m.def("sample_paths", &sample_paths, py::arg("P"), py::arg("spec"), py::arg("seed"));
    m.def(
        "synthesize_block",
        [](const PathSet& ps, std::size_t M, std::size_t N, const DopplerSpec& s) { return synthesize_block(ps, M, N, s).coeffs; },
        py::arg("paths"), py::arg("M"), py::arg("N"), py::arg("spec"), "Coefficients h[0..M+N-1].");
    m.def(
        "covariance_from_paths",
        [](const PathSet& ps, std::size_t K, const DopplerSpec& s) { return to_vector(covariance_from_paths(ps, K, s)); },
        py::arg("paths"), py::arg("K"), py::arg("spec"));
    m.def(
        "jakes_covariance", [](const DopplerSpec& s, std::size_t K) { return to_vector(jakes_covariance(s, K)); },
        py::arg("spec"), py::arg("K"));
    m.def(
        "covariance_matrix", [](const CVector& r, std::size_t M) { return build_covariance_matrix(from_vector(r), M); },
        py::arg("r"), py::arg("M"));
    m.def("add_awgn", &add_awgn, py::arg("h"), py::arg("noise_var"), py::arg("seed"));
    m.def("snr_to_noise_var", &snr_to_noise_var);

    // LMMSE
    m.def("lmmse_estimator_filter", &lmmse_estimator_filter, py::arg("sigma"), py::arg("noise_var"));
    m.def(
        "lmmse_predict",
        [](const CVector& r, std::size_t M, std::size_t l, double nv, const CVector& y) {
            return lmmse_predict_direct(from_vector(r), M, l, nv, y);
        },
        py::arg("r"), py::arg("M"), py::arg("l"), py::arg("noise_var"), py::arg("y"),
        "Direct l-step prediction; y is ordered newest first.");
    m.def(
        "predictor_row",
        [](const CVector& r, std::size_t M, std::size_t l, double nv) {
            return CRowVector(predictor_filter(from_vector(r), M, l, nv).row);
        },
        py::arg("r"), py::arg("M"), py::arg("l"), py::arg("noise_var"));
    m.def("nmse", py::overload_cast<const ChannelMatrix&, const ChannelMatrix&>(&nmse));

    // grid predictors
    py::class_<TransformQ>(m, "TransformQ")
        .def_readonly("Q", &TransformQ::Q)
        .def_property_readonly("K", &TransformQ::K)
        .def_property_readonly("M", &TransformQ::M);
    m.def(
        "make_q", [](const std::string& mode, std::size_t M) { return make_q(mode_arg(mode), M); }, py::arg("mode"),
        py::arg("M"));
    m.def("chat", &chat, py::arg("y"), py::arg("Q"), py::arg("noise_var"));

    py::class_<FilterBank>(m, "FilterBank")
        .def_readonly("biases", &FilterBank::biases)
        .def("__len__", &FilterBank::size);
    m.def(
        "make_filter_bank",
        [](const std::vector<CVector>& covs, std::size_t M, std::size_t l, double nv) {
            return make_filter_bank(from_vectors(covs), M, l, nv);
        },
        py::arg("covariances"), py::arg("M"), py::arg("l"), py::arg("noise_var"));
    m.def(
        "build_prior_grid",
        [](std::size_t n, const DopplerSpec& s, std::size_t M, std::size_t l, double nv) {
            auto [grid, bank] = build_prior_grid(n, s, M, l, nv);
            return py::make_tuple(grid.doas, std::move(bank));
        },
        py::arg("n_grid"), py::arg("spec"), py::arg("M"), py::arg("l"), py::arg("noise_var"),
        "Returns (doas, FilterBank).");
    m.def("gridded_weights", &gridded_weights, py::arg("bank"), py::arg("y"), py::arg("noise_var"));
    m.def("gridded_predict", &gridded_predict, py::arg("bank"), py::arg("y"), py::arg("noise_var"));

    py::class_<StructuredParams>(m, "StructuredParams")
        .def_readonly("A1", &StructuredParams::A1)
        .def_readonly("A2", &StructuredParams::A2)
        .def_readonly("b", &StructuredParams::b)
        .def("bias_divergence", &StructuredParams::bias_divergence);
    m.def(
        "structured_params",
        [](const FilterBank& bank, const TransformQ& Q, const std::string& bias) {
            return structured_params(bank, Q, bias_source_from_string(bias));
        },
        py::arg("bank"), py::arg("Q"), py::arg("bias") = "approximated");
    m.def("structured_predict", &structured_predict, py::arg("params"), py::arg("c"), py::arg("y"));

    // NN predictor
    py::class_<NNParams>(m, "NNParams")
        .def_readwrite("A1", &NNParams::A1)
        .def_readwrite("b1", &NNParams::b1)
        .def_readwrite("A2", &NNParams::A2)
        .def_readwrite("b2", &NNParams::b2)
        .def("to_bytes", [](const NNParams& p) { return py::bytes(encode_snapshot(p)); })
        .def_static("from_bytes", [](const py::bytes& b) { return decode_nn_snapshot(std::string(b)); });
    m.def("init_from_structured", &init_from_structured);
    m.def("nn_predict", &predict, py::arg("params"), py::arg("c"), py::arg("y"));

    // CNN estimator
    py::class_<NoLearnParams>(m, "NoLearnParams")
        .def_readonly("w0", &NoLearnParams::w0)
        .def_readonly("bias", &NoLearnParams::bias);
    py::class_<CNNParams>(m, "CNNParams")
        .def_readwrite("a1", &CNNParams::a1)
        .def_readwrite("a2", &CNNParams::a2)
        .def_readwrite("b1", &CNNParams::b1)
        .def_readwrite("b2", &CNNParams::b2)
        .def_static("from_nolearn", &CNNParams::from_nolearn);
    m.def(
        "nolearn_params",
        [](std::size_t M, const std::string& mode, double nv) {
            const TransformQ Q = make_q(mode_arg(mode), M);
            return nolearn_params(build_spectral_grid(M, Q.mode, nv), Q);
        },
        py::arg("M"), py::arg("mode"), py::arg("noise_var"));
    m.def("estimate_nolearn", &estimate_nolearn, py::arg("params"), py::arg("Q"), py::arg("y"), py::arg("noise_var"));
    m.def("cnn_estimate", &cnn_estimate, py::arg("params"), py::arg("Q"), py::arg("y"), py::arg("noise_var"));
    m.def("ula_steering", &ula_steering, py::arg("M"), py::arg("theta"));

    // OMP
    m.def(
        "steering_dictionary", [](std::size_t M, std::size_t over) { return steering_dictionary(M, over).atoms; },
        py::arg("M"), py::arg("oversampling") = 4);
    m.def(
        "omp",
        [](const CVector& y, const CMatrix& atoms, std::size_t s) {
            const OmpResult r = omp_path(y, Dictionary::from_columns(atoms), s);
            return py::make_tuple(r.reconstruction, r.support);
        },
        py::arg("y"), py::arg("atoms"), py::arg("s"), "Returns (reconstruction, support).");
    m.def(
        "genie_omp",
        [](const CVector& y, const CMatrix& atoms, const CVector& h, std::size_t s_max) {
            const GenieOmpResult r = genie_omp(y, Dictionary::from_columns(atoms), h, s_max);
            return py::make_tuple(r.reconstruction, r.sparsity, r.squared_error);
        },
        py::arg("y"), py::arg("atoms"), py::arg("h_true"), py::arg("s_max"));

    // channel files
    m.def("encode_channels", [](const ChannelMatrix& c) { return py::bytes(encode_channels(c)); });
    m.def("decode_channels", [](const py::bytes& b) { return decode_channels(std::string(b)); });
    m.def("save_channels", &save_channels, py::arg("path"), py::arg("channels"));
    m.def("load_channels", &load_channels, py::arg("path"));
    m.def("normalize", &normalize, py::arg("channels"), py::arg("target"));
    m.def(
        "synthesize_trajectories",
        [](std::size_t count, std::size_t P, const DopplerSpec& s, std::size_t length, std::uint64_t seed) {
            return synthesize_trajectories(count, P, s, length, seed).blocks;
        },
        py::arg("count"), py::arg("P"), py::arg("spec"), py::arg("length"), py::arg("seed"));
    m.def(
        "synthesize_ula_channels",
        [](std::size_t count, std::size_t M, std::size_t subpaths, double spread_deg, std::uint64_t seed) {
            return synthesize_ula_channels(count, M, ClusterSpec{subpaths, spread_deg}, seed);
        },
        py::arg("count"), py::arg("M"), py::arg("subpaths") = 20, py::arg("spread_deg") = 2.0, py::arg("seed") = 0);

    // experiments
    py::class_<ExperimentConfig>(m, "ExperimentConfig")
        .def_static("predict_defaults", &ExperimentConfig::predict_defaults)
        .def_static("estimate_defaults", &ExperimentConfig::estimate_defaults)
        .def_static("parse", &parse_config)
        .def_static("load", &load_config)
        .def("format", [](const ExperimentConfig& c) { return format_config(c); })
        .def("validate", &ExperimentConfig::validate)
        .def("snr_points", &ExperimentConfig::snr_points)
        .def_readwrite("source", &ExperimentConfig::source)
        .def_readwrite("methods", &ExperimentConfig::methods)
        .def_readwrite("seed", &ExperimentConfig::seed)
        .def_readwrite("output", &ExperimentConfig::output)
        .def_readwrite("cache_dir", &ExperimentConfig::cache_dir)
        .def_readwrite("use_cache", &ExperimentConfig::use_cache)
        .def_readwrite("threads", &ExperimentConfig::threads)
        .def_readwrite("snr_override", &ExperimentConfig::snr_override)
        .def_readwrite("paths", &ExperimentConfig::paths)
        .def_readwrite("M", &ExperimentConfig::M)
        .def_readwrite("antennas", &ExperimentConfig::antennas)
        .def_property(
            "epochs", [](const ExperimentConfig& c) { return c.train.epochs; },
            [](ExperimentConfig& c, std::size_t e) { c.train.epochs = e; })
        .def_property(
            "split",
            [](const ExperimentConfig& c) {
                const SplitSpec& s = c.split;
                return py::make_tuple(s.train_batches, s.train_batch_size, s.test_batches, s.test_batch_size);
            },
            [](ExperimentConfig& c, std::tuple<std::size_t, std::size_t, std::size_t, std::size_t> t) {
                std::tie(c.split.train_batches, c.split.train_batch_size, c.split.test_batches, c.split.test_batch_size) = t;
            },
            "(train_batches, train_batch_size, test_batches, test_batch_size)");
    m.def(
        "run_experiment",
        [](const ExperimentConfig& c) {
            ResultTable t;
            {
                py::gil_scoped_release release;
                t = run_experiment(c);
            }
            return rows(t);
        },
        py::arg("config"), "Returns [(snr_db, method, nmse, seed), ...].");
    m.def("format_results", [](const py::list& rs) {
        ResultTable t;
        for (const auto& r : rs) {
            const auto tup = r.cast<std::tuple<double, std::string, double, std::uint64_t>>();
            t.rows.push_back({std::get<0>(tup), std::get<1>(tup), std::get<2>(tup), std::get<3>(tup)});
        }
        return format_results(t);
    });
}
