#include "mmsechan/experiment.hpp"

#include "mmsechan/cnn_estimator.hpp"
#include "mmsechan/lmmse.hpp"
#include "mmsechan/nn_predictor.hpp"
#include "mmsechan/omp.hpp"
#include "mmsechan/seeds.hpp"
#include "mmsechan/snapshot.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <thread>

namespace mmsechan {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

// Stream identifiers for derive_seed.
constexpr std::uint64_t kDataStream = 1;
constexpr std::uint64_t kNoiseStream = 2;
constexpr std::uint64_t kTrainStream = 3;

constexpr std::uint64_t kTrainPart = 0;
constexpr std::uint64_t kTestPart = 1;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

// Shortest text that parses back to the same double.
std::string fmt_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + v[i];
    return out;
}

std::string join(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt_double(v[i]);
    return out;
}

template <class T>
T parse_value(const std::string& key, const std::string& raw) {
    const std::string s = trim(raw);
    try {
        std::size_t used = 0;
        T v{};
        if constexpr (std::is_same_v<T, double>) {
            v = std::stod(s, &used);
        } else {
            if (!s.empty() && s[0] == '-') throw std::invalid_argument("negative");
            v = static_cast<T>(std::stoull(s, &used));
        }
        if (used != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': cannot parse '" + s + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& raw) {
    const std::string s = lower(trim(raw));
    if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
    if (s == "0" || s == "false" || s == "no" || s == "off") return false;
    throw ConfigError("config key '" + key + "': expected a boolean, got '" + s + "'");
}

Task task_from_string(const std::string& s) {
    const std::string t = lower(trim(s));
    if (t == "predict") return Task::Predict;
    if (t == "estimate") return Task::Estimate;
    throw ConfigError("unknown task '" + s + "' (expected predict or estimate)");
}

// FNV-1a, 64 bit.
std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

bool wants(const ExperimentConfig& cfg, const std::string& method) {
    return std::find(cfg.methods.begin(), cfg.methods.end(), method) != cfg.methods.end();
}

bool wants_any(const ExperimentConfig& cfg, std::initializer_list<const char*> methods) {
    for (const char* m : methods)
        if (wants(cfg, m)) return true;
    return false;
}

std::size_t worker_count(const ExperimentConfig& cfg) {
    if (cfg.threads > 0) return cfg.threads;
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, n) with at most `workers` in flight; results keep index order.
template <class R>
std::vector<R> parallel_map(std::size_t n, std::size_t workers, const std::function<R(std::size_t)>& fn) {
    std::vector<R> out(n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }
    for (std::size_t begin = 0; begin < n; begin += workers) {
        const std::size_t end = std::min(n, begin + workers);
        std::vector<std::future<R>> pending;
        for (std::size_t i = begin; i < end; ++i) pending.push_back(std::async(std::launch::async, fn, i));
        for (std::size_t i = begin; i < end; ++i) out[i] = pending[i - begin].get();
    }
    return out;
}

class ModelCache {
public:
    ModelCache(const ExperimentConfig& cfg, std::uint64_t data_hash) : enabled_(cfg.use_cache) {
        if (!enabled_) return;
        dir_ = cfg.cache_dir.empty() ? cfg.output + ".cache" : cfg.cache_dir;
        ExperimentConfig key = cfg;
        key.methods.clear();
        key.output.clear();
        key.cache_dir.clear();
        key.use_cache = true;
        key.threads = 0;
        base_ = fnv1a(format_config(key), data_hash);
    }

    std::string path(const std::string& method, double snr_db) const {
        const std::uint64_t h = fnv1a(method + "@" + fmt_double(snr_db), base_);
        return (fs::path(dir_) / (method + "-" + hex64(h) + ".mmsp")).string();
    }

    template <class Params, class Load>
    bool try_load(const std::string& method, double snr_db, Params& out, Load&& load) const {
        if (!enabled_) return false;
        const std::string p = path(method, snr_db);
        if (!fs::exists(p)) return false;
        try {
            out = load(p);
            return true;
        } catch (const std::exception&) {
            return false;  // unreadable entries are retrained and overwritten
        }
    }

    template <class Save>
    void store(const std::string& method, double snr_db, Save&& save) const {
        if (!enabled_) return;
        fs::create_directories(dir_);
        const std::string p = path(method, snr_db);
        const std::string tmp = p + ".tmp";
        save(tmp);
        fs::rename(tmp, p);
    }

private:
    bool enabled_ = false;
    std::string dir_;
    std::uint64_t base_ = 0;
};

std::uint64_t hash_file(const std::string& path) { return fnv1a(read_file_bytes(path)); }

CVector noisy(const CVector& h, double noise_var, std::uint64_t seed, std::size_t snr_idx, std::uint64_t part,
              std::size_t i) {
    return add_awgn(h, noise_var, derive_seed(seed, {kNoiseStream, snr_idx, part, i}));
}

// ---------------------------------------------------------------------------------------------
// prediction

struct PredictData {
    std::vector<WindowItem> train;
    std::vector<WindowItem> test;
    std::vector<CovarianceFunction> test_perfect;  // per test item
    std::vector<CovarianceFunction> test_sp;       // per test item; empty for file sources
    CovarianceFunction shared_perfect;              // file sources: empirical covariance
    bool per_item = true;
    std::uint64_t hash = 0;
};

CovarianceFunction empirical_covariance(const std::vector<WindowItem>& items, std::size_t M, std::size_t l) {
    // obs is reversed, so window index t maps to obs(M-1-t); t = M-1+l is the target.
    const std::size_t L = M + l;
    std::vector<cd> r(L, cd{0.0, 0.0});
    std::vector<std::size_t> counts(L, 0);
    for (const auto& it : items) {
        std::vector<cd> w(L, cd{0.0, 0.0});
        std::vector<bool> known(L, false);
        for (std::size_t t = 0; t < M; ++t) {
            w[t] = it.obs(static_cast<Eigen::Index>(M - 1 - t));
            known[t] = true;
        }
        w[L - 1] = it.target;
        known[L - 1] = true;
        for (std::size_t a = 0; a < L; ++a)
            for (std::size_t k = 0; a + k < L; ++k)
                if (known[a] && known[a + k]) {
                    r[k] += w[a + k] * std::conj(w[a]);
                    ++counts[k];
                }
    }
    for (std::size_t k = 0; k < L; ++k)
        if (counts[k]) r[k] /= static_cast<double>(counts[k]);
    r[0] = cd{r[0].real(), 0.0};
    return CovarianceFunction(std::move(r));
}

PredictData predict_data(const ExperimentConfig& cfg) {
    PredictData d;
    const DopplerSpec spec = cfg.doppler();
    const std::size_t L = cfg.M + cfg.l;
    if (cfg.source == "synthetic") {
        const std::size_t count = cfg.split.train_count() + cfg.split.test_count();
        const auto traj = synthesize_trajectories(count, cfg.paths, spec, L, derive_seed(cfg.seed, {kDataStream}));
        const auto items = window_channels(traj.blocks, cfg.M, cfg.l, cfg.window_stride);
        const auto idx = split_indices(items.size(), cfg.split);
        for (std::size_t i : idx.train) d.train.push_back(items[i]);
        for (std::size_t i : idx.test) {
            const auto& it = items[i];
            d.test.push_back(it);
            const PathSet& ps = traj.paths[it.row];
            d.test_perfect.push_back(covariance_from_paths(ps, L, spec));
            // Strongest path only, carrying the full realization power.
            double power = 0.0;
            for (const auto& p : ps.paths) power += std::norm(p.gain);
            const Path& s = ps.paths[ps.strongest()];
            PathSet single{{make_path(s.doa, s.phase, std::sqrt(power), spec)}};
            d.test_sp.push_back(covariance_from_paths(single, L, spec));
        }
        d.hash = 0;
    } else {
        ChannelMatrix ch = load_channels(cfg.source);
        d.hash = hash_file(cfg.source);
        if (ch.size() == 0) throw ConfigError("channel file '" + cfg.source + "' is empty");
        ch = normalize(ch, static_cast<double>(ch.cols()));  // unit power per coefficient
        const auto items = window_channels(ch, cfg.M, cfg.l, cfg.window_stride);
        const auto idx = split_indices(items.size(), cfg.split);
        for (std::size_t i : idx.train) d.train.push_back(items[i]);
        for (std::size_t i : idx.test) d.test.push_back(items[i]);
        d.shared_perfect = empirical_covariance(d.train, cfg.M, cfg.l);
        d.per_item = false;
    }
    return d;
}

double nmse_scalar(const std::vector<cd>& truth, const std::vector<cd>& est) { return nmse(truth, est); }

struct NoisyItems {
    std::vector<CVector> y;
    std::vector<cd> target;
};

NoisyItems make_noisy(const std::vector<WindowItem>& items, double noise_var, std::uint64_t seed, std::size_t snr_idx,
                      std::uint64_t part) {
    NoisyItems out;
    out.y.reserve(items.size());
    out.target.reserve(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        out.y.push_back(noisy(items[i].obs, noise_var, seed, snr_idx, part, i));
        out.target.push_back(items[i].target);
    }
    return out;
}

std::vector<ResultRow> predict_at(const ExperimentConfig& cfg, const PredictData& d, const ModelCache& cache,
                                  std::size_t snr_idx, double snr_db) {
    const double nv = snr_to_noise_var(snr_db);
    const DopplerSpec spec = cfg.doppler();
    const std::size_t M = cfg.M, l = cfg.l;
    const NoisyItems test = make_noisy(d.test, nv, cfg.seed, snr_idx, kTestPart);
    std::map<std::string, double> result;

    auto evaluate = [&](const std::function<cd(std::size_t)>& f) {
        std::vector<cd> est(test.y.size());
        for (std::size_t i = 0; i < test.y.size(); ++i) est[i] = f(i);
        return nmse_scalar(test.target, est);
    };

    if (wants(cfg, "lmmse-perfect")) {
        if (d.per_item) {
            result["lmmse-perfect"] = evaluate([&](std::size_t i) {
                return predictor_filter(d.test_perfect[i], M, l, nv).apply(test.y[i]);
            });
        } else {
            const PredictorFilter W = predictor_filter(d.shared_perfect, M, l, nv);
            result["lmmse-perfect"] = evaluate([&](std::size_t i) { return W.apply(test.y[i]); });
        }
    }
    if (wants(cfg, "lmmse-sp")) {
        result["lmmse-sp"] = evaluate([&](std::size_t i) {
            return predictor_filter(d.test_sp[i], M, l, nv).apply(test.y[i]);
        });
    }
    if (wants(cfg, "lmmse-jakes")) {
        const PredictorFilter W = predictor_filter(jakes_covariance(spec, M + l), M, l, nv);
        result["lmmse-jakes"] = evaluate([&](std::size_t i) { return W.apply(test.y[i]); });
    }

    for (const TransformMode mode : {TransformMode::Circulant, TransformMode::Toeplitz}) {
        const std::string tag = mode == TransformMode::Circulant ? "circ" : "toep";
        if (!wants_any(cfg, {("gridded-" + tag).c_str(), ("structured-" + tag).c_str(), ("nn-" + tag).c_str()}))
            continue;
        const std::size_t configured = mode == TransformMode::Circulant ? cfg.grid_circ : cfg.grid_toep;
        const std::size_t n_grid = configured ? configured : (mode == TransformMode::Circulant ? M : 2 * M);
        const auto bank = build_prior_grid(n_grid, spec, M, l, nv).second;
        const TransformQ Q = make_q(mode, M);

        if (wants(cfg, "gridded-" + tag))
            result["gridded-" + tag] = evaluate([&](std::size_t i) { return gridded_predict(bank, test.y[i], nv); });

        if (!wants_any(cfg, {("structured-" + tag).c_str(), ("nn-" + tag).c_str()})) continue;
        const StructuredParams sp = structured_params(bank, Q, cfg.bias);
        if (wants(cfg, "structured-" + tag))
            result["structured-" + tag] = evaluate([&](std::size_t i) {
                return structured_predict(sp, chat(test.y[i], Q, nv), test.y[i]);
            });

        if (wants(cfg, "nn-" + tag)) {
            const std::string method = "nn-" + tag;
            NNParams p;
            if (!cache.try_load(method, snr_db, p, [](const std::string& f) { return load_nn_snapshot(f); })) {
                const NoisyItems train = make_noisy(d.train, nv, cfg.seed, snr_idx, kTrainPart);
                std::vector<PredictionSample> samples;
                samples.reserve(train.y.size());
                for (std::size_t i = 0; i < train.y.size(); ++i)
                    samples.push_back({chat(train.y[i], Q, nv), train.y[i], train.target[i]});
                TrainConfig tc = cfg.train;
                tc.seed = derive_seed(cfg.seed, {kTrainStream, snr_idx, mode == TransformMode::Circulant ? 0u : 1u});
                p = mmsechan::train(init_from_structured(sp), samples, tc).params;
                cache.store(method, snr_db, [&](const std::string& f) { save_snapshot(f, p); });
            }
            result[method] = evaluate([&](std::size_t i) { return predict(p, chat(test.y[i], Q, nv), test.y[i]); });
        }
    }

    std::vector<ResultRow> rows;
    for (const auto& m : cfg.methods) rows.push_back({snr_db, m, result.at(m), cfg.seed});
    return rows;
}

// ---------------------------------------------------------------------------------------------
// estimation

std::vector<EstimationSample> make_estimation(const ChannelMatrix& ch, const std::vector<std::size_t>& rows,
                                              double nv, std::uint64_t seed, std::size_t snr_idx, std::uint64_t part) {
    std::vector<EstimationSample> out;
    out.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CVector h = ch.row(static_cast<Eigen::Index>(rows[i])).transpose();
        CVector y = noisy(h, nv, seed, snr_idx, part, i);
        out.push_back({std::move(y), std::move(h)});
    }
    return out;
}

double nmse_vectors(const std::vector<EstimationSample>& test, const std::function<CVector(const CVector&, std::size_t)>& f) {
    const auto n = static_cast<Eigen::Index>(test.size());
    const auto M = test.empty() ? 0 : test.front().h.size();
    ChannelMatrix truth(n, M), est(n, M);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& s = test[static_cast<std::size_t>(i)];
        truth.row(i) = s.h.transpose();
        est.row(i) = f(s.y, static_cast<std::size_t>(i)).transpose();
    }
    return nmse(truth, est);
}

}  // namespace

// ---------------------------------------------------------------------------------------------

std::string to_string(Task task) { return task == Task::Predict ? "predict" : "estimate"; }

std::vector<double> SnrSweep::values() const {
    std::vector<double> out;
    if (!(step_db > 0.0) || !(start_db <= stop_db + 1e-9)) return out;
    for (std::size_t i = 0;; ++i) {
        const double v = start_db + static_cast<double>(i) * step_db;
        if (v > stop_db + 1e-9) break;
        out.push_back(v);
    }
    return out;
}

ExperimentConfig ExperimentConfig::predict_defaults() {
    ExperimentConfig c;
    c.task = Task::Predict;
    c.methods = predict_methods();
    c.snr = SnrSweep{-15.0, 15.0, 2.5};
    c.split = SplitSpec{500, 50, 103, 50, 0};
    c.train.batch_size = 50;
    c.train.epochs = 20;
    return c;
}

ExperimentConfig ExperimentConfig::estimate_defaults() {
    ExperimentConfig c;
    c.task = Task::Estimate;
    c.methods = estimate_methods();
    c.snr = SnrSweep{-10.0, 10.0, 2.5};
    c.split = SplitSpec{6000, 20, 100, 100, 0};
    c.train.batch_size = 20;
    c.train.epochs = 5;
    return c;
}

std::vector<double> ExperimentConfig::snr_points() const { return snr_override.empty() ? snr.values() : snr_override; }

DopplerSpec ExperimentConfig::doppler() const {
    const double v = kmh_to_mps(velocity_kmh);
    const double ts = symbol_duration_s > 0.0 ? symbol_duration_s : grid_spacing_m / v;
    return DopplerSpec(v, carrier_hz, ts);
}

const std::vector<std::string>& predict_methods() {
    static const std::vector<std::string> m{"lmmse-perfect", "lmmse-sp",     "lmmse-jakes", "gridded-circ", "gridded-toep",
                                            "structured-circ", "structured-toep", "nn-circ",  "nn-toep"};
    return m;
}

const std::vector<std::string>& estimate_methods() {
    static const std::vector<std::string> m{"identity", "no-learn", "cnn", "genie-omp"};
    return m;
}

void ExperimentConfig::validate() const {
    if (snr_points().empty()) throw ConfigError("SNR sweep is empty");
    for (double s : snr_points())
        if (!std::isfinite(s)) throw ConfigError("SNR values must be finite");
    if (methods.empty()) throw ConfigError("method list is empty");
    const auto& known = task == Task::Predict ? predict_methods() : estimate_methods();
    for (std::size_t i = 0; i < methods.size(); ++i) {
        if (std::find(known.begin(), known.end(), methods[i]) == known.end())
            throw ConfigError("unknown " + to_string(task) + " method '" + methods[i] + "'");
        if (std::find(methods.begin(), methods.begin() + static_cast<std::ptrdiff_t>(i), methods[i]) !=
            methods.begin() + static_cast<std::ptrdiff_t>(i))
            throw ConfigError("method '" + methods[i] + "' listed twice");
    }
    if (source.empty()) throw ConfigError("source is empty");
    if (source != "synthetic" && !fs::is_regular_file(source))
        throw ConfigError("input file '" + source + "' does not exist");
    if (split.train_batch_size == 0 || split.test_batch_size == 0) throw ConfigError("batch sizes must be >= 1");
    if (split.test_count() == 0) throw ConfigError("test set is empty");
    if (train.batch_size == 0) throw ConfigError("train batch_size must be >= 1");
    if (train.epochs == 0) throw ConfigError("train epochs must be >= 1");
    if (!(train.adam.learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
    if (output.empty()) throw ConfigError("output path is empty");

    if (task == Task::Predict) {
        if (M == 0) throw ConfigError("M must be >= 1");
        if (l == 0) throw ConfigError("l must be >= 1");
        if (source == "synthetic" && paths == 0) throw ConfigError("paths must be >= 1");
        if (!(velocity_kmh >= 0.0) || !std::isfinite(velocity_kmh)) throw ConfigError("velocity must be >= 0");
        if (!(carrier_hz > 0.0) || !std::isfinite(carrier_hz)) throw ConfigError("carrier frequency must be > 0");
        if (symbol_duration_s < 0.0) throw ConfigError("symbol duration must be >= 0");
        if (symbol_duration_s == 0.0 && !(grid_spacing_m > 0.0 && velocity_kmh > 0.0))
            throw ConfigError("set symbol_duration_s, or a positive grid spacing and velocity");
        if (source != "synthetic" && wants(*this, "lmmse-sp"))
            throw ConfigError("lmmse-sp needs path parameters and is only available for synthetic sources");
        if (split.train_count() == 0 && wants_any(*this, {"nn-circ", "nn-toep"}))
            throw ConfigError("training set is empty");
    } else {
        if (antennas == 0) throw ConfigError("antennas must be >= 1");
        if (cluster.subpaths == 0) throw ConfigError("cluster subpaths must be >= 1");
        if (!(cluster.spread_deg >= 0.0)) throw ConfigError("cluster spread must be >= 0");
        if (omp_oversampling == 0) throw ConfigError("omp oversampling must be >= 1");
        if (omp_smax > antennas) throw ConfigError("omp s_max must be <= antennas");
        if (split.train_count() == 0 && wants(*this, "cnn")) throw ConfigError("training set is empty");
    }
}

// ---------------------------------------------------------------------------------------------
// config text

ExperimentConfig parse_config(const std::string& text) {
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("config parse error at line " + std::to_string(e.line()) + ": " + e.message());
    }

    Task task = Task::Predict;
    if (auto t = tree.get_optional<std::string>("experiment.task")) task = task_from_string(*t);
    ExperimentConfig c = task == Task::Predict ? ExperimentConfig::predict_defaults() : ExperimentConfig::estimate_defaults();

    static const std::map<std::string, std::vector<std::string>> known{
        {"experiment", {"task", "source", "methods", "seed", "output", "cache_dir", "use_cache", "threads"}},
        {"snr", {"start", "stop", "step", "points"}},
        {"predict",
         {"M", "l", "paths", "grid_circ", "grid_toep", "bias", "velocity_kmh", "carrier_hz", "grid_spacing_m",
          "symbol_duration_s", "window_stride"}},
        {"estimate", {"antennas", "mode", "subpaths", "spread_deg", "omp_oversampling", "omp_smax"}},
        {"split", {"train_batches", "train_batch_size", "test_batches", "test_batch_size", "seed"}},
        {"train", {"batch_size", "epochs", "learning_rate", "beta1", "beta2", "epsilon", "plateau_tol", "plateau_window"}},
    };
    for (const auto& [section, body] : tree) {
        auto it = known.find(section);
        if (it == known.end()) throw ConfigError("unknown config section [" + section + "]");
        if (body.empty() && !body.data().empty()) throw ConfigError("config key '" + section + "' outside a section");
        for (const auto& [key, value] : body) {
            if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
                throw ConfigError("unknown config key '" + section + "." + key + "'");
        }
    }

    auto get = [&](const char* key, auto& field) {
        using T = std::decay_t<decltype(field)>;
        auto v = tree.get_optional<std::string>(key);
        if (!v) return;
        if constexpr (std::is_same_v<T, std::string>) {
            field = trim(*v);
        } else if constexpr (std::is_same_v<T, bool>) {
            field = parse_bool(key, *v);
        } else {
            field = parse_value<T>(key, *v);
        }
    };

    get("experiment.source", c.source);
    if (auto v = tree.get_optional<std::string>("experiment.methods")) c.methods = split_list(lower(*v));
    get("experiment.seed", c.seed);
    get("experiment.output", c.output);
    get("experiment.cache_dir", c.cache_dir);
    get("experiment.use_cache", c.use_cache);
    get("experiment.threads", c.threads);

    get("snr.start", c.snr.start_db);
    get("snr.stop", c.snr.stop_db);
    get("snr.step", c.snr.step_db);
    if (auto v = tree.get_optional<std::string>("snr.points")) {
        c.snr_override.clear();
        for (const auto& s : split_list(*v)) c.snr_override.push_back(parse_value<double>("snr.points", s));
    }

    get("predict.M", c.M);
    get("predict.l", c.l);
    get("predict.paths", c.paths);
    get("predict.grid_circ", c.grid_circ);
    get("predict.grid_toep", c.grid_toep);
    if (auto v = tree.get_optional<std::string>("predict.bias")) {
        try {
            c.bias = bias_source_from_string(trim(*v));
        } catch (const std::exception& e) {
            throw ConfigError(e.what());
        }
    }
    get("predict.velocity_kmh", c.velocity_kmh);
    get("predict.carrier_hz", c.carrier_hz);
    get("predict.grid_spacing_m", c.grid_spacing_m);
    get("predict.symbol_duration_s", c.symbol_duration_s);
    get("predict.window_stride", c.window_stride);

    get("estimate.antennas", c.antennas);
    if (auto v = tree.get_optional<std::string>("estimate.mode")) {
        try {
            c.mode = transform_mode_from_string(trim(*v));
        } catch (const std::exception& e) {
            throw ConfigError(e.what());
        }
    }
    get("estimate.subpaths", c.cluster.subpaths);
    get("estimate.spread_deg", c.cluster.spread_deg);
    get("estimate.omp_oversampling", c.omp_oversampling);
    get("estimate.omp_smax", c.omp_smax);

    get("split.train_batches", c.split.train_batches);
    get("split.train_batch_size", c.split.train_batch_size);
    get("split.test_batches", c.split.test_batches);
    get("split.test_batch_size", c.split.test_batch_size);
    get("split.seed", c.split.split_seed);

    get("train.batch_size", c.train.batch_size);
    get("train.epochs", c.train.epochs);
    get("train.learning_rate", c.train.adam.learning_rate);
    get("train.beta1", c.train.adam.beta1);
    get("train.beta2", c.train.adam.beta2);
    get("train.epsilon", c.train.adam.epsilon);
    get("train.plateau_tol", c.train.plateau_tol);
    get("train.plateau_window", c.train.plateau_window);
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string format_config(const ExperimentConfig& c) {
    std::ostringstream o;
    o << "[experiment]\n"
      << "task = " << to_string(c.task) << "\n"
      << "source = " << c.source << "\n"
      << "methods = " << join(c.methods) << "\n"
      << "seed = " << c.seed << "\n"
      << "output = " << c.output << "\n";
    if (!c.cache_dir.empty()) o << "cache_dir = " << c.cache_dir << "\n";
    o << "use_cache = " << (c.use_cache ? "true" : "false") << "\n"
      << "threads = " << c.threads << "\n\n";

    o << "[snr]\n"
      << "start = " << fmt_double(c.snr.start_db) << "\n"
      << "stop = " << fmt_double(c.snr.stop_db) << "\n"
      << "step = " << fmt_double(c.snr.step_db) << "\n";
    if (!c.snr_override.empty()) o << "points = " << join(c.snr_override) << "\n";
    o << "\n";

    if (c.task == Task::Predict) {
        o << "[predict]\n"
          << "M = " << c.M << "\n"
          << "l = " << c.l << "\n"
          << "paths = " << c.paths << "\n"
          << "grid_circ = " << c.grid_circ << "\n"
          << "grid_toep = " << c.grid_toep << "\n"
          << "bias = " << to_string(c.bias) << "\n"
          << "velocity_kmh = " << fmt_double(c.velocity_kmh) << "\n"
          << "carrier_hz = " << fmt_double(c.carrier_hz) << "\n"
          << "grid_spacing_m = " << fmt_double(c.grid_spacing_m) << "\n"
          << "symbol_duration_s = " << fmt_double(c.symbol_duration_s) << "\n"
          << "window_stride = " << c.window_stride << "\n\n";
    } else {
        o << "[estimate]\n"
          << "antennas = " << c.antennas << "\n"
          << "mode = " << to_string(c.mode) << "\n"
          << "subpaths = " << c.cluster.subpaths << "\n"
          << "spread_deg = " << fmt_double(c.cluster.spread_deg) << "\n"
          << "omp_oversampling = " << c.omp_oversampling << "\n"
          << "omp_smax = " << c.omp_smax << "\n\n";
    }

    o << "[split]\n"
      << "train_batches = " << c.split.train_batches << "\n"
      << "train_batch_size = " << c.split.train_batch_size << "\n"
      << "test_batches = " << c.split.test_batches << "\n"
      << "test_batch_size = " << c.split.test_batch_size << "\n"
      << "seed = " << c.split.split_seed << "\n\n";

    o << "[train]\n"
      << "batch_size = " << c.train.batch_size << "\n"
      << "epochs = " << c.train.epochs << "\n"
      << "learning_rate = " << fmt_double(c.train.adam.learning_rate) << "\n"
      << "beta1 = " << fmt_double(c.train.adam.beta1) << "\n"
      << "beta2 = " << fmt_double(c.train.adam.beta2) << "\n"
      << "epsilon = " << fmt_double(c.train.adam.epsilon) << "\n"
      << "plateau_tol = " << fmt_double(c.train.plateau_tol) << "\n"
      << "plateau_window = " << c.train.plateau_window << "\n";
    return o.str();
}

// ---------------------------------------------------------------------------------------------
// runners

ResultTable run_predict(const ExperimentConfig& cfg) {
    if (cfg.task != Task::Predict) throw ConfigError("run_predict: config task is not predict");
    cfg.validate();
    const PredictData data = predict_data(cfg);
    const ModelCache cache(cfg, data.hash);
    const auto snrs = cfg.snr_points();
    const auto per_snr = parallel_map<std::vector<ResultRow>>(
        snrs.size(), worker_count(cfg), [&](std::size_t i) { return predict_at(cfg, data, cache, i, snrs[i]); });
    ResultTable table;
    for (const auto& rows : per_snr) table.rows.insert(table.rows.end(), rows.begin(), rows.end());
    return table;
}

ResultTable run_estimate(const ExperimentConfig& cfg) {
    if (cfg.task != Task::Estimate) throw ConfigError("run_estimate: config task is not estimate");
    cfg.validate();
    const std::size_t M = cfg.antennas;

    ChannelMatrix ch;
    std::uint64_t data_hash = 0;
    if (cfg.source == "synthetic") {
        ch = synthesize_ula_channels(cfg.split.train_count() + cfg.split.test_count(), M, cfg.cluster,
                                     derive_seed(cfg.seed, {kDataStream}));
    } else {
        ch = load_channels(cfg.source);
        data_hash = hash_file(cfg.source);
        if (static_cast<std::size_t>(ch.cols()) != M)
            throw ConfigError("channel file '" + cfg.source + "' has dim " + std::to_string(ch.cols()) +
                              ", expected antennas = " + std::to_string(M));
    }
    ch = normalize(ch, static_cast<double>(M));
    const SplitIndices split = split_indices(static_cast<std::size_t>(ch.rows()), cfg.split);
    const ModelCache cache(cfg, data_hash);
    const TransformQ Q = make_q(cfg.mode, M);
    const Dictionary dict = steering_dictionary(M, cfg.omp_oversampling);
    const std::size_t s_max = cfg.omp_smax ? cfg.omp_smax : std::max<std::size_t>(1, M / 2);

    const auto snrs = cfg.snr_points();
    std::vector<std::map<std::string, double>> results(snrs.size());

    // The non-learned methods are independent per SNR.
    const bool non_learned = wants_any(cfg, {"identity", "no-learn", "genie-omp"});
    if (non_learned) {
        auto fixed = parallel_map<std::map<std::string, double>>(snrs.size(), worker_count(cfg), [&](std::size_t i) {
            const double nv = snr_to_noise_var(snrs[i]);
            const auto test = make_estimation(ch, split.test, nv, cfg.seed, i, kTestPart);
            std::map<std::string, double> r;
            if (wants(cfg, "identity")) r["identity"] = nmse_vectors(test, [](const CVector& y, std::size_t) { return y; });
            if (wants(cfg, "no-learn")) {
                const NoLearnParams p = nolearn_params(build_spectral_grid(M, cfg.mode, nv), Q);
                r["no-learn"] = nmse_vectors(test, [&](const CVector& y, std::size_t) { return estimate_nolearn(p, Q, y, nv); });
            }
            if (wants(cfg, "genie-omp"))
                r["genie-omp"] = nmse_vectors(test, [&](const CVector& y, std::size_t k) {
                    return genie_omp(y, dict, test[k].h, s_max).reconstruction;
                });
            return r;
        });
        for (std::size_t i = 0; i < snrs.size(); ++i) results[i] = std::move(fixed[i]);
    }

    // CNN stages run from the highest SNR down, each warm-started from the one before.
    if (wants(cfg, "cnn")) {
        std::vector<std::size_t> order(snrs.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return snrs[a] > snrs[b]; });
        std::optional<CNNParams> previous;
        for (std::size_t stage = 0; stage < order.size(); ++stage) {
            const std::size_t i = order[stage];
            const double nv = snr_to_noise_var(snrs[i]);
            CNNParams p;
            if (!cache.try_load("cnn", snrs[i], p, [](const std::string& f) { return load_cnn_snapshot(f); })) {
                SnrStage st;
                st.noise_var = nv;
                st.data = make_estimation(ch, split.train, nv, cfg.seed, i, kTrainPart);
                st.fallback = CNNParams::from_nolearn(nolearn_params(build_spectral_grid(M, cfg.mode, nv), Q));
                TrainConfig tc = cfg.train;
                tc.seed = derive_seed(cfg.seed, {kTrainStream});
                p = cnn_train_stage(Q, st, previous ? &*previous : nullptr, tc, stage).params;
                cache.store("cnn", snrs[i], [&](const std::string& f) { save_snapshot(f, p, M); });
            }
            const auto test = make_estimation(ch, split.test, nv, cfg.seed, i, kTestPart);
            results[i]["cnn"] = nmse_vectors(test, [&](const CVector& y, std::size_t) { return cnn_estimate(p, Q, y, nv); });
            previous = p;
        }
    }

    ResultTable table;
    for (std::size_t i = 0; i < snrs.size(); ++i)
        for (const auto& m : cfg.methods) table.rows.push_back({snrs[i], m, results[i].at(m), cfg.seed});
    return table;
}

ResultTable run_experiment(const ExperimentConfig& cfg) {
    return cfg.task == Task::Predict ? run_predict(cfg) : run_estimate(cfg);
}

// ---------------------------------------------------------------------------------------------
// CSV

double ResultTable::at(double snr_db, const std::string& method) const {
    for (const auto& r : rows)
        if (r.method == method && std::abs(r.snr_db - snr_db) < 1e-9) return r.nmse;
    throw std::out_of_range("no result for method '" + method + "' at " + fmt_double(snr_db) + " dB");
}

std::string format_results(const ResultTable& table) {
    std::string out = "snr_db,method,nmse,seed\n";
    char buf[128];
    for (const auto& r : table.rows) {
        std::snprintf(buf, sizeof buf, "%.17g,", r.snr_db);
        out += buf;
        out += r.method;
        std::snprintf(buf, sizeof buf, ",%.17g,%llu\n", r.nmse, static_cast<unsigned long long>(r.seed));
        out += buf;
    }
    return out;
}

void emit_results(const ResultTable& table, const std::string& path) {
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    write_file_bytes(path, format_results(table));
}

ResultTable parse_results(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line) || trim(line) != "snr_db,method,nmse,seed")
        throw std::invalid_argument("parse_results: missing or wrong header");
    ResultTable t;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 4) throw std::invalid_argument("parse_results: line " + std::to_string(lineno) + " needs 4 fields");
        try {
            t.rows.push_back({std::stod(f[0]), f[1], std::stod(f[2]), std::stoull(f[3])});
        } catch (const std::exception&) {
            throw std::invalid_argument("parse_results: bad number on line " + std::to_string(lineno));
        }
    }
    return t;
}

}  // namespace mmsechan
