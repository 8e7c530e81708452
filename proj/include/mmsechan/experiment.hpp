#pragma once

#include "mmsechan/channel_model.hpp"
#include "mmsechan/dataset_io.hpp"
#include "mmsechan/grid_predictors.hpp"
#include "mmsechan/training.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmsechan {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Task { Predict, Estimate };

std::string to_string(Task task);

struct SnrSweep {
    double start_db = -15.0;
    double stop_db = 15.0;
    double step_db = 2.5;

    /// start, start+step, ... up to stop (inclusive within 1e-9 dB).
    std::vector<double> values() const;
};

struct ExperimentConfig {
    Task task = Task::Predict;
    std::string source = "synthetic";  // or a channel file path
    std::vector<std::string> methods;
    std::uint64_t seed = 1;
    std::string output = "results.csv";
    std::string cache_dir;  // empty: "<output>.cache"
    bool use_cache = true;
    std::size_t threads = 0;  // 0: hardware concurrency

    SnrSweep snr;
    std::vector<double> snr_override;  // replaces the sweep when non-empty

    // prediction
    std::size_t M = 4;
    std::size_t l = 1;
    std::size_t paths = 25;          // synthetic P
    std::size_t grid_circ = 0;       // 0: K = M
    std::size_t grid_toep = 0;       // 0: K = 2M
    BiasSource bias = BiasSource::Approximated;
    double velocity_kmh = 4.0;
    double carrier_hz = 2.4e9;
    double grid_spacing_m = 0.01;    // symbol duration = spacing / velocity unless set
    double symbol_duration_s = 0.0;
    std::size_t window_stride = 0;   // 0: disjoint groups

    // estimation
    std::size_t antennas = 16;
    TransformMode mode = TransformMode::Circulant;
    ClusterSpec cluster;
    std::size_t omp_oversampling = 4;
    std::size_t omp_smax = 0;        // 0: M / 2

    SplitSpec split;
    TrainConfig train;

    /// Prediction defaults: M = 4, l = 1, v = 4 km/h, f_c = 2.4 GHz, 1 cm grid, 500x50 train
    /// and 103x50 test groups, 20 epochs, SNR -15..15 dB.
    static ExperimentConfig predict_defaults();
    /// Estimation defaults: 16-antenna ULA, 6000x20 train and 100x100 test vectors, SNR -10..10 dB.
    static ExperimentConfig estimate_defaults();

    std::vector<double> snr_points() const;
    DopplerSpec doppler() const;
    std::size_t obs_dim() const { return task == Task::Predict ? M : antennas; }

    /// Checks every field; throws ConfigError with a one-line message.
    void validate() const;
};

/// Parses INI-style text ([section] / key = value). Keys absent from the text keep the
/// defaults of the task named in [experiment] task.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string format_config(const ExperimentConfig& cfg);

const std::vector<std::string>& predict_methods();
const std::vector<std::string>& estimate_methods();

struct ResultRow {
    double snr_db = 0.0;
    std::string method;
    double nmse = 0.0;
    std::uint64_t seed = 0;
};

struct ResultTable {
    std::vector<ResultRow> rows;

    /// NMSE for (snr, method); throws std::out_of_range when missing.
    double at(double snr_db, const std::string& method) const;
};

ResultTable run_predict(const ExperimentConfig& cfg);
ResultTable run_estimate(const ExperimentConfig& cfg);
ResultTable run_experiment(const ExperimentConfig& cfg);

std::string format_results(const ResultTable& table);
void emit_results(const ResultTable& table, const std::string& path);
ResultTable parse_results(const std::string& csv);

}  // namespace mmsechan
