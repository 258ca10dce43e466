#pragma once

#include <array>
#include <string>
#include <vector>

#include "stdgi/graph.hpp"
#include "stdgi/rng.hpp"

namespace stdgi {

// Node features over time, T x N x F row-major. Channel 0 is speed (mph),
// channel 1 is time-of-day as a fraction of the day in [0, 1).
struct FeatureSeries {
    static constexpr int kSpeed = 0;
    static constexpr int kTimeOfDay = 1;

    int t_steps = 0;
    int n_nodes = 0;
    int f_dim = 2;
    int step_minutes = 5;
    std::vector<double> values;

    static FeatureSeries zeros(int t_steps, int n_nodes, int step_minutes);

    double at(int t, int node, int channel) const;
    double& at(int t, int node, int channel);
    double speed(int t, int node) const { return at(t, node, kSpeed); }

    // Fraction of the day at step index t.
    double time_of_day(int t) const;
};

struct TimeRange {
    int begin = 0;
    int end = 0;
    int length() const { return end - begin; }
};

struct SplitSpec {
    TimeRange train;
    TimeRange val;
    TimeRange test;
};

// Per-channel z-score statistics fitted on the training range only. Only the
// speed channel is normalized; time-of-day is already in [0, 1).
struct NormStats {
    double speed_mean = 0.0;
    double speed_std = 1.0;

    double normalize(double mph) const { return (mph - speed_mean) / speed_std; }
    double denormalize(double z) const { return z * speed_std + speed_mean; }
};

struct WindowSample {
    int start = 0;  // input covers [start, start+input), target the next `horizon` steps
};

struct WindowSet {
    std::vector<WindowSample> samples;
    bool range_too_short = false;
    int input_steps = 0;
    int horizon_steps = 0;
};

// CSV with header "t,node,speed" on a dense (t, node) grid. The t column may
// start anywhere; indices are rebased to zero.
FeatureSeries load_features_csv(const std::string& path, int step_minutes);
void save_features_csv(const std::string& path, const FeatureSeries& series);

NormStats fit_normalizer(const FeatureSeries& series, TimeRange train_range);
FeatureSeries apply_normalizer(const FeatureSeries& series, const NormStats& stats);

// One sample per start index (stride 1); count = len - input - horizon + 1.
// A too-short range yields an empty set with the warning flag raised.
WindowSet make_windows(TimeRange range, int input_steps = 12, int horizon_steps = 12);

// Contiguous chronological train/val/test split. Every split must be long
// enough to hold at least one window.
SplitSpec split_series(int t_steps, const std::array<double, 3>& ratios = {0.7, 0.1, 0.2},
                       int min_split_length = 24);

struct SynthDynamics {
    double alpha = 0.5;            // spatial coupling in [0, 1]
    double noise_std = 1.0;        // per-step Gaussian noise (mph)
    double daily_amplitude = 0.3;  // weight of the daily sinusoidal drive
    double min_speed = 0.0;
    double max_speed = 80.0;
    double init_low = 35.0;
    double init_high = 55.0;
    int step_minutes = 5;
};

// Diffusion with a daily drive:
//   s(t+1) = (1-alpha) s(t) + alpha A_hat s(t) + beta sin(2 pi tod(t)) + eps,
// clipped to [min_speed, max_speed]. With alpha > 0 a node's next value
// depends on its neighbors' present ones.
FeatureSeries synthesize_traffic(const Graph& graph, int t_steps, const SynthDynamics& dyn,
                                 Rng& rng);

struct SynthGraphConfig {
    std::string family = "geometric_knn";  // geometric_knn | ring | complete
    int n = 20;
    int knn = 3;             // minimum out-degree for geometric_knn
    double sigma = 0.0;      // <= 0 selects default_sigma of the pairwise distances
    double weight_floor = 0.1;
};

struct SynthGraphResult {
    Graph graph;
    double sigma_used = 0.0;
};

// Random sensor layout; kernel-weighted edges via graph_from_distances, with
// nearest-neighbor edges added so no node is isolated.
SynthGraphResult make_synth_graph(const SynthGraphConfig& cfg, Rng& rng);

}  // namespace stdgi
