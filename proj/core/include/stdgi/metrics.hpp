#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stdgi/errors.hpp"

namespace stdgi {

// mask entries: nonzero = keep. All metrics throw ValidationError when no
// entry survives masking.
double mae(std::span<const double> pred, std::span<const double> truth,
           std::span<const std::uint8_t> mask = {});
double rmse(std::span<const double> pred, std::span<const double> truth,
            std::span<const std::uint8_t> mask = {});
// Zero ground-truth entries are excluded automatically; the exclusion count
// is reported through `masked_out` when provided.
double mape(std::span<const double> pred, std::span<const double> truth,
            std::span<const std::uint8_t> mask = {}, long* masked_out = nullptr);

// Forecasts and targets for a set of windows, indexed [sample][step][node],
// in original speed units.
struct PredictionSet {
    int num_samples = 0;
    int horizon_steps = 0;
    int num_nodes = 0;
    std::vector<double> pred;
    std::vector<double> truth;

    static PredictionSet zeros(int num_samples, int horizon_steps, int num_nodes);
    std::size_t index(int sample, int step, int node) const;
};

struct HorizonMetrics {
    int steps = 0;       // forecast step, 1-indexed
    int minutes = 0;
    double mae = 0.0;
    double rmse = 0.0;
    double mape = 0.0;   // fraction, not percent
    long mape_masked = 0;
};

struct MetricsReport {
    std::string mode;    // "baseline" or "stdgi"
    std::uint64_t seed = 0;
    int step_minutes = 5;
    std::vector<HorizonMetrics> horizons;
};

// Point-in-time metrics at each requested step (default 3/6/12 = 15/30/60
// minutes at 5-minute resolution), over all samples and nodes.
MetricsReport horizon_report(const PredictionSet& set, const std::vector<int>& horizons = {3, 6, 12},
                             int step_minutes = 5, const std::string& mode = "",
                             std::uint64_t seed = 0);

struct Stat {
    double mean = 0.0;
    double stddev = 0.0;
};

struct ModeHorizonStats {
    Stat mae, rmse, mape;
};

struct HorizonComparison {
    int steps = 0;
    int minutes = 0;
    ModeHorizonStats baseline;
    ModeHorizonStats stdgi;
    double mean_rel_improvement_mae = 0.0;  // (baseline - stdgi) / baseline, seed-mean
    std::vector<double> per_seed_rel_improvement_mae;
};

struct ComparisonSummary {
    std::vector<std::uint64_t> seeds;
    std::vector<HorizonComparison> horizons;
    // Per-seed flag: improvement at the longest horizon >= at the shortest.
    std::vector<bool> per_seed_trend_increasing;
    int seeds_with_increasing_trend = 0;
    bool mean_trend_increasing = false;
    bool single_seed_warning = false;
};

// Requires >= 1 report per mode and identical seed sets across modes.
ComparisonSummary compare_runs(const std::vector<MetricsReport>& reports);

std::string report_to_json(const MetricsReport& report);
MetricsReport report_from_json(const std::string& text);
std::string comparison_to_json(const ComparisonSummary& summary);
std::string render_comparison_table(const ComparisonSummary& summary);

}  // namespace stdgi
