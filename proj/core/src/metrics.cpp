#include "stdgi/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

namespace stdgi {

namespace {

void check_lengths(std::span<const double> pred, std::span<const double> truth,
                   std::span<const std::uint8_t> mask) {
    if (pred.size() != truth.size()) {
        throw DimensionError("metric: pred has " + std::to_string(pred.size()) + " entries, truth " +
                             std::to_string(truth.size()));
    }
    if (!mask.empty() && mask.size() != pred.size()) {
        throw DimensionError("metric: mask has " + std::to_string(mask.size()) + " entries, data " +
                             std::to_string(pred.size()));
    }
}

bool kept(std::span<const std::uint8_t> mask, std::size_t i) {
    return mask.empty() || mask[i] != 0;
}

}  // namespace

double mae(std::span<const double> pred, std::span<const double> truth,
           std::span<const std::uint8_t> mask) {
    check_lengths(pred, truth, mask);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!kept(mask, i)) continue;
        sum += std::fabs(pred[i] - truth[i]);
        ++n;
    }
    if (n == 0) throw ValidationError("mae: no entries left after masking");
    return sum / static_cast<double>(n);
}

double rmse(std::span<const double> pred, std::span<const double> truth,
            std::span<const std::uint8_t> mask) {
    check_lengths(pred, truth, mask);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!kept(mask, i)) continue;
        const double e = pred[i] - truth[i];
        sum += e * e;
        ++n;
    }
    if (n == 0) throw ValidationError("rmse: no entries left after masking");
    return std::sqrt(sum / static_cast<double>(n));
}

double mape(std::span<const double> pred, std::span<const double> truth,
            std::span<const std::uint8_t> mask, long* masked_out) {
    check_lengths(pred, truth, mask);
    double sum = 0.0;
    std::size_t n = 0;
    long zero_masked = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!kept(mask, i)) continue;
        if (truth[i] == 0.0) {
            ++zero_masked;
            continue;
        }
        sum += std::fabs(pred[i] - truth[i]) / std::fabs(truth[i]);
        ++n;
    }
    if (masked_out) *masked_out = zero_masked;
    if (n == 0) throw ValidationError("mape: no entries left after masking");
    return sum / static_cast<double>(n);
}

PredictionSet PredictionSet::zeros(int num_samples, int horizon_steps, int num_nodes) {
    PredictionSet s;
    s.num_samples = num_samples;
    s.horizon_steps = horizon_steps;
    s.num_nodes = num_nodes;
    const std::size_t n = static_cast<std::size_t>(num_samples) * horizon_steps * num_nodes;
    s.pred.assign(n, 0.0);
    s.truth.assign(n, 0.0);
    return s;
}

std::size_t PredictionSet::index(int sample, int step, int node) const {
    return (static_cast<std::size_t>(sample) * horizon_steps + step) * num_nodes + node;
}

MetricsReport horizon_report(const PredictionSet& set, const std::vector<int>& horizons,
                             int step_minutes, const std::string& mode, std::uint64_t seed) {
    if (set.pred.size() != set.truth.size()) {
        throw DimensionError("horizon_report: pred/truth size mismatch");
    }
    MetricsReport report;
    report.mode = mode;
    report.seed = seed;
    report.step_minutes = step_minutes;
    const std::size_t per_step = static_cast<std::size_t>(set.num_samples) * set.num_nodes;
    std::vector<double> p(per_step), t(per_step);
    for (int h : horizons) {
        if (h < 1 || h > set.horizon_steps) {
            throw ConfigError("horizon " + std::to_string(h) + " outside forecast length " +
                              std::to_string(set.horizon_steps));
        }
        std::size_t w = 0;
        for (int s = 0; s < set.num_samples; ++s) {
            for (int v = 0; v < set.num_nodes; ++v, ++w) {
                p[w] = set.pred[set.index(s, h - 1, v)];
                t[w] = set.truth[set.index(s, h - 1, v)];
            }
        }
        HorizonMetrics hm;
        hm.steps = h;
        hm.minutes = h * step_minutes;
        hm.mae = mae(p, t);
        hm.rmse = rmse(p, t);
        hm.mape = mape(p, t, {}, &hm.mape_masked);
        report.horizons.push_back(hm);
    }
    return report;
}

namespace {

Stat stat_of(const std::vector<double>& xs) {
    Stat s;
    if (xs.empty()) return s;
    for (double x : xs) s.mean += x;
    s.mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(var / static_cast<double>(xs.size()));
    return s;
}

}  // namespace

ComparisonSummary compare_runs(const std::vector<MetricsReport>& reports) {
    std::map<std::uint64_t, const MetricsReport*> baseline, stdgi;
    for (const MetricsReport& r : reports) {
        if (r.mode == "baseline") {
            baseline[r.seed] = &r;
        } else if (r.mode == "stdgi") {
            stdgi[r.seed] = &r;
        } else {
            throw ValidationError("compare_runs: unknown mode '" + r.mode + "'");
        }
    }
    if (baseline.empty() || stdgi.empty()) {
        throw ValidationError("compare_runs: need at least one report per mode");
    }
    std::vector<std::uint64_t> seeds;
    for (const auto& [seed, _] : baseline) seeds.push_back(seed);
    std::vector<std::uint64_t> stdgi_seeds;
    for (const auto& [seed, _] : stdgi) stdgi_seeds.push_back(seed);
    if (seeds != stdgi_seeds) {
        throw ValidationError("compare_runs: seed sets differ between modes");
    }

    const auto& horizon_layout = baseline.begin()->second->horizons;
    for (const MetricsReport& r : reports) {
        if (r.horizons.size() != horizon_layout.size()) {
            throw ValidationError("compare_runs: reports disagree on horizon count");
        }
    }

    ComparisonSummary summary;
    summary.seeds = seeds;
    summary.single_seed_warning = seeds.size() == 1;

    const std::size_t nh = horizon_layout.size();
    std::vector<std::vector<double>> rel(nh);  // [horizon][seed]
    for (std::size_t hi = 0; hi < nh; ++hi) {
        HorizonComparison hc;
        hc.steps = horizon_layout[hi].steps;
        hc.minutes = horizon_layout[hi].minutes;
        std::vector<double> bm, br, bp, sm, sr, sp;
        for (std::uint64_t seed : seeds) {
            const HorizonMetrics& b = baseline[seed]->horizons[hi];
            const HorizonMetrics& s = stdgi[seed]->horizons[hi];
            bm.push_back(b.mae);
            br.push_back(b.rmse);
            bp.push_back(b.mape);
            sm.push_back(s.mae);
            sr.push_back(s.rmse);
            sp.push_back(s.mape);
            const double improvement = b.mae > 0.0 ? (b.mae - s.mae) / b.mae : 0.0;
            hc.per_seed_rel_improvement_mae.push_back(improvement);
            rel[hi].push_back(improvement);
        }
        hc.baseline = {stat_of(bm), stat_of(br), stat_of(bp)};
        hc.stdgi = {stat_of(sm), stat_of(sr), stat_of(sp)};
        hc.mean_rel_improvement_mae = stat_of(hc.per_seed_rel_improvement_mae).mean;
        summary.horizons.push_back(std::move(hc));
    }

    for (std::size_t si = 0; si < seeds.size(); ++si) {
        const bool increasing = rel[nh - 1][si] >= rel[0][si];
        summary.per_seed_trend_increasing.push_back(increasing);
        if (increasing) summary.seeds_with_increasing_trend += 1;
    }
    summary.mean_trend_increasing =
        summary.horizons.back().mean_rel_improvement_mae >= summary.horizons.front().mean_rel_improvement_mae;
    return summary;
}

namespace {

using nlohmann::json;

json horizon_to_json(const HorizonMetrics& h) {
    return json{{"steps", h.steps},           {"minutes", h.minutes}, {"mae", h.mae},
                {"rmse", h.rmse},             {"mape", h.mape},       {"mape_masked", h.mape_masked}};
}

json stat_to_json(const Stat& s) {
    return json{{"mean", s.mean}, {"std", s.stddev}};
}

}  // namespace

std::string report_to_json(const MetricsReport& report) {
    json j;
    j["mode"] = report.mode;
    j["seed"] = report.seed;
    j["step_minutes"] = report.step_minutes;
    j["horizons"] = json::array();
    for (const HorizonMetrics& h : report.horizons) j["horizons"].push_back(horizon_to_json(h));
    return j.dump(2) + "\n";
}

MetricsReport report_from_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ParseError("metrics report: invalid JSON");
    MetricsReport r;
    try {
        r.mode = j.at("mode").get<std::string>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.step_minutes = j.at("step_minutes").get<int>();
        for (const json& h : j.at("horizons")) {
            HorizonMetrics hm;
            hm.steps = h.at("steps").get<int>();
            hm.minutes = h.at("minutes").get<int>();
            hm.mae = h.at("mae").get<double>();
            hm.rmse = h.at("rmse").get<double>();
            hm.mape = h.at("mape").get<double>();
            hm.mape_masked = h.at("mape_masked").get<long>();
            r.horizons.push_back(hm);
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("metrics report: ") + e.what());
    }
    return r;
}

std::string comparison_to_json(const ComparisonSummary& summary) {
    json j;
    j["seeds"] = summary.seeds;
    j["single_seed_warning"] = summary.single_seed_warning;
    j["seeds_with_increasing_trend"] = summary.seeds_with_increasing_trend;
    j["mean_trend_increasing"] = summary.mean_trend_increasing;
    j["per_seed_trend_increasing"] = summary.per_seed_trend_increasing;
    j["horizons"] = json::array();
    for (const HorizonComparison& h : summary.horizons) {
        json hj;
        hj["steps"] = h.steps;
        hj["minutes"] = h.minutes;
        hj["baseline"] = {{"mae", stat_to_json(h.baseline.mae)},
                          {"rmse", stat_to_json(h.baseline.rmse)},
                          {"mape", stat_to_json(h.baseline.mape)}};
        hj["stdgi"] = {{"mae", stat_to_json(h.stdgi.mae)},
                       {"rmse", stat_to_json(h.stdgi.rmse)},
                       {"mape", stat_to_json(h.stdgi.mape)}};
        hj["mean_rel_improvement_mae"] = h.mean_rel_improvement_mae;
        hj["per_seed_rel_improvement_mae"] = h.per_seed_rel_improvement_mae;
        j["horizons"].push_back(hj);
    }
    return j.dump(2) + "\n";
}

namespace {

std::string fmt(double v, int precision = 3) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(precision);
    os << v;
    return os.str();
}

std::string cell(const Stat& s, bool percent = false) {
    const double scalef = percent ? 100.0 : 1.0;
    return fmt(s.mean * scalef) + " +- " + fmt(s.stddev * scalef);
}

}  // namespace

std::string render_comparison_table(const ComparisonSummary& summary) {
    std::ostringstream os;
    const int name_w = 16, col_w = 18;
    auto pad = [&](const std::string& s, int w) {
        std::string out = s;
        if (static_cast<int>(out.size()) < w) out.append(static_cast<std::size_t>(w) - out.size(), ' ');
        return out;
    };
    os << pad("Method", name_w);
    for (const HorizonComparison& h : summary.horizons) {
        os << pad(std::to_string(h.minutes) + " min", col_w);
    }
    os << '\n';
    struct Section {
        const char* label;
        Stat ModeHorizonStats::*field;
        bool percent;
    };
    const Section sections[] = {{"MAE", &ModeHorizonStats::mae, false},
                                {"RMSE", &ModeHorizonStats::rmse, false},
                                {"MAPE (%)", &ModeHorizonStats::mape, true}};
    for (const Section& sec : sections) {
        os << pad(std::string("-- ") + sec.label, name_w) << '\n';
        os << pad("LSTM Baseline", name_w);
        for (const HorizonComparison& h : summary.horizons) {
            os << pad(cell(h.baseline.*sec.field, sec.percent), col_w);
        }
        os << '\n';
        os << pad("STDGI", name_w);
        for (const HorizonComparison& h : summary.horizons) {
            os << pad(cell(h.stdgi.*sec.field, sec.percent), col_w);
        }
        os << '\n';
    }
    os << pad("Rel. impr. MAE", name_w);
    for (const HorizonComparison& h : summary.horizons) {
        os << pad(fmt(h.mean_rel_improvement_mae * 100.0, 2) + " %", col_w);
    }
    os << '\n';
    os << "trend (longest vs shortest horizon): "
       << (summary.mean_trend_increasing ? "increasing" : "not increasing") << " ("
       << summary.seeds_with_increasing_trend << "/" << summary.seeds.size() << " seeds)\n";
    if (summary.single_seed_warning) {
        os << "warning: single seed; standard deviations are zero\n";
    }
    return os.str();
}

}  // namespace stdgi
