#include "stdgi/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include "csv_util.hpp"

namespace stdgi {

FeatureSeries FeatureSeries::zeros(int t_steps, int n_nodes, int step_minutes) {
    if (t_steps < 1 || n_nodes < 1) throw ValidationError("series needs t_steps >= 1 and n_nodes >= 1");
    FeatureSeries s;
    s.t_steps = t_steps;
    s.n_nodes = n_nodes;
    s.step_minutes = step_minutes;
    s.values.assign(static_cast<std::size_t>(t_steps) * n_nodes * s.f_dim, 0.0);
    return s;
}

double FeatureSeries::at(int t, int node, int channel) const {
    return values[(static_cast<std::size_t>(t) * n_nodes + node) * f_dim + channel];
}

double& FeatureSeries::at(int t, int node, int channel) {
    return values[(static_cast<std::size_t>(t) * n_nodes + node) * f_dim + channel];
}

double FeatureSeries::time_of_day(int t) const {
    const int minutes_per_day = 24 * 60;
    const long minute = static_cast<long>(t) * step_minutes % minutes_per_day;
    return static_cast<double>(minute) / minutes_per_day;
}

FeatureSeries load_features_csv(const std::string& path, int step_minutes) {
    auto lines = csv::read_csv(path, "t,node,speed");
    if (lines.empty()) throw ValidationError(path + ": no data rows");

    struct Row {
        long t;
        int node;
        double speed;
    };
    std::vector<Row> rows;
    rows.reserve(lines.size());
    std::vector<std::string_view> fields;
    long t_min = 0, t_max = 0;
    int node_max = -1;
    bool first = true;
    for (const auto& dl : lines) {
        csv::split_fields(dl.text, fields);
        if (fields.size() != 3) {
            throw ParseError(path + ":" + std::to_string(dl.line_no) + ": expected 3 fields, got " +
                             std::to_string(fields.size()));
        }
        Row r;
        r.t = csv::parse_long(fields[0], path, dl.line_no);
        r.node = static_cast<int>(csv::parse_long(fields[1], path, dl.line_no));
        r.speed = csv::parse_double(fields[2], path, dl.line_no);
        if (r.node < 0) throw ValidationError(path + ": negative node id");
        if (first) {
            t_min = t_max = r.t;
            first = false;
        } else {
            t_min = std::min(t_min, r.t);
            t_max = std::max(t_max, r.t);
        }
        node_max = std::max(node_max, r.node);
        rows.push_back(r);
    }

    const long t_span = t_max - t_min + 1;
    const int n_nodes = node_max + 1;
    if (t_span > 10'000'000) throw ValidationError(path + ": t range too large");
    const int t_steps = static_cast<int>(t_span);

    FeatureSeries series = FeatureSeries::zeros(t_steps, n_nodes, step_minutes);
    std::vector<char> seen(static_cast<std::size_t>(t_steps) * n_nodes, 0);
    for (const Row& r : rows) {
        const int t = static_cast<int>(r.t - t_min);
        const std::size_t cell = static_cast<std::size_t>(t) * n_nodes + r.node;
        if (seen[cell]) {
            throw ValidationError(path + ": duplicate cell (t=" + std::to_string(r.t) +
                                  ", node=" + std::to_string(r.node) + ")");
        }
        seen[cell] = 1;
        series.at(t, r.node, FeatureSeries::kSpeed) = r.speed;
    }
    for (int t = 0; t < t_steps; ++t) {
        for (int v = 0; v < n_nodes; ++v) {
            if (!seen[static_cast<std::size_t>(t) * n_nodes + v]) {
                throw ValidationError(path + ": dense grid violated; first missing cell (t=" +
                                      std::to_string(t + t_min) + ", node=" + std::to_string(v) + ")");
            }
        }
    }
    for (int t = 0; t < t_steps; ++t) {
        const double tod = series.time_of_day(t);
        for (int v = 0; v < n_nodes; ++v) series.at(t, v, FeatureSeries::kTimeOfDay) = tod;
    }
    return series;
}

void save_features_csv(const std::string& path, const FeatureSeries& series) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "t,node,speed\n";
    for (int t = 0; t < series.t_steps; ++t) {
        for (int v = 0; v < series.n_nodes; ++v) {
            out << t << ',' << v << ',' << csv::format_double(series.speed(t, v)) << '\n';
        }
    }
    if (!out) throw IoError("write failed: " + path);
}

NormStats fit_normalizer(const FeatureSeries& series, TimeRange train_range) {
    if (train_range.length() <= 0 || train_range.begin < 0 || train_range.end > series.t_steps) {
        throw ValidationError("fit_normalizer: bad training range");
    }
    double mean = 0.0;
    const std::size_t count = static_cast<std::size_t>(train_range.length()) * series.n_nodes;
    for (int t = train_range.begin; t < train_range.end; ++t) {
        for (int v = 0; v < series.n_nodes; ++v) mean += series.speed(t, v);
    }
    mean /= static_cast<double>(count);
    double var = 0.0;
    for (int t = train_range.begin; t < train_range.end; ++t) {
        for (int v = 0; v < series.n_nodes; ++v) {
            const double d = series.speed(t, v) - mean;
            var += d * d;
        }
    }
    var /= static_cast<double>(count);
    if (var <= 0.0) throw ValidationError("fit_normalizer: zero variance in training speeds");
    return NormStats{mean, std::sqrt(var)};
}

FeatureSeries apply_normalizer(const FeatureSeries& series, const NormStats& stats) {
    FeatureSeries out = series;
    for (int t = 0; t < out.t_steps; ++t) {
        for (int v = 0; v < out.n_nodes; ++v) {
            out.at(t, v, FeatureSeries::kSpeed) = stats.normalize(series.speed(t, v));
        }
    }
    return out;
}

WindowSet make_windows(TimeRange range, int input_steps, int horizon_steps) {
    if (input_steps < 1 || horizon_steps < 1) {
        throw ConfigError("make_windows: input and horizon must be >= 1");
    }
    WindowSet set;
    set.input_steps = input_steps;
    set.horizon_steps = horizon_steps;
    const int span = input_steps + horizon_steps;
    if (range.length() < span) {
        set.range_too_short = true;
        return set;
    }
    const int count = range.length() - span + 1;
    set.samples.reserve(static_cast<std::size_t>(count));
    for (int s = range.begin; s + span <= range.end; ++s) set.samples.push_back({s});
    return set;
}

SplitSpec split_series(int t_steps, const std::array<double, 3>& ratios, int min_split_length) {
    double sum = ratios[0] + ratios[1] + ratios[2];
    if (ratios[0] <= 0.0 || ratios[1] <= 0.0 || ratios[2] <= 0.0 || std::fabs(sum - 1.0) > 1e-9) {
        throw ConfigError("split ratios must be positive and sum to 1");
    }
    SplitSpec spec;
    const int train_end = static_cast<int>(std::floor(t_steps * ratios[0]));
    const int val_end = static_cast<int>(std::floor(t_steps * (ratios[0] + ratios[1])));
    spec.train = {0, train_end};
    spec.val = {train_end, val_end};
    spec.test = {val_end, t_steps};
    for (const TimeRange& r : {spec.train, spec.val, spec.test}) {
        if (r.length() < min_split_length) {
            throw ConfigError("split of length " + std::to_string(r.length()) +
                              " is shorter than the minimum " + std::to_string(min_split_length));
        }
    }
    return spec;
}

FeatureSeries synthesize_traffic(const Graph& graph, int t_steps, const SynthDynamics& dyn,
                                 Rng& rng) {
    if (dyn.alpha < 0.0 || dyn.alpha > 1.0) throw ValidationError("alpha must be in [0,1]");
    if (dyn.noise_std < 0.0) throw ValidationError("noise_std must be >= 0");
    if (t_steps < 1) throw ValidationError("t_steps must be >= 1");
    const Tensor& a_hat = graph.normalized_adjacency();
    const int n = graph.num_nodes();

    FeatureSeries series = FeatureSeries::zeros(t_steps, n, dyn.step_minutes);
    std::vector<double> cur(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) cur[static_cast<std::size_t>(v)] = rng.uniform(dyn.init_low, dyn.init_high);

    std::vector<double> mixed(static_cast<std::size_t>(n));
    for (int t = 0; t < t_steps; ++t) {
        const double tod = series.time_of_day(t);
        for (int v = 0; v < n; ++v) {
            series.at(t, v, FeatureSeries::kSpeed) = cur[static_cast<std::size_t>(v)];
            series.at(t, v, FeatureSeries::kTimeOfDay) = tod;
        }
        if (t + 1 == t_steps) break;
        gemm_nn(a_hat.data(), cur.data(), mixed.data(), n, n, 1, false);
        const double drive = dyn.daily_amplitude * std::sin(2.0 * std::numbers::pi * tod);
        for (int v = 0; v < n; ++v) {
            double next = (1.0 - dyn.alpha) * cur[static_cast<std::size_t>(v)] +
                          dyn.alpha * mixed[static_cast<std::size_t>(v)] + drive;
            if (dyn.noise_std > 0.0) next += rng.normal(0.0, dyn.noise_std);
            cur[static_cast<std::size_t>(v)] = std::clamp(next, dyn.min_speed, dyn.max_speed);
        }
    }
    return series;
}

namespace {

struct Point {
    double x;
    double y;
};

double dist(const Point& a, const Point& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

}  // namespace

SynthGraphResult make_synth_graph(const SynthGraphConfig& cfg, Rng& rng) {
    if (cfg.n < 2) throw ValidationError("synthetic graph needs n >= 2");

    if (cfg.family == "ring") {
        std::vector<Edge> edges;
        const double w = std::exp(-1.0);  // unit spacing with sigma = spacing
        for (int i = 0; i < cfg.n; ++i) {
            const int j = (i + 1) % cfg.n;
            edges.push_back({i, j, w});
            edges.push_back({j, i, w});
        }
        return {Graph::from_edges(cfg.n, std::move(edges)), 1.0};
    }
    if (cfg.family == "complete") {
        std::vector<Edge> edges;
        const double w = std::exp(-1.0);
        for (int i = 0; i < cfg.n; ++i) {
            for (int j = 0; j < cfg.n; ++j) {
                if (i != j) edges.push_back({i, j, w});
            }
        }
        return {Graph::from_edges(cfg.n, std::move(edges)), 1.0};
    }
    if (cfg.family != "geometric_knn") {
        throw ConfigError("unknown graph family: " + cfg.family);
    }

    // Sensors scattered in a 1 km square.
    std::vector<Point> pos(static_cast<std::size_t>(cfg.n));
    for (auto& p : pos) {
        p.x = rng.uniform(0.0, 1000.0);
        p.y = rng.uniform(0.0, 1000.0);
    }
    std::vector<DistanceEntry> distances;
    distances.reserve(static_cast<std::size_t>(cfg.n) * (cfg.n - 1));
    for (int i = 0; i < cfg.n; ++i) {
        for (int j = 0; j < cfg.n; ++j) {
            if (i != j) {
                distances.push_back({i, j, dist(pos[static_cast<std::size_t>(i)],
                                                pos[static_cast<std::size_t>(j)])});
            }
        }
    }
    const double sigma = cfg.sigma > 0.0 ? cfg.sigma : default_sigma(distances);
    Graph base = graph_from_distances(distances, sigma, cfg.weight_floor, cfg.n);

    // Top up sparse nodes with their nearest neighbors so diffusion reaches
    // every sensor.
    std::set<std::pair<int, int>> have;
    std::vector<Edge> edges = base.edges();
    std::vector<int> out_degree(static_cast<std::size_t>(cfg.n), 0);
    for (const Edge& e : edges) {
        have.insert({e.src, e.dst});
        out_degree[static_cast<std::size_t>(e.src)] += 1;
    }
    for (int i = 0; i < cfg.n; ++i) {
        if (out_degree[static_cast<std::size_t>(i)] >= cfg.knn) continue;
        std::vector<std::pair<double, int>> by_dist;
        for (int j = 0; j < cfg.n; ++j) {
            if (j != i) by_dist.push_back({dist(pos[static_cast<std::size_t>(i)],
                                                pos[static_cast<std::size_t>(j)]), j});
        }
        std::sort(by_dist.begin(), by_dist.end());
        for (const auto& [d, j] : by_dist) {
            if (out_degree[static_cast<std::size_t>(i)] >= cfg.knn) break;
            if (have.count({i, j})) continue;
            const double w = std::exp(-(d * d) / (sigma * sigma));
            edges.push_back({i, j, w});
            have.insert({i, j});
            out_degree[static_cast<std::size_t>(i)] += 1;
            if (!have.count({j, i})) {
                edges.push_back({j, i, w});
                have.insert({j, i});
                out_degree[static_cast<std::size_t>(j)] += 1;
            }
        }
    }
    return {Graph::from_edges(cfg.n, std::move(edges)), sigma};
}

}  // namespace stdgi
