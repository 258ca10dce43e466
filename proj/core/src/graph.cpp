#include "stdgi/graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include "csv_util.hpp"

namespace stdgi {

Graph Graph::from_edges(int num_nodes, std::vector<Edge> edges) {
    if (num_nodes < 1) throw ValidationError("graph must have at least one node");
    std::set<std::pair<int, int>> seen;
    for (const Edge& e : edges) {
        if (e.src < 0 || e.src >= num_nodes || e.dst < 0 || e.dst >= num_nodes) {
            throw ValidationError("edge (" + std::to_string(e.src) + "," + std::to_string(e.dst) +
                                  ") out of range for " + std::to_string(num_nodes) + " nodes");
        }
        if (e.weight <= 0.0) {
            throw ValidationError("edge (" + std::to_string(e.src) + "," + std::to_string(e.dst) +
                                  ") has non-positive weight " + std::to_string(e.weight));
        }
        if (!seen.insert({e.src, e.dst}).second) {
            throw ValidationError("duplicate edge (" + std::to_string(e.src) + "," +
                                  std::to_string(e.dst) + ")");
        }
    }
    Graph g;
    g.num_nodes_ = num_nodes;
    g.edges_ = std::move(edges);
    return g;
}

const Tensor& Graph::normalized_adjacency() const {
    if (!normalized_adjacency_.defined()) {
        throw StateError("normalized adjacency not computed; call normalize_adjacency first");
    }
    return normalized_adjacency_;
}

Graph graph_from_distances(const std::vector<DistanceEntry>& distances, double sigma,
                           double weight_floor, std::optional<int> num_nodes) {
    if (sigma <= 0.0) throw ValidationError("sigma must be positive");
    if (weight_floor <= 0.0 || weight_floor >= 1.0) {
        throw ValidationError("weight_floor must be in (0,1)");
    }
    int max_id = -1;
    for (const DistanceEntry& d : distances) {
        if (d.meters < 0.0) {
            throw ValidationError("negative distance " + std::to_string(d.meters) + " for (" +
                                  std::to_string(d.src) + "," + std::to_string(d.dst) + ")");
        }
        max_id = std::max({max_id, d.src, d.dst});
    }
    const int n = num_nodes.value_or(max_id + 1);
    std::vector<Edge> edges;
    for (const DistanceEntry& d : distances) {
        if (d.src == d.dst) continue;  // self-loops come from normalization
        const double w = std::exp(-(d.meters * d.meters) / (sigma * sigma));
        if (w < weight_floor) continue;
        edges.push_back({d.src, d.dst, w});
    }
    return Graph::from_edges(std::max(n, 1), std::move(edges));
}

double default_sigma(const std::vector<DistanceEntry>& distances) {
    if (distances.empty()) throw ValidationError("default_sigma: no distances");
    double mean = 0.0;
    for (const DistanceEntry& d : distances) mean += d.meters;
    mean /= static_cast<double>(distances.size());
    double var = 0.0;
    for (const DistanceEntry& d : distances) var += (d.meters - mean) * (d.meters - mean);
    var /= static_cast<double>(distances.size());
    const double sd = std::sqrt(var);
    if (sd > 0.0) return sd;
    if (mean > 0.0) return mean;
    throw ValidationError("default_sigma: distances are all zero");
}

Graph normalize_adjacency(const Graph& g, AdjNormalization mode) {
    const int n = g.num_nodes();
    Tensor a = Tensor::zeros({n, n});
    for (const Edge& e : g.edges()) a.at(e.src, e.dst) += e.weight;
    for (int i = 0; i < n; ++i) a.at(i, i) += 1.0;  // unit self-loops

    std::vector<double> degree(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) degree[static_cast<std::size_t>(i)] += a.at(i, j);
    }
    if (mode == AdjNormalization::Row) {
        for (int i = 0; i < n; ++i) {
            const double inv = 1.0 / degree[static_cast<std::size_t>(i)];
            for (int j = 0; j < n; ++j) a.at(i, j) *= inv;
        }
    } else {
        for (int i = 0; i < n; ++i) {
            const double di = 1.0 / std::sqrt(degree[static_cast<std::size_t>(i)]);
            for (int j = 0; j < n; ++j) {
                const double dj = 1.0 / std::sqrt(degree[static_cast<std::size_t>(j)]);
                a.at(i, j) *= di * dj;
            }
        }
    }
    Graph out = g;
    out.normalized_adjacency_ = a;
    return out;
}

Graph load_edge_list(const std::string& path, std::optional<int> num_nodes) {
    auto lines = csv::read_csv(path, "src,dst,weight");
    std::vector<Edge> edges;
    std::vector<std::string_view> fields;
    int max_id = -1;
    for (const auto& dl : lines) {
        csv::split_fields(dl.text, fields);
        if (fields.size() != 3) {
            throw ParseError(path + ":" + std::to_string(dl.line_no) + ": expected 3 fields, got " +
                             std::to_string(fields.size()));
        }
        Edge e;
        e.src = static_cast<int>(csv::parse_long(fields[0], path, dl.line_no));
        e.dst = static_cast<int>(csv::parse_long(fields[1], path, dl.line_no));
        e.weight = csv::parse_double(fields[2], path, dl.line_no);
        max_id = std::max({max_id, e.src, e.dst});
        edges.push_back(e);
    }
    const int n = num_nodes.value_or(max_id + 1);
    return Graph::from_edges(std::max(n, 1), std::move(edges));
}

void save_edge_list(const std::string& path, const Graph& g) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "src,dst,weight\n";
    for (const Edge& e : g.edges()) {
        out << e.src << ',' << e.dst << ',' << csv::format_double(e.weight) << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

std::vector<DistanceEntry> load_distances_csv(const std::string& path) {
    auto lines = csv::read_csv(path, "src,dst,distance_m");
    std::vector<DistanceEntry> distances;
    std::vector<std::string_view> fields;
    for (const auto& dl : lines) {
        csv::split_fields(dl.text, fields);
        if (fields.size() != 3) {
            throw ParseError(path + ":" + std::to_string(dl.line_no) + ": expected 3 fields, got " +
                             std::to_string(fields.size()));
        }
        DistanceEntry d;
        d.src = static_cast<int>(csv::parse_long(fields[0], path, dl.line_no));
        d.dst = static_cast<int>(csv::parse_long(fields[1], path, dl.line_no));
        d.meters = csv::parse_double(fields[2], path, dl.line_no);
        if (d.meters < 0.0) {
            throw ValidationError(path + ":" + std::to_string(dl.line_no) + ": negative distance");
        }
        distances.push_back(d);
    }
    return distances;
}

}  // namespace stdgi
