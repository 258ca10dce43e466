#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stdgi/tensor.hpp"

namespace stdgi {

struct Edge {
    int src = 0;
    int dst = 0;
    double weight = 0.0;
};

struct DistanceEntry {
    int src = 0;
    int dst = 0;
    double meters = 0.0;
};

enum class AdjNormalization { Row, Symmetric };

// Weighted directed sensor graph. Row i of the adjacency holds the weights
// of edges leaving node i, so A_hat * X mixes node i with its out-neighbors.
// Immutable once built; the normalized adjacency is cached by
// normalize_adjacency and required before any convolution runs.
class Graph {
public:
    Graph() = default;
    static Graph from_edges(int num_nodes, std::vector<Edge> edges);

    int num_nodes() const { return num_nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }

    bool has_normalized_adjacency() const { return normalized_adjacency_.defined(); }
    const Tensor& normalized_adjacency() const;

    friend Graph normalize_adjacency(const Graph& g, AdjNormalization mode);

private:
    int num_nodes_ = 0;
    std::vector<Edge> edges_;
    Tensor normalized_adjacency_;
};

// Gaussian kernel weights w = exp(-d^2 / sigma^2); edges below weight_floor
// are dropped, self-distances ignored. Node count is 1 + max id unless given.
Graph graph_from_distances(const std::vector<DistanceEntry>& distances, double sigma,
                           double weight_floor, std::optional<int> num_nodes = std::nullopt);

// Default kernel bandwidth: standard deviation of the provided distances
// (falls back to the mean when the distances are all equal).
double default_sigma(const std::vector<DistanceEntry>& distances);

// Row mode: A_hat = D^-1 (W + I). Symmetric mode: D^-1/2 (W + I) D^-1/2.
Graph normalize_adjacency(const Graph& g, AdjNormalization mode = AdjNormalization::Row);

// CSV with header "src,dst,weight".
Graph load_edge_list(const std::string& path, std::optional<int> num_nodes = std::nullopt);
void save_edge_list(const std::string& path, const Graph& g);

// CSV with header "src,dst,distance_m".
std::vector<DistanceEntry> load_distances_csv(const std::string& path);

}  // namespace stdgi
