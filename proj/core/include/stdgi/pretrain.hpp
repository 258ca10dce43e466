#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stdgi/dataset.hpp"
#include "stdgi/encoder.hpp"
#include "stdgi/mi.hpp"

namespace stdgi {

struct PretrainConfig {
    int epochs = 100;
    int batch_size = 64;  // time steps per optimizer step
    LrSchedule schedule{1e-3, 20, 30, 0.1};
    std::vector<int> ks = {1, 3, 6};
    int hidden_dim = 64;
    int embed_dim = 128;
    std::uint64_t seed = 1;
    int holdout_max_steps = 256;  // cap on held-out evaluation time steps

    void validate() const;
};

// Encoder plus one discriminator per horizon k, trained jointly.
struct PretrainModel {
    EncoderParams encoder;
    std::vector<DiscriminatorParams> discriminators;

    std::vector<Tensor> parameters();
    std::vector<std::pair<std::string, Tensor>> named_parameters();
};

struct EpochStats {
    double loss = 0.0;
    double holdout_accuracy = 0.0;
    double lr = 0.0;
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
};

// Fixed positive/negative pairs drawn from a held-out range, used to track
// discriminator accuracy across epochs.
struct HoldoutPairs {
    std::vector<int> time_steps;
    // corrupted future rows per (step, k), each N x F
    std::vector<std::vector<Tensor>> corrupted;

    static HoldoutPairs build(const FeatureSeries& series, TimeRange range,
                              const std::vector<int>& ks, int max_steps, Rng& rng);
};

// One pass over the training range: shuffled valid time steps in batches,
// per step positives (h_v(t), x_v(t+k)) and permutation-corrupted negatives
// for every k, loss averaged over ks, one Adam step per batch.
double pretrain_epoch(const FeatureSeries& series, const Graph& graph, PretrainModel& model,
                      const PretrainConfig& config, TimeRange train_range, double lr,
                      std::vector<Tensor>& param_list, AdamState& adam, Rng& rng);

// Full unsupervised run. Training samples come from the train split only;
// accuracy is tracked on pairs from the val split.
std::pair<PretrainModel, TrainHistory> pretrain(const FeatureSeries& series, const Graph& graph,
                                                const SplitSpec& splits, const PretrainConfig& config);

double holdout_accuracy(const FeatureSeries& series, const Graph& graph, PretrainModel& model,
                        const HoldoutPairs& pairs);

// Frozen-encoder embeddings for every time step.
EmbeddingSeries export_embeddings(const FeatureSeries& series, const Graph& graph,
                                  EncoderParams& encoder);

// 2-D principal-component projection of all (t, node) embeddings. Columns of
// the projection have zero empirical mean.
struct PcaProjection {
    std::vector<double> xy;  // (T*N) x 2 row-major

    double x(int t, int node, int n_nodes) const {
        return xy[(static_cast<std::size_t>(t) * n_nodes + node) * 2];
    }
    double y(int t, int node, int n_nodes) const {
        return xy[(static_cast<std::size_t>(t) * n_nodes + node) * 2 + 1];
    }
};

PcaProjection pca_project_2d(const EmbeddingSeries& embeddings);

// CSV "t,node,x,y,speed_t_plus_3": the projection with each node's speed
// three steps ahead attached (literal "nan" when t+3 is beyond the series).
void write_pca_csv(const std::string& path, const EmbeddingSeries& embeddings,
                   const PcaProjection& proj, const FeatureSeries& series_mph,
                   int speed_lookahead = 3);

}  // namespace stdgi
