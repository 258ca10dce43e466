#pragma once

#include <string>
#include <utility>
#include <vector>

#include "stdgi/graph.hpp"
#include "stdgi/optim.hpp"
#include "stdgi/tensor.hpp"

namespace stdgi {

// Graph-convolutional encoder: per-node linear layer, then two graph
// convolutions. Defaults are 64 hidden units and 128-dimensional embeddings.
struct EncoderParams {
    int f_dim = 2;
    int hidden_dim = 64;
    int embed_dim = 128;
    Tensor linear_w, linear_b;
    Tensor gc1_w, gc1_b;
    Tensor gc2_w, gc2_b;

    static EncoderParams init(int f_dim, int hidden_dim, int embed_dim, Rng& rng);

    std::vector<Tensor> parameters();
    std::vector<std::pair<std::string, Tensor>> named_parameters();
};

enum class Activation { Relu, Identity };

// activation(A_hat * h_in * weight + bias) for one time step (h_in is N x d_in).
Tensor gcn_layer(Tape* tape, const Tensor& h_in, const Tensor& a_hat, const Tensor& weight,
                 const Tensor& bias, Activation activation);

// Embeddings for one time step: x_t is N x F, the result N x embed_dim.
Tensor encode(Tape* tape, const Tensor& x_t, const Graph& graph, EncoderParams& params);

// Batched form: x_stack holds B time steps stacked row-wise, (B*N) x F.
Tensor encode_batch(Tape* tape, const Tensor& x_stack, const Graph& graph, EncoderParams& params);

// Encoder outputs for a whole series, T x N x K row-major.
struct EmbeddingSeries {
    int t_steps = 0;
    int n_nodes = 0;
    int k_dim = 0;
    std::vector<double> values;

    static EmbeddingSeries zeros(int t_steps, int n_nodes, int k_dim);
    double at(int t, int node, int k) const;
    const double* row(int t, int node) const;
};

}  // namespace stdgi
