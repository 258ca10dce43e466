#include "stdgi/encoder.hpp"

namespace stdgi {

EncoderParams EncoderParams::init(int f_dim, int hidden_dim, int embed_dim, Rng& rng) {
    EncoderParams p;
    p.f_dim = f_dim;
    p.hidden_dim = hidden_dim;
    p.embed_dim = embed_dim;
    p.linear_w = glorot_init(f_dim, hidden_dim, rng);
    p.linear_b = Tensor::zeros({1, hidden_dim});
    p.gc1_w = glorot_init(hidden_dim, hidden_dim, rng);
    p.gc1_b = Tensor::zeros({1, hidden_dim});
    p.gc2_w = glorot_init(hidden_dim, embed_dim, rng);
    p.gc2_b = Tensor::zeros({1, embed_dim});
    for (Tensor& t : p.parameters()) t.set_requires_grad(true);
    return p;
}

std::vector<Tensor> EncoderParams::parameters() {
    return {linear_w, linear_b, gc1_w, gc1_b, gc2_w, gc2_b};
}

std::vector<std::pair<std::string, Tensor>> EncoderParams::named_parameters() {
    return {{"encoder.linear.weight", linear_w}, {"encoder.linear.bias", linear_b},
            {"encoder.gc1.weight", gc1_w},       {"encoder.gc1.bias", gc1_b},
            {"encoder.gc2.weight", gc2_w},       {"encoder.gc2.bias", gc2_b}};
}

Tensor gcn_layer(Tape* tape, const Tensor& h_in, const Tensor& a_hat, const Tensor& weight,
                 const Tensor& bias, Activation activation) {
    Tensor mixed = ops::adj_mix(tape, a_hat, ops::matmul(tape, h_in, weight));
    Tensor pre = ops::add(tape, mixed, bias);
    return activation == Activation::Relu ? ops::relu(tape, pre) : pre;
}

Tensor encode_batch(Tape* tape, const Tensor& x_stack, const Graph& graph, EncoderParams& params) {
    const int n = graph.num_nodes();
    if (x_stack.rank() != 2 || x_stack.rows() % n != 0) {
        throw DimensionError("encode: input rows " + shape_str(x_stack) +
                             " not a multiple of node count " + std::to_string(n));
    }
    if (x_stack.cols() != params.f_dim) {
        throw DimensionError("encode: feature dim mismatch, input " + shape_str(x_stack) +
                             " vs F=" + std::to_string(params.f_dim));
    }
    const Tensor& a_hat = graph.normalized_adjacency();
    Tensor h = ops::relu(tape, ops::add(tape, ops::matmul(tape, x_stack, params.linear_w),
                                        params.linear_b));
    h = gcn_layer(tape, h, a_hat, params.gc1_w, params.gc1_b, Activation::Relu);
    return gcn_layer(tape, h, a_hat, params.gc2_w, params.gc2_b, Activation::Identity);
}

Tensor encode(Tape* tape, const Tensor& x_t, const Graph& graph, EncoderParams& params) {
    if (x_t.rank() != 2 || x_t.rows() != graph.num_nodes()) {
        throw DimensionError("encode: got " + shape_str(x_t) + " for a graph of " +
                             std::to_string(graph.num_nodes()) + " nodes");
    }
    return encode_batch(tape, x_t, graph, params);
}

EmbeddingSeries EmbeddingSeries::zeros(int t_steps, int n_nodes, int k_dim) {
    EmbeddingSeries e;
    e.t_steps = t_steps;
    e.n_nodes = n_nodes;
    e.k_dim = k_dim;
    e.values.assign(static_cast<std::size_t>(t_steps) * n_nodes * k_dim, 0.0);
    return e;
}

double EmbeddingSeries::at(int t, int node, int k) const {
    return values[(static_cast<std::size_t>(t) * n_nodes + node) * k_dim + k];
}

const double* EmbeddingSeries::row(int t, int node) const {
    return values.data() + (static_cast<std::size_t>(t) * n_nodes + node) * k_dim;
}

}  // namespace stdgi
