#include "stdgi/mi.hpp"

namespace stdgi {

DiscriminatorParams DiscriminatorParams::init(int embed_dim, int f_dim, int horizon_k, Rng& rng,
                                              int hidden_dim) {
    if (horizon_k < 1) throw ConfigError("discriminator horizon k must be >= 1");
    DiscriminatorParams p;
    p.in_dim = embed_dim + f_dim;
    p.hidden_dim = hidden_dim;
    p.horizon_k = horizon_k;
    p.w1 = glorot_init(p.in_dim, hidden_dim, rng);
    p.b1 = Tensor::zeros({1, hidden_dim});
    p.w2 = glorot_init(hidden_dim, 1, rng);
    p.b2 = Tensor::zeros({1, 1});
    for (Tensor& t : p.parameters()) t.set_requires_grad(true);
    return p;
}

std::vector<Tensor> DiscriminatorParams::parameters() {
    return {w1, b1, w2, b2};
}

std::vector<std::pair<std::string, Tensor>> DiscriminatorParams::named_parameters() {
    const std::string prefix = "discriminator.k" + std::to_string(horizon_k) + ".";
    return {{prefix + "layer1.weight", w1},
            {prefix + "layer1.bias", b1},
            {prefix + "layer2.weight", w2},
            {prefix + "layer2.bias", b2}};
}

Tensor apply_row_permutation(const Tensor& x_t, const std::vector<int>& perm) {
    if (x_t.rank() != 2) throw DimensionError("corrupt: features must be rank-2, got " + shape_str(x_t));
    const int n = x_t.rows(), f = x_t.cols();
    if (static_cast<int>(perm.size()) != n) {
        throw DimensionError("permutation length " + std::to_string(perm.size()) +
                             " does not match row count " + std::to_string(n));
    }
    Tensor out = Tensor::zeros({n, f});
    for (int i = 0; i < n; ++i) {
        const int src = perm[static_cast<std::size_t>(i)];
        if (src < 0 || src >= n) throw ValidationError("permutation index out of range");
        std::copy(x_t.data() + static_cast<std::size_t>(src) * f,
                  x_t.data() + static_cast<std::size_t>(src + 1) * f,
                  out.data() + static_cast<std::size_t>(i) * f);
    }
    return out;
}

Tensor corrupt(const Tensor& x_t, Rng& rng) {
    if (x_t.rank() != 2) throw DimensionError("corrupt: features must be rank-2, got " + shape_str(x_t));
    if (x_t.rows() < 2) {
        throw ValidationError("corrupt: need at least 2 nodes to permute, got " +
                              std::to_string(x_t.rows()));
    }
    return apply_row_permutation(x_t, rng.permutation(x_t.rows()));
}

Tensor discriminate_batch(Tape* tape, const Tensor& h, const Tensor& x,
                          DiscriminatorParams& params) {
    if (h.rank() != 2 || x.rank() != 2 || h.rows() != x.rows()) {
        throw DimensionError("discriminate: embedding " + shape_str(h) + " and features " +
                             shape_str(x) + " must have equal row counts");
    }
    if (h.cols() + x.cols() != params.in_dim) {
        throw DimensionError("discriminate: pair width " + std::to_string(h.cols() + x.cols()) +
                             " does not match discriminator input " + std::to_string(params.in_dim));
    }
    Tensor pair = ops::concat_cols(tape, h, x);
    Tensor hidden = ops::relu(
        tape, ops::add(tape, ops::matmul(tape, pair, params.w1), params.b1));
    return ops::sigmoid(tape, ops::add(tape, ops::matmul(tape, hidden, params.w2), params.b2));
}

Tensor discriminate(Tape* tape, const Tensor& h, const Tensor& x, DiscriminatorParams& params) {
    if (h.rank() != 1 || x.rank() != 1) {
        throw DimensionError("discriminate: expects rank-1 vectors, got " + shape_str(h) + " and " +
                             shape_str(x));
    }
    Tensor h2 = ops::reshape(tape, h, {1, h.shape()[0]});
    Tensor x2 = ops::reshape(tape, x, {1, x.shape()[0]});
    return discriminate_batch(tape, h2, x2, params);
}

Tensor infomax_loss(Tape* tape, const Tensor& pos_scores, const Tensor& neg_scores) {
    if (pos_scores.numel() == 0 || neg_scores.numel() == 0) {
        throw ContractError("infomax_loss: empty score batch");
    }
    for (std::size_t i = 0; i < pos_scores.numel(); ++i) {
        const double s = pos_scores.data()[i];
        if (s < 0.0 || s > 1.0) throw ContractError("infomax_loss: positive score outside [0,1]");
    }
    for (std::size_t i = 0; i < neg_scores.numel(); ++i) {
        const double s = neg_scores.data()[i];
        if (s < 0.0 || s > 1.0) throw ContractError("infomax_loss: negative score outside [0,1]");
    }
    constexpr double kGuard = 1e-7;
    Tensor pos_term = ops::mean_all(tape, ops::log(tape, ops::clamp(tape, pos_scores, kGuard, 1.0 - kGuard)));
    Tensor flipped = ops::sub(tape, Tensor::full(neg_scores.shape(), 1.0), neg_scores);
    Tensor neg_term = ops::mean_all(tape, ops::log(tape, ops::clamp(tape, flipped, kGuard, 1.0 - kGuard)));
    return ops::scale(tape, ops::add(tape, pos_term, neg_term), -0.5);
}

}  // namespace stdgi
