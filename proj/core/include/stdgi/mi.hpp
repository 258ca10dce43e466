#pragma once

#include <string>
#include <utility>
#include <vector>

#include "stdgi/optim.hpp"
#include "stdgi/rng.hpp"
#include "stdgi/tensor.hpp"

namespace stdgi {

// Two-layer scorer for (embedding, future raw features) pairs. One instance
// per future horizon k; hidden width 6, scalar sigmoid output.
struct DiscriminatorParams {
    int in_dim = 0;  // embed_dim + F
    int hidden_dim = 6;
    int horizon_k = 1;
    Tensor w1, b1;
    Tensor w2, b2;

    static DiscriminatorParams init(int embed_dim, int f_dim, int horizon_k, Rng& rng,
                                    int hidden_dim = 6);

    std::vector<Tensor> parameters();
    std::vector<std::pair<std::string, Tensor>> named_parameters();
};

// Negative-sample corruption: permute node rows with a uniformly random
// permutation. The multiset of rows (and so all per-step marginals) is
// preserved. Needs at least two rows to do anything.
Tensor corrupt(const Tensor& x_t, Rng& rng);
Tensor apply_row_permutation(const Tensor& x_t, const std::vector<int>& perm);

// sigmoid(w2 . relu(w1 [h ++ x] + b1) + b2), scored row-wise: h is B x embed,
// x is B x F, result B x 1 in (0,1).
Tensor discriminate_batch(Tape* tape, const Tensor& h, const Tensor& x,
                          DiscriminatorParams& params);

// Single-pair form: h and x are rank-1 vectors; returns a 1 x 1 score.
Tensor discriminate(Tape* tape, const Tensor& h, const Tensor& x, DiscriminatorParams& params);

// Binary cross entropy pushing positive scores to 1 and negatives to 0:
//   L = -( mean log pos + mean log(1 - neg) ) / 2,
// scores clamped to [1e-7, 1 - 1e-7] before the log.
Tensor infomax_loss(Tape* tape, const Tensor& pos_scores, const Tensor& neg_scores);

}  // namespace stdgi
