#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stdgi/dataset.hpp"
#include "stdgi/encoder.hpp"
#include "stdgi/metrics.hpp"
#include "stdgi/optim.hpp"
#include "stdgi/tensor.hpp"

namespace stdgi {

// Single LSTM layer. Gate order in the stacked weight columns is
// [input | forget | candidate | output], each `hidden_dim` wide. The forget
// gate bias starts at 1.
struct LstmParams {
    int d_in = 0;
    int hidden_dim = 64;
    Tensor wx;  // d_in x 4H
    Tensor wh;  // H x 4H
    Tensor b;   // 1 x 4H

    static LstmParams init(int d_in, int hidden_dim, Rng& rng);
    std::vector<Tensor> parameters();
    std::vector<std::pair<std::string, Tensor>> named_parameters(const std::string& prefix);
};

struct LstmState {
    Tensor h;  // B x H
    Tensor c;  // B x H

    static LstmState zeros(int batch, int hidden_dim);
};

LstmState lstm_cell(Tape* tape, const Tensor& x, const LstmState& state, LstmParams& params);

// Encoder-decoder pair with a scalar output head. The decoder consumes the
// previous speed (ground truth under teacher forcing, its own output
// otherwise) and starts from the last observed speed.
struct Seq2SeqParams {
    int d_in = 0;
    int hidden_dim = 64;
    LstmParams encoder;
    LstmParams decoder;  // d_in = 1
    Tensor head_w;       // H x 1
    Tensor head_b;       // 1 x 1

    static Seq2SeqParams init(int d_in, int hidden_dim, Rng& rng);
    std::vector<Tensor> parameters();
    std::vector<std::pair<std::string, Tensor>> named_parameters();
};

// Batched forward pass. `inputs` holds input_steps tensors of shape B x d_in;
// `last_speed` is B x 1. With `teacher` given (horizon tensors of B x 1 true
// speeds) the decoder is teacher-forced; otherwise it feeds back its own
// predictions. Returns horizon tensors of B x 1 predictions.
std::vector<Tensor> seq2seq_forecast_batch(Tape* tape, const std::vector<Tensor>& inputs,
                                           const Tensor& last_speed, Seq2SeqParams& params,
                                           const std::vector<Tensor>* teacher, int horizon_steps);

// Single-sequence convenience: input_seq is input_steps x d_in with the
// (normalized) speed in column 0; returns horizon predictions.
std::vector<double> seq2seq_forecast(const Tensor& input_seq, Seq2SeqParams& params,
                                     std::optional<std::span<const double>> teacher = std::nullopt,
                                     int horizon_steps = 12);

struct RegressorConfig {
    int epochs = 120;
    int batch_size = 64;
    LrSchedule schedule{1e-2, 20, 30, 0.1};
    int input_steps = 12;
    int horizon_steps = 12;
    int hidden_dim = 64;
    std::string mode = "baseline";  // "baseline" | "stdgi"
    std::uint64_t seed = 1;
    long samples_per_epoch = 0;  // 0 = every (window, node) pair each epoch

    int d_in(int f_dim, int embed_dim) const;
    void validate() const;
};

struct RegressorHistory {
    std::vector<double> train_loss;  // normalized-space horizon MAE
    std::vector<double> val_mae;     // normalized-space, autoregressive
    int best_epoch = -1;
};

// Supervised training over (window, node) samples from the train split; the
// best-validation parameters are returned. `embeddings` is required in stdgi
// mode and must cover the whole series.
std::pair<Seq2SeqParams, RegressorHistory> train_regressor(const FeatureSeries& norm_series,
                                                           const EmbeddingSeries* embeddings,
                                                           const SplitSpec& splits,
                                                           const RegressorConfig& config);

// Autoregressive forecasts for every window, inverse-normalized to mph.
PredictionSet predict(Seq2SeqParams& params, const FeatureSeries& norm_series,
                      const EmbeddingSeries* embeddings, const WindowSet& windows,
                      const NormStats& stats);

// Copy-last-value forecaster evaluated through the same reporting path.
PredictionSet persistence_predictions(const FeatureSeries& norm_series, const WindowSet& windows,
                                      const NormStats& stats);

}  // namespace stdgi
