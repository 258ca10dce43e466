#include "stdgi/forecaster.hpp"

#include <algorithm>
#include <cmath>

namespace stdgi {

LstmParams LstmParams::init(int d_in, int hidden_dim, Rng& rng) {
    if (d_in < 1 || hidden_dim < 1) throw ConfigError("lstm: dims must be >= 1");
    LstmParams p;
    p.d_in = d_in;
    p.hidden_dim = hidden_dim;
    p.wx = glorot_init(d_in, 4 * hidden_dim, rng);
    p.wh = glorot_init(hidden_dim, 4 * hidden_dim, rng);
    p.b = Tensor::zeros({1, 4 * hidden_dim});
    for (int j = hidden_dim; j < 2 * hidden_dim; ++j) p.b.at(0, j) = 1.0;  // forget gate
    for (Tensor& t : p.parameters()) t.set_requires_grad(true);
    return p;
}

std::vector<Tensor> LstmParams::parameters() { return {wx, wh, b}; }

std::vector<std::pair<std::string, Tensor>> LstmParams::named_parameters(const std::string& prefix) {
    return {{prefix + ".wx", wx}, {prefix + ".wh", wh}, {prefix + ".bias", b}};
}

LstmState LstmState::zeros(int batch, int hidden_dim) {
    return {Tensor::zeros({batch, hidden_dim}), Tensor::zeros({batch, hidden_dim})};
}

LstmState lstm_cell(Tape* tape, const Tensor& x, const LstmState& state, LstmParams& params) {
    if (x.rank() != 2 || x.cols() != params.d_in) {
        throw DimensionError("lstm_cell: input " + shape_str(x) + " does not match d_in=" +
                             std::to_string(params.d_in));
    }
    if (state.h.rows() != x.rows() || state.h.cols() != params.hidden_dim ||
        state.c.rows() != x.rows() || state.c.cols() != params.hidden_dim) {
        throw DimensionError("lstm_cell: state shape mismatch, h=" + shape_str(state.h) +
                             " c=" + shape_str(state.c));
    }
    const int hd = params.hidden_dim;
    Tensor gates = ops::add(
        tape, ops::add(tape, ops::matmul(tape, x, params.wx), ops::matmul(tape, state.h, params.wh)),
        params.b);
    Tensor gi = ops::sigmoid(tape, ops::slice_cols(tape, gates, 0, hd));
    Tensor gf = ops::sigmoid(tape, ops::slice_cols(tape, gates, hd, 2 * hd));
    Tensor gg = ops::tanh(tape, ops::slice_cols(tape, gates, 2 * hd, 3 * hd));
    Tensor go = ops::sigmoid(tape, ops::slice_cols(tape, gates, 3 * hd, 4 * hd));
    Tensor c_new = ops::add(tape, ops::mul(tape, gf, state.c), ops::mul(tape, gi, gg));
    Tensor h_new = ops::mul(tape, go, ops::tanh(tape, c_new));
    return {h_new, c_new};
}

Seq2SeqParams Seq2SeqParams::init(int d_in, int hidden_dim, Rng& rng) {
    Seq2SeqParams p;
    p.d_in = d_in;
    p.hidden_dim = hidden_dim;
    p.encoder = LstmParams::init(d_in, hidden_dim, rng);
    p.decoder = LstmParams::init(1, hidden_dim, rng);
    p.head_w = glorot_init(hidden_dim, 1, rng);
    p.head_b = Tensor::zeros({1, 1});
    p.head_w.set_requires_grad(true);
    p.head_b.set_requires_grad(true);
    return p;
}

std::vector<Tensor> Seq2SeqParams::parameters() {
    std::vector<Tensor> all;
    for (Tensor& t : encoder.parameters()) all.push_back(t);
    for (Tensor& t : decoder.parameters()) all.push_back(t);
    all.push_back(head_w);
    all.push_back(head_b);
    return all;
}

std::vector<std::pair<std::string, Tensor>> Seq2SeqParams::named_parameters() {
    std::vector<std::pair<std::string, Tensor>> all;
    for (auto& nv : encoder.named_parameters("seq2seq.encoder")) all.push_back(nv);
    for (auto& nv : decoder.named_parameters("seq2seq.decoder")) all.push_back(nv);
    all.push_back({"seq2seq.head.weight", head_w});
    all.push_back({"seq2seq.head.bias", head_b});
    return all;
}

std::vector<Tensor> seq2seq_forecast_batch(Tape* tape, const std::vector<Tensor>& inputs,
                                           const Tensor& last_speed, Seq2SeqParams& params,
                                           const std::vector<Tensor>* teacher, int horizon_steps) {
    if (inputs.empty()) throw ContractError("seq2seq: empty input sequence");
    if (teacher && static_cast<int>(teacher->size()) != horizon_steps) {
        throw ContractError("seq2seq: teacher sequence length " + std::to_string(teacher->size()) +
                            " != horizon " + std::to_string(horizon_steps));
    }
    const int batch = inputs.front().rows();
    LstmState state = LstmState::zeros(batch, params.hidden_dim);
    for (const Tensor& x : inputs) state = lstm_cell(tape, x, state, params.encoder);

    std::vector<Tensor> preds;
    preds.reserve(static_cast<std::size_t>(horizon_steps));
    Tensor dec_in = last_speed;
    for (int j = 0; j < horizon_steps; ++j) {
        state = lstm_cell(tape, dec_in, state, params.decoder);
        Tensor y = ops::add(tape, ops::matmul(tape, state.h, params.head_w), params.head_b);
        preds.push_back(y);
        if (j + 1 < horizon_steps) {
            dec_in = teacher ? (*teacher)[static_cast<std::size_t>(j)] : y;
        }
    }
    return preds;
}

std::vector<double> seq2seq_forecast(const Tensor& input_seq, Seq2SeqParams& params,
                                     std::optional<std::span<const double>> teacher,
                                     int horizon_steps) {
    if (input_seq.rank() != 2 || input_seq.cols() != params.d_in) {
        throw ContractError("seq2seq_forecast: input must be steps x d_in, got " +
                            shape_str(input_seq));
    }
    if (teacher && static_cast<int>(teacher->size()) != horizon_steps) {
        throw ContractError("seq2seq_forecast: teacher length mismatch");
    }
    const int steps = input_seq.rows();
    std::vector<Tensor> inputs;
    inputs.reserve(static_cast<std::size_t>(steps));
    for (int t = 0; t < steps; ++t) {
        std::vector<double> row(static_cast<std::size_t>(params.d_in));
        for (int j = 0; j < params.d_in; ++j) row[static_cast<std::size_t>(j)] = input_seq.at(t, j);
        inputs.push_back(Tensor::from_values({1, params.d_in}, std::move(row)));
    }
    Tensor last_speed = Tensor::from_values({1, 1}, {input_seq.at(steps - 1, 0)});
    std::vector<Tensor> teacher_cols;
    if (teacher) {
        for (double v : *teacher) teacher_cols.push_back(Tensor::from_values({1, 1}, {v}));
    }
    std::vector<Tensor> preds = seq2seq_forecast_batch(
        nullptr, inputs, last_speed, params, teacher ? &teacher_cols : nullptr, horizon_steps);
    std::vector<double> out;
    out.reserve(preds.size());
    for (const Tensor& y : preds) out.push_back(y.item());
    return out;
}

int RegressorConfig::d_in(int f_dim, int embed_dim) const {
    return mode == "stdgi" ? f_dim + embed_dim : f_dim;
}

void RegressorConfig::validate() const {
    if (epochs < 1 || batch_size < 1) throw ConfigError("regressor: epochs and batch_size must be >= 1");
    if (input_steps < 1 || horizon_steps < 1) throw ConfigError("regressor: steps must be >= 1");
    if (hidden_dim < 1) throw ConfigError("regressor: hidden_dim must be >= 1");
    if (mode != "baseline" && mode != "stdgi") throw ConfigError("regressor: mode must be baseline|stdgi");
    if (samples_per_epoch < 0) throw ConfigError("regressor: samples_per_epoch must be >= 0");
    schedule.validate();
}

namespace {

struct TrainSample {
    int start;
    int node;
};

// Step input rows: [speed, tod] plus the node's embedding in stdgi mode.
Tensor build_step_input(const FeatureSeries& series, const EmbeddingSeries* emb,
                        std::span<const TrainSample> samples, int step, int d_in) {
    const int batch = static_cast<int>(samples.size());
    Tensor x = Tensor::zeros({batch, d_in});
    double* row = x.data();
    for (const TrainSample& s : samples) {
        const int t = s.start + step;
        row[0] = series.speed(t, s.node);
        row[1] = series.at(t, s.node, FeatureSeries::kTimeOfDay);
        if (emb) {
            std::copy(emb->row(t, s.node), emb->row(t, s.node) + emb->k_dim, row + series.f_dim);
        }
        row += d_in;
    }
    return x;
}

Tensor build_speed_col(const FeatureSeries& series, std::span<const TrainSample> samples, int step) {
    const int batch = static_cast<int>(samples.size());
    Tensor x = Tensor::zeros({batch, 1});
    for (int i = 0; i < batch; ++i) {
        x.at(i, 0) = series.speed(samples[static_cast<std::size_t>(i)].start + step,
                                  samples[static_cast<std::size_t>(i)].node);
    }
    return x;
}

void check_embeddings(const FeatureSeries& series, const EmbeddingSeries* emb,
                      const RegressorConfig& config) {
    if (config.mode == "stdgi") {
        if (!emb) throw ConfigError("stdgi mode requires embeddings");
        if (emb->t_steps != series.t_steps || emb->n_nodes != series.n_nodes) {
            throw ConfigError("embeddings cover " + std::to_string(emb->t_steps) + "x" +
                              std::to_string(emb->n_nodes) + " but the series is " +
                              std::to_string(series.t_steps) + "x" + std::to_string(series.n_nodes));
        }
    }
}

// Autoregressive normalized-space MAE over the given samples.
double autoregressive_mae(Seq2SeqParams& params, const FeatureSeries& series,
                          const EmbeddingSeries* emb, std::span<const TrainSample> samples,
                          const RegressorConfig& config, int d_in) {
    constexpr int kEvalBatch = 1024;
    double abs_sum = 0.0;
    std::size_t count = 0;
    for (std::size_t off = 0; off < samples.size(); off += kEvalBatch) {
        const std::size_t len = std::min<std::size_t>(kEvalBatch, samples.size() - off);
        auto chunk = samples.subspan(off, len);
        std::vector<Tensor> inputs;
        inputs.reserve(static_cast<std::size_t>(config.input_steps));
        for (int j = 0; j < config.input_steps; ++j) {
            inputs.push_back(build_step_input(series, emb, chunk, j, d_in));
        }
        Tensor last_speed = build_speed_col(series, chunk, config.input_steps - 1);
        std::vector<Tensor> preds =
            seq2seq_forecast_batch(nullptr, inputs, last_speed, params, nullptr, config.horizon_steps);
        for (int j = 0; j < config.horizon_steps; ++j) {
            Tensor truth = build_speed_col(series, chunk, config.input_steps + j);
            for (std::size_t i = 0; i < len; ++i) {
                abs_sum += std::fabs(preds[static_cast<std::size_t>(j)].at(static_cast<int>(i), 0) -
                                     truth.at(static_cast<int>(i), 0));
            }
        }
        count += len * static_cast<std::size_t>(config.horizon_steps);
    }
    return count ? abs_sum / static_cast<double>(count) : 0.0;
}

Seq2SeqParams clone_params(Seq2SeqParams& p) {
    Seq2SeqParams c = p;
    c.encoder.wx = p.encoder.wx.clone();
    c.encoder.wh = p.encoder.wh.clone();
    c.encoder.b = p.encoder.b.clone();
    c.decoder.wx = p.decoder.wx.clone();
    c.decoder.wh = p.decoder.wh.clone();
    c.decoder.b = p.decoder.b.clone();
    c.head_w = p.head_w.clone();
    c.head_b = p.head_b.clone();
    return c;
}

}  // namespace

std::pair<Seq2SeqParams, RegressorHistory> train_regressor(const FeatureSeries& norm_series,
                                                           const EmbeddingSeries* embeddings,
                                                           const SplitSpec& splits,
                                                           const RegressorConfig& config) {
    config.validate();
    check_embeddings(norm_series, embeddings, config);
    const EmbeddingSeries* emb = config.mode == "stdgi" ? embeddings : nullptr;
    const int d_in = config.d_in(norm_series.f_dim, emb ? emb->k_dim : 0);

    WindowSet train_windows = make_windows(splits.train, config.input_steps, config.horizon_steps);
    WindowSet val_windows = make_windows(splits.val, config.input_steps, config.horizon_steps);
    if (train_windows.samples.empty()) throw ConfigError("train split too short for windows");

    std::vector<TrainSample> pool;
    pool.reserve(train_windows.samples.size() * static_cast<std::size_t>(norm_series.n_nodes));
    for (const WindowSample& w : train_windows.samples) {
        for (int v = 0; v < norm_series.n_nodes; ++v) pool.push_back({w.start, v});
    }
    std::vector<TrainSample> val_samples;
    for (const WindowSample& w : val_windows.samples) {
        for (int v = 0; v < norm_series.n_nodes; ++v) val_samples.push_back({w.start, v});
    }

    Rng rng(config.seed);
    Seq2SeqParams params = Seq2SeqParams::init(d_in, config.hidden_dim, rng);
    std::vector<Tensor> param_list = params.parameters();
    AdamState adam = AdamState::init(param_list);

    RegressorHistory history;
    Seq2SeqParams best = clone_params(params);
    double best_val = std::numeric_limits<double>::infinity();

    const std::size_t epoch_samples =
        config.samples_per_epoch > 0
            ? std::min<std::size_t>(static_cast<std::size_t>(config.samples_per_epoch), pool.size())
            : pool.size();

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double lr = lr_at_epoch(config.schedule, epoch);
        rng.shuffle(pool);
        double loss_sum = 0.0;
        std::size_t loss_count = 0;
        for (std::size_t off = 0; off < epoch_samples; off += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t len =
                std::min<std::size_t>(static_cast<std::size_t>(config.batch_size), epoch_samples - off);
            auto chunk = std::span<const TrainSample>(pool).subspan(off, len);

            Tape tape;
            std::vector<Tensor> inputs;
            for (int j = 0; j < config.input_steps; ++j) {
                inputs.push_back(build_step_input(norm_series, emb, chunk, j, d_in));
            }
            Tensor last_speed = build_speed_col(norm_series, chunk, config.input_steps - 1);
            std::vector<Tensor> targets;
            for (int j = 0; j < config.horizon_steps; ++j) {
                targets.push_back(build_speed_col(norm_series, chunk, config.input_steps + j));
            }
            std::vector<Tensor> preds = seq2seq_forecast_batch(&tape, inputs, last_speed, params,
                                                               &targets, config.horizon_steps);
            Tensor pred_mat = preds[0];
            Tensor target_mat = targets[0];
            for (int j = 1; j < config.horizon_steps; ++j) {
                pred_mat = ops::concat_cols(&tape, pred_mat, preds[static_cast<std::size_t>(j)]);
                target_mat = ops::concat_cols(nullptr, target_mat, targets[static_cast<std::size_t>(j)]);
            }
            Tensor loss = ops::mean_all(&tape, ops::abs(&tape, ops::sub(&tape, pred_mat, target_mat)));
            const double loss_value = loss.item();
            if (!std::isfinite(loss_value)) {
                throw NumericError("regressor training diverged at epoch " + std::to_string(epoch));
            }
            loss_sum += loss_value * static_cast<double>(len);
            loss_count += len;

            for (Tensor& p : param_list) p.zero_grad();
            tape.backward(loss);
            adam_step(param_list, adam, lr);
        }
        history.train_loss.push_back(loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0);

        double val = val_samples.empty()
                         ? history.train_loss.back()
                         : autoregressive_mae(params, norm_series, emb, val_samples, config, d_in);
        history.val_mae.push_back(val);
        if (val < best_val) {
            best_val = val;
            best = clone_params(params);
            history.best_epoch = epoch;
        }
    }
    return {std::move(best), std::move(history)};
}

PredictionSet predict(Seq2SeqParams& params, const FeatureSeries& norm_series,
                      const EmbeddingSeries* embeddings, const WindowSet& windows,
                      const NormStats& stats) {
    const EmbeddingSeries* emb = params.d_in > norm_series.f_dim ? embeddings : nullptr;
    if (params.d_in > norm_series.f_dim && !emb) {
        throw ConfigError("predict: model expects embeddings (d_in=" + std::to_string(params.d_in) +
                          ")");
    }
    const int n_nodes = norm_series.n_nodes;
    const int horizon = windows.horizon_steps;
    PredictionSet out = PredictionSet::zeros(static_cast<int>(windows.samples.size()), horizon, n_nodes);

    constexpr int kEvalBatch = 1024;
    std::vector<TrainSample> samples;
    samples.reserve(windows.samples.size() * static_cast<std::size_t>(n_nodes));
    for (const WindowSample& w : windows.samples) {
        for (int v = 0; v < n_nodes; ++v) samples.push_back({w.start, v});
    }
    const std::size_t per_window = static_cast<std::size_t>(n_nodes);
    for (std::size_t off = 0; off < samples.size(); off += kEvalBatch) {
        const std::size_t len = std::min<std::size_t>(kEvalBatch, samples.size() - off);
        auto chunk = std::span<const TrainSample>(samples).subspan(off, len);
        std::vector<Tensor> inputs;
        for (int j = 0; j < windows.input_steps; ++j) {
            inputs.push_back(build_step_input(norm_series, emb, chunk, j, params.d_in));
        }
        Tensor last_speed = build_speed_col(norm_series, chunk, windows.input_steps - 1);
        std::vector<Tensor> preds =
            seq2seq_forecast_batch(nullptr, inputs, last_speed, params, nullptr, horizon);
        for (std::size_t i = 0; i < len; ++i) {
            const std::size_t flat = off + i;
            const int sample_idx = static_cast<int>(flat / per_window);
            const int node = static_cast<int>(flat % per_window);
            const TrainSample& s = chunk[i];
            for (int j = 0; j < horizon; ++j) {
                const double z = preds[static_cast<std::size_t>(j)].at(static_cast<int>(i), 0);
                out.pred[out.index(sample_idx, j, node)] = stats.denormalize(z);
                out.truth[out.index(sample_idx, j, node)] =
                    stats.denormalize(norm_series.speed(s.start + windows.input_steps + j, s.node));
            }
        }
    }
    return out;
}

PredictionSet persistence_predictions(const FeatureSeries& norm_series, const WindowSet& windows,
                                      const NormStats& stats) {
    const int n_nodes = norm_series.n_nodes;
    PredictionSet out =
        PredictionSet::zeros(static_cast<int>(windows.samples.size()), windows.horizon_steps, n_nodes);
    for (std::size_t w = 0; w < windows.samples.size(); ++w) {
        const int start = windows.samples[w].start;
        for (int v = 0; v < n_nodes; ++v) {
            const double last = stats.denormalize(norm_series.speed(start + windows.input_steps - 1, v));
            for (int j = 0; j < windows.horizon_steps; ++j) {
                out.pred[out.index(static_cast<int>(w), j, v)] = last;
                out.truth[out.index(static_cast<int>(w), j, v)] =
                    stats.denormalize(norm_series.speed(start + windows.input_steps + j, v));
            }
        }
    }
    return out;
}

}  // namespace stdgi
