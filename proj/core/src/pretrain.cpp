#include "stdgi/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "csv_util.hpp"

namespace stdgi {

void PretrainConfig::validate() const {
    if (epochs < 1 || batch_size < 1) throw ConfigError("pretrain: epochs and batch_size must be >= 1");
    if (ks.empty()) throw ConfigError("pretrain: ks must be non-empty");
    for (int k : ks) {
        if (k < 1) throw ConfigError("pretrain: every k must be >= 1");
    }
    if (hidden_dim < 1 || embed_dim < 1) throw ConfigError("pretrain: dims must be >= 1");
    schedule.validate();
}

std::vector<Tensor> PretrainModel::parameters() {
    std::vector<Tensor> all;
    for (Tensor& t : encoder.parameters()) all.push_back(t);
    for (DiscriminatorParams& d : discriminators) {
        for (Tensor& t : d.parameters()) all.push_back(t);
    }
    return all;
}

std::vector<std::pair<std::string, Tensor>> PretrainModel::named_parameters() {
    std::vector<std::pair<std::string, Tensor>> all;
    for (auto& nv : encoder.named_parameters()) all.push_back(nv);
    for (DiscriminatorParams& d : discriminators) {
        for (auto& nv : d.named_parameters()) all.push_back(nv);
    }
    return all;
}

namespace {

// Stack the N x F feature blocks of the given time steps into (B*N) x F.
Tensor stack_steps(const FeatureSeries& series, std::span<const int> steps) {
    const int n = series.n_nodes, f = series.f_dim;
    Tensor x = Tensor::zeros({static_cast<int>(steps.size()) * n, f});
    double* dst = x.data();
    for (int t : steps) {
        const double* src = series.values.data() + static_cast<std::size_t>(t) * n * f;
        std::copy(src, src + static_cast<std::size_t>(n) * f, dst);
        dst += static_cast<std::size_t>(n) * f;
    }
    return x;
}

Tensor step_block(const FeatureSeries& series, int t) {
    const int n = series.n_nodes, f = series.f_dim;
    std::vector<double> block(series.values.begin() + static_cast<std::ptrdiff_t>(t) * n * f,
                              series.values.begin() + static_cast<std::ptrdiff_t>(t + 1) * n * f);
    return Tensor::from_values({n, f}, std::move(block));
}

// Futures x(t+k) for every step in the batch, optionally corrupted with a
// fresh permutation per time step.
Tensor stack_futures(const FeatureSeries& series, std::span<const int> steps, int k, Rng* corrupt_rng) {
    const int n = series.n_nodes, f = series.f_dim;
    Tensor x = Tensor::zeros({static_cast<int>(steps.size()) * n, f});
    double* dst = x.data();
    for (int t : steps) {
        Tensor block = step_block(series, t + k);
        if (corrupt_rng) block = corrupt(block, *corrupt_rng);
        std::copy(block.data(), block.data() + static_cast<std::size_t>(n) * f, dst);
        dst += static_cast<std::size_t>(n) * f;
    }
    return x;
}

int max_horizon(const std::vector<int>& ks) {
    return *std::max_element(ks.begin(), ks.end());
}

}  // namespace

HoldoutPairs HoldoutPairs::build(const FeatureSeries& series, TimeRange range,
                                 const std::vector<int>& ks, int max_steps, Rng& rng) {
    HoldoutPairs pairs;
    const int max_k = max_horizon(ks);
    const int last = range.end - max_k;
    if (last <= range.begin) return pairs;
    const int available = last - range.begin;
    const int take = std::min(available, max_steps);
    // Evenly spaced steps across the range keep the evaluation stable.
    for (int i = 0; i < take; ++i) {
        const int t = range.begin + static_cast<int>(static_cast<long>(i) * available / take);
        pairs.time_steps.push_back(t);
    }
    pairs.corrupted.resize(pairs.time_steps.size());
    for (std::size_t si = 0; si < pairs.time_steps.size(); ++si) {
        for (int k : ks) {
            Tensor block = step_block(series, pairs.time_steps[si] + k);
            pairs.corrupted[si].push_back(corrupt(block, rng));
        }
    }
    return pairs;
}

double holdout_accuracy(const FeatureSeries& series, const Graph& graph, PretrainModel& model,
                        const HoldoutPairs& pairs) {
    if (pairs.time_steps.empty()) return 0.0;
    const int n = series.n_nodes;
    Tensor x = stack_steps(series, pairs.time_steps);
    Tensor h = encode_batch(nullptr, x, graph, model.encoder);

    long correct = 0, total = 0;
    for (std::size_t ki = 0; ki < model.discriminators.size(); ++ki) {
        DiscriminatorParams& disc = model.discriminators[ki];
        Tensor pos_x = stack_futures(series, pairs.time_steps, disc.horizon_k, nullptr);
        Tensor neg_x = Tensor::zeros(pos_x.shape());
        for (std::size_t si = 0; si < pairs.time_steps.size(); ++si) {
            const Tensor& block = pairs.corrupted[si][ki];
            std::copy(block.data(), block.data() + static_cast<std::size_t>(n) * series.f_dim,
                      neg_x.data() + si * static_cast<std::size_t>(n) * series.f_dim);
        }
        Tensor pos_scores = discriminate_batch(nullptr, h, pos_x, disc);
        Tensor neg_scores = discriminate_batch(nullptr, h, neg_x, disc);
        for (std::size_t i = 0; i < pos_scores.numel(); ++i) {
            correct += pos_scores.data()[i] > 0.5 ? 1 : 0;
            correct += neg_scores.data()[i] < 0.5 ? 1 : 0;
            total += 2;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(total);
}

double pretrain_epoch(const FeatureSeries& series, const Graph& graph, PretrainModel& model,
                      const PretrainConfig& config, TimeRange train_range, double lr,
                      std::vector<Tensor>& param_list, AdamState& adam, Rng& rng) {
    const int max_k = max_horizon(config.ks);
    const int first = train_range.begin;
    const int last = train_range.end - max_k;  // t + max_k must stay inside the range
    if (last <= first) {
        throw ConfigError("pretrain: range of length " + std::to_string(train_range.length()) +
                          " too short for horizon k=" + std::to_string(max_k));
    }
    std::vector<int> steps;
    steps.reserve(static_cast<std::size_t>(last - first));
    for (int t = first; t < last; ++t) steps.push_back(t);
    rng.shuffle(steps);

    const double inv_ks = 1.0 / static_cast<double>(config.ks.size());
    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    for (std::size_t off = 0; off < steps.size(); off += static_cast<std::size_t>(config.batch_size)) {
        const std::size_t len =
            std::min<std::size_t>(static_cast<std::size_t>(config.batch_size), steps.size() - off);
        auto batch = std::span<const int>(steps).subspan(off, len);

        Tape tape;
        Tensor x = stack_steps(series, batch);
        Tensor h = encode_batch(&tape, x, graph, model.encoder);
        Tensor total;
        for (std::size_t ki = 0; ki < model.discriminators.size(); ++ki) {
            DiscriminatorParams& disc = model.discriminators[ki];
            Tensor pos_x = stack_futures(series, batch, disc.horizon_k, nullptr);
            Tensor neg_x = stack_futures(series, batch, disc.horizon_k, &rng);
            Tensor pos_scores = discriminate_batch(&tape, h, pos_x, disc);
            Tensor neg_scores = discriminate_batch(&tape, h, neg_x, disc);
            Tensor k_loss = infomax_loss(&tape, pos_scores, neg_scores);
            total = total.defined() ? ops::add(&tape, total, k_loss) : k_loss;
        }
        Tensor loss = ops::scale(&tape, total, inv_ks);
        const double loss_value = loss.item();
        if (!std::isfinite(loss_value)) {
            throw NumericError("pretraining diverged (non-finite loss)");
        }
        loss_sum += loss_value * static_cast<double>(len);
        loss_count += len;

        for (Tensor& p : param_list) p.zero_grad();
        tape.backward(loss);
        adam_step(param_list, adam, lr);
    }
    return loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0;
}

std::pair<PretrainModel, TrainHistory> pretrain(const FeatureSeries& series, const Graph& graph,
                                                const SplitSpec& splits,
                                                const PretrainConfig& config) {
    config.validate();
    if (series.n_nodes != graph.num_nodes()) {
        throw ValidationError("pretrain: series has " + std::to_string(series.n_nodes) +
                              " nodes, graph " + std::to_string(graph.num_nodes()));
    }

    Rng rng(config.seed);
    PretrainModel model;
    model.encoder = EncoderParams::init(series.f_dim, config.hidden_dim, config.embed_dim, rng);
    for (int k : config.ks) {
        model.discriminators.push_back(
            DiscriminatorParams::init(config.embed_dim, series.f_dim, k, rng));
    }
    std::vector<Tensor> param_list = model.parameters();
    AdamState adam = AdamState::init(param_list);

    Rng holdout_rng = rng.fork();
    HoldoutPairs holdout =
        HoldoutPairs::build(series, splits.val, config.ks, config.holdout_max_steps, holdout_rng);

    TrainHistory history;
    history.epochs.reserve(static_cast<std::size_t>(config.epochs));
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double lr = lr_at_epoch(config.schedule, epoch);
        const double loss =
            pretrain_epoch(series, graph, model, config, splits.train, lr, param_list, adam, rng);
        EpochStats stats;
        stats.loss = loss;
        stats.lr = lr;
        stats.holdout_accuracy = holdout_accuracy(series, graph, model, holdout);
        history.epochs.push_back(stats);
    }
    return {std::move(model), std::move(history)};
}

EmbeddingSeries export_embeddings(const FeatureSeries& series, const Graph& graph,
                                  EncoderParams& encoder) {
    EmbeddingSeries emb = EmbeddingSeries::zeros(series.t_steps, series.n_nodes, encoder.embed_dim);
    constexpr int kBatch = 256;
    std::vector<int> steps;
    for (int t0 = 0; t0 < series.t_steps; t0 += kBatch) {
        const int t1 = std::min(series.t_steps, t0 + kBatch);
        steps.clear();
        for (int t = t0; t < t1; ++t) steps.push_back(t);
        Tensor x = stack_steps(series, steps);
        Tensor h = encode_batch(nullptr, x, graph, encoder);
        std::copy(h.data(), h.data() + h.numel(),
                  emb.values.begin() +
                      static_cast<std::ptrdiff_t>(t0) * series.n_nodes * encoder.embed_dim);
    }
    return emb;
}

namespace {

// Leading eigenvector of a symmetric matrix by power iteration.
std::vector<double> power_iteration(const std::vector<double>& mat, int d, double* eigenvalue) {
    std::vector<double> v(static_cast<std::size_t>(d), 1.0 / std::sqrt(static_cast<double>(d)));
    std::vector<double> w(static_cast<std::size_t>(d));
    double lambda = 0.0;
    for (int iter = 0; iter < 300; ++iter) {
        gemm_nn(mat.data(), v.data(), w.data(), d, d, 1, false);
        double norm = 0.0;
        for (double x : w) norm += x * x;
        norm = std::sqrt(norm);
        if (norm == 0.0) break;
        for (int i = 0; i < d; ++i) v[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(i)] / norm;
        lambda = norm;
    }
    if (eigenvalue) *eigenvalue = lambda;
    return v;
}

}  // namespace

PcaProjection pca_project_2d(const EmbeddingSeries& embeddings) {
    const int d = embeddings.k_dim;
    if (d < 2) throw ContractError("pca_project_2d: embedding dim must be >= 2");
    const std::size_t m =
        static_cast<std::size_t>(embeddings.t_steps) * static_cast<std::size_t>(embeddings.n_nodes);

    std::vector<double> mean(static_cast<std::size_t>(d), 0.0);
    for (std::size_t r = 0; r < m; ++r) {
        const double* row = embeddings.values.data() + r * d;
        for (int j = 0; j < d; ++j) mean[static_cast<std::size_t>(j)] += row[j];
    }
    for (double& x : mean) x /= static_cast<double>(m);

    std::vector<double> centered(m * static_cast<std::size_t>(d));
    for (std::size_t r = 0; r < m; ++r) {
        const double* row = embeddings.values.data() + r * d;
        for (int j = 0; j < d; ++j) {
            centered[r * d + j] = row[j] - mean[static_cast<std::size_t>(j)];
        }
    }

    // d x d covariance, then top-2 eigenvectors with deflation.
    std::vector<double> cov(static_cast<std::size_t>(d) * d, 0.0);
    {
        std::vector<double> ct = transposed(centered.data(), static_cast<int>(m), d);
        gemm_nn(ct.data(), centered.data(), cov.data(), d, static_cast<int>(m), d, false);
        const double denom = m > 1 ? static_cast<double>(m - 1) : 1.0;
        for (double& x : cov) x /= denom;
    }
    double lambda1 = 0.0;
    std::vector<double> v1 = power_iteration(cov, d, &lambda1);
    std::vector<double> deflated = cov;
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            deflated[static_cast<std::size_t>(i) * d + j] -=
                lambda1 * v1[static_cast<std::size_t>(i)] * v1[static_cast<std::size_t>(j)];
        }
    }
    std::vector<double> v2 = power_iteration(deflated, d, nullptr);

    PcaProjection proj;
    proj.xy.assign(m * 2, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
        double px = 0.0, py = 0.0;
        const double* row = centered.data() + r * d;
        for (int j = 0; j < d; ++j) {
            px += row[j] * v1[static_cast<std::size_t>(j)];
            py += row[j] * v2[static_cast<std::size_t>(j)];
        }
        proj.xy[r * 2] = px;
        proj.xy[r * 2 + 1] = py;
    }
    return proj;
}

void write_pca_csv(const std::string& path, const EmbeddingSeries& embeddings,
                   const PcaProjection& proj, const FeatureSeries& series_mph, int speed_lookahead) {
    if (series_mph.t_steps != embeddings.t_steps || series_mph.n_nodes != embeddings.n_nodes) {
        throw ValidationError("write_pca_csv: series and embeddings disagree on shape");
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "t,node,x,y,speed_t_plus_" << speed_lookahead << "\n";
    for (int t = 0; t < embeddings.t_steps; ++t) {
        for (int v = 0; v < embeddings.n_nodes; ++v) {
            out << t << ',' << v << ',' << csv::format_double(proj.x(t, v, embeddings.n_nodes)) << ','
                << csv::format_double(proj.y(t, v, embeddings.n_nodes)) << ',';
            if (t + speed_lookahead < series_mph.t_steps) {
                out << csv::format_double(series_mph.speed(t + speed_lookahead, v));
            } else {
                out << "nan";
            }
            out << '\n';
        }
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace stdgi
