#pragma once

// Feedforward classifier over normalized PSD vectors: ReLU hidden layers,
// sigmoid output, binary cross-entropy loss, Adam, inverted dropout and
// early stopping on a stratified validation split. Deliberately hand-rolled:
// the network is tiny and a dependency-free implementation keeps seeded runs
// bit-reproducible.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "core.hpp"
#include "rng.hpp"
#include "spectral.hpp"

namespace morton {

struct CorruptModelError : FormatError {
    using FormatError::FormatError;
};
struct ModelVersionError : FormatError {
    using FormatError::FormatError;
};

struct TrainConfig {
    std::vector<size_t> hidden = {25, 55, 25};
    double dropout = 0.1;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    size_t batch_size = 32;
    size_t max_epochs = 200;
    size_t patience = 5;
    double min_delta = 1e-4;
    double val_fraction = 0.1;
    double l2 = 0.0;      // off by default
    size_t restarts = 1;  // optimization runs; best validation loss wins
    uint64_t seed = 1;
};

struct ModelMetadata {
    uint64_t seed = 0;
    size_t epochs_run = 0;
    size_t best_epoch = 0;
    double best_val_loss = 0.0;
    double final_train_loss = 0.0;
};

struct ModelParams {
    std::vector<size_t> layer_sizes;           // input, hidden..., 1
    std::vector<std::vector<double>> weights;  // per layer, row-major out x in
    std::vector<std::vector<double>> biases;   // per layer, out
    NormalizationScale scale;
    ModelMetadata meta;

    size_t layer_count() const { return weights.size(); }
    size_t parameter_count() const {
        size_t n = 0;
        for (size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
        return n;
    }
};

namespace detail {

inline double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

// Stable BCE from the logit: max(z,0) - z*y + log1p(exp(-|z|)).
inline double bce_from_logit(double z, double y) {
    return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

struct ForwardScratch {
    std::vector<std::vector<double>> activations;  // post-nonlinearity per layer
    std::vector<std::vector<double>> masks;        // dropout masks for hidden layers
    double logit = 0.0;
};

// Runs the network up to the output logit. When `drop` is non-null, applies
// inverted dropout to hidden activations and records the masks.
inline void forward_logit(const ModelParams& m, const double* x, ForwardScratch& s, Rng* drop,
                          double dropout_rate) {
    size_t layers = m.layer_count();
    s.activations.resize(layers);
    s.masks.assign(layers, {});
    const double* in = x;
    size_t in_len = m.layer_sizes[0];
    for (size_t l = 0; l < layers; ++l) {
        size_t out_len = m.layer_sizes[l + 1];
        auto& act = s.activations[l];
        act.assign(out_len, 0.0);
        const std::vector<double>& w = m.weights[l];
        for (size_t o = 0; o < out_len; ++o) {
            double acc = m.biases[l][o];
            const double* row = &w[o * in_len];
            for (size_t i = 0; i < in_len; ++i) acc += row[i] * in[i];
            act[o] = acc;
        }
        bool last = (l + 1 == layers);
        if (!last) {
            for (double& v : act) v = v > 0.0 ? v : 0.0;
            if (drop != nullptr && dropout_rate > 0.0) {
                double keep = 1.0 - dropout_rate;
                auto& mask = s.masks[l];
                mask.assign(out_len, 0.0);
                for (size_t o = 0; o < out_len; ++o) {
                    mask[o] = drop->next_bernoulli(keep) ? 1.0 / keep : 0.0;
                    act[o] *= mask[o];
                }
            }
        } else {
            s.logit = act[0];
        }
        in = act.data();
        in_len = out_len;
    }
}

}  // namespace detail

// Inference on one normalized PSD vector; returns the score in (0, 1).
inline double forward(const ModelParams& m, const PsdVector& input) {
    if (m.layer_sizes.size() < 2 || m.weights.size() != m.layer_sizes.size() - 1)
        throw ArgumentError("model has no layers");
    if (!input.normalized) throw ArgumentError("classifier input must be normalized");
    if (input.values.size() != m.layer_sizes[0])
        throw ArgumentError("input length does not match model input layer");
    detail::ForwardScratch s;
    detail::forward_logit(m, input.values.data(), s, nullptr, 0.0);
    return detail::sigmoid(s.logit);
}

struct LossAndGrad {
    double loss = 0.0;
    std::vector<std::vector<double>> d_weights;
    std::vector<std::vector<double>> d_biases;
};

namespace detail {

inline void zero_like(const ModelParams& m, LossAndGrad& g) {
    g.loss = 0.0;
    g.d_weights.resize(m.weights.size());
    g.d_biases.resize(m.biases.size());
    for (size_t l = 0; l < m.weights.size(); ++l) {
        g.d_weights[l].assign(m.weights[l].size(), 0.0);
        g.d_biases[l].assign(m.biases[l].size(), 0.0);
    }
}

// Accumulates one sample's loss and gradients (mean weighting applied by the
// caller via `w_sample`). Dropout masks from the forward pass are respected.
inline void backward_sample(const ModelParams& m, const double* x, double y,
                            const ForwardScratch& s, double w_sample, LossAndGrad& g) {
    size_t layers = m.layer_count();
    double p = sigmoid(s.logit);
    g.loss += w_sample * bce_from_logit(s.logit, y);
    std::vector<double> delta{(p - y)};  // dL/dlogit
    for (size_t l = layers; l-- > 0;) {
        size_t in_len = m.layer_sizes[l];
        size_t out_len = m.layer_sizes[l + 1];
        const double* in = (l == 0) ? x : s.activations[l - 1].data();
        std::vector<double> prev_delta(l > 0 ? in_len : 0, 0.0);
        for (size_t o = 0; o < out_len; ++o) {
            double d = delta[o] * w_sample;
            g.d_biases[l][o] += d;
            double* wrow_g = &g.d_weights[l][o * in_len];
            const double* wrow = &m.weights[l][o * in_len];
            for (size_t i = 0; i < in_len; ++i) {
                wrow_g[i] += d * in[i];
                if (l > 0) prev_delta[i] += delta[o] * wrow[i];
            }
        }
        if (l > 0) {
            // Back through dropout, then ReLU. The recorded activation is
            // post-ReLU (and post-mask), so activation > 0 marks live units.
            const auto& act = s.activations[l - 1];
            const auto& mask = s.masks[l - 1];
            for (size_t i = 0; i < in_len; ++i) {
                double factor = act[i] > 0.0 ? 1.0 : 0.0;
                if (!mask.empty()) factor *= mask[i];
                prev_delta[i] *= factor;
            }
            delta = std::move(prev_delta);
        }
    }
}

}  // namespace detail

// Mean BCE loss and gradients over a batch, without dropout. Exposed for
// direct use and for finite-difference verification.
inline LossAndGrad bce_loss_and_grad(const ModelParams& m, const std::vector<PsdVector>& xs,
                                     const std::vector<uint8_t>& ys, double l2 = 0.0) {
    if (xs.empty() || xs.size() != ys.size()) throw ArgumentError("bad loss batch");
    LossAndGrad g;
    detail::zero_like(m, g);
    double w = 1.0 / static_cast<double>(xs.size());
    detail::ForwardScratch s;
    for (size_t i = 0; i < xs.size(); ++i) {
        if (!xs[i].normalized) throw ArgumentError("classifier input must be normalized");
        detail::forward_logit(m, xs[i].values.data(), s, nullptr, 0.0);
        detail::backward_sample(m, xs[i].values.data(), static_cast<double>(ys[i]), s, w, g);
    }
    if (l2 > 0.0) {
        for (size_t l = 0; l < m.weights.size(); ++l)
            for (size_t j = 0; j < m.weights[l].size(); ++j) {
                g.loss += 0.5 * l2 * m.weights[l][j] * m.weights[l][j];
                g.d_weights[l][j] += l2 * m.weights[l][j];
            }
    }
    return g;
}

namespace detail {

inline double mean_bce(const ModelParams& m, const std::vector<PsdVector>& xs,
                       const std::vector<uint8_t>& ys, const std::vector<uint32_t>& idx) {
    double total = 0.0;
    ForwardScratch s;
    for (uint32_t i : idx) {
        forward_logit(m, xs[i].values.data(), s, nullptr, 0.0);
        total += bce_from_logit(s.logit, static_cast<double>(ys[i]));
    }
    return total / static_cast<double>(idx.size());
}

}  // namespace detail

namespace detail {

// One optimization run from one seed; the public train() selects over restarts.
inline ModelParams train_once(const std::vector<PsdVector>& xs, const std::vector<uint8_t>& ys,
                              const NormalizationScale& scale, const TrainConfig& cfg) {
    if (xs.empty() || xs.size() != ys.size()) throw TrainingError("empty or inconsistent training set");
    if (cfg.dropout < 0.0 || cfg.dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
    if (cfg.val_fraction <= 0.0 || cfg.val_fraction >= 1.0)
        throw ConfigError("validation fraction must lie in (0, 1)");
    if (cfg.batch_size == 0 || cfg.max_epochs == 0) throw ConfigError("batch size and epochs must be positive");
    size_t input_len = xs.front().values.size();
    for (size_t i = 0; i < xs.size(); ++i) {
        if (!xs[i].normalized) throw TrainingError("training inputs must be normalized");
        if (xs[i].values.size() != input_len) throw TrainingError("inconsistent input lengths");
        if (ys[i] > 1) throw TrainingError("labels must be 0 or 1");
    }
    if (scale.per_frequency_max.size() != input_len)
        throw TrainingError("normalization scale does not match input length");

    // Stratified validation split.
    std::vector<uint32_t> pos, neg;
    for (uint32_t i = 0; i < xs.size(); ++i) (ys[i] ? pos : neg).push_back(i);
    if (pos.empty() || neg.empty()) throw TrainingError("single-class training set");
    Rng rng(mix_seed({cfg.seed, 0x7261696eULL}));
    rng.shuffle(pos.begin(), pos.end());
    rng.shuffle(neg.begin(), neg.end());
    auto take = [&](std::vector<uint32_t>& from, size_t n_val, std::vector<uint32_t>& val,
                    std::vector<uint32_t>& tr) {
        for (size_t i = 0; i < from.size(); ++i)
            (i < n_val ? val : tr).push_back(from[i]);
    };
    size_t val_pos = std::max<size_t>(1, static_cast<size_t>(
        std::llround(cfg.val_fraction * static_cast<double>(pos.size()))));
    size_t val_neg = std::max<size_t>(1, static_cast<size_t>(
        std::llround(cfg.val_fraction * static_cast<double>(neg.size()))));
    std::vector<uint32_t> val_idx, train_idx;
    take(pos, val_pos, val_idx, train_idx);
    take(neg, val_neg, val_idx, train_idx);
    size_t train_pos = pos.size() - std::min(val_pos, pos.size());
    size_t train_neg = neg.size() - std::min(val_neg, neg.size());
    if (train_pos < 2 || train_neg < 2)
        throw TrainingError("need at least 2 examples per class after the validation split");

    // Model skeleton and fan-in scaled uniform init.
    ModelParams m;
    m.layer_sizes.push_back(input_len);
    for (size_t h : cfg.hidden) m.layer_sizes.push_back(h);
    m.layer_sizes.push_back(1);
    Rng init_rng(mix_seed({cfg.seed, 0x696e6974ULL}));
    for (size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
        size_t in_len = m.layer_sizes[l], out_len = m.layer_sizes[l + 1];
        double bound = std::sqrt(1.0 / static_cast<double>(in_len));
        std::vector<double> w(out_len * in_len);
        for (double& v : w) v = (init_rng.next_double() * 2.0 - 1.0) * bound;
        m.weights.push_back(std::move(w));
        m.biases.emplace_back(out_len, 0.0);
    }
    m.scale = scale;
    m.meta.seed = cfg.seed;

    // Adam state.
    std::vector<std::vector<double>> mw, vw, mb, vb;
    for (size_t l = 0; l < m.weights.size(); ++l) {
        mw.emplace_back(m.weights[l].size(), 0.0);
        vw.emplace_back(m.weights[l].size(), 0.0);
        mb.emplace_back(m.biases[l].size(), 0.0);
        vb.emplace_back(m.biases[l].size(), 0.0);
    }

    Rng epoch_rng(mix_seed({cfg.seed, 0x65706f63ULL}));
    Rng drop_rng(mix_seed({cfg.seed, 0x64726f70ULL}));
    ModelParams best = m;
    double best_val = std::numeric_limits<double>::infinity();
    double patience_ref = std::numeric_limits<double>::infinity();
    size_t stall = 0;
    uint64_t adam_t = 0;
    double last_train_loss = 0.0;
    detail::ForwardScratch scratch;
    LossAndGrad grad;

    size_t epoch = 0;
    for (; epoch < cfg.max_epochs; ++epoch) {
        epoch_rng.shuffle(train_idx.begin(), train_idx.end());
        double epoch_loss = 0.0;
        for (size_t base = 0; base < train_idx.size(); base += cfg.batch_size) {
            size_t take_n = std::min(cfg.batch_size, train_idx.size() - base);
            detail::zero_like(m, grad);
            double w_sample = 1.0 / static_cast<double>(take_n);
            for (size_t j = 0; j < take_n; ++j) {
                uint32_t i = train_idx[base + j];
                detail::forward_logit(m, xs[i].values.data(), scratch, &drop_rng, cfg.dropout);
                detail::backward_sample(m, xs[i].values.data(), static_cast<double>(ys[i]),
                                        scratch, w_sample, grad);
            }
            if (cfg.l2 > 0.0) {
                for (size_t l = 0; l < m.weights.size(); ++l)
                    for (size_t j = 0; j < m.weights[l].size(); ++j)
                        grad.d_weights[l][j] += cfg.l2 * m.weights[l][j];
            }
            epoch_loss += grad.loss * static_cast<double>(take_n);
            ++adam_t;
            double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(adam_t));
            double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(adam_t));
            auto update = [&](std::vector<double>& p, std::vector<double>& mm,
                              std::vector<double>& vv, const std::vector<double>& g) {
                for (size_t j = 0; j < p.size(); ++j) {
                    mm[j] = cfg.beta1 * mm[j] + (1.0 - cfg.beta1) * g[j];
                    vv[j] = cfg.beta2 * vv[j] + (1.0 - cfg.beta2) * g[j] * g[j];
                    double mhat = mm[j] / bc1;
                    double vhat = vv[j] / bc2;
                    p[j] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
                }
            };
            for (size_t l = 0; l < m.weights.size(); ++l) {
                update(m.weights[l], mw[l], vw[l], grad.d_weights[l]);
                update(m.biases[l], mb[l], vb[l], grad.d_biases[l]);
            }
        }
        last_train_loss = epoch_loss / static_cast<double>(train_idx.size());
        double val_loss = detail::mean_bce(m, xs, ys, val_idx);
        if (!std::isfinite(val_loss) || !std::isfinite(last_train_loss))
            throw TrainingError("loss diverged to a non-finite value at epoch " +
                                std::to_string(epoch + 1));
        if (val_loss < best_val) {
            best_val = val_loss;
            best = m;
            best.meta.best_epoch = epoch + 1;
        }
        if (val_loss < patience_ref - cfg.min_delta) {
            patience_ref = val_loss;
            stall = 0;
        } else {
            ++stall;
            if (stall >= cfg.patience) {
                ++epoch;
                break;
            }
        }
    }
    best.meta.seed = cfg.seed;
    best.meta.epochs_run = epoch;
    best.meta.best_val_loss = best_val;
    best.meta.final_train_loss = last_train_loss;
    best.scale = scale;
    return best;
}

}  // namespace detail

// Trains on normalized PSD vectors with binary labels. The returned model
// carries the parameters of the epoch with the best validation loss and the
// normalization scale it expects at inference time. With restarts > 1 the
// optimization is rerun from derived seeds and the run with the lowest
// validation loss wins — small imbalanced sets make single runs basin-lottery,
// and the validation loss separates the basins cleanly. The winning run's
// seed is recorded in the metadata, so retraining with that seed at
// restarts = 1 reproduces the returned model.
inline ModelParams train(const std::vector<PsdVector>& xs, const std::vector<uint8_t>& ys,
                         const NormalizationScale& scale, const TrainConfig& cfg) {
    if (cfg.restarts == 0) throw ConfigError("restarts must be positive");
    ModelParams best;
    for (size_t round = 0; round < cfg.restarts; ++round) {
        TrainConfig round_cfg = cfg;
        round_cfg.seed = round == 0 ? cfg.seed : mix_seed({cfg.seed, 0x72657374ull, round});
        ModelParams m = detail::train_once(xs, ys, scale, round_cfg);
        if (round == 0 || m.meta.best_val_loss < best.meta.best_val_loss) best = std::move(m);
    }
    return best;
}

inline constexpr int kModelVersion = 1;

inline nlohmann::json model_to_json(const ModelParams& m) {
    nlohmann::json j;
    j["version"] = kModelVersion;
    j["layer_sizes"] = m.layer_sizes;
    j["weights"] = m.weights;
    j["biases"] = m.biases;
    j["scale"] = m.scale.per_frequency_max;
    j["metadata"] = {{"seed", m.meta.seed},
                     {"epochs_run", m.meta.epochs_run},
                     {"best_epoch", m.meta.best_epoch},
                     {"best_val_loss", m.meta.best_val_loss},
                     {"final_train_loss", m.meta.final_train_loss}};
    return j;
}

inline void save_model(const ModelParams& m, std::ostream& out) {
    out << model_to_json(m).dump(2) << "\n";
    if (!out) throw IoError("model write failed");
}

inline ModelParams load_model(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw CorruptModelError(std::string("unreadable model file: ") + e.what());
    }
    if (!j.is_object() || !j.contains("version"))
        throw CorruptModelError("model file missing version");
    if (!j["version"].is_number_integer() || j["version"].get<int>() != kModelVersion)
        throw ModelVersionError("unsupported model version");
    ModelParams m;
    try {
        m.layer_sizes = j.at("layer_sizes").get<std::vector<size_t>>();
        m.weights = j.at("weights").get<std::vector<std::vector<double>>>();
        m.biases = j.at("biases").get<std::vector<std::vector<double>>>();
        m.scale.per_frequency_max = j.at("scale").get<std::vector<double>>();
        const auto& meta = j.at("metadata");
        m.meta.seed = meta.value("seed", uint64_t{0});
        m.meta.epochs_run = meta.value("epochs_run", size_t{0});
        m.meta.best_epoch = meta.value("best_epoch", size_t{0});
        m.meta.best_val_loss = meta.value("best_val_loss", 0.0);
        m.meta.final_train_loss = meta.value("final_train_loss", 0.0);
    } catch (const nlohmann::json::exception& e) {
        throw CorruptModelError(std::string("malformed model file: ") + e.what());
    }
    if (m.layer_sizes.size() < 2 || m.weights.size() != m.layer_sizes.size() - 1 ||
        m.biases.size() != m.weights.size() || m.layer_sizes.back() != 1)
        throw CorruptModelError("model layer structure is inconsistent");
    for (size_t l = 0; l < m.weights.size(); ++l) {
        if (m.weights[l].size() != m.layer_sizes[l] * m.layer_sizes[l + 1] ||
            m.biases[l].size() != m.layer_sizes[l + 1])
            throw CorruptModelError("model parameter shapes do not match layer sizes");
    }
    if (m.scale.per_frequency_max.size() != m.layer_sizes[0])
        throw CorruptModelError("model scale length does not match input layer");
    return m;
}

inline void save_model_file(const ModelParams& m, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open model file for writing: " + path);
    save_model(m, f);
}

inline ModelParams load_model_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open model file: " + path);
    return load_model(f);
}

}  // namespace morton
