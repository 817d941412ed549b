#ifndef RAIE_MODEL_TRAINING_HPP
#define RAIE_MODEL_TRAINING_HPP

#include <raie/error.hpp>
#include <raie/model/adapter.hpp>
#include <raie/model/backbone.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <vector>

namespace raie {

struct TrainConfig {
    double learning_rate = 5e-4;
    std::size_t setup_epochs = 5;
    std::size_t finetune_epochs = 3;
    std::size_t batch_size = 32;
    double mixing_ratio = 0.7;
    double weight_decay = 0.01;
    double grad_clip = 1.0;  ///< global gradient-norm cap; 0 disables
    std::uint64_t seed = 0;

    void validate() const {
        if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidConfig, "learning_rate must be positive");
        if (batch_size == 0) throw Error(ErrorCode::InvalidConfig, "batch_size must be positive");
        if (!(mixing_ratio >= 0.0 && mixing_ratio <= 1.0))
            throw Error(ErrorCode::InvalidConfig, "mixing_ratio must lie in [0,1]");
        if (!(weight_decay >= 0.0)) throw Error(ErrorCode::InvalidConfig, "weight_decay must be >= 0");
        if (!(grad_clip >= 0.0)) throw Error(ErrorCode::InvalidConfig, "grad_clip must be >= 0");
    }
};

/// Adam with decoupled weight decay over a fixed list of matrices.
class AdamW {
public:
    AdamW(std::vector<Matrix*> params, double lr, double weight_decay)
        : params_(std::move(params)), lr_(lr), wd_(weight_decay) {
        for (auto* p : params_) {
            m_.push_back(Matrix::Zero(p->rows(), p->cols()));
            v_.push_back(Matrix::Zero(p->rows(), p->cols()));
        }
    }

    /// One step; `grads[i]` matches `params[i]`. Gradients are clipped to `clip` in global norm.
    void step(std::vector<Matrix>& grads, double clip) {
        if (clip > 0.0) {
            double sq = 0.0;
            for (const auto& g : grads) sq += g.squaredNorm();
            const double norm = std::sqrt(sq);
            if (norm > clip)
                for (auto& g : grads) g *= clip / norm;
        }
        ++t_;
        const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < params_.size(); ++i) {
            auto& p = *params_[i];
            m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grads[i];
            v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grads[i].cwiseProduct(grads[i]);
            p *= (1.0 - lr_ * wd_);
            p.array() -= lr_ * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + kEps);
        }
    }

private:
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;

    std::vector<Matrix*> params_;
    std::vector<Matrix> m_, v_;
    double lr_, wd_;
    std::uint64_t t_ = 0;
};

namespace detail {

struct BackboneGradient {
    double loss = 0.0;
    Matrix dE, dEnc, dOut;
};

inline BackboneGradient backbone_loss(const Backbone& b, std::span<const TrainExample* const> batch) {
    const Eigen::Index d = b.dim();
    const auto n = static_cast<Eigen::Index>(b.vocab_size());
    const auto first = static_cast<Eigen::Index>(b.first_candidate());
    BackboneGradient g{0.0, Matrix::Zero(n, d), Matrix::Zero(d, d), Matrix::Zero(d, d)};
    for (const auto* ex : batch) {
        if (ex->target < b.first_candidate() || ex->target >= b.vocab_size())
            throw Error(ErrorCode::InvalidArgument, "target index out of range");
        const Vector s = b.pooled(ex->window);
        const Vector h = b.enc_projection * s;
        const Vector z = b.out_projection * h;
        const Vector logits = b.item_embeddings * z;
        const double m = logits.tail(n - first).maxCoeff();
        Vector p = Vector::Zero(n);
        double zsum = 0.0;
        for (Eigen::Index i = first; i < n; ++i) zsum += (p[i] = std::exp(logits[i] - m));
        p /= zsum;
        const auto t = static_cast<Eigen::Index>(ex->target);
        g.loss += -(logits[t] - m - std::log(zsum));
        p[t] -= 1.0;
        g.dE += p * z.transpose();
        const Vector dz = b.item_embeddings.transpose() * p;
        g.dOut += dz * h.transpose();
        const Vector dh = b.out_projection.transpose() * dz;
        g.dEnc += dh * s.transpose();
        const Vector ds = b.enc_projection.transpose() * dh;
        double w = 1.0;
        for (std::size_t j = ex->window.size(); j-- > 0;) {
            g.dE.row(static_cast<Eigen::Index>(ex->window[j])) += w * ds.transpose();
            w *= b.recency_decay;
        }
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    g.loss *= inv;
    g.dE *= inv;
    g.dEnc *= inv;
    g.dOut *= inv;
    if (b.padding) g.dE.row(0).setZero();
    return g;
}

}  // namespace detail

struct SetupReport {
    std::vector<double> epoch_losses;
    double final_epoch_loss() const { return epoch_losses.empty() ? 0.0 : epoch_losses.back(); }
};

/// Trains every base parameter for `setup_epochs` epochs with AdamW, then freezes.
inline SetupReport train_setup_backbone(Backbone& backbone, std::span<const TrainExample> examples,
                                        const TrainConfig& config) {
    if (backbone.frozen) throw Error(ErrorCode::AlreadyFrozen, "backbone is already frozen");
    config.validate();
    SetupReport report;
    if (config.setup_epochs > 0 && examples.empty())
        throw Error(ErrorCode::EmptyInput, "no setup examples");
    AdamW opt({&backbone.item_embeddings, &backbone.enc_projection, &backbone.out_projection},
              config.learning_rate, config.weight_decay);
    std::mt19937_64 rng(config.seed ^ 0xB0B0B0B0ULL);
    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t epoch = 0; epoch < config.setup_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            std::vector<const TrainExample*> batch;
            for (std::size_t i = start; i < std::min(order.size(), start + config.batch_size); ++i)
                batch.push_back(&examples[order[i]]);
            auto g = detail::backbone_loss(backbone, batch);
            std::vector<Matrix> grads{std::move(g.dE), std::move(g.dEnc), std::move(g.dOut)};
            opt.step(grads, config.grad_clip);
            if (backbone.padding) backbone.item_embeddings.row(0).setZero();
            loss_sum += g.loss;
            ++batches;
        }
        report.epoch_losses.push_back(loss_sum / static_cast<double>(std::max<std::size_t>(batches, 1)));
    }
    backbone.frozen = true;
    return report;
}

struct AdapterTrainReport {
    std::vector<double> epoch_losses;
    std::vector<double> epoch_penalties;  ///< separation penalty logged once per epoch
    std::size_t batches = 0;
    std::size_t setup_draws = 0;     ///< batch elements drawn from the setup-phase pool
    std::size_t finetune_draws = 0;  ///< batch elements drawn from the finetune-phase pool
};

namespace detail {

/// Cycles through a pool in shuffled order, reshuffling whenever it runs out.
class PoolSampler {
public:
    PoolSampler(std::span<const TrainExample> pool, std::uint64_t seed) : pool_(pool), rng_(seed) {
        order_.resize(pool.size());
        std::iota(order_.begin(), order_.end(), 0);
        pos_ = order_.size();
    }
    const TrainExample* next() {
        if (pos_ == order_.size()) {
            std::shuffle(order_.begin(), order_.end(), rng_);
            pos_ = 0;
        }
        return &pool_[order_[pos_++]];
    }

private:
    std::span<const TrainExample> pool_;
    std::mt19937_64 rng_;
    std::vector<std::size_t> order_;
    std::size_t pos_;
};

inline std::uint64_t stream_seed(std::uint64_t seed, RegionId owner, std::uint64_t salt) {
    std::uint64_t x = seed ^ (salt * 0xD1B54A32D192ED03ULL) ^ (to_underlying(owner) * 0x9E3779B97F4A7C15ULL);
    x ^= x >> 31;
    return x;
}

}  // namespace detail

/// Trains one adapter on a region's setup-phase and finetune-phase examples for
/// `finetune_epochs` epochs. Each batch comes whole from one pool, the setup pool with
/// probability mixing_ratio (forced to 0 or 1 when a pool is empty); pools are cycled
/// in reshuffled order. An epoch spans enough batches to visit the finetune pool once
/// in expectation (the setup pool when there is no finetune data). Only A and B change.
inline AdapterTrainReport train_region_adapter(const Backbone& backbone, LowRankAdapter& adapter,
                                               std::span<const TrainExample> setup_pool,
                                               std::span<const TrainExample> finetune_pool,
                                               const TrainConfig& config,
                                               const std::function<double()>& penalty_probe = {}) {
    config.validate();
    if (!backbone.frozen) throw Error(ErrorCode::InvalidArgument, "backbone must be frozen before adapter training");
    if (setup_pool.empty() && finetune_pool.empty())
        throw Error(ErrorCode::EmptyRegionData, "region has no training examples");
    detail::check_adapter(backbone, &adapter);

    double ratio = config.mixing_ratio;
    if (setup_pool.empty()) ratio = 0.0;
    if (finetune_pool.empty()) ratio = 1.0;

    const double bs = static_cast<double>(config.batch_size);
    std::size_t batches_per_epoch;
    if (ratio >= 1.0)
        batches_per_epoch = static_cast<std::size_t>(std::ceil(static_cast<double>(setup_pool.size()) / bs));
    else
        batches_per_epoch =
            static_cast<std::size_t>(std::ceil(static_cast<double>(finetune_pool.size()) / (bs * (1.0 - ratio))));

    std::mt19937_64 source_rng(detail::stream_seed(config.seed, adapter.owner, 1));
    std::mt19937_64 dropout_rng(detail::stream_seed(config.seed, adapter.owner, 2));
    detail::PoolSampler from_setup(setup_pool, detail::stream_seed(config.seed, adapter.owner, 3));
    detail::PoolSampler from_finetune(finetune_pool, detail::stream_seed(config.seed, adapter.owner, 4));
    std::bernoulli_distribution pick_setup(ratio);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    AdamW opt({&adapter.A, &adapter.B}, config.learning_rate, config.weight_decay);
    AdapterTrainReport report;
    const double keep = 1.0 - adapter.dropout_rate;
    for (std::size_t epoch = 0; epoch < config.finetune_epochs; ++epoch) {
        double loss_sum = 0.0;
        for (std::size_t b = 0; b < batches_per_epoch; ++b) {
            const bool use_setup = pick_setup(source_rng);
            std::vector<const TrainExample*> batch;
            for (std::size_t i = 0; i < config.batch_size; ++i)
                batch.push_back(use_setup ? from_setup.next() : from_finetune.next());
            (use_setup ? report.setup_draws : report.finetune_draws) += batch.size();

            std::vector<Vector> masks;
            if (adapter.dropout_rate > 0.0) {
                for (std::size_t i = 0; i < batch.size(); ++i) {
                    Vector m(adapter.dim());
                    for (Eigen::Index j = 0; j < m.size(); ++j) m[j] = unit(dropout_rng) < keep ? 1.0 / keep : 0.0;
                    masks.push_back(std::move(m));
                }
            }
            auto g = detail::adapter_loss(backbone, adapter, batch, masks.empty() ? nullptr : &masks);
            std::vector<Matrix> grads{std::move(g.dA), std::move(g.dB)};
            opt.step(grads, config.grad_clip);
            loss_sum += g.loss;
            ++report.batches;
        }
        report.epoch_losses.push_back(loss_sum / static_cast<double>(std::max<std::size_t>(batches_per_epoch, 1)));
        if (penalty_probe) report.epoch_penalties.push_back(penalty_probe());
    }
    return report;
}

}  // namespace raie

#endif  // RAIE_MODEL_TRAINING_HPP
