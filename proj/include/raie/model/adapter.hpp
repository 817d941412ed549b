#ifndef RAIE_MODEL_ADAPTER_HPP
#define RAIE_MODEL_ADAPTER_HPP

#include <raie/error.hpp>
#include <raie/model/backbone.hpp>
#include <raie/region/region_set.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace raie {

/// Rank-r perturbation of the output projection, delta W = scale * B * A.
struct LowRankAdapter {
    RegionId owner{};
    Matrix A;  // r x d
    Matrix B;  // d x r
    double scale = 2.0;
    double dropout_rate = 0.05;

    Eigen::Index rank() const { return A.rows(); }
    Eigen::Index dim() const { return A.cols(); }

    Matrix delta() const { return scale * B * A; }

    /// A ~ U[-1/sqrt(d), 1/sqrt(d)], B = 0, so delta W starts at exactly zero.
    static LowRankAdapter init(RegionId owner, Eigen::Index dim, Eigen::Index rank, double alpha,
                               double dropout, std::uint64_t seed) {
        if (rank < 1 || dim < 1) throw Error(ErrorCode::InvalidArgument, "adapter rank and dim must be positive");
        LowRankAdapter a;
        a.owner = owner;
        a.scale = alpha / static_cast<double>(rank);
        a.dropout_rate = dropout;
        a.A = Matrix(rank, dim);
        a.B = Matrix::Zero(dim, rank);
        std::mt19937_64 rng(seed ^ (0xA5A5A5A5ULL + to_underlying(owner) * 0x9E3779B97F4A7C15ULL));
        const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (Eigen::Index i = 0; i < a.A.size(); ++i) a.A.data()[i] = u(rng);
        return a;
    }
};

struct AdapterHyper {
    Eigen::Index rank = 8;
    double alpha = 16.0;
    double dropout = 0.05;
};

/// One adapter per live region.
using AdapterRegistry = std::map<RegionId, LowRankAdapter>;

namespace detail {

inline void check_adapter(const Backbone& b, const LowRankAdapter* adapter) {
    if (adapter && (adapter->dim() != b.dim() || adapter->B.rows() != b.dim() || adapter->B.cols() != adapter->rank()))
        throw Error(ErrorCode::DimensionMismatch, "adapter shape does not match backbone");
}

/// z = W_out h + scale * B * (A (mask . h)); mask is the optional dropout mask (already scaled).
inline Vector output_state(const Backbone& b, const LowRankAdapter* adapter, const Vector& h,
                           const Vector* mask = nullptr) {
    Vector z = b.out_projection * h;
    if (adapter) {
        const Vector a_in = mask ? Vector(h.cwiseProduct(*mask)) : h;
        z += adapter->scale * (adapter->B * (adapter->A * a_in));
    }
    return z;
}

}  // namespace detail

/// Logits over every row of the item table, f(v|x) = E[v] . (W_out + scale B A) h(x).
inline Vector score_items(const Backbone& backbone, const LowRankAdapter* adapter, std::span<const ItemIndex> window) {
    detail::check_adapter(backbone, adapter);
    const Vector h = backbone.hidden(window);
    return backbone.item_embeddings * detail::output_state(backbone, adapter, h);
}

/// Softmax over the candidate items (padding excluded; its entry is 0).
inline Vector candidate_probabilities(const Backbone& backbone, const Vector& logits) {
    const auto first = static_cast<Eigen::Index>(backbone.first_candidate());
    Vector p = Vector::Zero(logits.size());
    const double m = logits.tail(logits.size() - first).maxCoeff();
    double z = 0.0;
    for (Eigen::Index i = first; i < logits.size(); ++i) z += (p[i] = std::exp(logits[i] - m));
    p.tail(logits.size() - first) /= z;
    return p;
}

/// Top-k candidate indices by descending logit, lower index first on ties.
inline std::vector<ItemIndex> top_k(const Vector& logits, std::size_t k, std::size_t first_candidate = 0,
                                    std::span<const ItemIndex> exclude = {}) {
    std::vector<ItemIndex> idx;
    for (auto i = static_cast<ItemIndex>(first_candidate); i < static_cast<ItemIndex>(logits.size()); ++i)
        if (std::find(exclude.begin(), exclude.end(), i) == exclude.end()) idx.push_back(i);
    if (k > idx.size()) throw Error(ErrorCode::KExceedsVocab, "k exceeds the number of candidates");
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                      [&](ItemIndex a, ItemIndex b) {
                          const double la = logits[static_cast<Eigen::Index>(a)];
                          const double lb = logits[static_cast<Eigen::Index>(b)];
                          return la > lb || (la == lb && a < b);
                      });
    idx.resize(k);
    return idx;
}

/// Ranked top-k recommendation. Items already in the window stay eligible unless
/// `exclude_seen` is set.
inline std::vector<ItemIndex> predict_topk(const Backbone& backbone, const LowRankAdapter* adapter,
                                           std::span<const ItemIndex> window, std::size_t k,
                                           bool exclude_seen = false) {
    const Vector logits = score_items(backbone, adapter, window);
    return top_k(logits, k, backbone.first_candidate(),
                 exclude_seen ? window : std::span<const ItemIndex>{});
}

struct TrainExample {
    std::vector<ItemIndex> window;
    ItemIndex target = 0;
};

struct AdapterGradient {
    double loss = 0.0;
    Matrix dA;
    Matrix dB;
};

namespace detail {

/// Mean next-item NLL over the batch and its gradient w.r.t. the adapter factors.
/// `masks`, when given, holds one dropout mask per example.
inline AdapterGradient adapter_loss(const Backbone& b, const LowRankAdapter& adapter,
                                    std::span<const TrainExample* const> batch,
                                    const std::vector<Vector>* masks = nullptr) {
    check_adapter(b, &adapter);
    AdapterGradient g{0.0, Matrix::Zero(adapter.A.rows(), adapter.A.cols()),
                      Matrix::Zero(adapter.B.rows(), adapter.B.cols())};
    if (batch.empty()) return g;
    const auto first = static_cast<Eigen::Index>(b.first_candidate());
    const auto n = static_cast<Eigen::Index>(b.vocab_size());
    for (std::size_t e = 0; e < batch.size(); ++e) {
        const auto& ex = *batch[e];
        if (ex.target < b.first_candidate() || ex.target >= b.vocab_size())
            throw Error(ErrorCode::InvalidArgument, "target index out of range");
        const Vector h = b.hidden(ex.window);
        const Vector* mask = masks ? &(*masks)[e] : nullptr;
        const Vector a_in = mask ? Vector(h.cwiseProduct(*mask)) : h;
        const Vector ah = adapter.A * a_in;
        const Vector z = b.out_projection * h + adapter.scale * (adapter.B * ah);
        const Vector logits = b.item_embeddings * z;
        const double m = logits.tail(n - first).maxCoeff();
        Vector p = Vector::Zero(n);
        double zsum = 0.0;
        for (Eigen::Index i = first; i < n; ++i) zsum += (p[i] = std::exp(logits[i] - m));
        p /= zsum;
        const auto t = static_cast<Eigen::Index>(ex.target);
        g.loss += -(logits[t] - m - std::log(zsum));
        p[t] -= 1.0;  // dL/dlogits
        const Vector dz = b.item_embeddings.transpose() * p;
        // z = ... + scale * B (A a_in)
        g.dB += adapter.scale * dz * ah.transpose();
        g.dA += adapter.scale * (adapter.B.transpose() * dz) * a_in.transpose();
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    g.loss *= inv;
    g.dA *= inv;
    g.dB *= inv;
    return g;
}

}  // namespace detail

/// Mean negative log-likelihood of the targets and its adapter-factor gradients
/// (no dropout). The backbone is read-only here.
inline AdapterGradient next_item_loss(const Backbone& backbone, const LowRankAdapter& adapter,
                                      std::span<const TrainExample> batch) {
    std::vector<const TrainExample*> ptrs;
    for (const auto& e : batch) ptrs.push_back(&e);
    return detail::adapter_loss(backbone, adapter, ptrs);
}

}  // namespace raie

#endif  // RAIE_MODEL_ADAPTER_HPP
