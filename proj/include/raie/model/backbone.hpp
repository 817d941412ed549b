#ifndef RAIE_MODEL_BACKBONE_HPP
#define RAIE_MODEL_BACKBONE_HPP

#include <raie/error.hpp>
#include <raie/model/item_vocab.hpp>
#include <raie/region/unit_vector.hpp>

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace raie {

/// Desk-scale sequence encoder. A window v_1..v_L is pooled with recency weights,
/// s = sum_j rho^(L-j) E[v_j], projected to the hidden state h = W_enc s, and items are
/// scored as E (W_out h). When `padding` is set, row 0 of E is the padding item: it
/// stays zero, never appears in windows and is never a candidate.
struct Backbone {
    Matrix item_embeddings;  // |V| x d
    double recency_decay = 0.8;
    Matrix enc_projection;  // d x d
    Matrix out_projection;  // d x d
    bool padding = true;
    bool frozen = false;

    Eigen::Index dim() const { return item_embeddings.cols(); }
    std::size_t vocab_size() const { return static_cast<std::size_t>(item_embeddings.rows()); }
    std::size_t first_candidate() const { return padding ? 1 : 0; }
    std::size_t candidate_count() const { return vocab_size() - first_candidate(); }

    /// Random initialization: embeddings ~ N(0, 1/d), projections = I + N(0, 0.1^2/d).
    static Backbone init(std::size_t vocab_size, Eigen::Index dim, double rho, std::uint64_t seed) {
        if (vocab_size < 2 || dim < 1) throw Error(ErrorCode::InvalidArgument, "backbone too small");
        if (!(rho > 0.0 && rho <= 1.0)) throw Error(ErrorCode::InvalidArgument, "recency decay must lie in (0,1]");
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        const double s = 1.0 / std::sqrt(static_cast<double>(dim));
        Backbone b;
        b.recency_decay = rho;
        b.item_embeddings = Matrix(static_cast<Eigen::Index>(vocab_size), dim);
        for (Eigen::Index i = 0; i < b.item_embeddings.size(); ++i) b.item_embeddings.data()[i] = s * normal(rng);
        b.item_embeddings.row(0).setZero();
        auto near_identity = [&] {
            Matrix m = Matrix::Identity(dim, dim);
            for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] += 0.1 * s * normal(rng);
            return m;
        };
        b.enc_projection = near_identity();
        b.out_projection = near_identity();
        return b;
    }

    void check_window(std::span<const ItemIndex> window) const {
        if (window.empty()) throw Error(ErrorCode::EmptyWindow, "window has no items");
        for (auto v : window)
            if (v < first_candidate() || v >= vocab_size())
                throw Error(ErrorCode::InvalidArgument, "window item index out of range");
    }

    /// Recency-weighted pooling of the window embeddings.
    Vector pooled(std::span<const ItemIndex> window) const {
        check_window(window);
        Vector s = Vector::Zero(dim());
        double w = 1.0;
        for (std::size_t j = window.size(); j-- > 0;) {
            s += w * item_embeddings.row(static_cast<Eigen::Index>(window[j])).transpose();
            w *= recency_decay;
        }
        return s;
    }

    Vector hidden(std::span<const ItemIndex> window) const { return enc_projection * pooled(window); }
};

/// Normalized last-position hidden state of the window.
inline UnitVector encode_subsequence(const Backbone& backbone, std::span<const ItemIndex> window) {
    const Vector h = backbone.hidden(window);
    if (!(h.norm() >= 1e-12)) throw Error(ErrorCode::ZeroHidden, "hidden state vanishes");
    return UnitVector::normalize(h);
}

}  // namespace raie

#endif  // RAIE_MODEL_BACKBONE_HPP
