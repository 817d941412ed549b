#ifndef RAIE_EVAL_METRICS_HPP
#define RAIE_EVAL_METRICS_HPP

#include <raie/error.hpp>

#include <algorithm>
#include <cmath>
#include <span>

namespace raie {

namespace detail {

/// 1-based rank of `target` within the first k entries, 0 if absent.
template <typename T>
std::size_t rank_in_top_k(std::span<const T> ranked, const T& target, std::size_t k) {
    if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
    const auto n = std::min(k, ranked.size());
    for (std::size_t i = 0; i < n; ++i)
        if (ranked[i] == target) return i + 1;
    return 0;
}

}  // namespace detail

/// 1 if the single relevant item appears in the top k, else 0.
template <typename T>
double recall_at_k(std::span<const T> ranked, const T& target, std::size_t k) {
    return detail::rank_in_top_k(ranked, target, k) > 0 ? 1.0 : 0.0;
}

/// Single-relevant-item NDCG: 1/log2(rank+1) inside the top k, else 0.
template <typename T>
double ndcg_at_k(std::span<const T> ranked, const T& target, std::size_t k) {
    const auto r = detail::rank_in_top_k(ranked, target, k);
    return r > 0 ? 1.0 / std::log2(static_cast<double>(r) + 1.0) : 0.0;
}

struct SplitMetrics {
    double recall = 0.0;
    double ndcg = 0.0;
    std::size_t count = 0;
};

}  // namespace raie

#endif  // RAIE_EVAL_METRICS_HPP
