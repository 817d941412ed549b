#ifndef RAIE_QUANTILE_HPP
#define RAIE_QUANTILE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace raie {

/// 0-based position of the nearest-rank q-quantile (1-based rank ceil(q*n)) in a sorted
/// sequence of length n. The small slack keeps products like 0.1*10 from rounding up.
inline std::size_t nearest_rank_index(double q, std::size_t n) {
    const double rank = std::ceil(q * static_cast<double>(n) - 1e-9);
    const auto r = static_cast<std::size_t>(std::max(1.0, rank));
    return std::min(r, n) - 1;
}

}  // namespace raie

#endif  // RAIE_QUANTILE_HPP
