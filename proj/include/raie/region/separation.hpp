#ifndef RAIE_REGION_SEPARATION_HPP
#define RAIE_REGION_SEPARATION_HPP

#include <raie/region/region_set.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

namespace raie {

inline double center_distance(const Region& a, const Region& b, OverlapDistance mode) {
    if (mode == OverlapDistance::Angular) return angular_distance(a.center, b.center);
    return (a.center.values() - b.center.values()).norm();
}

/// Pairwise overlap d_ij = (R_i + R_j - dist(c_i, c_j))_+.
inline double overlap(const Region& a, const Region& b, OverlapDistance mode) {
    return std::max(a.radius + b.radius - center_distance(a, b, mode), 0.0);
}

/// lambda_sep * sum_{i<j} d_ij^2.
inline double separation_penalty(const RegionSet& set) {
    const auto& rs = set.regions();
    const auto mode = set.config().overlap_distance_mode;
    double total = 0.0;
    for (std::size_t i = 0; i < rs.size(); ++i)
        for (std::size_t j = i + 1; j < rs.size(); ++j) {
            const double d = overlap(rs[i], rs[j], mode);
            total += d * d;
        }
    return set.config().lambda_sep * total;
}

/// Gradient descent on the separation penalty with respect to the radii, centers fixed.
/// dL/dR_i = 2 lambda_sep sum_{j != i} d_ij. A step that would raise the penalty is
/// halved until it does not, so the penalty never increases.
inline RegionSet repair_overlap(RegionSet set, std::size_t steps, double step_size) {
    if (!(step_size > 0.0)) throw Error(ErrorCode::InvalidArgument, "step_size must be positive");
    const auto mode = set.config().overlap_distance_mode;
    const double lambda = set.config().lambda_sep;
    const std::size_t k = set.size();
    for (std::size_t step = 0; step < steps; ++step) {
        const double before = separation_penalty(set);
        if (before == 0.0) break;

        std::vector<double> grad(k, 0.0);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = i + 1; j < k; ++j) {
                const double d = overlap(set.at(i), set.at(j), mode);
                grad[i] += 2.0 * lambda * d;
                grad[j] += 2.0 * lambda * d;
            }

        double eta = step_size;
        bool accepted = false;
        for (int attempt = 0; attempt < 40 && !accepted; ++attempt, eta *= 0.5) {
            RegionSet trial = set;
            for (std::size_t i = 0; i < k; ++i) trial.set_radius(i, set.at(i).radius - eta * grad[i]);
            if (separation_penalty(trial) <= before) {
                set = std::move(trial);
                accepted = true;
            }
        }
        if (!accepted) break;
    }
    return set;
}

}  // namespace raie

#endif  // RAIE_REGION_SEPARATION_HPP
