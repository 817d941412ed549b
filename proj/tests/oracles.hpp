// Independent reference implementations used by the test suites. Nothing here calls
// into the library's algorithms; only its value types are shared.
#ifndef RAIE_TESTS_ORACLES_HPP
#define RAIE_TESTS_ORACLES_HPP

#include <raie/region/unit_vector.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

using raie::UnitVector;
using raie::Vector;

inline UnitVector unit(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v[i++] = x;
    return UnitVector::normalize(v);
}

inline UnitVector random_unit(std::mt19937_64& rng, Eigen::Index d) {
    std::normal_distribution<double> n(0.0, 1.0);
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = n(rng);
    return UnitVector::normalize(v);
}

/// Best spherical k-means objective over every assignment of n points to k nonempty
/// clusters; each cluster's optimal center is its normalized member sum, so its
/// contribution is the norm of that sum.
inline double best_partition_objective(const std::vector<UnitVector>& pts, std::size_t k) {
    const std::size_t n = pts.size();
    std::vector<std::size_t> label(n, 0);
    double best = -std::numeric_limits<double>::infinity();
    while (true) {
        std::vector<Vector> sums(k, Vector::Zero(pts[0].dim()));
        std::vector<std::size_t> count(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            sums[label[i]] += pts[i].values();
            ++count[label[i]];
        }
        if (std::all_of(count.begin(), count.end(), [](std::size_t c) { return c > 0; })) {
            double obj = 0.0;
            for (const auto& s : sums) obj += s.norm();
            best = std::max(best, obj);
        }
        std::size_t i = 0;
        while (i < n && ++label[i] == k) label[i++] = 0;
        if (i == n) break;
    }
    return best;
}

inline std::vector<double> softmax(const std::vector<double>& x) {
    double z = 0.0;
    for (double v : x) z += std::exp(v);
    std::vector<double> p;
    for (double v : x) p.push_back(std::exp(v) / z);
    return p;
}

/// Straight transcription of the three-way edit rule.
inline std::string edit_rule(double p_star, double delta, double tau, double delta_min) {
    if (p_star < tau) return "Add";
    return delta >= delta_min ? "Update" : "Expand";
}

/// 1-based nearest-rank quantile.
inline double nearest_rank(std::vector<double> xs, double q) {
    std::sort(xs.begin(), xs.end());
    auto r = static_cast<std::size_t>(std::ceil(q * static_cast<double>(xs.size()) - 1e-9));
    return xs[std::max<std::size_t>(r, 1) - 1];
}

/// k-core by repeated full recount until nothing is removed.
template <typename Edge>
std::vector<Edge> k_core(std::vector<Edge> edges, std::size_t k) {
    bool changed = true;
    while (changed) {
        std::map<std::string, std::size_t> du, di;
        for (const auto& e : edges) {
            du[e.user]++;
            di[e.item]++;
        }
        std::vector<Edge> keep;
        for (const auto& e : edges)
            if (du[e.user] >= k && di[e.item] >= k) keep.push_back(e);
        changed = keep.size() != edges.size();
        edges = std::move(keep);
    }
    return edges;
}

}  // namespace oracle

#endif  // RAIE_TESTS_ORACLES_HPP
