#ifndef RAIE_REGION_SPHERICAL_KMEANS_HPP
#define RAIE_REGION_SPHERICAL_KMEANS_HPP

#include <raie/error.hpp>
#include <raie/region/unit_vector.hpp>

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace raie {

struct KMeansOptions {
    std::size_t k = 1;
    std::size_t max_iter = 100;
    std::size_t restarts = 8;
    std::uint64_t seed = 0;
};

struct KMeansResult {
    std::vector<UnitVector> centers;
    std::vector<std::size_t> assignments;
    double objective = 0.0;
    /// Objective after each iteration, one trace per restart.
    std::vector<std::vector<double>> traces;
    std::size_t best_restart = 0;
};

namespace detail {

inline std::size_t count_distinct(std::span<const UnitVector> vectors) {
    std::vector<const UnitVector*> seen;
    for (const auto& v : vectors) {
        bool dup = false;
        for (const auto* s : seen) {
            if (*s == v) {
                dup = true;
                break;
            }
        }
        if (!dup) seen.push_back(&v);
    }
    return seen.size();
}

inline std::size_t best_center(const std::vector<UnitVector>& centers, const UnitVector& v) {
    std::size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < centers.size(); ++k) {
        const double s = centers[k].dot(v);
        if (s > best_score) {
            best_score = s;
            best = k;
        }
    }
    return best;
}

inline double objective(std::span<const UnitVector> vectors, const std::vector<UnitVector>& centers,
                        const std::vector<std::size_t>& assign) {
    double total = 0.0;
    for (std::size_t i = 0; i < vectors.size(); ++i) total += centers[assign[i]].dot(vectors[i]);
    return total;
}

// k-means++ seeding over cosine dissimilarity, restricted to points distinct from chosen seeds.
inline std::vector<UnitVector> seed_centers(std::span<const UnitVector> vectors, std::size_t k,
                                            std::mt19937_64& rng) {
    std::vector<UnitVector> centers;
    std::uniform_int_distribution<std::size_t> pick(0, vectors.size() - 1);
    centers.push_back(vectors[pick(rng)]);
    std::vector<double> weight(vectors.size());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    while (centers.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < vectors.size(); ++i) {
            double w = std::numeric_limits<double>::infinity();
            bool is_center = false;
            for (const auto& c : centers) {
                if (c == vectors[i]) is_center = true;
                w = std::min(w, 1.0 - c.dot(vectors[i]));
            }
            weight[i] = is_center ? 0.0 : std::max(w, 0.0);
            total += weight[i];
        }
        std::size_t chosen = vectors.size();
        if (total > 0.0) {
            double r = unit(rng) * total;
            for (std::size_t i = 0; i < vectors.size(); ++i) {
                if (weight[i] <= 0.0) continue;
                chosen = i;
                r -= weight[i];
                if (r <= 0.0) break;
            }
        } else {
            // Remaining distinct points coincide with seeds up to rounding; take any non-seed.
            for (std::size_t i = 0; i < vectors.size() && chosen == vectors.size(); ++i) {
                bool is_center = false;
                for (const auto& c : centers) is_center = is_center || c == vectors[i];
                if (!is_center) chosen = i;
            }
        }
        centers.push_back(vectors[chosen]);
    }
    return centers;
}

}  // namespace detail

/// Spherical k-means: maximizes sum_k sum_{v in C_k} c_k.v subject to |c_k| = 1.
/// Runs `restarts` seeded Lloyd iterations and returns the highest-objective restart
/// (earliest wins ties). Deterministic for a given seed.
inline KMeansResult spherical_kmeans(std::span<const UnitVector> vectors, const KMeansOptions& opts) {
    if (vectors.empty()) throw Error(ErrorCode::EmptyInput, "no vectors to cluster");
    if (opts.k == 0) throw Error(ErrorCode::InvalidArgument, "K must be positive");
    const auto dim = vectors.front().dim();
    for (const auto& v : vectors)
        if (v.dim() != dim) throw Error(ErrorCode::DimensionMismatch, "vectors differ in dimension");
    if (opts.k > detail::count_distinct(vectors))
        throw Error(ErrorCode::KTooLarge, "K exceeds the number of distinct vectors");

    const std::size_t n = vectors.size();
    const std::size_t restarts = std::max<std::size_t>(opts.restarts, 1);
    std::mt19937_64 rng(opts.seed);

    KMeansResult best;
    best.objective = -std::numeric_limits<double>::infinity();

    for (std::size_t restart = 0; restart < restarts; ++restart) {
        auto centers = detail::seed_centers(vectors, opts.k, rng);
        std::vector<std::size_t> assign(n);
        for (std::size_t i = 0; i < n; ++i) assign[i] = detail::best_center(centers, vectors[i]);
        std::vector<double> trace{detail::objective(vectors, centers, assign)};

        for (std::size_t iter = 0; iter < opts.max_iter; ++iter) {
            // An empty cluster takes the point worst served by its current center.
            std::vector<std::size_t> sizes(opts.k, 0);
            for (auto a : assign) ++sizes[a];
            for (std::size_t k = 0; k < opts.k; ++k) {
                if (sizes[k] != 0) continue;
                std::size_t worst = n;
                double worst_sim = std::numeric_limits<double>::infinity();
                for (std::size_t i = 0; i < n; ++i) {
                    if (sizes[assign[i]] < 2) continue;
                    const double s = centers[assign[i]].dot(vectors[i]);
                    if (s < worst_sim) {
                        worst_sim = s;
                        worst = i;
                    }
                }
                if (worst == n) break;
                --sizes[assign[worst]];
                assign[worst] = k;
                sizes[k] = 1;
            }

            std::vector<Vector> sums(opts.k, Vector::Zero(dim));
            for (std::size_t i = 0; i < n; ++i) sums[assign[i]] += vectors[i].values();
            for (std::size_t k = 0; k < opts.k; ++k) {
                // A zero sum contributes nothing to the objective whatever the center is.
                if (sums[k].norm() > 1e-12) centers[k] = UnitVector::normalize(sums[k]);
            }

            bool changed = false;
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t a = detail::best_center(centers, vectors[i]);
                // Only move on strict improvement so ties cannot cycle.
                if (a != assign[i] && centers[a].dot(vectors[i]) > centers[assign[i]].dot(vectors[i])) {
                    assign[i] = a;
                    changed = true;
                }
            }
            trace.push_back(detail::objective(vectors, centers, assign));
            if (!changed) break;
        }

        // Final centers are the normalized member sums of the final assignment.
        std::vector<Vector> sums(opts.k, Vector::Zero(dim));
        for (std::size_t i = 0; i < n; ++i) sums[assign[i]] += vectors[i].values();
        for (std::size_t k = 0; k < opts.k; ++k)
            if (sums[k].norm() > 1e-12) centers[k] = UnitVector::normalize(sums[k]);
        const double obj = detail::objective(vectors, centers, assign);
        trace.push_back(obj);

        best.traces.push_back(std::move(trace));
        if (obj > best.objective) {
            best.objective = obj;
            best.centers = std::move(centers);
            best.assignments = std::move(assign);
            best.best_restart = restart;
        }
    }
    return best;
}

}  // namespace raie

#endif  // RAIE_REGION_SPHERICAL_KMEANS_HPP
