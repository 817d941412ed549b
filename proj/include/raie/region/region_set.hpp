#ifndef RAIE_REGION_REGION_SET_HPP
#define RAIE_REGION_REGION_SET_HPP

#include <raie/error.hpp>
#include <raie/quantile.hpp>
#include <raie/region/spherical_kmeans.hpp>
#include <raie/region/unit_vector.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace raie {

enum class RegionId : std::uint64_t {};

inline std::uint64_t to_underlying(RegionId id) { return static_cast<std::uint64_t>(id); }

enum class Phase : std::uint8_t { Setup = 0, Finetune = 1 };

enum class OverlapDistance : std::uint32_t { Angular = 0, EuclideanLiteral = 1 };

/// Thresholds and coefficients of the confidence-gated edit rule. Field order is the
/// on-disk order of the snapshot format.
struct EditConfig {
    double tau = 0.4;                ///< confidence threshold
    double delta_min = 0.05;         ///< margin between top-1 and top-2 confidence
    double beta = 0.1;               ///< radius EMA (Update)
    double gamma = 0.05;             ///< center EMA (Update)
    double lambda_expand = 0.5;      ///< outward radius rate (Expand)
    double alpha_expand = 0.05;      ///< center pull (Expand)
    double r_max = std::numbers::pi / 2;
    double radius_quantile = 0.9;
    std::uint32_t buffer_threshold = 32;
    std::uint32_t k_add = 1;
    double lambda_sep = 0.1;
    OverlapDistance overlap_distance_mode = OverlapDistance::EuclideanLiteral;

    void validate() const {
        auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
        if (!(tau >= 0.0 && tau <= 1.0)) fail("tau must lie in [0,1]");
        if (!(delta_min >= 0.0)) fail("delta_min must be >= 0");
        if (!(beta >= 0.0 && beta <= 1.0)) fail("beta must lie in [0,1]");
        if (!(gamma >= 0.0 && gamma <= 1.0)) fail("gamma must lie in [0,1]");
        if (!(lambda_expand > 0.0)) fail("lambda_expand must be > 0");
        if (!(alpha_expand > 0.0 && alpha_expand < 1.0)) fail("alpha_expand must lie in (0,1)");
        if (!(r_max > 0.0 && r_max <= std::numbers::pi)) fail("r_max must lie in (0,pi]");
        if (!(radius_quantile > 0.0 && radius_quantile <= 1.0)) fail("radius_quantile must lie in (0,1]");
        if (buffer_threshold == 0) fail("buffer_threshold must be positive");
        if (k_add == 0) fail("k_add must be positive");
        if (buffer_threshold < k_add) fail("buffer_threshold must be >= k_add");
        if (!(lambda_sep >= 0.0)) fail("lambda_sep must be >= 0");
    }
};

struct Region {
    RegionId id{};
    UnitVector center;
    double radius = 0.0;
    std::uint64_t member_count = 0;
    Phase created_at = Phase::Setup;
    std::uint64_t edit_count = 0;
};

/// The region state: ordered regions, the edit configuration and the Add buffer.
class RegionSet {
public:
    RegionSet(Eigen::Index dim, EditConfig config) : dim_(dim), config_(config) { config_.validate(); }

    Eigen::Index dim() const { return dim_; }
    const EditConfig& config() const { return config_; }
    void set_config(const EditConfig& c) {
        c.validate();
        config_ = c;
    }

    std::size_t size() const { return regions_.size(); }
    bool empty() const { return regions_.empty(); }
    const std::vector<Region>& regions() const { return regions_; }
    const Region& at(std::size_t index) const { return regions_.at(index); }

    std::optional<std::size_t> index_of(RegionId id) const {
        for (std::size_t i = 0; i < regions_.size(); ++i)
            if (regions_[i].id == id) return i;
        return std::nullopt;
    }
    const Region& get(RegionId id) const {
        const auto i = index_of(id);
        if (!i) throw Error(ErrorCode::IdMismatch, "unknown region " + std::to_string(to_underlying(id)));
        return regions_[*i];
    }

    /// Appends a region under a fresh id (ids increase monotonically).
    RegionId add(UnitVector center, double radius, std::uint64_t members, Phase phase) {
        check_dim(center);
        const RegionId id{next_id_++};
        regions_.push_back(Region{id, std::move(center), std::clamp(radius, 0.0, config_.r_max), members, phase, 0});
        return id;
    }

    /// Inserts a region with a caller-chosen id (used when restoring snapshots).
    void insert(Region r) {
        check_dim(r.center);
        if (index_of(r.id)) throw Error(ErrorCode::CorruptSnapshot, "duplicate region id");
        next_id_ = std::max(next_id_, to_underlying(r.id) + 1);
        regions_.push_back(std::move(r));
    }

    void replace(const Region& r) {
        const auto i = index_of(r.id);
        if (!i) throw Error(ErrorCode::IdMismatch, "unknown region");
        check_dim(r.center);
        regions_[*i] = r;
    }

    void set_radius(std::size_t index, double radius) {
        regions_.at(index).radius = std::clamp(radius, 0.0, config_.r_max);
    }

    const std::vector<UnitVector>& buffer() const { return buffer_; }
    void push_buffer(UnitVector v) {
        check_dim(v);
        buffer_.push_back(std::move(v));
    }
    std::vector<UnitVector> drain_buffer() { return std::exchange(buffer_, {}); }

    std::uint64_t next_id() const { return next_id_; }

    void check_dim(const UnitVector& v) const {
        if (v.dim() != dim_) throw Error(ErrorCode::DimensionMismatch, "vector dimension differs from region set");
    }

private:
    Eigen::Index dim_;
    EditConfig config_;
    std::vector<Region> regions_;
    std::vector<UnitVector> buffer_;
    std::uint64_t next_id_ = 0;
};

/// Nearest-rank q-quantile of the members' angular distances to `center`.
inline double compute_radius(std::span<const UnitVector> members, const UnitVector& center, double q) {
    if (members.empty()) throw Error(ErrorCode::EmptyMembers, "radius of an empty region");
    if (!(q > 0.0 && q <= 1.0)) throw Error(ErrorCode::InvalidArgument, "quantile must lie in (0,1]");
    std::vector<double> angles;
    angles.reserve(members.size());
    for (const auto& m : members) angles.push_back(angular_distance(center, m));
    std::sort(angles.begin(), angles.end());
    return angles[nearest_rank_index(q, angles.size())];
}

inline constexpr std::size_t kDefaultKMeansIterations = 100;
inline constexpr std::size_t kDefaultKMeansRestarts = 8;

struct BuildResult {
    RegionSet regions;
    std::vector<std::size_t> assignments;  ///< region index per input vector
};

inline BuildResult build_regions_with_assignments(std::span<const UnitVector> vectors, std::size_t k,
                                                  const EditConfig& config, std::uint64_t seed,
                                                  std::size_t restarts = kDefaultKMeansRestarts) {
    auto km = spherical_kmeans(vectors, {k, kDefaultKMeansIterations, restarts, seed});
    RegionSet set(vectors.front().dim(), config);
    for (std::size_t c = 0; c < k; ++c) {
        std::vector<UnitVector> members;
        for (std::size_t i = 0; i < vectors.size(); ++i)
            if (km.assignments[i] == c) members.push_back(vectors[i]);
        const double radius =
            members.empty() ? 0.0 : compute_radius(members, km.centers[c], config.radius_quantile);
        set.add(km.centers[c], radius, members.size(), Phase::Setup);
    }
    return {std::move(set), std::move(km.assignments)};
}

/// Clusters the vectors into k regions whose radii are the quantile member angle,
/// capped at r_max.
inline RegionSet build_regions(std::span<const UnitVector> vectors, std::size_t k, const EditConfig& config,
                               std::uint64_t seed) {
    return build_regions_with_assignments(vectors, k, config, seed).regions;
}

struct Confidence {
    std::vector<double> scores;  ///< c_k . v
    std::vector<double> probs;   ///< softmax(scores)
};

inline std::vector<double> softmax(std::span<const double> x) {
    std::vector<double> out(x.size());
    if (x.empty()) return out;
    const double m = *std::max_element(x.begin(), x.end());
    double z = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) z += (out[i] = std::exp(x[i] - m));
    for (auto& p : out) p /= z;
    return out;
}

inline Confidence confidence(const RegionSet& set, const UnitVector& v) {
    if (set.empty()) throw Error(ErrorCode::EmptyRegionSet, "no regions to score against");
    set.check_dim(v);
    Confidence c;
    c.scores.reserve(set.size());
    for (const auto& r : set.regions()) c.scores.push_back(r.center.dot(v));
    c.probs = softmax(c.scores);
    return c;
}

/// Position of the maximum, lowest index on ties.
inline std::size_t argmax(std::span<const double> x) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < x.size(); ++i)
        if (x[i] > x[best]) best = i;
    return best;
}

enum class EditAction : std::uint8_t { Update, Expand, Add };

constexpr std::string_view to_string(EditAction a) {
    switch (a) {
    case EditAction::Update: return "Update";
    case EditAction::Expand: return "Expand";
    case EditAction::Add: return "Add";
    }
    return "?";
}

struct EditDecision {
    EditAction action = EditAction::Add;
    std::optional<std::size_t> target_index;  ///< position in the region set; absent iff Add
    std::optional<RegionId> target_region;
    double p_star = 0.0;
    double margin_delta = 0.0;
    std::vector<double> probs;
};

/// The three-way rule: Update if p* >= tau and delta >= delta_min, Expand if p* >= tau and
/// delta < delta_min, Add otherwise. With a single region delta is p* itself.
inline EditDecision decide_edit(std::span<const double> probs, const EditConfig& config) {
    if (probs.empty()) throw Error(ErrorCode::InvalidDistribution, "empty distribution");
    double sum = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0)) throw Error(ErrorCode::InvalidDistribution, "negative or NaN probability");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw Error(ErrorCode::InvalidDistribution, "probabilities do not sum to 1");

    EditDecision d;
    d.probs.assign(probs.begin(), probs.end());
    const std::size_t top = argmax(probs);
    d.p_star = probs[top];
    if (probs.size() == 1) {
        d.margin_delta = d.p_star;
    } else {
        double second = -1.0;
        for (std::size_t i = 0; i < probs.size(); ++i)
            if (i != top) second = std::max(second, probs[i]);
        d.margin_delta = d.p_star - second;
    }
    if (d.p_star >= config.tau) {
        d.action = d.margin_delta >= config.delta_min ? EditAction::Update : EditAction::Expand;
        d.target_index = top;
    } else {
        d.action = EditAction::Add;
    }
    return d;
}

/// Scores `v` against the set and applies the edit rule, filling in the target id.
inline EditDecision decide_edit(const RegionSet& set, const UnitVector& v) {
    const auto conf = confidence(set, v);
    auto d = decide_edit(conf.probs, set.config());
    if (d.target_index) d.target_region = set.at(*d.target_index).id;
    return d;
}

namespace detail {

inline UnitVector blend_center(const UnitVector& c, const UnitVector& v, double weight) {
    const Vector mixed = (1.0 - weight) * c.values() + weight * v.values();
    if (mixed.norm() < 1e-9) throw Error(ErrorCode::DegenerateCenter, "blended center vanishes (antipodal input)");
    return UnitVector::normalize(mixed);
}

}  // namespace detail

/// EMA refinement: R <- (1-beta)R + beta*theta, c <- normalize((1-gamma)c + gamma*v).
inline Region apply_update(const Region& region, const UnitVector& v, const EditConfig& config) {
    if (v.dim() != region.center.dim()) throw Error(ErrorCode::DimensionMismatch, "update vector dimension");
    const double theta = angular_distance(region.center, v);
    Region out = region;
    out.center = detail::blend_center(region.center, v, config.gamma);
    out.radius = std::clamp((1.0 - config.beta) * region.radius + config.beta * theta, 0.0, config.r_max);
    ++out.edit_count;
    ++out.member_count;
    return out;
}

/// Outward growth: R <- min(R + lambda*(theta - R)_+, r_max), c <- normalize((1-alpha)c + alpha*v).
inline Region apply_expand(const Region& region, const UnitVector& v, const EditConfig& config) {
    if (v.dim() != region.center.dim()) throw Error(ErrorCode::DimensionMismatch, "expand vector dimension");
    const double theta = angular_distance(region.center, v);
    Region out = region;
    out.center = detail::blend_center(region.center, v, config.alpha_expand);
    const double grown = region.radius + config.lambda_expand * std::max(theta - region.radius, 0.0);
    out.radius = std::max(region.radius, std::min(grown, config.r_max));
    ++out.edit_count;
    ++out.member_count;
    return out;
}

struct FlushReport {
    std::vector<RegionId> new_regions;
    /// New region per flushed vector, in arrival order.
    std::vector<RegionId> assignments;
};

/// Buffers an Add-routed vector. Reaching buffer_threshold clusters the buffer into
/// k_add new regions (fewer if the buffer has fewer distinct vectors) and empties it.
inline std::optional<FlushReport> buffer_add(RegionSet& set, UnitVector v) {
    set.push_buffer(std::move(v));
    if (set.buffer().size() < set.config().buffer_threshold) return std::nullopt;

    auto pending = set.drain_buffer();
    const std::size_t k = std::min<std::size_t>(set.config().k_add, detail::count_distinct(pending));
    auto km = spherical_kmeans(pending, {k, kDefaultKMeansIterations, kDefaultKMeansRestarts,
                                         0x5eedULL ^ (set.next_id() * 0x9E3779B97F4A7C15ULL)});
    FlushReport report;
    std::vector<RegionId> cluster_ids;
    for (std::size_t c = 0; c < k; ++c) {
        std::vector<UnitVector> members;
        for (std::size_t i = 0; i < pending.size(); ++i)
            if (km.assignments[i] == c) members.push_back(pending[i]);
        const double radius =
            members.empty() ? 0.0 : compute_radius(members, km.centers[c], set.config().radius_quantile);
        cluster_ids.push_back(set.add(km.centers[c], radius, members.size(), Phase::Finetune));
    }
    report.new_regions = cluster_ids;
    for (auto a : km.assignments) report.assignments.push_back(cluster_ids[a]);
    return report;
}

}  // namespace raie

#endif  // RAIE_REGION_REGION_SET_HPP
