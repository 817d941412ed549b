#include <raie/region/region_set.hpp>
#include <raie/region/region_store.hpp>
#include <raie/region/separation.hpp>
#include <raie/region/snapshot.hpp>
#include <raie/region/spherical_kmeans.hpp>

#include "oracles.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <thread>

using namespace raie;
using oracle::unit;

namespace {

EditConfig loose_config() {
    EditConfig c;
    c.r_max = std::numbers::pi;
    return c;
}

Region make_region(const UnitVector& c, double r) { return Region{RegionId{0}, c, r, 1, Phase::Setup, 0}; }

}  // namespace

TEST(UnitVector, NormalizeAndReject) {
    const auto v = UnitVector::normalize(Vector::Constant(3, 2.0));
    EXPECT_NEAR(v.values().norm(), 1.0, 1e-12);
    EXPECT_RAIE_ERROR(UnitVector::normalize(Vector::Zero(3)), ErrorCode::InvalidArgument);
    EXPECT_RAIE_ERROR(UnitVector::from_unit(Vector::Constant(2, 1.0)), ErrorCode::InvalidArgument);
}

TEST(UnitVector, ScalingInvariance) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0, 1);
    for (int t = 0; t < 50; ++t) {
        Vector e(5);
        for (auto& x : e) x = n(rng);
        const double s = std::exp(n(rng) * 3);
        EXPECT_TRUE((UnitVector::normalize(e).values() - UnitVector::normalize(s * e).values()).norm() < 1e-12);
    }
}

TEST(SphericalKMeans, SingleClusterIsMeanDirection) {
    std::vector<UnitVector> pts{unit({1, 0}), unit({0, 1})};
    auto r = spherical_kmeans(pts, {1, 100, 4, 7});
    EXPECT_NEAR(r.centers[0][0], 0.70711, 1e-5);
    EXPECT_NEAR(r.centers[0][1], 0.70711, 1e-5);
    EXPECT_NEAR(r.objective, 1.41421, 1e-5);
}

TEST(SphericalKMeans, WellSeparatedPairs) {
    std::vector<UnitVector> pts{unit({1, 0}), unit({0.999, 0.045}), unit({0, 1}), unit({-0.045, 0.999})};
    auto r = spherical_kmeans(pts, {2, 100, 8, 1});
    EXPECT_EQ(r.assignments[0], r.assignments[1]);
    EXPECT_EQ(r.assignments[2], r.assignments[3]);
    EXPECT_NE(r.assignments[0], r.assignments[2]);
}

TEST(SphericalKMeans, MatchesExhaustivePartitionOracle) {
    std::mt19937_64 rng(2024);
    std::vector<UnitVector> pts;
    for (int i = 0; i < 6; ++i) pts.push_back(oracle::random_unit(rng, 3));
    auto r = spherical_kmeans(pts, {2, 100, 32, 5});
    EXPECT_NEAR(r.objective, oracle::best_partition_objective(pts, 2), 1e-9);
}

TEST(SphericalKMeans, ObjectiveNeverDecreasesWithinRestart) {
    std::mt19937_64 rng(11);
    for (int inst = 0; inst < 30; ++inst) {
        std::vector<UnitVector> pts;
        for (int i = 0; i < 40; ++i) pts.push_back(oracle::random_unit(rng, 4));
        auto r = spherical_kmeans(pts, {4, 100, 4, static_cast<std::uint64_t>(inst)});
        for (const auto& trace : r.traces)
            for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_GE(trace[i], trace[i - 1] - 1e-12);
    }
}

TEST(SphericalKMeans, DeterministicAndUnitCenters) {
    std::mt19937_64 rng(5);
    std::vector<UnitVector> pts;
    for (int i = 0; i < 30; ++i) pts.push_back(oracle::random_unit(rng, 3));
    auto a = spherical_kmeans(pts, {3, 100, 8, 99});
    auto b = spherical_kmeans(pts, {3, 100, 8, 99});
    EXPECT_EQ(a.assignments, b.assignments);
    for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_TRUE(a.centers[k] == b.centers[k]);
        EXPECT_NEAR(a.centers[k].values().norm(), 1.0, 1e-12);
    }
}

TEST(SphericalKMeans, Errors) {
    std::vector<UnitVector> none;
    EXPECT_RAIE_ERROR(spherical_kmeans(none, {1}), ErrorCode::EmptyInput);
    std::vector<UnitVector> dup{unit({1, 0}), unit({1, 0})};
    EXPECT_RAIE_ERROR(spherical_kmeans(dup, {2}), ErrorCode::KTooLarge);
    std::vector<UnitVector> mixed{unit({1, 0}), unit({1, 0, 0})};
    EXPECT_RAIE_ERROR(spherical_kmeans(mixed, {1}), ErrorCode::DimensionMismatch);
}

TEST(ComputeRadius, Examples) {
    const auto c = unit({1, 0});
    std::vector<UnitVector> same{c, c, c};
    EXPECT_EQ(compute_radius(same, c, 0.9), 0.0);

    std::vector<UnitVector> members;
    std::vector<double> angles{0.3, 0.1, 0.5, 0.2, 0.4};
    for (double a : angles) members.push_back(unit({std::cos(a), std::sin(a)}));
    EXPECT_NEAR(compute_radius(members, c, 0.9), 0.5, 1e-12);
    EXPECT_NEAR(compute_radius(members, c, 1.0), 0.5, 1e-12);
    EXPECT_NEAR(compute_radius(members, c, 0.5), oracle::nearest_rank(angles, 0.5), 1e-12);
    EXPECT_RAIE_ERROR(compute_radius(std::span<const UnitVector>{}, c, 0.9), ErrorCode::EmptyMembers);
}

TEST(ComputeRadius, NearestRankOracleOnRandomSets) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> ang(0.0, 3.0);
    std::uniform_int_distribution<int> size(1, 25);
    const auto c = unit({1, 0});
    for (int t = 0; t < 200; ++t) {
        std::vector<double> angles;
        std::vector<UnitVector> members;
        for (int i = size(rng); i > 0; --i) {
            const double a = ang(rng);
            angles.push_back(a);
            members.push_back(unit({std::cos(a), std::sin(a)}));
        }
        for (double q : {0.1, 0.5, 0.9, 1.0})
            EXPECT_NEAR(compute_radius(members, c, q), oracle::nearest_rank(angles, q), 1e-9);
    }
}

TEST(BuildRegions, WellSeparatedWithFullQuantile) {
    std::vector<UnitVector> pts{unit({1, 0}), unit({0.999, 0.045}), unit({0, 1}), unit({-0.045, 0.999})};
    auto cfg = loose_config();
    cfg.radius_quantile = 1.0;
    auto br = build_regions_with_assignments(pts, 2, cfg, 1);
    ASSERT_EQ(br.regions.size(), 2u);
    for (std::size_t k = 0; k < 2; ++k) {
        double max_angle = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i)
            if (br.assignments[i] == k) max_angle = std::max(max_angle, angular_distance(pts[i], br.regions.at(k).center));
        EXPECT_NEAR(br.regions.at(k).radius, max_angle, 1e-12);
        EXPECT_EQ(br.regions.at(k).member_count, 2u);
        EXPECT_EQ(br.regions.at(k).created_at, Phase::Setup);
    }
    EXPECT_TRUE(br.regions.buffer().empty());
}

TEST(BuildRegions, IdenticalVectorsGiveZeroRadius) {
    std::vector<UnitVector> pts(5, unit({0, 0, 1}));
    auto set = build_regions(pts, 1, EditConfig{}, 3);
    ASSERT_EQ(set.size(), 1u);
    EXPECT_EQ(set.at(0).radius, 0.0);
}

TEST(BuildRegions, RadiiClippedToRmax) {
    std::vector<UnitVector> pts{unit({1, 0}), unit({-1, 0.01})};
    EditConfig cfg;
    cfg.r_max = 0.3;
    cfg.radius_quantile = 1.0;
    auto set = build_regions(pts, 1, cfg, 0);
    EXPECT_LE(set.at(0).radius, 0.3);
}

TEST(Confidence, Examples) {
    RegionSet set(2, loose_config());
    set.add(unit({1, 0}), 0.1, 1, Phase::Setup);
    set.add(unit({0, 1}), 0.1, 1, Phase::Setup);
    auto c = confidence(set, unit({1, 0}));
    EXPECT_NEAR(c.scores[0], 1.0, 1e-12);
    EXPECT_NEAR(c.scores[1], 0.0, 1e-12);
    EXPECT_NEAR(c.probs[0], 0.73106, 1e-5);
    EXPECT_NEAR(c.probs[1], 0.26894, 1e-5);

    // Three centers all at 45 degrees from v.
    RegionSet sym(3, loose_config());
    sym.add(unit({1, 0, 1}), 0, 1, Phase::Setup);
    sym.add(unit({0, 1, 1}), 0, 1, Phase::Setup);
    sym.add(unit({-1, -1, 1.41421356237}), 0, 1, Phase::Setup);
    auto e = confidence(sym, unit({0, 0, 1}));
    for (double p : e.probs) EXPECT_NEAR(p, 1.0 / 3.0, 1e-9);

    EXPECT_RAIE_ERROR(confidence(RegionSet(2, EditConfig{}), unit({1, 0})), ErrorCode::EmptyRegionSet);
}

TEST(Confidence, SoftmaxMatchesIndependentOracle) {
    std::vector<double> scores{0.9, 0.2, -0.1};
    auto ours = softmax(scores);
    auto ref = oracle::softmax(scores);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(ours[i], ref[i], 1e-12);
}

TEST(Confidence, SoftmaxArgmaxConsistencyAndNormalization) {
    std::mt19937_64 rng(17);
    for (int t = 0; t < 500; ++t) {
        RegionSet set(4, loose_config());
        const int k = 1 + static_cast<int>(rng() % 6);
        for (int i = 0; i < k; ++i) set.add(oracle::random_unit(rng, 4), 0.1, 1, Phase::Setup);
        auto c = confidence(set, oracle::random_unit(rng, 4));
        double sum = 0;
        for (double p : c.probs) sum += p;
        EXPECT_NEAR(sum, 1.0, 1e-9);
        EXPECT_EQ(argmax(c.probs), argmax(c.scores));
    }
}

TEST(DecideEdit, Examples) {
    EditConfig cfg;
    cfg.tau = 0.5;
    cfg.delta_min = 0.1;
    std::vector<double> a{0.7, 0.3};
    auto d = decide_edit(a, cfg);
    EXPECT_EQ(d.action, EditAction::Update);
    EXPECT_EQ(d.target_index, 0u);
    EXPECT_NEAR(d.p_star, 0.7, 1e-12);
    EXPECT_NEAR(d.margin_delta, 0.4, 1e-12);

    std::vector<double> b{0.52, 0.48};
    EXPECT_EQ(decide_edit(b, cfg).action, EditAction::Expand);

    std::vector<double> c{0.40, 0.35, 0.25};
    auto dc = decide_edit(c, cfg);
    EXPECT_EQ(dc.action, EditAction::Add);
    EXPECT_FALSE(dc.target_index.has_value());
}

TEST(DecideEdit, BoundariesInclusiveAndTies) {
    EditConfig cfg;
    cfg.tau = 0.5;
    cfg.delta_min = 0.0;
    std::vector<double> tie{0.5, 0.5};
    auto d = decide_edit(tie, cfg);
    EXPECT_EQ(d.action, EditAction::Update);  // p* = tau and delta = delta_min both pass
    EXPECT_EQ(d.target_index, 0u);            // lowest index wins the tie

    std::vector<double> single{1.0};
    auto s = decide_edit(single, cfg);
    EXPECT_EQ(s.margin_delta, 1.0);
    EXPECT_EQ(s.action, EditAction::Update);
}

TEST(DecideEdit, InvalidDistribution) {
    EditConfig cfg;
    std::vector<double> bad{0.5, 0.6};
    EXPECT_RAIE_ERROR(decide_edit(bad, cfg), ErrorCode::InvalidDistribution);
    std::vector<double> neg{1.2, -0.2};
    EXPECT_RAIE_ERROR(decide_edit(neg, cfg), ErrorCode::InvalidDistribution);
}

namespace {

// A distribution whose top value is p and whose runner-up is p - delta, or empty when no
// such distribution exists.
std::vector<double> distribution_with(double p, double delta) {
    const double second = p - delta;
    if (second < 0.0) return {};
    const double rest = 1.0 - p - second;
    if (rest < -1e-12) return {};
    std::vector<double> probs{p, second};
    if (rest > 1e-12) {
        if (second <= 0.0) return {};
        const auto m = static_cast<std::size_t>(std::ceil(rest / second - 1e-9));
        probs.insert(probs.end(), m, rest / static_cast<double>(m));
    }
    return probs;
}

}  // namespace

TEST(DecideEdit, TruthTableOverGrid) {
    const std::vector<std::pair<double, double>> thresholds{{0.0, 0.0}, {0.3, 0.1}, {0.5, 0.05}, {0.7, 0.3}, {1.0, 0.0}};
    std::size_t feasible = 0;
    for (int i = 0; i <= 40; ++i)
        for (int j = 0; j <= 40; ++j) {
            const double p = i / 40.0, delta = j / 40.0;
            const auto probs = distribution_with(p, delta);
            if (probs.empty()) continue;
            ++feasible;
            for (auto [tau, dmin] : thresholds) {
                EditConfig cfg;
                cfg.tau = tau;
                cfg.delta_min = dmin;
                const auto d = decide_edit(probs, cfg);
                EXPECT_NEAR(d.p_star, p, 1e-12);
                EXPECT_NEAR(d.margin_delta, delta, 1e-12);
                EXPECT_EQ(std::string(to_string(d.action)), oracle::edit_rule(d.p_star, d.margin_delta, tau, dmin));
                EXPECT_EQ(d.target_index.has_value(), d.action != EditAction::Add);
            }
        }
    EXPECT_GT(feasible, 400u);
}

TEST(ApplyUpdate, Examples) {
    auto cfg = loose_config();
    const auto c = unit({1, 0});
    const auto v = unit({0, 1});

    cfg.beta = 0;
    cfg.gamma = 0;
    auto same = apply_update(make_region(c, 0.3), v, cfg);
    EXPECT_TRUE(same.center == c);
    EXPECT_EQ(same.radius, 0.3);
    EXPECT_EQ(same.edit_count, 1u);
    EXPECT_EQ(same.member_count, 2u);

    cfg.beta = 1;
    cfg.gamma = 1;
    auto full = apply_update(make_region(c, 0.3), v, cfg);
    EXPECT_NEAR((full.center.values() - v.values()).norm(), 0.0, 1e-12);
    EXPECT_NEAR(full.radius, std::numbers::pi / 2, 1e-12);

    cfg.beta = 0.2;
    cfg.gamma = 0.5;
    auto mid = apply_update(make_region(c, 0.3), v, cfg);
    EXPECT_NEAR(mid.center[0], 0.70711, 1e-5);
    EXPECT_NEAR(mid.center[1], 0.70711, 1e-5);
    EXPECT_NEAR(mid.radius, 0.55416, 1e-5);
}

TEST(ApplyUpdate, DegenerateCenterRejected) {
    auto cfg = loose_config();
    cfg.gamma = 0.5;
    EXPECT_RAIE_ERROR(apply_update(make_region(unit({1, 0}), 0.3), unit({-1, 0}), cfg), ErrorCode::DegenerateCenter);
}

TEST(ApplyExpand, Examples) {
    auto cfg = loose_config();
    cfg.lambda_expand = 0.5;
    const auto c = unit({1, 0});

    auto inside = apply_expand(make_region(c, 0.5), unit({std::cos(0.2), std::sin(0.2)}), cfg);
    EXPECT_EQ(inside.radius, 0.5);
    EXPECT_FALSE(inside.center == c);

    cfg.r_max = 1.0;
    auto capped = apply_expand(make_region(c, 1.0), unit({-0.2, 1}), cfg);
    EXPECT_EQ(capped.radius, 1.0);

    auto grow = apply_expand(make_region(c, 0.2), unit({std::cos(0.6), std::sin(0.6)}), loose_config());
    EXPECT_NEAR(grow.radius, 0.4, 1e-12);
}

TEST(EditProperties, UnitNormAndRadiusBoundsUnderRandomSequences) {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int seq = 0; seq < 100; ++seq) {
        EditConfig cfg;
        cfg.beta = u(rng);
        cfg.gamma = u(rng) * 0.9;
        cfg.alpha_expand = 0.01 + 0.9 * u(rng);
        cfg.lambda_expand = 0.1 + u(rng);
        cfg.r_max = 0.2 + 2.5 * u(rng);
        Region r = make_region(oracle::random_unit(rng, 3), std::min(0.3, cfg.r_max));
        for (int step = 0; step < 50; ++step) {
            const auto v = oracle::random_unit(rng, 3);
            const double theta = angular_distance(r.center, v);
            try {
                if (u(rng) < 0.5) {
                    const auto next = apply_update(r, v, cfg);
                    const double raw = (1 - cfg.beta) * r.radius + cfg.beta * theta;
                    EXPECT_GE(raw, std::min(r.radius, theta) - 1e-12);
                    EXPECT_LE(raw, std::max(r.radius, theta) + 1e-12);
                    EXPECT_NEAR(next.radius, std::clamp(raw, 0.0, cfg.r_max), 1e-12);
                    r = next;
                } else {
                    const auto next = apply_expand(r, v, cfg);
                    EXPECT_GE(next.radius, r.radius);
                    r = next;
                }
            } catch (const Error& e) {
                EXPECT_EQ(e.code(), ErrorCode::DegenerateCenter);
            }
            EXPECT_NEAR(r.center.values().norm(), 1.0, 1e-6);
            EXPECT_GE(r.radius, 0.0);
            EXPECT_LE(r.radius, cfg.r_max);
        }
    }
}

TEST(BufferAdd, ThresholdArithmetic) {
    EditConfig cfg;
    cfg.buffer_threshold = 10;
    RegionSet set(2, cfg);
    set.add(unit({1, 0}), 0.1, 1, Phase::Setup);
    std::mt19937_64 rng(1);
    EXPECT_FALSE(buffer_add(set, oracle::random_unit(rng, 2)).has_value());
    EXPECT_EQ(set.buffer().size(), 1u);
    for (int i = 0; i < 8; ++i) EXPECT_FALSE(buffer_add(set, oracle::random_unit(rng, 2)).has_value());
    auto flush = buffer_add(set, oracle::random_unit(rng, 2));
    ASSERT_TRUE(flush.has_value());
    EXPECT_TRUE(set.buffer().empty());
    EXPECT_EQ(set.size(), 2u);
    EXPECT_EQ(flush->new_regions.size(), 1u);
    EXPECT_EQ(flush->assignments.size(), 10u);
    EXPECT_EQ(set.get(flush->new_regions[0]).created_at, Phase::Finetune);
    EXPECT_RAIE_ERROR(buffer_add(set, unit({1, 0, 0})), ErrorCode::DimensionMismatch);
}

TEST(BufferAdd, FlushMatchesBruteForceBipartition) {
    std::mt19937_64 rng(2024);
    std::vector<UnitVector> pts;
    for (int i = 0; i < 6; ++i) pts.push_back(oracle::random_unit(rng, 3));
    EditConfig cfg;
    cfg.buffer_threshold = 6;
    cfg.k_add = 2;
    RegionSet set(3, cfg);
    std::optional<FlushReport> flush;
    for (const auto& p : pts) flush = buffer_add(set, p);
    ASSERT_TRUE(flush.has_value());
    ASSERT_EQ(flush->new_regions.size(), 2u);
    double obj = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) obj += set.get(flush->assignments[i]).center.dot(pts[i]);
    EXPECT_NEAR(obj, oracle::best_partition_objective(pts, 2), 1e-9);
}

TEST(Separation, Examples) {
    EditConfig cfg = loose_config();
    cfg.lambda_sep = 1.0;
    RegionSet apart(2, cfg);
    apart.add(unit({1, 0}), 0.3, 1, Phase::Setup);
    apart.add(unit({0, 1}), 0.3, 1, Phase::Setup);
    EXPECT_EQ(separation_penalty(apart), 0.0);

    RegionSet lit(2, cfg);
    lit.add(unit({1, 0}), 0.8, 1, Phase::Setup);
    lit.add(unit({0, 1}), 0.8, 1, Phase::Setup);
    EXPECT_NEAR(overlap(lit.at(0), lit.at(1), OverlapDistance::EuclideanLiteral), 0.18579, 1e-5);
    EXPECT_NEAR(separation_penalty(lit), 0.03452, 1e-5);

    cfg.lambda_sep = 2.0;
    RegionSet same(2, cfg);
    same.add(unit({1, 0}), 0.3, 1, Phase::Setup);
    same.add(unit({1, 0}), 0.3, 1, Phase::Setup);
    EXPECT_NEAR(separation_penalty(same), 0.72, 1e-12);

    cfg.overlap_distance_mode = OverlapDistance::Angular;
    cfg.lambda_sep = 1.0;
    RegionSet ang(2, cfg);
    ang.add(unit({1, 0}), 0.8, 1, Phase::Setup);
    ang.add(unit({0, 1}), 0.8, 1, Phase::Setup);
    EXPECT_NEAR(separation_penalty(ang), std::pow(1.6 - std::numbers::pi / 2, 2), 1e-12);

    RegionSet one(2, cfg);
    one.add(unit({1, 0}), 1.0, 1, Phase::Setup);
    EXPECT_EQ(separation_penalty(one), 0.0);
}

TEST(RepairOverlap, ZeroPenaltyAndSingleRegionAreNoOps) {
    RegionSet apart(2, loose_config());
    apart.add(unit({1, 0}), 0.3, 1, Phase::Setup);
    apart.add(unit({0, 1}), 0.3, 1, Phase::Setup);
    auto out = repair_overlap(apart, 20, 0.1);
    EXPECT_EQ(snapshot(out), snapshot(apart));

    RegionSet one(2, loose_config());
    one.add(unit({1, 0}), 1.0, 1, Phase::Setup);
    EXPECT_EQ(snapshot(repair_overlap(one, 20, 0.1)), snapshot(one));
    EXPECT_RAIE_ERROR(repair_overlap(one, 1, 0.0), ErrorCode::InvalidArgument);
}

TEST(RepairOverlap, IdenticalCentersShrinkMonotonically) {
    EditConfig cfg = loose_config();
    cfg.lambda_sep = 2.0;
    RegionSet set(2, cfg);
    set.add(unit({1, 0}), 0.3, 1, Phase::Setup);
    set.add(unit({1, 0}), 0.3, 1, Phase::Setup);
    double prev = separation_penalty(set);
    // dL/dR_i = 2 lambda d = 2.4 at the start, so one step of 0.05 gives R = 0.18.
    auto one = repair_overlap(set, 1, 0.05);
    EXPECT_NEAR(one.at(0).radius, 0.3 - 0.05 * 2 * 2.0 * 0.6, 1e-12);
    for (int s = 0; s < 40; ++s) {
        set = repair_overlap(std::move(set), 1, 0.05);
        const double now = separation_penalty(set);
        EXPECT_LE(now, prev);
        prev = now;
    }
    EXPECT_LT(set.at(0).radius, 0.01);
    EXPECT_LT(prev, 1e-4);
}

TEST(RepairOverlap, NeverIncreasesPenaltyOnRandomSets) {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.5);
    for (int t = 0; t < 50; ++t) {
        EditConfig cfg = loose_config();
        cfg.overlap_distance_mode = t % 2 ? OverlapDistance::Angular : OverlapDistance::EuclideanLiteral;
        RegionSet set(3, cfg);
        for (int k = 0; k < 5; ++k) set.add(oracle::random_unit(rng, 3), u(rng), 1, Phase::Setup);
        const double before = separation_penalty(set);
        auto out = repair_overlap(set, 25, 0.5);
        EXPECT_LE(separation_penalty(out), before);
        for (std::size_t k = 0; k < out.size(); ++k) {
            EXPECT_TRUE(out.at(k).center == set.at(k).center);
            EXPECT_GE(out.at(k).radius, 0.0);
        }
    }
}

TEST(Snapshot, RoundTripIsBitExact) {
    std::mt19937_64 rng(4);
    EditConfig cfg;
    cfg.tau = 0.37;
    cfg.buffer_threshold = 50;
    cfg.k_add = 3;
    cfg.overlap_distance_mode = OverlapDistance::Angular;
    RegionSet set(5, cfg);
    for (int i = 0; i < 4; ++i) set.add(oracle::random_unit(rng, 5), 0.1 * i, static_cast<std::uint64_t>(i * 7), Phase::Setup);
    set.replace(apply_update(set.at(1), oracle::random_unit(rng, 5), cfg));
    for (int i = 0; i < 3; ++i) buffer_add(set, oracle::random_unit(rng, 5));
    const auto bytes = snapshot(set);
    const auto back = restore(bytes);
    EXPECT_EQ(snapshot(back), bytes);
    ASSERT_EQ(back.size(), set.size());
    for (std::size_t k = 0; k < set.size(); ++k) {
        EXPECT_EQ(back.at(k).id, set.at(k).id);
        EXPECT_TRUE(back.at(k).center == set.at(k).center);
        EXPECT_EQ(back.at(k).radius, set.at(k).radius);
        EXPECT_EQ(back.at(k).edit_count, set.at(k).edit_count);
        EXPECT_EQ(back.at(k).member_count, set.at(k).member_count);
    }
    ASSERT_EQ(back.buffer().size(), 3u);
    EXPECT_TRUE(back.buffer()[2] == set.buffer()[2]);
    EXPECT_EQ(back.config().tau, 0.37);
    EXPECT_EQ(back.config().k_add, 3u);
    EXPECT_EQ(back.next_id(), set.next_id());
}

TEST(Snapshot, CorruptionRejected) {
    RegionSet set(2, EditConfig{});
    set.add(unit({1, 0}), 0.2, 3, Phase::Setup);
    const auto bytes = snapshot(set);
    for (std::size_t cut : {std::size_t{0}, std::size_t{3}, bytes.size() / 2, bytes.size() - 1}) {
        std::vector<std::uint8_t> truncated(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
        EXPECT_RAIE_ERROR(restore(truncated), ErrorCode::CorruptSnapshot);
    }
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        auto flipped = bytes;
        flipped[i] ^= 0x10;
        EXPECT_RAIE_ERROR(restore(flipped), ErrorCode::CorruptSnapshot);
    }
    EXPECT_RAIE_ERROR(restore(bytes, 3), ErrorCode::DimensionMismatch);
}

TEST(Snapshot, GoldenFileStillReadable) {
    const std::filesystem::path golden = std::filesystem::path(RAIE_GOLDEN_DIR) / "regions_v1.bin";
    const auto set = load_snapshot(golden);
    ASSERT_EQ(set.size(), 2u);
    EXPECT_EQ(set.dim(), 3);
    EXPECT_EQ(to_underlying(set.at(1).id), 1u);
    EXPECT_NEAR(set.at(0).center[0], 1.0, 0.0);
    EXPECT_EQ(set.at(1).radius, 0.25);
    EXPECT_EQ(set.at(1).created_at, Phase::Finetune);
    EXPECT_EQ(set.buffer().size(), 1u);
    EXPECT_EQ(set.config().buffer_threshold, 16u);
    EXPECT_EQ(io::read_file(golden), snapshot(set));
}

TEST(RegionStore, ReadersKeepTheirVersion) {
    RegionSet a(2, EditConfig{});
    a.add(unit({1, 0}), 0.1, 1, Phase::Setup);
    RegionStore store(a);
    auto held = store.current();
    RegionSet b = a;
    b.add(unit({0, 1}), 0.1, 1, Phase::Finetune);
    std::jthread writer([&] { store.publish(b); });
    writer.join();
    EXPECT_EQ(held->size(), 1u);
    EXPECT_EQ(store.current()->size(), 2u);
    EXPECT_EQ(store.version(), 1u);
}

TEST(Determinism, BuildRegionsBitIdentical) {
    std::mt19937_64 rng(123);
    std::vector<UnitVector> pts;
    for (int i = 0; i < 60; ++i) pts.push_back(oracle::random_unit(rng, 6));
    EXPECT_EQ(snapshot(build_regions(pts, 4, EditConfig{}, 9)), snapshot(build_regions(pts, 4, EditConfig{}, 9)));
}

TEST(EditConfig, Validation) {
    EditConfig c;
    c.buffer_threshold = 1;
    c.k_add = 2;
    EXPECT_RAIE_ERROR(c.validate(), ErrorCode::InvalidConfig);
    EditConfig d;
    d.r_max = 4.0;
    EXPECT_RAIE_ERROR(d.validate(), ErrorCode::InvalidConfig);
    EditConfig e;
    e.alpha_expand = 1.0;
    EXPECT_RAIE_ERROR(e.validate(), ErrorCode::InvalidConfig);
}
