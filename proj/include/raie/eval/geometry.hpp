#ifndef RAIE_EVAL_GEOMETRY_HPP
#define RAIE_EVAL_GEOMETRY_HPP

#include <raie/region/region_set.hpp>

#include <cmath>
#include <iomanip>
#include <optional>
#include <ostream>
#include <vector>

namespace raie {

// The three quantities below are defined by this library:
//   displacement   acos(c_pre . c_post)
//   area change    100 (R_post^2 - R_pre^2) / R_pre^2, a tangent-plane area proxy
//   separability   mean over pairs of acos(c_i . c_j) - R_i - R_j

struct GeometryRow {
    RegionId id{};
    bool added = false;                    ///< present only after editing
    std::optional<double> displacement;    ///< radians
    std::optional<double> area_change_pct; ///< absent for added regions or R_pre = 0
    std::optional<double> separability_pre;
    std::optional<double> separability_post;
};

struct GeometryReport {
    std::vector<GeometryRow> rows;
    std::optional<double> separability_pre;
    std::optional<double> separability_post;
};

inline double pair_separability(const Region& a, const Region& b) {
    return angular_distance(a.center, b.center) - a.radius - b.radius;
}

/// Mean pairwise separability of the whole set; absent with fewer than two regions.
inline std::optional<double> separability(const RegionSet& set) {
    const auto& rs = set.regions();
    if (rs.size() < 2) return std::nullopt;
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < rs.size(); ++i)
        for (std::size_t j = i + 1; j < rs.size(); ++j, ++pairs) sum += pair_separability(rs[i], rs[j]);
    return sum / static_cast<double>(pairs);
}

/// Mean separability of one region against all others in its set.
inline std::optional<double> separability_of(const RegionSet& set, std::size_t index) {
    const auto& rs = set.regions();
    if (rs.size() < 2) return std::nullopt;
    double sum = 0.0;
    for (std::size_t j = 0; j < rs.size(); ++j)
        if (j != index) sum += pair_separability(rs[index], rs[j]);
    return sum / static_cast<double>(rs.size() - 1);
}

inline GeometryReport region_geometry_report(const RegionSet& pre, const RegionSet& post) {
    GeometryReport rep;
    rep.separability_pre = separability(pre);
    rep.separability_post = separability(post);
    for (std::size_t i = 0; i < post.size(); ++i) {
        const auto& r = post.at(i);
        GeometryRow row;
        row.id = r.id;
        row.separability_post = separability_of(post, i);
        if (const auto pi = pre.index_of(r.id)) {
            const auto& before = pre.at(*pi);
            row.displacement = angular_distance(before.center, r.center);
            if (before.radius > 0.0)
                row.area_change_pct = 100.0 * (r.radius * r.radius - before.radius * before.radius) /
                                      (before.radius * before.radius);
            row.separability_pre = separability_of(pre, *pi);
        } else {
            row.added = true;
        }
        rep.rows.push_back(row);
    }
    return rep;
}

/// Tab-separated rows for plotting: id, status, displacement, area change %, S_pre, S_post.
inline void write_geometry_tsv(std::ostream& out, const GeometryReport& rep) {
    auto cell = [&](const std::optional<double>& v, const char* missing) {
        if (v) out << std::setprecision(10) << *v;
        else out << missing;
    };
    out << "region\tstatus\tdelta\tdelta_area_pct\ts_pre\ts_post\n";
    for (const auto& r : rep.rows) {
        out << to_underlying(r.id) << '\t' << (r.added ? "added" : "kept") << '\t';
        cell(r.displacement, "new");
        out << '\t';
        cell(r.area_change_pct, "new");
        out << '\t';
        cell(r.separability_pre, "na");
        out << '\t';
        cell(r.separability_post, "na");
        out << '\n';
    }
}

}  // namespace raie

#endif  // RAIE_EVAL_GEOMETRY_HPP
