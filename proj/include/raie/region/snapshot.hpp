#ifndef RAIE_REGION_SNAPSHOT_HPP
#define RAIE_REGION_SNAPSHOT_HPP

#include <raie/binary_io.hpp>
#include <raie/region/region_set.hpp>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace raie {

inline constexpr std::uint32_t kSnapshotVersion = 1;

// Layout (little-endian): "RAIE", version u32, dim u32, K u32; per region id u64,
// center dim x f64, radius f64, member_count u64, edit_count u64, created_phase u8;
// buffer count u32 and dim x f64 per pending vector; the 12 EditConfig fields in
// declaration order; CRC32 of everything before it.
inline std::vector<std::uint8_t> snapshot(const RegionSet& set) {
    io::ByteWriter w;
    w.put_magic("RAIE");
    w.put_u32(kSnapshotVersion);
    w.put_u32(static_cast<std::uint32_t>(set.dim()));
    w.put_u32(static_cast<std::uint32_t>(set.size()));
    for (const auto& r : set.regions()) {
        w.put_u64(to_underlying(r.id));
        for (Eigen::Index i = 0; i < set.dim(); ++i) w.put_f64(r.center[i]);
        w.put_f64(r.radius);
        w.put_u64(r.member_count);
        w.put_u64(r.edit_count);
        w.put_u8(static_cast<std::uint8_t>(r.created_at));
    }
    w.put_u32(static_cast<std::uint32_t>(set.buffer().size()));
    for (const auto& v : set.buffer())
        for (Eigen::Index i = 0; i < set.dim(); ++i) w.put_f64(v[i]);
    const auto& c = set.config();
    w.put_f64(c.tau);
    w.put_f64(c.delta_min);
    w.put_f64(c.beta);
    w.put_f64(c.gamma);
    w.put_f64(c.lambda_expand);
    w.put_f64(c.alpha_expand);
    w.put_f64(c.r_max);
    w.put_f64(c.radius_quantile);
    w.put_u32(c.buffer_threshold);
    w.put_u32(c.k_add);
    w.put_f64(c.lambda_sep);
    w.put_u32(static_cast<std::uint32_t>(c.overlap_distance_mode));
    w.seal();
    return w.take();
}

namespace detail {

inline UnitVector read_unit(io::ByteReader& r, std::uint32_t dim) {
    Vector v(dim);
    for (std::uint32_t i = 0; i < dim; ++i) v[i] = r.get_f64();
    try {
        return UnitVector::from_unit(v);
    } catch (const Error&) {
        io::ByteReader::fail("stored vector is not unit-norm");
    }
}

}  // namespace detail

/// Inverse of snapshot(). When `expected_dim` is nonzero the stored dimension must match.
inline RegionSet restore(std::span<const std::uint8_t> bytes, std::uint32_t expected_dim = 0) {
    io::ByteReader r(bytes);
    r.verify_checksum();
    r.expect_magic("RAIE");
    if (r.get_u32() != kSnapshotVersion) io::ByteReader::fail("unsupported snapshot version");
    const std::uint32_t dim = r.get_u32();
    if (dim == 0) io::ByteReader::fail("zero dimension");
    if (expected_dim != 0 && dim != expected_dim)
        throw Error(ErrorCode::DimensionMismatch, "snapshot dimension differs from expected");
    const std::uint32_t k = r.get_u32();

    std::vector<Region> regions;
    for (std::uint32_t i = 0; i < k; ++i) {
        const RegionId id{r.get_u64()};
        auto center = detail::read_unit(r, dim);
        const double radius = r.get_f64();
        const std::uint64_t members = r.get_u64();
        const std::uint64_t edits = r.get_u64();
        const std::uint8_t phase = r.get_u8();
        if (phase > 1) io::ByteReader::fail("bad phase tag");
        regions.push_back(Region{id, std::move(center), radius, members, static_cast<Phase>(phase), edits});
    }
    std::vector<UnitVector> pending;
    const std::uint32_t nbuf = r.get_u32();
    for (std::uint32_t i = 0; i < nbuf; ++i) pending.push_back(detail::read_unit(r, dim));

    EditConfig c;
    c.tau = r.get_f64();
    c.delta_min = r.get_f64();
    c.beta = r.get_f64();
    c.gamma = r.get_f64();
    c.lambda_expand = r.get_f64();
    c.alpha_expand = r.get_f64();
    c.r_max = r.get_f64();
    c.radius_quantile = r.get_f64();
    c.buffer_threshold = r.get_u32();
    c.k_add = r.get_u32();
    c.lambda_sep = r.get_f64();
    const std::uint32_t mode = r.get_u32();
    if (mode > 1) io::ByteReader::fail("bad overlap mode");
    c.overlap_distance_mode = static_cast<OverlapDistance>(mode);
    r.expect_end();

    try {
        c.validate();
    } catch (const Error& e) {
        io::ByteReader::fail(std::string("invalid stored config: ") + e.what());
    }
    RegionSet set(dim, c);
    for (auto& reg : regions) {
        if (!(reg.radius >= 0.0 && reg.radius <= c.r_max)) io::ByteReader::fail("radius out of range");
        set.insert(std::move(reg));
    }
    for (auto& v : pending) set.push_buffer(std::move(v));
    return set;
}

inline void save_snapshot(const RegionSet& set, const std::filesystem::path& path) {
    io::write_file(path, snapshot(set));
}

inline RegionSet load_snapshot(const std::filesystem::path& path, std::uint32_t expected_dim = 0) {
    return restore(io::read_file(path), expected_dim);
}

}  // namespace raie

#endif  // RAIE_REGION_SNAPSHOT_HPP
