#ifndef RAIE_MODEL_CHECKPOINT_HPP
#define RAIE_MODEL_CHECKPOINT_HPP

#include <raie/binary_io.hpp>
#include <raie/model/adapter.hpp>
#include <raie/model/backbone.hpp>

#include <filesystem>
#include <vector>

namespace raie {

inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline void put_matrix(io::ByteWriter& w, const Matrix& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) w.put_f64(m.data()[i]);  // row-major storage
}

inline Matrix get_matrix(io::ByteReader& r, Eigen::Index rows, Eigen::Index cols) {
    if (static_cast<std::size_t>(rows * cols) * 8 > r.remaining()) io::ByteReader::fail("truncated matrix");
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = r.get_f64();
    return m;
}

}  // namespace detail

// "RALO", version u32, region id u64, r u32, d u32, scale f64, A (r x d) then B (d x r)
// row-major f64, CRC32.
inline std::vector<std::uint8_t> serialize(const LowRankAdapter& a) {
    io::ByteWriter w;
    w.put_magic("RALO");
    w.put_u32(kCheckpointVersion);
    w.put_u64(to_underlying(a.owner));
    w.put_u32(static_cast<std::uint32_t>(a.rank()));
    w.put_u32(static_cast<std::uint32_t>(a.dim()));
    w.put_f64(a.scale);
    detail::put_matrix(w, a.A);
    detail::put_matrix(w, a.B);
    w.seal();
    return w.take();
}

/// Dropout is a training-time setting and is not stored; the caller supplies it.
inline LowRankAdapter deserialize_adapter(std::span<const std::uint8_t> bytes, double dropout = 0.05) {
    io::ByteReader r(bytes);
    r.verify_checksum();
    r.expect_magic("RALO");
    if (r.get_u32() != kCheckpointVersion) io::ByteReader::fail("unsupported adapter version");
    LowRankAdapter a;
    a.owner = RegionId{r.get_u64()};
    const auto rank = static_cast<Eigen::Index>(r.get_u32());
    const auto dim = static_cast<Eigen::Index>(r.get_u32());
    if (rank == 0 || dim == 0) io::ByteReader::fail("empty adapter shape");
    a.scale = r.get_f64();
    a.A = detail::get_matrix(r, rank, dim);
    a.B = detail::get_matrix(r, dim, rank);
    a.dropout_rate = dropout;
    r.expect_end();
    return a;
}

// "RABB", version u32, |V| u32, d u32, rho f64, padding u8, frozen u8, E (|V| x d),
// W_enc (d x d), W_out (d x d) row-major f64, CRC32.
inline std::vector<std::uint8_t> serialize(const Backbone& b) {
    io::ByteWriter w;
    w.put_magic("RABB");
    w.put_u32(kCheckpointVersion);
    w.put_u32(static_cast<std::uint32_t>(b.vocab_size()));
    w.put_u32(static_cast<std::uint32_t>(b.dim()));
    w.put_f64(b.recency_decay);
    w.put_u8(b.padding ? 1 : 0);
    w.put_u8(b.frozen ? 1 : 0);
    detail::put_matrix(w, b.item_embeddings);
    detail::put_matrix(w, b.enc_projection);
    detail::put_matrix(w, b.out_projection);
    w.seal();
    return w.take();
}

inline Backbone deserialize_backbone(std::span<const std::uint8_t> bytes) {
    io::ByteReader r(bytes);
    r.verify_checksum();
    r.expect_magic("RABB");
    if (r.get_u32() != kCheckpointVersion) io::ByteReader::fail("unsupported backbone version");
    Backbone b;
    const auto rows = static_cast<Eigen::Index>(r.get_u32());
    const auto dim = static_cast<Eigen::Index>(r.get_u32());
    if (rows == 0 || dim == 0) io::ByteReader::fail("empty backbone shape");
    b.recency_decay = r.get_f64();
    b.padding = r.get_u8() != 0;
    b.frozen = r.get_u8() != 0;
    b.item_embeddings = detail::get_matrix(r, rows, dim);
    b.enc_projection = detail::get_matrix(r, dim, dim);
    b.out_projection = detail::get_matrix(r, dim, dim);
    r.expect_end();
    return b;
}

namespace detail {

// The sealed trailer must be left out: a CRC over data plus its own CRC is a constant.
inline std::uint32_t payload_crc(std::span<const std::uint8_t> sealed) { return io::crc32(sealed.first(sealed.size() - 4)); }

}  // namespace detail

/// CRC32 of the serialized parameters; equal checksums mean bit-identical parameters.
inline std::uint32_t checksum(const Backbone& b) { return detail::payload_crc(serialize(b)); }
inline std::uint32_t checksum(const LowRankAdapter& a) { return detail::payload_crc(serialize(a)); }

inline std::uint32_t checksum(const AdapterRegistry& reg) {
    io::ByteWriter w;
    for (const auto& [id, a] : reg) {
        w.put_u64(to_underlying(id));
        w.put_u32(checksum(a));
    }
    return io::crc32(w.bytes());
}

inline void save_adapter(const LowRankAdapter& a, const std::filesystem::path& p) { io::write_file(p, serialize(a)); }
inline LowRankAdapter load_adapter(const std::filesystem::path& p, double dropout = 0.05) {
    return deserialize_adapter(io::read_file(p), dropout);
}
inline void save_backbone(const Backbone& b, const std::filesystem::path& p) { io::write_file(p, serialize(b)); }
inline Backbone load_backbone(const std::filesystem::path& p) { return deserialize_backbone(io::read_file(p)); }

}  // namespace raie

#endif  // RAIE_MODEL_CHECKPOINT_HPP
