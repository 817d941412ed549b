#ifndef RAIE_DATA_EVENTS_HPP
#define RAIE_DATA_EVENTS_HPP

#include <raie/error.hpp>

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace raie {

struct InteractionEvent {
    std::string user;
    std::string item;
    double rating = 0.0;
    std::int64_t timestamp = 0;

    friend bool operator==(const InteractionEvent&, const InteractionEvent&) = default;
};

enum class LogFormat { MovieLensDat, GenericTsv };

inline LogFormat parse_log_format(std::string_view name) {
    if (name == "movielens" || name == "MovieLensDat" || name == "dat") return LogFormat::MovieLensDat;
    if (name == "tsv" || name == "GenericTsv") return LogFormat::GenericTsv;
    throw Error(ErrorCode::UnknownFormat, "unknown log format '" + std::string(name) + "'");
}

struct IngestResult {
    std::vector<InteractionEvent> events;
    std::size_t lines = 0;    ///< non-blank lines seen (header excluded)
    std::size_t skipped = 0;  ///< malformed lines
};

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, std::string_view delim) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            parts.push_back(line.substr(start));
            return parts;
        }
        parts.push_back(line.substr(start, pos - start));
        start = pos + delim.size();
    }
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\r' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

inline std::optional<double> parse_double(std::string_view s) {
    s = trim(s);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

inline std::optional<std::int64_t> parse_int(std::string_view s) {
    s = trim(s);
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

inline std::optional<InteractionEvent> parse_event(std::string_view line, LogFormat format) {
    const auto parts = format == LogFormat::MovieLensDat ? split(line, "::") : split(line, "\t");
    if (parts.size() != 4) return std::nullopt;
    const auto user = trim(parts[0]);
    const auto item = trim(parts[1]);
    const auto rating = parse_double(parts[2]);
    const auto ts = parse_int(parts[3]);
    if (user.empty() || item.empty() || !rating || !ts || *ts < 0) return std::nullopt;
    return InteractionEvent{std::string(user), std::string(item), *rating, *ts};
}

}  // namespace detail

/// Parses an interaction log. Malformed lines are skipped and counted; a GenericTsv
/// first line that does not parse is treated as a header.
inline IngestResult ingest(std::istream& in, LogFormat format) {
    IngestResult result;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        const auto body = detail::trim(line);
        if (body.empty()) continue;
        const bool is_first = std::exchange(first, false);
        auto ev = detail::parse_event(line, format);
        if (!ev && is_first && format == LogFormat::GenericTsv) continue;
        ++result.lines;
        if (!ev) {
            ++result.skipped;
            continue;
        }
        result.events.push_back(std::move(*ev));
    }
    return result;
}

inline IngestResult ingest(const std::filesystem::path& path, LogFormat format) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::UnreadableInput, "cannot read " + path.string());
    return ingest(in, format);
}

/// Keeps events rated at or above `threshold`.
inline std::vector<InteractionEvent> binarize(std::vector<InteractionEvent> events, double threshold = 4.0) {
    std::erase_if(events, [&](const InteractionEvent& e) { return e.rating < threshold; });
    return events;
}

/// Repeatedly drops users and items with fewer than k interactions until every
/// survivor has at least k. Duplicate events each count as an interaction.
inline std::vector<InteractionEvent> k_core_filter(std::vector<InteractionEvent> events, std::size_t k) {
    if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
    while (true) {
        std::unordered_map<std::string, std::size_t> user_deg, item_deg;
        for (const auto& e : events) {
            ++user_deg[e.user];
            ++item_deg[e.item];
        }
        const auto before = events.size();
        std::erase_if(events, [&](const InteractionEvent& e) { return user_deg[e.user] < k || item_deg[e.item] < k; });
        if (events.size() == before) return events;
    }
}

}  // namespace raie

#endif  // RAIE_DATA_EVENTS_HPP
