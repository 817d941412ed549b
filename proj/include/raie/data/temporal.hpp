#ifndef RAIE_DATA_TEMPORAL_HPP
#define RAIE_DATA_TEMPORAL_HPP

#include <raie/data/events.hpp>
#include <raie/error.hpp>
#include <raie/quantile.hpp>

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace raie {

enum class Split : std::uint8_t { Setup, Finetune, Test };

constexpr char split_code(Split s) {
    switch (s) {
    case Split::Setup: return 'S';
    case Split::Finetune: return 'F';
    case Split::Test: return 'T';
    }
    return '?';
}

inline Split parse_split(std::string_view s) {
    if (s == "S") return Split::Setup;
    if (s == "F") return Split::Finetune;
    if (s == "T") return Split::Test;
    throw Error(ErrorCode::InvalidArgument, "unknown split '" + std::string(s) + "'");
}

/// Half-open phases: S is t < t_S, F is t_S <= t < t_F, T is t >= t_F.
struct TemporalSplit {
    std::int64_t t_s = 0;
    std::int64_t t_f = 0;
    double q_s = 0.5;
    double q_f = 0.8;

    Split classify(std::int64_t t) const {
        if (t < t_s) return Split::Setup;
        if (t < t_f) return Split::Finetune;
        return Split::Test;
    }
};

struct SplitResult {
    TemporalSplit split;
    std::vector<Split> tags;  ///< one per input event
};

/// Cutoffs are nearest-rank quantiles of the global timestamp multiset.
inline SplitResult temporal_split(const std::vector<InteractionEvent>& events, double q_s = 0.5, double q_f = 0.8) {
    if (events.empty()) throw Error(ErrorCode::EmptyEvents, "no events to split");
    if (!(q_s > 0.0 && q_s < q_f && q_f <= 1.0)) throw Error(ErrorCode::InvalidArgument, "need 0 < q_S < q_F <= 1");
    std::vector<std::int64_t> ts;
    ts.reserve(events.size());
    for (const auto& e : events) ts.push_back(e.timestamp);
    std::sort(ts.begin(), ts.end());
    SplitResult r;
    r.split = {ts[nearest_rank_index(q_s, ts.size())], ts[nearest_rank_index(q_f, ts.size())], q_s, q_f};
    r.tags.reserve(events.size());
    for (const auto& e : events) r.tags.push_back(r.split.classify(e.timestamp));
    return r;
}

struct WindowExample {
    std::string user;
    Split phase = Split::Setup;
    std::vector<std::string> context;  ///< chronological
    std::string target;
    std::int64_t target_timestamp = 0;
    /// Indices into the event list the example was cut from (empty when read from file).
    std::vector<std::size_t> context_events;
    std::size_t target_event = 0;
};

/// Right-aligned sliding windows per user and phase. Windows end at the newest event of
/// the segment and step back by `stride`; each context is the up to `window_length`
/// most recent same-segment events strictly earlier than the target. Examples are
/// returned in target-time order (stable).
inline std::vector<WindowExample> segment_windows(const std::vector<InteractionEvent>& events,
                                                  const std::vector<Split>& tags, std::size_t window_length,
                                                  std::size_t stride) {
    if (window_length == 0 || stride == 0) throw Error(ErrorCode::InvalidArgument, "window length and stride must be >= 1");
    if (tags.size() != events.size()) throw Error(ErrorCode::LengthMismatch, "one tag per event required");

    std::vector<std::string> user_order;
    std::unordered_map<std::string, std::array<std::vector<std::size_t>, 3>> segments;
    for (std::size_t i = 0; i < events.size(); ++i) {
        auto [it, inserted] = segments.try_emplace(events[i].user);
        if (inserted) user_order.push_back(events[i].user);
        it->second[static_cast<std::size_t>(tags[i])].push_back(i);
    }

    std::vector<WindowExample> out;
    for (const auto& user : user_order) {
        for (std::size_t p = 0; p < 3; ++p) {
            auto seg = segments[user][p];
            std::stable_sort(seg.begin(), seg.end(),
                             [&](std::size_t a, std::size_t b) { return events[a].timestamp < events[b].timestamp; });
            if (seg.size() < 2) continue;
            std::vector<WindowExample> per_segment;
            for (std::size_t j = seg.size() - 1; j >= 1; j = j >= stride ? j - stride : 0) {
                const auto& target = events[seg[j]];
                WindowExample ex;
                ex.user = user;
                ex.phase = static_cast<Split>(p);
                ex.target = target.item;
                ex.target_timestamp = target.timestamp;
                ex.target_event = seg[j];
                std::size_t i = j;
                while (i > 0 && ex.context_events.size() < window_length) {
                    --i;
                    if (events[seg[i]].timestamp < target.timestamp) ex.context_events.push_back(seg[i]);
                }
                std::reverse(ex.context_events.begin(), ex.context_events.end());
                for (auto c : ex.context_events) ex.context.push_back(events[c].item);
                if (!ex.context.empty()) per_segment.push_back(std::move(ex));
                if (j < stride) break;
            }
            std::reverse(per_segment.begin(), per_segment.end());
            for (auto& ex : per_segment) out.push_back(std::move(ex));
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const WindowExample& a, const WindowExample& b) {
        return a.target_timestamp < b.target_timestamp;
    });
    return out;
}

/// One example per line: user, phase code, comma-joined context, target (tab-separated).
inline void write_examples(std::ostream& out, const std::vector<WindowExample>& examples) {
    for (const auto& ex : examples) {
        out << ex.user << '\t' << split_code(ex.phase) << '\t';
        for (std::size_t i = 0; i < ex.context.size(); ++i) out << (i ? "," : "") << ex.context[i];
        out << '\t' << ex.target << '\n';
    }
}

/// Reads an example file; file order stands in for target time.
inline std::vector<WindowExample> read_examples(std::istream& in) {
    std::vector<WindowExample> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        const auto parts = detail::split(line, "\t");
        if (parts.size() != 4)
            throw Error(ErrorCode::InvalidArgument, "example line " + std::to_string(lineno) + " needs 4 fields");
        WindowExample ex;
        ex.user = std::string(detail::trim(parts[0]));
        ex.phase = parse_split(detail::trim(parts[1]));
        for (auto item : detail::split(parts[2], ","))
            if (!detail::trim(item).empty()) ex.context.emplace_back(detail::trim(item));
        ex.target = std::string(detail::trim(parts[3]));
        ex.target_timestamp = static_cast<std::int64_t>(out.size());
        if (ex.context.empty() || ex.target.empty())
            throw Error(ErrorCode::InvalidArgument, "example line " + std::to_string(lineno) + " is empty");
        out.push_back(std::move(ex));
    }
    return out;
}

inline std::vector<WindowExample> read_examples(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::UnreadableInput, "cannot read " + path.string());
    return read_examples(in);
}

struct StageStats {
    std::size_t users = 0;
    std::size_t items = 0;
    std::size_t interactions = 0;
};

inline StageStats stage_stats(const std::vector<InteractionEvent>& events, const std::vector<Split>* tags = nullptr,
                              Split only = Split::Setup) {
    std::set<std::string> users, items;
    StageStats s;
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (tags && (*tags)[i] != only) continue;
        users.insert(events[i].user);
        items.insert(events[i].item);
        ++s.interactions;
    }
    s.users = users.size();
    s.items = items.size();
    return s;
}

}  // namespace raie

#endif  // RAIE_DATA_TEMPORAL_HPP
