#ifndef RAIE_SIM_DRIFT_HPP
#define RAIE_SIM_DRIFT_HPP

#include <raie/data/events.hpp>
#include <raie/data/temporal.hpp>
#include <raie/error.hpp>
#include <raie/quantile.hpp>
#include <raie/region/unit_vector.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace raie::sim {

enum class DriftKind { Step, Ramp, Spike };

/// A synthetic population whose interest mixture changes over time. Each interest owns a
/// disjoint pool of items; within a session a user walks its interest's pool in cyclic
/// order with steps drawn from 1..transition_spread.
struct DriftScenario {
    std::size_t num_interests = 3;
    std::size_t items_per_interest = 20;
    std::size_t num_users = 100;
    std::size_t events_per_user = 40;
    std::size_t session_length = 10;
    std::size_t transition_spread = 3;
    double noise_level = 0.0;  ///< probability that an event is a uniformly random item
    double q_s = 0.5;
    double q_f = 0.8;
    DriftKind kind = DriftKind::Step;
    std::vector<double> setup_mixture;     ///< before q_s (Step), ramp start, or spike baseline
    std::vector<double> finetune_mixture;  ///< q_s..q_f (Step)
    std::vector<double> test_mixture;      ///< after q_f (Step), ramp end
    double spike_start = 0.6;              ///< timeline fractions of the spike
    double spike_end = 0.7;
    std::vector<double> spike_mixture;
    std::size_t latent_dim = 8;
    std::uint64_t seed = 0;

    std::size_t total_events() const { return num_users * events_per_user; }
    std::size_t item_count() const { return num_interests * items_per_interest; }

    void validate() const {
        auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidScenario, m); };
        if (num_interests == 0) fail("num_interests must be >= 1");
        if (items_per_interest == 0 || num_users == 0 || events_per_user == 0 || session_length == 0)
            fail("sizes must be positive");
        if (transition_spread == 0 || transition_spread > items_per_interest)
            fail("transition_spread must lie in [1, items_per_interest]");
        if (!(noise_level >= 0.0 && noise_level <= 1.0)) fail("noise_level must lie in [0,1]");
        if (!(q_s > 0.0 && q_s < q_f && q_f <= 1.0)) fail("need 0 < q_s < q_f <= 1");
        if (latent_dim == 0) fail("latent_dim must be positive");
        auto check = [&](const std::vector<double>& m, const char* name, bool required) {
            if (m.empty() && !required) return;
            if (m.size() != num_interests) fail(std::string(name) + " needs one weight per interest");
            double s = 0.0;
            for (double w : m) {
                if (!(w >= 0.0)) fail(std::string(name) + " has a negative weight");
                s += w;
            }
            if (std::abs(s - 1.0) > 1e-9) fail(std::string(name) + " must sum to 1");
        };
        check(setup_mixture, "setup_mixture", true);
        check(finetune_mixture, "finetune_mixture", kind == DriftKind::Step);
        check(test_mixture, "test_mixture", kind != DriftKind::Spike);
        if (kind == DriftKind::Spike) {
            check(spike_mixture, "spike_mixture", true);
            if (!(spike_start >= 0.0 && spike_start < spike_end && spike_end <= 1.0)) fail("bad spike interval");
        }
    }

    /// Boundary slots: events at slot < first are S, < second are F, the rest T.
    std::pair<std::size_t, std::size_t> phase_boundaries() const {
        const std::size_t n = total_events();
        return {nearest_rank_index(q_s, n), nearest_rank_index(q_f, n)};
    }

    /// Mixture in force at timeline slot `t`.
    std::vector<double> mixture_at(std::size_t t) const {
        const auto [bs, bf] = phase_boundaries();
        const double frac = static_cast<double>(t) / static_cast<double>(std::max<std::size_t>(total_events(), 1));
        switch (kind) {
        case DriftKind::Step:
            if (t < bs) return setup_mixture;
            if (t < bf) return finetune_mixture;
            return test_mixture.empty() ? finetune_mixture : test_mixture;
        case DriftKind::Ramp: {
            if (t < bs) return setup_mixture;
            if (t >= bf) return test_mixture;
            const double w = static_cast<double>(t - bs) / static_cast<double>(std::max<std::size_t>(bf - bs, 1));
            std::vector<double> m(num_interests);
            for (std::size_t g = 0; g < num_interests; ++g) m[g] = (1 - w) * setup_mixture[g] + w * test_mixture[g];
            return m;
        }
        case DriftKind::Spike:
            return (frac >= spike_start && frac < spike_end) ? spike_mixture : setup_mixture;
        }
        return setup_mixture;
    }

    std::string item_id(std::size_t interest, std::size_t pos) const {
        return std::to_string(interest * items_per_interest + pos + 1);
    }
    std::size_t interest_of_item(std::size_t item_number) const { return (item_number - 1) / items_per_interest; }
};

struct DriftStream {
    std::vector<InteractionEvent> events;
    std::vector<std::size_t> labels;  ///< interest per event
};

/// Deterministic per seed. Users are interleaved on a shared timeline (timestamp = slot);
/// sessions restart at phase boundaries so a step change is clean.
inline DriftStream generate_stream(const DriftScenario& sc) {
    sc.validate();
    std::mt19937_64 rng(sc.seed);
    const std::size_t n = sc.total_events();
    std::vector<std::size_t> owner;
    owner.reserve(n);
    for (std::size_t u = 0; u < sc.num_users; ++u)
        for (std::size_t e = 0; e < sc.events_per_user; ++e) owner.push_back(u);
    std::shuffle(owner.begin(), owner.end(), rng);

    struct UserState {
        std::size_t interest = 0;
        std::size_t remaining = 0;
        std::size_t pos = 0;
        bool started = false;
        int phase = -1;
    };
    std::vector<UserState> users(sc.num_users);
    const auto [bs, bf] = sc.phase_boundaries();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> any_item(0, sc.item_count() - 1);
    std::uniform_int_distribution<std::size_t> in_pool(0, sc.items_per_interest - 1);
    std::uniform_int_distribution<std::size_t> step(1, sc.transition_spread);

    DriftStream out;
    out.events.reserve(n);
    out.labels.reserve(n);
    for (std::size_t t = 0; t < n; ++t) {
        auto& st = users[owner[t]];
        const int phase = t < bs ? 0 : (t < bf ? 1 : 2);
        if (st.remaining == 0 || st.phase != phase) {
            const auto mix = sc.mixture_at(t);
            std::discrete_distribution<std::size_t> pick(mix.begin(), mix.end());
            st.interest = pick(rng);
            st.remaining = sc.session_length;
            st.started = false;
            st.phase = phase;
        }
        std::size_t interest = st.interest;
        std::size_t pos;
        if (sc.noise_level > 0.0 && unit(rng) < sc.noise_level) {
            const std::size_t item = any_item(rng);
            interest = item / sc.items_per_interest;
            pos = item % sc.items_per_interest;
        } else {
            st.pos = st.started ? (st.pos + step(rng)) % sc.items_per_interest : in_pool(rng);
            st.started = true;
            pos = st.pos;
        }
        --st.remaining;
        out.events.push_back({std::to_string(owner[t] + 1), sc.item_id(interest, pos), 5.0,
                              static_cast<std::int64_t>(t)});
        out.labels.push_back(interest);
    }
    return out;
}

/// Latent unit direction per interest, mutually orthogonal while num_interests <=
/// latent_dim (Gram-Schmidt over Gaussian draws), plain random directions beyond that.
inline std::vector<UnitVector> interest_directions(const DriftScenario& sc) {
    std::mt19937_64 rng(sc.seed ^ 0x1D1D1D1DULL);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<UnitVector> dirs;
    for (std::size_t g = 0; g < sc.num_interests; ++g) {
        Vector v(static_cast<Eigen::Index>(sc.latent_dim));
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
        if (g < sc.latent_dim)
            for (const auto& d : dirs) v -= v.dot(d.values()) * d.values();
        dirs.push_back(UnitVector::normalize(v));
    }
    return dirs;
}

/// One latent vector per event: its interest direction plus isotropic noise of scale `spread`.
inline std::vector<UnitVector> latent_vectors(const DriftScenario& sc, const std::vector<std::size_t>& labels,
                                              double spread, std::uint64_t seed) {
    const auto dirs = interest_directions(sc);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, spread);
    std::vector<UnitVector> out;
    out.reserve(labels.size());
    for (auto g : labels) {
        Vector v = dirs.at(g).values();
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += normal(rng);
        out.push_back(UnitVector::normalize(v));
    }
    return out;
}

/// Fixed feature vector per item id: its interest direction perturbed by noise of scale
/// `spread`. Stands in for item embeddings from a pretrained encoder.
inline std::map<std::string, Vector> item_latents(const DriftScenario& sc, double spread) {
    const auto dirs = interest_directions(sc);
    std::mt19937_64 rng(sc.seed ^ 0x17E4F00DULL);
    std::normal_distribution<double> normal(0.0, spread);
    std::map<std::string, Vector> out;
    for (std::size_t g = 0; g < sc.num_interests; ++g)
        for (std::size_t p = 0; p < sc.items_per_interest; ++p) {
            Vector v = dirs[g].values();
            for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += normal(rng);
            out.emplace(sc.item_id(g, p), UnitVector::normalize(v).values());
        }
    return out;
}

/// Majority interest among a window's context events; ties go to the most recent event.
inline std::size_t window_label(const WindowExample& ex, const std::vector<std::size_t>& labels) {
    if (ex.context_events.empty()) throw Error(ErrorCode::InvalidArgument, "window carries no event indices");
    std::map<std::size_t, std::size_t> count;
    for (auto e : ex.context_events) ++count[labels.at(e)];
    std::size_t best = labels.at(ex.context_events.back());
    for (const auto& [g, c] : count)
        if (c > count[best]) best = g;
    return best;
}

/// Agreement between predicted cluster ids and true labels under the best one-to-one
/// relabeling (exhaustive over matchings via a bitmask DP; the smaller side must have
/// at most 16 distinct values).
inline double routing_accuracy(const std::vector<std::uint64_t>& assignments, const std::vector<std::size_t>& truth) {
    if (assignments.size() != truth.size()) throw Error(ErrorCode::LengthMismatch, "assignment and label counts differ");
    if (assignments.empty()) return 0.0;
    std::map<std::uint64_t, std::size_t> a_idx;
    std::map<std::size_t, std::size_t> t_idx;
    for (auto a : assignments) a_idx.try_emplace(a, a_idx.size());
    for (auto t : truth) t_idx.try_emplace(t, t_idx.size());
    std::size_t rows = a_idx.size(), cols = t_idx.size();
    std::vector<std::vector<std::size_t>> table(rows, std::vector<std::size_t>(cols, 0));
    for (std::size_t i = 0; i < truth.size(); ++i) ++table[a_idx[assignments[i]]][t_idx[truth[i]]];
    if (cols > rows) {
        std::vector<std::vector<std::size_t>> tr(cols, std::vector<std::size_t>(rows));
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) tr[c][r] = table[r][c];
        table = std::move(tr);
        std::swap(rows, cols);
    }
    if (cols > 16) throw Error(ErrorCode::InvalidArgument, "too many distinct labels for exhaustive matching");
    // best[mask] = max matched count using the processed rows and the columns in mask.
    const std::size_t full = std::size_t{1} << cols;
    std::vector<std::int64_t> best(full, -1);
    best[0] = 0;
    for (std::size_t r = 0; r < rows; ++r) {
        auto next = best;
        for (std::size_t mask = 0; mask < full; ++mask) {
            if (best[mask] < 0) continue;
            for (std::size_t c = 0; c < cols; ++c) {
                if (mask & (std::size_t{1} << c)) continue;
                const auto m2 = mask | (std::size_t{1} << c);
                next[m2] = std::max(next[m2], best[mask] + static_cast<std::int64_t>(table[r][c]));
            }
        }
        best = std::move(next);
    }
    const auto matched = *std::max_element(best.begin(), best.end());
    return static_cast<double>(matched) / static_cast<double>(truth.size());
}

namespace detail {

inline std::vector<double> parse_mixture(const std::string& value) {
    std::vector<double> m;
    for (auto part : raie::detail::split(value, ",")) {
        auto v = raie::detail::parse_double(part);
        if (!v) throw Error(ErrorCode::InvalidScenario, "bad mixture '" + value + "'");
        m.push_back(*v);
    }
    return m;
}

}  // namespace detail

/// Reads "key = value" lines ('#' starts a comment). Unknown keys are errors.
inline DriftScenario parse_scenario(std::istream& in) {
    DriftScenario sc;
    std::string line;
    std::size_t lineno = 0;
    auto as_size = [&](const std::string& v, const std::string& key) {
        auto x = raie::detail::parse_int(v);
        if (!x || *x < 0) throw Error(ErrorCode::InvalidScenario, key + " must be a nonnegative integer");
        return static_cast<std::size_t>(*x);
    };
    auto as_double = [&](const std::string& v, const std::string& key) {
        auto x = raie::detail::parse_double(v);
        if (!x) throw Error(ErrorCode::InvalidScenario, key + " must be a number");
        return *x;
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto body = raie::detail::trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string_view::npos)
            throw Error(ErrorCode::InvalidScenario, "line " + std::to_string(lineno) + ": expected key = value");
        const std::string key(raie::detail::trim(body.substr(0, eq)));
        const std::string value(raie::detail::trim(body.substr(eq + 1)));
        if (key == "num_interests") sc.num_interests = as_size(value, key);
        else if (key == "items_per_interest") sc.items_per_interest = as_size(value, key);
        else if (key == "num_users") sc.num_users = as_size(value, key);
        else if (key == "events_per_user") sc.events_per_user = as_size(value, key);
        else if (key == "session_length") sc.session_length = as_size(value, key);
        else if (key == "transition_spread") sc.transition_spread = as_size(value, key);
        else if (key == "noise_level") sc.noise_level = as_double(value, key);
        else if (key == "q_s") sc.q_s = as_double(value, key);
        else if (key == "q_f") sc.q_f = as_double(value, key);
        else if (key == "drift") {
            if (value == "step") sc.kind = DriftKind::Step;
            else if (value == "ramp") sc.kind = DriftKind::Ramp;
            else if (value == "spike") sc.kind = DriftKind::Spike;
            else throw Error(ErrorCode::InvalidScenario, "drift must be step, ramp or spike");
        }
        else if (key == "setup_mixture") sc.setup_mixture = detail::parse_mixture(value);
        else if (key == "finetune_mixture") sc.finetune_mixture = detail::parse_mixture(value);
        else if (key == "test_mixture") sc.test_mixture = detail::parse_mixture(value);
        else if (key == "spike_mixture") sc.spike_mixture = detail::parse_mixture(value);
        else if (key == "spike_start") sc.spike_start = as_double(value, key);
        else if (key == "spike_end") sc.spike_end = as_double(value, key);
        else if (key == "latent_dim") sc.latent_dim = as_size(value, key);
        else if (key == "seed") sc.seed = as_size(value, key);
        else throw Error(ErrorCode::InvalidScenario, "unknown scenario key '" + key + "'");
    }
    sc.validate();
    return sc;
}

inline DriftScenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::UnreadableInput, "cannot read " + path.string());
    return parse_scenario(in);
}

/// GenericTsv event log plus a parallel file with one interest label per line.
inline void write_stream(const DriftStream& s, std::ostream& events, std::ostream& labels) {
    events << "user\titem\trating\ttimestamp\n";
    for (const auto& e : s.events) events << e.user << '\t' << e.item << '\t' << e.rating << '\t' << e.timestamp << '\n';
    for (auto l : s.labels) labels << l << '\n';
}

}  // namespace raie::sim

#endif  // RAIE_SIM_DRIFT_HPP
