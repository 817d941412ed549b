#ifndef RAIE_EVAL_EXPERIMENT_HPP
#define RAIE_EVAL_EXPERIMENT_HPP

#include <raie/data/temporal.hpp>
#include <raie/eval/geometry.hpp>
#include <raie/eval/metrics.hpp>
#include <raie/model/adapter.hpp>
#include <raie/model/backbone.hpp>
#include <raie/model/checkpoint.hpp>
#include <raie/model/training.hpp>
#include <raie/region/region_set.hpp>
#include <raie/region/separation.hpp>

#include <algorithm>
#include <atomic>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace raie {

enum class Arm { RAIE, GlobalAdapter, Replay, FrozenBase };

constexpr std::string_view to_string(Arm a) {
    switch (a) {
    case Arm::RAIE: return "raie";
    case Arm::GlobalAdapter: return "global";
    case Arm::Replay: return "replay";
    case Arm::FrozenBase: return "frozen";
    }
    return "?";
}

inline Arm parse_arm(std::string_view s) {
    for (Arm a : {Arm::RAIE, Arm::GlobalAdapter, Arm::Replay, Arm::FrozenBase})
        if (s == to_string(a)) return a;
    throw Error(ErrorCode::InvalidConfig, "unknown arm '" + std::string(s) + "'");
}

inline const std::vector<Arm>& all_arms() {
    static const std::vector<Arm> arms{Arm::RAIE, Arm::GlobalAdapter, Arm::Replay, Arm::FrozenBase};
    return arms;
}

struct ExperimentConfig {
    std::size_t k_regions = 3;
    std::size_t window_length = 5;
    std::size_t stride = 1;
    EditConfig edit;
    TrainConfig train;
    std::size_t eval_k = 10;
    std::vector<Arm> arms = all_arms();
    std::uint64_t seed = 0;

    std::size_t dim = 32;
    double recency_decay = 0.8;
    AdapterHyper adapter;
    std::size_t kmeans_restarts = 8;
    std::size_t repair_steps = 50;
    double repair_step_size = 0.05;
    bool editing = true;           ///< ablation switch: route F windows without editing regions
    double replay_fraction = 0.1;  ///< share of S examples replayed by the Replay arm
    bool exclude_seen = false;
    std::size_t threads = 1;

    bool has_arm(Arm a) const { return std::find(arms.begin(), arms.end(), a) != arms.end(); }

    void validate() const {
        if (k_regions == 0) throw Error(ErrorCode::InvalidConfig, "k_regions must be >= 1");
        if (arms.empty()) throw Error(ErrorCode::InvalidConfig, "at least one arm is required");
        if (window_length == 0 || stride == 0) throw Error(ErrorCode::InvalidConfig, "window_length and stride must be >= 1");
        if (eval_k == 0) throw Error(ErrorCode::InvalidConfig, "eval_k must be >= 1");
        if (dim == 0) throw Error(ErrorCode::InvalidConfig, "dim must be >= 1");
        if (!(replay_fraction >= 0.0 && replay_fraction <= 1.0))
            throw Error(ErrorCode::InvalidConfig, "replay_fraction must lie in [0,1]");
        edit.validate();
        train.validate();
    }

    /// Train settings with the experiment seed threaded through.
    TrainConfig seeded_train() const {
        TrainConfig t = train;
        t.seed = seed;
        return t;
    }
};

inline constexpr RegionId kGlobalAdapterId{0};

/// Window representation from fixed external item features (one row per vocabulary
/// index) instead of the backbone: normalize(sum_j rho^(L-j) f[v_j]).
struct ItemFeatures {
    Matrix table;
    double recency_decay = 0.8;

    UnitVector encode(std::span<const ItemIndex> window) const {
        if (window.empty()) throw Error(ErrorCode::EmptyWindow, "window is empty");
        Vector acc = Vector::Zero(table.cols());
        double w = 1.0;
        for (std::size_t j = window.size(); j-- > 0; w *= recency_decay) {
            if (window[j] >= static_cast<std::size_t>(table.rows()))
                throw Error(ErrorCode::InvalidArgument, "item index outside the feature table");
            acc += w * table.row(static_cast<Eigen::Index>(window[j])).transpose();
        }
        if (acc.norm() < 1e-12) throw Error(ErrorCode::ZeroHidden, "window features cancel out");
        return UnitVector::normalize(acc);
    }
};

/// Features keyed by item id; every feature must have the same width.
using FeatureMap = std::map<std::string, Vector>;

/// Everything one experiment carries between phases. Each arm owns its parameters.
struct ExperimentState {
    ItemVocab vocab;
    Backbone backbone;
    std::optional<ItemFeatures> features;  ///< when set, regions live in feature space
    RegionSet regions{1, EditConfig{}};         ///< RAIE regions (current)
    std::optional<RegionSet> setup_regions;     ///< RAIE regions as built at set-up
    AdapterRegistry raie_adapters;
    std::optional<LowRankAdapter> global_adapter;
    std::optional<LowRankAdapter> replay_adapter;
    std::map<Arm, SplitMetrics> baseline_setup;  ///< S-split metrics before finetuning
    bool finetuned = false;
};

struct EditLogEntry {
    std::size_t window = 0;  ///< position in the finetune example list
    double p_star = 0.0;
    double margin_delta = 0.0;
    EditAction action = EditAction::Add;
    std::optional<RegionId> region;  ///< edited region, or the region a flush placed it in
    bool rejected = false;           ///< degenerate edit, state left unchanged
};

struct EditLog {
    std::vector<EditLogEntry> entries;
    std::size_t updates = 0, expands = 0, adds = 0, rejected = 0;
    std::vector<RegionId> created;  ///< regions created by buffer flushes
    std::size_t flushes = 0;
    std::size_t pending_after = 0;  ///< vectors still buffered after the pass
    std::vector<double> penalty_log;
    std::vector<std::string> warnings;
};

namespace detail {

inline ItemVocab build_vocab(const std::vector<WindowExample>& examples) {
    ItemVocab v;
    for (const auto& ex : examples) {
        for (const auto& c : ex.context) v.intern(c);
        v.intern(ex.target);
    }
    return v;
}

inline TrainExample to_train(const ItemVocab& vocab, const WindowExample& ex) {
    TrainExample t;
    for (const auto& c : ex.context) t.window.push_back(vocab.at(c));
    t.target = vocab.at(ex.target);
    return t;
}

inline std::vector<TrainExample> to_train(const ItemVocab& vocab, const std::vector<WindowExample>& examples) {
    std::vector<TrainExample> out;
    out.reserve(examples.size());
    for (const auto& ex : examples) out.push_back(to_train(vocab, ex));
    return out;
}

inline ItemFeatures feature_table(const ItemVocab& vocab, const FeatureMap& features, double decay) {
    if (features.empty()) throw Error(ErrorCode::EmptyInput, "no item features");
    const auto width = features.begin()->second.size();
    ItemFeatures f{Matrix::Zero(static_cast<Eigen::Index>(vocab.size()), width), decay};
    for (ItemIndex i = 1; i < vocab.size(); ++i) {
        auto it = features.find(vocab.id(i));
        if (it == features.end()) throw Error(ErrorCode::InvalidArgument, "no feature for item " + vocab.id(i));
        if (it->second.size() != width) throw Error(ErrorCode::DimensionMismatch, "feature widths differ");
        f.table.row(static_cast<Eigen::Index>(i)) = it->second.transpose();
    }
    return f;
}

inline std::size_t route(const RegionSet& set, const UnitVector& v) {
    return argmax(confidence(set, v).scores);
}

/// Runs `jobs` on up to `threads` workers; each job index runs exactly once.
inline void parallel_for(std::size_t jobs, std::size_t threads, const std::function<void(std::size_t)>& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, jobs));
    if (threads == 1) {
        for (std::size_t i = 0; i < jobs; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(jobs);
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < jobs; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    pool.clear();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace detail

inline std::vector<WindowExample> examples_of(const std::vector<WindowExample>& all, Split phase) {
    std::vector<WindowExample> out;
    for (const auto& ex : all)
        if (ex.phase == phase) out.push_back(ex);
    return out;
}

inline LowRankAdapter fresh_adapter(const ExperimentConfig& cfg, RegionId id) {
    return LowRankAdapter::init(id, static_cast<Eigen::Index>(cfg.dim), cfg.adapter.rank, cfg.adapter.alpha,
                                cfg.adapter.dropout, cfg.seed);
}

/// The routing representation of a window.
inline UnitVector encode_window(const ExperimentState& st, std::span<const ItemIndex> window) {
    return st.features ? st.features->encode(window) : encode_subsequence(st.backbone, window);
}

/// Adapter an arm would use for one window, or nullptr for the bare backbone.
inline const LowRankAdapter* select_adapter(const ExperimentState& st, Arm arm, const UnitVector& v,
                                            std::optional<RegionId>* routed = nullptr) {
    switch (arm) {
    case Arm::RAIE: {
        const auto& region = st.regions.at(detail::route(st.regions, v));
        if (routed) *routed = region.id;
        auto it = st.raie_adapters.find(region.id);
        return it == st.raie_adapters.end() ? nullptr : &it->second;
    }
    case Arm::GlobalAdapter: return st.global_adapter ? &*st.global_adapter : nullptr;
    case Arm::Replay: return st.replay_adapter ? &*st.replay_adapter : nullptr;
    case Arm::FrozenBase: return nullptr;
    }
    return nullptr;
}

struct Prediction {
    std::vector<ItemIndex> ranked;
    std::optional<RegionId> region;
};

/// Routes each window by raw-score argmax over the current regions (RAIE) and returns
/// the top-k items. Never edits state.
inline std::vector<Prediction> run_inference(const ExperimentState& st, Arm arm,
                                             const std::vector<WindowExample>& examples, std::size_t k,
                                             bool exclude_seen = false) {
    std::vector<Prediction> out;
    out.reserve(examples.size());
    for (const auto& ex : examples) {
        const auto t = detail::to_train(st.vocab, ex);
        const auto v = encode_window(st, t.window);
        Prediction p;
        const auto* adapter = select_adapter(st, arm, v, &p.region);
        p.ranked = predict_topk(st.backbone, adapter, t.window, k, exclude_seen);
        out.push_back(std::move(p));
    }
    return out;
}

inline SplitMetrics evaluate(const ExperimentState& st, Arm arm, const std::vector<WindowExample>& examples,
                             std::size_t k, bool exclude_seen = false) {
    SplitMetrics m;
    const auto preds = run_inference(st, arm, examples, k, exclude_seen);
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto target = st.vocab.at(examples[i].target);
        const std::span<const ItemIndex> ranked(preds[i].ranked);
        m.recall += recall_at_k(ranked, target, k);
        m.ndcg += ndcg_at_k(ranked, target, k);
    }
    m.count = examples.size();
    if (m.count) {
        m.recall /= static_cast<double>(m.count);
        m.ndcg /= static_cast<double>(m.count);
    }
    return m;
}

/// Set-up phase: vocabulary over all examples, backbone trained on S then frozen, S
/// windows encoded and clustered into k_regions regions, one zero-effect adapter per
/// region and per adapter arm. With `features`, windows are encoded from those instead
/// of the backbone.
inline ExperimentState run_setup(const std::vector<WindowExample>& all_examples, const ExperimentConfig& cfg,
                                 const FeatureMap* features = nullptr) {
    cfg.validate();
    const auto setup = examples_of(all_examples, Split::Setup);
    if (setup.empty()) throw Error(ErrorCode::EmptyInput, "no set-up examples");

    ExperimentState st;
    st.vocab = detail::build_vocab(all_examples);
    st.backbone = Backbone::init(st.vocab.size(), static_cast<Eigen::Index>(cfg.dim), cfg.recency_decay, cfg.seed);
    const auto train = detail::to_train(st.vocab, setup);
    train_setup_backbone(st.backbone, train, cfg.seeded_train());
    if (features) st.features = detail::feature_table(st.vocab, *features, cfg.recency_decay);

    std::vector<UnitVector> vecs;
    vecs.reserve(train.size());
    for (const auto& t : train) vecs.push_back(encode_window(st, t.window));
    st.regions = build_regions_with_assignments(vecs, cfg.k_regions, cfg.edit, cfg.seed, cfg.kmeans_restarts).regions;
    st.setup_regions = st.regions;
    for (const auto& r : st.regions.regions()) st.raie_adapters.emplace(r.id, fresh_adapter(cfg, r.id));
    if (cfg.has_arm(Arm::GlobalAdapter)) st.global_adapter = fresh_adapter(cfg, kGlobalAdapterId);
    if (cfg.has_arm(Arm::Replay)) st.replay_adapter = fresh_adapter(cfg, kGlobalAdapterId);
    return st;
}

/// Finetune phase. RAIE: every F window (in stream order) is scored against the regions
/// and edited by the Update/Expand/Add rule, buffered Adds flush into new regions; one
/// overlap-repair pass follows; then each region's adapter trains on the S windows it
/// routes plus the F windows edited into it. The global arm trains one adapter on F,
/// the replay arm on F plus a uniform sample of S. S-split metrics of every arm are
/// recorded first as the forgetting baseline.
inline EditLog run_finetune(ExperimentState& st, const std::vector<WindowExample>& all_examples,
                            const ExperimentConfig& cfg) {
    cfg.validate();
    const auto setup = examples_of(all_examples, Split::Setup);
    const auto fine = examples_of(all_examples, Split::Finetune);
    for (Arm a : cfg.arms) st.baseline_setup[a] = evaluate(st, a, setup, cfg.eval_k, cfg.exclude_seen);

    EditLog log;
    const auto train_s = detail::to_train(st.vocab, setup);
    const auto train_f = detail::to_train(st.vocab, fine);
    const auto tcfg = cfg.seeded_train();

    if (cfg.has_arm(Arm::RAIE)) {
        std::vector<std::optional<RegionId>> f_region(fine.size());
        std::vector<UnitVector> f_vecs;
        f_vecs.reserve(fine.size());
        for (const auto& t : train_f) f_vecs.push_back(encode_window(st, t.window));

        if (cfg.editing) {
            std::vector<std::size_t> pending;
            for (std::size_t i = 0; i < fine.size(); ++i) {
                const auto& v = f_vecs[i];
                auto d = decide_edit(st.regions, v);
                EditLogEntry entry{i, d.p_star, d.margin_delta, d.action, d.target_region, false};
                if (d.action == EditAction::Add) {
                    ++log.adds;
                    pending.push_back(i);
                    if (auto flush = buffer_add(st.regions, v)) {
                        ++log.flushes;
                        for (auto id : flush->new_regions) {
                            st.raie_adapters.emplace(id, fresh_adapter(cfg, id));
                            log.created.push_back(id);
                        }
                        for (std::size_t j = 0; j < pending.size(); ++j) {
                            f_region[pending[j]] = flush->assignments[j];
                            if (pending[j] < i) log.entries[pending[j]].region = flush->assignments[j];
                        }
                        entry.region = flush->assignments.back();
                        pending.clear();
                    }
                } else {
                    const auto& target = st.regions.at(*d.target_index);
                    try {
                        st.regions.replace(d.action == EditAction::Update ? apply_update(target, v, st.regions.config())
                                                                          : apply_expand(target, v, st.regions.config()));
                    } catch (const Error& e) {
                        if (e.code() != ErrorCode::DegenerateCenter) throw;
                        entry.rejected = true;
                        ++log.rejected;
                        log.warnings.push_back("window " + std::to_string(i) + ": " + e.what());
                    }
                    (d.action == EditAction::Update ? log.updates : log.expands) += 1;
                    f_region[i] = d.target_region;
                }
                log.entries.push_back(entry);
            }
            log.pending_after = pending.size();
            st.regions = repair_overlap(std::move(st.regions), cfg.repair_steps, cfg.repair_step_size);
        }
        for (std::size_t i = 0; i < fine.size(); ++i)
            if (!f_region[i]) f_region[i] = st.regions.at(detail::route(st.regions, f_vecs[i])).id;

        // Per-region pools.
        std::map<RegionId, std::vector<TrainExample>> pool_s, pool_f;
        for (std::size_t i = 0; i < train_s.size(); ++i) {
            const auto v = encode_window(st, train_s[i].window);
            pool_s[st.regions.at(detail::route(st.regions, v)).id].push_back(train_s[i]);
        }
        for (std::size_t i = 0; i < train_f.size(); ++i) pool_f[*f_region[i]].push_back(train_f[i]);

        const double penalty = separation_penalty(st.regions);
        log.penalty_log.push_back(penalty);
        std::vector<RegionId> ids;
        for (const auto& r : st.regions.regions()) ids.push_back(r.id);
        std::vector<std::optional<std::string>> warn(ids.size());
        detail::parallel_for(ids.size(), cfg.threads, [&](std::size_t j) {
            auto& adapter = st.raie_adapters.at(ids[j]);
            try {
                train_region_adapter(st.backbone, adapter, pool_s[ids[j]], pool_f[ids[j]], tcfg,
                                     [penalty] { return penalty; });
            } catch (const Error& e) {
                if (e.code() != ErrorCode::EmptyRegionData) throw;
                warn[j] = "region " + std::to_string(to_underlying(ids[j])) + ": " + e.what();
            }
        });
        for (auto& w : warn)
            if (w) log.warnings.push_back(*w);
    }

    if (cfg.has_arm(Arm::GlobalAdapter) && !train_f.empty()) {
        if (!st.global_adapter) st.global_adapter = fresh_adapter(cfg, kGlobalAdapterId);
        train_region_adapter(st.backbone, *st.global_adapter, {}, train_f, tcfg);
    }
    if (cfg.has_arm(Arm::Replay) && !train_f.empty()) {
        if (!st.replay_adapter) st.replay_adapter = fresh_adapter(cfg, kGlobalAdapterId);
        std::vector<TrainExample> replay = train_f;
        std::mt19937_64 rng(cfg.seed ^ 0x5EB1A7ULL);
        std::vector<std::size_t> idx(train_s.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        const auto take = static_cast<std::size_t>(std::round(cfg.replay_fraction * static_cast<double>(train_s.size())));
        for (std::size_t i = 0; i < take; ++i) replay.push_back(train_s[idx[i]]);
        train_region_adapter(st.backbone, *st.replay_adapter, {}, replay, tcfg);
    }
    st.finetuned = true;
    return log;
}

struct ForgettingRow {
    Arm arm{};
    SplitMetrics before;
    SplitMetrics after;
    double recall_drop() const { return before.recall - after.recall; }
    double ndcg_drop() const { return before.ndcg - after.ndcg; }
};

/// S-split metrics before and after finetuning, per arm.
inline std::vector<ForgettingRow> forgetting_report(const ExperimentState& st, const std::vector<WindowExample>& setup,
                                                    const ExperimentConfig& cfg) {
    if (!st.finetuned || st.baseline_setup.empty())
        throw Error(ErrorCode::MissingBaseline, "finetune phase has not run");
    std::vector<ForgettingRow> rows;
    for (Arm a : cfg.arms) {
        auto it = st.baseline_setup.find(a);
        if (it == st.baseline_setup.end()) throw Error(ErrorCode::MissingBaseline, "no baseline for arm");
        rows.push_back({a, it->second, evaluate(st, a, setup, cfg.eval_k, cfg.exclude_seen)});
    }
    return rows;
}

}  // namespace raie

#endif  // RAIE_EVAL_EXPERIMENT_HPP
