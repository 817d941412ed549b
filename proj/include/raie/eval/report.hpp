#ifndef RAIE_EVAL_REPORT_HPP
#define RAIE_EVAL_REPORT_HPP

#include <raie/eval/experiment.hpp>

#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace raie {

struct ArmReport {
    Arm arm{};
    std::map<Split, SplitMetrics> splits;
    std::optional<ForgettingRow> forgetting;
};

struct EvalReport {
    std::size_t k = 10;
    std::vector<ArmReport> arms;
    std::optional<GeometryReport> geometry;
};

inline EvalReport build_report(const ExperimentState& st, const std::vector<WindowExample>& all_examples,
                               const ExperimentConfig& cfg, const std::vector<Split>& splits) {
    EvalReport rep;
    rep.k = cfg.eval_k;
    const auto setup = examples_of(all_examples, Split::Setup);
    for (Arm a : cfg.arms) {
        ArmReport ar;
        ar.arm = a;
        for (Split s : splits) {
            const auto& ex = s == Split::Setup ? setup : examples_of(all_examples, s);
            ar.splits[s] = evaluate(st, a, ex, cfg.eval_k, cfg.exclude_seen);
        }
        if (st.finetuned) {
            auto it = st.baseline_setup.find(a);
            if (it != st.baseline_setup.end()) {
                auto after = ar.splits.count(Split::Setup) ? ar.splits[Split::Setup]
                                                           : evaluate(st, a, setup, cfg.eval_k, cfg.exclude_seen);
                ar.forgetting = ForgettingRow{a, it->second, after};
            }
        }
        rep.arms.push_back(std::move(ar));
    }
    if (st.setup_regions && cfg.has_arm(Arm::RAIE)) rep.geometry = region_geometry_report(*st.setup_regions, st.regions);
    return rep;
}

namespace detail {

inline std::string fixed(double v, int digits = 6) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

}  // namespace detail

/// Human-readable report. Geometry quantities are artifact-defined (see README).
inline void write_report_text(std::ostream& out, const EvalReport& rep) {
    out << "metric cutoff k = " << rep.k << "\n\n";
    out << "arm       split  count    recall@k   ndcg@k\n";
    for (const auto& ar : rep.arms)
        for (const auto& [s, m] : ar.splits)
            out << std::left << std::setw(10) << to_string(ar.arm) << std::setw(7) << split_code(s) << std::setw(9)
                << m.count << std::setw(11) << detail::fixed(m.recall) << detail::fixed(m.ndcg) << '\n';
    bool any = false;
    for (const auto& ar : rep.arms) any |= ar.forgetting.has_value();
    if (any) {
        out << "\nforgetting on S (before -> after, drop)\n";
        for (const auto& ar : rep.arms) {
            if (!ar.forgetting) continue;
            const auto& f = *ar.forgetting;
            out << std::left << std::setw(10) << to_string(ar.arm) << "recall " << detail::fixed(f.before.recall)
                << " -> " << detail::fixed(f.after.recall) << " (" << detail::fixed(f.recall_drop()) << ")  ndcg "
                << detail::fixed(f.before.ndcg) << " -> " << detail::fixed(f.after.ndcg) << " ("
                << detail::fixed(f.ndcg_drop()) << ")\n";
        }
    }
    if (rep.geometry) {
        out << "\nregion geometry (setup -> current)\n";
        write_geometry_tsv(out, *rep.geometry);
    }
    out.unsetf(std::ios::adjustfield);
}

/// Flat key = value form of the same report.
inline void write_report_kv(std::ostream& out, const EvalReport& rep) {
    out << "k = " << rep.k << '\n';
    for (const auto& ar : rep.arms) {
        const std::string arm(to_string(ar.arm));
        for (const auto& [s, m] : ar.splits) {
            const std::string p = arm + "." + split_code(s) + ".";
            out << p << "count = " << m.count << '\n';
            out << p << "recall = " << detail::fixed(m.recall, 9) << '\n';
            out << p << "ndcg = " << detail::fixed(m.ndcg, 9) << '\n';
        }
        if (ar.forgetting) {
            out << arm << ".forgetting.recall_before = " << detail::fixed(ar.forgetting->before.recall, 9) << '\n';
            out << arm << ".forgetting.recall_drop = " << detail::fixed(ar.forgetting->recall_drop(), 9) << '\n';
            out << arm << ".forgetting.ndcg_before = " << detail::fixed(ar.forgetting->before.ndcg, 9) << '\n';
            out << arm << ".forgetting.ndcg_drop = " << detail::fixed(ar.forgetting->ndcg_drop(), 9) << '\n';
        }
    }
    if (rep.geometry) {
        const auto& g = *rep.geometry;
        out << "geometry.separability_pre = " << (g.separability_pre ? detail::fixed(*g.separability_pre, 9) : "na") << '\n';
        out << "geometry.separability_post = " << (g.separability_post ? detail::fixed(*g.separability_post, 9) : "na")
            << '\n';
        out << "geometry.regions = " << g.rows.size() << '\n';
    }
}

/// window, p*, delta, action, region (blank while still buffered), rejected flag.
inline void write_edit_log(std::ostream& out, const EditLog& log) {
    out << "window\tp_star\tdelta\taction\tregion\trejected\n";
    for (const auto& e : log.entries) {
        out << e.window << '\t' << detail::fixed(e.p_star, 9) << '\t' << detail::fixed(e.margin_delta, 9) << '\t'
            << to_string(e.action) << '\t';
        if (e.region) out << to_underlying(*e.region);
        out << '\t' << (e.rejected ? 1 : 0) << '\n';
    }
}

inline void write_edit_summary(std::ostream& out, const EditLog& log) {
    out << "update = " << log.updates << '\n'
        << "expand = " << log.expands << '\n'
        << "add = " << log.adds << '\n'
        << "rejected = " << log.rejected << '\n'
        << "flushes = " << log.flushes << '\n'
        << "regions_created = " << log.created.size() << '\n'
        << "pending_buffer = " << log.pending_after << '\n';
    for (const auto& w : log.warnings) out << "warning = " << w << '\n';
}

}  // namespace raie

#endif  // RAIE_EVAL_REPORT_HPP
