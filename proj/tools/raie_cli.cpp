#include <raie/raie.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <thread>

namespace fs = std::filesystem;
using namespace raie;

namespace {

constexpr int kFailure = 1;
constexpr int kUsage = 2;

/// Schema violations are usage errors; everything else is a runtime failure.
int exit_code(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::UnknownFormat:
    case ErrorCode::InvalidScenario: return kUsage;
    default: return kFailure;
    }
}

/// --config plus one flag per schema key.
struct ConfigFlags {
    std::string path;
    std::map<std::string, std::string> values;
    CLI::App* cmd = nullptr;

    void attach(CLI::App* app) {
        cmd = app;
        app->add_option("--config", path, "key = value config file");
        for (const auto& f : config_schema()) app->add_option("--" + f.key, values[f.key], f.help);
    }

    bool given(const std::string& key) const { return cmd->get_option("--" + key)->count() > 0; }

    /// base, then the config file, then flags. Threads fall back to RAIE_THREADS and then
    /// to the processor count when neither the file nor a flag sets them.
    ExperimentConfig resolve(ExperimentConfig cfg) const {
        bool threads_set = given("threads");
        if (!path.empty()) {
            std::ifstream in(path);
            if (!in) throw Error(ErrorCode::UnreadableInput, "cannot read config " + path);
            const auto kv = parse_kv(in);
            threads_set |= kv.count("threads") > 0;
            apply_kv(cfg, kv);
        }
        for (const auto& [key, value] : values)
            if (given(key)) config_field(key).set(cfg, value);
        if (!threads_set) {
            if (const char* env = std::getenv("RAIE_THREADS"))
                config_field("threads").set(cfg, env);
            else
                cfg.threads = std::max(1u, std::thread::hardware_concurrency());
        }
        cfg.validate();
        return cfg;
    }
};

std::vector<WindowExample> load_examples(const std::string& path) {
    if (!fs::exists(path)) throw Error(ErrorCode::UnreadableInput, "no example file at " + path);
    return read_examples(fs::path(path));
}

std::vector<Split> parse_splits(const std::string& s) {
    if (s == "all") return {Split::Setup, Split::Finetune, Split::Test};
    std::vector<Split> out;
    for (auto part : detail::split(s, ","))
        if (!detail::trim(part).empty()) out.push_back(parse_split(detail::trim(part)));
    return out;
}

void write_stats_row(std::ostream& out, const std::string& stage, const StageStats& s) {
    out << std::left << std::setw(12) << stage << std::right << std::setw(10) << s.users << std::setw(10) << s.items
        << std::setw(14) << s.interactions << '\n';
}

/// "a..b" or a comma list.
std::vector<std::string> expand_values(const std::string& range) {
    std::vector<std::string> out;
    if (const auto dots = range.find(".."); dots != std::string::npos) {
        const auto lo = detail::parse_int(range.substr(0, dots));
        const auto hi = detail::parse_int(range.substr(dots + 2));
        if (!lo || !hi || *lo > *hi) throw Error(ErrorCode::InvalidConfig, "bad value range '" + range + "'");
        for (auto v = *lo; v <= *hi; ++v) out.push_back(std::to_string(v));
        return out;
    }
    for (auto part : detail::split(range, ","))
        if (!detail::trim(part).empty()) out.emplace_back(detail::trim(part));
    if (out.empty()) throw Error(ErrorCode::InvalidConfig, "no sweep values");
    return out;
}

void write_report(const EvalReport& rep, const std::string& format, const std::string& out_path) {
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw Error(ErrorCode::UnreadableInput, "cannot write " + out_path);
    }
    std::ostream& out = out_path.empty() ? std::cout : file;
    if (format == "kv") write_report_kv(out, rep);
    else write_report_text(out, rep);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Region-aware incremental preference editing for sequential recommenders"};
    app.require_subcommand(1);

    // ingest
    auto* ingest_cmd = app.add_subcommand("ingest", "parse a raw log and write tagged window examples");
    std::string in_path, in_format = "dat", in_out;
    double bin_threshold = 4.0, qs = 0.5, qf = 0.8;
    std::size_t kcore = 5, in_window = 5, in_stride = 1;
    ingest_cmd->add_option("--input", in_path, "interaction log")->required();
    ingest_cmd->add_option("--format", in_format, "dat (user::item::rating::ts) or tsv");
    ingest_cmd->add_option("--binarize-threshold", bin_threshold, "keep ratings at or above this");
    ingest_cmd->add_option("--k-core", kcore, "minimum interactions per user and item");
    ingest_cmd->add_option("--qs", qs, "set-up cutoff quantile");
    ingest_cmd->add_option("--qf", qf, "finetune cutoff quantile");
    ingest_cmd->add_option("--window-length", in_window, "items per context window");
    ingest_cmd->add_option("--stride", in_stride, "window stride");
    ingest_cmd->add_option("--out", in_out, "output directory")->required();

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "generate a drifting synthetic stream");
    std::string sim_scenario, sim_out;
    std::uint64_t sim_seed = 0;
    double sim_spread = 0.1;
    std::size_t sim_window = 5, sim_stride = 1;
    sim_cmd->add_option("--scenario", sim_scenario, "scenario file (key = value)")->required();
    sim_cmd->add_option("--seed", sim_seed, "overrides the scenario seed");
    sim_cmd->add_option("--feature-spread", sim_spread, "noise scale of the item feature vectors");
    sim_cmd->add_option("--window-length", sim_window, "items per context window");
    sim_cmd->add_option("--stride", sim_stride, "window stride");
    sim_cmd->add_option("--out", sim_out, "output directory")->required();

    // setup
    auto* setup_cmd = app.add_subcommand("setup", "train the backbone on S and build regions");
    ConfigFlags setup_flags;
    std::string setup_data, setup_features, setup_state;
    setup_flags.attach(setup_cmd);
    setup_cmd->add_option("--data", setup_data, "example file")->required();
    setup_cmd->add_option("--features", setup_features, "optional item feature file for the region encoder");
    setup_cmd->add_option("--out-state", setup_state, "state directory to create")->required();

    // finetune
    auto* ft_cmd = app.add_subcommand("finetune", "edit regions on F and train adapters");
    ConfigFlags ft_flags;
    std::string ft_state, ft_data;
    ft_flags.attach(ft_cmd);
    ft_cmd->add_option("--state", ft_state, "state directory")->required();
    ft_cmd->add_option("--data", ft_data, "example file")->required();

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "report Recall@k and NDCG@k per arm and split");
    ConfigFlags eval_flags;
    std::string eval_state, eval_data, eval_split = "all", eval_format = "text", eval_out;
    eval_flags.attach(eval_cmd);
    eval_cmd->add_option("--state", eval_state, "state directory")->required();
    eval_cmd->add_option("--data", eval_data, "example file")->required();
    eval_cmd->add_option("--split", eval_split, "S, F, T, a comma list, or all");
    eval_cmd->add_option("--format", eval_format, "text or kv")->check(CLI::IsMember({"text", "kv"}));
    eval_cmd->add_option("--out", eval_out, "write the report here instead of stdout");

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "rerun set-up and finetuning over one setting");
    ConfigFlags sweep_flags;
    std::string sweep_data, sweep_features, sweep_param = "k-regions", sweep_values = "1..8";
    sweep_flags.attach(sweep_cmd);
    sweep_cmd->add_option("--data", sweep_data, "example file")->required();
    sweep_cmd->add_option("--features", sweep_features, "optional item feature file for the region encoder");
    sweep_cmd->add_option("--param", sweep_param, "config key to vary");
    sweep_cmd->add_option("--values", sweep_values, "a..b or a comma list");

    // inspect
    auto* inspect_cmd = app.add_subcommand("inspect", "print regions, adapter norms and region geometry");
    std::string inspect_state, inspect_pre;
    inspect_cmd->add_option("--state", inspect_state, "state directory")->required();
    inspect_cmd->add_option("--pre", inspect_pre, "state whose regions are the reference (default: set-up regions)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsage;
    }

    try {
        if (*ingest_cmd) {
            const auto format = parse_log_format(in_format);
            const auto raw = ingest(fs::path(in_path), format);
            const auto bin = binarize(raw.events, bin_threshold);
            const auto core = k_core_filter(bin, kcore);
            if (core.empty()) throw Error(ErrorCode::EmptyEvents, "no events survive filtering");
            const auto split = temporal_split(core, qs, qf);
            const auto examples = segment_windows(core, split.tags, in_window, in_stride);
            fs::create_directories(in_out);
            {
                std::ofstream out(fs::path(in_out) / "examples.tsv");
                write_examples(out, examples);
            }
            std::ostringstream stats;
            stats << "lines = " << raw.lines << "\nskipped = " << raw.skipped << "\nt_s = " << split.split.t_s
                  << "\nt_f = " << split.split.t_f << "\n\n";
            stats << std::left << std::setw(12) << "stage" << std::right << std::setw(10) << "users" << std::setw(10)
                  << "items" << std::setw(14) << "interactions" << '\n';
            write_stats_row(stats, "raw", stage_stats(raw.events));
            write_stats_row(stats, "binarized", stage_stats(bin));
            write_stats_row(stats, "k-core", stage_stats(core));
            write_stats_row(stats, "set-up", stage_stats(core, &split.tags, Split::Setup));
            write_stats_row(stats, "finetune", stage_stats(core, &split.tags, Split::Finetune));
            write_stats_row(stats, "test", stage_stats(core, &split.tags, Split::Test));
            stats << "\nexamples S = " << examples_of(examples, Split::Setup).size()
                  << "\nexamples F = " << examples_of(examples, Split::Finetune).size()
                  << "\nexamples T = " << examples_of(examples, Split::Test).size() << '\n';
            std::ofstream(fs::path(in_out) / "stats.txt") << stats.str();
            std::cout << stats.str();
        } else if (*sim_cmd) {
            auto sc = sim::load_scenario(sim_scenario);
            if (sim_cmd->get_option("--seed")->count()) sc.seed = sim_seed;
            const auto stream = sim::generate_stream(sc);
            const auto split = temporal_split(stream.events, sc.q_s, sc.q_f);
            const auto examples = segment_windows(stream.events, split.tags, sim_window, sim_stride);
            const fs::path out(sim_out);
            fs::create_directories(out);
            {
                std::ofstream ev(out / "events.tsv"), lab(out / "labels.txt");
                sim::write_stream(stream, ev, lab);
            }
            {
                std::ofstream ex(out / "examples.tsv"), lab(out / "example_labels.txt");
                write_examples(ex, examples);
                for (const auto& e : examples) lab << sim::window_label(e, stream.labels) << '\n';
            }
            {
                std::ofstream f(out / "features.tsv");
                write_features(f, sim::item_latents(sc, sim_spread));
            }
            std::cout << "events = " << stream.events.size() << "\nexamples = " << examples.size() << "\nitems = "
                      << sc.item_count() << '\n';
        } else if (*setup_cmd) {
            const auto cfg = setup_flags.resolve(ExperimentConfig{});
            const auto examples = load_examples(setup_data);
            std::optional<FeatureMap> feats;
            if (!setup_features.empty()) feats = load_features(setup_features);
            const auto st = run_setup(examples, cfg, feats ? &*feats : nullptr);
            save_state(setup_state, st, cfg);
            std::cout << "items = " << st.vocab.item_count() << "\nregions = " << st.regions.size()
                      << "\nregion_dim = " << st.regions.dim() << '\n';
        } else if (*ft_cmd) {
            auto loaded = load_state(ft_state);
            if (loaded.state.finetuned) throw Error(ErrorCode::InvalidArgument, "state is already finetuned");
            const auto cfg = ft_flags.resolve(loaded.config);
            loaded.state.regions.set_config(cfg.edit);
            const auto examples = load_examples(ft_data);
            const auto log = run_finetune(loaded.state, examples, cfg);
            save_state(ft_state, loaded.state, cfg);
            {
                std::ofstream out(fs::path(ft_state) / "edit_log.tsv");
                write_edit_log(out, log);
            }
            std::ostringstream summary;
            write_edit_summary(summary, log);
            summary << "regions = " << loaded.state.regions.size() << '\n';
            std::ofstream(fs::path(ft_state) / "edit_summary.txt") << summary.str();
            std::cout << summary.str();
        } else if (*eval_cmd) {
            const auto loaded = load_state(eval_state);
            const auto cfg = eval_flags.resolve(loaded.config);
            const auto examples = load_examples(eval_data);
            write_report(build_report(loaded.state, examples, cfg, parse_splits(eval_split)), eval_format, eval_out);
        } else if (*sweep_cmd) {
            const auto base = sweep_flags.resolve(ExperimentConfig{});
            const auto& field = config_field(sweep_param);
            const auto examples = load_examples(sweep_data);
            std::optional<FeatureMap> feats;
            if (!sweep_features.empty()) feats = load_features(sweep_features);
            std::cout << sweep_param << "\tregions";
            for (Arm a : base.arms) {
                const std::string p(to_string(a));
                std::cout << '\t' << p << ".S.recall\t" << p << ".S.drop\t" << p << ".T.recall\t" << p << ".T.ndcg";
            }
            std::cout << '\n';
            for (const auto& value : expand_values(sweep_values)) {
                auto cfg = base;
                field.set(cfg, value);
                cfg.validate();
                auto st = run_setup(examples, cfg, feats ? &*feats : nullptr);
                run_finetune(st, examples, cfg);
                const auto rep = build_report(st, examples, cfg, {Split::Setup, Split::Test});
                std::cout << value << '\t' << st.regions.size();
                for (const auto& ar : rep.arms)
                    std::cout << '\t' << detail::fixed(ar.splits.at(Split::Setup).recall) << '\t'
                              << detail::fixed(ar.forgetting->recall_drop()) << '\t'
                              << detail::fixed(ar.splits.at(Split::Test).recall) << '\t'
                              << detail::fixed(ar.splits.at(Split::Test).ndcg);
                std::cout << '\n';
            }
        } else if (*inspect_cmd) {
            const auto loaded = load_state(inspect_state);
            const auto& st = loaded.state;
            std::cout << "regions\nid\tphase\tmembers\tedits\tradius\n";
            for (const auto& r : st.regions.regions())
                std::cout << to_underlying(r.id) << '\t' << (r.created_at == Phase::Setup ? "setup" : "finetune") << '\t'
                          << r.member_count << '\t' << r.edit_count << '\t' << detail::fixed(r.radius) << '\n';
            std::cout << "buffered = " << st.regions.buffer().size() << "\n\nadapters\nowner\tdelta_norm\n";
            for (const auto& [id, a] : st.raie_adapters)
                std::cout << "region_" << to_underlying(id) << '\t' << detail::fixed(a.delta().norm()) << '\n';
            if (st.global_adapter) std::cout << "global\t" << detail::fixed(st.global_adapter->delta().norm()) << '\n';
            if (st.replay_adapter) std::cout << "replay\t" << detail::fixed(st.replay_adapter->delta().norm()) << '\n';
            std::optional<RegionSet> pre;
            if (!inspect_pre.empty()) pre = load_state(inspect_pre).state.regions;
            else pre = st.setup_regions;
            if (pre) {
                std::cout << "\ngeometry\n";
                const auto rep = region_geometry_report(*pre, st.regions);
                write_geometry_tsv(std::cout, rep);
                auto show = [](const std::optional<double>& v) { return v ? detail::fixed(*v) : std::string("na"); };
                std::cout << "separability_pre = " << show(rep.separability_pre)
                          << "\nseparability_post = " << show(rep.separability_post) << '\n';
            }
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
    return 0;
}
