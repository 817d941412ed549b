#ifndef RAIE_CONFIG_KV_CONFIG_HPP
#define RAIE_CONFIG_KV_CONFIG_HPP

#include <raie/data/events.hpp>
#include <raie/eval/experiment.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

namespace raie {

/// One experiment setting. Each key is also a command-line flag of the same name.
struct ConfigField {
    std::string key;
    std::string help;
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

namespace detail {

inline double to_double(const std::string& key, const std::string& v) {
    auto d = parse_double(v);
    if (!d) throw Error(ErrorCode::InvalidConfig, key + ": expected a number, got '" + v + "'");
    return *d;
}

inline std::size_t to_size(const std::string& key, const std::string& v) {
    auto i = parse_int(v);
    if (!i || *i < 0) throw Error(ErrorCode::InvalidConfig, key + ": expected a non-negative integer, got '" + v + "'");
    return static_cast<std::size_t>(*i);
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw Error(ErrorCode::InvalidConfig, key + ": expected true/false, got '" + v + "'");
}

inline std::string show(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

template <typename T>
ConfigField number(std::string key, std::string help, T ExperimentConfig::*field) {
    return {key, std::move(help),
            [key, field](ExperimentConfig& c, const std::string& v) {
                if constexpr (std::is_floating_point_v<T>) c.*field = to_double(key, v);
                else c.*field = static_cast<T>(to_size(key, v));
            },
            [field](const ExperimentConfig& c) {
                if constexpr (std::is_floating_point_v<T>) return show(c.*field);
                else return std::to_string(c.*field);
            }};
}

template <typename Owner, typename T>
ConfigField nested(std::string key, std::string help, Owner ExperimentConfig::*owner, T Owner::*field) {
    return {key, std::move(help),
            [key, owner, field](ExperimentConfig& c, const std::string& v) {
                if constexpr (std::is_floating_point_v<T>) c.*owner.*field = to_double(key, v);
                else c.*owner.*field = static_cast<T>(to_size(key, v));
            },
            [owner, field](const ExperimentConfig& c) {
                if constexpr (std::is_floating_point_v<T>) return show(c.*owner.*field);
                else return std::to_string(c.*owner.*field);
            }};
}

}  // namespace detail

inline const std::vector<ConfigField>& config_schema() {
    using detail::nested;
    using detail::number;
    using C = ExperimentConfig;
    static const std::vector<ConfigField> schema = [] {
        std::vector<ConfigField> s{
            number("k-regions", "regions built at set-up", &C::k_regions),
            number("window-length", "items per context window", &C::window_length),
            number("stride", "window stride", &C::stride),
            number("eval-k", "metric cutoff", &C::eval_k),
            number("seed", "experiment seed", &C::seed),
            number("dim", "embedding width", &C::dim),
            number("recency-decay", "backbone pooling decay", &C::recency_decay),
            number("kmeans-restarts", "k-means restarts at set-up", &C::kmeans_restarts),
            number("repair-steps", "overlap repair iterations", &C::repair_steps),
            number("repair-step-size", "overlap repair step size", &C::repair_step_size),
            number("replay-fraction", "share of S replayed by the replay arm", &C::replay_fraction),
            number("threads", "worker threads for per-region adapter training", &C::threads),
            nested("tau", "confidence threshold", &C::edit, &EditConfig::tau),
            nested("delta-min", "confidence margin threshold", &C::edit, &EditConfig::delta_min),
            nested("beta", "radius EMA rate (Update)", &C::edit, &EditConfig::beta),
            nested("gamma", "center EMA rate (Update)", &C::edit, &EditConfig::gamma),
            nested("lambda-expand", "radius growth rate (Expand)", &C::edit, &EditConfig::lambda_expand),
            nested("alpha-expand", "center pull (Expand)", &C::edit, &EditConfig::alpha_expand),
            nested("r-max", "radius cap in radians", &C::edit, &EditConfig::r_max),
            nested("radius-quantile", "member-angle quantile for radii", &C::edit, &EditConfig::radius_quantile),
            nested("buffer-threshold", "buffered Adds before a flush", &C::edit, &EditConfig::buffer_threshold),
            nested("k-add", "regions created per flush", &C::edit, &EditConfig::k_add),
            nested("lambda-sep", "separation penalty weight", &C::edit, &EditConfig::lambda_sep),
            nested("lr", "learning rate", &C::train, &TrainConfig::learning_rate),
            nested("setup-epochs", "backbone epochs on S", &C::train, &TrainConfig::setup_epochs),
            nested("finetune-epochs", "adapter epochs", &C::train, &TrainConfig::finetune_epochs),
            nested("batch-size", "batch size", &C::train, &TrainConfig::batch_size),
            nested("mixing-ratio", "probability a batch comes from S", &C::train, &TrainConfig::mixing_ratio),
            nested("weight-decay", "AdamW weight decay", &C::train, &TrainConfig::weight_decay),
            nested("grad-clip", "global gradient norm clip", &C::train, &TrainConfig::grad_clip),
            nested("lora-rank", "adapter rank", &C::adapter, &AdapterHyper::rank),
            nested("lora-alpha", "adapter alpha", &C::adapter, &AdapterHyper::alpha),
            nested("lora-dropout", "adapter input dropout", &C::adapter, &AdapterHyper::dropout),
        };
        s.push_back({"overlap-distance", "angular or euclidean center distance in the penalty",
                     [](C& c, const std::string& v) {
                         if (v == "angular") c.edit.overlap_distance_mode = OverlapDistance::Angular;
                         else if (v == "euclidean") c.edit.overlap_distance_mode = OverlapDistance::EuclideanLiteral;
                         else throw Error(ErrorCode::InvalidConfig, "overlap-distance: expected angular|euclidean");
                     },
                     [](const C& c) {
                         return std::string(c.edit.overlap_distance_mode == OverlapDistance::Angular ? "angular"
                                                                                                   : "euclidean");
                     }});
        s.push_back({"editing", "edit regions during finetuning",
                     [](C& c, const std::string& v) { c.editing = detail::to_bool("editing", v); },
                     [](const C& c) { return std::string(c.editing ? "true" : "false"); }});
        s.push_back({"exclude-seen", "drop context items from rankings",
                     [](C& c, const std::string& v) { c.exclude_seen = detail::to_bool("exclude-seen", v); },
                     [](const C& c) { return std::string(c.exclude_seen ? "true" : "false"); }});
        s.push_back({"arms", "comma-separated subset of raie,global,replay,frozen",
                     [](C& c, const std::string& v) {
                         c.arms.clear();
                         for (auto part : detail::split(v, ","))
                             if (!detail::trim(part).empty()) c.arms.push_back(parse_arm(detail::trim(part)));
                     },
                     [](const C& c) {
                         std::string out;
                         for (Arm a : c.arms) out += (out.empty() ? "" : ",") + std::string(to_string(a));
                         return out;
                     }});
        return s;
    }();
    return schema;
}

inline const ConfigField& config_field(const std::string& key) {
    for (const auto& f : config_schema())
        if (f.key == key) return f;
    throw Error(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
}

/// Parses "key = value" lines ('#' starts a comment) into raw pairs, checking keys.
inline std::map<std::string, std::string> parse_kv(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        const auto body = detail::trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string_view::npos)
            throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(lineno) + ": expected key = value");
        const std::string key(detail::trim(body.substr(0, eq)));
        config_field(key);
        kv[key] = std::string(detail::trim(body.substr(eq + 1)));
    }
    return kv;
}

inline void apply_kv(ExperimentConfig& cfg, const std::map<std::string, std::string>& kv) {
    for (const auto& [k, v] : kv) config_field(k).set(cfg, v);
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::UnreadableInput, "cannot read " + path.string());
    ExperimentConfig cfg;
    apply_kv(cfg, parse_kv(in));
    return cfg;
}

inline void write_config(std::ostream& out, const ExperimentConfig& cfg) {
    for (const auto& f : config_schema()) out << f.key << " = " << f.get(cfg) << '\n';
}

}  // namespace raie

#endif  // RAIE_CONFIG_KV_CONFIG_HPP
