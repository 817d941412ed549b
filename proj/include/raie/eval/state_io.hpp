#ifndef RAIE_EVAL_STATE_IO_HPP
#define RAIE_EVAL_STATE_IO_HPP

#include <raie/config/kv_config.hpp>
#include <raie/eval/experiment.hpp>
#include <raie/model/checkpoint.hpp>
#include <raie/region/snapshot.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <string>

namespace raie {

/// One line per item: id, tab, comma-joined feature values.
inline void write_features(std::ostream& out, const FeatureMap& features) {
    out << std::setprecision(17);
    for (const auto& [id, v] : features) {
        out << id << '\t';
        for (Eigen::Index i = 0; i < v.size(); ++i) out << (i ? "," : "") << v[i];
        out << '\n';
    }
}

inline FeatureMap read_features(std::istream& in) {
    FeatureMap out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        const auto parts = detail::split(line, "\t");
        if (parts.size() != 2) throw Error(ErrorCode::InvalidArgument, "feature line " + std::to_string(lineno) + " needs 2 fields");
        std::vector<double> xs;
        for (auto p : detail::split(parts[1], ",")) {
            auto x = detail::parse_double(p);
            if (!x) throw Error(ErrorCode::InvalidArgument, "feature line " + std::to_string(lineno) + " has a bad value");
            xs.push_back(*x);
        }
        out[std::string(detail::trim(parts[0]))] = Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
    }
    if (out.empty()) throw Error(ErrorCode::EmptyInput, "no item features");
    return out;
}

inline FeatureMap load_features(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::UnreadableInput, "cannot read " + path.string());
    return read_features(in);
}

/// Directory layout of a saved experiment:
///   config.txt, vocab.txt, backbone.bin, features.txt (optional), regions.bin,
///   setup_regions.bin, adapters/region_<id>.bin, adapters/{global,replay}.bin,
///   baseline.tsv (after finetuning).
inline void save_state(const std::filesystem::path& dir, const ExperimentState& st, const ExperimentConfig& cfg) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "adapters");
    for (const auto& e : fs::directory_iterator(dir / "adapters")) fs::remove(e.path());
    {
        std::ofstream out(dir / "config.txt");
        write_config(out, cfg);
    }
    {
        std::ofstream out(dir / "vocab.txt");
        for (ItemIndex i = 1; i < st.vocab.size(); ++i) out << st.vocab.id(i) << '\n';
    }
    save_backbone(st.backbone, dir / "backbone.bin");
    fs::remove(dir / "features.txt");
    if (st.features) {
        std::ofstream out(dir / "features.txt");
        out << std::setprecision(17) << st.features->recency_decay << '\n';
        for (Eigen::Index r = 1; r < st.features->table.rows(); ++r) {
            for (Eigen::Index c = 0; c < st.features->table.cols(); ++c) out << (c ? "," : "") << st.features->table(r, c);
            out << '\n';
        }
    }
    save_snapshot(st.regions, dir / "regions.bin");
    if (st.setup_regions) save_snapshot(*st.setup_regions, dir / "setup_regions.bin");
    for (const auto& [id, a] : st.raie_adapters)
        save_adapter(a, dir / "adapters" / ("region_" + std::to_string(to_underlying(id)) + ".bin"));
    if (st.global_adapter) save_adapter(*st.global_adapter, dir / "adapters" / "global.bin");
    if (st.replay_adapter) save_adapter(*st.replay_adapter, dir / "adapters" / "replay.bin");
    fs::remove(dir / "baseline.tsv");
    if (st.finetuned) {
        std::ofstream out(dir / "baseline.tsv");
        out << std::setprecision(17);
        for (const auto& [arm, m] : st.baseline_setup)
            out << to_string(arm) << '\t' << m.recall << '\t' << m.ndcg << '\t' << m.count << '\n';
    }
}

struct LoadedState {
    ExperimentState state;
    ExperimentConfig config;
};

inline LoadedState load_state(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    for (const char* f : {"config.txt", "vocab.txt", "backbone.bin", "regions.bin"})
        if (!fs::exists(dir / f)) throw Error(ErrorCode::UnreadableInput, "no saved state in " + dir.string() + " (missing " + f + ")");
    LoadedState out;
    out.config = load_config(dir / "config.txt");
    auto& st = out.state;
    {
        std::ifstream in(dir / "vocab.txt");
        std::string line;
        while (std::getline(in, line))
            if (!line.empty()) st.vocab.intern(line);
    }
    st.backbone = load_backbone(dir / "backbone.bin");
    if (st.backbone.vocab_size() != st.vocab.size())
        throw Error(ErrorCode::CorruptSnapshot, "vocabulary and backbone disagree");
    if (fs::exists(dir / "features.txt")) {
        std::ifstream in(dir / "features.txt");
        std::string line;
        std::getline(in, line);
        ItemFeatures f;
        f.recency_decay = std::stod(line);
        std::vector<std::vector<double>> rows;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::vector<double> row;
            for (auto p : detail::split(line, ",")) row.push_back(std::stod(std::string(p)));
            rows.push_back(std::move(row));
        }
        if (rows.size() + 1 != st.vocab.size() || rows.empty())
            throw Error(ErrorCode::CorruptSnapshot, "feature table does not match the vocabulary");
        f.table = Matrix::Zero(static_cast<Eigen::Index>(st.vocab.size()), static_cast<Eigen::Index>(rows[0].size()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != rows[0].size()) throw Error(ErrorCode::CorruptSnapshot, "ragged feature table");
            for (std::size_t c = 0; c < rows[r].size(); ++c)
                f.table(static_cast<Eigen::Index>(r + 1), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
        st.features = std::move(f);
    }
    st.regions = load_snapshot(dir / "regions.bin");
    if (fs::exists(dir / "setup_regions.bin")) st.setup_regions = load_snapshot(dir / "setup_regions.bin");
    const double dropout = out.config.adapter.dropout;
    for (const auto& r : st.regions.regions()) {
        const auto p = dir / "adapters" / ("region_" + std::to_string(to_underlying(r.id)) + ".bin");
        if (fs::exists(p)) st.raie_adapters.emplace(r.id, load_adapter(p, dropout));
    }
    if (fs::exists(dir / "adapters" / "global.bin")) st.global_adapter = load_adapter(dir / "adapters" / "global.bin", dropout);
    if (fs::exists(dir / "adapters" / "replay.bin")) st.replay_adapter = load_adapter(dir / "adapters" / "replay.bin", dropout);
    if (fs::exists(dir / "baseline.tsv")) {
        std::ifstream in(dir / "baseline.tsv");
        std::string line;
        while (std::getline(in, line)) {
            const auto parts = detail::split(line, "\t");
            if (parts.size() != 4) continue;
            SplitMetrics m;
            m.recall = std::stod(std::string(parts[1]));
            m.ndcg = std::stod(std::string(parts[2]));
            m.count = std::stoul(std::string(parts[3]));
            st.baseline_setup[parse_arm(parts[0])] = m;
        }
        st.finetuned = true;
    }
    return out;
}

}  // namespace raie

#endif  // RAIE_EVAL_STATE_IO_HPP
