#include "support.hpp"

#include <raie/raie.hpp>

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using namespace raie;

namespace {

struct CliRun {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CliRun cli(const support::TempDir& dir, const std::string& args) {
    const auto out = dir / "stdout.txt";
    const auto err = dir / "stderr.txt";
    const std::string cmd =
        std::string(RAIE_CLI_PATH) + " " + args + " > '" + out.string() + "' 2> '" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    CliRun r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

std::string golden(const std::string& name) { return std::string(RAIE_GOLDEN_DIR) + "/" + name; }

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string l;
    while (std::getline(in, l)) out.push_back(l);
    return out;
}

/// A small drift scenario, written to the temp dir and simulated there.
class Pipeline : public ::testing::Test {
protected:
    void SetUp() override {
        std::ofstream(dir / "small.scenario") << "num_interests = 3\nitems_per_interest = 10\nnum_users = 40\n"
                                                  "events_per_user = 30\nsetup_mixture = 0.45,0.45,0.1\n"
                                                  "finetune_mixture = 0.1,0.1,0.8\ntest_mixture = 0.2,0.2,0.6\n"
                                                  "latent_dim = 16\nseed = 3\n";
        std::ofstream(dir / "quick.conf") << "# fast settings\nsetup-epochs = 2\nfinetune-epochs = 1\ndim = 16\n";
        ASSERT_EQ(cli(dir, "simulate --scenario " + p("small.scenario") + " --out " + p("sim")).code, 0);
    }
    std::string p(const std::string& name) const { return (dir / name).string(); }
    CliRun pipeline(const std::string& state, const std::string& extra = "") {
        const std::string common = " --config " + p("quick.conf") + " --data " + p("sim/examples.tsv") + extra;
        auto r = cli(dir, "setup --features " + p("sim/features.tsv") + " --out-state " + p(state) + common);
        if (r.code != 0) return r;
        r = cli(dir, "finetune --state " + p(state) + common);
        if (r.code != 0) return r;
        return cli(dir, "eval --format kv --state " + p(state) + common);
    }

    support::TempDir dir;
};

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
    support::TempDir dir;
    EXPECT_EQ(cli(dir, "").code, 2);
    EXPECT_EQ(cli(dir, "frobnicate").code, 2);
    EXPECT_EQ(cli(dir, "setup --data x.tsv").code, 2);
    EXPECT_EQ(cli(dir, "setup --data x.tsv --out-state s --no-such-flag 1").code, 2);
    EXPECT_EQ(cli(dir, "ingest --input " + golden("ingest_fixture.dat") + " --format csv --out o").code, 2);
    EXPECT_EQ(cli(dir, "setup --data x.tsv --out-state s --tau 7").code, 2);
    EXPECT_EQ(cli(dir, "setup --data x.tsv --out-state s --arms raie,lora").code, 2);
    std::ofstream(dir / "bad.conf") << "temperature = 2\n";
    EXPECT_EQ(cli(dir, "setup --data x.tsv --out-state s --config " + (dir / "bad.conf").string()).code, 2);
    std::ofstream(dir / "bad.scenario") << "num_interests = 2\nsetup_mixture = 0.5,0.2\nfinetune_mixture = 0.5,0.5\n";
    EXPECT_EQ(cli(dir, "simulate --scenario " + (dir / "bad.scenario").string() + " --out o").code, 2);
}

TEST(Cli, MissingInputsExitOne) {
    support::TempDir dir;
    const auto missing = (dir / "nothing").string();
    EXPECT_EQ(cli(dir, "ingest --input " + missing + " --out o").code, 1);
    EXPECT_EQ(cli(dir, "setup --data " + missing + " --out-state s").code, 1);
    EXPECT_EQ(cli(dir, "finetune --state " + missing + " --data " + missing).code, 1);
    const auto r = cli(dir, "eval --state " + missing + " --data " + missing);
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("error:"), std::string::npos);
    EXPECT_EQ(cli(dir, "inspect --state " + missing).code, 1);
    EXPECT_EQ(cli(dir, "simulate --scenario " + missing + " --out o").code, 1);
}

TEST(Cli, HelpListsEveryConfigFlag) {
    support::TempDir dir;
    for (const char* cmd : {"setup", "finetune", "eval", "sweep"}) {
        const auto r = cli(dir, std::string(cmd) + " --help");
        EXPECT_EQ(r.code, 0);
        EXPECT_NE(r.out.find("--config"), std::string::npos) << cmd;
        for (const auto& f : config_schema()) EXPECT_NE(r.out.find("--" + f.key + " "), std::string::npos) << cmd << " " << f.key;
    }
    const auto ing = cli(dir, "ingest --help").out;
    for (const char* flag : {"--input", "--format", "--binarize-threshold", "--k-core", "--qs", "--qf", "--out"})
        EXPECT_NE(ing.find(flag), std::string::npos) << flag;
    const auto ins = cli(dir, "inspect --help").out;
    EXPECT_NE(ins.find("--state"), std::string::npos);
}

TEST(Cli, IngestMatchesGoldenFiles) {
    support::TempDir dir;
    const auto r = cli(dir, "ingest --input " + golden("ingest_fixture.dat") +
                                " --format dat --k-core 2 --window-length 2 --out " + (dir / "out").string());
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(slurp(dir / "out" / "examples.tsv"), slurp(golden("ingest_examples.tsv")));
    EXPECT_EQ(slurp(dir / "out" / "stats.txt"), slurp(golden("ingest_stats.txt")));
    EXPECT_EQ(r.out, slurp(golden("ingest_stats.txt")));
}

TEST_F(Pipeline, EndToEndReportsAreByteIdentical) {
    const auto a = pipeline("state_a");
    ASSERT_EQ(a.code, 0) << a.err;
    const auto b = pipeline("state_b", " --threads 3");
    ASSERT_EQ(b.code, 0) << b.err;
    EXPECT_EQ(a.out, b.out);
    EXPECT_NE(a.out.find("raie.T.recall = "), std::string::npos);
    EXPECT_NE(a.out.find("frozen.forgetting.recall_drop = 0.000000000"), std::string::npos);
    EXPECT_EQ(slurp(dir / "state_a" / "regions.bin"), slurp(dir / "state_b" / "regions.bin"));
    EXPECT_EQ(slurp(dir / "state_a" / "edit_log.tsv"), slurp(dir / "state_b" / "edit_log.tsv"));
}

TEST_F(Pipeline, SavedStateReproducesInProcessRun) {
    const auto r = pipeline("state");
    ASSERT_EQ(r.code, 0) << r.err;
    auto cfg = load_config(p("quick.conf"));
    const auto examples = read_examples(fs::path(p("sim/examples.tsv")));
    const auto feats = load_features(p("sim/features.tsv"));
    auto st = run_setup(examples, cfg, &feats);
    run_finetune(st, examples, cfg);
    std::ostringstream expected;
    write_report_kv(expected, build_report(st, examples, cfg, {Split::Setup, Split::Finetune, Split::Test}));
    EXPECT_EQ(r.out, expected.str());
}

TEST_F(Pipeline, FinetuneRefusesFinishedState) {
    ASSERT_EQ(pipeline("state").code, 0);
    EXPECT_EQ(cli(dir, "finetune --state " + p("state") + " --data " + p("sim/examples.tsv")).code, 1);
}

TEST_F(Pipeline, EvalSplitSelectionAndTextFormat) {
    ASSERT_EQ(pipeline("state").code, 0);
    const auto r = cli(dir, "eval --state " + p("state") + " --data " + p("sim/examples.tsv") + " --split T --arms raie");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("recall@k"), std::string::npos);
    EXPECT_NE(r.out.find("raie      T"), std::string::npos);
    EXPECT_EQ(r.out.find("global"), std::string::npos);
    EXPECT_EQ(cli(dir, "eval --state " + p("state") + " --data " + p("sim/examples.tsv") + " --split Q").code, 1);
}

TEST_F(Pipeline, SweepEmitsOneRowPerValue) {
    const auto r = cli(dir, "sweep --config " + p("quick.conf") + " --arms raie --data " + p("sim/examples.tsv") +
                                " --features " + p("sim/features.tsv") + " --values 1..8");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = lines(r.out);
    ASSERT_EQ(rows.size(), 9u);
    EXPECT_EQ(rows[0], "k-regions\tregions\traie.S.recall\traie.S.drop\traie.T.recall\traie.T.ndcg");
    for (std::size_t k = 1; k <= 8; ++k) EXPECT_EQ(rows[k].rfind(std::to_string(k) + "\t", 0), 0u) << rows[k];
}

TEST_F(Pipeline, InspectReportsGeometryForEveryRegion) {
    ASSERT_EQ(pipeline("post").code, 0);
    const std::string common = " --config " + p("quick.conf") + " --data " + p("sim/examples.tsv");
    ASSERT_EQ(cli(dir, "setup --features " + p("sim/features.tsv") + " --out-state " + p("pre") + common).code, 0);
    const auto r = cli(dir, "inspect --state " + p("post") + " --pre " + p("pre"));
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = lines(r.out);
    const auto header = std::find(rows.begin(), rows.end(), "region\tstatus\tdelta\tdelta_area_pct\ts_pre\ts_post");
    ASSERT_NE(header, rows.end());
    const auto regions = load_state(p("post")).state.regions.size();
    for (std::size_t i = 1; i <= regions; ++i) {
        const auto cells = detail::split(*(header + static_cast<std::ptrdiff_t>(i)), "\t");
        ASSERT_EQ(cells.size(), 6u);
        for (const auto& c : cells) EXPECT_FALSE(c.empty());
    }
    EXPECT_NE(r.out.find("delta_norm"), std::string::npos);
}
