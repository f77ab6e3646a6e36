#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "support.hpp"
#include "szero/container.hpp"
#include "szero/eval.hpp"

using namespace szero;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kWork = fs::temp_directory_path() / "szero_cli";

int run(const std::string& args) {
    const std::string cmd = std::string(SZERO_CLI) + " " + args + " >>" + (kWork / "log.txt").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json read_json(const fs::path& p) {
    std::ifstream in(p);
    return json::parse(in);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string path(const std::string& name) { return (kWork / name).string(); }

class Cli : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        fs::remove_all(kWork);
        fs::create_directories(kWork);
        // Identity model on two features plus samples covering a correct
        // point, a flippable point and a misclassified one.
        save_model(make_linear({{1, 0}, {0, 1}}, {0, 0}), kWork / "toy.szm");
        std::ofstream(kWork / "toy.csv") << "x0,x1,label\n1,0,0\n0.6,0.2,0\n0.2,0.9,0\n0.1,0.7,1\n";
    }
};

}  // namespace

TEST_F(Cli, UsageErrors) {
    EXPECT_EQ(run(""), 1);
    EXPECT_EQ(run("--help"), 0);
    EXPECT_EQ(run("attack --bogus"), 1);
    EXPECT_EQ(run("attack --model " + path("toy.szm") + " --data " + path("toy.csv") +
                  " --attack random-sparse --out " + path("rs")),
              1);
    EXPECT_EQ(run("attack --model " + path("toy.szm") + " --data " + path("toy.csv") +
                  " --budget-k -3 --out " + path("neg")),
              1);
    EXPECT_EQ(run("attack --model " + path("toy.szm") + " --data " + path("toy.csv") +
                  " --tau0 2 --out " + path("tau")),
              1);
    EXPECT_EQ(run("synth --kind blobs --out " + path("blobs")), 1);
}

TEST_F(Cli, DataErrors) {
    EXPECT_EQ(run("attack --model " + path("missing.szm") + " --data " + path("toy.csv") + " --out " + path("m")), 2);
    std::ofstream(kWork / "junk.szm") << "XXXXjunkjunk";
    EXPECT_EQ(run("attack --model " + path("junk.szm") + " --data " + path("toy.csv") + " --out " + path("j")), 2);
}

TEST_F(Cli, AttackWritesReportAndManifest) {
    ASSERT_EQ(run("attack --model " + path("toy.szm") + " --data " + path("toy.csv") + " --k-grid 1,2 --svg --out " +
                  path("a1")),
              0);
    const json m = read_json(kWork / "a1" / "manifest.json");
    EXPECT_EQ(m.at("subcommand"), "attack");
    EXPECT_EQ(m.at("flags").at("eta0"), 1.0);
    EXPECT_EQ(m.at("flags").at("sigma"), 1e-3);
    EXPECT_EQ(m.at("flags").at("tau0"), 0.3);
    EXPECT_EQ(m.at("flags").at("t"), 0.01);
    EXPECT_EQ(m.at("flags").at("steps"), 1000);
    EXPECT_TRUE(m.contains("tool_version"));
    EXPECT_EQ(m.at("model_sha256").get<std::string>().size(), 64u);

    const EvalReport r = read_report(kWork / "a1" / "report.json");
    ASSERT_EQ(r.per_sample.size(), 4u);
    EXPECT_EQ(r.per_sample[0].l0, 2u);
    EXPECT_EQ(r.per_sample[1].l0, 1u);
    EXPECT_EQ(r.per_sample[2].l0, 0u);
    EXPECT_TRUE(r.per_sample[2].clean_correct == false);
    EXPECT_EQ(r.per_sample[3].l0, 1u);
    EXPECT_EQ(slurp(kWork / "a1" / "curve.csv").substr(0, 6), "k,asr\n");
    EXPECT_TRUE(fs::exists(kWork / "a1" / "curve.svg"));
    EXPECT_EQ(run("audit --report " + path("a1/report.json")), 0);
    EXPECT_EQ(run("curve --report " + path("a1/report.json") + " --out " + path("c1")), 0);
    EXPECT_EQ(slurp(kWork / "c1" / "curve.csv"), slurp(kWork / "a1" / "curve.csv"));
}

TEST_F(Cli, AuditDetectsTampering) {
    ASSERT_EQ(run("attack --model " + path("toy.szm") + " --data " + path("toy.csv") + " --steps 50 --out " +
                  path("a2")),
              0);
    json j = read_json(kWork / "a2" / "report.json");
    j["samples"][0]["forwards"] = j["samples"][0]["forwards"].get<int>() + 1;
    std::ofstream(kWork / "tampered.json") << j.dump();
    EXPECT_EQ(run("audit --report " + path("tampered.json")), 3);
}

TEST_F(Cli, DeterministicReruns) {
    const std::string args = "attack --model " + path("toy.szm") + " --data " + path("toy.csv") + " --steps 200";
    ASSERT_EQ(run(args + " --out " + path("d1")), 0);
    ASSERT_EQ(run(args + " --workers 3 --out " + path("d2")), 0);
    EXPECT_EQ(without_runtime(read_json(kWork / "d1" / "report.json")),
              without_runtime(read_json(kWork / "d2" / "report.json")));
}

TEST_F(Cli, OracleDominanceAndForgery) {
    ASSERT_EQ(run("oracle --model " + path("toy.szm") + " --data " + path("toy.csv") + " --out " + path("o1")), 0);
    const json cert = read_json(kWork / "o1" / "certification.json");
    ASSERT_EQ(cert.at("samples").size(), 4u);
    EXPECT_EQ(cert["samples"][0]["k_min"], 2);
    EXPECT_EQ(cert["samples"][0]["l0_star"], 2);
    EXPECT_EQ(cert["samples"][2]["k_min"], 0);
    EXPECT_EQ(cert["samples"][2]["l0_star"], 0);
    EXPECT_EQ(run("oracle --check " + path("o1/certification.json")), 0);
    json forged = cert;
    forged["samples"][0]["l0_star"] = 1;
    std::ofstream(kWork / "forged.json") << forged.dump();
    EXPECT_EQ(run("oracle --check " + path("forged.json")), 3);
}

TEST_F(Cli, SweepGrid) {
    ASSERT_EQ(run("sweep --model " + path("toy.szm") + " --data " + path("toy.csv") +
                  " --steps 100 --sigma 1e-3,1 --tau0 0.1,0.3 --out " + path("sw")),
              0);
    for (int i = 0; i < 4; ++i) {
        EXPECT_TRUE(fs::exists(kWork / "sw" / ("report_cell_00" + std::to_string(i) + ".json")));
    }
    const std::string summary = slurp(kWork / "sw" / "summary.csv");
    EXPECT_EQ(std::count(summary.begin(), summary.end(), '\n'), 5);
    EXPECT_NE(summary.find(",default,"), std::string::npos);
    EXPECT_NE(summary.find(",l0-robust,"), std::string::npos);
    EXPECT_EQ(run("sweep --model " + path("toy.szm") + " --data " + path("toy.csv") +
                  " --sigma 1,2,3,4,5,6 --tau0 0.1,0.2,0.3,0.4,0.5,0.6 --t 0,0.1,0.2,0.3,0.4,0.5 --out " +
                  path("sw2")),
              1);
}

TEST_F(Cli, SynthTrainAttack) {
    ASSERT_EQ(run("synth --kind two_gaussians --n 200 --seed 4 --out " + path("s")), 0);
    ASSERT_EQ(run("train --data " + path("s/data.csv") + " --arch linear:2-2 --epochs 20 --lr 0.1 --out " + path("t")),
              0);
    EXPECT_GE(read_json(kWork / "t" / "training.json").at("train_accuracy").get<double>(), 0.99);
    EXPECT_EQ(run("attack --model " + path("t/model.szm") + " --data " + path("s/data.csv") +
                  " --n 20 --correct-only --steps 200 --out " + path("sa")),
              0);
    EXPECT_EQ(read_report(kWork / "sa" / "report.json").asr_inf, 1.0);
}

// Desk MNIST model through the CLI: removing the projection inflates the
// median l0 by at least 5x.
TEST_F(Cli, NoProjectionInflatesMedian) {
    const std::string data = test::data_dir();
    ASSERT_EQ(run("train --data " + data + "/train-images-idx3-ubyte --test-data " + data +
                  "/test-images-idx3-ubyte --out " + path("mnist")),
              0);
    const std::string attack = "attack --model " + path("mnist/model.szm") + " --data " + data +
                               "/test-images-idx3-ubyte --n 30 --correct-only --out ";
    ASSERT_EQ(run(attack + path("full")), 0);
    ASSERT_EQ(run(attack + path("noproj") + " --no-projection"), 0);
    const auto full = read_report(kWork / "full" / "report.json").median_l0;
    const auto noproj = read_report(kWork / "noproj" / "report.json").median_l0;
    ASSERT_TRUE(full);
    EXPECT_TRUE(!noproj || *noproj >= 5 * *full) << *full << " vs " << (noproj ? *noproj : 0);
}
