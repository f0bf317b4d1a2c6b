#include <nlohmann/json.hpp>

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kBin = BISHOP_CLI;
const std::string kFix = FIXTURE_DIR;

fs::path tmp(const std::string& name) { return fs::temp_directory_path() / ("bishop_cli_test_" + name); }

int run(const std::string& args) {
    int rc = std::system((kBin + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json report(const std::string& args, int* code) {
    auto out = tmp("report.json");
    fs::remove(out);
    *code = run("--out " + out.string() + " " + args);
    return json::parse(slurp(out));
}

fs::path write(const std::string& name, const std::string& body) {
    auto p = tmp(name);
    std::ofstream(p) << body;
    return p;
}

}  // namespace

TEST(Cli, ModelNormalizesToIdentity) {
    int code;
    auto r = report("normalize " + kFix + "/model.json", &code);
    EXPECT_EQ(code, 0);
    EXPECT_TRUE(r["pass"].get<bool>());
    EXPECT_TRUE(r["output"]["identity"].get<bool>());
    EXPECT_EQ(r["command"], "normalize");
}

TEST(Cli, CubicAndSegre) {
    int code;
    auto r = report("normalize " + kFix + "/cubic.json", &code);
    EXPECT_EQ(code, 0);
    EXPECT_FALSE(r["output"]["identity"].get<bool>());
    r = report("segre-normalize " + kFix + "/segre_cubic.json", &code);
    EXPECT_EQ(code, 0);
    r = report("segre-normalize " + kFix + "/cubic.json", &code);
    EXPECT_EQ(code, 0);
    EXPECT_TRUE(r["checks"]["conjugate_twins"].get<bool>());
}

TEST(Cli, Decompose) {
    int code;
    auto r = report("decompose " + kFix + "/decompose_z3.json", &code);
    EXPECT_EQ(code, 0);
    EXPECT_TRUE(r["checks"]["trace_C_zero"].get<bool>());
    EXPECT_EQ(run("--mode float decompose " + kFix + "/decompose_z3.json"), 0);
}

TEST(Cli, EmbeddingMaps) {
    int code;
    auto r = report("verify-map " + kFix + "/embedding.json", &code);
    EXPECT_EQ(code, 0);
    EXPECT_TRUE(r["checks"]["rigidity"].get<bool>());
    r = report("verify-map " + kFix + "/embedding_perturbed.json", &code);
    EXPECT_EQ(code, 1);
    EXPECT_FALSE(r["checks"]["residual_zero"].get<bool>());
}

TEST(Cli, MoserReportsEachItem) {
    int code;
    auto r = report("moser", &code);
    EXPECT_EQ(code, 1);
    EXPECT_TRUE(r["checks"]["schedule_ordered"].get<bool>());
    EXPECT_TRUE(r["checks"]["lemma_vanishes"].get<bool>());
    EXPECT_FALSE(r["checks"]["eps_below_1e-30"].get<bool>());
}

TEST(Cli, SmallBoundsScan) {
    auto in = write("bounds.json", R"({"N": [1], "pmax": 6})");
    int code;
    auto r = report("--grid-step 0.45 bounds " + in.string(), &code);
    EXPECT_EQ(code, 1);
    EXPECT_TRUE(r["checks"]["schur_N1"].get<bool>());
    EXPECT_FALSE(r["checks"]["mixed_N1"].get<bool>());
}

TEST(Cli, SeededRunsAreByteIdentical) {
    auto a = tmp("a.json"), b = tmp("b.json");
    EXPECT_EQ(run("--seed 7 --max-degree 5 --out " + a.string() + " normalize " + kFix + "/random_n2.json"), 0);
    EXPECT_EQ(run("--seed 7 --max-degree 5 --out " + b.string() + " normalize " + kFix + "/random_n2.json"), 0);
    EXPECT_EQ(slurp(a), slurp(b));
    EXPECT_FALSE(slurp(a).empty());
}

TEST(Cli, ParseErrors) {
    EXPECT_EQ(run("normalize " + write("bad.json", "{not json").string()), 2);
    EXPECT_EQ(run("normalize /nonexistent/file.json"), 2);
    EXPECT_EQ(run("--mode fuzzy normalize " + kFix + "/model.json"), 2);
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("normalize " + write("half.json", R"({"N":1,"lambda":["1/2"],"max_degree":4,"phi":[]})").string()), 2);
}

TEST(Cli, SingularSegreSystem) {
    auto in = write("half_segre.json", R"({"N":1,"lambda":["1/2"],"max_degree":4,
        "phi":[{"N":1,"degree":3,"kind":"conjugate","terms":[{"I":[3],"J":[0],"re":"1","im":"0"},{"I":[0],"J":[3],"re":"1","im":"0"}]}]})");
    int code;
    auto r = report("segre-normalize " + in.string(), &code);
    EXPECT_EQ(code, 3);
    EXPECT_TRUE(r.contains("error"));
}
