#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "stochdyn/cli.hpp"
#include "stochdyn/sardine.hpp"

using namespace stochdyn;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kData(STOCHDYN_DATA_DIR);

struct Result {
  int code;
  std::string out, err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err, [] { return std::string("2000-01-01T00:00:00Z"); });
  return {code, out.str(), err.str()};
}

fs::path work(const std::string& name) {
  const fs::path dir = fs::path(STOCHDYN_WORK_DIR) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::string> simulate_args(const std::string& seed) {
  return {"simulate", "--model", "ou", "--alpha", "0.5", "--sigma", "0.3", "--steps", "50", "--seed", seed};
}

}  // namespace

TEST(Cli, FitSardineMatchesLibrary) {
  const Result r = run({"fit-sardine", "--table", (kData / "table3.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  const SardineFit f = fit_sardine(load_sardine_table(kData / "table3.csv"));
  ASSERT_EQ(j.at("r").size(), static_cast<std::size_t>(f.r.size()));
  EXPECT_EQ(j.at("r")[0].get<double>(), 1.0);
  for (Eigen::Index k = 0; k < f.p_star.size(); ++k) EXPECT_EQ(j.at("p_star")[k].get<double>(), f.p_star(k));
  EXPECT_EQ(j.at("rss").get<double>(), f.rss);
}

TEST(Cli, UsageErrorsExitTwo) {
  for (const auto& args : std::vector<std::vector<std::string>>{
           {"no-such-command"}, {}, {"simulate", "--model", "ou"}, {"simulate", "--steps", "abc", "--seed", "1"}}) {
    const Result r = run(args);
    EXPECT_EQ(r.code, 2);
    const json e = json::parse(r.err);
    EXPECT_EQ(e.at("error"), "usage_error");
    EXPECT_TRUE(r.out.empty());
  }
}

TEST(Cli, DataErrorIsJsonOnStderr) {
  const Result r = run({"fit-sardine", "--table", (kData / "missing.csv").string()});
  EXPECT_EQ(r.code, 1);
  const json e = json::parse(r.err);
  EXPECT_TRUE(e.contains("error"));
  EXPECT_TRUE(e.contains("message"));
}

TEST(Cli, SimulateIsDeterministic) {
  const Result a = run(simulate_args("11")), b = run(simulate_args("11")), c = run(simulate_args("12"));
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out, c.out);
  // header, start point and 50 steps
  EXPECT_EQ(std::count(a.out.begin(), a.out.end(), '\n'), 52);
}

TEST(Cli, ReplayReproducesBytes) {
  const fs::path dir = work("replay");
  std::vector<std::string> args = simulate_args("21");
  args.insert(args.end(), {"--out", (dir / "a.csv").string()});
  ASSERT_EQ(run(args).code, 0);
  const Result r = run({"replay", "--manifest", (dir / "a.csv.manifest.json").string(), "--out",
                        (dir / "b.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
  const json m = json::parse(slurp(dir / "a.csv.manifest.json"));
  EXPECT_EQ(m.at("seed"), 21);
  EXPECT_EQ(m.at("timestamp"), "2000-01-01T00:00:00Z");
  EXPECT_EQ(m.at("outputs").at((dir / "a.csv").string()), cli::file_hash((dir / "a.csv").string()));
}

TEST(Cli, ReplayNoticesChangedInput) {
  const fs::path dir = work("changed");
  fs::copy_file(kData / "table3.csv", dir / "t.csv");
  ASSERT_EQ(run({"fit-sardine", "--table", (dir / "t.csv").string(), "--out", (dir / "fit.json").string()}).code, 0);
  std::ofstream(dir / "t.csv", std::ios::app) << "9,1,1,1,1,1\n";
  const Result r = run({"replay", "--manifest", (dir / "fit.json.manifest.json").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(json::parse(r.err).at("error"), "data_error");
}

TEST(Cli, NoManifestWithoutOutput) {
  const fs::path dir = work("nomanifest");
  const fs::path before = fs::current_path();
  fs::current_path(dir);
  run(simulate_args("3"));
  fs::current_path(before);
  EXPECT_TRUE(fs::is_empty(dir));
}

TEST(Cli, ConfigMergeFlagsWin) {
  const fs::path dir = work("config");
  std::ofstream(dir / "c.json") << R"({"steps": 7, "seed": 4, "model": "ou", "sigma": 0.2})";
  const Result merged = run({"simulate", "--config", (dir / "c.json").string(), "--steps", "3"});
  ASSERT_EQ(merged.code, 0) << merged.err;
  const Result flags = run({"simulate", "--model", "ou", "--sigma", "0.2", "--seed", "4", "--steps", "3"});
  EXPECT_EQ(merged.out, flags.out);
  std::ofstream(dir / "bad.json") << "[1, 2]";
  EXPECT_EQ(run({"simulate", "--config", (dir / "bad.json").string()}).code, 1);
}

TEST(Cli, PotentialEvalAlias) {
  const std::string spec = (kData / "seal_potential.json").string();
  const Result a = run({"potential", "eval", "--potential", spec, "--at", "60,40"});
  const Result b = run({"potential-eval", "--potential", spec, "--at", "60,40"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out.rfind("x,y,H,gx,gy\n", 0), 0u);
}

TEST(Cli, ClusterPlateIndependentOfWorkers) {
  std::vector<std::string> args{"cluster-plate", "--lambda", "1", "--m", "8", "--rho", "0.15", "--two-stage",
                                "--lambda2", "0.1", "--m2", "10", "--rho2", "0.6", "--seed", "9"};
  auto one = args, four = args;
  one.insert(one.end(), {"--workers", "1"});
  four.insert(four.end(), {"--workers", "4"});
  const Result a = run(one), b = run(four);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
}

TEST(Cli, FileHashFnv1a) {
  const fs::path dir = work("hash");
  std::ofstream(dir / "empty").close();
  std::ofstream(dir / "a") << "a";
  EXPECT_EQ(cli::file_hash((dir / "empty").string()), "cbf29ce484222325");
  EXPECT_EQ(cli::file_hash((dir / "a").string()), "af63dc4c8601ec8c");
}
