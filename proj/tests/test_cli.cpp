#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "lmcf/cli.hpp"

using namespace lmcf;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("lmcf_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CliArgs args(const std::string& verb, const fs::path& out, std::vector<std::string> overrides = {}) {
  CliArgs a;
  a.verb = verb;
  a.out = out.string();
  a.overrides = std::move(overrides);
  return a;
}

}  // namespace

TEST(Config, MinimalFlowConfigIsDefaulted) {
  const auto c = resolve_config(Json::parse(R"({"model":"hypcyl3","family":"geodesic_lift",
      "perturb":{"f":"cos_phi","s":0.05},"N":128,"t_max":6})"));
  EXPECT_EQ(c.exp.init.family, "hyperbolic_geodesic");
  EXPECT_EQ(c.exp.init.potential, "cos");
  EXPECT_DOUBLE_EQ(c.exp.cfl, 0.2);
  EXPECT_DOUBLE_EQ(c.exp.convergence_H, 1e-4);
  EXPECT_DOUBLE_EQ(c.exp.blowup_factor, 1e4);
  EXPECT_EQ(c.exp.resolution, std::vector<int>{128});
  EXPECT_FALSE(c.exp.dt.has_value());
  EXPECT_EQ(c.resolved.at("family"), "hyperbolic_geodesic");
}

TEST(Config, Overrides) {
  const auto c = resolve_config(Json::object(), {"dt_cfl=0.1", "perturb.s=0.2", "N=[16,16]", "model=sphere5"});
  EXPECT_DOUBLE_EQ(c.exp.cfl, 0.1);
  EXPECT_DOUBLE_EQ(c.exp.init.amplitude, 0.2);
  EXPECT_EQ(c.exp.init.family, "clifford_torus");
  EXPECT_EQ(c.exp.resolution, (std::vector<int>{16, 16}));
  EXPECT_EQ(resolve_config(Json::object(), {"model=sphere5", "N=8"}).exp.resolution, (std::vector<int>{8, 8}));
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(resolve_config(Json::parse(R"({"bogus":1})")), SchemaError);
  EXPECT_THROW(resolve_config(Json::parse(R"({"perturb":{"amp":1}})")), SchemaError);
  EXPECT_THROW(resolve_config(Json::parse(R"({"t_max":"six"})")), SchemaError);
  EXPECT_THROW(resolve_config(Json::parse(R"({"t_max":-1})")), SchemaError);
  EXPECT_THROW(resolve_config(Json::parse(R"({"N":[8,8]})")), SchemaError);
  EXPECT_THROW(resolve_config(Json::parse(R"({"perturb":{"f":"tan"}})")), SchemaError);
  EXPECT_THROW(resolve_config(Json::object(), {"noequals"}), SchemaError);
  EXPECT_THROW(resolve_config(Json::parse(R"({"model":"torus7"})")), UnknownModel);
  EXPECT_THROW(parse_config("/nonexistent/lmcf.json"), FileNotFound);
}

TEST(Cli, VerifySphere3Passes) {
  const auto out = scratch("verify");
  EXPECT_EQ(execute(args("verify", out, {"model=sphere3"})), 0);
  const std::string csv = slurp(out / "residuals.csv");
  EXPECT_NE(csv.find("ambient"), std::string::npos);
  EXPECT_NE(csv.find("simons"), std::string::npos);
  EXPECT_TRUE(fs::exists(out / "residuals.md"));
  EXPECT_TRUE(fs::exists(out / "manifest.json"));
}

TEST(Cli, GoldenFlowArtifacts) {
  const auto out = scratch("flow");
  EXPECT_EQ(execute(args("flow", out, {"N=64"})), 0);
  std::ifstream csv(out / "trajectory.csv");
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "t,vol,max_H,l2_H_sq,max_A_sq,lambda1,osc_alpha,mean_alpha,E_t,kappa,leg_residual");
  double prev = 1e300;
  int rows = 0;
  while (std::getline(csv, line)) {
    const double vol = std::stod(line.substr(line.find(',') + 1));
    EXPECT_LE(vol, prev + 1e-10);
    prev = vol;
    ++rows;
  }
  EXPECT_GT(rows, 100);
  const auto rep = Json::parse(slurp(out / "report.json"));
  EXPECT_EQ(rep.at("verdict"), "converged");
  EXPECT_NEAR(rep.at("fitted_rates").at("l2_H_sq").at("rate").get<double>(), -4.0, 0.5);
  const auto man = Json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(man.at("config").at("N"), 64);
  EXPECT_FALSE(man.at("code_version").get<std::string>().empty());
  for (const char* f : {"final_immersion.json", "nodes.csv", "eigenpairs.csv", "audit.csv"})
    EXPECT_TRUE(fs::exists(out / f)) << f;
}

TEST(Cli, RepeatedFlowIsByteIdentical) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  ASSERT_EQ(execute(args("flow", a, {"N=32", "t_max=0.5"})), 0);
  ASSERT_EQ(execute(args("flow", b, {"N=32", "t_max=0.5"})), 0);
  EXPECT_EQ(slurp(a / "trajectory.csv"), slurp(b / "trajectory.csv"));
}

TEST(Cli, StabilityOfGreatCircle) {
  const auto out = scratch("stab");
  EXPECT_EQ(execute(args("stability", out, {"model=sphere3", "perturb.s=0"})), 0);
  const auto j = Json::parse(slurp(out / "stability.json"));
  EXPECT_EQ(j.at("verdict"), "unstable");
  EXPECT_NEAR(j.at("lambda1").get<double>(), 1.0, 1e-4);
  EXPECT_DOUBLE_EQ(j.at("kplus2").get<double>(), 4.0);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(execute(args("flow", scratch("e1"), {"bogus=1"})), 1);
  EXPECT_EQ(execute(args("flow", scratch("e2"), {"perturb.s=5"})), 3);
  EXPECT_EQ(execute(args("flow", scratch("e3"), {"model=heisenberg3", "family=heisenberg_circle",
                                                  "central_quotient=true"})),
            3);
  EXPECT_EQ(execute(args("flow", scratch("e4"), {"dt=1"})), 2);
  EXPECT_EQ(execute(args("nonsense", scratch("e5"))), 1);
}

TEST(Cli, SweepIsDeterministicAcrossThreadCounts) {
  const auto a = scratch("sw1"), b = scratch("sw2");
  const std::vector<std::string> o{"sweep.s=[0.0,0.05]", "sweep.N=[32]", "t_max=0.3"};
  auto oa = o, ob = o;
  oa.push_back("sweep.threads=1");
  ob.push_back("sweep.threads=2");
  EXPECT_EQ(execute(args("sweep", a, oa)), 0);
  EXPECT_EQ(execute(args("sweep", b, ob)), 0);
  EXPECT_EQ(slurp(a / "sweep.csv"), slurp(b / "sweep.csv"));
}
