#include <sgain_cli/cli.hpp>

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "sgain");
  std::ostringstream out, err;
  const int code = sgain::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("sgain_cli_test_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST(Cli, CheckExitCodes) {
  EXPECT_EQ(run({"check", "--builtin", "remark4"}).code, sgain::cli::kNotCertified);
  EXPECT_EQ(run({"check", "--builtin", "remark4", "--method", "chain", "--lambda", "1", "--rho1", "3"}).code,
            sgain::cli::kOk);
  EXPECT_EQ(run({"check", "--builtin", "goodwin"}).code, sgain::cli::kOk);
  EXPECT_EQ(run({"check", "--builtin", "nonexistent"}).code, sgain::cli::kError);
  EXPECT_EQ(run({"check"}).code, sgain::cli::kError);
  EXPECT_EQ(run({}).code, sgain::cli::kError);
}

TEST(Cli, CheckWritesCertificate) {
  const auto dir = fresh_dir("check");
  const auto r = run({"check", "--builtin", "remark4", "--method", "chain", "--lambda", "1", "--rho1", "3", "--out",
                      dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto text = slurp(dir / "certificate.json");
  EXPECT_NE(text.find("886231/290304"), std::string::npos);
  EXPECT_NE(r.out.find("\"verdict\""), std::string::npos);
  fs::remove_all(dir);
}

TEST(Cli, InvalidArguments) {
  const auto r = run({"simulate", "--builtin", "goodwin", "--window", "0"});
  EXPECT_EQ(r.code, sgain::cli::kError);
  EXPECT_FALSE(r.err.empty());
  EXPECT_EQ(run({"simulate", "--builtin", "goodwin", "--dt", "-1"}).code, sgain::cli::kError);
  EXPECT_EQ(run({"simulate", "--builtin", "goodwin", "--format", "xml"}).code, sgain::cli::kError);
  EXPECT_EQ(run({"check", "--builtin", "goodwin", "--param", "K=1"}).code, sgain::cli::kError);
}

TEST(Cli, EquilibriumRefusesUncertifiedModel) {
  const auto r = run({"equilibrium", "--builtin", "remark4", "--ensemble", "1", "--window", "5", "--dt", "1e-2"});
  EXPECT_EQ(r.code, sgain::cli::kRefused);
}

TEST(Cli, SimulateWritesOneFilePerPathAndIsReproducible) {
  const auto a = fresh_dir("sim_a");
  const auto b = fresh_dir("sim_b");
  const std::vector<std::string> common{"simulate", "--builtin", "goodwin", "--ensemble", "4", "--horizon", "2",
                                        "--dt", "1e-2", "--seed", "7"};
  auto args_a = common;
  args_a.insert(args_a.end(), {"--out", a.string(), "--threads", "2"});
  auto args_b = common;
  args_b.insert(args_b.end(), {"--out", b.string(), "--threads", "1"});
  ASSERT_EQ(run(args_a).code, 0);
  ASSERT_EQ(run(args_b).code, 0);
  for (int p = 0; p < 4; ++p) {
    char name[32];
    std::snprintf(name, sizeof name, "path_%04d.csv", p);
    ASSERT_TRUE(fs::exists(a / name)) << name;
    const auto text = slurp(a / name);
    EXPECT_EQ(text.rfind("t,x_1,x_2,x_3\n", 0), 0U);
    EXPECT_EQ(text, slurp(b / name)) << name;
  }
  EXPECT_FALSE(fs::exists(a / "path_0004.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Cli, EquilibriumOnCertifiedModel) {
  const auto dir = fresh_dir("eq");
  const auto r = run({"equilibrium", "--builtin", "goodwin", "--ensemble", "2", "--window", "20", "--dt", "1e-2",
                      "--tol", "1e-10", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "equilibrium.json"));
  EXPECT_TRUE(fs::exists(dir / "residuals.svg"));
  EXPECT_TRUE(fs::exists(dir / "pullback.svg"));
  fs::remove_all(dir);
}

TEST(Cli, LyapunovReportsMaoBound) {
  const auto r = run({"lyapunov", "--builtin", "example45", "--ensemble", "2", "--horizon", "5", "--dt", "1e-2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("-5/8"), std::string::npos) << r.out;
}

TEST(Cli, ExecutableMatchesLibraryEntryPoint) {
  const auto dir = fresh_dir("exe");
  fs::create_directories(dir);
  const std::string cmd = std::string(SGAIN_EXECUTABLE) + " check --builtin remark4 > " + (dir / "out.json").string();
  const int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), sgain::cli::kNotCertified);
  EXPECT_EQ(slurp(dir / "out.json"), run({"check", "--builtin", "remark4"}).out);
  fs::remove_all(dir);
}
