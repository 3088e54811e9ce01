#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("sci_cli_" + name);
  fs::create_directories(d);
  return d;
}

int run(const std::string& args, const fs::path& err = "/dev/null") {
  const std::string cmd = std::string(SCI_CLI_PATH) + " " + args + " >/dev/null 2>" + err.string();
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cli, ExitCodes) {
  const fs::path d = scratch("exit");
  EXPECT_EQ(run("solve --fcidump " + (d / "absent.fcidump").string(), d / "err.txt"), 3);
  const std::string err = slurp(d / "err.txt");
  EXPECT_NE(err.find("absent.fcidump"), std::string::npos);
  EXPECT_EQ(std::count(err.begin(), err.end(), '\n'), 1);
  EXPECT_EQ(run("solve --no-such-flag"), 2);
  EXPECT_EQ(run("frobnicate"), 2);

  ASSERT_EQ(run("gen-fixture --seed 4 --m 10 --n 4 --out " + (d / "f.fcidump").string()), 0);
  EXPECT_EQ(run("solve --fcidump " + (d / "f.fcidump").string() + " --budget-mb 0.001"), 4);
  EXPECT_EQ(run("solve --fcidump " + (d / "f.fcidump").string() + " --topk 5 --tol 1e-6 --report " +
                (d / "r.json").string()),
            0);
  EXPECT_NE(slurp(d / "r.json").find("\"schema\": 1"), std::string::npos);
  EXPECT_EQ(run("fci --fcidump " + (d / "f.fcidump").string()), 0);
  EXPECT_EQ(run("dedup-bench --ranks 4 --keys 10000 --dist zipf:1.1"), 0);
  EXPECT_EQ(run("dedup-bench --dist gaussian"), 2);
  fs::remove_all(d);
}

TEST(Cli, FixtureIsDeterministic) {
  const fs::path d = scratch("fixture");
  ASSERT_EQ(run("gen-fixture --seed 9 --m 12 --n 6 --density 0.3 --out " + (d / "a").string()), 0);
  ASSERT_EQ(run("gen-fixture --seed 9 --m 12 --n 6 --density 0.3 --out " + (d / "b").string()), 0);
  EXPECT_EQ(slurp(d / "a"), slurp(d / "b"));
  EXPECT_EQ(run("tables --fcidump " + (d / "a").string()), 0);
  fs::remove_all(d);
}
