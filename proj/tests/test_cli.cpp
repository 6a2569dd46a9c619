#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <iterator>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  const fs::path p = fs::temp_directory_path() / "uamcm_cli_test";
  return p;
}

int run(const std::string& args) {
  const std::string cmd = fmt::format("\"{}\" {} > /dev/null 2>&1", UAMCM_PATH, args);
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Every file in `a` exists in `b` with identical bytes, and vice versa.
void same_tree(const fs::path& a, const fs::path& b) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    const fs::path other = b / e.path().filename();
    REQUIRE(fs::exists(other));
    CHECK_MESSAGE(slurp(e.path()) == slurp(other), e.path().filename().string());
    ++n;
  }
  CHECK(static_cast<std::size_t>(std::distance(fs::directory_iterator(b), fs::directory_iterator{})) == n);
}

}  // namespace

TEST_CASE("manifest reruns reproduce outputs byte for byte") {
  const fs::path root = scratch();
  fs::remove_all(root);
  const std::vector<std::string> commands{
      "montecarlo --runs 3 --strategic heuristic --tactical rule --capacity 2",
      "simulate --tactical rule --seed 5",
      "train --episodes 40 --seed 2",
      "dcb --capacity 1 --seed 3",
      "equilibria",
  };
  for (std::size_t k = 0; k < commands.size(); ++k) {
    const fs::path a = root / fmt::format("{}a", k), b = root / fmt::format("{}b", k);
    REQUIRE(run(fmt::format("{} --out {}", commands[k], a.string())) == 0);
    const bool threaded = commands[k].rfind("montecarlo", 0) == 0 || commands[k].rfind("train", 0) == 0;
    const std::string workers = threaded ? " --workers 3" : "";
    const std::string sub = commands[k].substr(0, commands[k].find(' '));
    REQUIRE(run(fmt::format("{} --config {} --out {}{}", sub, (a / "manifest.json").string(), b.string(), workers)) == 0);
    same_tree(a, b);
  }
  fs::remove_all(root);
}

TEST_CASE("bad input exits with a usage status") {
  const fs::path root = scratch() / "bad";
  fs::remove_all(root);
  CHECK(run(fmt::format("montecarlo --runs 0 --out {}", root.string())) == 2);
  CHECK(run(fmt::format("simulate --tactical fly --out {}", root.string())) == 2);
  CHECK(run(fmt::format("simulate --tactical policy --out {}", root.string())) == 2);
  fs::create_directories(root);
  std::ofstream(root / "bad.json") << R"({"nodes": [], "routes": [], "warp": 1})";
  CHECK(run(fmt::format("simulate --scenario {} --out {}", (root / "bad.json").string(), root.string())) == 2);
  fs::remove_all(scratch());
}
