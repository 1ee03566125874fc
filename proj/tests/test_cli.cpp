// Exit-code contract of the hydro binary: 0 success, 2 config error,
// 3 data error. The binary path arrives via the HYDRO_CLI environment
// variable (set by ctest).

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("hydro_cli_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string cli_path() {
  const char* env = std::getenv("HYDRO_CLI");
  REQUIRE_MESSAGE(env != nullptr, "HYDRO_CLI must point at the binary");
  return env;
}

int run(const std::string& args) {
  const std::string command = cli_path() + " " + args + " >/dev/null 2>&1";
  const int status = std::system(command.c_str());
  REQUIRE(status != -1);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("success paths exit 0") {
  TempDir dir;
  CHECK(run("synth --out " + (dir.path / "data").string() +
            " --catchments 4 --days 30 --seed 1") == 0);
  CHECK(run("ingest " + (dir.path / "data").string() + " --validate") == 0);
}

TEST_CASE("config errors exit 2") {
  TempDir dir;
  CHECK(run("train --config " + (dir.path / "missing.json").string() +
            " --out " + (dir.path / "run").string()) == 2);

  std::ofstream(dir.path / "bad.json")
      << R"({"data": {"path": "x"}, "features": ["precipitation"],)"
      << R"( "targets": ["streamflow"], "learning_rate": 0.1})";
  CHECK(run("train --config " + (dir.path / "bad.json").string() + " --out " +
            (dir.path / "run").string()) == 2);

  CHECK(run("nonsense-subcommand") == 2);
}

TEST_CASE("data errors exit 3") {
  TempDir dir;
  CHECK(run("ingest " + (dir.path / "nothing-here").string()) == 3);

  // synth refuses a non-empty target directory
  fs::create_directories(dir.path / "occupied");
  std::ofstream(dir.path / "occupied" / "file.txt") << "x";
  CHECK(run("synth --out " + (dir.path / "occupied").string()) == 3);

  // train over a dataset that lacks a configured feature
  CHECK(run("synth --out " + (dir.path / "data").string() +
            " --catchments 5 --days 40 --seed 1") == 0);
  std::ofstream(dir.path / "cfg.json") << R"({
    "data": {"path": ")" << (dir.path / "data").string() << R"("},
    "features": ["no_such_series"],
    "targets": ["streamflow"],
    "l_seq": 7, "successful_epochs": 1,
    "encoder_size": 4, "hidden_size": 4
  })";
  CHECK(run("train --config " + (dir.path / "cfg.json").string() + " --out " +
            (dir.path / "run").string()) == 3);
}
