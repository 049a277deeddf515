#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "hems_cli_test";

// Desk config with absolute paths plus extra lines.
fs::path write_config(const std::string& name, const std::string& extra) {
  fs::create_directories(kWork);
  std::ifstream in(HEMS_CONFIG_DIR "/desk.conf");
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  const std::string data = "../data";
  for (auto p = text.find(data); p != std::string::npos; p = text.find(data, p + 1)) {
    text.replace(p, data.size(), std::string(HEMS_DATA_DIR));
  }
  const std::string runs = "../runs";
  if (auto p = text.find(runs); p != std::string::npos) text.replace(p, runs.size(), (kWork / "runs").string());
  const auto path = kWork / name;
  std::ofstream(path) << text << '\n' << extra;
  return path;
}

int run(const std::string& args) {
  const std::string cmd = std::string(HEMS_CLI) + " " + args + " > /dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

}  // namespace

TEST_CASE("unknown config key exits 2") {
  CHECK(run("optimize --config " + write_config("bad.conf", "horizon.bogus = 1\n").string()) == 2);
}

TEST_CASE("bad command line exits 2") { CHECK(run("optimize --mode sideways") == 2); }

TEST_CASE("too few fuel samples exits 3") {
  fs::create_directories(kWork);
  const auto fuel = kWork / "short.csv";
  std::ofstream(fuel) << "p_kw,mdot\n10,1e-3\n20,2e-3\n";
  CHECK(run("fit --config " + write_config("fit.conf", "").string() + " --fuel-curve " + fuel.string()) == 3);
}

TEST_CASE("unreachable terminal window exits 4") {
  const auto cfg = write_config("inf.conf", "horizon.soc_final_min = 88\nhorizon.soc_final_max = 90\n");
  CHECK(run("optimize --config " + cfg.string()) == 4);
}

TEST_CASE("limit without incumbent exits 5") {
  const auto cfg =
      write_config("lim.conf", "solver.time_limit = 1e-9\nsolver.heuristics = false\nmpc.group_hint = false\n");
  CHECK(run("optimize --mode csc --config " + cfg.string()) == 5);
}

TEST_CASE("a normal fit exits 0") {
  CHECK(run("fit --config " + write_config("ok.conf", "").string() + " --out " + (kWork / "fit").string()) == 0);
  CHECK(fs::exists(kWork / "fit"));
}
