#include "opfa/data_model.hpp"

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#ifndef OPFA_CLI_PATH
#error "OPFA_CLI_PATH must name the opfa executable"
#endif

namespace fs = std::filesystem;

namespace {

struct Workspace {
  fs::path root;
  Workspace() : root(fs::temp_directory_path() / "opfa_cli_test") {
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Workspace() { fs::remove_all(root); }
  fs::path operator/(const std::string& name) const { return root / name; }
};

int run(const std::string& args) {
  const std::string cmd = std::string(OPFA_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) ++n;
  return n;
}

const char* kSim = R"({"S":3,"n":10,"p":8,"f":2,"d_max":2,"sigma_d2":0.5,"sigma_eps2":0.01,"seed":4})";
const char* kModel = R"({"f":2,"d_max":2,"restarts":1,"max_outer_iters":50})";

}  // namespace

TEST_CASE("simulate is byte-identical for a fixed seed") {
  Workspace ws;
  write_text(ws / "sim.json", kSim);
  REQUIRE(run("simulate --config " + (ws / "sim.json").string() + " --out " + (ws / "a").string()) == 0);
  REQUIRE(run("simulate --config " + (ws / "sim.json").string() + " --out " + (ws / "b").string()) == 0);
  int files = 0;
  for (const auto& e : fs::recursive_directory_iterator(ws / "a")) {
    if (!e.is_regular_file()) continue;
    ++files;
    const fs::path other = ws / "b" / fs::relative(e.path(), ws / "a");
    CHECK(slurp(e.path()) == slurp(other));
  }
  CHECK(files > 5);
  CHECK(fs::exists(ws / "a" / "truth" / "factors.csv"));
  REQUIRE(run("--seed 5 simulate --config " + (ws / "sim.json").string() + " --out " + (ws / "c").string()) == 0);
  CHECK(slurp(ws / "a" / "X_s0.csv") != slurp(ws / "c" / "X_s0.csv"));
}

TEST_CASE("fit writes the model and reports convergence in the exit code") {
  Workspace ws;
  write_text(ws / "sim.json", kSim);
  write_text(ws / "model.json", kModel);
  REQUIRE(run("simulate --config " + (ws / "sim.json").string() + " --out " + (ws / "data").string()) == 0);
  const std::string data = " --data " + (ws / "data" / "manifest.json").string();
  const std::string cfg = " --config " + (ws / "model.json").string();

  CHECK(run("fit" + data + cfg + " --out " + (ws / "fit").string()) == 0);
  const auto loaded = opfa::read_fit(ws / "fit");
  CHECK(loaded.fit.factors.rows() == 12);
  CHECK(loaded.fit.factors.cols() == 2);
  CHECK(fs::exists(ws / "fit" / "scores_s2.csv"));

  CHECK(run("fit" + data + cfg + " --variant opfa-c --out " + (ws / "fitc").string()) == 0);
  CHECK(fs::exists(ws / "fitc" / "scores.csv"));
  CHECK_FALSE(fs::exists(ws / "fitc" / "scores_s0.csv"));

  write_text(ws / "short.json", R"({"f":2,"d_max":2,"restarts":1,"max_outer_iters":1})");
  CHECK(run("fit" + data + " --config " + (ws / "short.json").string() + " --out " + (ws / "short").string()) == 2);
  CHECK(fs::exists(ws / "short" / "factors.csv"));

  CHECK(run("fit --data " + (ws / "nope.json").string() + " --out " + (ws / "x").string()) == 1);
  CHECK(run("fit" + data) == 1);
  CHECK(run("") == 1);
}

TEST_CASE("cv writes a table, both models and the selected row") {
  Workspace ws;
  write_text(ws / "sim.json", kSim);
  write_text(ws / "model.json", kModel);
  write_text(ws / "grid.json", R"({"f":[1,2],"lambda":[0.0,0.1],"beta":[0.0]})");
  REQUIRE(run("simulate --config " + (ws / "sim.json").string() + " --out " + (ws / "data").string()) == 0);
  const int code = run("cv --data " + (ws / "data" / "manifest.json").string() + " --config " +
                       (ws / "model.json").string() + " --grid " + (ws / "grid.json").string() + " --out " +
                       (ws / "cv").string());
  CHECK((code == 0 || code == 2));
  CHECK(count_lines(ws / "cv" / "cv_table.csv") == 5);
  CHECK(fs::exists(ws / "cv" / "cv_model" / "fit.json"));
  CHECK(fs::exists(ws / "cv" / "refit" / "fit.json"));

  write_text(ws / "badgrid.json", R"({"f":[0]})");
  CHECK(run("cv --data " + (ws / "data" / "manifest.json").string() + " --grid " + (ws / "badgrid.json").string() +
            " --out " + (ws / "cv2").string()) == 1);
}

TEST_CASE("bench writes one row per grid point, trial and model") {
  Workspace ws;
  write_text(ws / "sweep.json",
             R"({"axis":"sigma_d2","values":[1.0],"trials":2,"models":["opfa","sfa"],
                 "synthetic":{"S":3,"n":8,"p":6,"d_max":2,"snr_db":10},
                 "model":{"restarts":1,"max_outer_iters":20}})");
  REQUIRE(run("bench --sweep " + (ws / "sweep.json").string() + " --out " + (ws / "bench").string()) == 0);
  CHECK(count_lines(ws / "bench" / "results.csv") == 5);
  CHECK(count_lines(ws / "bench" / "summary.csv") == 3);
  const std::string svg = slurp(ws / "bench" / "dtf.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(fs::exists(ws / "bench" / "mse.svg"));
}

TEST_CASE("align applies the onset arithmetic") {
  Workspace ws;
  opfa::OpfaFit fit;
  fit.config.f = 1;
  fit.config.d_max = 3;
  fit.config.window_start = 2;
  fit.factors = opfa::Matrix::Ones(24, 1);
  fit.scores = {opfa::Matrix::Ones(1, 2), opfa::Matrix::Ones(1, 2)};
  fit.delays = {opfa::DelayVector{3}, opfa::DelayVector{0}};
  fit.objective_trace = {1.0};
  opfa::write_fit(fit, {"a", "b"}, ws / "fit");
  REQUIRE(run("align --fit " + (ws / "fit").string() + " --t-i 5 --factor 0 --out " + (ws / "on.csv").string()) ==
          0);
  CHECK(slurp(ws / "on.csv") == "subject,factor_0\na,6\nb,3\n");
  CHECK(run("align --fit " + (ws / "fit").string() + " --t-i 5 --factor 4 --out " + (ws / "x.csv").string()) == 1);
}
