#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#ifndef SPICE_CLI_PATH
#error "SPICE_CLI_PATH must name the CLI binary"
#endif

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Workspace {
 public:
  Workspace() {
    std::random_device rd;
    dir_ = fs::temp_directory_path() / ("spice_cli_" + std::to_string(rd()));
    fs::create_directories(dir_);
  }
  ~Workspace() { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  Run run(const std::string& args) const {
    const std::string cmd = std::string("\"") + SPICE_CLI_PATH + "\" " + args + " > \"" +
                            path("stdout").string() + "\" 2> \"" + path("stderr").string() + "\"";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(path("stdout"));
    r.err = slurp(path("stderr"));
    return r;
  }

  // y = 1 + 2 x1 - x3 exactly.
  fs::path noiseless(const std::string& name, int rows, unsigned seed) const {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::ofstream f(path(name));
    f << "x1,x2,x3,y\n";
    for (int i = 0; i < rows; ++i) {
      const double a = normal(rng), b = normal(rng), c = normal(rng);
      f << a << ',' << b << ',' << c << ',' << 1.0 + 2.0 * a - c << '\n';
    }
    return path(name);
  }

 private:
  fs::path dir_;
};

double parse_field(const std::string& text, const std::string& key) {
  const auto pos = text.find(key + "=");
  REQUIRE(pos != std::string::npos);
  return std::stod(text.substr(pos + key.size() + 1));
}

}  // namespace

TEST_CASE("usage errors exit with 1") {
  Workspace ws;
  CHECK(ws.run("").code == 1);
  CHECK(ws.run("fit").code == 1);
  CHECK(ws.run("bogus").code == 1);
  CHECK(ws.run("--help").code == 0);
}

TEST_CASE("data errors exit with 2") {
  Workspace ws;
  {
    std::ofstream f(ws.path("empty.csv"));
    f << "x,y\n";
  }
  const Run r = ws.run("fit \"" + ws.path("empty.csv").string() + "\" --model \"" +
                       ws.path("m.json").string() + "\"");
  CHECK(r.code == 2);
  CHECK(r.err.find("no rows") != std::string::npos);
  CHECK(ws.run("fit \"" + ws.path("missing.csv").string() + "\" --model m.json").code == 2);
  {
    std::ofstream f(ws.path("bad.json"));
    f << "{\"version\": 99}";
  }
  CHECK(ws.run("predict \"" + ws.path("empty.csv").string() + "\" --model \"" +
               ws.path("bad.json").string() + "\"")
            .code == 2);
}

TEST_CASE("fit and predict on noiseless data") {
  Workspace ws;
  const auto train = ws.noiseless("train.csv", 400, 1);
  const auto test = ws.noiseless("test.csv", 50, 2);
  const auto model = ws.path("model.json");
  const Run fit = ws.run("fit \"" + train.string() + "\" --model \"" + model.string() + "\"");
  REQUIRE(fit.code == 0);
  CHECK(parse_field(fit.err, "n") == 400);
  const Run pred = ws.run("predict \"" + test.string() + "\" --model \"" + model.string() + "\"");
  REQUIRE(pred.code == 0);
  CHECK(pred.out.rfind("y_hat\n", 0) == 0);
  CHECK(std::count(pred.out.begin(), pred.out.end(), '\n') == 51);
  CHECK(parse_field(pred.err, "mse") < 1e-6);
}

TEST_CASE("resuming equals one pass") {
  Workspace ws;
  const auto all = ws.noiseless("all.csv", 60, 3);
  std::ifstream in(all);
  std::string line;
  std::ofstream first(ws.path("first.csv")), second(ws.path("second.csv"));
  for (int i = 0; std::getline(in, line); ++i) (i <= 30 ? first : second) << line << '\n';
  first.close();
  second.close();
  REQUIRE(ws.run("fit \"" + all.string() + "\" --model \"" + ws.path("one.json").string() + "\"").code == 0);
  REQUIRE(ws.run("fit \"" + ws.path("first.csv").string() + "\" --model \"" +
                 ws.path("half.json").string() + "\"")
              .code == 0);
  REQUIRE(ws.run("fit \"" + ws.path("second.csv").string() + "\" --resume \"" +
                 ws.path("half.json").string() + "\" --model \"" + ws.path("two.json").string() + "\"")
              .code == 0);
  CHECK(slurp(ws.path("one.json")) == slurp(ws.path("two.json")));
  const auto bad = ws.path("wide.csv");
  {
    std::ofstream f(bad);
    f << "1,2,3,4,5\n";
  }
  CHECK(ws.run("fit \"" + bad.string() + "\" --resume \"" + ws.path("one.json").string() +
               "\" --model \"" + ws.path("x.json").string() + "\"")
            .code == 2);
}

TEST_CASE("conformal intervals") {
  Workspace ws;
  const auto data = ws.noiseless("data.csv", 200, 4);
  const Run r = ws.run("conformal \"" + data.string() + "\" --kappa-cov 0.9 --seed 3");
  REQUIRE(r.code == 0);
  std::istringstream lines(r.out);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "y_hat,lower,upper");
  int rows = 0;
  while (std::getline(lines, line)) {
    double y_hat = 0, lo = 0, hi = 0;
    char comma;
    std::istringstream fields(line);
    fields >> y_hat >> comma >> lo >> comma >> hi;
    CHECK(lo <= y_hat);
    CHECK(hi >= y_hat);
    ++rows;
  }
  CHECK(rows == 200);
  CHECK(parse_field(r.err, "n_train") == 100);

  const auto tiny = ws.noiseless("tiny.csv", 6, 5);
  const Run unbounded = ws.run("conformal \"" + tiny.string() + "\" --kappa-cov 0.99");
  REQUIRE(unbounded.code == 0);
  CHECK(unbounded.out.find("-inf,inf") != std::string::npos);
  CHECK(ws.run("conformal \"" + data.string() + "\" --kappa-cov 1.5").code == 2);
}

TEST_CASE("datagen output") {
  Workspace ws;
  const Run r = ws.run("datagen --rows 5 --d 40 --seed 2");
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("x1,x2,x3,", 0) == 0);
  CHECK(r.out.find(",x40,y\n") != std::string::npos);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 6);
  CHECK(ws.run("datagen --rows 5 --d 40 --seed 2").out == r.out);
  CHECK(ws.run("datagen --rows 5 --nu 1.5").code == 2);
}

TEST_CASE("one-replication experiment") {
  Workspace ws;
  const std::string args =
      "experiment --id table1 --replications 1 --n 50 --predictors spice,lasso --out \"";
  const Run r = ws.run(args + ws.path("a").string() + "\"");
  REQUIRE(r.code == 0);
  CHECK(fs::exists(ws.path("a") / "report.json"));
  CHECK(fs::exists(ws.path("a") / "residuals.svg"));
  const std::string csv = slurp(ws.path("a") / "results.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  REQUIRE(ws.run(args + ws.path("b").string() + "\"").code == 0);
  // Every column except the trailing wall time is reproducible.
  const auto drop_time = [](const std::string& text) {
    std::istringstream in(text);
    std::string line, kept;
    while (std::getline(in, line)) kept += line.substr(0, line.rfind(',')) + '\n';
    return kept;
  };
  CHECK(drop_time(slurp(ws.path("b") / "results.csv")) == drop_time(csv));
  CHECK(slurp(ws.path("b") / "table.txt") == slurp(ws.path("a") / "table.txt"));
}

TEST_CASE("verify command") {
  Workspace ws;
  const Run r = ws.run("verify --instances 20 --seed 4");
  CHECK(r.code == 0);
  CHECK(r.out.find("\"bound_suite\"") != std::string::npos);
  CHECK(r.out.find("\"gaussian_event\"") != std::string::npos);
}
