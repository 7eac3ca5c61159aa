#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "sls/config.hpp"
#include "sls/errors.hpp"
#include "sls/runner.hpp"

using namespace sls;
namespace fs = std::filesystem;

namespace {

const char* kSmallPlant = R"([plant]
A = [[0.5, 0.1], [0, -0.3]]
B = [[0], [1]]
Bhat = [[1, 0], [0, 1]]
C = [[1, 0], [0, 1], [0, 0]]
D = [[0], [0], [0.5]]
)";

std::string error_of(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("synth_test_" + name);
  fs::remove_all(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("power converter preset") {
  const RunConfig cfg = parse_config_text("[plant]\npreset = \"power_converter\"\n");
  REQUIRE(cfg.plant);
  const PlantModel& P = *cfg.plant;
  CHECK(cfg.sample_time == 1e-3);
  CHECK(P.A()(0, 0) == 0.988);
  CHECK(P.A()(2, 0) == 1.0);
  CHECK(P.A()(3, 3) == 0.995);
  CHECK(P.A()(4, 4) == 0.9);
  CHECK(P.A().cwiseAbs().sum() == doctest::Approx(0.988 + 1 + 0.995 + 0.9));
  CHECK(P.B()(3, 0) == 0.005);
  CHECK(P.B()(4, 1) == 0.1);
  CHECK(P.Bhat()(0, 0) == -0.0001);
  CHECK(P.Bhat()(1, 1) == 1.0);
  CHECK(P.Bhat()(2, 0) == 0.0066);
  CHECK(P.C()(0, 1) == 0.829);
  CHECK(P.C()(0, 2) == -0.428);
  CHECK(P.C()(0, 3) == 1.02);
  CHECK(P.C()(1, 1) == 0.428);
  CHECK(P.C()(1, 2) == 0.829);
  CHECK(P.C()(1, 4) == -1.02);
  CHECK(P.C().bottomRows(2).isZero(0.0));
  CHECK(P.D()(2, 0) == 0.01);
  CHECK(P.D()(3, 1) == 0.01);
  REQUIRE(cfg.desired.terms().size() == 1);
  const auto& t = cfg.desired.terms()[0];
  CHECK(t.pole == Complex(0.999, 0.0));
  CHECK(t.order == 1);
  CHECK(t.coeff(0, 0).real() == -5.3e-5);
  CHECK(t.coeff(1, 1).real() == -100.0);
  CHECK(cfg.design.lambda == 0.0);
}

TEST_CASE("defaults and empty desired section") {
  const RunConfig a = parse_config_text(kSmallPlant);
  CHECK(a.design.lambda == 0.0);
  CHECK(a.design.method == Method::spa);
  CHECK(a.desired.empty());
  CHECK(a.desired.rows() == 3);
  CHECK(a.desired.cols() == 2);
  const RunConfig b = parse_config_text(std::string(kSmallPlant) + "[desired]\n");
  CHECK(b.desired.empty());
  const RunConfig c = parse_config_text("[plant]\npreset = \"power_converter\"\n[desired]\n");
  CHECK(c.desired.empty());
}

TEST_CASE("explicit config with terms and design") {
  const std::string text = std::string(kSmallPlant) + R"(
[desired]
term = {"pole": [0.2, 0.3], "order": 2, "coeff": [[1, 0], [0, 0], [0, 0]], "coeff_imag": [[0.5, 0], [0, 0], [0, 0]]}
term = {"pole": [0.2, -0.3], "order": 2, "coeff": [[1, 0], [0, 0], [0, 0]], "coeff_imag": [[-0.5, 0], [0, 0], [0, 0]]}
[design]
lambda = 0.5     # mixed
horizon_T = 40
n_spiral = [3, 4]
prior_poles = [[0.1, 0.2], [0.1, -0.2], 0.7]
[output]
directory = "somewhere"
sweep = [4, 9]
)";
  const RunConfig cfg = parse_config_text(text);
  CHECK(cfg.desired.terms().size() == 2);
  CHECK(cfg.design.lambda == 0.5);
  CHECK(cfg.design.horizon == 40);
  CHECK(cfg.design.n_spiral == std::vector<int>{3, 4});
  CHECK(cfg.design.prior.size() == 3);
  CHECK(cfg.output.directory == "somewhere");
  CHECK(cfg.output.sweep == std::vector<int>{4, 9});
  const auto pr = cfg.problem();
  CHECK(pr.horizon == 40);
  CHECK_NOTHROW(pr.validate());

  // Round trip keeps every number.
  const RunConfig again = parse_config_text(serialize_config(cfg));
  CHECK(again.plant->A() == cfg.plant->A());
  CHECK(again.desired.terms().size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(again.desired.terms()[i].pole == cfg.desired.terms()[i].pole);
    CHECK(again.desired.terms()[i].coeff == cfg.desired.terms()[i].coeff);
  }
  CHECK(again.design.prior == cfg.design.prior);
  CHECK(again.design.n_spiral == cfg.design.n_spiral);
  CHECK(serialize_config(again) == serialize_config(cfg));
}

TEST_CASE("preset round trip is exact") {
  for (int poles : {7, 15}) {
    RunConfig cfg = power_converter_preset();
    cfg.design.n_spiral = power_converter_spirals(poles);
    const RunConfig back = parse_config_text(serialize_config(cfg));
    const PlantModel& a = *cfg.plant;
    const PlantModel& b = *back.plant;
    CHECK(a.A() == b.A());
    CHECK(a.B() == b.B());
    CHECK(a.Bhat() == b.Bhat());
    CHECK(a.C() == b.C());
    CHECK(a.D() == b.D());
    CHECK(back.sample_time == cfg.sample_time);
    CHECK(back.design.lambda == cfg.design.lambda);
    CHECK(back.desired.terms()[0].coeff == cfg.desired.terms()[0].coeff);
    CHECK(back.poles().values() == cfg.poles().values());
  }
  RunConfig inf = power_converter_preset();
  inf.design.lambda = kInfiniteLambda;
  CHECK(std::isinf(parse_config_text(serialize_config(inf)).design.lambda));
}

TEST_CASE("diagnostics carry line numbers") {
  CHECK(error_of(std::string(kSmallPlant) + "[design]\nspeed = 3\n").find("line 8") != std::string::npos);
  CHECK(error_of("[plant]\nA = [[1, 2], [3]]\n").find("line 2") != std::string::npos);
  CHECK(error_of("[plant]\nA = [[1, 2\n").find("line 2") != std::string::npos);
  CHECK(error_of("[colors]\n").find("line 1") != std::string::npos);
  const std::string bad_pole = std::string(kSmallPlant) +
                               "[desired]\nterm = {\"pole\": 1.0, \"coeff\": [[1, 0], [0, 0], [0, 0]]}\n";
  CHECK(error_of(bad_pole).find("line 8") != std::string::npos);
  const std::string bad_dims = std::string(kSmallPlant) +
                               "[desired]\nterm = {\"pole\": 0.5, \"coeff\": [[1, 0]]}\n";
  CHECK(error_of(bad_dims).find("line 8") != std::string::npos);
  const std::string mismatch = "[plant]\nA = [[1, 0], [0, 1]]\nB = [[1]]\nBhat = [[1], [1]]\nC = [[1, 1]]\nD = [[0]]\n";
  CHECK(error_of(mismatch).find("line 2") != std::string::npos);
  CHECK(error_of("[plant]\npreset = \"power_converter\"\nA = [[1]]\n").find("line 3") != std::string::npos);
  CHECK(error_of(std::string(kSmallPlant) + "[design]\nmethod = \"dbc\"\n").find("T_fir") != std::string::npos);
  CHECK(error_of("x = 1\n").find("line 1") != std::string::npos);
  CHECK_THROWS_AS(parse_config("/nonexistent/file.cfg"), ValidationError);
}

TEST_CASE("runs write artifacts and map outcomes to exit codes") {
  SUBCASE("spa on the converter") {
    RunConfig cfg = power_converter_preset();
    cfg.design.n_spiral = power_converter_spirals(15);
    const fs::path d1 = scratch_dir("spa1"), d2 = scratch_dir("spa2");
    cfg.output.directory = d1.string();
    std::ostringstream log;
    CHECK(run(cfg, log) == kExitOk);
    cfg.output.directory = d2.string();
    CHECK(run(cfg, log) == kExitOk);
    for (const char* f : {"impulse_wy.csv", "step_wy.csv"}) {
      const std::string a = slurp(d1 / f);
      CHECK(a == slurp(d2 / f));
      std::istringstream in(a);
      std::string line;
      int rows = 0;
      std::getline(in, line);
      CHECK(line.rfind("k,designed_y1_w1,realized_y1_w1,desired_y1_w1", 0) == 0);
      while (std::getline(in, line)) ++rows;
      CHECK(rows == 5000);
    }
    CHECK(slurp(d1 / "summary.txt").find("objective:") != std::string::npos);
  }
  SUBCASE("dbc below the threshold") {
    RunConfig cfg = power_converter_preset();
    cfg.design.method = Method::dbc;
    cfg.design.T_fir = 30;
    cfg.output.directory = scratch_dir("dbc30").string();
    std::ostringstream log;
    CHECK(run(cfg, log) == kExitInfeasible);
  }
  SUBCASE("unstabilizable plant") {
    RunConfig cfg = parse_config_text(
        "[plant]\nA = [[1.5, 0], [0, 0.5]]\nB = [[0], [1]]\nBhat = [[1], [1]]\n"
        "C = [[1, 1]]\nD = [[0]]\n[design]\nn_spiral = 3\n");
    const fs::path d = scratch_dir("unstab");
    cfg.output.directory = d.string();
    std::ostringstream log;
    CHECK(run(cfg, log) == kExitSolverFailure);
    CHECK(slurp(d / "summary.txt").find("PBH") != std::string::npos);
  }
  SUBCASE("sweep output") {
    RunConfig cfg = parse_config_text(std::string(kSmallPlant));
    const fs::path d = scratch_dir("sweep");
    cfg.output.directory = d.string();
    std::ostringstream log;
    CHECK(run_sweep(cfg, {4, 9, 16}, true, log) == kExitOk);
    const std::string csv = slurp(d / "convergence.csv");
    CHECK(csv.rfind("n,num_poles,covering_radius,cost,rel_error,ratio,status\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  }
}
