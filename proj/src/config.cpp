#include "sls/config.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "sls/errors.hpp"

namespace sls {

namespace {

using json = nlohmann::json;

struct Entry {
  json value;
  int line = 0;
};

[[noreturn]] void fail(int line, const std::string& msg) {
  std::ostringstream os;
  if (line > 0) os << "line " << line << ": ";
  os << msg;
  throw ValidationError(os.str());
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Drops a trailing comment while respecting string literals.
std::string strip_comment(const std::string& s) {
  bool in_str = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) in_str = !in_str;
    if (!in_str && s[i] == '#') return s.substr(0, i);
  }
  return s;
}

Eigen::MatrixXd to_matrix(const json& v, int line, const std::string& what) {
  if (!v.is_array() || v.empty()) fail(line, what + " must be a non-empty array of rows");
  const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
  if (cols == 0) fail(line, what + " must be an array of non-empty rows");
  Eigen::MatrixXd M(v.size(), cols);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_array() || v[i].size() != cols) {
      fail(line, what + ": row " + std::to_string(i + 1) + " has the wrong length");
    }
    for (std::size_t j = 0; j < cols; ++j) {
      if (!v[i][j].is_number()) fail(line, what + ": non-numeric entry");
      M(i, j) = v[i][j].get<double>();
    }
  }
  return M;
}

Complex to_complex(const json& v, int line, const std::string& what) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    return {v[0].get<double>(), v[1].get<double>()};
  }
  fail(line, what + " must be a number or [re, im]");
}

double to_double(const json& v, int line, const std::string& what) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string() && (v == "inf" || v == "infinity")) return kInfiniteLambda;
  fail(line, what + " must be a number");
}

int to_int(const json& v, int line, const std::string& what) {
  if (!v.is_number_integer()) fail(line, what + " must be an integer");
  return v.get<int>();
}

std::vector<int> to_int_list(const json& v, int line, const std::string& what) {
  if (v.is_number_integer()) return {v.get<int>()};
  if (!v.is_array()) fail(line, what + " must be an integer or an array of integers");
  std::vector<int> out;
  for (const auto& x : v) out.push_back(to_int(x, line, what));
  return out;
}

json matrix_json(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (int i = 0; i < M.rows(); ++i) {
    json r = json::array();
    for (int j = 0; j < M.cols(); ++j) r.push_back(M(i, j));
    rows.push_back(r);
  }
  return rows;
}

json complex_json(Complex z) {
  if (z.imag() == 0.0) return z.real();
  return json::array({z.real(), z.imag()});
}

using Section = std::map<std::string, Entry>;

const std::map<std::string, std::vector<std::string>>& allowed_keys() {
  static const std::map<std::string, std::vector<std::string>> k{
      {"plant", {"preset", "A", "B", "Bhat", "C", "D", "sample_time"}},
      {"desired", {"term"}},
      {"design", {"method", "lambda", "horizon_T", "n_spiral", "T_fir", "prior_poles"}},
      {"output", {"directory", "impulse_horizon", "step_horizon", "sweep"}},
  };
  return k;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  std::map<std::string, Section> sections;
  std::vector<Entry> terms;
  int desired_line = 0;
  std::string current;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(strip_comment(raw));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail(line, "malformed section header");
      current = trim(s.substr(1, s.size() - 2));
      if (!allowed_keys().count(current)) fail(line, "unknown section [" + current + "]");
      if (current == "desired") desired_line = line;
      sections[current];
      continue;
    }
    if (current.empty()) fail(line, "key outside of a section");
    const auto eq = s.find('=');
    if (eq == std::string::npos) fail(line, "expected key = value");
    const std::string key = trim(s.substr(0, eq));
    const auto& allowed = allowed_keys().at(current);
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      fail(line, "unknown key '" + key + "' in [" + current + "]");
    }
    Entry e;
    e.line = line;
    try {
      e.value = json::parse(trim(s.substr(eq + 1)));
    } catch (const json::parse_error& err) {
      fail(line, "malformed value for '" + key + "': " + err.what());
    }
    if (current == "desired") {
      terms.push_back(std::move(e));
    } else {
      if (sections[current].count(key)) fail(line, "duplicate key '" + key + "'");
      sections[current][key] = std::move(e);
    }
  }

  RunConfig cfg;
  const Section& plant = sections["plant"];
  if (plant.count("preset")) {
    const Entry& e = plant.at("preset");
    if (!e.value.is_string()) fail(e.line, "preset must be a string");
    const std::string name = e.value.get<std::string>();
    if (name != "power_converter") fail(e.line, "unknown preset '" + name + "'");
    for (const auto& [k, v] : plant) {
      if (k != "preset") fail(v.line, "'" + k + "' cannot be combined with a preset");
    }
    const RunConfig pre = power_converter_preset();
    cfg.preset = name;
    cfg.plant = pre.plant;
    cfg.sample_time = pre.sample_time;
    // The preset supplies T_desired only when [desired] is absent.
    if (desired_line == 0) cfg.desired = pre.desired;
  } else {
    std::vector<Eigen::MatrixXd> mats;
    for (const char* k : {"A", "B", "Bhat", "C", "D"}) {
      if (plant.count(k)) mats.push_back(to_matrix(plant.at(k).value, plant.at(k).line, k));
    }
    for (const char* k : {"A", "B", "Bhat", "C", "D"}) {
      if (!plant.count(k)) fail(0, std::string("[plant] is missing '") + k + "'");
    }
    try {
      cfg.plant.emplace(mats[0], mats[1], mats[2], mats[3], mats[4]);
    } catch (const ValidationError& err) {
      fail(plant.at("A").line, std::string("plant: ") + err.what());
    }
    if (plant.count("sample_time")) {
      const Entry& e = plant.at("sample_time");
      cfg.sample_time = to_double(e.value, e.line, "sample_time");
      if (!(cfg.sample_time > 0.0)) fail(e.line, "sample_time must be positive");
    }
  }
  const PlantModel& P = *cfg.plant;

  if (desired_line != 0 || cfg.preset.empty()) cfg.desired = PfdMatrix(P.m(), P.q());
  for (const Entry& e : terms) {
    const json& t = e.value;
    if (!t.is_object()) fail(e.line, "term must be an object {pole, order, coeff}");
    for (const auto& [k, _] : t.items()) {
      if (k != "pole" && k != "order" && k != "coeff" && k != "coeff_imag") {
        fail(e.line, "unknown term field '" + k + "'");
      }
    }
    if (!t.contains("pole") || !t.contains("coeff")) fail(e.line, "term needs pole and coeff");
    const Complex pole = to_complex(t["pole"], e.line, "pole");
    if (!(std::abs(pole) < 1.0)) fail(e.line, "desired pole must satisfy |pole| < 1");
    const int order = t.contains("order") ? to_int(t["order"], e.line, "order") : 1;
    if (order < 1) fail(e.line, "order must be >= 1");
    const Eigen::MatrixXd re = to_matrix(t["coeff"], e.line, "coeff");
    Eigen::MatrixXd im = Eigen::MatrixXd::Zero(re.rows(), re.cols());
    if (t.contains("coeff_imag")) im = to_matrix(t["coeff_imag"], e.line, "coeff_imag");
    if (re.rows() != P.m() || re.cols() != P.q() || im.rows() != re.rows() ||
        im.cols() != re.cols()) {
      fail(e.line, "coeff must be " + std::to_string(P.m()) + " x " +
                       std::to_string(P.q()));
    }
    Eigen::MatrixXcd c(re.rows(), re.cols());
    c.real() = re;
    c.imag() = im;
    cfg.desired.add_term(pole, order, c);
  }
  if (cfg.desired.conjugate_asymmetry() > 1e-9) {
    fail(desired_line, "desired terms are not conjugate-symmetric");
  }

  const Section& d = sections["design"];
  if (d.count("method")) {
    const Entry& e = d.at("method");
    if (e.value == "spa") cfg.design.method = Method::spa;
    else if (e.value == "dbc") cfg.design.method = Method::dbc;
    else fail(e.line, "method must be \"spa\" or \"dbc\"");
  }
  if (d.count("lambda")) {
    const Entry& e = d.at("lambda");
    cfg.design.lambda = to_double(e.value, e.line, "lambda");
    if (!(cfg.design.lambda >= 0.0)) fail(e.line, "lambda must be >= 0");
  }
  if (d.count("horizon_T")) {
    const Entry& e = d.at("horizon_T");
    cfg.design.horizon = to_int(e.value, e.line, "horizon_T");
    if (cfg.design.horizon < 0) fail(e.line, "horizon_T must be >= 0");
  }
  if (d.count("n_spiral")) {
    const Entry& e = d.at("n_spiral");
    cfg.design.n_spiral = to_int_list(e.value, e.line, "n_spiral");
    for (int n : cfg.design.n_spiral) {
      if (n < 0) fail(e.line, "n_spiral entries must be >= 0");
    }
  }
  if (d.count("T_fir")) {
    const Entry& e = d.at("T_fir");
    cfg.design.T_fir = to_int(e.value, e.line, "T_fir");
    if (cfg.design.T_fir < 2) fail(e.line, "T_fir must be >= 2");
  }
  if (d.count("prior_poles")) {
    const Entry& e = d.at("prior_poles");
    if (!e.value.is_array()) fail(e.line, "prior_poles must be an array");
    for (const auto& z : e.value) {
      const Complex p = to_complex(z, e.line, "prior pole");
      if (!(std::abs(p) < 1.0)) fail(e.line, "prior pole must satisfy |pole| < 1");
      cfg.design.prior.push_back(p);
    }
  }
  if (cfg.design.method == Method::dbc && cfg.design.T_fir == 0) {
    fail(d.count("method") ? d.at("method").line : 0, "method dbc requires T_fir");
  }

  const Section& o = sections["output"];
  if (o.count("directory")) {
    const Entry& e = o.at("directory");
    if (!e.value.is_string()) fail(e.line, "directory must be a string");
    cfg.output.directory = e.value.get<std::string>();
  }
  for (auto [key, dst] : {std::pair{"impulse_horizon", &cfg.output.impulse_horizon},
                          std::pair{"step_horizon", &cfg.output.step_horizon}}) {
    if (!o.count(key)) continue;
    const Entry& e = o.at(key);
    *dst = to_int(e.value, e.line, key);
    if (*dst < 1) fail(e.line, std::string(key) + " must be positive");
  }
  if (o.count("sweep")) {
    const Entry& e = o.at("sweep");
    cfg.output.sweep = to_int_list(e.value, e.line, "sweep");
    for (int n : cfg.output.sweep) {
      if (n < 2) fail(e.line, "sweep entries must be >= 2");
    }
  }
  return cfg;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

std::string serialize_config(const RunConfig& cfg) {
  if (!cfg.plant) throw PreconditionError("config has no plant");
  const PlantModel& P = *cfg.plant;
  std::ostringstream os;
  os << "[plant]\n";
  os << "A = " << matrix_json(P.A()).dump() << "\n";
  os << "B = " << matrix_json(P.B()).dump() << "\n";
  os << "Bhat = " << matrix_json(P.Bhat()).dump() << "\n";
  os << "C = " << matrix_json(P.C()).dump() << "\n";
  os << "D = " << matrix_json(P.D()).dump() << "\n";
  if (cfg.sample_time > 0.0) os << "sample_time = " << json(cfg.sample_time).dump() << "\n";

  os << "\n[desired]\n";
  for (const auto& t : cfg.desired.terms()) {
    json j;
    j["pole"] = complex_json(t.pole);
    j["order"] = t.order;
    j["coeff"] = matrix_json(t.coeff.real());
    if (!t.coeff.imag().isZero(0.0)) j["coeff_imag"] = matrix_json(t.coeff.imag());
    os << "term = " << j.dump() << "\n";
  }

  const DesignConfig& d = cfg.design;
  os << "\n[design]\n";
  os << "method = \"" << (d.method == Method::spa ? "spa" : "dbc") << "\"\n";
  os << "lambda = " << (d.lambda == kInfiniteLambda ? json("inf") : json(d.lambda)).dump() << "\n";
  os << "horizon_T = " << d.horizon << "\n";
  if (!d.n_spiral.empty()) os << "n_spiral = " << json(d.n_spiral).dump() << "\n";
  if (d.T_fir > 0) os << "T_fir = " << d.T_fir << "\n";
  if (!d.prior.empty()) {
    json pr = json::array();
    for (const auto& z : d.prior) pr.push_back(complex_json(z));
    os << "prior_poles = " << pr.dump() << "\n";
  }

  const OutputConfig& o = cfg.output;
  os << "\n[output]\n";
  os << "directory = " << json(o.directory).dump() << "\n";
  os << "impulse_horizon = " << o.impulse_horizon << "\n";
  os << "step_horizon = " << o.step_horizon << "\n";
  if (!o.sweep.empty()) os << "sweep = " << json(o.sweep).dump() << "\n";
  return os.str();
}

PoleSet RunConfig::poles() const {
  if (!plant) throw PreconditionError("config has no plant");
  PoleSet fill;
  for (int n : design.n_spiral) {
    if (n < 2) continue;
    for (const auto& p : spiral_poles(n).poles) fill.poles.push_back(p);
  }
  return assemble(eigen_multiplicities(*plant), design.prior, fill);
}

SynthesisProblem RunConfig::problem() const {
  return make_problem(*plant, desired, design.lambda, poles(), design.horizon);
}

RunConfig power_converter_preset() {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(5, 5);
  A(0, 0) = 0.988;
  A(2, 0) = 1.0;
  A(3, 3) = 0.995;
  A(4, 4) = 0.9;
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(5, 2);
  B(3, 0) = 0.005;
  B(4, 1) = 0.1;
  Eigen::MatrixXd Bhat(5, 2);
  Bhat << -0.0001, 0, 0, 1, 0.0066, 0, 0, 0, 0, 0;
  Eigen::MatrixXd C(4, 5);
  C << 0, 0.829, -0.428, 1.02, 0,
       0, 0.428, 0.829, 0, -1.02,
       0, 0, 0, 0, 0,
       0, 0, 0, 0, 0;
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(4, 2);
  D(2, 0) = 0.01;
  D(3, 1) = 0.01;

  RunConfig cfg;
  cfg.preset = "power_converter";
  cfg.plant.emplace(A, B, Bhat, C, D);
  cfg.sample_time = 1e-3;
  cfg.desired = PfdMatrix(4, 2);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(4, 2);
  c(0, 0) = -5.3e-5;
  c(1, 1) = -100.0;
  cfg.desired.add_term(0.999, 1, c);
  cfg.design.prior = {0.999};
  cfg.design.n_spiral = power_converter_spirals(15);
  return cfg;
}

std::vector<int> power_converter_spirals(int num_poles) {
  // Plant (4 distinct) + 0.999 leaves 2 for spiral(2) and 10 for spiral(2)+spiral(5).
  switch (num_poles) {
    case 5: return {};
    case 7: return {2};
    case 15: return {2, 5};
    default:
      throw ValidationError("power converter preset supports 5, 7 or 15 poles");
  }
}

}  // namespace sls
