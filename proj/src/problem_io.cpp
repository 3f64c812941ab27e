#include "rpisynth/problem_io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "rpisynth/encoder.hpp"

namespace rpisynth {

using nlohmann::json;

namespace {

// Non-finite values travel as strings so that documents stay valid JSON.
json num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double get_num(const json& j, const std::string& what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    if (s == "nan") return std::nan("");
  }
  throw InputError(what + ": expected a number");
}

json vec(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
  return a;
}

json mat(const Matrix& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vec(m.row(i).transpose()));
  return a;
}

Vector get_vec(const json& j, const std::string& what) {
  if (!j.is_array()) throw InputError(what + ": expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = get_num(j[i], what);
  return v;
}

// Array of rows. `cols_hint` gives the width of an empty matrix.
Matrix get_mat(const json& j, const std::string& what, Eigen::Index cols_hint = 0) {
  if (!j.is_array()) throw InputError(what + ": expected an array of rows");
  if (j.empty()) return Matrix(0, cols_hint);
  const size_t cols = j[0].is_array() ? j[0].size() : 0;
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) throw InputError(what + ": rows of unequal length");
    for (size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = get_num(j[i][c], what);
  }
  return m;
}

const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw InputError(where + ": missing \"" + key + "\"");
  return j.at(key);
}

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("malformed JSON: ") + e.what());
  }
}

template <class T>
T get_as(const json& j, const std::string& what) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw InputError(what + ": wrong type");
  }
}

json options_to_json(const SynthOptions& o) {
  json j;
  j["mu"] = o.mu;
  j["gamma"] = o.gamma;
  j["N"] = o.N;
  j["l"] = o.l;
  if (o.H_rows.rows() > 0) j["H"] = mat(o.H_rows);
  else j["H"] = o.H;
  j["beta0"] = o.beta0;
  j["zeta"] = o.zeta;
  j["max_iters"] = o.max_iters;
  j["seed"] = o.seed;
  j["s_max"] = o.s_max;
  j["restarts"] = o.restarts;
  j["mc_runs"] = o.mc_runs;
  j["mc_steps"] = o.mc_steps;
  return j;
}

SynthOptions options_from_json(const json& j) {
  SynthOptions o;
  if (j.is_null()) return o;
  if (!j.is_object()) throw InputError("options: expected an object");
  static const std::set<std::string> known = {"mu",    "gamma",    "N",    "l",        "H",
                                              "beta0", "zeta",     "max_iters", "seed", "s_max",
                                              "restarts", "mc_runs", "mc_steps"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) throw InputError("options: unknown key \"" + it.key() + "\"");
  if (j.contains("mu")) o.mu = get_num(j["mu"], "options.mu");
  if (j.contains("gamma")) o.gamma = get_num(j["gamma"], "options.gamma");
  if (j.contains("N")) o.N = get_as<int>(j["N"], "options.N");
  if (j.contains("l")) o.l = get_as<int>(j["l"], "options.l");
  if (j.contains("H")) {
    if (j["H"].is_string()) o.H = j["H"].get<std::string>();
    else o.H_rows = get_mat(j["H"], "options.H");
  }
  if (j.contains("beta0")) o.beta0 = get_as<std::string>(j["beta0"], "options.beta0");
  if (j.contains("zeta")) o.zeta = get_num(j["zeta"], "options.zeta");
  if (j.contains("max_iters")) o.max_iters = get_as<int>(j["max_iters"], "options.max_iters");
  if (j.contains("seed")) o.seed = get_as<std::uint64_t>(j["seed"], "options.seed");
  if (j.contains("s_max")) o.s_max = get_as<int>(j["s_max"], "options.s_max");
  if (j.contains("restarts")) o.restarts = get_as<int>(j["restarts"], "options.restarts");
  if (j.contains("mc_runs")) o.mc_runs = get_as<int>(j["mc_runs"], "options.mc_runs");
  if (j.contains("mc_steps")) o.mc_steps = get_as<int>(j["mc_steps"], "options.mc_steps");
  return o;
}

void validate_options(const SynthOptions& o, int ny) {
  detail::require(o.mu > 0.0 && std::isfinite(o.mu), "options.mu must be positive");
  detail::require(o.gamma > 0.0 && std::isfinite(o.gamma), "options.gamma must be positive");
  detail::require(o.N >= 1, "options.N must be at least 1");
  detail::require(o.zeta > 0.0, "options.zeta must be positive");
  detail::require(o.max_iters >= 1, "options.max_iters must be at least 1");
  detail::require(o.s_max >= 1, "options.s_max must be at least 1");
  detail::require(o.restarts >= 0, "options.restarts must be nonnegative");
  detail::require(o.mc_runs >= 0 && o.mc_steps >= 0, "options.mc_runs/mc_steps must be nonnegative");
  detail::require(o.beta0 == "uniform" || o.beta0 == "heuristic",
                  "options.beta0 must be \"uniform\" or \"heuristic\"");
  if (o.H_rows.rows() > 0) detail::require(o.H_rows.cols() == ny, "options.H rows must have n_y entries");
  else make_H(o.H, ny);  // throws on a bad preset
}

json hpoly_to_json(const HPolytope& Y) { return json{{"G", mat(Y.G)}, {"g", vec(Y.g)}}; }

HPolytope hpoly_from_json(const json& j) {
  HPolytope Y;
  Y.G = get_mat(field(j, "G", "Y"), "Y.G");
  Y.g = get_vec(field(j, "g", "Y"), "Y.g");
  detail::require(Y.G.rows() == Y.g.size(), "Y: G and g have different row counts");
  return Y;
}

json box_to_json(const Box& b) { return json{{"center", vec(b.center)}, {"halfwidth", vec(b.halfwidth)}}; }

}  // namespace

// ---- problem spec ----------------------------------------------------------

ProblemSpec problem_from_json(const std::string& text) {
  const json j = parse(text);
  const json& s = field(j, "system", "problem");
  ProblemSpec spec;
  Matrix A = get_mat(field(s, "A", "system"), "system.A");
  Matrix B = get_mat(field(s, "B", "system"), "system.B");
  Matrix C = get_mat(field(s, "C", "system"), "system.C");
  detail::require(A.rows() > 0 && A.rows() == A.cols(), "system.A must be square and nonempty");
  detail::require(B.rows() == A.rows(), "system.B must have n_x rows");
  detail::require(C.cols() == A.rows(), "system.C must have n_x columns");
  Matrix D = s.contains("D") ? get_mat(s["D"], "system.D", B.cols()) : Matrix::Zero(C.rows(), B.cols());
  detail::require(D.rows() == C.rows() && D.cols() == B.cols(), "system.D must be n_y x n_w");
  spec.sys = LtiSystem(A, B, C, D);
  spec.Y = hpoly_from_json(field(j, "Y", "problem"));
  detail::require(spec.Y.G.cols() == C.rows(), "Y.G must have n_y columns");
  if (j.contains("Y_vertices")) {
    const Matrix V = get_mat(j["Y_vertices"], "Y_vertices", C.rows());
    detail::require(V.rows() == 0 || V.cols() == C.rows(), "Y_vertices must have n_y entries each");
    for (Eigen::Index i = 0; i < V.rows(); ++i) spec.Y_vertices.push_back(V.row(i).transpose());
  }
  spec.options = options_from_json(j.contains("options") ? j["options"] : json());
  validate_options(spec.options, static_cast<int>(C.rows()));
  check_assumptions(spec.sys, spec.Y);
  return spec;
}

std::string problem_to_json(const ProblemSpec& spec) {
  json j;
  j["system"] = {{"A", mat(spec.sys.A)}, {"B", mat(spec.sys.B)}, {"C", mat(spec.sys.C)}, {"D", mat(spec.sys.D)}};
  j["Y"] = hpoly_to_json(spec.Y);
  if (!spec.Y_vertices.empty()) {
    json v = json::array();
    for (const Vector& y : spec.Y_vertices) v.push_back(vec(y));
    j["Y_vertices"] = v;
  }
  j["options"] = options_to_json(spec.options);
  return j.dump(2) + "\n";
}

ProblemSpec load_problem(const std::string& path) { return problem_from_json(read_text_file(path)); }

void save_problem(const ProblemSpec& spec, const std::string& path) {
  write_text_file(path, problem_to_json(spec));
}

// ---- partitioned spec ------------------------------------------------------

bool is_partitioned_document(const std::string& text) {
  const json j = parse(text);
  return j.is_object() && j.contains("partitioned");
}

PartitionedSpec partitioned_from_json(const std::string& text) {
  const json j = parse(text);
  const json& p = field(j, "partitioned", "document");
  PartitionedSpec spec;
  auto m = [&](const char* key) { return get_mat(field(p, key, "partitioned"), std::string("partitioned.") + key); };
  spec.A11 = m("A11");
  spec.A12 = m("A12");
  spec.A21 = m("A21");
  spec.A22 = m("A22");
  spec.C1 = m("C1");
  spec.C2 = m("C2");
  spec.B1 = p.contains("B1") ? get_mat(p["B1"], "partitioned.B1") : Matrix(spec.A11.rows(), 0);
  const auto n1 = spec.A11.rows(), n2 = spec.A22.rows();
  detail::require(spec.A11.cols() == n1 && spec.A22.cols() == n2, "A11 and A22 must be square");
  detail::require(spec.A12.rows() == n1 && spec.A12.cols() == n2, "A12 must be n1 x n2");
  detail::require(spec.A21.rows() == n2 && spec.A21.cols() == n1, "A21 must be n2 x n1");
  detail::require(spec.C1.cols() == n1 && spec.C2.cols() == n2 && spec.C1.rows() == spec.C2.rows(),
                  "C1, C2 must be n_y x n1 and n_y x n2");
  detail::require(spec.B1.rows() == n1, "B1 must have n1 rows");
  spec.Y = hpoly_from_json(field(j, "Y", "document"));
  detail::require(spec.Y.G.cols() == spec.C1.rows(), "Y.G must have n_y columns");
  spec.options = options_from_json(j.contains("options") ? j["options"] : json());
  validate_options(spec.options, static_cast<int>(spec.C1.rows()));
  return spec;
}

std::string partitioned_to_json(const PartitionedSpec& spec) {
  json j;
  j["partitioned"] = {{"A11", mat(spec.A11)}, {"A12", mat(spec.A12)}, {"A21", mat(spec.A21)},
                      {"A22", mat(spec.A22)}, {"B1", mat(spec.B1)},   {"C1", mat(spec.C1)},
                      {"C2", mat(spec.C2)}};
  j["Y"] = hpoly_to_json(spec.Y);
  j["options"] = options_to_json(spec.options);
  return j.dump(2) + "\n";
}

PartitionedSpec load_partitioned(const std::string& path) {
  return partitioned_from_json(read_text_file(path));
}

// ---- result document -------------------------------------------------------

namespace {

json check_to_json(const Check& c) {
  return json{{"name", c.name}, {"pass", c.pass}, {"margin", num(c.margin)}, {"location", c.location}};
}

}  // namespace

std::string result_to_json(const ResultDoc& d) {
  json j;
  j["params"] = {{"s", d.params.s},
                 {"alpha", num(d.params.alpha)},
                 {"lambda", num(d.params.lambda)},
                 {"gamma", num(d.params.gamma)},
                 {"mu", num(d.params.mu)}};
  j["constants"] = {{"s", d.constants.s},
                    {"L", vec(d.constants.L)},
                    {"theta", num(d.constants.theta)},
                    {"M", num(d.constants.M)},
                    {"zeta", num(d.constants.zeta)}};
  j["N"] = d.N;
  j["l"] = d.l;
  j["H"] = mat(d.H);
  json boxes = json::array();
  for (const Box& b : d.W.boxes()) boxes.push_back(box_to_json(b));
  j["W"] = boxes;
  j["epsilon"] = vec(d.epsilon);
  j["objective"] = num(d.objective);
  j["distance"] = num(d.distance);
  json h = json::array();
  for (double v : d.history) h.push_back(num(v));
  j["history"] = h;
  j["iterations"] = d.iterations;
  j["termination"] = d.termination;
  json cert = json::array();
  for (const Check& c : d.certificate) cert.push_back(check_to_json(c));
  j["certificate"] = cert;
  json t = json::object();
  for (const auto& [k, v] : d.timing) t[k] = num(v);
  j["timing"] = t;
  j["warnings"] = d.warnings;
  return j.dump(2) + "\n";
}

ResultDoc result_from_json(const std::string& text) {
  const json j = parse(text);
  ResultDoc d;
  const json& p = field(j, "params", "result");
  d.params.s = get_as<int>(field(p, "s", "params"), "params.s");
  d.params.alpha = get_num(field(p, "alpha", "params"), "params.alpha");
  d.params.lambda = get_num(field(p, "lambda", "params"), "params.lambda");
  d.params.gamma = get_num(field(p, "gamma", "params"), "params.gamma");
  d.params.mu = get_num(field(p, "mu", "params"), "params.mu");
  if (j.contains("constants")) {
    const json& c = j["constants"];
    d.constants.s = get_as<int>(field(c, "s", "constants"), "constants.s");
    d.constants.L = get_vec(field(c, "L", "constants"), "constants.L");
    d.constants.theta = get_num(field(c, "theta", "constants"), "constants.theta");
    d.constants.M = get_num(field(c, "M", "constants"), "constants.M");
    d.constants.zeta = get_num(field(c, "zeta", "constants"), "constants.zeta");
  }
  if (j.contains("N")) d.N = get_as<int>(j["N"], "N");
  if (j.contains("l")) d.l = get_as<int>(j["l"], "l");
  if (j.contains("H")) d.H = get_mat(j["H"], "H");
  if (j.contains("W")) {
    std::vector<Box> boxes;
    for (const json& b : j["W"])
      boxes.emplace_back(get_vec(field(b, "center", "W"), "W.center"),
                         get_vec(field(b, "halfwidth", "W"), "W.halfwidth"));
    if (!boxes.empty()) {
      for (const Box& b : boxes)
        detail::require(b.dim() == boxes.front().dim(), "W: boxes of different dimension");
      d.W = BoxHullSet(std::move(boxes));
    }
  }
  if (j.contains("epsilon")) d.epsilon = get_vec(j["epsilon"], "epsilon");
  if (j.contains("objective")) d.objective = get_num(j["objective"], "objective");
  if (j.contains("distance")) d.distance = get_num(j["distance"], "distance");
  if (j.contains("history"))
    for (const json& v : j["history"]) d.history.push_back(get_num(v, "history"));
  if (j.contains("iterations")) d.iterations = get_as<int>(j["iterations"], "iterations");
  if (j.contains("termination")) d.termination = get_as<std::string>(j["termination"], "termination");
  if (j.contains("certificate"))
    for (const json& c : j["certificate"])
      d.certificate.push_back(Check{get_as<std::string>(field(c, "name", "certificate"), "name"),
                                    get_as<bool>(field(c, "pass", "certificate"), "pass"),
                                    get_num(field(c, "margin", "certificate"), "margin"),
                                    get_as<int>(field(c, "location", "certificate"), "location")});
  if (j.contains("timing"))
    for (auto it = j["timing"].begin(); it != j["timing"].end(); ++it)
      d.timing[it.key()] = get_num(it.value(), "timing");
  if (j.contains("warnings")) d.warnings = get_as<std::vector<std::string>>(j["warnings"], "warnings");
  return d;
}

ResultDoc load_result(const std::string& path) { return result_from_json(read_text_file(path)); }

void save_result(const ResultDoc& doc, const std::string& path) {
  write_text_file(path, result_to_json(doc));
}

std::string certificate_to_json(const Certificate& cert) {
  json a = json::array();
  for (const Check& c : cert.checks) a.push_back(check_to_json(c));
  return json{{"pass", cert.pass()}, {"checks", a}}.dump(2) + "\n";
}

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0 || (std::isnan(a) && std::isnan(b)); }

bool same_bits(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (!same_bits(a.data()[i], b.data()[i])) return false;
  return true;
}

}  // namespace

bool same_result(const ResultDoc& a, const ResultDoc& b) {
  auto sp = [](const RpiParams& x, const RpiParams& y) {
    return x.s == y.s && same_bits(x.alpha, y.alpha) && same_bits(x.lambda, y.lambda) &&
           same_bits(x.gamma, y.gamma) && same_bits(x.mu, y.mu);
  };
  auto sc = [](const RpiConstants& x, const RpiConstants& y) {
    return x.s == y.s && same_bits(Matrix(x.L), Matrix(y.L)) && same_bits(x.theta, y.theta) &&
           same_bits(x.M, y.M) && same_bits(x.zeta, y.zeta);
  };
  if (!sp(a.params, b.params) || !sc(a.constants, b.constants)) return false;
  if (a.N != b.N || a.l != b.l || !same_bits(a.H, b.H)) return false;
  if (a.W.size() != b.W.size()) return false;
  for (int j = 0; j < a.W.size(); ++j)
    if (!same_bits(Matrix(a.W[j].center), Matrix(b.W[j].center)) ||
        !same_bits(Matrix(a.W[j].halfwidth), Matrix(b.W[j].halfwidth)))
      return false;
  if (!same_bits(Matrix(a.epsilon), Matrix(b.epsilon))) return false;
  if (!same_bits(a.objective, b.objective) || !same_bits(a.distance, b.distance)) return false;
  if (a.history.size() != b.history.size()) return false;
  for (size_t i = 0; i < a.history.size(); ++i)
    if (!same_bits(a.history[i], b.history[i])) return false;
  if (a.iterations != b.iterations || a.termination != b.termination) return false;
  if (a.certificate.size() != b.certificate.size()) return false;
  for (size_t i = 0; i < a.certificate.size(); ++i) {
    const Check &x = a.certificate[i], &y = b.certificate[i];
    if (x.name != y.name || x.pass != y.pass || !same_bits(x.margin, y.margin) || x.location != y.location)
      return false;
  }
  if (a.timing.size() != b.timing.size()) return false;
  for (const auto& [k, v] : a.timing) {
    auto it = b.timing.find(k);
    if (it == b.timing.end() || !same_bits(v, it->second)) return false;
  }
  return a.warnings == b.warnings;
}

// ---- files ---------------------------------------------------------------------

Matrix load_matrix_file(const std::string& path) {
  const std::string text = read_text_file(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') return get_mat(parse(text), path);
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::vector<double> row;
    double v;
    while (ls >> v) row.push_back(v);
    if (!ls.eof()) throw InputError(path + ": not a number in \"" + line + "\"");
    if (!row.empty()) rows.push_back(std::move(row));
  }
  detail::require(!rows.empty(), "matrix file is empty");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw InputError(path + ": rows of unequal length");
    for (size_t c = 0; c < rows[i].size(); ++c)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
  }
  return m;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
  if (!out) throw Error("write failed for " + path);
}

}  // namespace rpisynth
