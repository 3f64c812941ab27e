#pragma once

// JSON documents: problem specs in, result documents out. The format is
// described with a worked example in docs/formats.md.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rpisynth/rpi_params.hpp"
#include "rpisynth/setgeom.hpp"
#include "rpisynth/verifier.hpp"

namespace rpisynth {

struct SynthOptions {
  double mu = 1e-3;
  double gamma = 0.2;
  int N = 4;
  int l = 0;                  // <= 0: use s
  std::string H = "box";      // preset, ignored when H_rows is set
  Matrix H_rows;              // explicit normals, 0 rows if unset
  std::string beta0 = "uniform";  // or "heuristic"
  double zeta = 1e-4;
  int max_iters = 100;
  std::uint64_t seed = 1;
  int s_max = 1000;
  int restarts = 0;
  int mc_runs = 20;
  int mc_steps = 10000;
};

struct ProblemSpec {
  LtiSystem sys;
  HPolytope Y;
  std::vector<Vector> Y_vertices;  // empty: enumerate from Y
  SynthOptions options;
};

/// Plant split as x1 (driven by u) and x2 (driven by x1). Y constrains
/// y = C1 x1 + C2 x2.
struct PartitionedSpec {
  Matrix A11, A12, A21, A22, B1, C1, C2;
  HPolytope Y;
  SynthOptions options;
};

struct ResultDoc {
  RpiParams params;
  RpiConstants constants;
  int N = 0;
  int l = 0;
  Matrix H;
  BoxHullSet W;        // empty when only parameters were selected
  Vector epsilon;
  double objective = 0.0;
  double distance = 0.0;  // exact d_Y of the l-step reachable set for W
  std::vector<double> history;
  int iterations = 0;
  std::string termination;
  std::vector<Check> certificate;
  std::map<std::string, double> timing;
  std::vector<std::string> warnings;

  bool has_synthesis() const { return W.size() > 0; }
};

/// Dimension checks raise InputError; rho(A) >= 1 or g <= 0 raise
/// AssumptionError.
ProblemSpec problem_from_json(const std::string& text);
std::string problem_to_json(const ProblemSpec& spec);
ProblemSpec load_problem(const std::string& path);
void save_problem(const ProblemSpec& spec, const std::string& path);

PartitionedSpec partitioned_from_json(const std::string& text);
std::string partitioned_to_json(const PartitionedSpec& spec);
PartitionedSpec load_partitioned(const std::string& path);
/// True if the document has a "partitioned" block instead of "system".
bool is_partitioned_document(const std::string& text);

ResultDoc result_from_json(const std::string& text);
std::string result_to_json(const ResultDoc& doc);
ResultDoc load_result(const std::string& path);
void save_result(const ResultDoc& doc, const std::string& path);

std::string certificate_to_json(const Certificate& cert);

/// Bitwise equality of every field.
bool same_result(const ResultDoc& a, const ResultDoc& b);

/// Reads a normal matrix for B(eps): a JSON array of rows or whitespace
/// separated rows of numbers.
Matrix load_matrix_file(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace rpisynth
