#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "fixtures.hpp"
#include "rpisynth/pipeline.hpp"

using namespace rpisynth;
namespace fs = std::filesystem;

namespace {

ProblemSpec illustrative_spec() {
  ProblemSpec s;
  s.sys = fixtures::illustrative_system();
  s.Y = fixtures::illustrative_Y();
  return s;
}

// Fast spec for the end-to-end paths.
ProblemSpec small_spec(std::uint64_t seed = 7) {
  ProblemSpec s = generate(2, 2, 2, 0.5, seed);
  s.options.N = 2;
  s.options.l = 3;
  s.options.mc_runs = 3;
  s.options.mc_steps = 200;
  s.options.max_iters = 10;
  return s;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rpisynth_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("problem documents round trip") {
  ProblemSpec s = illustrative_spec();
  s.options.N = 3;
  s.options.H = "uniform:8";
  s.options.seed = 99;
  const ProblemSpec back = problem_from_json(problem_to_json(s));
  CHECK(back.sys.A == s.sys.A);
  CHECK(back.sys.D == s.sys.D);
  CHECK(back.Y.G == s.Y.G);
  CHECK(back.options.N == 3);
  CHECK(back.options.H == "uniform:8");
  CHECK(back.options.seed == 99);
  CHECK(problem_to_json(back) == problem_to_json(s));
}

TEST_CASE("a missing D defaults to zero") {
  const std::string text = R"({"system":{"A":[[0.5]],"B":[[1,0]],"C":[[1],[0]]},
    "Y":{"G":[[1,0],[-1,0],[0,1],[0,-1]],"g":[1,1,1,1]}})";
  const ProblemSpec s = problem_from_json(text);
  CHECK(s.sys.D.rows() == 2);
  CHECK(s.sys.D.cols() == 2);
  CHECK(s.sys.D.isZero(0.0));
}

TEST_CASE("malformed problem documents") {
  CHECK_THROWS_AS(problem_from_json("{not json"), InputError);
  CHECK_THROWS_AS(problem_from_json(R"({"Y":{"G":[[1]],"g":[1]}})"), InputError);
  const std::string unknown = R"({"system":{"A":[[0.5]],"B":[[1]],"C":[[1]]},"Y":{"G":[[1],[-1]],"g":[1,1]},"options":{"colour":1}})";
  CHECK_THROWS_AS(problem_from_json(unknown), InputError);
  // C with the wrong width
  const std::string bad_dims = R"({"system":{"A":[[0.5]],"B":[[1]],"C":[[1,2]]},"Y":{"G":[[1],[-1]],"g":[1,1]}})";
  CHECK_THROWS_AS(problem_from_json(bad_dims), InputError);
  const std::string unstable = R"({"system":{"A":[[1.5]],"B":[[1]],"C":[[1]]},"Y":{"G":[[1],[-1]],"g":[1,1]}})";
  CHECK_THROWS_AS(problem_from_json(unstable), AssumptionError);
  const std::string no_interior = R"({"system":{"A":[[0.5]],"B":[[1]],"C":[[1]]},"Y":{"G":[[1],[-1]],"g":[1,0]}})";
  CHECK_THROWS_AS(problem_from_json(no_interior), AssumptionError);
}

TEST_CASE("result documents round trip bit for bit") {
  const ProblemSpec s = small_spec();
  const ResultDoc r = run_synth(s, 1);
  REQUIRE(r.has_synthesis());
  const ResultDoc back = result_from_json(result_to_json(r));
  CHECK(same_result(r, back));
  ResultDoc p = run_params(s);
  CHECK_FALSE(p.has_synthesis());
  CHECK(same_result(p, result_from_json(result_to_json(p))));
}

TEST_CASE("same_result notices a one-ulp change") {
  const ResultDoc r = run_synth(small_spec(), 1);
  ResultDoc t = r;
  t.params.alpha = std::nextafter(t.params.alpha, 1.0);
  CHECK_FALSE(same_result(r, t));
}

TEST_CASE("matrix files in both layouts") {
  const fs::path dir = scratch("matrix");
  write_text_file((dir / "h.json").string(), "[[1, 0], [0, 1], [-1, -1]]");
  write_text_file((dir / "h.txt").string(), "# three normals\n1 0\n0 1\n-1 -1\n");
  const Matrix a = load_matrix_file((dir / "h.json").string());
  const Matrix b = load_matrix_file((dir / "h.txt").string());
  CHECK(a.rows() == 3);
  CHECK(a == b);
  write_text_file((dir / "ragged.txt").string(), "1 0\n0\n");
  CHECK_THROWS_AS(load_matrix_file((dir / "ragged.txt").string()), InputError);
  CHECK_THROWS_AS(load_matrix_file((dir / "absent.txt").string()), InputError);
}

TEST_CASE("reduce maps the blocks") {
  const auto f = fixtures::reduced_order_plant();
  PartitionedSpec p{f.A11, f.A12, f.A21, f.A22, f.B1, f.C1, f.C2, HPolytope::box(Vector::Ones(2)), {}};
  const ProblemSpec s = reduce(p);
  const LtiSystem want = fixtures::reduced_order_mapped();
  CHECK(s.sys.A == want.A);
  CHECK(s.sys.B == want.B);
  CHECK(s.sys.C == want.C);
  CHECK(s.sys.D == want.D);
  CHECK(is_partitioned_document(partitioned_to_json(p)));
  CHECK_FALSE(is_partitioned_document(problem_to_json(s)));
  const PartitionedSpec back = partitioned_from_json(partitioned_to_json(p));
  CHECK(back.A22 == p.A22);

  PartitionedSpec decoupled = p;
  decoupled.A21.setZero();
  CHECK(reduce(decoupled).sys.B.isZero(0.0));

  PartitionedSpec unstable = p;
  unstable.A22 *= 3.0;
  CHECK_THROWS_AS(reduce(unstable), AssumptionError);
}

TEST_CASE("generated specs are deterministic with the requested radius") {
  const ProblemSpec a = generate(4, 2, 3, 0.9, 5), b = generate(4, 2, 3, 0.9, 5), c = generate(4, 2, 3, 0.9, 6);
  CHECK(problem_to_json(a) == problem_to_json(b));
  CHECK(problem_to_json(a) != problem_to_json(c));
  CHECK(a.sys.A == a.sys.A.transpose());
  const Eigen::EigenSolver<Matrix> eig(a.sys.A);
  CHECK(eig.eigenvalues().cwiseAbs().maxCoeff() == doctest::Approx(0.9).epsilon(1e-10));
  CHECK(a.Y.rows() == 6);
  CHECK_THROWS_AS(generate(2, 2, 2, 1.0, 1), InputError);
}

TEST_CASE("a synthesized result verifies and tampering is caught") {
  const ProblemSpec s = small_spec(11);
  const ResultDoc r = run_synth(s, 1);
  CHECK(r.termination != "");
  CHECK(r.distance <= r.objective + 1e-6);
  const Certificate ok = run_verify(s, r);
  CHECK_MESSAGE(ok.pass(), certificate_to_json(ok));

  ResultDoc bad_alpha = r;
  bad_alpha.params.alpha *= 0.25;
  CHECK_FALSE(run_verify(s, bad_alpha).pass());

  ResultDoc wide = r;
  wide.W = r.W.inflated(10.0);
  const Certificate c = run_verify(s, wide);
  CHECK_FALSE(c.pass());
  REQUIRE(c.find("output_inclusion"));
  CHECK_FALSE(c.find("output_inclusion")->pass);

  ResultDoc wrong_dim = r;
  wrong_dim.epsilon = Vector::Zero(1);
  CHECK_THROWS_AS(run_verify(s, wrong_dim), InputError);
}

TEST_CASE("parameter-only results verify") {
  const ProblemSpec s = illustrative_spec();
  const ResultDoc p = run_params(s);
  CHECK(p.params.s == 60);
  CHECK(run_verify(s, p).pass());
}

TEST_CASE("stage names are prefixed and the class is kept") {
  ProblemSpec s = illustrative_spec();
  s.options.s_max = 10;
  try {
    run_params(s);
    FAIL("expected an AssumptionError");
  } catch (const AssumptionError& e) {
    CHECK(std::string(e.what()).rfind("params: ", 0) == 0);
    CHECK(e.exit_code() == 3);
  }
  CHECK(SolverError("x").exit_code() == 4);
  CHECK(InputError("x").exit_code() == 2);
}

TEST_CASE("plot panels") {
  const ProblemSpec s = small_spec(13);
  ResultDoc r = run_synth(s, 1);
  r.W = BoxHullSet({Box(Vector::Zero(2), Vector::Ones(2))});
  const PlotData d = plot_data(s, r, 2, 50, 3);
  CHECK(d.W_outline.size() == 4);
  CHECK(d.Y_outline.size() == 4);
  CHECK(d.trajectories.size() == 2);
  CHECK(d.trajectories[0].size() == 50);

  const ResultDoc real = run_synth(s, 1);
  const PlotData e = plot_data(s, real, 2, 200, 3);
  REQUIRE(e.O_boundary.size() == 360);
  for (const Vector& y : e.O_boundary) CHECK(s.Y.contains(y, 1e-8));
  for (const auto& run : e.trajectories)
    for (const Vector& y : run) CHECK(s.Y.contains(y, 1e-8));

  const fs::path dir = scratch("plot");
  const auto files = write_plot_files(d, dir.string());
  CHECK(files.size() == 4);
  const std::string w = read_text_file((dir / "W_outline.csv").string());
  std::istringstream is(w);
  std::string line;
  int rows = 0;
  while (std::getline(is, line))
    if (!line.empty() && line[0] != '#' && line != "x,y") ++rows;
  CHECK(rows == 4);
}

#ifdef RPISYNTH_CLI_PATH
namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(RPISYNTH_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

}  // namespace

TEST_CASE("command-line exit codes") {
  const fs::path dir = scratch("cli");
  const std::string d = dir.string();
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("gen --nx 2 --nw 2 --ny 2 --rho 0.5 --seed 3 --count 2 --out " + d) == 0);
  REQUIRE(fs::exists(dir / "gen_3.json"));
  REQUIRE(fs::exists(dir / "gen_4.json"));
  const std::string spec = (dir / "gen_3.json").string();
  CHECK(run_cli("params " + spec + " --out " + d) == 0);
  CHECK(fs::exists(dir / "gen_3.params.json"));
  CHECK(run_cli("synth " + spec + " --N 2 --l 3 --max-iters 5 --out " + d) == 0);
  REQUIRE(fs::exists(dir / "gen_3.result.json"));
  CHECK(run_cli("verify " + spec + " " + (dir / "gen_3.result.json").string()) == 0);
  CHECK(run_cli("plot " + spec + " " + (dir / "gen_3.result.json").string() + " --out " + (dir / "plot").string()) == 0);
  CHECK(fs::exists(dir / "plot" / "trajectories.csv"));

  // tampered result
  ResultDoc r = load_result((dir / "gen_3.result.json").string());
  r.W = r.W.inflated(50.0);
  save_result(r, (dir / "tampered.json").string());
  CHECK(run_cli("verify " + spec + " " + (dir / "tampered.json").string()) == 3);

  // parse errors
  CHECK(run_cli("synth " + spec + " --N notanumber") == 2);
  CHECK(run_cli("synth " + spec + " --H hexagon") == 2);
  write_text_file((dir / "broken.json").string(), "{");
  CHECK(run_cli("params " + (dir / "broken.json").string()) == 2);

  // infeasible: no s within the cap
  CHECK(run_cli("params " + spec + " --s-max 1 --mu 1e-9") == 3);

  // several specs in parallel
  CHECK(run_cli("synth " + spec + " " + (dir / "gen_4.json").string() + " --N 2 --l 2 --max-iters 3 --out " +
                (dir / "batch").string()) == 0);
  CHECK(fs::exists(dir / "batch" / "gen_4.result.json"));
}
#endif
