// rpisynth: params | synth | verify | reduce | gen | plot
//
// Exit status: 0 ok, 2 bad input, 3 infeasible or failed certificate,
// 4 LP failure.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "rpisynth/pipeline.hpp"
#include "rpisynth/synthesizer.hpp"

namespace fs = std::filesystem;
using namespace rpisynth;

namespace {

struct Overrides {
  std::optional<double> mu, gamma, zeta;
  std::optional<int> N, l, max_iters, restarts, s_max;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> H;

  void attach(CLI::App* app) {
    app->add_option("--mu", mu, "approximation accuracy mu > 0");
    app->add_option("--gamma", gamma, "bound gamma on B W (infinity norm)");
    app->add_option("--N", N, "number of boxes");
    app->add_option("--l", l, "reach horizon (0: use s)");
    app->add_option("--H", H, "normals of B(eps): box | uniform:k | matrix file");
    app->add_option("--zeta", zeta, "stopping tolerance");
    app->add_option("--max-iters", max_iters, "iteration limit");
    app->add_option("--restarts", restarts, "multi-start restarts after the first run");
    app->add_option("--seed", seed, "random seed");
    app->add_option("--s-max", s_max, "largest s tried");
  }

  void apply(SynthOptions& o) const {
    if (mu) o.mu = *mu;
    if (gamma) o.gamma = *gamma;
    if (zeta) o.zeta = *zeta;
    if (N) o.N = *N;
    if (l) o.l = *l;
    if (max_iters) o.max_iters = *max_iters;
    if (restarts) o.restarts = *restarts;
    if (s_max) o.s_max = *s_max;
    if (seed) o.seed = *seed;
    if (H) {
      if (*H == "box" || H->rfind("uniform:", 0) == 0) {
        o.H = *H;
        o.H_rows.resize(0, 0);
      } else {
        o.H_rows = load_matrix_file(*H);
      }
    }
  }
};

// Re-validates after overrides by a round trip through the parser.
ProblemSpec load_spec(const std::string& path, const Overrides& ov) {
  ProblemSpec spec = load_problem(path);
  ov.apply(spec.options);
  return problem_from_json(problem_to_json(spec));
}

std::string stem(const std::string& path) { return fs::path(path).stem().string(); }

std::string out_path(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  return (fs::path(dir) / name).string();
}

void print_params(std::ostream& os, const ResultDoc& d) {
  os << std::setprecision(10);
  os << "s       " << d.params.s << '\n'
     << "alpha   " << d.params.alpha << '\n'
     << "lambda  " << d.params.lambda << '\n'
     << "theta   " << d.constants.theta << '\n'
     << "M       " << d.constants.M << '\n'
     << "zeta_s  " << d.constants.zeta << '\n';
}

void print_checks(std::ostream& os, const std::vector<Check>& checks) {
  os << std::setprecision(4) << std::scientific;
  for (const Check& c : checks)
    os << (c.pass ? "pass  " : "FAIL  ") << std::left << std::setw(20) << c.name << std::right
       << std::setw(12) << c.margin << (c.location >= 0 ? "  at " + std::to_string(c.location) : "")
       << '\n';
  os << std::defaultfloat;
}

bool all_pass(const std::vector<Check>& checks) {
  for (const Check& c : checks)
    if (!c.pass) return false;
  return true;
}

int cmd_params(const std::string& spec_path, const Overrides& ov, const std::string& out) {
  const ProblemSpec spec = load_spec(spec_path, ov);
  const ResultDoc d = run_params(spec);
  print_params(std::cout, d);
  print_checks(std::cout, d.certificate);
  if (!out.empty()) save_result(d, out_path(out, stem(spec_path) + ".params.json"));
  return all_pass(d.certificate) ? 0 : 3;
}

int cmd_synth(const std::vector<std::string>& specs, const Overrides& ov, const std::string& out) {
  if (specs.size() > 1 && out.empty()) throw InputError("several specs need --out");
  std::vector<ProblemSpec> loaded;
  for (const auto& s : specs) loaded.push_back(load_spec(s, ov));

  std::mutex io;
  auto log = [&](const std::string& name) {
    return [&io, name](const std::string& m) {
      std::lock_guard<std::mutex> lk(io);
      std::cerr << name << ": " << m << '\n';
    };
  };
  if (loaded.size() == 1) {
    const ResultDoc d = run_synth(loaded[0], 0, log(stem(specs[0])));
    if (out.empty()) std::cout << result_to_json(d);
    else save_result(d, out_path(out, stem(specs[0]) + ".result.json"));
    std::cerr << std::setprecision(8) << "objective " << d.objective << ", distance " << d.distance << '\n';
    print_checks(std::cerr, d.certificate);
    return all_pass(d.certificate) ? 0 : 3;
  }

  // One pipeline per spec, fanned out over the worker threads.
  const int workers = std::max(1, std::min<int>(default_threads(), static_cast<int>(loaded.size())));
  std::atomic<size_t> next{0};
  std::vector<int> codes(loaded.size(), 0);
  auto work = [&] {
    for (size_t i; (i = next++) < loaded.size();) {
      const std::string name = stem(specs[i]);
      try {
        const ResultDoc d = run_synth(loaded[i], 1, log(name));
        save_result(d, out_path(out, name + ".result.json"));
        codes[i] = all_pass(d.certificate) ? 0 : 3;
        std::lock_guard<std::mutex> lk(io);
        std::cerr << name << ": objective " << d.objective << (codes[i] ? " (certificate failed)" : "") << '\n';
      } catch (const Error& e) {
        std::lock_guard<std::mutex> lk(io);
        std::cerr << name << ": error: " << e.what() << '\n';
        codes[i] = e.exit_code();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < workers; ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  int worst = 0;
  for (int c : codes) worst = std::max(worst, c);
  return worst;
}

int cmd_verify(const std::string& spec_path, const std::string& result_path, const Overrides& ov,
               const std::string& out) {
  const ProblemSpec spec = load_spec(spec_path, ov);
  const ResultDoc d = load_result(result_path);
  const Certificate cert = run_verify(spec, d);
  print_checks(std::cout, cert.checks);
  std::cout << (cert.pass() ? "certificate: pass\n" : "certificate: FAIL\n");
  if (!out.empty()) write_text_file(out_path(out, stem(result_path) + ".certificate.json"), certificate_to_json(cert));
  return cert.pass() ? 0 : 3;
}

int cmd_reduce(const std::string& path, const Overrides& ov, const std::string& out) {
  PartitionedSpec p = load_partitioned(path);
  ov.apply(p.options);
  const ProblemSpec spec = reduce(p);
  if (out.empty()) std::cout << problem_to_json(spec);
  else save_problem(spec, out_path(out, stem(path) + ".reduced.json"));
  return 0;
}

int cmd_gen(int nx, int nw, int ny, double rho, int count, const Overrides& ov, const std::string& out) {
  if (count < 1) throw InputError("--count must be at least 1");
  if (count > 1 && out.empty()) throw InputError("--count above 1 needs --out");
  const std::uint64_t seed0 = ov.seed.value_or(1);
  for (int k = 0; k < count; ++k) {
    const std::uint64_t seed = seed0 + static_cast<std::uint64_t>(k);
    ProblemSpec spec = generate(nx, nw, ny, rho, seed);
    Overrides o = ov;
    o.seed.reset();
    o.apply(spec.options);
    spec = problem_from_json(problem_to_json(spec));
    if (out.empty()) std::cout << problem_to_json(spec);
    else save_problem(spec, out_path(out, "gen_" + std::to_string(seed) + ".json"));
  }
  return 0;
}

int cmd_plot(const std::string& spec_path, const std::string& result_path, int runs, int steps,
             const Overrides& ov, const std::string& out) {
  const ProblemSpec spec = load_spec(spec_path, ov);
  const ResultDoc d = load_result(result_path);
  const PlotData data = plot_data(spec, d, runs, steps, ov.seed.value_or(1));
  for (const auto& p : write_plot_files(data, out.empty() ? "plot" : out)) std::cout << p << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Disturbance sets for output-constrained linear systems"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "rpisynth 0.1.0");

  Overrides ov;
  std::string out;
  std::string spec_path, result_path, part_path;
  std::vector<std::string> specs;

  auto* params = app.add_subcommand("params", "select (s, alpha, lambda)");
  params->add_option("spec", spec_path, "problem spec (JSON)")->required()->check(CLI::ExistingFile);

  auto* synth = app.add_subcommand("synth", "synthesize W and certify it");
  synth->add_option("specs", specs, "problem specs (JSON); several run in parallel")->required()->check(CLI::ExistingFile);

  auto* verify = app.add_subcommand("verify", "re-certify a stored result");
  verify->add_option("spec", spec_path, "problem spec")->required()->check(CLI::ExistingFile);
  verify->add_option("result", result_path, "result document")->required()->check(CLI::ExistingFile);

  auto* red = app.add_subcommand("reduce", "map a partitioned plant to a standard spec");
  red->add_option("partitioned", part_path, "partitioned spec")->required()->check(CLI::ExistingFile);

  int nx = 3, nw = 2, ny = 2, count = 1;
  double rho = 0.7;
  auto* gen = app.add_subcommand("gen", "generate random problem specs");
  gen->add_option("--nx", nx, "state dimension")->capture_default_str();
  gen->add_option("--nw", nw, "disturbance dimension")->capture_default_str();
  gen->add_option("--ny", ny, "output dimension")->capture_default_str();
  gen->add_option("--rho", rho, "spectral radius of A")->capture_default_str();
  gen->add_option("--count", count, "number of specs, seeds seed..seed+count-1")->capture_default_str();

  int runs = 3, steps = 500;
  auto* plot = app.add_subcommand("plot", "write plot data (CSV)");
  plot->add_option("spec", spec_path, "problem spec")->required()->check(CLI::ExistingFile);
  plot->add_option("result", result_path, "result document")->required()->check(CLI::ExistingFile);
  plot->add_option("--runs", runs, "trajectories")->capture_default_str();
  plot->add_option("--steps", steps, "steps per trajectory")->capture_default_str();

  for (auto* sub : {params, synth, verify, red, gen, plot}) {
    ov.attach(sub);
    sub->add_option("--out", out, "output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*params) return cmd_params(spec_path, ov, out);
    if (*synth) return cmd_synth(specs, ov, out);
    if (*verify) return cmd_verify(spec_path, result_path, ov, out);
    if (*red) return cmd_reduce(part_path, ov, out);
    if (*gen) return cmd_gen(nx, nw, ny, rho, count, ov, out);
    if (*plot) return cmd_plot(spec_path, result_path, runs, steps, ov, out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
