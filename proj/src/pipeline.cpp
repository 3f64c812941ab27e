#include "rpisynth/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "rpisynth/encoder.hpp"
#include "rpisynth/synthesizer.hpp"

namespace rpisynth {

namespace {

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  const std::string tag = std::string(name) + ": ";
  try {
    return f();
  } catch (const InputError& e) {
    throw InputError(tag + e.what());
  } catch (const AssumptionError& e) {
    throw AssumptionError(tag + e.what());
  } catch (const SolverError& e) {
    throw SolverError(tag + e.what());
  } catch (const Error& e) {
    throw Error(tag + e.what());
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Matrix normals_of(const SynthOptions& o, int ny) { return o.H_rows.rows() > 0 ? o.H_rows : make_H(o.H, ny); }

std::vector<Vector> vertices_of(const ProblemSpec& spec) {
  return spec.Y_vertices.empty() ? vertices_hpoly(spec.Y) : spec.Y_vertices;
}

// Every check except the scalar ones; fills `distance` with d_Y of S(l, W).
Certificate certify_set(const ProblemSpec& spec, const ResultDoc& doc, double* distance) {
  const LtiSystem& sys = spec.sys;
  detail::require(doc.W.dim() == sys.nw(), "result W has the wrong dimension");
  detail::require(doc.H.cols() == sys.ny(), "result H must have n_y columns");
  detail::require(doc.epsilon.size() == doc.H.rows(), "result epsilon length differs from the rows of H");
  detail::require(doc.l >= 0, "result l must be nonnegative");
  Certificate cert;
  cert.merge(verify_output_inclusion(sys, spec.Y, doc.params, doc.W));
  cert.merge(verify_gamma(sys, doc.W, doc.params.gamma));
  cert.merge(verify_origin(doc.W));
  const std::vector<Vector> verts = vertices_of(spec);
  cert.merge(verify_coverage(sys, verts, doc.W, doc.l, doc.H, doc.epsilon));
  const DistanceResult d = distance_dY(sys, verts, doc.W, doc.l, doc.H);
  if (distance) *distance = d.objective;
  // the exact distance can never exceed a feasible witness
  cert.add("distance_bound", doc.objective - d.objective, -1, 1e-6);
  if (spec.options.mc_runs > 0 && spec.options.mc_steps > 0) {
    Rng rng(spec.options.seed);
    const MonteCarloReport mc = monte_carlo(sys, doc.W, spec.Y, spec.options.mc_steps, spec.options.mc_runs, rng);
    cert.add("monte_carlo", -mc.max_excursion, static_cast<int>(mc.violations), 1e-8);
  }
  return cert;
}

}  // namespace

ResultDoc run_params(const ProblemSpec& spec) {
  return stage("params", [&] {
    const auto t0 = std::chrono::steady_clock::now();
    const SynthOptions& o = spec.options;
    check_assumptions(spec.sys, spec.Y);
    ResultDoc doc;
    doc.params = select_params(spec.sys, spec.Y, o.gamma, o.mu, o.s_max);
    doc.constants = compute_constants(spec.sys, spec.Y, doc.params.s);
    doc.certificate = verify_params(spec.sys, spec.Y, doc.params).checks;
    doc.timing["params"] = seconds_since(t0);
    return doc;
  });
}

ResultDoc run_synth(const ProblemSpec& spec, int threads, const LogFn& log) {
  auto say = [&](const std::string& m) {
    if (log) log(m);
  };
  ResultDoc doc = run_params(spec);
  const SynthOptions& o = spec.options;
  say("params: s=" + std::to_string(doc.params.s));

  const SynthProblem problem = stage("assemble", [&] {
    const int l = o.l > 0 ? o.l : doc.params.s;
    return assemble(spec.sys, spec.Y, spec.Y_vertices, doc.params, o.N, l, normals_of(o, spec.sys.ny()));
  });
  doc.N = o.N;
  doc.l = problem.layout.l;
  doc.H = problem.H;
  doc.warnings = problem.warnings;

  const auto t0 = std::chrono::steady_clock::now();
  SynthResult r = stage("synth", [&] {
    const Vector beta0 = o.beta0 == "heuristic" ? heuristic_beta(problem.layout) : uniform_beta(problem.layout);
    SynthResult out = alternate(problem, beta0, o.zeta, o.max_iters);
    std::ostringstream m;
    m << "synth: " << out.iterations << " iterations, objective " << std::setprecision(8) << out.objective
      << " (" << out.termination << ")";
    say(m.str());
    if (o.restarts > 0) {
      out = refine(problem, out, o.restarts, o.seed, o.zeta, o.max_iters,
                   threads > 0 ? threads : default_threads());
      std::ostringstream m2;
      m2 << "refine: objective " << std::setprecision(8) << out.objective;
      say(m2.str());
    }
    return out;
  });
  doc.timing["synth"] = seconds_since(t0);
  doc.W = r.W;
  doc.epsilon = r.epsilon;
  doc.objective = r.objective;
  doc.history = r.history;
  doc.iterations = r.iterations;
  doc.termination = r.termination;

  const auto t1 = std::chrono::steady_clock::now();
  stage("verify", [&] {
    Certificate cert = certify_set(spec, doc, &doc.distance);
    doc.certificate.insert(doc.certificate.end(), cert.checks.begin(), cert.checks.end());
  });
  doc.timing["verify"] = seconds_since(t1);
  return doc;
}

Certificate run_verify(const ProblemSpec& spec, const ResultDoc& result) {
  return stage("verify", [&] {
    Certificate cert = verify_params(spec.sys, spec.Y, result.params);
    if (result.has_synthesis()) cert.merge(certify_set(spec, result, nullptr));
    return cert;
  });
}

ProblemSpec reduce(const PartitionedSpec& p) {
  return stage("reduce", [&] {
    if (spectral_radius(p.A22) >= 1.0) throw AssumptionError("A22 is not strictly stable");
    ProblemSpec spec;
    spec.sys = LtiSystem(p.A22, p.A21, p.C2, p.C1);
    spec.Y = p.Y;
    spec.options = p.options;
    check_assumptions(spec.sys, spec.Y);
    return spec;
  });
}

ProblemSpec generate(int nx, int nw, int ny, double rho, std::uint64_t seed) {
  detail::require(nx >= 1 && nw >= 1 && ny >= 1, "dimensions must be positive");
  detail::require(rho > 0.0 && rho < 1.0, "rho must lie in (0, 1)");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&](int r, int c) {
    Matrix m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = normal(rng);
    return m;
  };
  Matrix A = draw(nx, nx);
  A = 0.5 * (A + A.transpose()).eval();
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(A, Eigen::EigenvaluesOnly);
  const double r = eig.eigenvalues().cwiseAbs().maxCoeff();
  if (r > 0.0) A *= rho / r;
  else A = rho * Matrix::Identity(nx, nx);
  ProblemSpec spec;
  const Matrix B = draw(nx, nw), C = draw(ny, nx), D = draw(ny, nw);
  spec.sys = LtiSystem(A, B, C, D);
  spec.Y = HPolytope::box(Vector::Ones(ny));
  spec.options.mu = 1e-2;
  spec.options.gamma = 1.0;
  spec.options.H = "box";
  spec.options.seed = seed;
  return spec;
}

std::vector<Vector> output_set_boundary(const LtiSystem& sys, const RpiParams& params, const BoxHullSet& W,
                                        int directions) {
  detail::require(sys.ny() == 2, "the output set panel needs n_y = 2");
  detail::require(params.alpha < 1.0, "alpha must be below 1");
  const double k = 1.0 / (1.0 - params.alpha);
  std::vector<Matrix> CAt;  // (1-alpha)^{-1} C A^t
  Matrix P = k * sys.C;
  for (int t = 0; t < params.s; ++t) {
    CAt.push_back(P);
    P = (P * sys.A).eval();
  }
  std::vector<Vector> pts;
  for (int d = 0; d < directions; ++d) {
    const double ang = 2.0 * std::numbers::pi * d / directions;
    Vector p(2);
    p << std::cos(ang), std::sin(ang);
    Vector y = sys.D * support_point(sys.D, p, W).point;
    for (const Matrix& V : CAt) {
      const Matrix T = V * sys.B;
      y += T * support_point(T, p, W).point;
      const Vector dir = V.transpose() * p;
      y += params.lambda * (V * dir.unaryExpr([](double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }));
    }
    pts.push_back(y);
  }
  return pts;
}

PlotData plot_data(const ProblemSpec& spec, const ResultDoc& result, int runs, int steps, std::uint64_t seed) {
  return stage("plot", [&] {
    const LtiSystem& sys = spec.sys;
    detail::require(sys.nw() == 2 || sys.ny() == 2, "plot needs n_w = 2 or n_y = 2");
    detail::require(result.has_synthesis(), "the result has no disturbance set");
    detail::require(result.W.dim() == sys.nw(), "result W has the wrong dimension");
    PlotData d;
    if (sys.nw() == 2) d.W_outline = hull_outline(result.W);
    if (sys.ny() == 2) {
      d.Y_outline = convex_hull_2d(vertices_of(spec));
      d.O_boundary = output_set_boundary(sys, result.params, result.W);
    }
    Rng rng(seed);
    for (int r = 0; r < runs; ++r) {
      std::vector<Vector> ys;
      for (const auto& pt : simulate(sys, result.W, Vector::Zero(sys.nx()), steps, rng)) ys.push_back(pt.y);
      d.trajectories.push_back(std::move(ys));
    }
    return d;
  });
}

std::vector<std::string> write_plot_files(const PlotData& data, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> written;
  auto polygon = [&](const std::string& name, const char* comment, const std::vector<Vector>& pts) {
    if (pts.empty()) return;
    const std::string path = (std::filesystem::path(dir) / name).string();
    std::ostringstream os;
    os << std::setprecision(17) << "# " << comment << "\nx,y\n";
    for (const Vector& v : pts) os << v[0] << ',' << v[1] << '\n';
    write_text_file(path, os.str());
    written.push_back(path);
  };
  polygon("W_outline.csv", "disturbance set boundary, counterclockwise", data.W_outline);
  polygon("Y_outline.csv", "output constraint set vertices, counterclockwise", data.Y_outline);
  polygon("O_boundary.csv", "support points of the output set bound over 360 directions (inner chord polygon)",
          data.O_boundary);
  if (!data.trajectories.empty()) {
    const std::string path = (std::filesystem::path(dir) / "trajectories.csv").string();
    std::ostringstream os;
    os << std::setprecision(17) << "# output trajectories from x0 = 0\nrun,t";
    const auto ny = data.trajectories.front().empty() ? 0 : data.trajectories.front().front().size();
    for (Eigen::Index c = 0; c < ny; ++c) os << ",y" << (c + 1);
    os << '\n';
    for (size_t r = 0; r < data.trajectories.size(); ++r)
      for (size_t t = 0; t < data.trajectories[r].size(); ++t) {
        os << r << ',' << t;
        for (Eigen::Index c = 0; c < ny; ++c) os << ',' << data.trajectories[r][t][c];
        os << '\n';
      }
    write_text_file(path, os.str());
    written.push_back(path);
  }
  return written;
}

}  // namespace rpisynth
