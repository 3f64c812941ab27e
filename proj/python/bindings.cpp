#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rpisynth/pipeline.hpp"

namespace py = pybind11;
using namespace rpisynth;

namespace {

LtiSystem make_system(const Matrix& A, const Matrix& B, const Matrix& C, const Matrix& D) {
  return LtiSystem(A, B, C, D.size() ? D : Matrix::Zero(C.rows(), B.cols()));
}

BoxHullSet make_hull(const Matrix& centers, const Matrix& halfwidths) {
  if (centers.rows() != halfwidths.rows() || centers.cols() != halfwidths.cols())
    throw InputError("centers and halfwidths must have the same shape");
  std::vector<Box> boxes;
  for (Eigen::Index j = 0; j < centers.rows(); ++j)
    boxes.emplace_back(centers.row(j).transpose(), halfwidths.row(j).transpose());
  return BoxHullSet(std::move(boxes));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Disturbance-set synthesis for mu-RPI sets (C++ core)";

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<AssumptionError>(m, "AssumptionError", PyExc_ValueError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

  py::class_<RpiParams>(m, "RpiParams")
      .def_readonly("s", &RpiParams::s)
      .def_readonly("alpha", &RpiParams::alpha)
      .def_readonly("lambda_", &RpiParams::lambda)
      .def_readonly("gamma", &RpiParams::gamma)
      .def_readonly("mu", &RpiParams::mu)
      .def("__repr__", [](const RpiParams& p) {
        return "RpiParams(s=" + std::to_string(p.s) + ", alpha=" + std::to_string(p.alpha) +
               ", lambda=" + std::to_string(p.lambda) + ")";
      });

  py::class_<RpiConstants>(m, "RpiConstants")
      .def_readonly("s", &RpiConstants::s)
      .def_readonly("L", &RpiConstants::L)
      .def_readonly("theta", &RpiConstants::theta)
      .def_readonly("M", &RpiConstants::M)
      .def_readonly("zeta", &RpiConstants::zeta);

  m.def(
      "select_params",
      [](const Matrix& A, const Matrix& B, const Matrix& C, const Matrix& D, const Matrix& G, const Vector& g,
         double gamma, double mu, int s_max) {
        return select_params(make_system(A, B, C, D), HPolytope{G, g}, gamma, mu, s_max);
      },
      py::arg("A"), py::arg("B"), py::arg("C"), py::arg("D"), py::arg("G"), py::arg("g"), py::arg("gamma"),
      py::arg("mu"), py::arg("s_max") = 1000);

  m.def(
      "compute_constants",
      [](const Matrix& A, const Matrix& B, const Matrix& C, const Matrix& D, const Matrix& G, const Vector& g,
         int s) { return compute_constants(make_system(A, B, C, D), HPolytope{G, g}, s); },
      py::arg("A"), py::arg("B"), py::arg("C"), py::arg("D"), py::arg("G"), py::arg("g"), py::arg("s"));

  m.def(
      "support_hull",
      [](const Matrix& T, const Vector& p, const Matrix& centers, const Matrix& halfwidths) {
        return support_hull(T, p, make_hull(centers, halfwidths));
      },
      py::arg("T"), py::arg("p"), py::arg("centers"), py::arg("halfwidths"),
      "max of p' T w over the convex hull of boxes given row-wise");

  m.def(
      "contains_point",
      [](const Matrix& centers, const Matrix& halfwidths, const Vector& w, double tol) {
        return contains_point(make_hull(centers, halfwidths), w, tol).inside;
      },
      py::arg("centers"), py::arg("halfwidths"), py::arg("w"), py::arg("tol") = 1e-9);

  // JSON in, JSON out for the document-level stages
  m.def(
      "params_json", [](const std::string& spec) { return result_to_json(run_params(problem_from_json(spec))); },
      py::arg("spec"));
  m.def(
      "synth_json",
      [](const std::string& spec, int threads) {
        const ProblemSpec p = problem_from_json(spec);
        py::gil_scoped_release release;
        return result_to_json(run_synth(p, threads));
      },
      py::arg("spec"), py::arg("threads") = 0);
  m.def(
      "verify_json",
      [](const std::string& spec, const std::string& result) {
        const Certificate c = run_verify(problem_from_json(spec), result_from_json(result));
        return py::make_tuple(c.pass(), certificate_to_json(c));
      },
      py::arg("spec"), py::arg("result"));
  m.def(
      "generate_json",
      [](int nx, int nw, int ny, double rho, std::uint64_t seed) {
        return problem_to_json(generate(nx, nw, ny, rho, seed));
      },
      py::arg("nx"), py::arg("nw"), py::arg("ny"), py::arg("rho"), py::arg("seed"));
  m.def(
      "reduce_json",
      [](const std::string& partitioned) { return problem_to_json(reduce(partitioned_from_json(partitioned))); },
      py::arg("partitioned"));
}
