#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/gil_safe_call_once.h>

#include "rhoindex/dimension_study.hpp"
#include "rhoindex/divergence.hpp"
#include "rhoindex/estimator.hpp"
#include "rhoindex/matrix_io.hpp"

namespace py = pybind11;
using namespace rhoindex;

namespace {

ExtractionMode mode_from_string(const std::string& s) {
  if (s == "all-pairs") return ExtractionMode::AllPairs;
  if (s == "upper") return ExtractionMode::UpperTriangle;
  throw Error(ErrorCode::InvalidArgument, "mode must be 'all-pairs' or 'upper'");
}

MatrixFormat format_for(const std::string& path, const std::string& format) {
  if (!format.empty()) return matrix_format_from_string(format);
  return path.size() >= 4 && path.compare(path.size() - 4, 4, ".npy") == 0 ? MatrixFormat::Npy : MatrixFormat::Csv;
}

py::dict to_dict(const DivergenceReport& r) {
  py::dict d;
  d["distribution"] = std::string(to_string(r.distribution));
  d["energy_distance"] = r.energy_distance;
  d["mmd_rbf"] = r.mmd_rbf;
  d["mardia_skew2"] = r.mardia_skew2;
  d["mardia_excess2"] = r.mardia_excess2;
  d["mardia_combined"] = r.mardia_combined;
  d["wasserstein2"] = r.wasserstein2;
  d["n"] = r.sample_size;
  d["seed"] = r.seed;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Energy-distance redundancy index";

  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
  error_type.call_once_and_store_result(
      [&]() { return py::object(py::reinterpret_steal<py::object>(PyErr_NewException("rhoindex.RhoIndexError", PyExc_ValueError, nullptr))); });
  m.attr("RhoIndexError") = error_type.get_stored();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object type = error_type.get_stored();
      py::object inst = type(e.what());
      inst.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(type.ptr(), inst.ptr());
    }
  });

  py::class_<RhoEstimate>(m, "RhoEstimate")
      .def_readonly("rho_hat", &RhoEstimate::rho_hat)
      .def_readonly("rho_hat_plus", &RhoEstimate::rho_hat_plus)
      .def_readonly("mixed_term", &RhoEstimate::mixed_term)
      .def_readonly("self_term", &RhoEstimate::self_term)
      .def_readonly("gaussian_constant", &RhoEstimate::gaussian_constant)
      .def_readonly("m", &RhoEstimate::m)
      .def("__repr__", [](const RhoEstimate& e) {
        return "RhoEstimate(rho_hat=" + std::to_string(e.rho_hat) + ", m=" + std::to_string(e.m) + ")";
      });

  m.def("gaussian_self_constant", &gaussian_self_constant);
  m.def("mixed_expectation", &mixed_expectation, py::arg("x"));
  m.def("fisher_z", &fisher_z, py::arg("r"), py::arg("n_obs"));
  m.def("empirical_self_term", [](const std::vector<double>& z) { return empirical_self_term(z); }, py::arg("z"));
  m.def("robust_standardize", [](const std::vector<double>& x) { return robust_standardize(x).z; }, py::arg("x"));
  m.def("energy_distance", [](const std::vector<double>& z) { return energy_distance(z); }, py::arg("z"));
  m.def(
      "rho_from_weights", [](const Matrix& c, const std::string& mode) { return rho_from_weights(c, mode_from_string(mode)); },
      py::arg("matrix"), py::arg("mode") = "all-pairs");
  m.def("rho_from_activations", &rho_from_activations, py::arg("activations"));

  m.def(
      "divergence_table",
      [](std::size_t n, std::uint64_t seed, std::size_t mmd_max_samples) {
        py::list rows;
        for (const DivergenceReport& r : divergence_table(n, seed, {mmd_max_samples})) rows.append(to_dict(r));
        return rows;
      },
      py::arg("n") = 2000, py::arg("seed") = 0, py::arg("mmd_max_samples") = 2000);

  m.def(
      "dimscan",
      [](const std::vector<std::size_t>& dims, std::size_t trials, bool symmetric, std::uint64_t seed) {
        DimScanConfig c;
        c.dims = dims;
        c.trials = trials;
        c.symmetry = symmetric ? Symmetry::Symmetric : Symmetry::Nonsymmetric;
        c.master_seed = seed;
        py::list rows;
        for (const DimScanSummary& s : summarize_dimscan(run_dimscan(c))) {
          py::dict d;
          d["n"] = s.n;
          d["m_used"] = s.m_used;
          d["mean"] = s.mean;
          d["std"] = s.stddev;
          d["q05"] = s.q05;
          d["q95"] = s.q95;
          rows.append(d);
        }
        return rows;
      },
      py::arg("dims") = kDefaultDims, py::arg("trials") = 100, py::arg("symmetric") = false, py::arg("seed") = 0);

  m.def(
      "read_matrix", [](const std::string& path, const std::string& format) { return read_matrix(path, format_for(path, format)); },
      py::arg("path"), py::arg("format") = "");
}
