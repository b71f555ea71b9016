#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "diracsea/bloch.hpp"
#include "diracsea/cfs.hpp"
#include "diracsea/evolution.hpp"
#include "diracsea/projector.hpp"
#include "diracsea/study.hpp"

namespace py = pybind11;
using namespace diracsea;

namespace {

Tolerances make_tol(double ode_tol, double quad_tol, double gap_tol) {
  Tolerances t;
  t.ode_tol = ode_tol;
  t.quad_tol = quad_tol;
  t.gap_tol = gap_tol;
  return t;
}

py::dict signature_dict(const SignatureResult& s) {
  py::dict d;
  d["matrix"] = Matrix2(s.s.matrix());
  d["eigenvalues"] = s.eigenvalues;
  d["eigenvectors"] = Matrix2(s.eigvectors.matrix());
  d["quad_error_estimate"] = s.quad_error_estimate;
  d["integral_bound"] = s.integral_bound;
  d["hermiticity_defect"] = s.hermiticity_defect;
  return d;
}

}  // namespace

PYBIND11_MODULE(_diracsea, m) {
  m.doc() = "Fermionic projector of a Dirac field in a closed FRW universe, mode by mode";

  // Leaked on purpose: the types must outlive module teardown.
  static auto* base = new py::exception<Error>(m, "DiracSeaError");
  static auto* degenerate = new py::exception<DegenerateSignature>(m, "DegenerateSignature", base->ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const DegenerateSignature& e) {
      py::set_error(*degenerate, e.what());
    } catch (const Error& e) {
      const std::string msg = std::string(error_kind_name(e.kind())) + ": " + e.what();
      if (is_validation_kind(e.kind()))
        py::set_error(PyExc_ValueError, msg.c_str());
      else
        py::set_error(*base, msg.c_str());
    }
  });

  m.attr("PI") = kPi;

  py::class_<Mode>(m, "Mode")
      .def(py::init<double, double, double, bool>(), py::arg("lam"), py::arg("mass"), py::arg("tau0"),
           py::arg("physical") = true)
      .def_property_readonly("lam", &Mode::lambda)
      .def_property_readonly("mass", &Mode::mass)
      .def_property_readonly("tau0", &Mode::tau0)
      .def_property_readonly("physical", &Mode::physical)
      .def("__repr__", [](const Mode& md) {
        return "Mode(lam=" + std::to_string(md.lambda()) + ", mass=" + std::to_string(md.mass()) +
               ", tau0=" + std::to_string(md.tau0()) + ")";
      });

  py::class_<ScaleFunction>(m, "ScaleFunction")
      .def("__call__", &ScaleFunction::operator())
      .def_property_readonly("r_max", &ScaleFunction::r_max)
      .def("integral", &ScaleFunction::integral, py::arg("a"), py::arg("b"))
      .def_static("piecewise", &ScaleFunction::piecewise, py::arg("breakpoints"), py::arg("values"));

  m.def("dust_scale", &dust_scale, py::arg("r_max"));
  m.def("table_scale", &table_scale, py::arg("taus"), py::arg("g"), py::arg("r_max"));

  py::class_<TestFunction>(m, "TestFunction")
      .def("__call__", &TestFunction::operator())
      .def_property_readonly("l1_norm", &TestFunction::l1_norm)
      .def_property_readonly("support", [](const TestFunction& f) {
        return std::make_pair(f.support_begin(), f.support_end());
      });
  m.def("bump", &bump, py::arg("a"), py::arg("b"), py::arg("direction"), py::arg("amplitude") = 1.0,
        py::arg("end") = kPi);

  m.def(
      "evolve",
      [](const Mode& md, const ScaleFunction& s, double a, double b, double tol) {
        return Matrix2(evolve(md, s, a, b, tol).u.matrix());
      },
      py::arg("mode"), py::arg("scale"), py::arg("tau_from"), py::arg("tau_to"), py::arg("tol") = 1e-10,
      "Propagator U from tau_from to tau_to as a 2x2 complex array.");

  m.def(
      "signature_operator",
      [](const Mode& md, const ScaleFunction& s, double ode_tol, double quad_tol, bool wkb) {
        const auto tol = make_tol(ode_tol, quad_tol, 1e-6);
        return signature_dict(wkb ? signature_operator_wkb(md, s, tol) : signature_operator(md, s, tol));
      },
      py::arg("mode"), py::arg("scale"), py::arg("ode_tol") = 1e-10, py::arg("quad_tol") = 1e-10,
      py::arg("wkb") = false);

  m.def("wkb_eigenvalues_closed_form", &wkb_eigenvalues_closed_form, py::arg("mode"), py::arg("scale"));

  m.def(
      "project",
      [](const Mode& md, const ScaleFunction& s, const TestFunction& phi, const std::string& variant,
         double ode_tol, double quad_tol, double gap_tol) -> Spinor {
        const auto tol = make_tol(ode_tol, quad_tol, gap_tol);
        if (variant == "exact") return fermionic_projector_apply(md, s, phi, tol).value;
        if (variant == "k_m") return k_m_apply(md, s, phi, tol.ode_tol).value;
        if (variant == "wkb_full") return p_wkb_apply(md, s, phi, tol, WkbVariant::Full).value;
        if (variant == "wkb_leading") return p_wkb_apply(md, s, phi, tol, WkbVariant::LeadingOrder).value;
        throw py::value_error("variant must be exact, k_m, wkb_full or wkb_leading");
      },
      py::arg("mode"), py::arg("scale"), py::arg("phi"), py::arg("variant") = "exact", py::arg("ode_tol") = 1e-10,
      py::arg("quad_tol") = 1e-10, py::arg("gap_tol") = 1e-6);

  py::class_<Segment>(m, "Segment")
      .def(py::init([](double r, double p) { return Segment{r, p}; }), py::arg("r"), py::arg("p"))
      .def_readonly("r", &Segment::r)
      .def_readonly("p", &Segment::p);

  py::class_<Scenario>(m, "Scenario")
      .def(py::init<double, double, std::vector<Segment>>(), py::arg("lam"), py::arg("mass"), py::arg("segments"))
      .def_property_readonly("mode", &Scenario::mode)
      .def_property_readonly("segments", &Scenario::segments)
      .def_property_readonly("total_duration", &Scenario::total_duration)
      .def_property_readonly("r_max", &Scenario::r_max)
      .def("scale", &Scenario::scale)
      .def("perturbed", &Scenario::perturbed, py::arg("segment"), py::arg("dp"))
      .def("signature", [](const Scenario& sc) {
        const auto c = scenario_signature_components(sc);
        return std::make_pair(c.s0, Vec3(c.s));
      });
  m.def("build_six_segment", &build_six_segment, py::arg("lam") = 1.5, py::arg("mass") = 1.0);
  m.def("build_twelve_segment", &build_twelve_segment, py::arg("lam") = 1.5, py::arg("mass") = 1.0);

  m.def(
      "bloch_components",
      [](const Scenario& sc, int samples_per_segment) {
        const auto rows = v_components(sc, scenario_grid(sc, samples_per_segment));
        Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), 7);
        for (std::size_t i = 0; i < rows.size(); ++i) {
          out(i, 0) = rows[i].tau;
          out.block<1, 3>(i, 1) = rows[i].v.transpose();
          out.block<1, 3>(i, 4) = rows[i].cum_int_vr.transpose();
        }
        return out;
      },
      py::arg("scenario"), py::arg("samples_per_segment") = 50,
      "Rows (tau, v1, v2, v3, int v1 R, int v2 R, int v3 R).");

  m.def(
      "causal_classes",
      [](const std::vector<Mode>& modes, const ScaleFunction& s, const std::vector<std::pair<double, double>>& pts) {
        const auto family = SolutionFamily::full_negative(modes, s);
        std::vector<std::string> out;
        for (const auto& [x, y] : pts)
          out.emplace_back(causal_class_name(causal_classify(local_correlation(family, x), local_correlation(family, y))));
        return out;
      },
      py::arg("modes"), py::arg("scale"), py::arg("points"));

  m.def(
      "study",
      [](const std::string& kind, std::vector<double> grid, double mass, double lam, const std::string& policy) {
        StudyConfig cfg;
        cfg.kind = parse_study_kind(kind);
        cfg.grid = std::move(grid);
        cfg.mass = mass;
        cfg.lambda = lam;
        cfg.lambda_policy = parse_lambda_policy(policy);
        const auto res = run_study(cfg);
        py::dict d;
        d["fitted_c"] = res.fitted_c;
        d["slope"] = res.slope;
        d["all_pass"] = res.all_pass;
        py::list records;
        for (const auto& r : res.records) {
          py::dict rec;
          rec["m_rmax"] = r.m_rmax;
          rec["lam"] = r.lambda;
          rec["measured"] = r.measured;
          rec["envelope"] = r.envelope;
          rec["pass"] = r.pass;
          records.append(rec);
        }
        d["records"] = records;
        return d;
      },
      py::arg("kind"), py::arg("grid"), py::arg("mass") = 1.0, py::arg("lam") = 1.5, py::arg("lambda_policy") = "fixed");
}
