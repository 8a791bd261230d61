#include "ciradar/harness.hpp"
#include "ciradar/robust.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace ciradar;

namespace {

ChannelSet channels(const CMatrix& H, const CMatrix& G, const CMatrix& F) {
  ChannelSet cs{H, G, F, 0, std::nullopt};
  cs.validate();
  return cs;
}

LinkBudget budget(double gamma_db, double inr_db, double sigma_c2, double sigma_r2, double radar_power) {
  LinkBudget b;
  b.sinr_db = {gamma_db};
  b.inr_db = {inr_db};
  b.sigma_c2 = sigma_c2;
  b.sigma_r2 = sigma_r2;
  b.radar_power = radar_power;
  return b;
}

py::dict solution_dict(const BeamformingSolution& s) {
  py::dict d;
  d["w"] = s.w;
  d["precoders"] = s.precoders;
  d["power"] = s.power;
  d["interference"] = s.interference;
  d["inr"] = s.inr;
  d["ci_slack"] = s.ci_slack;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Constructive-interference precoding and radar metrics";

  m.def("gen_channels", [](int n, int k, int mm, std::uint64_t seed) {
    const ChannelSet cs = gen_channels(n, k, mm, seed);
    py::dict d;
    d["H"] = cs.H;
    d["G"] = cs.G;
    d["F"] = cs.F;
    return d;
  }, py::arg("n"), py::arg("k"), py::arg("m"), py::arg("seed"));

  m.def("psk_phases", [](int k, int order, std::uint64_t seed) { return Vector(psk_frame(k, 1, order, seed).slot(0)); },
        py::arg("k"), py::arg("order"), py::arg("seed"));

  m.def("power_min",
        [](const CMatrix& H, const CMatrix& G, const CMatrix& F, const Vector& phases, int order, double gamma_db,
           double inr_db, double sigma_c2, double sigma_r2, double radar_power, const std::string& engine) {
          const CiProblem p =
              build_problem(channels(H, G, F), phases, order, budget(gamma_db, inr_db, sigma_c2, sigma_r2, radar_power));
          if (engine == "qcqp") {
            const EngineResult r = power_min_qcqp(p);
            py::dict d = solution_dict(r.solution);
            d["status"] = to_string(r.qcqp.status);
            return d;
          }
          if (engine != "gp") throw std::invalid_argument("engine must be gp or qcqp");
          const GpResult r = solve_gp(p);
          py::dict d = solution_dict(r.solution);
          d["status"] = to_string(r.dual.status);
          d["iterations"] = r.dual.iterations;
          d["dual_objective"] = r.dual.dual_objective;
          return d;
        },
        py::arg("H"), py::arg("G"), py::arg("F"), py::arg("phases"), py::arg("order") = 4, py::arg("gamma_db") = 20.0,
        py::arg("inr_db") = 0.0, py::arg("sigma_c2") = 1.0, py::arg("sigma_r2") = 1.0, py::arg("radar_power") = 1.0,
        py::arg("engine") = "gp");

  m.def("interf_min",
        [](const CMatrix& H, const CMatrix& G, const CMatrix& F, const Vector& phases, int order, double gamma_db,
           double power_budget_mw, double sigma_c2, double sigma_r2, double radar_power) {
          const CiProblem p =
              build_problem(channels(H, G, F), phases, order, budget(gamma_db, 0.0, sigma_c2, sigma_r2, radar_power));
          const EngineResult r = solve_interf_min(p, power_budget_mw);
          py::dict d = solution_dict(r.solution);
          d["status"] = to_string(r.qcqp.status);
          return d;
        },
        py::arg("H"), py::arg("G"), py::arg("F"), py::arg("phases"), py::arg("order") = 4, py::arg("gamma_db") = 20.0,
        py::arg("power_budget_mw") = 251.18864315095797, py::arg("sigma_c2") = 1.0, py::arg("sigma_r2") = 1.0,
        py::arg("radar_power") = 1.0);

  m.def("robust_power_min",
        [](const CMatrix& H, const CMatrix& G, const CMatrix& F, const Vector& phases, int order, double gamma_db,
           double inr_db, double delta_h, double delta_g, double delta_f) {
          const RobustCiProblem rp = build_robust_problem(channels(H, G, F), phases, order,
                                                          budget(gamma_db, inr_db, 1.0, 1.0, 1.0), delta_h, delta_g,
                                                          delta_f);
          const EngineResult r = solve_robust(rp);
          py::dict d = solution_dict(r.solution);
          d["status"] = to_string(r.qcqp.status);
          return d;
        },
        py::arg("H"), py::arg("G"), py::arg("F"), py::arg("phases"), py::arg("order") = 4, py::arg("gamma_db") = 20.0,
        py::arg("inr_db") = 0.0, py::arg("delta_h") = 0.0, py::arg("delta_g") = 0.0, py::arg("delta_f") = 0.0);

  m.def("detection_threshold", &detection_threshold, py::arg("p_fa"));
  m.def("detection_probability", &detection_probability, py::arg("rho"), py::arg("p_fa"));
  m.def("marcum_q1", &marcum_q1, py::arg("a"), py::arg("b"));
  m.def("crb_closed_form",
        [](double theta, int antennas, const CMatrix& J_tilde, double snr_linear, double sigma_r2) {
          const auto pos = ula_positions(antennas);
          return crb_closed_form(theta, pos, J_tilde, snr_linear, sigma_r2);
        },
        py::arg("theta"), py::arg("antennas"), py::arg("J_tilde"), py::arg("snr_linear"), py::arg("sigma_r2") = 1.0);

  m.def("instance_hash", [](const std::string& text) { return instance_hash(instance_from_json(Json::parse(text))); },
        py::arg("instance_json"));

  m.def("run",
        [](const std::string& config_json) {
          const ExperimentConfig cfg = parse_config(Json::parse(config_json));
          std::ostringstream out;
          CsvWriter csv(out);
          RunResult r;
          {
            py::gil_scoped_release release;
            r = run(cfg, csv);
          }
          return py::make_tuple(out.str(), r.summary.dump());
        },
        py::arg("config_json"), "Runs an experiment; returns (csv_text, summary_json).");
}
