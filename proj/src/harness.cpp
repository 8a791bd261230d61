#include "ciradar/harness.hpp"

#include "ciradar/robust.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <ostream>
#include <stdexcept>

namespace ciradar {

namespace {

constexpr std::uint64_t kChannelStream = 0x6368;
constexpr std::uint64_t kFrameStream = 0x6672;
constexpr std::uint64_t kSceneStream = 0x7363;
constexpr std::uint64_t kTrialStream = 0x7472;
constexpr std::uint64_t kErrorStream = 0x6572;
constexpr std::uint64_t kOracleStream = 0x6f72;
constexpr std::uint64_t kInitStream = 0x696e;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

const std::map<std::string, Mode>& mode_names() {
  static const std::map<std::string, Mode> names{
      {"power-min", Mode::power_min},       {"interf-min", Mode::interf_min}, {"robust", Mode::robust},
      {"radar-detect", Mode::radar_detect}, {"crb", Mode::crb},               {"compare-oracle", Mode::compare_oracle},
      {"bench", Mode::bench}};
  return names;
}

void check_keys(const Json& doc, const Json& reference, const std::string& path) {
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string where = path.empty() ? it.key() : path + "." + it.key();
    if (!reference.contains(it.key())) throw std::invalid_argument("config: unknown key " + where);
    const Json& ref = reference.at(it.key());
    if (ref.is_object() && !ref.empty()) {
      if (!it.value().is_object()) throw std::invalid_argument("config: " + where + " must be an object");
      check_keys(it.value(), ref, where);
    }
  }
}

Axis parse_axis(const std::string& name, const Json& j) {
  Axis axis{name, {}};
  if (j.is_number()) {
    axis.values.push_back(j.get<double>());
  } else if (j.is_array()) {
    for (const auto& v : j) axis.values.push_back(v.get<double>());
  } else if (j.is_object()) {
    const double from = j.at("from").get<double>();
    const double to = j.at("to").get<double>();
    const double step = j.at("step").get<double>();
    if (!(step > 0.0) || !(to >= from)) throw std::invalid_argument("config: axis " + name + " needs from <= to and step > 0");
    const long count = static_cast<long>(std::floor((to - from) / step + 1e-9)) + 1;
    if (count > 100000) throw std::invalid_argument("config: axis " + name + " is too long");
    for (long i = 0; i < count; ++i) axis.values.push_back(from + static_cast<double>(i) * step);
  } else {
    throw std::invalid_argument("config: axis " + name + " must be a number, array or range");
  }
  if (axis.values.empty()) throw std::invalid_argument("config: axis " + name + " is empty");
  for (double v : axis.values)
    if (!std::isfinite(v)) throw std::invalid_argument("config: axis " + name + " has a non-finite value");
  return axis;
}

template <class T>
T positive(const Json& j, const char* what) {
  const T v = j.get<T>();
  if (!(v > 0)) throw std::invalid_argument(std::string("config: ") + what + " must be positive");
  return v;
}

LinkBudget budget_for(const ExperimentConfig& cfg, double gamma_db, double inr_db) {
  LinkBudget b;
  b.sinr_db = {gamma_db};
  b.inr_db = {inr_db};
  b.sigma_c2 = cfg.sigma_c2;
  b.sigma_r2 = cfg.sigma_r2;
  b.radar_power = cfg.radar_power;
  return b;
}

GpOptions gp_options(const ExperimentConfig& cfg, long draw) {
  GpOptions o = cfg.gp;
  o.seed = derive_seed(cfg.seed, kInitStream, static_cast<std::uint64_t>(draw));
  return o;
}

struct Tally {
  long converged = 0;
  long not_converged = 0;
  long infeasible = 0;
  long solves = 0;
  double solve_seconds = 0.0;

  void merge(const Tally& o) {
    converged += o.converged;
    not_converged += o.not_converged;
    infeasible += o.infeasible;
    solves += o.solves;
    solve_seconds += o.solve_seconds;
  }
  Json to_json() const {
    return Json{{"solves", solves},
                {"converged", converged},
                {"not_converged", not_converged},
                {"infeasible", infeasible},
                {"solve_seconds_total", solve_seconds},
                {"solve_seconds_mean", solves > 0 ? solve_seconds / static_cast<double>(solves) : 0.0}};
  }
};

struct SlotResult {
  BeamformingSolution solution;
  bool feasible = false;
};

// One CI solve for the power or interference minimization problem.
SlotResult solve_ci(const ExperimentConfig& cfg, bool interference, const CiProblem& p, double power_budget,
                    long draw, Tally& tally) {
  const auto t0 = Clock::now();
  SlotResult out;
  if (interference) {
    EngineResult r = solve_interf_min(p, power_budget, cfg.qcqp);
    out.feasible = r.ok();
    out.solution = std::move(r.solution);
    (out.feasible ? tally.converged : tally.infeasible) += 1;
  } else if (cfg.engine == "qcqp") {
    EngineResult r = power_min_qcqp(p, cfg.qcqp);
    out.feasible = r.ok();
    out.solution = std::move(r.solution);
    (out.feasible ? tally.converged : tally.infeasible) += 1;
  } else {
    GpResult r = solve_gp(p, gp_options(cfg, draw));
    out.feasible = r.dual.status != GpStatus::infeasible;
    if (r.dual.status == GpStatus::converged) ++tally.converged;
    if (r.dual.status == GpStatus::max_iterations) ++tally.not_converged;
    if (r.dual.status == GpStatus::infeasible) ++tally.infeasible;
    out.solution = std::move(r.solution);
  }
  tally.solve_seconds += seconds_since(t0);
  ++tally.solves;
  return out;
}

std::string status_of(long feasible, long total) {
  if (feasible == total) return "ok";
  return feasible == 0 ? "infeasible" : "partial";
}

std::string point_label(const std::vector<std::pair<std::string, double>>& coords) {
  std::string s;
  for (const auto& [name, v] : coords) s += (s.empty() ? "" : ", ") + name + "=" + format_number(v);
  return s;
}

// Wraps a sweep point so that errors name it.
template <class Fn>
void at_point(const std::vector<std::pair<std::string, double>>& coords, Fn&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    throw std::runtime_error("sweep point (" + point_label(coords) + "): " + e.what());
  }
}

struct DrawOutcome {
  bool feasible = true;
  double power = 0.0;
  double interference = 0.0;
  double violations = 0.0;
  Tally tally;
};

void write_dims(const ExperimentConfig& cfg, std::vector<std::string>& row) {
  row.push_back(std::to_string(cfg.n));
  row.push_back(std::to_string(cfg.k));
  row.push_back(std::to_string(cfg.m));
  row.push_back(std::to_string(cfg.order));
}

// power-min and interf-min sweeps: per-draw frame averages of power and
// interference, then mean and standard error over draws.
void run_ci_sweep(const ExperimentConfig& cfg, CsvWriter& csv, RunResult& result, Tally& total) {
  const bool interference = cfg.mode == Mode::interf_min;
  const Axis& second = interference ? cfg.power_dbm : cfg.inr_db;
  csv.header({"gamma_db", second.name, "n", "k", "m", "order", "draws", "feasible_draws", "mean_power_mw",
              "stderr_power_mw", "mean_interference_mw", "stderr_interference_mw", "status"});
  Json points = Json::array();
  for (double gamma : cfg.gamma_db.values) {
    for (double other : second.values) {
      at_point({{"gamma_db", gamma}, {second.name, other}}, [&] {
        const LinkBudget budget = budget_for(cfg, gamma, interference ? 0.0 : other);
        const double power_budget = interference ? dbm_to_mw(other) : 0.0;
        std::vector<DrawOutcome> draws(static_cast<std::size_t>(cfg.channel_draws));
        parallel_for(cfg.channel_draws, cfg.threads, [&](long d) {
          DrawOutcome& o = draws[static_cast<std::size_t>(d)];
          const ChannelSet cs = experiment_channels(cfg, cfg.k, d);
          const int slots = cfg.frames * cfg.length;
          const SymbolFrame frame =
              psk_frame(cfg.k, slots, cfg.order, derive_seed(cfg.seed, kFrameStream, static_cast<std::uint64_t>(d)));
          for (int l = 0; l < slots && o.feasible; ++l) {
            const CiProblem p = build_problem(cs, frame.slot(l), cfg.order, budget);
            const SlotResult s = solve_ci(cfg, interference, p, power_budget, d, o.tally);
            o.feasible = s.feasible;
            o.power += s.solution.power / slots;
            o.interference += s.solution.interference / slots;
          }
        });
        std::vector<double> power;
        std::vector<double> interf;
        Tally tally;
        for (const auto& o : draws) {
          tally.merge(o.tally);
          if (!o.feasible) continue;
          power.push_back(o.power);
          interf.push_back(o.interference);
        }
        const auto [pm, ps] = mean_stderr(power);
        const auto [im, is] = mean_stderr(interf);
        const std::string status = status_of(static_cast<long>(power.size()), cfg.channel_draws);
        if (status != "ok") ++result.infeasible_points;
        std::vector<std::string> row{format_number(gamma), format_number(other)};
        write_dims(cfg, row);
        row.insert(row.end(), {std::to_string(cfg.channel_draws), std::to_string(power.size()), format_number(pm),
                               format_number(ps), format_number(im), format_number(is), status});
        csv.row(row);
        points.push_back({{"gamma_db", gamma}, {second.name, other}, {"solver", tally.to_json()}});
        total.merge(tally);
      });
    }
  }
  result.summary["points"] = std::move(points);
}

bool violates(const LinkReport& r, const Vector& inr_caps, const Vector& gamma_tilde) {
  for (Eigen::Index i = 0; i < r.ci_margin.size(); ++i)
    if (r.ci_margin(i) < -1e-9 * std::max(1.0, std::sqrt(gamma_tilde(i)))) return true;
  for (Eigen::Index j = 0; j < r.inr.size(); ++j)
    if (r.inr(j) > inr_caps(j) * (1.0 + 1e-9) + 1e-12) return true;
  return false;
}

void run_robust_sweep(const ExperimentConfig& cfg, CsvWriter& csv, RunResult& result, Tally& total) {
  csv.header({"delta", "gamma_db", "inr_db", "n", "k", "m", "order", "draws", "feasible_draws", "mean_power_mw",
              "stderr_power_mw", "samples", "violation_rate", "status"});
  Json points = Json::array();
  for (double delta : cfg.delta.values) {
    for (double gamma : cfg.gamma_db.values) {
      for (double inr : cfg.inr_db.values) {
        at_point({{"delta", delta}, {"gamma_db", gamma}, {"inr_db", inr}}, [&] {
          if (delta < 0.0) throw std::invalid_argument("delta must be non-negative");
          const LinkBudget budget = budget_for(cfg, gamma, inr);
          std::vector<DrawOutcome> draws(static_cast<std::size_t>(cfg.channel_draws));
          parallel_for(cfg.channel_draws, cfg.threads, [&](long d) {
            DrawOutcome& o = draws[static_cast<std::size_t>(d)];
            const ChannelSet estimate = experiment_channels(cfg, cfg.k, d);
            const Vector phases =
                psk_frame(cfg.k, 1, cfg.order, derive_seed(cfg.seed, kFrameStream, static_cast<std::uint64_t>(d))).slot(0);
            const auto t0 = Clock::now();
            const RobustCiProblem rp = build_robust_problem(estimate, phases, cfg.order, budget, delta, delta, delta);
            const EngineResult r = solve_robust(rp, cfg.qcqp);
            o.tally.solve_seconds += seconds_since(t0);
            ++o.tally.solves;
            o.feasible = r.ok();
            (o.feasible ? o.tally.converged : o.tally.infeasible) += 1;
            if (!o.feasible) return;
            o.power = r.solution.power;
            const Vector caps = budget.inr_linear(cfg.m);
            for (int s = 0; s < cfg.robust_samples; ++s) {
              const ChannelSet truth = perturb_channels(
                  estimate, delta, delta, delta,
                  derive_seed(cfg.seed, kErrorStream, static_cast<std::uint64_t>(d * cfg.robust_samples + s)));
              const RotatedChannels rc = rotate_channels(truth, phases, cfg.order, budget);
              if (violates(evaluate(truth, phases, cfg.order, budget, r.solution), caps, rc.gamma)) o.violations += 1.0;
            }
          });
          std::vector<double> power;
          double violations = 0.0;
          Tally tally;
          for (const auto& o : draws) {
            tally.merge(o.tally);
            if (!o.feasible) continue;
            power.push_back(o.power);
            violations += o.violations;
          }
          const auto [pm, ps] = mean_stderr(power);
          const long samples = static_cast<long>(power.size()) * cfg.robust_samples;
          const std::string status = status_of(static_cast<long>(power.size()), cfg.channel_draws);
          if (status != "ok") ++result.infeasible_points;
          std::vector<std::string> row{format_number(delta), format_number(gamma), format_number(inr)};
          write_dims(cfg, row);
          row.insert(row.end(), {std::to_string(cfg.channel_draws), std::to_string(power.size()), format_number(pm),
                                 format_number(ps), std::to_string(samples),
                                 format_number(samples > 0 ? violations / static_cast<double>(samples) : 0.0), status});
          csv.row(row);
          points.push_back({{"delta", delta}, {"gamma_db", gamma}, {"inr_db", inr}, {"solver", tally.to_json()}});
          total.merge(tally);
        });
      }
    }
  }
  result.summary["points"] = std::move(points);
}

// Symbol-level CI policy for one channel draw; the design problem is chosen by
// cfg.design and the second coordinate is the power budget (dBm) or INR cap (dB).
std::unique_ptr<SymbolLevelPolicy> design_policy(const ExperimentConfig& cfg, const ChannelSet& cs, double gamma,
                                                 double second, long draw, Tally& tally) {
  const bool interference = cfg.design == "interf-min";
  const LinkBudget budget = budget_for(cfg, gamma, interference ? 0.0 : second);
  const double power_budget = interference ? dbm_to_mw(second) : 0.0;
  const double offset = cfg.order >= 4 ? kPi / cfg.order : 0.0;
  auto solver = [&](const Vector& phases) {
    const CiProblem p = build_problem(cs, phases, cfg.order, budget);
    SlotResult s = solve_ci(cfg, interference, p, power_budget, draw, tally);
    if (!s.feasible) s.solution.w.setConstant(Complex(std::nan(""), 0.0));
    return s.solution;
  };
  return std::make_unique<SymbolLevelPolicy>(cfg.k, cfg.n, cfg.order, offset, solver);
}

RadarScene experiment_scene(const ExperimentConfig& cfg) {
  RadarScene scene = make_ula_scene(cfg.m, cfg.length, cfg.waveform, derive_seed(cfg.seed, kSceneStream));
  scene.theta = cfg.theta;
  scene.radar_power = cfg.radar_power;
  scene.sigma_c2 = cfg.sigma_c2;
  scene.sigma_r2 = cfg.sigma_r2;
  return scene;
}

struct RadarDraw {
  bool feasible = false;
  std::vector<double> rho, pd, crb;
  std::vector<long> detections;
  Tally tally;
};

void run_radar_sweep(const ExperimentConfig& cfg, CsvWriter& csv, RunResult& result, Tally& total) {
  const bool detect = cfg.mode == Mode::radar_detect;
  const Axis& second = cfg.design == "interf-min" ? cfg.power_dbm : cfg.inr_db;
  if (detect)
    csv.header({"snr_db", "gamma_db", "rho", "eta", "pd_analytic", "pd_empirical", "ci_low", "ci_high", "crb", "rmse",
                second.name, "draws", "feasible_draws", "trials", "status"});
  else
    csv.header({"snr_db", "gamma_db", second.name, "draws", "feasible_draws", "mean_crb", "mean_rmse", "stderr_rmse",
                "rmse_deg", "status"});
  const RadarScene scene = experiment_scene(cfg);
  const CMatrix A = steering_outer(scene.theta, scene.positions);
  const double eta = cfg.eta();
  Json points = Json::array();
  for (double gamma : cfg.gamma_db.values) {
    for (double other : second.values) {
      at_point({{"gamma_db", gamma}, {second.name, other}}, [&] {
        const std::size_t ns = cfg.snr_db.values.size();
        std::vector<RadarDraw> draws(static_cast<std::size_t>(cfg.channel_draws));
        parallel_for(cfg.channel_draws, cfg.threads, [&](long d) {
          RadarDraw& o = draws[static_cast<std::size_t>(d)];
          const ChannelSet cs = experiment_channels(cfg, cfg.k, d);
          const auto policy = design_policy(cfg, cs, gamma, other, d, o.tally);
          o.feasible = policy->all_feasible();
          if (!o.feasible) return;
          const InterferenceCovariance cov = interference_covariance_from(cs.G, policy->transmit_covariance(), cfg.sigma_r2);
          for (std::size_t s = 0; s < ns; ++s) {
            const double snr = db_to_linear(cfg.snr_db.values[s]);
            const double rho = noncentrality(snr, cfg.sigma_r2, A, cov.J_tilde);
            o.rho.push_back(rho);
            o.pd.push_back(detection_probability_at(rho, eta));
            o.crb.push_back(crb(scene.theta, scene, cov.J_tilde, snr).crb);
            if (detect) {
              DetectionConfig dc;
              dc.trials = cfg.detection_trials;
              dc.eta = eta;
              dc.snr_linear = snr;
              dc.direction = cfg.direction;
              dc.grid_points = cfg.grid_points;
              dc.seed = derive_seed(cfg.seed, kTrialStream, static_cast<std::uint64_t>(d));
              o.detections.push_back(monte_carlo_detection(scene, cs.G, *policy, dc).detections);
            }
          }
        });
        Tally tally;
        long feasible = 0;
        for (const auto& o : draws) {
          tally.merge(o.tally);
          feasible += o.feasible ? 1 : 0;
        }
        const std::string status = status_of(feasible, cfg.channel_draws);
        if (status != "ok") ++result.infeasible_points;
        for (std::size_t s = 0; s < ns; ++s) {
          std::vector<double> rho, pd, crbs, rmse;
          long hits = 0;
          for (const auto& o : draws) {
            if (!o.feasible) continue;
            rho.push_back(o.rho[s]);
            pd.push_back(o.pd[s]);
            crbs.push_back(o.crb[s]);
            rmse.push_back(std::sqrt(o.crb[s]));
            if (detect) hits += o.detections[s];
          }
          const double snr_db = cfg.snr_db.values[s];
          if (detect) {
            const long trials = feasible * cfg.detection_trials;
            const auto [lo, hi] = trials > 0 ? wilson_interval(hits, trials) : std::pair{0.0, 1.0};
            csv.row({format_number(snr_db), format_number(gamma), format_number(mean_stderr(rho).first),
                     format_number(eta), format_number(mean_stderr(pd).first),
                     format_number(trials > 0 ? static_cast<double>(hits) / static_cast<double>(trials) : 0.0),
                     format_number(lo), format_number(hi), format_number(mean_stderr(crbs).first),
                     format_number(mean_stderr(rmse).first), format_number(other), std::to_string(cfg.channel_draws),
                     std::to_string(feasible), std::to_string(trials), status});
          } else {
            const auto [rm, rs] = mean_stderr(rmse);
            csv.row({format_number(snr_db), format_number(gamma), format_number(other), std::to_string(cfg.channel_draws),
                     std::to_string(feasible), format_number(mean_stderr(crbs).first), format_number(rm),
                     format_number(rs), format_number(rm * 180.0 / kPi), status});
          }
        }
        points.push_back({{"gamma_db", gamma}, {second.name, other}, {"solver", tally.to_json()}});
        total.merge(tally);
      });
    }
  }
  result.summary["points"] = std::move(points);
  Json eta_info{{"value", eta}};
  if (cfg.eta_from_db) {
    eta_info["source"] = "eta_db";
    eta_info["interpretation"] = "threshold = 10^(eta_db / 10) applied to the detector statistic";
    eta_info["eta_db"] = cfg.eta_db;
  } else {
    eta_info["source"] = "p_fa";
    eta_info["p_fa"] = cfg.p_fa;
  }
  eta_info["implied_p_fa"] = false_alarm_probability(eta);
  result.summary["eta"] = eta_info;
}

std::vector<std::filesystem::path> golden_files(const std::vector<std::string>& entries) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : entries) {
    const std::filesystem::path p(e);
    if (std::filesystem::is_directory(p)) {
      std::vector<std::filesystem::path> found;
      for (const auto& f : std::filesystem::directory_iterator(p))
        if (f.is_regular_file() && f.path().extension() == ".json") found.push_back(f.path());
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.push_back(p);
    }
  }
  return files;
}

// Objective of the CI problem matching a golden record's tag.
double primary_objective(const ExperimentConfig& cfg, const std::string& tag, const Instance& inst, bool& feasible) {
  const ChannelSet& cs = inst.channels;
  if (tag == "P3" || tag == "P0") {
    const CiProblem p = build_problem(cs, inst.phases, inst.order, inst.budget);
    GpResult r = solve_gp(p, gp_options(cfg, 0));
    feasible = r.dual.status != GpStatus::infeasible;
    return r.solution.power;
  }
  if (tag == "P4" || tag == "P1") {
    const CiProblem p = build_problem(cs, inst.phases, inst.order, inst.budget);
    EngineResult r = solve_interf_min(p, inst.power_budget, cfg.qcqp);
    feasible = r.ok();
    return r.solution.interference;
  }
  const RobustCiProblem rp =
      build_robust_problem(cs, inst.phases, inst.order, inst.budget, inst.delta_h, inst.delta_g, inst.delta_f);
  EngineResult r = solve_robust(rp, cfg.qcqp);
  feasible = r.ok();
  return r.solution.power;
}

void run_compare_oracle(const ExperimentConfig& cfg, CsvWriter& csv, RunResult& result) {
  if (!cfg.emit_dir.empty()) {
    csv.header({"index", "file", "instance_hash", "n", "k", "m"});
    for (int i = 0; i < cfg.oracle_instances; ++i) {
      const Instance inst = oracle_instance(cfg, i);
      char name[32];
      std::snprintf(name, sizeof name, "instance_%03d.json", i);
      const std::filesystem::path path = std::filesystem::path(cfg.emit_dir) / name;
      write_json_file(path, to_json(inst));
      csv.row({std::to_string(i), path.string(), instance_hash(inst), std::to_string(inst.channels.bs_antennas()),
               std::to_string(inst.channels.users()), std::to_string(inst.channels.radar_antennas())});
    }
    result.summary["emitted"] = cfg.oracle_instances;
    return;
  }
  csv.header({"file", "problem", "instance_hash", "oracle_status", "oracle_objective", "primary_objective", "abs_diff",
              "rel_diff", "check", "pass", "status"});
  const auto files = golden_files(cfg.golden);
  if (files.empty()) throw std::invalid_argument("compare-oracle: no golden files (set oracle.golden)");
  double max_abs = 0.0;
  int compared = 0;
  for (const auto& file : files) {
    GoldenRecord g;
    try {
      g = golden_from_json(read_json_file(file));
    } catch (const std::exception& e) {
      throw std::runtime_error(file.string() + ": " + e.what());
    }
    std::vector<std::string> row{file.string(), g.problem, g.instance_hash, g.status, format_number(g.objective)};
    if (g.status != "optimal" || !std::isfinite(g.objective)) {
      row.insert(row.end(), {"", "", "", "", "", "skipped"});
      csv.row(row);
      continue;
    }
    bool feasible = false;
    const double mine = primary_objective(cfg, g.problem, g.instance, feasible);
    const double diff = std::abs(mine - g.objective);
    const double rel = diff / std::max(std::abs(g.objective), 1e-12);
    std::string check;
    bool pass = false;
    if (g.problem == "P3") {
      check = "abs<=" + format_number(cfg.oracle_tolerance_mw);
      pass = diff <= cfg.oracle_tolerance_mw;
      max_abs = std::max(max_abs, diff);
    } else if (g.problem == "P4" || g.problem == "P13") {
      check = "rel<=" + format_number(cfg.oracle_rel_tolerance);
      pass = rel <= cfg.oracle_rel_tolerance || diff <= 1e-9;
    } else {
      // SDR baselines are compared by ordering: CI never needs more.
      check = "ci<=sdr";
      pass = mine <= g.objective * (1.0 + 1e-6) + 1e-9;
    }
    if (!feasible) pass = false;
    ++compared;
    if (!pass) ++result.failed_comparisons;
    row.insert(row.end(), {format_number(mine), format_number(diff), format_number(rel), check, pass ? "true" : "false",
                           feasible ? "ok" : "infeasible"});
    if (!feasible) ++result.infeasible_points;
    csv.row(row);
  }
  result.summary["compared"] = compared;
  result.summary["failed"] = result.failed_comparisons;
  result.summary["max_abs_diff_p3_mw"] = max_abs;
}

double percentile(std::vector<double> xs, double q) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

void run_bench(const ExperimentConfig& cfg, CsvWriter& csv, RunResult& result) {
  csv.header({"k", "n", "m", "gamma_db", "inr_db", "instances", "gp_mean_ms", "gp_p50_ms", "gp_p90_ms", "engine_mean_ms",
              "engine_p50_ms", "engine_p90_ms", "max_abs_diff_mw", "gp_converged", "engine_optimal"});
  const LinkBudget budget = budget_for(cfg, cfg.gamma_db.values.front(), cfg.inr_db.values.front());
  Json rows = Json::array();
  double gp_total = 0.0;
  double engine_total = 0.0;
  for (int k : cfg.bench_users) {
    std::vector<double> tg, te;
    double max_diff = 0.0;
    int gp_ok = 0;
    int engine_ok = 0;
    for (int i = 0; i < cfg.bench_instances; ++i) {
      const ChannelSet cs = experiment_channels(cfg, k, i);
      const Vector phases =
          psk_frame(k, 1, cfg.order, derive_seed(cfg.seed, kFrameStream, static_cast<std::uint64_t>(i))).slot(0);
      const CiProblem p = build_problem(cs, phases, cfg.order, budget);
      auto t0 = Clock::now();
      const GpResult g = solve_gp(p, gp_options(cfg, i));
      tg.push_back(1e3 * seconds_since(t0));
      t0 = Clock::now();
      const EngineResult e = power_min_qcqp(p, cfg.qcqp);
      te.push_back(1e3 * seconds_since(t0));
      gp_ok += g.dual.status == GpStatus::converged ? 1 : 0;
      engine_ok += e.ok() ? 1 : 0;
      if (g.dual.status != GpStatus::infeasible && e.ok())
        max_diff = std::max(max_diff, std::abs(g.solution.power - e.solution.power));
    }
    const double gm = mean_stderr(tg).first;
    const double em = mean_stderr(te).first;
    gp_total += gm;
    engine_total += em;
    csv.row({std::to_string(k), std::to_string(cfg.n), std::to_string(cfg.m),
             format_number(cfg.gamma_db.values.front()), format_number(cfg.inr_db.values.front()),
             std::to_string(cfg.bench_instances), format_number(gm), format_number(percentile(tg, 0.5)),
             format_number(percentile(tg, 0.9)), format_number(em), format_number(percentile(te, 0.5)),
             format_number(percentile(te, 0.9)), format_number(max_diff), std::to_string(gp_ok),
             std::to_string(engine_ok)});
    rows.push_back({{"k", k}, {"gp_mean_ms", gm}, {"engine_mean_ms", em}});
  }
  result.summary["timing"] = std::move(rows);
  result.summary["gp_faster"] = gp_total < engine_total;
}

}  // namespace

Mode parse_mode(std::string_view name) {
  const auto it = mode_names().find(std::string(name));
  if (it == mode_names().end()) throw std::invalid_argument("unknown mode " + std::string(name));
  return it->second;
}

std::string to_string(Mode mode) {
  for (const auto& [name, m] : mode_names())
    if (m == mode) return name;
  return "unknown";
}

double ExperimentConfig::eta() const { return eta_from_db ? threshold_from_db(eta_db) : detection_threshold(p_fa); }

Json default_config() {
  const GpOptions gp;
  const QcqpOptions qp;
  return Json{
      {"mode", "power-min"},
      {"dims", {{"n", 8}, {"k", 4}, {"m", 4}, {"l", 14}}},
      {"modulation_order", 4},
      {"noise", {{"sigma_c2_dbm", 0.0}, {"sigma_r2_dbm", 0.0}}},
      {"radar", {{"power_dbm", 0.0}, {"theta_deg", 36.0}, {"waveform", "orthonormal"}}},
      {"sweep", {{"gamma_db", 20.0}, {"inr_db", 0.0}, {"power_dbm", 24.0}, {"delta", 0.0}, {"snr_db", 0.0}}},
      {"trials", {{"channels", 100}, {"frames", 1}, {"detection", 1000}, {"robust_samples", 100}}},
      {"seed", 1},
      {"threads", 1},
      {"solver",
       {{"engine", "gp"},
        {"tolerance", gp.tolerance},
        {"max_iterations", gp.max_iterations},
        {"initial_step", gp.initial_step},
        {"shrink", gp.shrink},
        {"armijo", gp.armijo},
        {"max_backtracks", gp.max_backtracks},
        {"infeasible_factor", gp.infeasible_factor},
        {"gap_tolerance", qp.gap_tolerance},
        {"max_newton", qp.max_newton}}},
      {"detection",
       {{"p_fa", 0.05}, {"eta_db", nullptr}, {"direction", "known"}, {"grid_points", 721}, {"design", "interf-min"}}},
      {"oracle",
       {{"golden", Json::array()}, {"tolerance_mw", 0.05}, {"rel_tolerance", 1e-4}, {"emit_dir", ""}, {"instances", 100}}},
      {"bench", {{"users", {2, 3, 4, 5, 6}}, {"instances", 20}}},
      {"output", {{"csv", ""}, {"summary", ""}}}};
}

void apply_override(Json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) throw std::invalid_argument("override must look like key.path=value");
  const std::string path(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  Json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw std::invalid_argument("override has an empty key: " + path);
    if (!node->is_object()) *node = Json::object();
    if (dot == std::string::npos) {
      (*node)[key] = std::move(value);
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

ExperimentConfig parse_config(const Json& doc) {
  if (!doc.is_object()) throw std::invalid_argument("config: top level must be an object");
  const Json defaults = default_config();
  check_keys(doc, defaults, "");
  Json merged = defaults;
  merged.merge_patch(doc);
  // merge_patch drops null leaves; keep the optional threshold explicit.
  if (!merged["detection"].contains("eta_db")) merged["detection"]["eta_db"] = nullptr;

  ExperimentConfig cfg;
  try {
    cfg.mode = parse_mode(merged.at("mode").get<std::string>());
    const Json& dims = merged.at("dims");
    cfg.n = positive<int>(dims.at("n"), "dims.n");
    cfg.k = positive<int>(dims.at("k"), "dims.k");
    cfg.m = dims.at("m").get<int>();
    if (cfg.m < 0) throw std::invalid_argument("config: dims.m must be non-negative");
    cfg.length = positive<int>(dims.at("l"), "dims.l");
    cfg.order = merged.at("modulation_order").get<int>();
    if (cfg.order < 2) throw std::invalid_argument("config: modulation_order must be at least 2");
    cfg.sigma_c2 = dbm_to_mw(merged.at("noise").at("sigma_c2_dbm").get<double>());
    cfg.sigma_r2 = dbm_to_mw(merged.at("noise").at("sigma_r2_dbm").get<double>());
    const Json& radar = merged.at("radar");
    cfg.radar_power = dbm_to_mw(radar.at("power_dbm").get<double>());
    cfg.theta = radar.at("theta_deg").get<double>() * kPi / 180.0;
    const std::string wf = radar.at("waveform").get<std::string>();
    if (wf == "orthonormal")
      cfg.waveform = WaveformMode::orthonormal;
    else if (wf == "msequence")
      cfg.waveform = WaveformMode::msequence;
    else
      throw std::invalid_argument("config: radar.waveform must be orthonormal or msequence");

    const Json& sweep = merged.at("sweep");
    cfg.gamma_db = parse_axis("gamma_db", sweep.at("gamma_db"));
    cfg.inr_db = parse_axis("inr_db", sweep.at("inr_db"));
    cfg.power_dbm = parse_axis("power_dbm", sweep.at("power_dbm"));
    cfg.delta = parse_axis("delta", sweep.at("delta"));
    cfg.snr_db = parse_axis("snr_db", sweep.at("snr_db"));

    const Json& trials = merged.at("trials");
    cfg.channel_draws = positive<int>(trials.at("channels"), "trials.channels");
    cfg.frames = positive<int>(trials.at("frames"), "trials.frames");
    cfg.detection_trials = positive<long>(trials.at("detection"), "trials.detection");
    cfg.robust_samples = trials.at("robust_samples").get<int>();
    if (cfg.robust_samples < 0) throw std::invalid_argument("config: trials.robust_samples must be non-negative");
    cfg.seed = merged.at("seed").get<std::uint64_t>();
    cfg.threads = positive<int>(merged.at("threads"), "threads");

    const Json& solver = merged.at("solver");
    cfg.engine = solver.at("engine").get<std::string>();
    if (cfg.engine != "gp" && cfg.engine != "qcqp") throw std::invalid_argument("config: solver.engine must be gp or qcqp");
    cfg.gp.tolerance = positive<double>(solver.at("tolerance"), "solver.tolerance");
    cfg.gp.max_iterations = positive<int>(solver.at("max_iterations"), "solver.max_iterations");
    cfg.gp.initial_step = positive<double>(solver.at("initial_step"), "solver.initial_step");
    cfg.gp.shrink = solver.at("shrink").get<double>();
    if (!(cfg.gp.shrink > 0.0 && cfg.gp.shrink < 1.0)) throw std::invalid_argument("config: solver.shrink must be in (0, 1)");
    cfg.gp.armijo = solver.at("armijo").get<double>();
    if (!(cfg.gp.armijo > 0.0 && cfg.gp.armijo < 1.0)) throw std::invalid_argument("config: solver.armijo must be in (0, 1)");
    cfg.gp.max_backtracks = positive<int>(solver.at("max_backtracks"), "solver.max_backtracks");
    cfg.gp.infeasible_factor = positive<double>(solver.at("infeasible_factor"), "solver.infeasible_factor");
    cfg.qcqp.gap_tolerance = positive<double>(solver.at("gap_tolerance"), "solver.gap_tolerance");
    cfg.qcqp.max_newton = positive<int>(solver.at("max_newton"), "solver.max_newton");

    const Json& det = merged.at("detection");
    cfg.p_fa = det.at("p_fa").get<double>();
    if (!(cfg.p_fa > 0.0 && cfg.p_fa < 1.0)) throw std::invalid_argument("config: detection.p_fa must be in (0, 1)");
    if (!det.at("eta_db").is_null()) {
      cfg.eta_from_db = true;
      cfg.eta_db = det.at("eta_db").get<double>();
      if (!std::isfinite(cfg.eta_db)) throw std::invalid_argument("config: detection.eta_db must be finite");
    }
    const std::string direction = det.at("direction").get<std::string>();
    if (direction == "known")
      cfg.direction = DirectionMode::known;
    else if (direction == "grid")
      cfg.direction = DirectionMode::grid;
    else
      throw std::invalid_argument("config: detection.direction must be known or grid");
    cfg.grid_points = det.at("grid_points").get<int>();
    if (cfg.grid_points < 3) throw std::invalid_argument("config: detection.grid_points must be at least 3");
    cfg.design = det.at("design").get<std::string>();
    if (cfg.design != "interf-min" && cfg.design != "power-min")
      throw std::invalid_argument("config: detection.design must be interf-min or power-min");

    const Json& oracle = merged.at("oracle");
    const Json& golden = oracle.at("golden");
    if (golden.is_string())
      cfg.golden.push_back(golden.get<std::string>());
    else
      cfg.golden = golden.get<std::vector<std::string>>();
    cfg.oracle_tolerance_mw = positive<double>(oracle.at("tolerance_mw"), "oracle.tolerance_mw");
    cfg.oracle_rel_tolerance = positive<double>(oracle.at("rel_tolerance"), "oracle.rel_tolerance");
    cfg.emit_dir = oracle.at("emit_dir").get<std::string>();
    cfg.oracle_instances = positive<int>(oracle.at("instances"), "oracle.instances");

    const Json& bench = merged.at("bench");
    cfg.bench_users = bench.at("users").get<std::vector<int>>();
    if (cfg.bench_users.empty()) throw std::invalid_argument("config: bench.users is empty");
    for (int k : cfg.bench_users)
      if (k < 1) throw std::invalid_argument("config: bench.users entries must be positive");
    cfg.bench_instances = positive<int>(bench.at("instances"), "bench.instances");

    cfg.csv_path = merged.at("output").at("csv").get<std::string>();
    cfg.summary_path = merged.at("output").at("summary").get<std::string>();
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  cfg.document = std::move(merged);
  return cfg;
}

std::string CsvWriter::escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void CsvWriter::header(const std::vector<std::string>& names) {
  if (columns_ != 0) throw std::logic_error("CsvWriter: header already written");
  if (names.empty()) throw std::invalid_argument("CsvWriter: empty header");
  columns_ = names.size();
  row(names);
  rows_ = 0;
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  if (columns_ == 0) throw std::logic_error("CsvWriter: header must come first");
  if (fields.size() != columns_) throw std::invalid_argument("CsvWriter: row width does not match header");
  for (std::size_t i = 0; i < fields.size(); ++i) out_ << (i ? "," : "") << escape(fields[i]);
  out_ << "\r\n";
  out_.flush();
  ++rows_;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::pair<double, double> mean_stderr(const std::vector<double>& xs) {
  if (xs.empty()) return {std::nan(""), std::nan("")};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double n = static_cast<double>(xs.size());
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

ChannelSet experiment_channels(const ExperimentConfig& cfg, int k, long index) {
  return gen_channels(cfg.n, k, cfg.m, derive_seed(cfg.seed, kChannelStream, static_cast<std::uint64_t>(index)));
}

Instance oracle_instance(const ExperimentConfig& cfg, int index) {
  Instance inst;
  const std::uint64_t seed = derive_seed(cfg.seed, kOracleStream, static_cast<std::uint64_t>(index));
  inst.channels = gen_channels(cfg.n, cfg.k, cfg.m, seed);
  inst.order = cfg.order;
  inst.phases = psk_frame(cfg.k, 1, cfg.order, derive_seed(seed, kFrameStream)).slot(0);
  inst.budget = budget_for(cfg, cfg.gamma_db.values.front(), cfg.inr_db.values.front());
  inst.power_budget = dbm_to_mw(cfg.power_dbm.values.front());
  inst.delta_h = inst.delta_g = inst.delta_f = cfg.delta.values.front();
  inst.seed = seed;
  return inst;
}

RunResult run(const ExperimentConfig& cfg, CsvWriter& csv) {
  const auto t0 = Clock::now();
  RunResult result;
  result.summary = Json{{"mode", to_string(cfg.mode)}, {"seed", cfg.seed}, {"config", cfg.document}};
  Tally total;
  switch (cfg.mode) {
    case Mode::power_min:
    case Mode::interf_min:
      run_ci_sweep(cfg, csv, result, total);
      break;
    case Mode::robust:
      run_robust_sweep(cfg, csv, result, total);
      break;
    case Mode::radar_detect:
    case Mode::crb:
      run_radar_sweep(cfg, csv, result, total);
      break;
    case Mode::compare_oracle:
      run_compare_oracle(cfg, csv, result);
      break;
    case Mode::bench:
      run_bench(cfg, csv, result);
      break;
  }
  result.summary["rows"] = csv.rows();
  result.summary["infeasible_points"] = result.infeasible_points;
  result.summary["convergence"] = total.to_json();
  result.summary["wall_clock_seconds"] = seconds_since(t0);
  return result;
}

}  // namespace ciradar
