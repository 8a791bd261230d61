#pragma once

// Experiment driver behind the command line tool: sweeps, Monte Carlo
// averaging, oracle comparison and solver benchmarks.

#include "ciradar/ci_engine.hpp"
#include "ciradar/monte_carlo.hpp"
#include "ciradar/serialization.hpp"

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace ciradar {

enum class Mode { power_min, interf_min, robust, radar_detect, crb, compare_oracle, bench };

Mode parse_mode(std::string_view name);
std::string to_string(Mode mode);

/// A sweep axis. In JSON an axis is a number, an array, or
/// {"from": a, "to": b, "step": s}.
struct Axis {
  std::string name;
  std::vector<double> values;
};

struct ExperimentConfig {
  Mode mode = Mode::power_min;
  int n = 8;
  int k = 4;
  int m = 4;
  int length = 14;
  int order = 4;
  double sigma_c2 = 1.0;  // mW
  double sigma_r2 = 1.0;  // mW
  double radar_power = 1.0;  // mW
  double theta = kPi / 5.0;
  WaveformMode waveform = WaveformMode::orthonormal;

  Axis gamma_db{"gamma_db", {20.0}};
  Axis inr_db{"inr_db", {0.0}};
  Axis power_dbm{"power_dbm", {24.0}};
  Axis delta{"delta", {0.0}};
  Axis snr_db{"snr_db", {0.0}};

  int channel_draws = 100;
  int frames = 1;
  long detection_trials = 1000;
  int robust_samples = 100;
  std::uint64_t seed = 1;
  int threads = 1;

  std::string engine = "gp";  // power minimization: gp or qcqp
  GpOptions gp;
  QcqpOptions qcqp;

  double p_fa = 0.05;
  bool eta_from_db = false;
  double eta_db = 0.0;
  DirectionMode direction = DirectionMode::known;
  int grid_points = 721;
  std::string design = "interf-min";  // precoder used by radar-detect and crb

  std::vector<std::string> golden;
  double oracle_tolerance_mw = 0.05;
  double oracle_rel_tolerance = 1e-4;
  std::string emit_dir;
  int oracle_instances = 100;

  std::vector<int> bench_users{2, 3, 4, 5, 6};
  int bench_instances = 20;

  std::string csv_path;
  std::string summary_path;

  Json document;  // effective configuration after defaults and overrides

  /// Threshold compared against the detector statistic.
  double eta() const;
};

/// Every recognised key with its default value.
Json default_config();
/// Sets the leaf at a dotted path, e.g. "solver.tolerance=1e-9". The value is
/// parsed as JSON when possible and kept as a string otherwise.
void apply_override(Json& doc, std::string_view assignment);
/// Merges `doc` over the defaults, rejects unknown keys and validates ranges.
ExperimentConfig parse_config(const Json& doc);

/// RFC-4180 writer. Rows are flushed as they are written so an interrupted
/// run keeps the completed sweep points.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}
  void header(const std::vector<std::string>& names);
  void row(const std::vector<std::string>& fields);
  std::size_t rows() const { return rows_; }
  static std::string escape(std::string_view field);

 private:
  std::ostream& out_;
  std::size_t columns_ = 0;
  std::size_t rows_ = 0;
};

/// Fixed-precision rendering used for every numeric CSV field.
std::string format_number(double v);

struct RunResult {
  Json summary;
  int infeasible_points = 0;   // rows whose status is not "ok"
  int failed_comparisons = 0;  // compare-oracle rows outside tolerance
};

/// Runs the configured mode and streams its rows into `csv`. Errors name the
/// sweep point that raised them.
RunResult run(const ExperimentConfig& cfg, CsvWriter& csv);

/// Channel draw `index` of an experiment; shared by every sweep point.
ChannelSet experiment_channels(const ExperimentConfig& cfg, int k, long index);

/// The instance sent to the reference solver for compare-oracle.
Instance oracle_instance(const ExperimentConfig& cfg, int index);

/// Mean and standard error of the mean.
std::pair<double, double> mean_stderr(const std::vector<double>& xs);

}  // namespace ciradar
