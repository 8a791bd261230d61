#include "ciradar/harness.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

struct Options {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  std::string summary;
  int threads = 0;
  std::vector<std::string> overrides;
  std::vector<std::string> golden;
  std::string emit;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "JSON experiment configuration")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Base seed (overrides the config)");
  cmd->add_option("--out", o.out, "CSV output path (default: stdout)");
  cmd->add_option("--summary", o.summary, "JSON summary path (default: next to --out)");
  cmd->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--set", o.overrides, "Override a config leaf, e.g. --set sweep.gamma_db=[10,20]");
}

int execute(const std::string& mode, const Options& o, const CLI::App& cmd) {
  using namespace ciradar;
  Json doc = o.config.empty() ? Json::object() : read_json_file(o.config);
  apply_override(doc, "mode=\"" + mode + "\"");
  for (const auto& s : o.overrides) apply_override(doc, s);
  if (cmd.count("--seed")) doc["seed"] = o.seed;
  if (cmd.count("--threads")) doc["threads"] = o.threads;
  if (!o.golden.empty()) doc["oracle"]["golden"] = o.golden;
  if (!o.emit.empty()) doc["oracle"]["emit_dir"] = o.emit;
  const ExperimentConfig cfg = parse_config(doc);

  std::string csv_path = o.out.empty() ? cfg.csv_path : o.out;
  std::string summary_path = o.summary.empty() ? cfg.summary_path : o.summary;
  if (summary_path.empty() && !csv_path.empty())
    summary_path = std::filesystem::path(csv_path).replace_extension(".json").string();

  std::ofstream file;
  if (!csv_path.empty()) {
    const std::filesystem::path p(csv_path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    file.open(p, std::ios::binary);
    if (!file) throw std::runtime_error("cannot write " + csv_path);
  }
  CsvWriter csv(csv_path.empty() ? std::cout : file);
  const RunResult result = run(cfg, csv);
  if (!summary_path.empty()) write_json_file(summary_path, result.summary);

  if (result.failed_comparisons > 0) {
    std::cerr << "ciradar: " << result.failed_comparisons << " oracle comparison(s) outside tolerance\n";
    return 1;
  }
  if (result.infeasible_points > 0) {
    std::cerr << "ciradar: " << result.infeasible_points << " sweep point(s) with infeasible draws\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constructive-interference precoding for radar/communication coexistence"};
  app.require_subcommand(1);
  Options opts;
  const std::vector<std::pair<std::string, std::string>> modes{
      {"power-min", "Minimum transmit power sweep"},
      {"interf-min", "Minimum radar interference sweep"},
      {"robust", "Worst-case robust power minimization sweep"},
      {"radar-detect", "Detection probability, analytic and Monte Carlo"},
      {"crb", "Direction-of-arrival Cramer-Rao bound sweep"},
      {"compare-oracle", "Compare against golden files from the reference solver"},
      {"bench", "Timing of the dual solver against the barrier engine"}};
  std::vector<CLI::App*> cmds;
  for (const auto& [name, help] : modes) {
    CLI::App* cmd = app.add_subcommand(name, help);
    add_common(cmd, opts);
    if (name == "compare-oracle") {
      cmd->add_option("--golden", opts.golden, "Golden file or directory (repeatable)");
      cmd->add_option("--emit-instances", opts.emit, "Write instance files for the reference solver and exit");
    }
    cmds.push_back(cmd);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  try {
    for (CLI::App* cmd : cmds)
      if (cmd->parsed()) return execute(cmd->get_name(), opts, *cmd);
  } catch (const std::exception& e) {
    std::cerr << "ciradar: error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
