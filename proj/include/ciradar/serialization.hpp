#pragma once

// JSON exchange format for channels, problem instances and golden records.
// Complex matrices are {"rows": r, "cols": c, "data": [[re, im], ...]} in
// row-major order.

#include "ciradar/ci_core.hpp"
#include "ciradar/qcqp.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace ciradar {

using Json = nlohmann::json;

Json to_json(const CMatrix& m);
CMatrix complex_matrix_from_json(const Json& j);
Json to_json(const Matrix& m);
Matrix real_matrix_from_json(const Json& j);
Json to_json(const Vector& v);
Vector real_vector_from_json(const Json& j);

Json to_json(const ChannelSet& cs);
ChannelSet channel_set_from_json(const Json& j);

/// One problem instance shared with the reference solver.
struct Instance {
  ChannelSet channels;
  Vector phases;          // one symbol slot
  int order = 4;
  LinkBudget budget;
  double power_budget = 0.0;  // mW, interference minimization only
  double delta_h = 0.0;
  double delta_g = 0.0;
  double delta_f = 0.0;
  std::uint64_t seed = 0;
};

Json to_json(const Instance& inst);
Instance instance_from_json(const Json& j);
/// FNV-1a 64-bit hash of the canonical JSON dump of the instance, as hex.
std::string instance_hash(const Instance& inst);

struct GoldenRecord {
  Instance instance;
  std::string instance_hash;
  std::string problem;   // P0, P1, P3, P4, P11 or P13
  double objective = 0.0;
  CMatrix solution;      // w (N x 1) for CI problems, precoders (N x K) for SDR problems
  std::string status;
  std::string solver;
  int randomizations = 0;
};

Json to_json(const GoldenRecord& g);
/// Throws std::invalid_argument when the stored hash does not match the instance.
GoldenRecord golden_from_json(const Json& j);

Json to_json(const QcqpSpec& spec);
QcqpSpec qcqp_spec_from_json(const Json& j);

Json to_json(const BeamformingSolution& s);
Json to_json(const DualState& d);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

}  // namespace ciradar
