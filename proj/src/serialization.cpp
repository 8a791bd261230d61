#include "ciradar/serialization.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <fstream>
#include <stdexcept>

namespace ciradar {

Json to_json(const CMatrix& m) {
  Json data = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back({m(i, j).real(), m(i, j).imag()});
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

CMatrix complex_matrix_from_json(const Json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const Json& data = j.at("data");
  if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw std::invalid_argument("complex matrix JSON: data length does not match rows x cols");
  CMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index k = 0; k < cols; ++k) {
      const Json& e = data.at(static_cast<std::size_t>(i * cols + k));
      if (!e.is_array() || e.size() != 2) throw std::invalid_argument("complex matrix JSON: entries must be [re, im]");
      m(i, k) = Complex(e[0].get<double>(), e[1].get<double>());
    }
  return m;
}

Json to_json(const Matrix& m) {
  Json data = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix real_matrix_from_json(const Json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const Json& data = j.at("data");
  if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw std::invalid_argument("real matrix JSON: data length does not match rows x cols");
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = data.at(static_cast<std::size_t>(i * cols + k)).get<double>();
  return m;
}

Json to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector real_vector_from_json(const Json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

Json to_json(const ChannelSet& cs) {
  Json j{{"dims", {{"n", cs.bs_antennas()}, {"k", cs.users()}, {"m", cs.radar_antennas()}}},
         {"seed", cs.seed},
         {"H", to_json(cs.H)},
         {"G", to_json(cs.G)},
         {"F", to_json(cs.F)}};
  if (cs.estimate) {
    j["estimate"] = {{"H", to_json(cs.estimate->H)},
                     {"G", to_json(cs.estimate->G)},
                     {"F", to_json(cs.estimate->F)},
                     {"delta_h", cs.estimate->delta_h},
                     {"delta_g", cs.estimate->delta_g},
                     {"delta_f", cs.estimate->delta_f}};
  }
  return j;
}

ChannelSet channel_set_from_json(const Json& j) {
  ChannelSet cs;
  cs.H = complex_matrix_from_json(j.at("H"));
  cs.G = complex_matrix_from_json(j.at("G"));
  cs.F = complex_matrix_from_json(j.at("F"));
  cs.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("estimate")) {
    const Json& e = j.at("estimate");
    cs.estimate = ChannelEstimate{complex_matrix_from_json(e.at("H")),
                                  complex_matrix_from_json(e.at("G")),
                                  complex_matrix_from_json(e.at("F")),
                                  e.value("delta_h", 0.0),
                                  e.value("delta_g", 0.0),
                                  e.value("delta_f", 0.0)};
  }
  if (j.contains("dims")) {
    const Json& d = j.at("dims");
    if (d.at("n").get<int>() != cs.bs_antennas() || d.at("k").get<int>() != cs.users() ||
        d.at("m").get<int>() != cs.radar_antennas())
      throw std::invalid_argument("channel set JSON: dims disagree with matrix shapes");
  }
  cs.validate();
  return cs;
}

Json to_json(const Instance& inst) {
  return Json{{"channels", to_json(inst.channels)},
              {"phases", to_json(inst.phases)},
              {"order", inst.order},
              {"gamma_db", inst.budget.sinr_db},
              {"inr_db", inst.budget.inr_db},
              {"sigma_c2", inst.budget.sigma_c2},
              {"sigma_r2", inst.budget.sigma_r2},
              {"radar_power", inst.budget.radar_power},
              {"power_budget", inst.power_budget},
              {"delta", {{"h", inst.delta_h}, {"g", inst.delta_g}, {"f", inst.delta_f}}},
              {"seed", inst.seed}};
}

Instance instance_from_json(const Json& j) {
  Instance inst;
  inst.channels = channel_set_from_json(j.at("channels"));
  inst.phases = real_vector_from_json(j.at("phases"));
  inst.order = j.at("order").get<int>();
  inst.budget.sinr_db = j.at("gamma_db").get<std::vector<double>>();
  inst.budget.inr_db = j.at("inr_db").get<std::vector<double>>();
  inst.budget.sigma_c2 = j.value("sigma_c2", 1.0);
  inst.budget.sigma_r2 = j.value("sigma_r2", 1.0);
  inst.budget.radar_power = j.value("radar_power", 1.0);
  inst.power_budget = j.value("power_budget", 0.0);
  if (j.contains("delta")) {
    inst.delta_h = j["delta"].value("h", 0.0);
    inst.delta_g = j["delta"].value("g", 0.0);
    inst.delta_f = j["delta"].value("f", 0.0);
  }
  inst.seed = j.value("seed", std::uint64_t{0});
  if (inst.phases.size() != inst.channels.users())
    throw std::invalid_argument("instance JSON: phases must have one entry per user");
  return inst;
}

std::string instance_hash(const Instance& inst) {
  const std::string canonical = to_json(inst).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json to_json(const GoldenRecord& g) {
  return Json{{"instance", to_json(g.instance)},
              {"instance_hash", g.instance_hash.empty() ? instance_hash(g.instance) : g.instance_hash},
              {"problem", g.problem},
              {"objective", g.objective},
              {"solution", to_json(g.solution)},
              {"status", g.status},
              {"solver", g.solver},
              {"randomizations", g.randomizations}};
}

GoldenRecord golden_from_json(const Json& j) {
  GoldenRecord g;
  g.instance = instance_from_json(j.at("instance"));
  g.instance_hash = j.value("instance_hash", std::string());
  const std::string computed = instance_hash(g.instance);
  if (!g.instance_hash.empty() && g.instance_hash != computed)
    throw std::invalid_argument("golden record: instance hash " + g.instance_hash + " does not match " + computed);
  g.instance_hash = computed;
  g.problem = j.at("problem").get<std::string>();
  static const std::vector<std::string> tags{"P0", "P1", "P3", "P4", "P11", "P13"};
  if (std::find(tags.begin(), tags.end(), g.problem) == tags.end())
    throw std::invalid_argument("golden record: unknown problem tag " + g.problem);
  g.objective = j.at("objective").is_null() ? std::numeric_limits<double>::quiet_NaN() : j.at("objective").get<double>();
  if (j.contains("solution") && !j.at("solution").is_null()) g.solution = complex_matrix_from_json(j.at("solution"));
  g.status = j.value("status", std::string("unknown"));
  g.solver = j.value("solver", std::string());
  g.randomizations = j.value("randomizations", 0);
  return g;
}

Json to_json(const QcqpSpec& spec) {
  Json lin = Json::array();
  for (const auto& l : spec.linear) lin.push_back({{"a", to_json(l.a)}, {"b", l.b}});
  Json quad = Json::array();
  for (const auto& q : spec.quadratic) quad.push_back({{"Q", to_json(q.Q)}, {"q", to_json(q.q)}, {"r", q.r}});
  Json cones = Json::array();
  for (const auto& c : spec.cones)
    cones.push_back({{"B", to_json(c.B)}, {"e", to_json(c.e)}, {"c", to_json(c.c)}, {"d", c.d}});
  return Json{{"n", spec.n},     {"Q0", to_json(spec.Q0)}, {"q0", to_json(spec.q0)},
              {"linear", lin},   {"quadratic", quad},      {"cones", cones}};
}

QcqpSpec qcqp_spec_from_json(const Json& j) {
  QcqpSpec spec;
  spec.n = j.at("n").get<int>();
  spec.Q0 = real_matrix_from_json(j.at("Q0"));
  spec.q0 = real_vector_from_json(j.at("q0"));
  for (const auto& l : j.value("linear", Json::array()))
    spec.linear.push_back({real_vector_from_json(l.at("a")), l.at("b").get<double>()});
  for (const auto& q : j.value("quadratic", Json::array()))
    spec.quadratic.push_back(
        {real_matrix_from_json(q.at("Q")), real_vector_from_json(q.at("q")), q.at("r").get<double>()});
  for (const auto& c : j.value("cones", Json::array()))
    spec.cones.push_back({real_matrix_from_json(c.at("B")), real_vector_from_json(c.at("e")),
                          real_vector_from_json(c.at("c")), c.at("d").get<double>()});
  return spec;
}

Json to_json(const BeamformingSolution& s) {
  return Json{{"w", to_json(CMatrix(s.w))},
              {"precoders", to_json(s.precoders)},
              {"power", s.power},
              {"inr", to_json(s.inr)},
              {"ci_slack", to_json(s.ci_slack)},
              {"interference", s.interference}};
}

Json to_json(const DualState& d) {
  return Json{{"lambda", to_json(d.lambda)},
              {"c", to_json(d.c)},
              {"dual_objective", d.dual_objective},
              {"iterations", d.iterations},
              {"pg_norm", d.pg_norm},
              {"status", to_string(d.status)}};
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw std::runtime_error("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace ciradar
