#include "gradctrl/config.hpp"

#include <cmath>
#include <set>

#include "gradctrl/io.hpp"
#include "json.hpp"

namespace gradctrl {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& message) { throw ConfigError(message); }

/// Tracks consumed keys so unknown entries are rejected.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : obj_(j), path_(std::move(path)) {
    if (!j.is_object()) fail("field " + path_ + ": expected an object");
  }

  std::string at(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  bool has(const std::string& key) {
    consumed_.insert(key);
    return obj_.contains(key);
  }

  const json& require(const std::string& key) {
    consumed_.insert(key);
    const auto it = obj_.find(key);
    if (it == obj_.end()) fail("missing required field: " + at(key));
    return *it;
  }

  const json* optional(const std::string& key) {
    consumed_.insert(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  double number(const std::string& key) {
    const json& j = require(key);
    if (!j.is_number()) fail("field " + at(key) + ": expected a number");
    return j.get<double>();
  }

  double number_or(const std::string& key, double fallback) {
    const json* j = optional(key);
    if (!j) return fallback;
    if (!j->is_number()) fail("field " + at(key) + ": expected a number");
    return j->get<double>();
  }

  int integer(const std::string& key) {
    const json& j = require(key);
    if (!j.is_number_integer()) fail("field " + at(key) + ": expected an integer");
    return j.get<int>();
  }

  int integer_or(const std::string& key, int fallback) {
    const json* j = optional(key);
    if (!j) return fallback;
    if (!j->is_number_integer()) fail("field " + at(key) + ": expected an integer");
    return j->get<int>();
  }

  std::string string(const std::string& key) {
    const json& j = require(key);
    if (!j.is_string()) fail("field " + at(key) + ": expected a string");
    return j.get<std::string>();
  }

  std::vector<double> number_array(const std::string& key) {
    const json& j = require(key);
    if (!j.is_array()) fail("field " + at(key) + ": expected an array");
    std::vector<double> out;
    for (const auto& v : j) {
      if (!v.is_number()) fail("field " + at(key) + ": expected an array of numbers");
      out.push_back(v.get<double>());
    }
    return out;
  }

  void finish() {
    for (const auto& item : obj_.items())
      if (!consumed_.count(item.key())) fail("unknown field: " + at(item.key()));
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> consumed_;
};

Mesh parse_mesh(const json& j) {
  ObjectReader r(j, "mesh");
  const int dim = r.integer("dimension");
  const std::vector<double> extents = r.number_array("extents");
  const json& div = r.require("divisions");
  if (!div.is_array()) fail("field mesh.divisions: expected an array");
  std::vector<int> divisions;
  for (const auto& v : div) {
    if (!v.is_number_integer()) fail("field mesh.divisions: expected integers");
    divisions.push_back(v.get<int>());
  }
  const json& sides = r.require("dirichlet_sides");
  if (!sides.is_array()) fail("field mesh.dirichlet_sides: expected an array");
  std::set<Side> dirichlet;
  for (const auto& s : sides) {
    if (!s.is_string()) fail("field mesh.dirichlet_sides: expected strings");
    try {
      dirichlet.insert(side_from_string(s.get<std::string>()));
    } catch (const std::invalid_argument& e) {
      fail(std::string("field mesh.dirichlet_sides: ") + e.what());
    }
  }
  r.finish();
  if (divisions.empty() || divisions.size() < static_cast<size_t>(dim))
    fail("field mesh.divisions: needs one entry per dimension");
  try {
    return build_mesh(dim, extents, divisions[0], dim == 2 ? divisions[1] : 1, dirichlet);
  } catch (const std::invalid_argument& e) {
    fail(std::string("field mesh: ") + e.what());
  }
}

Vector parse_field(const json& j, const std::string& path, const Mesh& mesh) {
  ObjectReader r(j, path);
  const std::string kind = r.string("kind");
  Vector out = Vector::Zero(mesh.node_count());
  if (kind == "zero") {
  } else if (kind == "ones") {
    out.setOnes();
  } else if (kind == "constant") {
    out.setConstant(r.number("value"));
  } else if (kind == "sine_bump") {
    const double height = r.number("height");
    for (int i = 0; i < mesh.node_count(); ++i) {
      double v = height * std::sin(M_PI * mesh.nodes(0, i) / mesh.lx);
      if (mesh.dimension == 2) v *= std::sin(M_PI * mesh.nodes(1, i) / mesh.ly);
      out(i) = v;
    }
  } else if (kind == "nodal") {
    const std::vector<double> values = r.number_array("values");
    if (values.size() != static_cast<size_t>(mesh.node_count()))
      fail("field " + path + ".values: needs one value per mesh node");
    out = Eigen::Map<const Vector>(values.data(), mesh.node_count());
  } else {
    fail("field " + path + ".kind: unknown field kind '" + kind + "'");
  }
  r.finish();
  return out;
}

DiffusionLaw parse_diffusion(const json& j) {
  ObjectReader r(j, "diffusion");
  const std::string kind = r.string("kind");
  DiffusionLaw law;
  try {
    if (kind == "constant") {
      law = DiffusionLaw::constant(r.number("value"));
    } else if (kind == "rational_bounded") {
      law = DiffusionLaw::rational_bounded(r.number("a"), r.number("b"));
    } else {
      fail("field diffusion.kind: unknown diffusion law '" + kind + "'");
    }
  } catch (const std::invalid_argument& e) {
    fail(std::string("field diffusion: ") + e.what());
  }
  r.finish();
  return law;
}

CoefficientField parse_coefficient(const json& j, const Mesh& mesh) {
  ObjectReader r(j, "coefficient");
  const std::string kind = r.string("kind");
  CoefficientField mu;
  if (kind == "identity") {
    mu = identity_coefficient(mesh);
  } else if (kind == "scalar") {
    mu = identity_coefficient(mesh, r.number("value"));
  } else if (kind == "matrix") {
    const json& rows = r.require("rows");
    if (!rows.is_array() || rows.size() != 2) fail("field coefficient.rows: expected 2 rows");
    Matrix2 m;
    for (int a = 0; a < 2; ++a) {
      if (!rows[a].is_array() || rows[a].size() != 2)
        fail("field coefficient.rows: expected 2x2 numbers");
      for (int b = 0; b < 2; ++b) {
        if (!rows[a][b].is_number()) fail("field coefficient.rows: expected numbers");
        m(a, b) = rows[a][b].get<double>();
      }
    }
    mu = CoefficientField(mesh.element_count(), m);
  } else {
    fail("field coefficient.kind: unknown coefficient kind '" + kind + "'");
  }
  r.finish();
  return mu;
}

Nonlinearity parse_nonlinearity(const json& j, const Mesh& mesh) {
  ObjectReader r(j, "nonlinearity");
  const std::string kind = r.string("kind");
  Nonlinearity nl;
  try {
    if (kind == "zero") {
      nl = Nonlinearity::zero();
    } else if (kind == "quad_grad") {
      nl = Nonlinearity::quad_grad();
    } else if (kind == "advect") {
      const std::vector<double> beta = r.number_array("beta");
      if (beta.size() != static_cast<size_t>(mesh.dimension))
        fail("field nonlinearity.beta: needs one entry per dimension");
      Vector2 b = Vector2::Zero();
      for (size_t i = 0; i < beta.size(); ++i) b(static_cast<Index>(i)) = beta[i];
      nl = Nonlinearity::advect(b);
    } else if (kind == "kawohl") {
      nl = Nonlinearity::kawohl(r.number("lambda"), r.number("r"));
    } else if (kind == "power_sum") {
      nl = Nonlinearity::power_sum(r.number("a"), r.number("b"), r.number("alpha"),
                                   r.number("beta"));
    } else {
      fail("field nonlinearity.kind: unknown nonlinearity '" + kind + "'");
    }
  } catch (const std::invalid_argument& e) {
    fail(std::string("field nonlinearity: ") + e.what());
  }
  r.finish();
  return nl;
}

ControlMap parse_control_map(const json& j, const Mesh& mesh) {
  ObjectReader r(j, "control");
  const std::string kind = r.string("kind");
  ControlMap cm;
  if (kind == "distributed") {
    const json* region = r.optional("region");
    if (!region || (region->is_string() && region->get<std::string>() == "all")) {
      cm = ControlMap::distributed(mesh);
    } else if (region->is_object()) {
      ObjectReader rr(*region, "control.region");
      const std::vector<double> nodes = rr.number_array("nodes");
      rr.finish();
      std::vector<uint8_t> indicator(mesh.node_count(), 0);
      for (double v : nodes) {
        const int i = static_cast<int>(v);
        if (i < 0 || i >= mesh.node_count())
          fail("field control.region.nodes: node index out of range");
        indicator[i] = 1;
      }
      cm = ControlMap::distributed(mesh, std::move(indicator));
    } else {
      fail("field control.region: expected \"all\" or {nodes: [...]}");
    }
  } else if (kind == "time_only") {
    cm = ControlMap::time_only(parse_field(r.require("actuator"), "control.actuator", mesh));
  } else {
    fail("field control.kind: unknown control map '" + kind + "'");
  }
  r.finish();
  return cm;
}

Matrix parse_bound(ObjectReader& r, const std::string& key) {
  const json& j = r.require(key);
  if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
  if (j.is_array()) {
    Matrix out(1, static_cast<Index>(j.size()));
    Index k = 0;
    for (const auto& v : j) {
      if (!v.is_number()) fail("field " + r.at(key) + ": expected numbers");
      out(0, k++) = v.get<double>();
    }
    return out;
  }
  fail("field " + r.at(key) + ": expected a number or an array per time node");
}

ConstraintSpec parse_constraints(const json& j) {
  ObjectReader r(j, "constraints");
  const std::string kind = r.string("kind");
  ConstraintSpec cs;
  if (kind == "none") {
    r.finish();
    return cs;
  }
  if (kind == "avg_in_space") {
    const json& qj = r.require("q");
    double q = 0.0;
    if (qj.is_number()) {
      q = qj.get<double>();
    } else if (qj.is_string() && qj.get<std::string>() == "inf") {
      q = std::numeric_limits<double>::infinity();
    } else {
      fail("field constraints.q: expected a number or \"inf\"");
    }
    cs = ConstraintSpec::avg_in_space(q, parse_bound(r, "g_avg"));
  } else if (kind == "pointwise_q") {
    cs = ConstraintSpec::pointwise_q(parse_bound(r, "g"));
  } else if (kind == "componentwise") {
    cs = ConstraintSpec::componentwise(parse_bound(r, "g_low"), parse_bound(r, "g_up"));
  } else if (kind == "zero_order_box") {
    cs = ConstraintSpec::zero_order_box(parse_bound(r, "y_low"), parse_bound(r, "y_up"));
  } else {
    fail("field constraints.kind: unknown constraint family '" + kind + "'");
  }
  cs.penalty_weight = r.number_or("penalty_weight", 1.0);
  cs.continuation_factor = r.number_or("continuation_factor", 10.0);
  cs.target_violation = r.number_or("target_violation", 1e-4);
  cs.max_weight = r.number_or("max_weight", 1e8);
  r.finish();
  return cs;
}

SolverOptions parse_solver(const json* j, unsigned seed) {
  SolverOptions opt;
  opt.seed = seed;
  if (!j) return opt;
  ObjectReader r(*j, "solver");
  opt.newton_tol = r.number_or("newton_tol", opt.newton_tol);
  opt.newton_max_iter = r.integer_or("newton_max_iter", opt.newton_max_iter);
  opt.newton_max_halvings = r.integer_or("newton_max_halvings", opt.newton_max_halvings);
  opt.blowup_threshold = r.number_or("blowup_threshold", opt.blowup_threshold);
  opt.feas_tol = r.number_or("feas_tol", opt.feas_tol);
  opt.opt_tol = r.number_or("opt_tol", opt.opt_tol);
  opt.opt_max_iter = r.integer_or("opt_max_iter", opt.opt_max_iter);
  opt.armijo_c = r.number_or("armijo_c", opt.armijo_c);
  opt.armijo_max_halvings = r.integer_or("armijo_max_halvings", opt.armijo_max_halvings);
  opt.duality_gap_tol = r.number_or("duality_gap_tol", opt.duality_gap_tol);
  opt.tol_active = r.number_or("tol_active", opt.tol_active);
  r.finish();
  return opt;
}

ControlSource parse_control_source(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  const std::string kind = r.string("kind");
  ControlSource src;
  if (kind == "zero") {
    src.kind = ControlSource::Kind::Zero;
  } else if (kind == "constant") {
    src.kind = ControlSource::Kind::Constant;
    src.value = r.number("value");
  } else if (kind == "file") {
    src.kind = ControlSource::Kind::File;
    src.path = r.string("path");
  } else {
    fail("field " + path + ".kind: expected zero, constant, or file");
  }
  r.finish();
  return src;
}

}  // namespace

Control ControlSource::realize(const ProblemSpec& spec) const {
  const Index rows = control_rows(spec.control_map, spec.mesh);
  switch (kind) {
    case Kind::Zero: return Control::zero(rows, spec.steps);
    case Kind::Constant: return Control::constant(rows, spec.steps, value);
    case Kind::File: {
      Control u = parse_control_csv(read_file(path));
      if (u.rows() != rows || u.steps() != spec.steps)
        throw ConfigError("control file " + path.string() +
                          " does not match the control space shape");
      return u;
    }
  }
  return Control::zero(rows, spec.steps);
}

RunConfig parse_config(const std::string& json_text) {
  json root_json;
  try {
    root_json = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(std::string("config is not valid JSON: ") + e.what());
  }
  ObjectReader root(root_json, "");

  const std::string schema = root.string("schema");
  if (schema != "gradctrl/1")
    fail("field schema: unsupported schema '" + schema + "' (expected gradctrl/1)");

  RunConfig config;
  config.spec.mesh = parse_mesh(root.require("mesh"));
  const Mesh& mesh = config.spec.mesh;

  {
    ObjectReader r(root.require("time"), "time");
    config.spec.horizon = r.number("horizon");
    config.spec.steps = r.integer("steps");
    r.finish();
  }

  config.spec.xi = parse_diffusion(root.require("diffusion"));
  config.spec.mu = parse_coefficient(root.require("coefficient"), mesh);
  config.spec.f = parse_nonlinearity(root.require("nonlinearity"), mesh);
  config.spec.control_map = parse_control_map(root.require("control"), mesh);
  config.spec.y0 = zero_dirichlet(mesh, parse_field(root.require("initial_state"),
                                                    "initial_state", mesh));
  config.spec.target = parse_field(root.require("target"), "target", mesh);

  {
    ObjectReader r(root.require("objective"), "objective");
    config.spec.gamma = r.number("gamma");
    r.finish();
  }
  {
    ObjectReader r(root.require("control_bounds"), "control_bounds");
    const double lower = r.number("lower");
    const double upper = r.number("upper");
    r.finish();
    const Index rows = control_rows(config.spec.control_map, mesh);
    config.spec.u_low = Control::constant(rows, config.spec.steps, lower);
    config.spec.u_up = Control::constant(rows, config.spec.steps, upper);
  }

  if (const json* j = root.optional("constraints"))
    config.spec.constraints = parse_constraints(*j);

  config.seed = static_cast<unsigned>(root.integer_or("seed", 42));
  config.spec.options = parse_solver(root.optional("solver"), config.seed);

  if (const json* j = root.optional("run_control"))
    config.run_control = parse_control_source(*j, "run_control");

  if (const json* j = root.optional("grad_check")) {
    ObjectReader r(*j, "grad_check");
    config.grad_check.directions = r.integer_or("directions", 10);
    config.grad_check.epsilon = r.number_or("epsilon", 1e-4);
    config.grad_check.tolerance = r.number_or("tolerance", 1e-5);
    r.finish();
  }

  if (const json* j = root.optional("kkt")) {
    ObjectReader r(*j, "kkt");
    config.kkt_tolerances.stationarity = r.number_or("stationarity", 1e-4);
    config.kkt_tolerances.complementarity = r.number_or("complementarity", 1e-4);
    config.kkt_tolerances.multiplier_nonneg = r.number_or("multiplier_nonneg", 1e-6);
    config.kkt_tolerances.feasibility = r.number_or("feasibility", 1e-4);
    config.kkt_tolerances.tol_active = r.number_or("tol_active", 1e-3);
    config.kkt_tolerances.duality_gap = r.number_or("duality_gap", 1e-10);
    config.kkt_tolerances.duality_probes = r.integer_or("duality_probes", 10);
    r.finish();
  }

  if (const json* j = root.optional("blowup_scan")) {
    ObjectReader r(*j, "blowup_scan");
    const std::string parameter = r.string("parameter");
    if (parameter != "lambda")
      fail("field blowup_scan.parameter: only 'lambda' scans are supported");
    config.blowup_values = r.number_array("values");
    r.finish();
  }

  if (const json* j = root.optional("slater_check")) {
    ObjectReader r(*j, "slater_check");
    config.slater_u_bar = parse_control_source(r.require("u_bar"), "slater_check.u_bar");
    config.slater_u_hat = parse_control_source(r.require("u_hat"), "slater_check.u_hat");
    r.finish();
  }

  root.finish();

  try {
    config.spec.validate();
  } catch (const std::invalid_argument& e) {
    fail(std::string("invalid problem: ") + e.what());
  }
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_file(path));
}

}  // namespace gradctrl
