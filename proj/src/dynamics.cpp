#include "tspine/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include "tspine/error.hpp"

namespace tspine {

MaterialPreset cable_preset(const std::string& name) {
  if (name == "rubber_thread") return {name, 40.0};
  throw ParameterError("material", "unknown cable material '" + name + "'");
}

MaterialPreset strut_preset(const std::string& name) {
  if (name == "carbon_fiber_tube") return {name, 40000.0};
  throw ParameterError("material", "unknown strut material '" + name + "'");
}

MaterialPreset tendon_preset(const std::string& name) {
  if (name == "dyneema_thread") return {name, 20.0};
  throw ParameterError("material", "unknown tendon material '" + name + "'");
}

void check_degradation(const DegradationState& d) {
  if (!(d.elapsed >= 0.0)) throw ParameterError("elapsed", "elapsed time must be non-negative");
  if (!(d.decay_rate >= 0.0)) throw ParameterError("decay_rate", "decay rate must be non-negative");
  if (!(d.friction_mu >= 0.0)) throw ParameterError("friction_mu", "friction coefficient must be non-negative");
  for (const auto& [id, w] : d.wrap_angles)
    if (!(w >= 0.0 && w <= 2.0 * M_PI))
      throw ParameterError("wrap_angle", "wrap angle at " + node_label(id) + " outside [0, 2pi]");
}

void assign_rest_lengths(StructureModel& model, const Materials& materials, const EquilibriumState& state) {
  const auto len = member_lengths(model, state.positions);
  const double s = state.prestress_scale;
  for (std::size_t e = 0; e < model.members.size(); ++e) {
    auto& mem = model.members[e];
    const double ea = materials.axial_stiffness(mem.kind);
    const double f = state.member_forces[e] / s;
    // f = EA (l - L0) / L0  =>  L0 = l EA / (EA + f)
    if (!(ea + f > 0.0))
      throw ParameterError("overstrain", to_string(mem.kind) + " " + node_label(mem.a) + "--" + node_label(mem.b) +
                                             " force exceeds its axial stiffness");
    mem.rest_length = len[e] * ea / (ea + f);
  }
}

namespace {

// Flattened network for the inner loop.
struct Network {
  int nodes = 0;
  std::vector<int> ia, ib;
  std::vector<double> k, rest;
  std::vector<char> cable;
  std::vector<char> fixed;
  std::array<std::vector<int>, 3> route;
  std::array<double, 3> tendon_rest{};
  std::array<std::vector<double>, 3> wrap_override;  // NaN: geometric
  double scale = 1.0;
  double tendon_ea = 0.0;
  double mu = 0.0;
  double gravity_force = 0.0;
};

Network compile(const DynamicsModel& dyn, const ActuationCommand& command, double scale) {
  const auto& model = dyn.model;
  Network net;
  net.nodes = model.node_count();
  net.scale = scale;
  for (const auto& mem : model.members) {
    if (!(mem.rest_length > 0.0))
      throw ParameterError("rest_length", "member " + node_label(mem.a) + "--" + node_label(mem.b) +
                                              " has no rest length; run form-finding first");
    net.ia.push_back(model.index_of(mem.a));
    net.ib.push_back(model.index_of(mem.b));
    net.rest.push_back(mem.rest_length);
    net.k.push_back(dyn.materials.axial_stiffness(mem.kind) / mem.rest_length);
    net.cable.push_back(is_cable(mem.kind) ? 1 : 0);
  }
  net.fixed.assign(static_cast<std::size_t>(net.nodes), 0);
  for (const auto& id : dyn.anchors) {
    const int i = model.index_of(id);
    if (i < 0) throw ParameterError("anchor_missing", "anchor " + node_label(id) + " is not a model node");
    net.fixed[static_cast<std::size_t>(i)] = 1;
  }
  for (std::size_t t = 0; t < 3; ++t) {
    const auto& tendon = dyn.tendons[t];
    for (const auto& id : tendon.route) net.route[t].push_back(model.index_of(id));
    for (std::size_t j = 0; j < tendon.route.size(); ++j) {
      const auto it = dyn.degradation.wrap_angles.find(tendon.route[j]);
      const bool inner = j > 0 && j + 1 < tendon.route.size();
      net.wrap_override[t].push_back(inner && it != dyn.degradation.wrap_angles.end() ? it->second
                                                                                       : std::nan(""));
    }
    net.tendon_rest[t] = tendon.route.size() >= 2 ? tendon.rest_length + command.delta_l[t] : 0.0;
    if (tendon.route.size() >= 2 && !(net.tendon_rest[t] > 0.0))
      throw ParameterError("stroke", "tendon " + std::to_string(t + 1) + " shortened past zero length");
  }
  net.tendon_ea = dyn.materials.tendon_stiffness;
  net.mu = dyn.degradation.friction_mu;
  net.gravity_force = dyn.materials.node_mass * dyn.materials.gravity;
  return net;
}

// Accumulates node forces; fills member forces and tendon tensions when asked.
void evaluate(const Network& net, const std::vector<Vec3>& x, std::vector<Vec3>& f, std::vector<double>* member_force,
              Triple* tendon_tension) {
  std::fill(f.begin(), f.end(), Vec3::Zero());
  const std::size_t E = net.ia.size();
  for (std::size_t e = 0; e < E; ++e) {
    const auto a = static_cast<std::size_t>(net.ia[e]);
    const auto b = static_cast<std::size_t>(net.ib[e]);
    const Vec3 d = x[b] - x[a];
    const double len = d.norm();
    double force = net.scale * net.k[e] * (len - net.rest[e]);
    if (net.cable[e] && force < 0.0) force = 0.0;
    if (member_force) (*member_force)[e] = force;
    if (force != 0.0 && len > 0.0) {
      const Vec3 pull = (force / len) * d;
      f[a] += pull;
      f[b] -= pull;
    }
  }
  for (std::size_t t = 0; t < 3; ++t) {
    const auto& r = net.route[t];
    if (tendon_tension) (*tendon_tension)[t] = 0.0;
    if (r.size() < 2) continue;
    double length = 0.0;
    for (std::size_t j = 0; j + 1 < r.size(); ++j)
      length += (x[static_cast<std::size_t>(r[j + 1])] - x[static_cast<std::size_t>(r[j])]).norm();
    const double rest = net.tendon_rest[t];
    const double stretch = length - rest;
    if (stretch <= 0.0) continue;
    double tension = net.tendon_ea / rest * stretch;
    if (tendon_tension) (*tendon_tension)[t] = tension;
    Vec3 prev_dir = Vec3::Zero();
    for (std::size_t j = 0; j + 1 < r.size(); ++j) {
      const auto p = static_cast<std::size_t>(r[j]);
      const auto q = static_cast<std::size_t>(r[j + 1]);
      const Vec3 d = x[q] - x[p];
      const double len = d.norm();
      if (len <= 0.0) continue;
      const Vec3 dir = d / len;
      if (j > 0 && net.mu > 0.0) {
        double wrap = net.wrap_override[t][j];
        if (std::isnan(wrap)) wrap = std::acos(std::clamp(prev_dir.dot(dir), -1.0, 1.0));
        tension *= std::exp(-net.mu * wrap);
      }
      // The tendon is hauled in at the base: each segment pulls its upper
      // end toward its lower end.
      f[p] += tension * dir;
      f[q] -= tension * dir;
      prev_dir = dir;
    }
  }
  if (net.gravity_force != 0.0)
    for (auto& fi : f) fi.z() -= net.gravity_force;
}

double max_free_norm(const Network& net, const std::vector<Vec3>& v) {
  double out = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!net.fixed[i]) out = std::max(out, v[i].norm());
  return out;
}

}  // namespace

std::vector<double> spring_forces(const DynamicsModel& dyn, const std::vector<Vec3>& positions, double scale) {
  const Network net = compile(dyn, ActuationCommand{}, scale);
  std::vector<Vec3> f(positions.size());
  std::vector<double> mf(net.ia.size());
  evaluate(net, positions, f, &mf, nullptr);
  return mf;
}

Triple tendon_tensions(const DynamicsModel& dyn, const EquilibriumState& state, const ActuationCommand& command) {
  const Network net = compile(dyn, command, state.prestress_scale);
  std::vector<Vec3> f(state.positions.size());
  Triple t{};
  evaluate(net, state.positions, f, nullptr, &t);
  return t;
}

Eigen::MatrixXd tangent_stiffness(const DynamicsModel& dyn, const std::vector<Vec3>& x, const ActuationCommand& command) {
  const double scale = dyn.materials.stiffness.resolve(command.stiffness);
  const Network net = compile(dyn, command, scale);
  const auto N = static_cast<std::size_t>(net.nodes);
  std::vector<int> slot(N, -1);
  int F = 0;
  for (std::size_t i = 0; i < N; ++i)
    if (!net.fixed[i]) slot[i] = F++;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(3 * F, 3 * F);
  auto add_block = [&](std::size_t a, std::size_t b, const Eigen::Matrix3d& k) {
    if (slot[a] >= 0 && slot[b] >= 0) K.block<3, 3>(3 * slot[a], 3 * slot[b]) += k;
  };
  auto add_pair = [&](std::size_t a, std::size_t b, const Eigen::Matrix3d& k) {
    add_block(a, a, k);
    add_block(b, b, k);
    add_block(a, b, -k);
    add_block(b, a, -k);
  };
  const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
  for (std::size_t e = 0; e < net.ia.size(); ++e) {
    const auto a = static_cast<std::size_t>(net.ia[e]);
    const auto b = static_cast<std::size_t>(net.ib[e]);
    const Vec3 d = x[b] - x[a];
    const double len = d.norm();
    const double force = scale * net.k[e] * (len - net.rest[e]);
    if ((net.cable[e] && force <= 0.0) || len <= 0.0) continue;
    const Vec3 u = d / len;
    add_pair(a, b, scale * net.k[e] * u * u.transpose() + force / len * (I - u * u.transpose()));
  }
  for (std::size_t t = 0; t < 3; ++t) {
    const auto& r = net.route[t];
    if (r.size() < 2) continue;
    double length = 0.0;
    for (std::size_t j = 0; j + 1 < r.size(); ++j)
      length += (x[static_cast<std::size_t>(r[j + 1])] - x[static_cast<std::size_t>(r[j])]).norm();
    const double rest = net.tendon_rest[t];
    if (length <= rest) continue;
    const double kt = net.tendon_ea / rest;
    const double tension = kt * (length - rest);
    // g = dL/dx over the route nodes; K = kt g g^T + geometric terms.
    std::vector<std::pair<std::size_t, Vec3>> g;
    for (std::size_t j = 0; j + 1 < r.size(); ++j) {
      const auto p = static_cast<std::size_t>(r[j]);
      const auto q = static_cast<std::size_t>(r[j + 1]);
      const Vec3 d = x[q] - x[p];
      const double len = d.norm();
      if (len <= 0.0) continue;
      const Vec3 u = d / len;
      g.emplace_back(p, -u);
      g.emplace_back(q, u);
      add_pair(p, q, tension / len * (I - u * u.transpose()));
    }
    for (const auto& [a, ga] : g)
      for (const auto& [b, gb] : g) add_block(a, b, kt * ga * gb.transpose());
  }
  return K;
}

std::pair<double, double> stiffness_bounds(const DynamicsModel& dyn, const std::vector<Vec3>& positions,
                                           const ActuationCommand& command) {
  const Eigen::MatrixXd K = tangent_stiffness(dyn, positions, command);
  if (K.rows() == 0) return {0.0, 0.0};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (K + K.transpose()), Eigen::EigenvaluesOnly);
  return {es.eigenvalues()(0), es.eigenvalues()(K.rows() - 1)};
}

struct Integrator::Impl {
  DynamicsModel dyn;
  RelaxParams params;
  ActuationCommand command;
  Network net;
  double scale = 1.0;
  double dt = 0.0;
  double damping = 0.0;
  double res_tol = 0.0;
  double blowup = 0.0;
  std::vector<Vec3> x, v, f;
  long steps = 0;
  long last_stable = 0;
  bool converged = false;

  void configure() {
    scale = dyn.materials.stiffness.resolve(command.stiffness);
    if (!(scale > 0.0)) throw ParameterError("prestress_scale", "prestress scale must be positive");
    net = compile(dyn, command, scale);
    const double mass = dyn.materials.node_mass;
    const auto N = static_cast<std::size_t>(net.nodes);
    // Stability bound from the stiffest node (Gershgorin on the stiffness matrix).
    std::vector<double> node_k(N, 0.0);
    double k_cable_min = std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < net.ia.size(); ++e) {
      node_k[static_cast<std::size_t>(net.ia[e])] += scale * net.k[e];
      node_k[static_cast<std::size_t>(net.ib[e])] += scale * net.k[e];
      if (net.cable[e]) k_cable_min = std::min(k_cable_min, scale * net.k[e]);
    }
    if (!std::isfinite(k_cable_min)) k_cable_min = 1.0;
    for (std::size_t t = 0; t < 3; ++t)
      for (int i : net.route[t])
        if (net.tendon_rest[t] > 0.0)
          node_k[static_cast<std::size_t>(i)] += 2.0 * net.tendon_ea / net.tendon_rest[t];
    const double k_max = *std::max_element(node_k.begin(), node_k.end());
    dt = params.dt > 0.0 ? params.dt : 0.5 * std::sqrt(mass / k_max);
    if (params.damping > 0.0) {
      damping = params.damping;
    } else {
      // Critical for the softest mode; a floor keeps mechanisms (zero or
      // negative stiffness) from switching damping off.
      const auto [lo, hi] = stiffness_bounds(dyn, x, command);
      const double k_soft = std::max(lo, 1e-6 * std::max(hi, k_cable_min));
      damping = 2.0 * std::sqrt(mass * k_soft);
    }
    if (dt * damping / mass >= 1.0) throw ParameterError("damping", "damping too large for the time step (dt*c/m >= 1)");
  }

  bool check() {
    const double res = max_free_norm(net, f);
    const double vel = max_free_norm(net, v);
    double far = 0.0;
    for (const auto& p : x) far = std::max(far, p.norm());
    if (!std::isfinite(res) || !std::isfinite(vel) || !std::isfinite(far) || far > blowup) {
      std::ostringstream os;
      os << "integration diverged after step " << last_stable << " (dt = " << dt << "); retry with a smaller dt";
      throw IntegrationError(os.str(), last_stable);
    }
    last_stable = steps;
    converged = res < res_tol && vel * damping < res_tol;
    return converged;
  }
};

Integrator::Integrator(DynamicsModel dyn, const EquilibriumState& start, const ActuationCommand& command,
                       const RelaxParams& params)
    : impl_(std::make_unique<Impl>()) {
  if (params.dt < 0.0 || !std::isfinite(params.dt)) throw ParameterError("dt", "time step must be positive");
  if (params.damping < 0.0) throw ParameterError("damping", "damping must be non-negative");
  if (!(params.tol > 0.0)) throw ParameterError("tol", "tolerance must be positive");
  if (start.positions.size() != dyn.model.nodes.size())
    throw ParameterError("state", "state does not match the model's node count");
  if (!(dyn.materials.node_mass > 0.0)) throw ParameterError("node_mass", "node mass must be positive");
  check_degradation(dyn.degradation);
  auto& s = *impl_;
  s.dyn = std::move(dyn);
  s.params = params;
  s.command = command;
  s.x = start.positions;
  s.configure();
  double force_scale = 0.0;
  for (double f : start.member_forces) force_scale = std::max(force_scale, std::abs(f) / start.prestress_scale);
  if (!(force_scale > 0.0)) force_scale = 1.0;
  s.res_tol = params.tol * force_scale;
  double extent = 0.0;
  for (const auto& p : s.x) extent = std::max(extent, p.norm());
  s.blowup = 1e4 * std::max(extent, 1.0);
  s.v.assign(s.x.size(), Vec3::Zero());
  s.f.assign(s.x.size(), Vec3::Zero());
}

Integrator::~Integrator() = default;
Integrator::Integrator(Integrator&&) noexcept = default;
Integrator& Integrator::operator=(Integrator&&) noexcept = default;

void Integrator::set_command(const ActuationCommand& command) {
  if (command == impl_->command) return;
  const ActuationCommand previous = impl_->command;
  impl_->command = command;
  try {
    impl_->configure();
  } catch (...) {
    impl_->command = previous;
    impl_->configure();
    throw;
  }
  impl_->converged = false;
}

const ActuationCommand& Integrator::command() const { return impl_->command; }

bool Integrator::advance(long steps, bool stop_when_converged) {
  auto& s = *impl_;
  const double mass = s.dyn.materials.node_mass;
  const double a = s.dt / mass;
  for (long k = 0; k < steps; ++k) {
    evaluate(s.net, s.x, s.f, nullptr, nullptr);
    if (s.steps % 10 == 0 && s.check() && stop_when_converged) return true;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (s.net.fixed[i]) continue;
      s.v[i] += a * (s.f[i] - s.damping * s.v[i]);
      s.x[i] += s.dt * s.v[i];
    }
    ++s.steps;
  }
  evaluate(s.net, s.x, s.f, nullptr, nullptr);
  return s.check();
}

EquilibriumState Integrator::state() const {
  const auto& s = *impl_;
  EquilibriumState st;
  st.positions = s.x;
  st.member_forces.assign(s.net.ia.size(), 0.0);
  std::vector<Vec3> g(s.x.size());
  evaluate(s.net, s.x, g, &st.member_forces, nullptr);
  st.prestress_scale = s.scale;
  st.residual = max_free_norm(s.net, g);
  return st;
}

const std::vector<Vec3>& Integrator::positions() const { return impl_->x; }
const DynamicsModel& Integrator::model() const { return impl_->dyn; }
long Integrator::steps_taken() const { return impl_->steps; }
bool Integrator::converged() const { return impl_->converged; }
double Integrator::dt() const { return impl_->dt; }
double Integrator::damping() const { return impl_->damping; }

RelaxResult relax_dynamics(const DynamicsModel& dyn, const EquilibriumState& start, const ActuationCommand& command,
                           const RelaxParams& params) {
  Integrator integ(dyn, start, command, params);
  RelaxResult result;
  result.trajectory.push_back(start);
  const long chunk = params.record_every > 0 ? params.record_every : params.max_steps;
  while (integ.steps_taken() < params.max_steps) {
    const long todo = std::min(chunk, params.max_steps - integ.steps_taken());
    if (integ.advance(todo)) break;
    if (params.record_every > 0 && integ.steps_taken() < params.max_steps) result.trajectory.push_back(integ.state());
  }
  result.converged = integ.converged();
  result.steps = integ.steps_taken();
  result.trajectory.push_back(integ.state());
  return result;
}

Vec3 tip_position(const StructureModel& model, const std::vector<Vec3>& positions) {
  Vec3 sum = Vec3::Zero();
  int count = 0;
  for (int i = 0; i < model.node_count(); ++i)
    if (level(model.nodes[static_cast<std::size_t>(i)]) == model.params.m - 1) {
      sum += positions[static_cast<std::size_t>(i)];
      ++count;
    }
  return count ? Vec3(sum / count) : Vec3(Vec3::Zero());
}

Vec3 tip_normal(const StructureModel& model, const std::vector<Vec3>& positions) {
  // Top ring in angular order around its centroid, then Newell's method.
  std::vector<Vec3> ring;
  for (int i = 0; i < model.node_count(); ++i)
    if (level(model.nodes[static_cast<std::size_t>(i)]) == model.params.m - 1)
      ring.push_back(positions[static_cast<std::size_t>(i)]);
  if (ring.size() < 3) return Vec3::UnitZ();
  Vec3 c = Vec3::Zero();
  for (const auto& p : ring) c += p;
  c /= static_cast<double>(ring.size());
  Vec3 n = Vec3::Zero();
  for (std::size_t k = 0; k < ring.size(); ++k) n += (ring[k] - c).cross(ring[(k + 1) % ring.size()] - c);
  if (n.norm() == 0.0) return Vec3::UnitZ();
  n.normalize();
  return n.z() < 0.0 ? Vec3(-n) : n;
}

}  // namespace tspine
