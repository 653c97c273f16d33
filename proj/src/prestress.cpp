#include "tspine/prestress.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include <Eigen/Dense>

#include "tspine/error.hpp"

namespace tspine {

namespace {

struct Orbit {
  Family family;
  int layer;
};

// Unknowns: [r, h, a] per free orbit (lengths in base radii), then |q| per
// member group (in units of cable_q).
struct Problem {
  const StructureModel* model = nullptr;
  std::vector<Orbit> orbits;        // free orbits; the A layer-0 (base) orbit is fixed
  std::vector<int> orbit_of_node;   // -1 for base nodes
  std::vector<int> group_of_member;
  std::vector<double> group_sign;
  int rep_count = 0;
  int top_orbit = -1;
  double top_height = 0.0;
  double radius = 1.0;
  Eigen::VectorXd p0, lo, hi;

  int n() const { return model->params.n; }
  int free_params() const { return 3 * static_cast<int>(orbits.size()); }
  int size() const { return static_cast<int>(p0.size()); }

  std::vector<Vec3> positions(const Eigen::VectorXd& p) const {
    const auto& nodes = model->nodes;
    std::vector<Vec3> x(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const int o = orbit_of_node[i];
      if (o < 0) {
        x[i] = model->seed[i] / radius;
        continue;
      }
      const double r = p(3 * o), h = p(3 * o + 1), a = p(3 * o + 2);
      const double ang = a + 2.0 * std::numbers::pi * nodes[i].index / n();
      x[i] = Vec3(r * std::cos(ang), r * std::sin(ang), h);
    }
    return x;
  }

  std::vector<double> densities(const Eigen::VectorXd& p) const {
    std::vector<double> q(model->members.size());
    for (std::size_t e = 0; e < q.size(); ++e) {
      const int g = group_of_member[e];
      q[e] = group_sign[static_cast<std::size_t>(g)] * p(free_params() + g);
    }
    return q;
  }

  // Imbalance of every free orbit's index-0 node, plus the top height.
  Eigen::VectorXd equilibrium(const Eigen::VectorXd& p) const {
    const auto x = positions(p);
    const auto q = densities(p);
    std::vector<Vec3> f(x.size(), Vec3::Zero());
    for (std::size_t e = 0; e < q.size(); ++e) {
      const auto ia = static_cast<std::size_t>(model->index_of(model->members[e].a));
      const auto ib = static_cast<std::size_t>(model->index_of(model->members[e].b));
      const Vec3 pull = q[e] * (x[ib] - x[ia]);
      f[ia] += pull;
      f[ib] -= pull;
    }
    Eigen::VectorXd r(3 * orbits.size() + 1);
    for (std::size_t o = 0; o < orbits.size(); ++o) {
      const int i = model->index_of(NodeId{orbits[o].family, 0, orbits[o].layer});
      r.segment<3>(static_cast<Eigen::Index>(3 * o)) = f[static_cast<std::size_t>(i)];
    }
    r(r.size() - 1) = p(3 * top_orbit + 1) - top_height;
    return r;
  }

  Eigen::MatrixXd jacobian(const Eigen::VectorXd& p, const Eigen::VectorXd& r0) const {
    Eigen::MatrixXd J(r0.size(), p.size());
    for (Eigen::Index j = 0; j < p.size(); ++j) {
      const double h = 1e-7 * std::max(1.0, std::abs(p(j)));
      Eigen::VectorXd pp = p;
      pp(j) += h;
      Eigen::VectorXd pm = p;
      pm(j) -= h;
      J.col(j) = (equilibrium(pp) - equilibrium(pm)) / (2.0 * h);
    }
    return J;
  }

  Eigen::VectorXd clamp(Eigen::VectorXd p) const { return p.cwiseMax(lo).cwiseMin(hi); }
};

}  // namespace

PrestressResult find_prestress(const StructureModel& model, const PrestressOptions& options) {
  check_params(model.params);
  if (!(options.cable_q > 0.0)) throw ParameterError("cable_q", "reference force density must be positive");
  if (!(options.min_ratio > 0.0 && options.max_ratio > options.min_ratio))
    throw ParameterError("q_bounds", "force density bounds must satisfy 0 < min < max");

  Problem pb;
  pb.model = &model;
  pb.radius = model.params.base_radius;
  const int m = model.params.m;
  for (int j = 0; j < m - 1; ++j) {
    if (j > 0) pb.orbits.push_back({Family::A, j});
  }
  for (int j = 0; j < m - 1; ++j) pb.orbits.push_back({Family::B, j});
  pb.top_orbit = static_cast<int>(pb.orbits.size()) - 1;  // B, layer m-2: the top ring
  pb.orbit_of_node.assign(model.nodes.size(), -1);
  for (std::size_t i = 0; i < model.nodes.size(); ++i)
    for (std::size_t o = 0; o < pb.orbits.size(); ++o)
      if (model.nodes[i].family == pb.orbits[o].family && model.nodes[i].layer == pb.orbits[o].layer)
        pb.orbit_of_node[i] = static_cast<int>(o);

  std::map<std::pair<int, int>, int> group_ids;
  for (const auto& mem : model.members) {
    const auto key = std::make_pair(static_cast<int>(mem.kind), std::min(level(mem.a), level(mem.b)));
    auto [it, inserted] = group_ids.emplace(key, static_cast<int>(group_ids.size()));
    if (inserted) pb.group_sign.push_back(is_cable(mem.kind) ? 1.0 : -1.0);
    pb.group_of_member.push_back(it->second);
  }

  const int nf = pb.free_params();
  const int ng = static_cast<int>(pb.group_sign.size());
  pb.p0.resize(nf + ng);
  pb.lo.resize(nf + ng);
  pb.hi.resize(nf + ng);
  const double H = model.params.unit_height / pb.radius;
  for (std::size_t o = 0; o < pb.orbits.size(); ++o) {
    const Vec3 x = model.seed[static_cast<std::size_t>(model.index_of(NodeId{pb.orbits[o].family, 0, pb.orbits[o].layer}))] / pb.radius;
    const auto k = static_cast<Eigen::Index>(3 * o);
    pb.p0.segment<3>(k) << std::hypot(x.x(), x.y()), x.z(), std::atan2(x.y(), x.x());
    pb.lo.segment<3>(k) << 0.2, -10.0 * H, -20.0;
    pb.hi.segment<3>(k) << 5.0, 10.0 * H * m, 20.0;
  }
  for (int g = 0; g < ng; ++g) {
    pb.p0(nf + g) = 1.0;
    pb.lo(nf + g) = options.min_ratio;
    pb.hi(nf + g) = options.max_ratio;
  }
  pb.top_height = model.seed[static_cast<std::size_t>(model.index_of(NodeId{Family::B, 0, m - 2}))].z() / pb.radius;

  // Stage 1: bounded Levenberg-Marquardt on [equilibrium; reg (p - p0)].
  const double reg = options.regularization;
  auto residual = [&](const Eigen::VectorXd& p) {
    const Eigen::VectorXd eq = pb.equilibrium(p);
    Eigen::VectorXd r(eq.size() + p.size());
    r << eq, reg * (p - pb.p0);
    return r;
  };
  Eigen::VectorXd p = pb.p0;
  Eigen::VectorXd r = residual(p);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  int it = 0;
  for (; it < options.max_iter; ++it) {
    const Eigen::VectorXd eq = r.head(r.size() - p.size());
    Eigen::MatrixXd J(r.size(), p.size());
    J << pb.jacobian(p, eq), reg * Eigen::MatrixXd::Identity(p.size(), p.size());
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;
    // Variables resting on a bound that the gradient pushes further out are
    // frozen for this step.
    std::vector<Eigen::Index> active;
    for (Eigen::Index j = 0; j < p.size(); ++j) {
      const bool pinned = (p(j) <= pb.lo(j) && g(j) > 0.0) || (p(j) >= pb.hi(j) && g(j) < 0.0);
      if (!pinned) active.push_back(j);
    }
    const auto na = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd Ha(na, na);
    Eigen::VectorXd ga(na);
    for (Eigen::Index a = 0; a < na; ++a) {
      ga(a) = g(active[static_cast<std::size_t>(a)]);
      for (Eigen::Index b = 0; b < na; ++b) Ha(a, b) = JtJ(active[static_cast<std::size_t>(a)], active[static_cast<std::size_t>(b)]);
    }
    bool accepted = false;
    for (int tries = 0; tries < 30 && !accepted; ++tries) {
      Eigen::MatrixXd A = Ha;
      A.diagonal() += lambda * (Ha.diagonal().array() + 1e-12).matrix();
      const Eigen::VectorXd sa = A.ldlt().solve(-ga);
      Eigen::VectorXd step = Eigen::VectorXd::Zero(p.size());
      for (Eigen::Index a = 0; a < na; ++a) step(active[static_cast<std::size_t>(a)]) = sa(a);
      const Eigen::VectorXd trial = pb.clamp(p + step);
      const Eigen::VectorXd rt = residual(trial);
      const double ct = rt.squaredNorm();
      if (ct < cost) {
        const double gain = cost - ct;
        p = trial;
        r = rt;
        cost = ct;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (gain < 1e-30 + 1e-15 * cost) it = options.max_iter;
      } else {
        lambda *= 4.0;
      }
    }
    if (!accepted) break;
  }

  // Stage 2: drop the regularization and close the equilibrium gap with
  // minimum-norm Gauss-Newton steps (the system is underdetermined).
  Eigen::VectorXd eq = pb.equilibrium(p);
  for (int k = 0; k < 50 && eq.lpNorm<Eigen::Infinity>() > 1e-14; ++k) {
    const Eigen::MatrixXd J = pb.jacobian(p, eq);
    const Eigen::VectorXd step = J.completeOrthogonalDecomposition().solve(-eq);
    const Eigen::VectorXd next = p + step;
    const Eigen::VectorXd eq_next = pb.equilibrium(next);
    if (!(eq_next.norm() < eq.norm())) break;
    p = next;
    eq = eq_next;
  }

  PrestressResult out;
  out.iterations = it;
  const auto q = pb.densities(p);
  for (std::size_t e = 0; e < q.size(); ++e) {
    const bool ok = is_cable(model.members[e].kind) ? q[e] > 0.0 : q[e] < 0.0;
    if (!ok) throw DivergenceError("prestress search left the admissible sign range", {});
  }
  const double res = eq.head(eq.size() - 1).lpNorm<Eigen::Infinity>();
  if (!(res < 1e-9))
    throw DivergenceError("no self-stressed shape found (equilibrium gap " + std::to_string(res) + ")", {});
  out.q.q = q;
  for (auto& v : out.q.q) v *= options.cable_q;
  out.positions = pb.positions(p);
  for (auto& x : out.positions) x *= pb.radius;
  out.residual = res * options.cable_q * pb.radius;
  return out;
}

}  // namespace tspine
