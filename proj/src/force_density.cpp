#include "tspine/force_density.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include <Eigen/Dense>

#include "tspine/error.hpp"

namespace tspine {

ForceDensitySet ForceDensitySet::uniform(const StructureModel& model, double cable_q, double strut_q) {
  ForceDensitySet out;
  out.q.reserve(model.members.size());
  for (const auto& mem : model.members) out.q.push_back(is_cable(mem.kind) ? cable_q : strut_q);
  return out;
}

void check_force_densities(const StructureModel& model, const ForceDensitySet& q) {
  if (q.q.size() != model.members.size())
    throw ParameterError("force_density_size", "force density set has " + std::to_string(q.q.size()) +
                                                   " entries for " + std::to_string(model.members.size()) + " members");
  for (std::size_t e = 0; e < q.q.size(); ++e) {
    const auto& mem = model.members[e];
    const double v = q.q[e];
    const bool ok = std::isfinite(v) && (is_cable(mem.kind) ? v > 0.0 : v < 0.0);
    if (!ok)
      throw ParameterError("force_density_sign", to_string(mem.kind) + " " + node_label(mem.a) + "--" +
                                                     node_label(mem.b) + " has force density " + std::to_string(v));
  }
}

AnchorSet AnchorSet::at_seed(const StructureModel& model, const std::vector<NodeId>& ids) {
  return at(model, ids, model.seed);
}

AnchorSet AnchorSet::at(const StructureModel& model, const std::vector<NodeId>& ids,
                        const std::vector<Vec3>& all_positions) {
  AnchorSet out;
  for (const auto& id : ids) {
    const int i = model.index_of(id);
    if (i < 0 || static_cast<std::size_t>(i) >= all_positions.size())
      throw ParameterError("anchor_missing", "anchor " + node_label(id) + " is not a model node");
    out.fixed.push_back(id);
    out.positions.push_back(all_positions[static_cast<std::size_t>(i)]);
  }
  return out;
}

void check_anchors(const StructureModel& model, const AnchorSet& anchors, bool require_plane) {
  if (anchors.fixed.empty()) throw ParameterError("anchors_empty", "anchor set is empty");
  if (anchors.fixed.size() != anchors.positions.size())
    throw ParameterError("anchors_size", "anchor ids and positions differ in length");
  std::set<NodeId> seen;
  for (const auto& id : anchors.fixed) {
    if (model.index_of(id) < 0) throw ParameterError("anchor_missing", "anchor " + node_label(id) + " is not a model node");
    if (!seen.insert(id).second) throw ParameterError("anchor_duplicate", "anchor " + node_label(id) + " listed twice");
  }
  if (!require_plane) return;
  // Non-degenerate: some triple spans a plane.
  const auto& p = anchors.positions;
  double scale = 0.0;
  for (const auto& x : p) scale = std::max(scale, (x - p.front()).norm());
  bool planar = false;
  for (std::size_t i = 1; i < p.size() && !planar; ++i)
    for (std::size_t j = i + 1; j < p.size() && !planar; ++j)
      planar = (p[i] - p[0]).cross(p[j] - p[0]).norm() > 1e-9 * scale * scale;
  if (!planar) throw ParameterError("anchors_degenerate", "anchors do not span a plane");
}

std::vector<double> member_lengths(const StructureModel& model, const std::vector<Vec3>& positions) {
  std::vector<double> out;
  out.reserve(model.members.size());
  for (const auto& mem : model.members)
    out.push_back((positions[static_cast<std::size_t>(model.index_of(mem.b))] -
                   positions[static_cast<std::size_t>(model.index_of(mem.a))])
                      .norm());
  return out;
}

std::vector<Vec3> node_imbalance(const StructureModel& model, const ForceDensitySet& q,
                                 const std::vector<Vec3>& positions, const NodeLoads& loads) {
  std::vector<Vec3> f(positions.size(), Vec3::Zero());
  for (std::size_t e = 0; e < model.members.size(); ++e) {
    const auto ia = static_cast<std::size_t>(model.index_of(model.members[e].a));
    const auto ib = static_cast<std::size_t>(model.index_of(model.members[e].b));
    const Vec3 pull = q.q[e] * (positions[ib] - positions[ia]);
    f[ia] += pull;
    f[ib] -= pull;
  }
  for (const auto& [id, load] : loads) {
    const int i = model.index_of(id);
    if (i >= 0) f[static_cast<std::size_t>(i)] += load;
  }
  return f;
}

ForceDensitySet force_densities_of(const StructureModel& model, const EquilibriumState& state) {
  const auto len = member_lengths(model, state.positions);
  ForceDensitySet out;
  for (std::size_t e = 0; e < len.size(); ++e) out.q.push_back(state.member_forces[e] / len[e]);
  return out;
}

namespace {

std::string join_labels(const std::vector<std::string>& labels) {
  std::string out;
  for (std::size_t i = 0; i < labels.size(); ++i) out += (i ? ", " : "") + labels[i];
  return out;
}

}  // namespace

EquilibriumState solve_force_density(const StructureModel& model, const ForceDensitySet& q, const AnchorSet& anchors,
                                     const NodeLoads& loads) {
  check_force_densities(model, q);
  // The linear system only needs one anchor per connected component; the
  // platform-plane rule is enforced where a physical mount is built.
  check_anchors(model, anchors, false);
  const int N = model.node_count();

  std::vector<int> anchor_of(static_cast<std::size_t>(N), -1);
  for (std::size_t k = 0; k < anchors.fixed.size(); ++k)
    anchor_of[static_cast<std::size_t>(model.index_of(anchors.fixed[k]))] = static_cast<int>(k);

  std::vector<int> free_slot(static_cast<std::size_t>(N), -1);
  std::vector<int> free_nodes;
  for (int i = 0; i < N; ++i)
    if (anchor_of[static_cast<std::size_t>(i)] < 0) {
      free_slot[static_cast<std::size_t>(i)] = static_cast<int>(free_nodes.size());
      free_nodes.push_back(i);
    }

  // Free nodes with no path to an anchor make the system singular; name them.
  {
    std::vector<int> parent(static_cast<std::size_t>(N));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
      while (parent[static_cast<std::size_t>(x)] != x) x = parent[static_cast<std::size_t>(x)];
      return x;
    };
    for (std::size_t e = 0; e < model.members.size(); ++e) {
      if (q.q[e] == 0.0) continue;
      parent[static_cast<std::size_t>(find(model.index_of(model.members[e].a)))] = find(model.index_of(model.members[e].b));
    }
    std::set<int> anchored_roots;
    for (const auto& id : anchors.fixed) anchored_roots.insert(find(model.index_of(id)));
    std::vector<std::string> floating;
    for (int i : free_nodes)
      if (!anchored_roots.count(find(i))) floating.push_back(node_label(model.nodes[static_cast<std::size_t>(i)]));
    if (!floating.empty())
      throw SolvabilityError("equilibrium system is singular: nodes without a load path to an anchor: " +
                                 join_labels(floating),
                             floating);
  }

  const int F = static_cast<int>(free_nodes.size());
  Eigen::MatrixXd Dff = Eigen::MatrixXd::Zero(F, F);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(F, 3);
  for (std::size_t e = 0; e < model.members.size(); ++e) {
    const int ia = model.index_of(model.members[e].a);
    const int ib = model.index_of(model.members[e].b);
    const double qe = q.q[e];
    const int fa = free_slot[static_cast<std::size_t>(ia)];
    const int fb = free_slot[static_cast<std::size_t>(ib)];
    if (fa >= 0) Dff(fa, fa) += qe;
    if (fb >= 0) Dff(fb, fb) += qe;
    if (fa >= 0 && fb >= 0) {
      Dff(fa, fb) -= qe;
      Dff(fb, fa) -= qe;
    } else if (fa >= 0) {
      rhs.row(fa) += qe * anchors.positions[static_cast<std::size_t>(anchor_of[static_cast<std::size_t>(ib)])].transpose();
    } else if (fb >= 0) {
      rhs.row(fb) += qe * anchors.positions[static_cast<std::size_t>(anchor_of[static_cast<std::size_t>(ia)])].transpose();
    }
  }
  for (const auto& [id, load] : loads) {
    const int i = model.index_of(id);
    if (i < 0) throw ParameterError("load_missing", "load on unknown node " + node_label(id));
    const int f = free_slot[static_cast<std::size_t>(i)];
    if (f >= 0) rhs.row(f) += load.transpose();
  }

  std::vector<Vec3> positions(static_cast<std::size_t>(N), Vec3::Zero());
  for (std::size_t k = 0; k < anchors.fixed.size(); ++k)
    positions[static_cast<std::size_t>(model.index_of(anchors.fixed[k]))] = anchors.positions[k];

  if (F > 0) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(Dff);
    const double dscale = Dff.cwiseAbs().maxCoeff();
    lu.setThreshold(1e-12);
    if (lu.rank() < F || !(dscale > 0.0)) {
      // Report the nodes that carry the null direction.
      std::vector<std::string> culprits;
      const Eigen::MatrixXd ker = lu.kernel();
      if (ker.cols() > 0) {
        const Eigen::VectorXd v = ker.col(0).cwiseAbs();
        const double vmax = v.maxCoeff();
        for (int f = 0; f < F; ++f)
          if (v(f) > 0.5 * vmax) culprits.push_back(node_label(model.nodes[static_cast<std::size_t>(free_nodes[static_cast<std::size_t>(f)])]));
      }
      throw SolvabilityError("equilibrium system is singular (rank " + std::to_string(lu.rank()) + " of " +
                                 std::to_string(F) + "); null direction concentrated at: " + join_labels(culprits),
                             culprits);
    }
    Eigen::MatrixXd X = lu.solve(rhs);
    // Two rounds of iterative refinement keep the residual at round-off level
    // on poorly conditioned stacks.
    for (int r = 0; r < 2; ++r) X += lu.solve(rhs - Dff * X);
    for (int f = 0; f < F; ++f) positions[static_cast<std::size_t>(free_nodes[static_cast<std::size_t>(f)])] = X.row(f).transpose();
  }

  EquilibriumState state;
  state.positions = std::move(positions);
  const auto len = member_lengths(model, state.positions);
  for (std::size_t e = 0; e < len.size(); ++e) state.member_forces.push_back(q.q[e] * len[e]);
  const auto imb = node_imbalance(model, q, state.positions, loads);
  double res = 0.0;
  for (int i : free_nodes) res = std::max(res, imb[static_cast<std::size_t>(i)].norm());
  state.residual = res;
  return state;
}

AdaptResult adapt_force_densities(const StructureModel& model, const ForceDensitySet& q0, const AnchorSet& anchors,
                                  const TargetMap& targets, const AdaptOptions& options, const NodeLoads& loads) {
  if (!(options.tol > 0.0)) throw ParameterError("tol", "adapt tolerance must be positive");
  if (options.max_iter < 0) throw ParameterError("max_iter", "max_iter must be non-negative");
  if (!(options.max_step_ratio > 1.0)) throw ParameterError("max_step_ratio", "max_step_ratio must exceed 1");
  check_force_densities(model, q0);

  for (const auto& [e, t] : targets) {
    if (e < 0 || e >= model.member_count())
      throw ParameterError("target_member", "target references member " + std::to_string(e) + " which does not exist");
    const auto& mem = model.members[static_cast<std::size_t>(e)];
    const bool feasible = t.kind == Target::Kind::Length
                              ? (std::isfinite(t.value) && t.value > 0.0)
                              : (std::isfinite(t.value) && (is_cable(mem.kind) ? t.value > 0.0 : t.value < 0.0));
    if (!feasible) {
      std::ostringstream os;
      os << "infeasible target " << t.value << " for " << to_string(mem.kind) << " " << node_label(mem.a) << "--"
         << node_label(mem.b);
      throw DivergenceError(os.str(), {});
    }
  }

  AdaptResult result;
  result.q = q0;
  auto evaluate = [&](const EquilibriumState& st) {
    const auto len = member_lengths(model, st.positions);
    double worst = 0.0;
    for (const auto& [e, t] : targets) {
      const auto ue = static_cast<std::size_t>(e);
      const double achieved = t.kind == Target::Kind::Length ? len[ue] : st.member_forces[ue];
      worst = std::max(worst, std::abs(achieved - t.value) / std::abs(t.value));
    }
    return worst;
  };

  auto solve = [&](const ForceDensitySet& q) {
    try {
      return solve_force_density(model, q, anchors, loads);
    } catch (const SolvabilityError& e) {
      throw DivergenceError(std::string("adaptive iteration lost solvability: ") + e.what(), result.trace);
    }
  };

  result.state = solve(result.q);
  double err = evaluate(result.state);
  result.trace.push_back(err);
  int worsening = 0;
  while (err >= options.tol && result.iterations < options.max_iter) {
    const auto len = member_lengths(model, result.state.positions);
    ForceDensitySet next = result.q;
    for (const auto& [e, t] : targets) {
      const auto ue = static_cast<std::size_t>(e);
      double ratio = 1.0;
      if (t.kind == Target::Kind::Length) {
        ratio = len[ue] / t.value;
        if (!is_cable(model.members[ue].kind)) ratio = 1.0 / ratio;
      } else {
        ratio = t.value / result.state.member_forces[ue];
      }
      if (!std::isfinite(ratio) || ratio <= 0.0)
        throw DivergenceError("force density update left the admissible sign range", result.trace);
      ratio = std::clamp(ratio, 1.0 / options.max_step_ratio, options.max_step_ratio);
      next.q[ue] *= ratio;
      const double rel = std::abs(next.q[ue] / q0.q[ue]);
      if (!std::isfinite(next.q[ue]) || rel > 1e12 || rel < 1e-12)
        throw DivergenceError("force densities diverged while chasing targets", result.trace);
    }
    result.q = std::move(next);
    result.state = solve(result.q);
    ++result.iterations;
    const double prev = err;
    err = evaluate(result.state);
    result.trace.push_back(err);
    worsening = err > prev ? worsening + 1 : 0;
    if (worsening >= 25 || !std::isfinite(err))
      throw DivergenceError("target error grew for 25 consecutive iterations", result.trace);
  }
  result.converged = err < options.tol;
  return result;
}

}  // namespace tspine
