#pragma once

#include <map>
#include <vector>

#include "tspine/topology.hpp"

namespace tspine {

/// One force density per member, aligned with `StructureModel::members`.
/// Cables carry q > 0, struts q < 0.
struct ForceDensitySet {
  std::vector<double> q;

  bool operator==(const ForceDensitySet&) const = default;

  /// Uniform cable and strut densities. `strut_q` must be negative.
  static ForceDensitySet uniform(const StructureModel& model, double cable_q, double strut_q);
};

/// Throws ParameterError when `q` does not cover every member or breaks the
/// sign convention.
void check_force_densities(const StructureModel& model, const ForceDensitySet& q);

/// Nodes pinned to the platform, with their fixed coordinates.
struct AnchorSet {
  std::vector<NodeId> fixed;
  std::vector<Vec3> positions;  ///< aligned with `fixed`

  static AnchorSet at_seed(const StructureModel& model, const std::vector<NodeId>& ids);
  static AnchorSet at(const StructureModel& model, const std::vector<NodeId>& ids, const std::vector<Vec3>& all_positions);
};

/// Throws ParameterError unless the anchors exist and are distinct and, with
/// `require_plane`, contain three non-collinear points.
void check_anchors(const StructureModel& model, const AnchorSet& anchors, bool require_plane = true);

struct EquilibriumState {
  std::vector<Vec3> positions;        ///< aligned with model nodes
  std::vector<double> member_forces;  ///< signed axial force, tension positive
  double prestress_scale = 1.0;
  double residual = 0.0;  ///< max free-node force imbalance

  bool operator==(const EquilibriumState&) const = default;
};

using NodeLoads = std::map<NodeId, Vec3>;

/// Linear force-density equilibrium: for every free node,
/// sum_j q_ij (x_j - x_i) + p_i = 0.
EquilibriumState solve_force_density(const StructureModel& model, const ForceDensitySet& q, const AnchorSet& anchors,
                                     const NodeLoads& loads = {});

/// Out-of-balance force at every node (anchored nodes included, where it is
/// the reaction the anchor supplies, with sign flipped).
std::vector<Vec3> node_imbalance(const StructureModel& model, const ForceDensitySet& q,
                                 const std::vector<Vec3>& positions, const NodeLoads& loads = {});

/// Member lengths for a set of positions.
std::vector<double> member_lengths(const StructureModel& model, const std::vector<Vec3>& positions);

/// Force densities implied by a state: q = force / length.
ForceDensitySet force_densities_of(const StructureModel& model, const EquilibriumState& state);

struct Target {
  enum class Kind { Length, Force };
  Kind kind = Kind::Length;
  double value = 0.0;

  static Target length(double v) { return {Kind::Length, v}; }
  static Target force(double v) { return {Kind::Force, v}; }
};

/// Member index -> target.
using TargetMap = std::map<int, Target>;

struct AdaptOptions {
  double tol = 1e-8;  ///< max relative target error
  int max_iter = 200;
  double max_step_ratio = 2.0;
};

struct AdaptResult {
  ForceDensitySet q;
  EquilibriumState state;
  bool converged = false;
  int iterations = 0;
  std::vector<double> trace;  ///< max relative target error after each solve
};

/// Fixed-point update of targeted force densities toward target lengths or
/// forces. Lengths: cables scale by achieved/target, struts by the inverse
/// (a stronger strut pushes its ends apart). Forces: q scales by
/// target/achieved. Each step ratio is clamped to [1/max_step_ratio,
/// max_step_ratio].
AdaptResult adapt_force_densities(const StructureModel& model, const ForceDensitySet& q0, const AnchorSet& anchors,
                                  const TargetMap& targets, const AdaptOptions& options = {},
                                  const NodeLoads& loads = {});

}  // namespace tspine
