#pragma once

#include "tspine/force_density.hpp"

namespace tspine {

struct PrestressOptions {
  double cable_q = 0.05;  ///< reference cable force density; strut densities start at -cable_q
  double min_ratio = 0.3;  ///< lower bound on |q| / cable_q for every group
  double max_ratio = 20.0;
  double regularization = 1e-2;  ///< pull toward the seed shape and uniform densities
  int max_iter = 500;
};

struct PrestressResult {
  ForceDensitySet q;
  std::vector<Vec3> positions;
  double residual = 0.0;  ///< max free-node imbalance, base ring excluded
  int iterations = 0;
};

/// Searches for a self-stressed shape standing on its base ring: positions
/// and force densities such that every node except the base ring is in
/// equilibrium, cables in tension and struts in compression. Exploits the
/// n-fold rotational symmetry: one (radius, height, angle) per node orbit and
/// one force density per (kind, level) member group. The top ring keeps the
/// seed height. Throws DivergenceError when no admissible state is found.
PrestressResult find_prestress(const StructureModel& model, const PrestressOptions& options = {});

}  // namespace tspine
