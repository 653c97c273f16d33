#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "tspine/analysis.hpp"

namespace tspine {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

struct TrajectoryRow {
  double t = 0.0;
  Vec3 tip = Vec3::Zero();
  Triple delta_l{};
  Triple theta{};   ///< motor angles
  Triple strain{};
  std::string stiffness = "high";
  double residual = 0.0;
};

TrajectoryRow trajectory_row(const Robot& robot, double t, const ActuationCommand& command,
                             const EquilibriumState& state);

/// Header: t,tip_x,tip_y,tip_z,dL1,dL2,dL3,theta1,theta2,theta3,eps1,eps2,eps3,stiffness,residual
void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRow>& rows);
std::vector<TrajectoryRow> read_trajectory_csv(std::istream& in);

/// Header: stiffness,D,R,theta_max,samples,converged,valid
void write_metrics_csv(std::ostream& out, const std::vector<WorkspaceMetrics>& metrics);

/// Header: alpha,beta,dL1,dL2,dL3,eps1,eps2,eps3,tip_x,tip_y,tip_z,converged
void write_strain_map_csv(std::ostream& out, const std::vector<ConfigurationSample>& samples);

/// Line elements, one `o` group each for cables and struts.
void write_obj(std::ostream& out, const StructureModel& model, const std::vector<Vec3>& positions);

}  // namespace tspine
