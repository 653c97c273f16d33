#pragma once

#include <compare>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace tspine {

using Vec3 = Eigen::Vector3d;

enum class Family { A, B };

/// Vertex label A_{i-j} / B_{i-j}. `layer` is the j of the label: an A node
/// sits on level j, a B node on level j + 1 (see `level()`).
struct NodeId {
  Family family = Family::A;
  int index = 0;
  int layer = 0;

  auto operator<=>(const NodeId&) const = default;
  bool operator==(const NodeId&) const = default;
};

/// Physical ring (height ordinal) the node sits on.
inline int level(const NodeId& id) { return id.layer + (id.family == Family::B ? 1 : 0); }

/// "A0-1" style label; parsed back by `parse_node_label`.
std::string node_label(const NodeId& id);
std::optional<NodeId> parse_node_label(const std::string& label);

enum class MemberKind { Horizontal, Saddle, Vertical, Diagonal, Strut };

inline bool is_cable(MemberKind kind) { return kind != MemberKind::Strut; }
std::string to_string(MemberKind kind);
std::optional<MemberKind> parse_member_kind(const std::string& name);

struct Member {
  MemberKind kind = MemberKind::Horizontal;
  NodeId a;
  NodeId b;
  /// Unstressed length; zero until form-finding assigns it.
  double rest_length = 0.0;

  bool operator==(const Member&) const = default;
};

struct TopologyParams {
  int n = 3;
  int m = 6;
  double unit_height = 40.0;
  double base_radius = 50.0;
  double twist = std::numbers::pi / 3.0;

  bool operator==(const TopologyParams&) const = default;

  /// Default parameters for polygon order `n`, with the seed twist set to pi/n.
  static TopologyParams with_order(int n, int m, double unit_height = 40.0, double base_radius = 50.0);
};

/// Throws ParameterError (distinct code per rule) when `params` is invalid.
void check_params(const TopologyParams& params);

struct MemberCounts {
  int horizontal = 0;
  int saddle = 0;
  int vertical = 0;
  int diagonal = 0;
  int strut = 0;

  bool operator==(const MemberCounts&) const = default;
};

/// Cable counts from the layer formulas; strut count is n per inter-level gap.
MemberCounts expected_counts(int n, int m);

class StructureModel {
 public:
  TopologyParams params;
  std::vector<NodeId> nodes;  ///< canonical order: (level, family, index)
  std::vector<Vec3> seed;     ///< aligned with `nodes`
  std::vector<Member> members;

  /// Index of `id` in `nodes`, or -1.
  int index_of(const NodeId& id) const;
  int node_count() const { return static_cast<int>(nodes.size()); }
  int member_count() const { return static_cast<int>(members.size()); }
  MemberCounts counts() const;

  /// Node ids on the bottom (level 0) and top (level m-1) rings.
  std::vector<NodeId> base_ring() const;
  std::vector<NodeId> top_ring() const;

  /// Rebuilds the lookup table after `nodes` is edited by hand.
  void reindex();

  bool operator==(const StructureModel& other) const {
    return params == other.params && nodes == other.nodes && seed == other.seed && members == other.members;
  }

 private:
  std::vector<int> lookup_;  // (family, layer, index) -> position
};

StructureModel generate_topology(const TopologyParams& params);

/// Sorts members by (kind, lower level, endpoints).
void canonicalize(StructureModel& model);

struct ValidationIssue {
  std::string code;  ///< "count", "duplicate_edge", "self_loop", "dangling", "disconnected", "low_degree", "params"
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
  bool has(const std::string& code) const;
};

ValidationReport validate_topology(const StructureModel& model);

}  // namespace tspine
