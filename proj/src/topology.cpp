#include "tspine/topology.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include "tspine/error.hpp"

namespace tspine {

std::string node_label(const NodeId& id) {
  std::ostringstream os;
  os << (id.family == Family::A ? 'A' : 'B') << id.index << '-' << id.layer;
  return os.str();
}

std::optional<NodeId> parse_node_label(const std::string& label) {
  if (label.size() < 4 || (label[0] != 'A' && label[0] != 'B')) return std::nullopt;
  const auto dash = label.find('-', 1);
  if (dash == std::string::npos || dash == 1 || dash + 1 >= label.size()) return std::nullopt;
  const auto digits = [](const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
  };
  const std::string idx = label.substr(1, dash - 1);
  const std::string lay = label.substr(dash + 1);
  if (!digits(idx) || !digits(lay) || idx.size() > 6 || lay.size() > 6) return std::nullopt;
  return NodeId{label[0] == 'A' ? Family::A : Family::B, std::stoi(idx), std::stoi(lay)};
}

std::string to_string(MemberKind kind) {
  switch (kind) {
    case MemberKind::Horizontal: return "horizontal";
    case MemberKind::Saddle: return "saddle";
    case MemberKind::Vertical: return "vertical";
    case MemberKind::Diagonal: return "diagonal";
    case MemberKind::Strut: return "strut";
  }
  return "?";
}

std::optional<MemberKind> parse_member_kind(const std::string& name) {
  for (auto k : {MemberKind::Horizontal, MemberKind::Saddle, MemberKind::Vertical, MemberKind::Diagonal,
                 MemberKind::Strut}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

TopologyParams TopologyParams::with_order(int n, int m, double unit_height, double base_radius) {
  TopologyParams p;
  p.n = n;
  p.m = m;
  p.unit_height = unit_height;
  p.base_radius = base_radius;
  p.twist = n > 0 ? std::numbers::pi / n : 0.0;
  return p;
}

void check_params(const TopologyParams& p) {
  if (p.n < 3) throw ParameterError("n_too_small", "polygon order n must be >= 3, got " + std::to_string(p.n));
  if (p.n % 2 == 0) throw ParameterError("even_n", "polygon order n must be odd, got " + std::to_string(p.n));
  if (p.m < 3 || p.m % 3 != 0)
    throw ParameterError("layer_rule", "layer count m must be 3p+3, got " + std::to_string(p.m));
  if (!(p.unit_height > 0.0) || !std::isfinite(p.unit_height))
    throw ParameterError("unit_height", "unit_height must be positive");
  if (!(p.base_radius > 0.0) || !std::isfinite(p.base_radius))
    throw ParameterError("base_radius", "base_radius must be positive");
  if (!std::isfinite(p.twist)) throw ParameterError("twist", "twist must be finite");
}

MemberCounts expected_counts(int n, int m) {
  return MemberCounts{2 * n, 2 * n * (m - 2), n * (m - 1), n * (m - 1), n * (m - 1)};
}

int StructureModel::index_of(const NodeId& id) const {
  const int n = params.n;
  const int layers = params.m - 1;
  if (id.index < 0 || id.index >= n || id.layer < 0 || id.layer >= layers) return -1;
  const std::size_t key = static_cast<std::size_t>(((id.family == Family::A ? 0 : 1) * layers + id.layer) * n + id.index);
  if (lookup_.size() == static_cast<std::size_t>(2 * layers * n)) {
    const int pos = lookup_[key];
    if (pos >= 0 && pos < node_count() && nodes[static_cast<std::size_t>(pos)] == id) return pos;
  }
  const auto it = std::find(nodes.begin(), nodes.end(), id);
  return it == nodes.end() ? -1 : static_cast<int>(it - nodes.begin());
}

void StructureModel::reindex() {
  const int n = params.n;
  const int layers = params.m - 1;
  if (n <= 0 || layers <= 0) {
    lookup_.clear();
    return;
  }
  lookup_.assign(static_cast<std::size_t>(2 * layers * n), -1);
  for (int i = 0; i < node_count(); ++i) {
    const auto& id = nodes[static_cast<std::size_t>(i)];
    if (id.index < 0 || id.index >= n || id.layer < 0 || id.layer >= layers) continue;
    lookup_[static_cast<std::size_t>(((id.family == Family::A ? 0 : 1) * layers + id.layer) * n + id.index)] = i;
  }
}

MemberCounts StructureModel::counts() const {
  MemberCounts c;
  for (const auto& mem : members) {
    switch (mem.kind) {
      case MemberKind::Horizontal: ++c.horizontal; break;
      case MemberKind::Saddle: ++c.saddle; break;
      case MemberKind::Vertical: ++c.vertical; break;
      case MemberKind::Diagonal: ++c.diagonal; break;
      case MemberKind::Strut: ++c.strut; break;
    }
  }
  return c;
}

std::vector<NodeId> StructureModel::base_ring() const {
  std::vector<NodeId> out;
  for (const auto& id : nodes)
    if (level(id) == 0) out.push_back(id);
  return out;
}

std::vector<NodeId> StructureModel::top_ring() const {
  std::vector<NodeId> out;
  for (const auto& id : nodes)
    if (level(id) == params.m - 1) out.push_back(id);
  return out;
}

namespace {

auto node_key(const NodeId& id) { return std::make_tuple(level(id), id.family, id.index); }

auto member_key(const Member& mem) {
  const int lo = std::min(level(mem.a), level(mem.b));
  const auto ka = node_key(mem.a);
  const auto kb = node_key(mem.b);
  return std::make_tuple(mem.kind, lo, std::min(ka, kb), std::max(ka, kb));
}

}  // namespace

void canonicalize(StructureModel& model) {
  std::vector<std::size_t> order(model.nodes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return node_key(model.nodes[l]) < node_key(model.nodes[r]); });
  std::vector<NodeId> nodes;
  std::vector<Vec3> seed;
  for (auto i : order) {
    nodes.push_back(model.nodes[i]);
    if (i < model.seed.size()) seed.push_back(model.seed[i]);
  }
  model.nodes = std::move(nodes);
  model.seed = std::move(seed);
  std::stable_sort(model.members.begin(), model.members.end(),
                   [](const Member& l, const Member& r) { return member_key(l) < member_key(r); });
  model.reindex();
}

StructureModel generate_topology(const TopologyParams& params) {
  check_params(params);
  const int n = params.n;
  const int m = params.m;
  const int top = m - 2;  // label layer of the top ring (B nodes)
  const auto wrap = [n](int i) { return ((i % n) + n) % n; };
  const auto A = [&](int i, int j) { return NodeId{Family::A, wrap(i), j}; };
  const auto B = [&](int i, int j) { return NodeId{Family::B, wrap(i), j}; };

  StructureModel model;
  model.params = params;
  for (int j = 0; j <= top; ++j)
    for (int i = 0; i < n; ++i) {
      model.nodes.push_back(A(i, j));
      model.nodes.push_back(B(i, j));
    }

  // Seed: regular rings, ring k at height k*unit_height rotated by k*twist.
  // B nodes sit half a polygon step from the A nodes so middle rings
  // alternate A, B around the 2n-gon.
  for (const auto& id : model.nodes) {
    const int lv = level(id);
    const double az = 2.0 * std::numbers::pi * id.index / n + lv * params.twist +
                      (id.family == Family::B ? std::numbers::pi / n : 0.0);
    model.seed.emplace_back(params.base_radius * std::cos(az), params.base_radius * std::sin(az),
                            lv * params.unit_height);
  }

  auto add = [&](MemberKind kind, NodeId a, NodeId b) { model.members.push_back(Member{kind, a, b, 0.0}); };

  for (int i = 0; i < n; ++i) {
    add(MemberKind::Horizontal, A(i, 0), A(i + 1, 0));
    add(MemberKind::Horizontal, B(i, top), B(i + 1, top));
  }
  // Middle ring L holds A_{*-L} and B_{*-(L-1)} alternating.
  for (int L = 1; L <= m - 2; ++L)
    for (int i = 0; i < n; ++i) {
      add(MemberKind::Saddle, A(i, L), B(i, L - 1));
      add(MemberKind::Saddle, B(i, L - 1), A(i + 1, L));
    }
  // Gap g joins ring g to ring g + 1.
  for (int g = 0; g <= m - 2; ++g)
    for (int i = 0; i < n; ++i) {
      add(MemberKind::Diagonal, A(i, g), B(i, g));
      add(MemberKind::Strut, A(i, g), B(i + 1, g));
      if (g == 0) {
        add(MemberKind::Vertical, A(i, 0), A(i - 1, 1));
      } else if (g == m - 2) {
        add(MemberKind::Vertical, B(i, g - 1), B(i - 1, g));
      } else {
        add(MemberKind::Vertical, B(i, g - 1), A(i, g + 1));
      }
    }

  canonicalize(model);
  return model;
}

bool ValidationReport::has(const std::string& code) const {
  return std::any_of(issues.begin(), issues.end(), [&](const auto& i) { return i.code == code; });
}

ValidationReport validate_topology(const StructureModel& model) {
  ValidationReport report;
  auto flag = [&](std::string code, std::string msg) { report.issues.push_back({std::move(code), std::move(msg)}); };

  bool params_ok = true;
  try {
    check_params(model.params);
  } catch (const ParameterError& e) {
    params_ok = false;
    flag("params", e.what());
  }

  std::set<NodeId> seen;
  for (const auto& id : model.nodes)
    if (!seen.insert(id).second) flag("duplicate_node", "node " + node_label(id) + " listed twice");

  if (params_ok) {
    const auto want = expected_counts(model.params.n, model.params.m);
    const auto got = model.counts();
    auto check = [&](const char* sym, const char* formula, int g, int w) {
      if (g != w)
        flag("count", std::string(sym) + " = " + std::to_string(g) + " != " + formula + " = " + std::to_string(w));
    };
    check("h", "2n", got.horizontal, want.horizontal);
    check("s", "2n(m-2)", got.saddle, want.saddle);
    check("v", "n(m-1)", got.vertical, want.vertical);
    check("d", "n(m-1)", got.diagonal, want.diagonal);
    check("struts", "n(m-1)", got.strut, want.strut);
  }

  std::map<std::pair<NodeId, NodeId>, int> edges;
  std::vector<int> degree(model.nodes.size(), 0);
  std::vector<int> parent(model.nodes.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) x = parent[static_cast<std::size_t>(x)];
    return x;
  };

  for (const auto& mem : model.members) {
    const std::string name = to_string(mem.kind) + " " + node_label(mem.a) + "--" + node_label(mem.b);
    if (mem.a == mem.b) {
      flag("self_loop", name + " joins a node to itself");
      continue;
    }
    const int ia = model.index_of(mem.a);
    const int ib = model.index_of(mem.b);
    if (ia < 0 || ib < 0) {
      flag("dangling", name + " references a missing node");
      continue;
    }
    const auto key = std::minmax(mem.a, mem.b);
    if (++edges[{key.first, key.second}] == 2) flag("duplicate_edge", name + " duplicates an existing edge");
    ++degree[static_cast<std::size_t>(ia)];
    ++degree[static_cast<std::size_t>(ib)];
    parent[static_cast<std::size_t>(find(ia))] = find(ib);
  }

  if (!model.nodes.empty()) {
    const int root = find(0);
    std::vector<std::string> cut;
    for (int i = 0; i < model.node_count(); ++i)
      if (find(i) != root) cut.push_back(node_label(model.nodes[static_cast<std::size_t>(i)]));
    if (!cut.empty()) {
      std::string list;
      for (std::size_t k = 0; k < cut.size() && k < 8; ++k) list += (k ? ", " : "") + cut[k];
      flag("disconnected", "graph is disconnected; unreachable from " + node_label(model.nodes[0]) + ": " + list);
    }
  }
  for (std::size_t i = 0; i < degree.size(); ++i)
    if (degree[i] < 3)
      flag("low_degree", node_label(model.nodes[i]) + " has degree " + std::to_string(degree[i]) + " < 3");

  return report;
}

}  // namespace tspine
