#include "mscg/scenario_tree.hpp"

#include <algorithm>
#include <cmath>

namespace mscg {

const NodeRecord& ScenarioTree::node(NodeId n) const {
  if (n < 0 || n >= node_count()) throw Error("unknown node: " + std::to_string(n));
  return nodes_[static_cast<std::size_t>(n)];
}

NodeRecord& ScenarioTree::node(NodeId n) {
  if (n < 0 || n >= node_count()) throw Error("unknown node: " + std::to_string(n));
  return nodes_[static_cast<std::size_t>(n)];
}

std::span<const NodeId> ScenarioTree::stage_nodes(int stage) const {
  if (stage < 1 || stage > stage_count()) throw Error("unknown stage: " + std::to_string(stage));
  return by_stage_[static_cast<std::size_t>(stage - 1)];
}

std::span<const NodeId> ScenarioTree::children(NodeId n) const {
  node(n);  // bounds check
  return children_[static_cast<std::size_t>(n)];
}

ScenarioTree build_tree(const std::vector<int>& branching,
                        const std::vector<std::vector<double>>* conditional_probs) {
  if (branching.empty()) throw Error("empty branching vector");
  if (branching[0] != 1) throw Error("non-unit root: branching[0] must be 1");
  for (int r : branching)
    if (r < 1) throw Error("non-positive branching factor");

  const int stages = static_cast<int>(branching.size());
  if (conditional_probs) {
    if (static_cast<int>(conditional_probs->size()) != stages - 1)
      throw Error("probability mismatch: need one vector per stage >= 2");
    for (int s = 2; s <= stages; ++s) {
      const auto& p = (*conditional_probs)[static_cast<std::size_t>(s - 2)];
      if (static_cast<int>(p.size()) != branching[static_cast<std::size_t>(s - 1)])
        throw Error("probability mismatch: vector length != branching factor");
      double sum = 0.0;
      for (double v : p) {
        if (v <= 0.0) throw Error("probability mismatch: non-positive branch probability");
        sum += v;
      }
      if (std::abs(sum - 1.0) > 1e-12)
        throw Error("probability mismatch: conditional probabilities must sum to 1");
    }
  }

  ScenarioTree tree;
  tree.branching_ = branching;
  tree.nodes_.push_back(NodeRecord{0, 1, std::nullopt, 1.0, {}});
  tree.by_stage_.assign(static_cast<std::size_t>(stages), {});
  tree.by_stage_[0] = {0};

  for (int s = 2; s <= stages; ++s) {
    const int r = branching[static_cast<std::size_t>(s - 1)];
    for (NodeId parent : tree.by_stage_[static_cast<std::size_t>(s - 2)]) {
      for (int k = 0; k < r; ++k) {
        const double cond =
            conditional_probs
                ? (*conditional_probs)[static_cast<std::size_t>(s - 2)][static_cast<std::size_t>(k)]
                : 1.0 / static_cast<double>(r);
        const NodeId id = static_cast<NodeId>(tree.nodes_.size());
        tree.nodes_.push_back(NodeRecord{
            id, s, parent, tree.nodes_[static_cast<std::size_t>(parent)].probability * cond, {}});
        tree.by_stage_[static_cast<std::size_t>(s - 1)].push_back(id);
      }
    }
  }

  tree.children_.assign(tree.nodes_.size(), {});
  for (const auto& n : tree.nodes_)
    if (n.parent) tree.children_[static_cast<std::size_t>(*n.parent)].push_back(n.id);
  return tree;
}

std::vector<NodeId> siblings(const ScenarioTree& tree, NodeId n) {
  const NodeRecord& rec = tree.node(n);
  if (!rec.parent) return {};
  std::vector<NodeId> out;
  for (NodeId c : tree.children(*rec.parent))
    if (c != n) out.push_back(c);
  return out;
}

std::vector<NodeId> path_to_parent(const ScenarioTree& tree, NodeId n) {
  const NodeRecord& rec = tree.node(n);
  if (!rec.parent) throw Error("root has no path to parent");
  std::vector<NodeId> path;
  NodeId cur = *rec.parent;
  for (;;) {
    path.push_back(cur);
    const auto& p = tree.node(cur).parent;
    if (!p) break;
    cur = *p;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

int sharing_capacity(const ScenarioTree& tree) {
  int total = 0;
  for (NodeId n = 0; n < tree.node_count(); ++n)
    total += static_cast<int>(siblings(tree, n).size());
  return total;
}

}  // namespace mscg
