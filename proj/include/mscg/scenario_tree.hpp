#pragma once

#include <any>
#include <optional>
#include <span>
#include <vector>

#include "mscg/common.hpp"

namespace mscg {

using NodeId = int;

struct NodeRecord {
  NodeId id = 0;
  int stage = 1;  // 1-based; root is stage 1
  std::optional<NodeId> parent;
  double probability = 1.0;
  std::any payload;  // realization data attached by adapters, opaque here
};

// Rooted scenario tree with a fixed per-stage branching factor. Node ids are
// dense integers assigned breadth-first (stage-major, then parent order), so
// identical inputs always produce identical trees. Immutable after build
// apart from payload attachment; safe for concurrent reads.
class ScenarioTree {
 public:
  int stage_count() const { return static_cast<int>(branching_.size()); }
  const std::vector<int>& branching() const { return branching_; }
  int node_count() const { return static_cast<int>(nodes_.size()); }

  const NodeRecord& node(NodeId n) const;
  NodeRecord& node(NodeId n);

  bool is_root(NodeId n) const { return n == 0; }
  bool is_leaf(NodeId n) const { return node(n).stage == stage_count(); }

  std::span<const NodeId> stage_nodes(int stage) const;
  std::span<const NodeId> leaves() const { return stage_nodes(stage_count()); }
  std::span<const NodeId> children(NodeId n) const;

  friend ScenarioTree build_tree(const std::vector<int>& branching,
                                 const std::vector<std::vector<double>>* conditional_probs);

 private:
  std::vector<int> branching_;
  std::vector<NodeRecord> nodes_;
  std::vector<std::vector<NodeId>> by_stage_;       // stage -> ids, ascending
  std::vector<std::vector<NodeId>> children_;       // node -> child ids, ascending
};

// Builds a tree from the branching vector R (R[0] must be 1). Conditional
// branch probabilities default to uniform; when given explicitly there must
// be one vector per stage >= 2, of length R[t], summing to 1.
ScenarioTree build_tree(const std::vector<int>& branching,
                        const std::vector<std::vector<double>>* conditional_probs = nullptr);

// Nodes with the same parent as n, excluding n itself; empty for the root.
std::vector<NodeId> siblings(const ScenarioTree& tree, NodeId n);

// The path (root, ..., parent of n). Throws for the root.
std::vector<NodeId> path_to_parent(const ScenarioTree& tree, NodeId n);

// Sum over all nodes of |siblings(n)|: the per-iteration column sharing
// capacity of the tree.
int sharing_capacity(const ScenarioTree& tree);

}  // namespace mscg
