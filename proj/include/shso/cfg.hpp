// Per-method control-flow graphs, dominators, and the true/false branch
// membership sets of a conditional statement.

#pragma once

#include "shso/tir.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace shso {

enum class EdgeKind { Entry, FallThrough, Goto, True, False, Return };

struct CfgEdge {
    std::size_t from = 0;
    std::size_t to = 0;
    EdgeKind kind = EdgeKind::FallThrough;
};

/// Node 0 is the synthetic Entry, node 1 the synthetic Exit; statement i
/// of the method is node i + 2. Parallel edges are kept, so an `if` whose
/// target is the next statement still has one true and one false edge.
class Cfg {
public:
    static constexpr std::size_t kEntry = 0;
    static constexpr std::size_t kExit = 1;

    /// Builds a graph directly from edges; used by tests and tools that
    /// synthesize graphs. Nodes beyond Entry/Exit are "statements".
    static Cfg from_edges(std::size_t statement_count, std::vector<CfgEdge> edges,
                          std::vector<std::string> labels = {});

    std::size_t node_count() const { return succ_.size(); }
    std::size_t statement_count() const { return succ_.size() - 2; }
    static std::size_t node_of(std::size_t stmt) { return stmt + 2; }
    static std::optional<std::size_t> stmt_of(std::size_t node)
    {
        return node >= 2 ? std::optional<std::size_t>(node - 2) : std::nullopt;
    }

    const std::vector<std::size_t>& successors(std::size_t n) const { return succ_[n]; }
    const std::vector<std::size_t>& predecessors(std::size_t n) const { return pred_[n]; }
    const std::vector<CfgEdge>& edges() const { return edges_; }

    bool is_branch(std::size_t n) const { return true_succ_[n].has_value(); }
    std::size_t true_successor(std::size_t n) const { return *true_succ_[n]; }
    std::size_t false_successor(std::size_t n) const { return *false_succ_[n]; }

    std::string node_name(std::size_t n) const;
    std::string to_dot(const std::string& name) const;

private:
    friend Cfg build_cfg(const MethodDef& method);

    std::vector<std::vector<std::size_t>> succ_;
    std::vector<std::vector<std::size_t>> pred_;
    std::vector<std::optional<std::size_t>> true_succ_;
    std::vector<std::optional<std::size_t>> false_succ_;
    std::vector<CfgEdge> edges_;
    std::vector<std::string> labels_;
};

Cfg build_cfg(const MethodDef& method);

/// Immediate dominators rooted at Entry. Unreachable nodes have no idom
/// and are dominated by nothing.
class DomTree {
public:
    std::optional<std::size_t> idom(std::size_t n) const { return idom_[n]; }
    bool reachable(std::size_t n) const { return reachable_[n]; }
    bool dominates(std::size_t d, std::size_t n) const;
    bool strictly_dominates(std::size_t d, std::size_t n) const { return d != n && dominates(d, n); }
    std::size_t node_count() const { return idom_.size(); }
    std::string to_dot(const Cfg& g, const std::string& name) const;

    bool operator==(const DomTree&) const = default;

private:
    friend DomTree compute_dominators(const Cfg& g);

    std::vector<std::optional<std::size_t>> idom_;
    std::vector<bool> reachable_;
};

/// Iterative reverse-postorder fixpoint (Cooper, Harvey and Kennedy).
DomTree compute_dominators(const Cfg& g);

/// Statement indices (sorted) executed only when the condition holds
/// (true_branch) or only when it fails (false_branch).
struct BranchSets {
    std::vector<std::size_t> true_branch;
    std::vector<std::size_t> false_branch;

    std::vector<std::size_t> guarded() const;
    bool operator==(const BranchSets&) const = default;
};

/// A statement belongs to the true branch of `if_node` iff the condition
/// strictly dominates it and, in the graph with the condition removed, it
/// is reachable from the true successor but not from the false successor.
/// The false branch is symmetric; join points belong to neither.
BranchSets branch_sets(const Cfg& g, const DomTree& dom, std::size_t if_node);

} // namespace shso
