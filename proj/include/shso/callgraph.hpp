// Whole-program call graph over statically named calls.

#pragma once

#include "shso/tir.hpp"

#include <compare>
#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace shso {

/// A statement identified by its method signature and position in the body.
struct StmtRef {
    std::string method;
    std::size_t index = 0;
    auto operator<=>(const StmtRef&) const = default;
};

struct CallEdge {
    StmtRef site;
    std::string callee;      // Class.method/arity
    std::string callee_name; // Class.method
    bool external = false;   // no body in the program
};

inline constexpr std::size_t kDefaultDepthLimit = 20;

class CallGraph {
public:
    /// One edge per call statement, in program order. Resolution is by exact
    /// Class.method/arity; anything without a body becomes an external leaf.
    static CallGraph build(const Program& program);

    const std::vector<CallEdge>& edges() const { return edges_; }
    /// Edges whose call site lies in `method` (by signature), in body order.
    std::span<const CallEdge> calls_in(const std::string& method) const;
    std::size_t incoming_edges(const std::string& callee) const;
    /// Call sites targeting `callee` (by signature).
    const std::vector<StmtRef>& callers(const std::string& callee) const;
    /// Call sites of an external API by `Class.method` name.
    const std::vector<StmtRef>& sites_of_name(const std::string& callee_name) const;

    bool is_app_method(const std::string& signature) const { return app_methods_.count(signature) > 0; }
    /// Every node: app methods first (program order), then externals (sorted).
    std::vector<std::string> nodes() const;
    std::string to_dot() const;

private:
    std::vector<CallEdge> edges_;
    std::vector<std::string> app_order_;
    std::set<std::string> app_methods_;
    std::map<std::string, std::pair<std::size_t, std::size_t>> by_method_;
    std::map<std::string, std::vector<StmtRef>> callers_;
    std::map<std::string, std::vector<StmtRef>> sites_by_name_;
};

struct ReachedCall {
    const CallEdge* edge = nullptr;
    std::size_t depth = 0; // 0 = the call sits in a root statement
};

/// Every call reachable from the root statements: calls in the roots
/// themselves (depth 0) and calls inside app methods entered transitively
/// from them, up to `depth_limit` levels. Each method body is scanned at
/// most once per query, at its shallowest depth.
std::vector<ReachedCall> reachable_calls(const CallGraph& cg, std::span<const StmtRef> roots,
                                         std::size_t depth_limit = kDefaultDepthLimit);

/// (call site, Class.method) pairs of the external targets reachable from roots.
std::set<std::pair<StmtRef, std::string>> reachable_external_calls(const CallGraph& cg,
                                                                   std::span<const StmtRef> roots,
                                                                   std::size_t depth_limit = kDefaultDepthLimit);

} // namespace shso
