// Inter-procedural forward taint analysis from catalog sources to the
// instrumented condition sinks.
//
// Intra-procedurally the analysis is a flow-sensitive worklist over each
// method body with strong updates on locals. Across methods it is
// context-insensitive: one taint summary per formal parameter and per
// return value, and one weakly updated fact per static field. Branching on
// tainted data does not taint the branch bodies.

#pragma once

#include "shso/callgraph.hpp"
#include "shso/catalog.hpp"
#include "shso/instrument.hpp"

#include <chrono>
#include <set>
#include <string>
#include <vector>

namespace shso {

/// Where a tainted value came from: the source API and the call site that
/// produced it. Source call sites keep their original labels.
struct Provenance {
    std::string source;
    std::string method;
    std::string label;
    auto operator<=>(const Provenance&) const = default;
};

struct EntryPointHit {
    std::string method; // signature
    std::string label;  // original if-statement label
    std::set<std::string> sources;
    std::set<Provenance> provenance;
};

struct TaintOptions {
    std::chrono::milliseconds timeout{60'000};
};

struct TaintResult {
    std::vector<EntryPointHit> hits; // sorted by (method, label)
    bool timed_out = false;
    std::vector<std::string> timed_out_methods;
};

/// Reports a hit for an if-statement iff some argument of its sink call may
/// carry source-derived data. On timeout the hits found so far are returned
/// and the method being analyzed is recorded.
TaintResult run_taint(const InstrumentedProgram& input, const Catalog& catalog, const TaintOptions& options = {});

} // namespace shso
