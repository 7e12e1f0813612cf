// Triggers: a taint-confirmed condition together with the statements it
// guards on each branch.

#pragma once

#include "shso/catalog.hpp"
#include "shso/cfg.hpp"
#include "shso/taint.hpp"
#include "shso/tir.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace shso {

struct MethodGraphs {
    const MethodDef* method = nullptr;
    Cfg cfg;
    DomTree dom;
};

/// CFG and dominator tree of every method, keyed by signature.
class ProgramGraphs {
public:
    explicit ProgramGraphs(const Program& program);
    const MethodGraphs& at(const std::string& signature) const { return graphs_.at(signature); }
    const std::map<std::string, MethodGraphs>& all() const { return graphs_; }

private:
    std::map<std::string, MethodGraphs> graphs_;
};

struct Trigger {
    std::string method;    // signature
    std::string label;     // label of the condition
    std::size_t index = 0; // statement index of the condition
    std::string condition; // condition text, e.g. `code == "us"`
    std::vector<std::size_t> true_branch;
    std::vector<std::size_t> false_branch;
    std::set<std::string> provenance; // source APIs reaching the condition
    std::string type;

    /// Guarded code: true_branch united with false_branch.
    std::vector<std::size_t> guarded() const;
};

/// Family shared by all provenance sources, or "Mixed".
std::string trigger_type(const Trigger& trigger);

/// One trigger per hit, in hit order. Branch sets are computed on the
/// original, uninstrumented program so dummy statements never appear.
std::vector<Trigger> extract_triggers(const std::vector<EntryPointHit>& hits, const ProgramGraphs& graphs);

} // namespace shso
