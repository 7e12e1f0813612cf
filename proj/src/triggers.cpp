#include "shso/triggers.hpp"

#include <algorithm>
#include <iterator>

namespace shso {

ProgramGraphs::ProgramGraphs(const Program& program)
{
    for (const MethodDef* m : program.methods()) {
        Cfg cfg = build_cfg(*m);
        DomTree dom = compute_dominators(cfg);
        graphs_.emplace(m->signature(), MethodGraphs{m, std::move(cfg), std::move(dom)});
    }
}

std::vector<std::size_t> Trigger::guarded() const
{
    std::vector<std::size_t> out;
    std::set_union(true_branch.begin(), true_branch.end(), false_branch.begin(), false_branch.end(),
                   std::back_inserter(out));
    return out;
}

std::string trigger_type(const Trigger& trigger)
{
    std::set<std::string> families;
    for (const auto& source : trigger.provenance)
        families.insert(signature_family(source));
    if (families.empty())
        return "Unknown";
    return families.size() == 1 ? *families.begin() : "Mixed";
}

std::vector<Trigger> extract_triggers(const std::vector<EntryPointHit>& hits, const ProgramGraphs& graphs)
{
    std::vector<Trigger> out;
    out.reserve(hits.size());
    for (const auto& hit : hits) {
        const MethodGraphs& g = graphs.at(hit.method);
        const auto index = g.method->index_of(hit.label);
        if (!index)
            continue;
        const auto* cond = std::get_if<If>(&g.method->body[*index].instr);
        if (!cond)
            continue;
        BranchSets sets = branch_sets(g.cfg, g.dom, Cfg::node_of(*index));
        Trigger t;
        t.method = hit.method;
        t.label = hit.label;
        t.index = *index;
        t.condition = emit_condition(*cond);
        t.true_branch = std::move(sets.true_branch);
        t.false_branch = std::move(sets.false_branch);
        t.provenance = hit.sources;
        t.type = trigger_type(t);
        out.push_back(std::move(t));
    }
    return out;
}

} // namespace shso
