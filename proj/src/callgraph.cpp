#include "shso/callgraph.hpp"

#include <deque>
#include <sstream>

namespace shso {

CallGraph CallGraph::build(const Program& program)
{
    CallGraph cg;
    for (const MethodDef* m : program.methods()) {
        cg.app_order_.push_back(m->signature());
        cg.app_methods_.insert(m->signature());
    }
    for (const MethodDef* m : program.methods()) {
        const std::string sig = m->signature();
        const std::size_t first = cg.edges_.size();
        for (std::size_t i = 0; i < m->body.size(); ++i) {
            const CallExpr* call = call_of(m->body[i].instr);
            if (!call)
                continue;
            CallEdge e;
            e.site = {sig, i};
            e.callee = call->signature();
            e.callee_name = call->qualified_name();
            e.external = !cg.app_methods_.count(e.callee);
            cg.callers_[e.callee].push_back(e.site);
            cg.sites_by_name_[e.callee_name].push_back(e.site);
            cg.edges_.push_back(std::move(e));
        }
        cg.by_method_[sig] = {first, cg.edges_.size()};
    }
    return cg;
}

std::span<const CallEdge> CallGraph::calls_in(const std::string& method) const
{
    auto it = by_method_.find(method);
    if (it == by_method_.end())
        return {};
    return std::span<const CallEdge>(edges_).subspan(it->second.first, it->second.second - it->second.first);
}

std::size_t CallGraph::incoming_edges(const std::string& callee) const { return callers(callee).size(); }

const std::vector<StmtRef>& CallGraph::callers(const std::string& callee) const
{
    static const std::vector<StmtRef> none;
    auto it = callers_.find(callee);
    return it == callers_.end() ? none : it->second;
}

const std::vector<StmtRef>& CallGraph::sites_of_name(const std::string& callee_name) const
{
    static const std::vector<StmtRef> none;
    auto it = sites_by_name_.find(callee_name);
    return it == sites_by_name_.end() ? none : it->second;
}

std::vector<std::string> CallGraph::nodes() const
{
    std::vector<std::string> out = app_order_;
    std::set<std::string> ext;
    for (const auto& e : edges_)
        if (e.external)
            ext.insert(e.callee);
    out.insert(out.end(), ext.begin(), ext.end());
    return out;
}

std::string CallGraph::to_dot() const
{
    std::ostringstream out;
    out << "digraph callgraph {\n";
    for (const auto& n : nodes())
        out << "  \"" << n << "\"" << (is_app_method(n) ? "" : " [shape=box]") << ";\n";
    for (const auto& e : edges_)
        out << "  \"" << e.site.method << "\" -> \"" << e.callee << "\";\n";
    out << "}\n";
    return out.str();
}

std::vector<ReachedCall> reachable_calls(const CallGraph& cg, std::span<const StmtRef> roots,
                                         std::size_t depth_limit)
{
    std::vector<ReachedCall> out;
    std::set<std::string> visited;
    std::deque<std::pair<std::string, std::size_t>> queue;

    auto follow = [&](const CallEdge& e, std::size_t depth) {
        out.push_back({&e, depth});
        if (!e.external && depth + 1 <= depth_limit && visited.insert(e.callee).second)
            queue.emplace_back(e.callee, depth + 1);
    };

    for (const auto& root : roots)
        for (const auto& e : cg.calls_in(root.method))
            if (e.site.index == root.index)
                follow(e, 0);

    while (!queue.empty()) {
        auto [method, depth] = queue.front();
        queue.pop_front();
        for (const auto& e : cg.calls_in(method))
            follow(e, depth);
    }
    return out;
}

std::set<std::pair<StmtRef, std::string>> reachable_external_calls(const CallGraph& cg,
                                                                   std::span<const StmtRef> roots,
                                                                   std::size_t depth_limit)
{
    std::set<std::pair<StmtRef, std::string>> out;
    for (const auto& r : reachable_calls(cg, roots, depth_limit))
        if (r.edge->external)
            out.emplace(r.edge->site, r.edge->callee_name);
    return out;
}

} // namespace shso
