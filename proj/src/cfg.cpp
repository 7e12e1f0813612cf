#include "shso/cfg.hpp"

#include <algorithm>
#include <sstream>

namespace shso {

namespace {

void add_edge(std::vector<CfgEdge>& edges, std::size_t from, std::size_t to, EdgeKind kind)
{
    edges.push_back({from, to, kind});
}

std::string_view kind_name(EdgeKind k)
{
    switch (k) {
    case EdgeKind::Entry: return "entry";
    case EdgeKind::FallThrough: return "";
    case EdgeKind::Goto: return "goto";
    case EdgeKind::True: return "T";
    case EdgeKind::False: return "F";
    case EdgeKind::Return: return "ret";
    }
    return "";
}

std::vector<bool> reach_without(const Cfg& g, std::size_t start, std::size_t removed)
{
    std::vector<bool> seen(g.node_count(), false);
    if (start == removed)
        return seen;
    std::vector<std::size_t> stack{start};
    seen[start] = true;
    while (!stack.empty()) {
        std::size_t n = stack.back();
        stack.pop_back();
        for (std::size_t s : g.successors(n)) {
            if (s == removed || seen[s])
                continue;
            seen[s] = true;
            stack.push_back(s);
        }
    }
    return seen;
}

} // namespace

Cfg Cfg::from_edges(std::size_t statement_count, std::vector<CfgEdge> edges,
                    std::vector<std::string> labels)
{
    Cfg g;
    const std::size_t n = statement_count + 2;
    g.succ_.resize(n);
    g.pred_.resize(n);
    g.true_succ_.resize(n);
    g.false_succ_.resize(n);
    g.labels_ = std::move(labels);
    for (const auto& e : edges) {
        g.succ_[e.from].push_back(e.to);
        g.pred_[e.to].push_back(e.from);
        if (e.kind == EdgeKind::True)
            g.true_succ_[e.from] = e.to;
        else if (e.kind == EdgeKind::False)
            g.false_succ_[e.from] = e.to;
    }
    g.edges_ = std::move(edges);
    return g;
}

Cfg build_cfg(const MethodDef& method)
{
    std::vector<CfgEdge> edges;
    const auto& body = method.body;
    add_edge(edges, Cfg::kEntry, Cfg::node_of(0), EdgeKind::Entry);
    for (std::size_t i = 0; i < body.size(); ++i) {
        const std::size_t node = Cfg::node_of(i);
        const std::size_t next = i + 1 < body.size() ? Cfg::node_of(i + 1) : Cfg::kExit;
        const Instr& instr = body[i].instr;
        if (const auto* cond = std::get_if<If>(&instr)) {
            add_edge(edges, node, Cfg::node_of(*method.index_of(cond->target)), EdgeKind::True);
            add_edge(edges, node, next, EdgeKind::False);
        } else if (const auto* g = std::get_if<Goto>(&instr)) {
            add_edge(edges, node, Cfg::node_of(*method.index_of(g->target)), EdgeKind::Goto);
        } else if (std::holds_alternative<Return>(instr)) {
            add_edge(edges, node, Cfg::kExit, EdgeKind::Return);
        } else {
            add_edge(edges, node, next, EdgeKind::FallThrough);
        }
    }
    std::vector<std::string> labels;
    labels.reserve(body.size());
    for (const auto& s : body)
        labels.push_back(s.label);
    return Cfg::from_edges(body.size(), std::move(edges), std::move(labels));
}

std::string Cfg::node_name(std::size_t n) const
{
    if (n == kEntry)
        return "Entry";
    if (n == kExit)
        return "Exit";
    std::size_t stmt = n - 2;
    return stmt < labels_.size() ? labels_[stmt] : "n" + std::to_string(stmt);
}

std::string Cfg::to_dot(const std::string& name) const
{
    std::ostringstream out;
    out << "digraph \"" << name << "\" {\n";
    for (std::size_t n = 0; n < node_count(); ++n)
        out << "  n" << n << " [label=\"" << node_name(n) << "\"" << (is_branch(n) ? ", shape=box" : "")
            << "];\n";
    for (const auto& e : edges_) {
        out << "  n" << e.from << " -> n" << e.to;
        if (auto k = kind_name(e.kind); !k.empty())
            out << " [label=\"" << k << "\"]";
        out << ";\n";
    }
    out << "}\n";
    return out.str();
}

DomTree compute_dominators(const Cfg& g)
{
    const std::size_t n = g.node_count();

    // Reverse postorder from Entry, iteratively.
    std::vector<std::size_t> postorder;
    std::vector<bool> seen(n, false);
    std::vector<std::pair<std::size_t, std::size_t>> stack{{Cfg::kEntry, 0}};
    seen[Cfg::kEntry] = true;
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        const auto& succ = g.successors(node);
        if (next < succ.size()) {
            std::size_t s = succ[next++];
            if (!seen[s]) {
                seen[s] = true;
                stack.emplace_back(s, 0);
            }
        } else {
            postorder.push_back(node);
            stack.pop_back();
        }
    }
    std::vector<std::size_t> order_of(n, 0);
    for (std::size_t i = 0; i < postorder.size(); ++i)
        order_of[postorder[i]] = i;

    constexpr std::size_t kUndef = static_cast<std::size_t>(-1);
    std::vector<std::size_t> idom(n, kUndef);
    idom[Cfg::kEntry] = Cfg::kEntry;

    auto intersect = [&](std::size_t a, std::size_t b) {
        while (a != b) {
            while (order_of[a] < order_of[b])
                a = idom[a];
            while (order_of[b] < order_of[a])
                b = idom[b];
        }
        return a;
    };

    bool changed = true;
    while (changed) {
        changed = false;
        for (auto it = postorder.rbegin(); it != postorder.rend(); ++it) {
            std::size_t b = *it;
            if (b == Cfg::kEntry)
                continue;
            std::size_t new_idom = kUndef;
            for (std::size_t p : g.predecessors(b)) {
                if (idom[p] == kUndef)
                    continue;
                new_idom = new_idom == kUndef ? p : intersect(p, new_idom);
            }
            if (idom[b] != new_idom) {
                idom[b] = new_idom;
                changed = true;
            }
        }
    }

    DomTree t;
    t.idom_.resize(n);
    t.reachable_ = seen;
    for (std::size_t i = 0; i < n; ++i)
        if (i != Cfg::kEntry && idom[i] != kUndef)
            t.idom_[i] = idom[i];
    return t;
}

bool DomTree::dominates(std::size_t d, std::size_t n) const
{
    if (!reachable_[n] || !reachable_[d])
        return false;
    std::optional<std::size_t> cur = n;
    while (cur) {
        if (*cur == d)
            return true;
        cur = idom_[*cur];
    }
    return false;
}

std::string DomTree::to_dot(const Cfg& g, const std::string& name) const
{
    std::ostringstream out;
    out << "digraph \"" << name << "_dom\" {\n";
    for (std::size_t n = 0; n < idom_.size(); ++n) {
        if (!reachable_[n])
            continue;
        out << "  n" << n << " [label=\"" << g.node_name(n) << "\"];\n";
        if (idom_[n])
            out << "  n" << *idom_[n] << " -> n" << n << ";\n";
    }
    out << "}\n";
    return out.str();
}

std::vector<std::size_t> BranchSets::guarded() const
{
    std::vector<std::size_t> out;
    std::set_union(true_branch.begin(), true_branch.end(), false_branch.begin(), false_branch.end(),
                   std::back_inserter(out));
    return out;
}

BranchSets branch_sets(const Cfg& g, const DomTree& dom, std::size_t if_node)
{
    BranchSets out;
    if (!g.is_branch(if_node) || !dom.reachable(if_node))
        return out;
    const auto from_true = reach_without(g, g.true_successor(if_node), if_node);
    const auto from_false = reach_without(g, g.false_successor(if_node), if_node);
    for (std::size_t n = 2; n < g.node_count(); ++n) {
        if (!dom.strictly_dominates(if_node, n))
            continue;
        if (from_true[n] && !from_false[n])
            out.true_branch.push_back(n - 2);
        else if (from_false[n] && !from_true[n])
            out.false_branch.push_back(n - 2);
    }
    return out;
}

} // namespace shso
