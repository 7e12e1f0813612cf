// Independent feature computation for small programs: explicit recursion
// over method bodies, explicit set algebra, path enumeration for P, and a
// reachability formulation of the exclusive-method rule for S1. No depth
// limit, so it is only valid where call chains are short.

#pragma once

#include "shso/catalog.hpp"
#include "shso/features.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace testutil {

struct BruteTrigger {
    std::string method; // signature
    std::size_t index = 0;
    std::set<std::size_t> true_branch;
    std::set<std::size_t> false_branch;
    std::set<std::size_t> guarded() const
    {
        std::set<std::size_t> g = true_branch;
        g.insert(false_branch.begin(), false_branch.end());
        return g;
    }
};

/// Branch sets of the condition at `index`, from the path oracle.
inline BruteTrigger brute_trigger(const Program& p, const std::string& method, std::size_t index)
{
    const MethodDef& m = *p.find_method(method);
    const auto facts = enumerate_paths(build_cfg(m));
    const BranchSets b = oracle_branch_sets(facts, Cfg::node_of(index));
    return {method, index, {b.true_branch.begin(), b.true_branch.end()},
            {b.false_branch.begin(), b.false_branch.end()}};
}

/// External APIs reachable from the given statements.
inline std::set<std::string> brute_reach(const Program& p, const std::string& method,
                                         const std::set<std::size_t>& statements)
{
    std::set<std::string> out;
    std::set<std::string> entered;
    std::function<void(const MethodDef&, const std::set<std::size_t>*)> walk = [&](const MethodDef& m,
                                                                                const std::set<std::size_t>* only) {
        for (std::size_t i = 0; i < m.body.size(); ++i) {
            if (only && !only->count(i))
                continue;
            const CallExpr* c = call_of(m.body[i].instr);
            if (!c)
                continue;
            if (const MethodDef* callee = p.find_method(c->signature())) {
                if (entered.insert(callee->signature()).second)
                    walk(*callee, nullptr);
            } else {
                out.insert(c->qualified_name());
            }
        }
    };
    walk(*p.find_method(method), &statements);
    return out;
}

inline std::set<std::string> only(const Catalog& cat, Category c, const std::set<std::string>& names)
{
    std::set<std::string> out;
    for (const auto& n : names)
        if (cat.contains(c, n))
            out.insert(n);
    return out;
}

inline double brute_jaccard(const std::set<std::string>& a, const std::set<std::string>& b)
{
    std::set<std::string> both, either = a;
    either.insert(b.begin(), b.end());
    for (const auto& x : a)
        if (b.count(x))
            both.insert(x);
    if (either.empty())
        return 0.0;
    return 1.0 - static_cast<double>(both.size()) / static_cast<double>(either.size());
}

inline FeatureVector brute_vector(const Program& p, const Catalog& cat, const BruteTrigger& t)
{
    FeatureVector v;
    const MethodDef& m = *p.find_method(t.method);
    const auto guarded = t.guarded();
    const auto reached = brute_reach(p, t.method, guarded);
    const auto sensitive = only(cat, Category::Sensitive, reached);
    v.S = sensitive.size();
    v.N = only(cat, Category::Native, reached).empty() ? 0 : 1;
    v.D = only(cat, Category::Dynload, reached).empty() ? 0 : 1;
    v.R = only(cat, Category::Reflect, reached).empty() ? 0 : 1;
    v.B = only(cat, Category::Service, reached).empty() ? 0 : 1;
    v.J = brute_jaccard(only(cat, Category::Sensitive, brute_reach(p, t.method, t.true_branch)),
                        only(cat, Category::Sensitive, brute_reach(p, t.method, t.false_branch)));

    // P: some path inside the guarded code reads a condition variable
    // before writing it.
    const Cfg g = build_cfg(m);
    const auto& cond = std::get<If>(m.body[t.index].instr);
    std::function<bool(std::size_t, const std::string&, std::set<std::size_t>&)> reads =
        [&](std::size_t stmt, const std::string& var, std::set<std::size_t>& on_path) -> bool {
        if (!guarded.count(stmt) || on_path.count(stmt))
            return false;
        const auto uses = used_vars(m.body[stmt].instr);
        if (std::find(uses.begin(), uses.end(), var) != uses.end())
            return true;
        if (defined_var(m.body[stmt].instr) == var)
            return false;
        on_path.insert(stmt);
        for (std::size_t s : g.successors(Cfg::node_of(stmt)))
            if (auto next = Cfg::stmt_of(s); next && reads(*next, var, on_path))
                return true;
        on_path.erase(stmt);
        return false;
    };
    for (const auto& var : cond.condition_vars())
        for (std::size_t s : g.successors(Cfg::node_of(t.index))) {
            std::set<std::size_t> on_path;
            if (auto next = Cfg::stmt_of(s); next && reads(*next, var, on_path))
                v.P = 1;
        }

    // Call sites by scanning every statement.
    struct Site {
        std::string method;
        std::size_t index;
        std::string target; // signature for app methods, Class.method otherwise
    };
    std::vector<Site> sites;
    for (const MethodDef* md : p.methods())
        for (std::size_t i = 0; i < md->body.size(); ++i)
            if (const CallExpr* c = call_of(md->body[i].instr))
                sites.push_back({md->signature(), i,
                                 p.find_method(c->signature()) ? c->signature() : c->qualified_name()});

    std::set<std::string> m1;
    for (const auto& s : sites) {
        if (s.method != t.method || !guarded.count(s.index) || !p.find_method(s.target))
            continue;
        const auto n = std::count_if(sites.begin(), sites.end(), [&](const Site& o) { return o.target == s.target; });
        if (n == 1)
            m1.insert(s.target);
    }
    v.M1 = m1.size();

    // Methods entered from the guarded code.
    std::set<std::string> inside;
    std::function<void(const std::string&)> enter = [&](const std::string& sig) {
        if (!inside.insert(sig).second)
            return;
        for (const auto& s : sites)
            if (s.method == sig && p.find_method(s.target))
                enter(s.target);
    };
    for (const auto& s : sites)
        if (s.method == t.method && guarded.count(s.index) && p.find_method(s.target))
            enter(s.target);
    // A method stops being exclusive when something outside the guarded
    // code can call it: entries, callers outside `inside`, and callers that
    // are themselves tainted this way. Iterate to the least fixpoint.
    std::set<std::string> tainted;
    for (const auto& sig : inside)
        if (p.find_method(sig)->is_entry)
            tainted.insert(sig);
    auto site_outside = [&](const Site& s) {
        if (s.method == t.method && guarded.count(s.index))
            return false;
        return !inside.count(s.method) || tainted.count(s.method);
    };
    for (bool changed = true; changed;) {
        changed = false;
        for (const auto& s : sites)
            if (inside.count(s.target) && !tainted.count(s.target) && site_outside(s)) {
                tainted.insert(s.target);
                changed = true;
            }
    }
    for (const auto& api : sensitive) {
        bool all_inside = true;
        for (const auto& s : sites)
            if (s.target == api && site_outside(s))
                all_inside = false;
        v.S1 += all_inside ? 1 : 0;
    }
    return v;
}

} // namespace testutil
