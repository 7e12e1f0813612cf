#include "doctest.h"
#include "shso/cfg.hpp"
#include "test_util.hpp"

using namespace shso;

namespace {

const MethodDef& only_method(const Program& p)
{
    return *p.methods().at(0);
}

std::size_t node(std::size_t stmt)
{
    return Cfg::node_of(stmt);
}

} // namespace

TEST_CASE("straight line")
{
    const Program p = parse_program("class A { entry m() { l0: x = 1 l1: y = 2 l2: return } }");
    const Cfg g = build_cfg(only_method(p));
    CHECK(g.successors(Cfg::kEntry) == std::vector<std::size_t>{node(0)});
    CHECK(g.successors(node(0)) == std::vector<std::size_t>{node(1)});
    CHECK(g.successors(node(1)) == std::vector<std::size_t>{node(2)});
    CHECK(g.successors(node(2)) == std::vector<std::size_t>{Cfg::kExit});
    CHECK(g.predecessors(Cfg::kEntry).empty());
    CHECK(g.successors(Cfg::kExit).empty());

    const DomTree d = compute_dominators(g);
    CHECK_FALSE(d.idom(Cfg::kEntry).has_value());
    CHECK(d.idom(node(0)) == Cfg::kEntry);
    CHECK(d.idom(node(1)) == node(0));
    CHECK(d.idom(node(2)) == node(1));
    CHECK(d.idom(Cfg::kExit) == node(2));
}

TEST_CASE("diamond")
{
    const Program p = parse_program(R"(
class A {
  entry m() {
    l0: if x == 1 goto l2
    l1: goto l3
    l2: goto l3
    l3: return
  }
})");
    const Cfg g = build_cfg(only_method(p));
    CHECK(g.successors(node(0)).size() == 2);
    CHECK(g.is_branch(node(0)));
    CHECK(g.true_successor(node(0)) == node(2));
    CHECK(g.false_successor(node(0)) == node(1));
    CHECK(g.predecessors(node(3)).size() == 2);

    const DomTree d = compute_dominators(g);
    CHECK(d.idom(node(1)) == node(0));
    CHECK(d.idom(node(2)) == node(0));
    CHECK(d.idom(node(3)) == node(0));

    const BranchSets b = branch_sets(g, d, node(0));
    CHECK(b.true_branch == std::vector<std::size_t>{2});
    CHECK(b.false_branch == std::vector<std::size_t>{1});
}

TEST_CASE("self loop")
{
    const Program p = parse_program("class A { entry m() { l0: if x < 5 goto l0 l1: return } }");
    const Cfg g = build_cfg(only_method(p));
    CHECK(g.true_successor(node(0)) == node(0));
    CHECK(g.false_successor(node(0)) == node(1));
    const DomTree d = compute_dominators(g);
    const BranchSets b = branch_sets(g, d, node(0));
    CHECK(b.true_branch.empty());
    CHECK(b.false_branch == std::vector<std::size_t>{1});
}

TEST_CASE("if whose target is the next statement keeps both edges")
{
    const Program p = parse_program("class A { entry m() { l0: if x < 5 goto l1 l1: return } }");
    const Cfg g = build_cfg(only_method(p));
    CHECK(g.successors(node(0)).size() == 2);
    const BranchSets b = branch_sets(g, compute_dominators(g), node(0));
    CHECK(b.true_branch.empty());
    CHECK(b.false_branch.empty());
}

TEST_CASE("join node of two branch chains is in neither branch")
{
    // c -> t1 -> t2 -> h, c -> f1 -> h, h -> after
    const Program p = parse_program(R"(
class A {
  entry m() {
    l0: if x == 1 goto l3
    l1: y = 1
    l2: goto l5
    l3: y = 2
    l4: z = 3
    l5: w = y
    l6: return
  }
})");
    const Cfg g = build_cfg(only_method(p));
    const DomTree d = compute_dominators(g);
    CHECK(d.strictly_dominates(node(0), node(5)));
    const BranchSets b = branch_sets(g, d, node(0));
    CHECK(b.true_branch == std::vector<std::size_t>{3, 4});
    CHECK(b.false_branch == std::vector<std::size_t>{1, 2});
    CHECK(b.guarded() == std::vector<std::size_t>{1, 2, 3, 4});
}

TEST_CASE("no false branch gives an empty false set")
{
    const Program p = parse_program(R"(
class A {
  entry m() {
    l0: if x != 1 goto l2
    l1: call Sms.send(x)
    l2: return
  }
})");
    const Cfg g = build_cfg(only_method(p));
    const BranchSets b = branch_sets(g, compute_dominators(g), node(0));
    CHECK(b.true_branch.empty());
    CHECK(b.false_branch == std::vector<std::size_t>{1});

    const Program q = parse_program(R"(
class A {
  entry m() {
    l0: if x == 1 goto l2
    l1: goto l3
    l2: call Sms.send(x)
    l3: return
  }
})");
    const Cfg h = build_cfg(only_method(q));
    const BranchSets c = branch_sets(h, compute_dominators(h), node(0));
    CHECK(c.true_branch == std::vector<std::size_t>{2});
    CHECK(c.false_branch == std::vector<std::size_t>{1});
}

TEST_CASE("loop body guarded by a back edge to the condition stays in its branch")
{
    const Program p = parse_program(R"(
class A {
  entry m() {
    l0: i = 0
    l1: if i >= 3 goto l4
    l2: i = i + 1
    l3: goto l1
    l4: return
  }
})");
    const Cfg g = build_cfg(only_method(p));
    const BranchSets b = branch_sets(g, compute_dominators(g), node(1));
    CHECK(b.true_branch == std::vector<std::size_t>{4});
    CHECK(b.false_branch == std::vector<std::size_t>{2, 3});
}

TEST_CASE("unreachable statements are dominated by nothing")
{
    const Program p = parse_program("class A { entry m() { l0: return l1: x = 1 l2: return } }");
    const Cfg g = build_cfg(only_method(p));
    const DomTree d = compute_dominators(g);
    CHECK_FALSE(d.reachable(node(1)));
    CHECK_FALSE(d.idom(node(1)).has_value());
    CHECK_FALSE(d.dominates(Cfg::kEntry, node(1)));
}

TEST_CASE("an edge into a branch member from outside removes it")
{
    // l3 is only on the true side; then a goto from before the condition
    // into l3 makes it reachable without passing the condition.
    const Program before = parse_program(R"(
class A {
  entry m() {
    l0: x = 0
    l1: if x == 1 goto l3
    l2: return
    l3: y = 1
    l4: return
  }
})");
    const Program after = parse_program(R"(
class A {
  entry m() {
    l0: if z == 0 goto l3
    l1: if x == 1 goto l3
    l2: return
    l3: y = 1
    l4: return
  }
})");
    const Cfg g1 = build_cfg(only_method(before));
    CHECK(branch_sets(g1, compute_dominators(g1), node(1)).true_branch == std::vector<std::size_t>{3, 4});
    const Cfg g2 = build_cfg(only_method(after));
    CHECK(branch_sets(g2, compute_dominators(g2), node(1)).true_branch.empty());
}

TEST_CASE("random methods: dominance and branch sets match the path oracle")
{
    std::mt19937_64 rng(2024);
    for (int round = 0; round < 300; ++round) {
        const MethodDef m = testutil::random_method(rng, 10);
        const Cfg g = build_cfg(m);
        const DomTree d = compute_dominators(g);
        const auto facts = testutil::enumerate_paths(g);
        CAPTURE(emit_program(Program{{ClassDef{"R", {m}}}}));
        for (std::size_t a = 0; a < g.node_count(); ++a)
            for (std::size_t b = 0; b < g.node_count(); ++b)
                REQUIRE(d.dominates(a, b) == facts.dominates(a, b));
        for (std::size_t c = 2; c < g.node_count(); ++c)
            if (g.is_branch(c))
                REQUIRE(branch_sets(g, d, c) == testutil::oracle_branch_sets(facts, c));
    }
}

TEST_CASE("structural properties on random methods")
{
    std::mt19937_64 rng(99);
    for (int round = 0; round < 300; ++round) {
        const MethodDef m = testutil::random_method(rng, 12);
        const Cfg g = build_cfg(m);
        const DomTree d = compute_dominators(g);
        CHECK(compute_dominators(g) == d);
        for (std::size_t n = 0; n < g.node_count(); ++n) {
            if (g.is_branch(n)) {
                int t = 0, f = 0;
                for (const auto& e : g.edges())
                    if (e.from == n) {
                        t += e.kind == EdgeKind::True;
                        f += e.kind == EdgeKind::False;
                    }
                CHECK((t == 1 && f == 1));
            }
            if (n != Cfg::kEntry && d.reachable(n)) {
                REQUIRE(d.idom(n).has_value());
                CHECK(d.strictly_dominates(*d.idom(n), n));
            }
            for (std::size_t k = 0; k < g.node_count(); ++k) {
                if (d.dominates(n, k) && d.dominates(k, n))
                    CHECK(n == k);
                for (std::size_t j = 0; j < g.node_count(); ++j)
                    if (d.dominates(n, k) && d.dominates(k, j))
                        CHECK(d.dominates(n, j));
            }
            if (d.reachable(n))
                CHECK(d.dominates(n, n));
        }
        for (std::size_t c = 2; c < g.node_count(); ++c) {
            if (!g.is_branch(c))
                continue;
            const BranchSets b = branch_sets(g, d, c);
            for (std::size_t s : b.true_branch) {
                CHECK(std::find(b.false_branch.begin(), b.false_branch.end(), s) == b.false_branch.end());
                CHECK(d.strictly_dominates(c, Cfg::node_of(s)));
            }
            for (std::size_t s : b.false_branch)
                CHECK(d.strictly_dominates(c, Cfg::node_of(s)));
        }
    }
}

TEST_CASE("graphviz output names nodes by label")
{
    const Program p = parse_program("class A { entry m() { l0: if x == 1 goto l1 l1: return } }");
    const Cfg g = build_cfg(only_method(p));
    const std::string dot = g.to_dot("m");
    CHECK(dot.find("digraph") != std::string::npos);
    CHECK(dot.find("\"l0\"") != std::string::npos);
    CHECK(g.node_name(Cfg::kEntry) == "Entry");
    CHECK(compute_dominators(g).to_dot(g, "dom").find("digraph") != std::string::npos);
}
