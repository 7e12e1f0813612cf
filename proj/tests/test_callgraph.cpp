#include "doctest.h"
#include "shso/callgraph.hpp"
#include "test_util.hpp"

using namespace shso;

namespace {

std::vector<std::string> names(const std::set<std::pair<StmtRef, std::string>>& calls)
{
    std::vector<std::string> out;
    for (const auto& [site, name] : calls)
        out.push_back(name);
    return out;
}

} // namespace

TEST_CASE("incoming edge counts")
{
    const Program p = parse_program(R"(
class A {
  entry a() {
    l0: call A.b()
    l1: x = A.b()
    l2: call A.c()
    l3: return
  }
  b() { l0: return }
  c() { l0: return }
})");
    const CallGraph cg = CallGraph::build(p);
    CHECK(cg.edges().size() == 3);
    CHECK(cg.incoming_edges("A.b/0") == 2);
    CHECK(cg.incoming_edges("A.c/0") == 1);
    CHECK(cg.incoming_edges("A.a/0") == 0);
    CHECK(cg.callers("A.b/0") == std::vector<StmtRef>{{"A.a/0", 0}, {"A.a/0", 1}});
}

TEST_CASE("calls without a body are external leaves")
{
    const Program p = parse_program("class A { entry a() { l0: id = Tel.getDeviceId() l1: return } }");
    const CallGraph cg = CallGraph::build(p);
    REQUIRE(cg.edges().size() == 1);
    CHECK(cg.edges()[0].external);
    CHECK(cg.edges()[0].callee_name == "Tel.getDeviceId");
    CHECK_FALSE(cg.is_app_method(cg.edges()[0].callee));
    CHECK(cg.sites_of_name("Tel.getDeviceId") == std::vector<StmtRef>{{"A.a/0", 0}});
    const auto nodes = cg.nodes();
    CHECK(nodes == std::vector<std::string>{"A.a/0", "Tel.getDeviceId/0"});
}

TEST_CASE("arity mismatch resolves to an external call")
{
    const Program p = parse_program("class A { entry a() { l0: call A.b(x) l1: return } b() { l0: return } }");
    const CallGraph cg = CallGraph::build(p);
    CHECK(cg.edges()[0].external);
    CHECK(cg.incoming_edges("A.b/0") == 0);
}

TEST_CASE("emulator-check shape: the payload method has one caller")
{
    const Program p = testutil::load_fixture("emulator_check.tir");
    const CallGraph cg = CallGraph::build(p);
    CHECK(cg.incoming_edges("Main.m1/0") == 1);
    CHECK(cg.incoming_edges("Main.m2/0") == 1);
    CHECK(cg.incoming_edges("Main.m/0") == 1);
}

TEST_CASE("one-hop transitivity and depth limits")
{
    const Program p = parse_program(R"(
class A {
  entry a() {
    l0: call A.f()
    l1: call Log.d()
    l2: return
  }
  f() {
    l0: x = Gps.getLongitude()
    l1: call A.g()
    l2: return
  }
  g() {
    l0: call Sms.send()
    l1: return
  }
})");
    const CallGraph cg = CallGraph::build(p);
    const std::vector<StmtRef> root = {{"A.a/0", 0}};
    CHECK(names(reachable_external_calls(cg, root, 0)).empty());
    const auto one = reachable_external_calls(cg, root, 1);
    REQUIRE(one.size() == 1);
    CHECK(one.begin()->first == StmtRef{"A.f/0", 0});
    CHECK(one.begin()->second == "Gps.getLongitude");
    CHECK(names(reachable_external_calls(cg, root, 2)) == std::vector<std::string>{"Gps.getLongitude", "Sms.send"});

    const std::vector<StmtRef> direct = {{"A.a/0", 1}};
    CHECK(names(reachable_external_calls(cg, direct, 0)) == std::vector<std::string>{"Log.d"});
}

TEST_CASE("mutual recursion terminates and reports each external once")
{
    const Program p = parse_program(R"(
class A {
  entry a() {
    l0: call A.f()
    l1: return
  }
  f() {
    l0: call Ext.one()
    l1: call A.g()
    l2: return
  }
  g() {
    l0: call Ext.two()
    l1: call A.f()
    l2: return
  }
})");
    const CallGraph cg = CallGraph::build(p);
    const std::vector<StmtRef> root = {{"A.a/0", 0}};
    CHECK(names(reachable_external_calls(cg, root)) == std::vector<std::string>{"Ext.one", "Ext.two"});
    std::size_t f_scans = 0;
    for (const auto& r : reachable_calls(cg, root))
        f_scans += r.edge->site == StmtRef{"A.f/0", 0} ? 1 : 0;
    CHECK(f_scans == 1);
}

TEST_CASE("random programs: determinism, edge count and monotonicity")
{
    std::mt19937_64 rng(5);
    for (int round = 0; round < 200; ++round) {
        const Program p = testutil::random_program(rng);
        const CallGraph cg = CallGraph::build(p);
        std::size_t calls = 0;
        std::map<std::string, std::size_t> targets;
        for (const MethodDef* m : p.methods())
            for (const auto& s : m->body)
                if (const CallExpr* c = call_of(s.instr)) {
                    ++calls;
                    ++targets[c->signature()];
                }
        CHECK(cg.edges().size() == calls);
        for (const auto& [sig, n] : targets)
            if (p.find_method(sig))
                CHECK(cg.incoming_edges(sig) == n);

        const CallGraph again = CallGraph::build(p);
        REQUIRE(again.edges().size() == cg.edges().size());
        for (std::size_t i = 0; i < cg.edges().size(); ++i) {
            CHECK(again.edges()[i].site == cg.edges()[i].site);
            CHECK(again.edges()[i].callee == cg.edges()[i].callee);
        }

        std::vector<StmtRef> roots;
        for (const MethodDef* m : p.methods())
            for (std::size_t i = 0; i < m->body.size(); ++i)
                if (testutil::uniform(rng, 0, 2) == 0)
                    roots.push_back({m->signature(), i});
        std::vector<StmtRef> fewer(roots.begin(), roots.begin() + static_cast<std::ptrdiff_t>(roots.size() / 2));
        for (std::size_t depth = 0; depth < 4; ++depth) {
            const auto small = reachable_external_calls(cg, roots, depth);
            const auto large = reachable_external_calls(cg, roots, depth + 1);
            CHECK(std::includes(large.begin(), large.end(), small.begin(), small.end()));
            const auto sub = reachable_external_calls(cg, fewer, depth);
            CHECK(std::includes(small.begin(), small.end(), sub.begin(), sub.end()));
        }
    }
}

TEST_CASE("graphviz output")
{
    const Program p = parse_program("class A { entry a() { l0: call B.x() l1: return } }");
    CHECK(CallGraph::build(p).to_dot().find("\"A.a/0\" -> \"B.x/0\"") != std::string::npos);
}
