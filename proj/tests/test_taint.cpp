#include "doctest.h"
#include "shso/corpusgen.hpp"
#include "shso/instrument.hpp"
#include "shso/taint.hpp"
#include "test_util.hpp"

using namespace shso;

namespace {

TaintResult taint_of(const Program& p, const Catalog& cat = default_catalog(), TaintOptions options = {})
{
    return run_taint(instrument(p, cat), cat, options);
}

TaintResult taint_of(const std::string& text)
{
    return taint_of(parse_program(text));
}

std::set<std::pair<std::string, std::string>> hit_sites(const TaintResult& r)
{
    std::set<std::pair<std::string, std::string>> out;
    for (const auto& h : r.hits)
        out.insert({h.method, h.label});
    return out;
}

} // namespace

TEST_CASE("country-code condition is an entry point")
{
    const TaintResult r = taint_of(testutil::load_fixture("premium_sms.tir"));
    REQUIRE(r.hits.size() == 1);
    CHECK(r.hits[0].method == "Main.onCreate/0");
    CHECK(r.hits[0].label == "l2");
    CHECK(r.hits[0].sources == std::set<std::string>{"Tel.getNetworkCountryIso"});
    REQUIRE(r.hits[0].provenance.size() == 1);
    CHECK(*r.hits[0].provenance.begin() == Provenance{"Tel.getNetworkCountryIso", "Main.onCreate/0", "l1"});
    CHECK_FALSE(r.timed_out);
}

TEST_CASE("overwriting a tainted local kills it")
{
    const TaintResult r = taint_of(R"(
class A {
  entry m() {
    l0: x = Tel.getDeviceId()
    l1: x = 0
    l2: if x == 1 goto l3
    l3: return
  }
})");
    CHECK(r.hits.empty());
}

TEST_CASE("taint reaches a helper through its formal")
{
    const TaintResult r = taint_of(R"(
class A {
  entry main() {
    l0: t = Tel.getDeviceId()
    l1: call A.helper(t)
    l2: return
  }
  helper(p) {
    l0: if p == "x" goto l1
    l1: return
  }
})");
    CHECK(hit_sites(r) == std::set<std::pair<std::string, std::string>>{{"A.helper/1", "l0"}});
}

TEST_CASE("taint flows back through return values and static fields")
{
    const TaintResult r = taint_of(R"(
class A {
  entry main() {
    l0: v = A.read()
    l1: if v == 1 goto l2
    l2: call A.store()
    l3: call A.check()
    l4: return
  }
  read() {
    l0: s = Gps.getLatitude()
    l1: return s
  }
  store() {
    l0: s = Wifi.isWifiEnabled()
    l1: setfield A.flag = s
    l2: return
  }
  check() {
    l0: f = field A.flag
    l1: if f == 1 goto l2
    l2: return
  }
})");
    REQUIRE(r.hits.size() == 2);
    CHECK(r.hits[0].method == "A.check/0");
    CHECK(r.hits[0].sources == std::set<std::string>{"Wifi.isWifiEnabled"});
    CHECK(r.hits[1].method == "A.main/0");
    CHECK(r.hits[1].sources == std::set<std::string>{"Gps.getLatitude"});
}

TEST_CASE("external calls pass argument taint to their result")
{
    const TaintResult r = taint_of(R"(
class A {
  entry m() {
    l0: model = field Build.MODEL
    l1: s = "sdk"
    l2: r = Str.contains(model, s)
    l3: if r == 1 goto l4
    l4: return
  }
})");
    REQUIRE(r.hits.size() == 1);
    CHECK(r.hits[0].sources == std::set<std::string>{"BuildClass.getBuild_MODEL"});
    CHECK(r.hits[0].label == "l3");
}

TEST_CASE("branching on taint does not taint the branch bodies")
{
    const TaintResult r = taint_of(R"(
class A {
  entry m() {
    l0: x = Tel.getDeviceId()
    l1: y = 0
    l2: if x == "1" goto l4
    l3: goto l5
    l4: y = 1
    l5: if y == 1 goto l6
    l6: return
  }
})");
    CHECK(hit_sites(r) == std::set<std::pair<std::string, std::string>>{{"A.m/0", "l2"}});
}

TEST_CASE("taint through arithmetic and loops")
{
    const TaintResult r = taint_of(R"(
class A {
  entry m() {
    l0: i = 0
    l1: c = Net.getResponseCode()
    l2: if c == 200 goto l6
    l3: i = i + 1
    l4: if i < 3 goto l1
    l5: return
    l6: d = c * 2
    l7: if d > 0 goto l8
    l8: return
  }
})");
    CHECK(hit_sites(r) == std::set<std::pair<std::string, std::string>>{{"A.m/0", "l2"}, {"A.m/0", "l7"}});
}

TEST_CASE("taint reaching on both paths merges provenance")
{
    const TaintResult r = taint_of(R"(
class A {
  entry m() {
    l0: k = Db.getInt()
    l1: if k == 0 goto l4
    l2: x = Gps.getLatitude()
    l3: goto l5
    l4: x = Net.getResponseCode()
    l5: if x == 1 goto l6
    l6: return
  }
})");
    REQUIRE(r.hits.size() == 2);
    CHECK(r.hits[1].label == "l5");
    CHECK(r.hits[1].sources == std::set<std::string>{"Gps.getLatitude", "Net.getResponseCode"});
}

TEST_CASE("zero timeout stops the analysis")
{
    const Program p = testutil::load_fixture("emulator_check.tir");
    const Catalog cat = default_catalog();
    std::string text = "class Big {\n  entry m() {\n";
    for (int i = 0; i < 5000; ++i)
        text += "    l" + std::to_string(i) + ": x = Tel.getDeviceId()\n";
    text += "    l5000: return\n  }\n}\n";
    const TaintResult r = taint_of(parse_program(text), cat, TaintOptions{std::chrono::milliseconds(0)});
    CHECK(r.timed_out);
    CHECK(r.timed_out_methods == std::vector<std::string>{"Big.m/0"});
    CHECK_FALSE(taint_of(p).timed_out);
}

TEST_CASE("empty catalog finds nothing")
{
    const Catalog empty;
    CHECK(taint_of(testutil::load_fixture("premium_sms.tir"), empty).hits.empty());
}

TEST_CASE("random programs: monotone in sources and sound against the interpreter")
{
    std::mt19937_64 rng(77);
    const Catalog cat = default_catalog();
    Catalog more = cat;
    more.add(Category::Source, "Ext.f0");
    const std::map<std::string, std::vector<Value>> domains = {
        {"Tel.getDeviceId", {std::int64_t{0}, std::int64_t{1}, std::string("us")}},
        {"Db.getString", {std::int64_t{-5}, std::string("us")}},
        {"Build.MODEL", {std::int64_t{0}, std::string("us")}},
        {"Ext.f1", {std::int64_t{2}, std::int64_t{50}}}};
    std::size_t checked = 0;
    std::size_t tagged = 0;
    for (int round = 0; round < 600; ++round) {
        Program p = testutil::random_program(rng);
        // Seed the entry with a source so most programs carry taint.
        auto& entry = p.classes[0].methods[0].body;
        entry.insert(entry.begin(), Statement{"src", Assign{"a", CallExpr{"Db", "getString", {}}}});
        const TaintResult base = taint_of(p, cat);
        const auto hits = hit_sites(base);
        const auto wider = hit_sites(taint_of(p, more));
        CHECK(std::includes(wider.begin(), wider.end(), hits.begin(), hits.end()));

        for (const auto& binding : enumerate_bindings(domains)) {
            try {
                const ExecutionTrace trace = interpret(p, binding, cat, 5000);
                CAPTURE(emit_program(p));
                for (const auto& site : trace.tagged_conditions)
                    CHECK(hits.count(site) == 1);
                tagged += trace.tagged_conditions.size();
                ++checked;
            } catch (const StepLimitExceeded&) {
            }
        }
    }
    CHECK(checked > 1000);
    CHECK(tagged > 1000);
}
