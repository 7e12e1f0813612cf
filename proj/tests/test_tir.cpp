#include "doctest.h"
#include "shso/tir.hpp"
#include "test_util.hpp"

#include <random>

using namespace shso;

TEST_CASE("minimal program parses")
{
    const Program p = parse_program("class A { entry main() { l0: return } }");
    REQUIRE(p.classes.size() == 1);
    REQUIRE(p.classes[0].methods.size() == 1);
    const MethodDef& m = p.classes[0].methods[0];
    CHECK(m.is_entry);
    CHECK(m.signature() == "A.main/0");
    REQUIRE(m.body.size() == 1);
    CHECK(std::holds_alternative<Return>(m.body[0].instr));
}

TEST_CASE("undefined goto label is reported")
{
    try {
        parse_program("class A { entry main() { l0: goto l9 } }");
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("undefined label l9") != std::string::npos);
    }
}

TEST_CASE("structural invariants are enforced")
{
    CHECK_THROWS_AS(parse_program("class A { entry m() { l0: x = 1 } }"), ValidationError);
    CHECK_THROWS_AS(parse_program("class A { m() { l0: return } }"), ValidationError);
    CHECK_THROWS_AS(parse_program("class A { entry m() { l0: return } }\nclass A { n() { l0: return } }"),
                    ValidationError);
    CHECK_THROWS_AS(parse_program("class A { entry m() { l0: return } m() { l0: return } }"), ValidationError);
    CHECK_THROWS_AS(parse_program("class A { entry m() { l0: x = 1 l0: return } }"), ValidationError);
    // Same name, different arity is a different method.
    CHECK_NOTHROW(parse_program("class A { entry m() { l0: return } m(a) { l0: return } }"));
}

TEST_CASE("syntax errors carry a position")
{
    try {
        parse_program("class A {\n  entry m() {\n    l0: x = = 1\n  }\n}");
        FAIL("expected SyntaxError");
    } catch (const SyntaxError& e) {
        CHECK(e.line() == 3);
    }
    CHECK_THROWS_AS(parse_program("class A { entry m() { l0: if x ~ 1 goto l0 } }"), SyntaxError);
    CHECK_THROWS_AS(parse_program("class A { entry m() { l0: return \"unterminated } }"), SyntaxError);
    CHECK_THROWS_AS(parse_program("class class { entry m() { l0: return } }"), SyntaxError);
}

TEST_CASE("country-code fragment: one method, five statements, one if")
{
    const Program p = parse_program(R"(
class Main {
  entry onCreate() {
    l0: countryCode = Tel.getNetworkCountryIso()
    l1: if countryCode == "us" goto l3
    l2: return
    l3: call Sms.send(countryCode)
    l4: return
  }
})");
    REQUIRE(p.methods().size() == 1);
    const MethodDef& m = *p.methods()[0];
    CHECK(m.body.size() == 5);
    int ifs = 0;
    for (const auto& s : m.body)
        ifs += std::holds_alternative<If>(s.instr) ? 1 : 0;
    CHECK(ifs == 1);
    const auto& a = std::get<Assign>(m.body[0].instr);
    CHECK(std::get<CallExpr>(a.value).qualified_name() == "Tel.getNetworkCountryIso");
    const auto& c = std::get<If>(m.body[1].instr);
    CHECK(c.op == RelOp::Eq);
    CHECK(std::get<std::string>(c.rhs) == "us");
    CHECK(c.condition_vars() == std::vector<std::string>{"countryCode"});
}

TEST_CASE("every statement form parses")
{
    const Program p = parse_program(R"(
# comment line
class K {
  entry run(a, b) {
    l0: x = a            # trailing comment
    l1: y = -42
    l2: s = "q\"uote"
    l3: f = field App.counter
    l4: z = x * y
    l5: w = z - 3
    l6: r = K.helper(x, s)
    l7: setfield App.counter = w
    l8: if a != b goto l10
    l9: if x >= 0 goto l11
    l10: goto l11
    l11: call Log.d()
    l12: return r
  }
  helper(p, q) {
    l0: return
  }
})");
    const MethodDef& m = *p.find_method("K.run/2");
    CHECK(std::get<std::int64_t>(std::get<Assign>(m.body[1].instr).value) == -42);
    CHECK(std::get<std::string>(std::get<Assign>(m.body[2].instr).value) == "q\"uote");
    CHECK(std::get<FieldRef>(std::get<Assign>(m.body[3].instr).value).qualified_name() == "App.counter");
    CHECK(std::get<BinOp>(std::get<Assign>(m.body[4].instr).value).op == BinaryOp::Mul);
    CHECK(std::get<If>(m.body[8].instr).condition_vars() == std::vector<std::string>{"a", "b"});
    CHECK(std::get<Return>(m.body[12].instr).var == std::optional<std::string>("r"));
    CHECK(p.find_method("K.helper/2") != nullptr);
    CHECK(p.find_method("K.helper/1") == nullptr);
}

TEST_CASE("condition variables are an ordered set")
{
    const Program p = parse_program("class A { entry m() { l0: if x == x goto l1 l1: return } }");
    CHECK(std::get<If>(p.methods()[0]->body[0].instr).condition_vars() == std::vector<std::string>{"x"});
}

TEST_CASE("use and def helpers")
{
    const Program p = parse_program(
        "class A { entry m() { l0: y = A.f(a, b, a) l1: setfield A.g = y l2: if y < z goto l3 l3: return y } "
        "f(p, q, r) { l0: return } }");
    const auto& body = p.methods()[0]->body;
    CHECK(used_vars(body[0].instr) == std::vector<std::string>{"a", "b", "a"});
    CHECK(defined_var(body[0].instr) == std::optional<std::string>("y"));
    CHECK(used_vars(body[1].instr) == std::vector<std::string>{"y"});
    CHECK_FALSE(defined_var(body[1].instr).has_value());
    CHECK(used_vars(body[2].instr) == std::vector<std::string>{"y", "z"});
    CHECK(used_vars(body[3].instr) == std::vector<std::string>{"y"});
    REQUIRE(call_of(body[0].instr) != nullptr);
    CHECK(call_of(body[0].instr)->signature() == "A.f/3");
    CHECK(call_of(body[2].instr) == nullptr);
}

TEST_CASE("round trip of the minimal program")
{
    const Program p = parse_program("class A { entry main() { l0: return } }");
    CHECK(parse_program(emit_program(p)) == p);
}

TEST_CASE("emit preserves class order and is stable")
{
    const Program p = parse_program(
        "class Z { entry a() { l0: call Y.b() l1: return } } class Y { b() { l0: return } }");
    const std::string once = emit_program(p);
    CHECK(once.find("class Z") < once.find("class Y"));
    CHECK(emit_program(parse_program(once)) == once);
}

TEST_CASE("round trip on random programs")
{
    std::mt19937_64 rng(7);
    for (int i = 0; i < 300; ++i) {
        const Program p = testutil::random_program(rng);
        const std::string text = emit_program(p);
        CAPTURE(text);
        CHECK(parse_program(text) == p);
    }
}
