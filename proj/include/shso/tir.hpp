// In-memory model of the three-address IR ("TIR") and its text form.
//
// A program is a list of classes, each holding statically named methods.
// Method bodies are flat lists of labeled statements; control transfers
// only through `if ... goto`, `goto` and `return`, and an `if` falls
// through to the next statement when its condition is false.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace shso {

struct Var {
    std::string name;
    bool operator==(const Var&) const = default;
};

/// Right-hand operand of a condition or binary operation.
using Operand = std::variant<Var, std::int64_t, std::string>;

struct FieldRef {
    std::string cls;
    std::string field;

    std::string qualified_name() const { return cls + "." + field; }
    bool operator==(const FieldRef&) const = default;
};

struct CallExpr {
    std::string cls;
    std::string method;
    std::vector<std::string> args;

    /// `Class.method`, the form used by the catalog.
    std::string qualified_name() const { return cls + "." + method; }
    /// `Class.method/arity`, the form that identifies a method definition.
    std::string signature() const;
    bool operator==(const CallExpr&) const = default;
};

enum class BinaryOp { Add, Sub, Mul, Div, Rem };
enum class RelOp { Eq, Ne, Lt, Le, Gt, Ge };

struct BinOp {
    std::string lhs;
    BinaryOp op = BinaryOp::Add;
    Operand rhs;
    bool operator==(const BinOp&) const = default;
};

using Rhs = std::variant<CallExpr, Var, std::int64_t, std::string, FieldRef, BinOp>;

struct Assign {
    std::string target;
    Rhs value;
    bool operator==(const Assign&) const = default;
};

struct If {
    std::string lhs;
    RelOp op = RelOp::Eq;
    Operand rhs;
    std::string target;

    /// Variables read by the condition, in source order, without repeats.
    std::vector<std::string> condition_vars() const;
    bool operator==(const If&) const = default;
};

struct Goto {
    std::string target;
    bool operator==(const Goto&) const = default;
};

struct Return {
    std::optional<std::string> var;
    bool operator==(const Return&) const = default;
};

/// A call whose result is discarded (`call C.m(args)`).
struct Invoke {
    CallExpr call;
    bool operator==(const Invoke&) const = default;
};

struct SetField {
    FieldRef field;
    std::string value;
    bool operator==(const SetField&) const = default;
};

using Instr = std::variant<Assign, If, Goto, Return, Invoke, SetField>;

struct Statement {
    std::string label;
    Instr instr;
    bool operator==(const Statement&) const = default;
};

struct MethodDef {
    std::string cls;
    std::string name;
    std::vector<std::string> params;
    bool is_entry = false;
    std::vector<Statement> body;

    std::string qualified_name() const { return cls + "." + name; }
    std::string signature() const;
    std::optional<std::size_t> index_of(std::string_view label) const;
    bool operator==(const MethodDef&) const = default;
};

struct ClassDef {
    std::string name;
    std::vector<MethodDef> methods;
    bool operator==(const ClassDef&) const = default;
};

struct Program {
    std::vector<ClassDef> classes;

    /// Looks a method up by `Class.method/arity`.
    const MethodDef* find_method(std::string_view signature) const;
    /// All methods in class order, then declaration order.
    std::vector<const MethodDef*> methods() const;
    bool operator==(const Program&) const = default;
};

std::string make_signature(std::string_view cls, std::string_view method, std::size_t arity);

class SyntaxError : public std::runtime_error {
public:
    SyntaxError(std::size_t line, std::size_t column, const std::string& message);
    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parses and validates TIR source. Throws SyntaxError or ValidationError.
Program parse_program(std::string_view text);

/// Checks the structural invariants parse_program guarantees. Throws ValidationError.
void validate_program(const Program& program);

std::string emit_program(const Program& program);
std::string emit_instr(const Instr& instr);
std::string emit_condition(const If& cond);
std::string_view relop_text(RelOp op);
std::string_view binop_text(BinaryOp op);

/// Variables an instruction reads, in source order (may repeat).
std::vector<std::string> used_vars(const Instr& instr);
/// Variable an instruction writes, if any.
std::optional<std::string> defined_var(const Instr& instr);
/// The call an instruction performs, if any.
const CallExpr* call_of(const Instr& instr);

} // namespace shso
