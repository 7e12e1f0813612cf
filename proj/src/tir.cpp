#include "shso/tir.hpp"

#include <cctype>
#include <charconv>
#include <map>
#include <set>
#include <sstream>

namespace shso {

std::string make_signature(std::string_view cls, std::string_view method, std::size_t arity)
{
    std::string out;
    out.reserve(cls.size() + method.size() + 4);
    out.append(cls).append(".").append(method).append("/").append(std::to_string(arity));
    return out;
}

std::string CallExpr::signature() const { return make_signature(cls, method, args.size()); }

std::string MethodDef::signature() const { return make_signature(cls, name, params.size()); }

std::optional<std::size_t> MethodDef::index_of(std::string_view label) const
{
    for (std::size_t i = 0; i < body.size(); ++i)
        if (body[i].label == label)
            return i;
    return std::nullopt;
}

std::vector<std::string> If::condition_vars() const
{
    std::vector<std::string> vars{lhs};
    if (const auto* v = std::get_if<Var>(&rhs); v && v->name != lhs)
        vars.push_back(v->name);
    return vars;
}

const MethodDef* Program::find_method(std::string_view signature) const
{
    for (const auto& cls : classes)
        for (const auto& m : cls.methods)
            if (m.signature() == signature)
                return &m;
    return nullptr;
}

std::vector<const MethodDef*> Program::methods() const
{
    std::vector<const MethodDef*> out;
    for (const auto& cls : classes)
        for (const auto& m : cls.methods)
            out.push_back(&m);
    return out;
}

SyntaxError::SyntaxError(std::size_t line, std::size_t column, const std::string& message)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
      line_(line),
      column_(column)
{
}

// ---------------------------------------------------------------------------
// Lexer

namespace {

enum class Tok { Ident, Keyword, Int, String, Punct, RelOp, BinOp, End };

struct Token {
    Tok kind = Tok::End;
    std::string text;
    std::int64_t ival = 0;
    std::size_t line = 1;
    std::size_t col = 1;
};

const std::set<std::string, std::less<>> kKeywords = {
    "class", "entry", "if", "goto", "return", "call", "setfield", "field"};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run()
    {
        std::vector<Token> out;
        for (;;) {
            skip_space();
            Token t;
            t.line = line_;
            t.col = col_;
            if (pos_ >= src_.size()) {
                out.push_back(t);
                return out;
            }
            char c = src_[pos_];
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                std::size_t start = pos_;
                while (pos_ < src_.size() &&
                       (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                    advance();
                t.text = std::string(src_.substr(start, pos_ - start));
                t.kind = kKeywords.count(t.text) ? Tok::Keyword : Tok::Ident;
            } else if (std::isdigit(static_cast<unsigned char>(c))) {
                std::size_t start = pos_;
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                    advance();
                t.text = std::string(src_.substr(start, pos_ - start));
                auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.ival);
                if (ec != std::errc{})
                    throw SyntaxError(t.line, t.col, "integer literal out of range: " + t.text);
                t.kind = Tok::Int;
            } else if (c == '"') {
                t.kind = Tok::String;
                t.text = lex_string(t);
            } else if (c == '=' || c == '!' || c == '<' || c == '>') {
                advance();
                bool eq = pos_ < src_.size() && src_[pos_] == '=';
                if (c == '=' && !eq) {
                    t.kind = Tok::Punct;
                    t.text = "=";
                } else if (c == '!' && !eq) {
                    throw SyntaxError(t.line, t.col, "expected '!='");
                } else {
                    if (eq)
                        advance();
                    t.kind = Tok::RelOp;
                    t.text = std::string(1, c) + (eq ? "=" : "");
                }
            } else if (c == '+' || c == '-' || c == '*' || c == '/' || c == '%') {
                advance();
                t.kind = Tok::BinOp;
                t.text = std::string(1, c);
            } else if (c == '{' || c == '}' || c == '(' || c == ')' || c == ',' || c == '.' || c == ':') {
                advance();
                t.kind = Tok::Punct;
                t.text = std::string(1, c);
            } else {
                throw SyntaxError(t.line, t.col, std::string("unexpected character '") + c + "'");
            }
            out.push_back(std::move(t));
        }
    }

private:
    void advance()
    {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip_space()
    {
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n')
                    advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                break;
            }
        }
    }

    std::string lex_string(const Token& t)
    {
        advance(); // opening quote
        std::string out;
        for (;;) {
            if (pos_ >= src_.size() || src_[pos_] == '\n')
                throw SyntaxError(t.line, t.col, "unterminated string literal");
            char c = src_[pos_];
            advance();
            if (c == '"')
                return out;
            if (c != '\\') {
                out.push_back(c);
                continue;
            }
            if (pos_ >= src_.size())
                throw SyntaxError(t.line, t.col, "unterminated string literal");
            char e = src_[pos_];
            advance();
            switch (e) {
            case 'n': out.push_back('\n'); break;
            case 't': out.push_back('\t'); break;
            case '"': out.push_back('"'); break;
            case '\\': out.push_back('\\'); break;
            default:
                throw SyntaxError(line_, col_ - 1, std::string("unknown escape '\\") + e + "'");
            }
        }
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t col_ = 1;
};

// ---------------------------------------------------------------------------
// Parser

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    Program program()
    {
        Program p;
        if (at_end())
            fail("expected 'class'");
        while (!at_end())
            p.classes.push_back(class_def());
        return p;
    }

private:
    const Token& peek(std::size_t ahead = 0) const
    {
        std::size_t i = std::min(pos_ + ahead, toks_.size() - 1);
        return toks_[i];
    }
    bool at_end() const { return peek().kind == Tok::End; }

    [[noreturn]] void fail(const std::string& msg) const
    {
        const Token& t = peek();
        std::string found = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
        throw SyntaxError(t.line, t.col, msg + ", found " + found);
    }

    bool is(Tok kind, std::string_view text) const
    {
        return peek().kind == kind && peek().text == text;
    }
    bool is_punct(std::string_view p) const { return is(Tok::Punct, p); }
    bool is_keyword(std::string_view k) const { return is(Tok::Keyword, k); }

    void expect_punct(std::string_view p)
    {
        if (!is_punct(p))
            fail("expected '" + std::string(p) + "'");
        ++pos_;
    }
    void expect_keyword(std::string_view k)
    {
        if (!is_keyword(k))
            fail("expected '" + std::string(k) + "'");
        ++pos_;
    }
    std::string ident(const char* what)
    {
        if (peek().kind != Tok::Ident)
            fail(std::string("expected ") + what);
        return toks_[pos_++].text;
    }

    ClassDef class_def()
    {
        expect_keyword("class");
        ClassDef c;
        c.name = ident("class name");
        expect_punct("{");
        while (!is_punct("}")) {
            if (at_end())
                fail("expected '}'");
            c.methods.push_back(method_def(c.name));
        }
        expect_punct("}");
        return c;
    }

    MethodDef method_def(const std::string& cls)
    {
        MethodDef m;
        m.cls = cls;
        if (is_keyword("entry")) {
            ++pos_;
            m.is_entry = true;
        }
        m.name = ident("method name");
        expect_punct("(");
        if (!is_punct(")")) {
            m.params.push_back(ident("parameter name"));
            while (is_punct(",")) {
                ++pos_;
                m.params.push_back(ident("parameter name"));
            }
        }
        expect_punct(")");
        expect_punct("{");
        do {
            m.body.push_back(statement());
        } while (!is_punct("}") && !at_end());
        expect_punct("}");
        return m;
    }

    Statement statement()
    {
        Statement s;
        s.label = ident("statement label");
        expect_punct(":");
        s.instr = instr();
        return s;
    }

    Instr instr()
    {
        if (is_keyword("if")) {
            ++pos_;
            If cond;
            cond.lhs = ident("condition variable");
            if (peek().kind != Tok::RelOp)
                fail("expected relational operator");
            cond.op = relop(toks_[pos_++].text);
            cond.rhs = operand();
            expect_keyword("goto");
            cond.target = ident("target label");
            return cond;
        }
        if (is_keyword("goto")) {
            ++pos_;
            return Goto{ident("target label")};
        }
        if (is_keyword("return")) {
            ++pos_;
            Return r;
            // `return x` versus `return` followed by the next `label:`.
            if (peek().kind == Tok::Ident && !(peek(1).kind == Tok::Punct && peek(1).text == ":"))
                r.var = ident("return variable");
            return r;
        }
        if (is_keyword("call")) {
            ++pos_;
            return Invoke{call_expr()};
        }
        if (is_keyword("setfield")) {
            ++pos_;
            SetField sf;
            sf.field.cls = ident("class name");
            expect_punct(".");
            sf.field.field = ident("field name");
            expect_punct("=");
            sf.value = ident("variable");
            return sf;
        }
        Assign a;
        a.target = ident("instruction");
        expect_punct("=");
        a.value = rhs();
        return a;
    }

    Rhs rhs()
    {
        if (is_keyword("call")) {
            ++pos_;
            return call_expr();
        }
        if (is_keyword("field")) {
            ++pos_;
            FieldRef f;
            f.cls = ident("class name");
            expect_punct(".");
            f.field = ident("field name");
            return f;
        }
        if (peek().kind == Tok::Ident) {
            if (peek(1).kind == Tok::Punct && peek(1).text == ".")
                return call_expr();
            std::string name = toks_[pos_++].text;
            if (peek().kind == Tok::BinOp) {
                BinOp b;
                b.lhs = std::move(name);
                b.op = binop(toks_[pos_++].text);
                b.rhs = operand();
                return b;
            }
            return Var{std::move(name)};
        }
        Operand c = constant();
        if (auto* i = std::get_if<std::int64_t>(&c))
            return *i;
        return std::get<std::string>(c);
    }

    Operand operand()
    {
        if (peek().kind == Tok::Ident)
            return Var{toks_[pos_++].text};
        return constant();
    }

    Operand constant()
    {
        if (peek().kind == Tok::String)
            return toks_[pos_++].text;
        bool negative = false;
        if (is(Tok::BinOp, "-")) {
            negative = true;
            ++pos_;
        }
        if (peek().kind != Tok::Int)
            fail("expected operand");
        std::int64_t v = toks_[pos_++].ival;
        return negative ? -v : v;
    }

    CallExpr call_expr()
    {
        CallExpr c;
        c.cls = ident("class name");
        expect_punct(".");
        c.method = ident("method name");
        expect_punct("(");
        if (!is_punct(")")) {
            c.args.push_back(ident("argument variable"));
            while (is_punct(",")) {
                ++pos_;
                c.args.push_back(ident("argument variable"));
            }
        }
        expect_punct(")");
        return c;
    }

    static RelOp relop(const std::string& t)
    {
        if (t == "==") return RelOp::Eq;
        if (t == "!=") return RelOp::Ne;
        if (t == "<") return RelOp::Lt;
        if (t == "<=") return RelOp::Le;
        if (t == ">") return RelOp::Gt;
        return RelOp::Ge;
    }

    static BinaryOp binop(const std::string& t)
    {
        switch (t[0]) {
        case '+': return BinaryOp::Add;
        case '-': return BinaryOp::Sub;
        case '*': return BinaryOp::Mul;
        case '/': return BinaryOp::Div;
        default: return BinaryOp::Rem;
        }
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

std::string quote(const std::string& s)
{
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        default: out.push_back(c);
        }
    }
    out.push_back('"');
    return out;
}

std::string emit_operand(const Operand& op)
{
    if (const auto* v = std::get_if<Var>(&op))
        return v->name;
    if (const auto* i = std::get_if<std::int64_t>(&op))
        return std::to_string(*i);
    return quote(std::get<std::string>(op));
}

std::string emit_call(const CallExpr& c)
{
    std::string out = c.cls + "." + c.method + "(";
    for (std::size_t i = 0; i < c.args.size(); ++i) {
        if (i)
            out += ", ";
        out += c.args[i];
    }
    return out + ")";
}

} // namespace

Program parse_program(std::string_view text)
{
    Program p = Parser(Lexer(text).run()).program();
    validate_program(p);
    return p;
}

void validate_program(const Program& program)
{
    std::set<std::string> class_names;
    std::set<std::string> signatures;
    bool has_entry = false;
    for (const auto& cls : program.classes) {
        if (!class_names.insert(cls.name).second)
            throw ValidationError("duplicate class " + cls.name);
        for (const auto& m : cls.methods) {
            const std::string sig = m.signature();
            if (!signatures.insert(sig).second)
                throw ValidationError("duplicate method " + sig);
            has_entry = has_entry || m.is_entry;
            if (m.body.empty())
                throw ValidationError("method " + sig + " has no statements");
            std::set<std::string> params;
            for (const auto& p : m.params)
                if (!params.insert(p).second)
                    throw ValidationError("duplicate parameter " + p + " in " + sig);
            std::set<std::string> labels;
            for (const auto& s : m.body)
                if (!labels.insert(s.label).second)
                    throw ValidationError("duplicate label " + s.label + " in " + sig);
            for (const auto& s : m.body) {
                const std::string* target = nullptr;
                if (const auto* i = std::get_if<If>(&s.instr))
                    target = &i->target;
                else if (const auto* g = std::get_if<Goto>(&s.instr))
                    target = &g->target;
                if (target && !labels.count(*target))
                    throw ValidationError("undefined label " + *target + " in " + sig);
            }
            const Instr& last = m.body.back().instr;
            if (!std::holds_alternative<Return>(last) && !std::holds_alternative<Goto>(last))
                throw ValidationError("method " + sig + " falls off the end after label " +
                                      m.body.back().label);
        }
    }
    if (!has_entry)
        throw ValidationError("no method is marked entry");
}

std::string_view relop_text(RelOp op)
{
    switch (op) {
    case RelOp::Eq: return "==";
    case RelOp::Ne: return "!=";
    case RelOp::Lt: return "<";
    case RelOp::Le: return "<=";
    case RelOp::Gt: return ">";
    case RelOp::Ge: return ">=";
    }
    return "?";
}

std::string_view binop_text(BinaryOp op)
{
    switch (op) {
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
    case BinaryOp::Rem: return "%";
    }
    return "?";
}

std::string emit_condition(const If& cond)
{
    return cond.lhs + " " + std::string(relop_text(cond.op)) + " " + emit_operand(cond.rhs);
}

std::string emit_instr(const Instr& instr)
{
    struct Visitor {
        std::string operator()(const Assign& a) const
        {
            std::string rhs = std::visit(
                [](const auto& v) -> std::string {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, CallExpr>)
                        return emit_call(v);
                    else if constexpr (std::is_same_v<T, Var>)
                        return v.name;
                    else if constexpr (std::is_same_v<T, std::int64_t>)
                        return std::to_string(v);
                    else if constexpr (std::is_same_v<T, std::string>)
                        return quote(v);
                    else if constexpr (std::is_same_v<T, FieldRef>)
                        return "field " + v.qualified_name();
                    else
                        return v.lhs + " " + std::string(binop_text(v.op)) + " " + emit_operand(v.rhs);
                },
                a.value);
            return a.target + " = " + rhs;
        }
        std::string operator()(const If& i) const { return "if " + emit_condition(i) + " goto " + i.target; }
        std::string operator()(const Goto& g) const { return "goto " + g.target; }
        std::string operator()(const Return& r) const { return r.var ? "return " + *r.var : "return"; }
        std::string operator()(const Invoke& c) const { return "call " + emit_call(c.call); }
        std::string operator()(const SetField& s) const
        {
            return "setfield " + s.field.qualified_name() + " = " + s.value;
        }
    };
    return std::visit(Visitor{}, instr);
}

std::string emit_program(const Program& program)
{
    std::ostringstream out;
    for (std::size_t ci = 0; ci < program.classes.size(); ++ci) {
        const auto& cls = program.classes[ci];
        if (ci)
            out << '\n';
        out << "class " << cls.name << " {\n";
        for (std::size_t mi = 0; mi < cls.methods.size(); ++mi) {
            const auto& m = cls.methods[mi];
            if (mi)
                out << '\n';
            out << "  " << (m.is_entry ? "entry " : "") << m.name << "(";
            for (std::size_t i = 0; i < m.params.size(); ++i)
                out << (i ? ", " : "") << m.params[i];
            out << ") {\n";
            for (const auto& s : m.body)
                out << "    " << s.label << ": " << emit_instr(s.instr) << '\n';
            out << "  }\n";
        }
        out << "}\n";
    }
    return out.str();
}

std::vector<std::string> used_vars(const Instr& instr)
{
    std::vector<std::string> out;
    auto operand = [&](const Operand& op) {
        if (const auto* v = std::get_if<Var>(&op))
            out.push_back(v->name);
    };
    if (const auto* a = std::get_if<Assign>(&instr)) {
        if (const auto* c = std::get_if<CallExpr>(&a->value))
            out = c->args;
        else if (const auto* v = std::get_if<Var>(&a->value))
            out.push_back(v->name);
        else if (const auto* b = std::get_if<BinOp>(&a->value)) {
            out.push_back(b->lhs);
            operand(b->rhs);
        }
    } else if (const auto* i = std::get_if<If>(&instr)) {
        out.push_back(i->lhs);
        operand(i->rhs);
    } else if (const auto* r = std::get_if<Return>(&instr)) {
        if (r->var)
            out.push_back(*r->var);
    } else if (const auto* c = std::get_if<Invoke>(&instr)) {
        out = c->call.args;
    } else if (const auto* s = std::get_if<SetField>(&instr)) {
        out.push_back(s->value);
    }
    return out;
}

std::optional<std::string> defined_var(const Instr& instr)
{
    if (const auto* a = std::get_if<Assign>(&instr))
        return a->target;
    return std::nullopt;
}

const CallExpr* call_of(const Instr& instr)
{
    if (const auto* a = std::get_if<Assign>(&instr))
        return std::get_if<CallExpr>(&a->value);
    if (const auto* c = std::get_if<Invoke>(&instr))
        return &c->call;
    return nullptr;
}

} // namespace shso
