#pragma once

// Small expression language for defining functions rho(z, conj z).
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' ['('] ['-'] integer [')'])?
//   primary := number | 'i' | 'z'k | func '(' expr ')' | '(' expr ')'
//   func    := abs2 | re | im | conj
//
// z_k and conj(z_k) are independent symbols (Wirtinger calculus), so the
// complex gradient d/dz and the Hessians d2/dz dz, d2/dz dzbar are obtained by
// plain symbolic differentiation of the tree. conj, re, im and abs2 are
// rewritten into the core node set at parse time.

#include <cctype>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "kob/core.hpp"

namespace kob::expr {

enum class Op { Const, Var, Add, Sub, Mul, Div, Neg, Pow };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    Op op = Op::Const;
    cplx value{};        // Const
    int var = 0;         // Var: 0-based coordinate index
    bool conjugated = false;
    int exponent = 0;    // Pow
    NodePtr a, b;
};

inline Node node(Op op)
{
    Node n;
    n.op = op;
    return n;
}

inline NodePtr constant(cplx c)
{
    Node n = node(Op::Const);
    n.value = c;
    return std::make_shared<Node>(n);
}

inline NodePtr variable(int k, bool conjugated)
{
    Node n = node(Op::Var);
    n.var = k;
    n.conjugated = conjugated;
    return std::make_shared<Node>(n);
}

inline bool is_const(const NodePtr& n, cplx c) { return n->op == Op::Const && n->value == c; }

inline NodePtr add(NodePtr a, NodePtr b)
{
    if (a->op == Op::Const && b->op == Op::Const) return constant(a->value + b->value);
    if (is_const(a, 0.0)) return b;
    if (is_const(b, 0.0)) return a;
    Node n = node(Op::Add);
    n.a = std::move(a);
    n.b = std::move(b);
    return std::make_shared<Node>(n);
}

inline NodePtr neg(NodePtr a)
{
    if (a->op == Op::Const) return constant(-a->value);
    if (a->op == Op::Neg) return a->a;
    Node n = node(Op::Neg);
    n.a = std::move(a);
    return std::make_shared<Node>(n);
}

inline NodePtr sub(NodePtr a, NodePtr b)
{
    if (a->op == Op::Const && b->op == Op::Const) return constant(a->value - b->value);
    if (is_const(b, 0.0)) return a;
    if (is_const(a, 0.0)) return neg(std::move(b));
    Node n = node(Op::Sub);
    n.a = std::move(a);
    n.b = std::move(b);
    return std::make_shared<Node>(n);
}

inline NodePtr mul(NodePtr a, NodePtr b)
{
    if (a->op == Op::Const && b->op == Op::Const) return constant(a->value * b->value);
    if (is_const(a, 0.0) || is_const(b, 0.0)) return constant(0.0);
    if (is_const(a, 1.0)) return b;
    if (is_const(b, 1.0)) return a;
    Node n = node(Op::Mul);
    n.a = std::move(a);
    n.b = std::move(b);
    return std::make_shared<Node>(n);
}

inline NodePtr div(NodePtr a, NodePtr b)
{
    if (is_const(b, 0.0)) fail(Errc::ParseError, "division by constant zero");
    if (a->op == Op::Const && b->op == Op::Const) return constant(a->value / b->value);
    if (is_const(a, 0.0)) return constant(0.0);
    if (is_const(b, 1.0)) return a;
    Node n = node(Op::Div);
    n.a = std::move(a);
    n.b = std::move(b);
    return std::make_shared<Node>(n);
}

inline NodePtr pow(NodePtr a, int e)
{
    if (e == 0) return constant(1.0);
    if (e == 1) return a;
    if (a->op == Op::Const) return constant(std::pow(a->value, e));
    Node n = node(Op::Pow);
    n.a = std::move(a);
    n.exponent = e;
    return std::make_shared<Node>(n);
}

/// Complex conjugate of a tree, pushed down to the leaves.
inline NodePtr conj(const NodePtr& n)
{
    switch (n->op) {
    case Op::Const: return constant(std::conj(n->value));
    case Op::Var: return variable(n->var, !n->conjugated);
    case Op::Add: return add(conj(n->a), conj(n->b));
    case Op::Sub: return sub(conj(n->a), conj(n->b));
    case Op::Mul: return mul(conj(n->a), conj(n->b));
    case Op::Div: return div(conj(n->a), conj(n->b));
    case Op::Neg: return neg(conj(n->a));
    case Op::Pow: return pow(conj(n->a), n->exponent);
    }
    return n;
}

/// Partial derivative with respect to z_k (conjugated = false) or conj(z_k).
inline NodePtr derivative(const NodePtr& n, int k, bool conjugated)
{
    switch (n->op) {
    case Op::Const: return constant(0.0);
    case Op::Var: return constant(n->var == k && n->conjugated == conjugated ? 1.0 : 0.0);
    case Op::Add: return add(derivative(n->a, k, conjugated), derivative(n->b, k, conjugated));
    case Op::Sub: return sub(derivative(n->a, k, conjugated), derivative(n->b, k, conjugated));
    case Op::Neg: return neg(derivative(n->a, k, conjugated));
    case Op::Mul:
        return add(mul(derivative(n->a, k, conjugated), n->b), mul(n->a, derivative(n->b, k, conjugated)));
    case Op::Div: {
        auto num = sub(mul(derivative(n->a, k, conjugated), n->b), mul(n->a, derivative(n->b, k, conjugated)));
        return div(num, pow(n->b, 2));
    }
    case Op::Pow:
        return mul(mul(constant(static_cast<double>(n->exponent)), pow(n->a, n->exponent - 1)),
                   derivative(n->a, k, conjugated));
    }
    return constant(0.0);
}

inline int max_var(const NodePtr& n)
{
    switch (n->op) {
    case Op::Const: return -1;
    case Op::Var: return n->var;
    case Op::Neg:
    case Op::Pow: return max_var(n->a);
    default: return std::max(max_var(n->a), max_var(n->b));
    }
}

/// Postfix program for fast repeated evaluation.
class Program {
public:
    Program() = default;
    explicit Program(const NodePtr& root) { emit(root); }

    cplx eval(const CPoint& z) const
    {
        std::vector<cplx>& st = stack();
        st.clear();
        for (const auto& ins : code_) {
            switch (ins.op) {
            case Op::Const: st.push_back(ins.value); break;
            case Op::Var: st.push_back(ins.conjugated ? std::conj(z[ins.var]) : z[ins.var]); break;
            case Op::Neg: st.back() = -st.back(); break;
            case Op::Pow: st.back() = ipow(st.back(), ins.exponent); break;
            default: {
                const cplx rhs = st.back();
                st.pop_back();
                cplx& lhs = st.back();
                if (ins.op == Op::Add)
                    lhs += rhs;
                else if (ins.op == Op::Sub)
                    lhs -= rhs;
                else if (ins.op == Op::Mul)
                    lhs *= rhs;
                else
                    lhs /= rhs;
            }
            }
        }
        return st.empty() ? cplx(0.0) : st.back();
    }

private:
    struct Ins {
        Op op;
        cplx value;
        int var;
        bool conjugated;
        int exponent;
    };

    static std::vector<cplx>& stack()
    {
        thread_local std::vector<cplx> st;
        return st;
    }

    static cplx ipow(cplx b, int e)
    {
        if (e < 0) return 1.0 / ipow(b, -e);
        cplx r = 1.0;
        while (e) {
            if (e & 1) r *= b;
            b *= b;
            e >>= 1;
        }
        return r;
    }

    void emit(const NodePtr& n)
    {
        if (n->a) emit(n->a);
        if (n->b) emit(n->b);
        code_.push_back({n->op, n->value, n->var, n->conjugated, n->exponent});
    }

    std::vector<Ins> code_;
};

class Parser {
public:
    explicit Parser(std::string src) : s_(std::move(src)) {}

    NodePtr parse()
    {
        NodePtr e = expression();
        skip_ws();
        if (pos_ != s_.size()) error("unexpected '" + std::string(1, s_[pos_]) + "'");
        return e;
    }

private:
    [[noreturn]] void error(const std::string& msg) const
    {
        std::ostringstream os;
        os << "column " << pos_ + 1 << ": " << msg;
        fail(Errc::ParseError, os.str());
    }

    void skip_ws()
    {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool accept(char c)
    {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c)
    {
        if (!accept(c)) error(std::string("expected '") + c + "'");
    }

    NodePtr expression()
    {
        NodePtr lhs = term();
        for (;;) {
            if (accept('+'))
                lhs = add(lhs, term());
            else if (accept('-'))
                lhs = sub(lhs, term());
            else
                return lhs;
        }
    }

    NodePtr term()
    {
        NodePtr lhs = unary();
        for (;;) {
            if (accept('*'))
                lhs = mul(lhs, unary());
            else if (accept('/'))
                lhs = div(lhs, unary());
            else
                return lhs;
        }
    }

    NodePtr unary()
    {
        if (accept('-')) return neg(unary());
        if (accept('+')) return unary();
        return power();
    }

    NodePtr power()
    {
        NodePtr base = primary();
        if (!accept('^')) return base;
        const bool paren = accept('(');
        const bool negative = accept('-');
        skip_ws();
        const std::size_t start = pos_;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        if (start == pos_) error("exponent must be an integer literal");
        int e = std::stoi(s_.substr(start, pos_ - start));
        if (paren) expect(')');
        return pow(base, negative ? -e : e);
    }

    NodePtr primary()
    {
        skip_ws();
        if (pos_ >= s_.size()) error("unexpected end of expression");
        const char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr e = expression();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
        error("unexpected '" + std::string(1, c) + "'");
    }

    NodePtr number()
    {
        const char* begin = s_.c_str() + pos_;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) error("malformed number");
        pos_ += static_cast<std::size_t>(end - begin);
        return constant(v);
    }

    NodePtr identifier()
    {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        const std::string id = s_.substr(start, pos_ - start);
        if (id == "i") return constant(cplx(0.0, 1.0));
        if (id.size() >= 2 && id[0] == 'z' && id.find_first_not_of("0123456789", 1) == std::string::npos) {
            const int k = std::stoi(id.substr(1));
            if (k < 1 || k > static_cast<int>(kMaxDim)) {
                pos_ = start;
                error("variable index out of range: " + id);
            }
            return variable(k - 1, false);
        }
        if (id == "abs2" || id == "re" || id == "im" || id == "conj") {
            expect('(');
            NodePtr arg = expression();
            expect(')');
            NodePtr c = conj(arg);
            if (id == "conj") return c;
            if (id == "abs2") return mul(arg, c);
            if (id == "re") return mul(constant(0.5), add(arg, c));
            return mul(constant(cplx(0.0, -0.5)), sub(arg, c));
        }
        pos_ = start;
        error("unknown identifier '" + id + "'");
    }

    std::string s_;
    std::size_t pos_ = 0;
};

inline NodePtr parse(const std::string& src) { return Parser(src).parse(); }

} // namespace kob::expr
