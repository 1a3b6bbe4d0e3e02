#include "datamkt/expr.hpp"

#include <cassert>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

namespace datamkt {

namespace detail {

enum class NodeKind : std::uint8_t { Number, Variable, Neg, Add, Sub, Mul, Div, Pow, Exp, Log, Sqrt };

struct ExprNode {
    NodeKind kind;
    double number = 0.0;
    int var_index = -1;
    std::string var_name;
    std::shared_ptr<const ExprNode> lhs, rhs;
};

using NodePtr = std::shared_ptr<const ExprNode>;

namespace {

NodePtr make_number(double v) {
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::Number;
    n->number = v;
    return n;
}

NodePtr make_variable(int index, std::string name) {
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::Variable;
    n->var_index = index;
    n->var_name = std::move(name);
    return n;
}

NodePtr make_unary(NodeKind kind, NodePtr operand) {
    if (kind == NodeKind::Neg && operand->kind == NodeKind::Number)
        return make_number(-operand->number);
    auto n = std::make_shared<ExprNode>();
    n->kind = kind;
    n->lhs = std::move(operand);
    return n;
}

bool is_number(const NodePtr& n, double v) {
    return n->kind == NodeKind::Number && n->number == v;
}

double fold_binary(NodeKind kind, double a, double b) {
    switch (kind) {
    case NodeKind::Add: return a + b;
    case NodeKind::Sub: return a - b;
    case NodeKind::Mul: return a * b;
    case NodeKind::Div: return a / b;
    case NodeKind::Pow: return std::pow(a, b);
    default: assert(false); return 0.0;
    }
}

NodePtr make_binary(NodeKind kind, NodePtr lhs, NodePtr rhs) {
    if (lhs->kind == NodeKind::Number && rhs->kind == NodeKind::Number) {
        const double v = fold_binary(kind, lhs->number, rhs->number);
        if (std::isfinite(v))
            return make_number(v);
    }
    // Identity folds that never drop a sub-expression.
    if (kind == NodeKind::Mul && is_number(rhs, 1.0)) return lhs;
    if (kind == NodeKind::Mul && is_number(lhs, 1.0)) return rhs;
    if (kind == NodeKind::Add && is_number(rhs, 0.0)) return lhs;
    if (kind == NodeKind::Add && is_number(lhs, 0.0)) return rhs;
    if (kind == NodeKind::Sub && is_number(rhs, 0.0)) return lhs;
    if (kind == NodeKind::Div && is_number(rhs, 1.0)) return lhs;
    if (kind == NodeKind::Pow && is_number(rhs, 1.0)) return lhs;
    auto n = std::make_shared<ExprNode>();
    n->kind = kind;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    return n;
}

int precedence(NodeKind kind) {
    switch (kind) {
    case NodeKind::Add:
    case NodeKind::Sub: return 1;
    case NodeKind::Mul:
    case NodeKind::Div: return 2;
    case NodeKind::Neg: return 3;
    case NodeKind::Pow: return 4;
    default: return 5;
    }
}

void print_node(const ExprNode& n, std::ostringstream& out) {
    auto child = [&](const ExprNode& c, bool needs_paren) {
        if (needs_paren) out << '(';
        print_node(c, out);
        if (needs_paren) out << ')';
    };
    switch (n.kind) {
    case NodeKind::Number: {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.17g", n.number);
        out << buf;
        break;
    }
    case NodeKind::Variable:
        out << n.var_name;
        break;
    case NodeKind::Neg:
        out << '-';
        child(*n.lhs, precedence(n.lhs->kind) < precedence(NodeKind::Neg));
        break;
    case NodeKind::Exp:
    case NodeKind::Log:
    case NodeKind::Sqrt:
        out << (n.kind == NodeKind::Exp ? "exp" : n.kind == NodeKind::Log ? "log" : "sqrt");
        out << '(';
        print_node(*n.lhs, out);
        out << ')';
        break;
    default: {
        const int prec = precedence(n.kind);
        const char op = n.kind == NodeKind::Add   ? '+'
                        : n.kind == NodeKind::Sub ? '-'
                        : n.kind == NodeKind::Mul ? '*'
                        : n.kind == NodeKind::Div ? '/'
                                                  : '^';
        // Right operand of -, / and left operand of ^ need parens at equal
        // precedence; ^ is right-associative.
        const bool left_paren = precedence(n.lhs->kind) < prec ||
                                (n.kind == NodeKind::Pow && precedence(n.lhs->kind) == prec);
        const bool right_paren =
            precedence(n.rhs->kind) < prec ||
            (precedence(n.rhs->kind) == prec && n.kind != NodeKind::Pow && n.kind != NodeKind::Add &&
             n.kind != NodeKind::Mul);
        child(*n.lhs, left_paren);
        out << op;
        child(*n.rhs, right_paren);
        break;
    }
    }
}

std::string node_to_string(const ExprNode& n) {
    std::ostringstream out;
    print_node(n, out);
    return out.str();
}

bool is_integer_value(double v) {
    return std::isfinite(v) && v == std::floor(v) && std::abs(v) < 1e15;
}

double eval_node(const ExprNode& n, std::span<const double> values) {
    switch (n.kind) {
    case NodeKind::Number: return n.number;
    case NodeKind::Variable: return values[static_cast<std::size_t>(n.var_index)];
    case NodeKind::Neg: return -eval_node(*n.lhs, values);
    case NodeKind::Add: return eval_node(*n.lhs, values) + eval_node(*n.rhs, values);
    case NodeKind::Sub: return eval_node(*n.lhs, values) - eval_node(*n.rhs, values);
    case NodeKind::Mul: return eval_node(*n.lhs, values) * eval_node(*n.rhs, values);
    case NodeKind::Div: {
        const double num = eval_node(*n.lhs, values);
        const double den = eval_node(*n.rhs, values);
        if (den == 0.0)
            throw EvalError("division by zero", node_to_string(n));
        return num / den;
    }
    case NodeKind::Pow: {
        const double base = eval_node(*n.lhs, values);
        const double exponent = eval_node(*n.rhs, values);
        if (base < 0.0 && !is_integer_value(exponent))
            throw EvalError("pow of a negative base with non-integer exponent", node_to_string(n));
        if (base == 0.0 && exponent < 0.0)
            throw EvalError("pow of zero base with negative exponent", node_to_string(n));
        return std::pow(base, exponent);
    }
    case NodeKind::Exp: return std::exp(eval_node(*n.lhs, values));
    case NodeKind::Log: {
        const double v = eval_node(*n.lhs, values);
        if (v <= 0.0)
            throw EvalError("log of a non-positive value", node_to_string(n));
        return std::log(v);
    }
    case NodeKind::Sqrt: {
        const double v = eval_node(*n.lhs, values);
        if (v < 0.0)
            throw EvalError("sqrt of a negative value", node_to_string(n));
        return std::sqrt(v);
    }
    }
    assert(false);
    return 0.0;
}

NodePtr diff_node(const NodePtr& n, int var) {
    switch (n->kind) {
    case NodeKind::Number: return make_number(0.0);
    case NodeKind::Variable: return make_number(n->var_index == var ? 1.0 : 0.0);
    case NodeKind::Neg: return make_unary(NodeKind::Neg, diff_node(n->lhs, var));
    case NodeKind::Add: return make_binary(NodeKind::Add, diff_node(n->lhs, var), diff_node(n->rhs, var));
    case NodeKind::Sub: return make_binary(NodeKind::Sub, diff_node(n->lhs, var), diff_node(n->rhs, var));
    case NodeKind::Mul:
        return make_binary(NodeKind::Add,
                           make_binary(NodeKind::Mul, diff_node(n->lhs, var), n->rhs),
                           make_binary(NodeKind::Mul, n->lhs, diff_node(n->rhs, var)));
    case NodeKind::Div:
        // (f'g - fg') / g^2
        return make_binary(
            NodeKind::Div,
            make_binary(NodeKind::Sub, make_binary(NodeKind::Mul, diff_node(n->lhs, var), n->rhs),
                        make_binary(NodeKind::Mul, n->lhs, diff_node(n->rhs, var))),
            make_binary(NodeKind::Pow, n->rhs, make_number(2.0)));
    case NodeKind::Pow:
        if (n->rhs->kind == NodeKind::Number) {
            // c * f^(c-1) * f'
            const double c = n->rhs->number;
            return make_binary(
                NodeKind::Mul,
                make_binary(NodeKind::Mul, make_number(c),
                            make_binary(NodeKind::Pow, n->lhs, make_number(c - 1.0))),
                diff_node(n->lhs, var));
        }
        // f^g * (g' log f + g f'/f)
        return make_binary(
            NodeKind::Mul, n,
            make_binary(NodeKind::Add,
                        make_binary(NodeKind::Mul, diff_node(n->rhs, var),
                                    make_unary(NodeKind::Log, n->lhs)),
                        make_binary(NodeKind::Div,
                                    make_binary(NodeKind::Mul, n->rhs, diff_node(n->lhs, var)),
                                    n->lhs)));
    case NodeKind::Exp:
        return make_binary(NodeKind::Mul, make_unary(NodeKind::Exp, n->lhs), diff_node(n->lhs, var));
    case NodeKind::Log:
        return make_binary(NodeKind::Div, diff_node(n->lhs, var), n->lhs);
    case NodeKind::Sqrt:
        return make_binary(NodeKind::Div, diff_node(n->lhs, var),
                           make_binary(NodeKind::Mul, make_number(2.0), make_unary(NodeKind::Sqrt, n->lhs)));
    }
    assert(false);
    return nullptr;
}

bool is_function_name(std::string_view s) {
    return s == "exp" || s == "log" || s == "sqrt";
}

// Recursive-descent parser. Precedence: ^  >  unary -  >  * /  >  + -.
// All binary operators are left-associative except ^, which associates right.
class Parser {
public:
    Parser(std::string_view src, const ExprSignature& sig) : src_(src), sig_(sig) {}

    NodePtr parse() {
        NodePtr e = parse_sum();
        skip_ws();
        if (pos_ != src_.size())
            fail("unexpected trailing input", "end of input or operator");
        return e;
    }

private:
    std::string_view src_;
    const ExprSignature& sig_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what, std::string expected) {
        throw ParseError("syntax error at offset " + std::to_string(pos_) + ": " + what, pos_,
                         std::move(expected));
    }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
            ++pos_;
    }

    bool consume(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    NodePtr parse_sum() {
        NodePtr e = parse_product();
        for (;;) {
            if (consume('+'))
                e = make_binary(NodeKind::Add, e, parse_product());
            else if (consume('-'))
                e = make_binary(NodeKind::Sub, e, parse_product());
            else
                return e;
        }
    }

    NodePtr parse_product() {
        NodePtr e = parse_unary();
        for (;;) {
            if (consume('*'))
                e = make_binary(NodeKind::Mul, e, parse_unary());
            else if (consume('/'))
                e = make_binary(NodeKind::Div, e, parse_unary());
            else
                return e;
        }
    }

    NodePtr parse_unary() {
        if (consume('-'))
            return make_unary(NodeKind::Neg, parse_unary());
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_atom();
        if (consume('^'))
            return make_binary(NodeKind::Pow, base, parse_unary());
        return base;
    }

    NodePtr parse_atom() {
        skip_ws();
        if (pos_ >= src_.size())
            fail("unexpected end of input", "number, identifier, '(' or '-'");
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr e = parse_sum();
            if (!consume(')'))
                fail("unbalanced parenthesis", "')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
            return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)))
            return parse_identifier();
        fail("unexpected character '" + std::string(1, c) + "'", "number, identifier, '(' or '-'");
    }

    NodePtr parse_number() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
            ++pos_;
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                ++pos_;
        }
        if (pos_ == start || (pos_ == start + 1 && src_[start] == '.')) {
            pos_ = start;
            fail("malformed number", "decimal literal");
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t e = pos_ + 1;
            if (e < src_.size() && (src_[e] == '+' || src_[e] == '-'))
                ++e;
            std::size_t d = e;
            while (d < src_.size() && std::isdigit(static_cast<unsigned char>(src_[d])))
                ++d;
            if (d > e)
                pos_ = d; // exponent present and well-formed
        }
        double value = 0.0;
        const auto res = std::from_chars(src_.data() + start, src_.data() + pos_, value);
        if (res.ec != std::errc{} || res.ptr != src_.data() + pos_) {
            pos_ = start;
            fail("malformed number", "decimal literal");
        }
        return make_number(value);
    }

    NodePtr parse_identifier() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        const std::string name(src_.substr(start, pos_ - start));
        if (is_function_name(name)) {
            if (!consume('('))
                fail("function '" + name + "' requires an argument list", "'('");
            NodePtr arg = parse_sum();
            if (!consume(')'))
                fail("unbalanced parenthesis in call to '" + name + "'", "')'");
            const NodeKind kind = name == "exp"   ? NodeKind::Exp
                                  : name == "log" ? NodeKind::Log
                                                  : NodeKind::Sqrt;
            return make_unary(kind, arg);
        }
        if (peek() == '(') {
            pos_ = start;
            fail("unknown function '" + name + "'", "exp, log or sqrt");
        }
        const int index = sig_.index_of(name);
        if (index < 0) {
            pos_ = start;
            fail("unknown identifier '" + name + "'", "one of the declared variables");
        }
        return make_variable(index, name);
    }
};

} // namespace
} // namespace detail

ExprSignature::ExprSignature(std::initializer_list<std::string> names)
    : ExprSignature(std::vector<std::string>(names)) {}

ExprSignature::ExprSignature(std::vector<std::string> names) : names_(std::move(names)) {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        const std::string& n = names_[i];
        if (n.empty())
            throw std::invalid_argument("ExprSignature: empty variable name");
        if (!std::isalpha(static_cast<unsigned char>(n.front())))
            throw std::invalid_argument("ExprSignature: variable '" + n + "' must start with a letter");
        for (char c : n)
            if (!std::isalnum(static_cast<unsigned char>(c)))
                throw std::invalid_argument("ExprSignature: variable '" + n + "' must be alphanumeric");
        if (detail::is_function_name(n))
            throw std::invalid_argument("ExprSignature: '" + n + "' is a reserved function name");
        for (std::size_t j = 0; j < i; ++j)
            if (names_[j] == n)
                throw std::invalid_argument("ExprSignature: duplicate variable '" + n + "'");
    }
}

int ExprSignature::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name)
            return static_cast<int>(i);
    return -1;
}

Expr Expr::parse(std::string_view source, ExprSignature signature) {
    auto sig = std::make_shared<const ExprSignature>(std::move(signature));
    detail::Parser parser(source, *sig);
    return Expr(parser.parse(), std::move(sig));
}

double Expr::eval(std::span<const double> values) const {
    if (values.size() != signature_->size())
        throw std::invalid_argument("Expr::eval: expected " + std::to_string(signature_->size()) +
                                    " values, got " + std::to_string(values.size()));
    return detail::eval_node(*root_, values);
}

double Expr::eval_named(const std::map<std::string, double>& bindings) const {
    std::vector<double> values(signature_->size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto it = bindings.find(signature_->names()[i]);
        if (it == bindings.end())
            throw std::invalid_argument("Expr::eval_named: missing binding for '" +
                                        signature_->names()[i] + "'");
        values[i] = it->second;
    }
    return eval(values);
}

Expr Expr::differentiate(std::string_view var) const {
    const int index = signature_->index_of(var);
    if (index < 0)
        throw std::invalid_argument("Expr::differentiate: variable '" + std::string(var) +
                                    "' is not in the signature");
    return Expr(detail::diff_node(root_, index), signature_);
}

std::string Expr::to_string() const { return detail::node_to_string(*root_); }

CompiledExpr Expr::compile() const {
    // Local class: has the access rights of this member function, so it can
    // reach CompiledExpr's private program representation.
    struct Emitter {
        CompiledExpr& out;
        std::size_t depth = 0, max_depth = 0;

        void push(CompiledExpr::Op op, std::uint32_t index = 0) {
            out.program_.push_back({op, index});
        }

        void emit(const detail::ExprNode& n) {
            using detail::NodeKind;
            using Op = CompiledExpr::Op;
            switch (n.kind) {
            case NodeKind::Number:
                out.constants_.push_back(n.number);
                push(Op::Const, static_cast<std::uint32_t>(out.constants_.size() - 1));
                max_depth = std::max(max_depth, ++depth);
                return;
            case NodeKind::Variable:
                push(Op::Var, static_cast<std::uint32_t>(n.var_index));
                max_depth = std::max(max_depth, ++depth);
                return;
            case NodeKind::Neg:
            case NodeKind::Exp:
            case NodeKind::Log:
            case NodeKind::Sqrt:
                emit(*n.lhs);
                push(n.kind == NodeKind::Neg   ? Op::Neg
                     : n.kind == NodeKind::Exp ? Op::Exp
                     : n.kind == NodeKind::Log ? Op::Log
                                               : Op::Sqrt);
                return;
            default:
                emit(*n.lhs);
                emit(*n.rhs);
                push(n.kind == NodeKind::Add   ? Op::Add
                     : n.kind == NodeKind::Sub ? Op::Sub
                     : n.kind == NodeKind::Mul ? Op::Mul
                     : n.kind == NodeKind::Div ? Op::Div
                                               : Op::Pow);
                --depth;
                return;
            }
        }
    };
    CompiledExpr c;
    Emitter emitter{c};
    emitter.emit(*root_);
    c.stack_size_ = emitter.max_depth;
    return c;
}

double CompiledExpr::eval(std::span<const double> values) const {
    double stack[64];
    std::vector<double> heap_storage;
    double* sp = stack;
    if (stack_size_ > 64) {
        heap_storage.resize(stack_size_);
        sp = heap_storage.data();
    }
    std::size_t top = 0;
    for (const Ins& ins : program_) {
        switch (ins.op) {
        case Op::Const: sp[top++] = constants_[ins.index]; break;
        case Op::Var: sp[top++] = values[ins.index]; break;
        case Op::Neg: sp[top - 1] = -sp[top - 1]; break;
        case Op::Exp: sp[top - 1] = std::exp(sp[top - 1]); break;
        case Op::Log:
            if (sp[top - 1] <= 0.0)
                throw EvalError("log of a non-positive value");
            sp[top - 1] = std::log(sp[top - 1]);
            break;
        case Op::Sqrt:
            if (sp[top - 1] < 0.0)
                throw EvalError("sqrt of a negative value");
            sp[top - 1] = std::sqrt(sp[top - 1]);
            break;
        case Op::Add: --top; sp[top - 1] += sp[top]; break;
        case Op::Sub: --top; sp[top - 1] -= sp[top]; break;
        case Op::Mul: --top; sp[top - 1] *= sp[top]; break;
        case Op::Div:
            --top;
            if (sp[top] == 0.0)
                throw EvalError("division by zero");
            sp[top - 1] /= sp[top];
            break;
        case Op::Pow: {
            --top;
            const double base = sp[top - 1];
            const double exponent = sp[top];
            if (base < 0.0 && !detail::is_integer_value(exponent))
                throw EvalError("pow of a negative base with non-integer exponent");
            if (base == 0.0 && exponent < 0.0)
                throw EvalError("pow of zero base with negative exponent");
            sp[top - 1] = std::pow(base, exponent);
            break;
        }
        }
    }
    return sp[0];
}

} // namespace datamkt
