#include "lddmd/ad.hpp"

#include <cmath>
#include <string>

namespace lddmd::ad {

namespace {

// Forward rule shared by recording and replay so the two agree bit-for-bit.
double evaluate(Op op, double a, double b, double c) {
    switch (op) {
        case Op::Add: return a + b;
        case Op::Sub: return a - b;
        case Op::Mul: return a * b;
        case Op::Div: return a / b;
        case Op::Neg: return -a;
        case Op::AddC: return a + c;
        case Op::RSubC: return c - a;
        case Op::MulC: return a * c;
        case Op::DivC: return a / c;
        case Op::RDivC: return c / a;
        case Op::Sin: return std::sin(a);
        case Op::Cos: return std::cos(a);
        case Op::Exp: return std::exp(a);
        case Op::Log: return std::log(a);
        case Op::Square: return a * a;
        case Op::Softplus: return lddmd::softplus(a);
        case Op::Sqrt: return std::sqrt(a);
        case Op::Abs: return std::abs(a);
        case Op::WrapAngle: return lddmd::wrap_angle(a);
        case Op::Leaf:
        case Op::Const: break;
    }
    return a;
}

Tape& tape_of(const Var& a) {
    if (a.tape() == nullptr) {
        throw StateError("ad: operation on a Var that belongs to no tape");
    }
    a.tape()->check(a);
    return *a.tape();
}

Tape& tape_of(const Var& a, const Var& b) {
    Tape& t = tape_of(a);
    if (b.tape() != &t) {
        throw StateError("ad: operands belong to different tapes");
    }
    t.check(b);
    return t;
}

Var unary(Op op, const Var& a, double derivative) {
    Tape& t = tape_of(a);
    return t.push(op, evaluate(op, a.value(), 0.0, 0.0), a.index(), derivative);
}

Var with_const(Op op, const Var& a, double c, double derivative) {
    Tape& t = tape_of(a);
    return t.push(op, evaluate(op, a.value(), 0.0, c), a.index(), derivative, kNoParent, 0.0, c);
}

}  // namespace

double Var::value() const {
    if (tape_ == nullptr) {
        throw StateError("ad: Var is not attached to a tape");
    }
    return tape_->value(*this);
}

double Var::adjoint() const {
    if (tape_ == nullptr) {
        throw StateError("ad: Var is not attached to a tape");
    }
    return tape_->adjoint(*this);
}

void Tape::check(const Var& v) const {
    if (v.generation() != generation_ || v.index() >= nodes_.size()) {
        throw StateError("ad: stale Var (tape was cleared or never evaluated)");
    }
}

Var Tape::push(Op op, double value, std::uint32_t p0, double d0, std::uint32_t p1, double d1,
               double aux) {
    Node n;
    n.value = value;
    n.d0 = d0;
    n.d1 = d1;
    n.aux = aux;
    n.p0 = p0;
    n.p1 = p1;
    n.op = op;
    nodes_.push_back(n);
    return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1), generation_);
}

Var Tape::variable(double value) {
    if (!std::isfinite(value)) {
        throw DomainError("ad: cannot lift non-finite value " + std::to_string(value));
    }
    Var v = push(Op::Leaf, value, kNoParent, 0.0);
    variables_.push_back(v.index());
    return v;
}

Var Tape::constant(double value) {
    if (!std::isfinite(value)) {
        throw DomainError("ad: cannot lift non-finite value " + std::to_string(value));
    }
    return push(Op::Const, value, kNoParent, 0.0);
}

double Tape::value(const Var& v) const {
    check(v);
    return nodes_[v.index()].value;
}

double Tape::adjoint(const Var& v) const {
    check(v);
    return nodes_[v.index()].adjoint;
}

void Tape::reset_adjoints() {
    for (auto& n : nodes_) {
        n.adjoint = 0.0;
    }
}

void Tape::backward(const Var& root) {
    if (root.tape() != this) {
        throw StateError("ad: backward root belongs to a different tape");
    }
    check(root);
    reset_adjoints();
    nodes_[root.index()].adjoint = 1.0;
    for (std::uint32_t i = root.index() + 1; i-- > 0;) {
        const Node& n = nodes_[i];
        if (n.adjoint == 0.0) {
            continue;
        }
        if (n.p0 != kNoParent) {
            nodes_[n.p0].adjoint += n.adjoint * n.d0;
        }
        if (n.p1 != kNoParent) {
            nodes_[n.p1].adjoint += n.adjoint * n.d1;
        }
    }
}

void Tape::clear() {
    nodes_.clear();
    variables_.clear();
    ++generation_;
}

void Tape::replay() {
    for (auto& n : nodes_) {
        if (n.op == Op::Leaf || n.op == Op::Const) {
            continue;
        }
        const double a = nodes_[n.p0].value;
        const double b = n.p1 != kNoParent ? nodes_[n.p1].value : 0.0;
        n.value = evaluate(n.op, a, b, n.aux);
    }
}

std::vector<double> Tape::gradient() const {
    std::vector<double> g;
    g.reserve(variables_.size());
    for (auto idx : variables_) {
        g.push_back(nodes_[idx].adjoint);
    }
    return g;
}

Var operator+(const Var& a, const Var& b) {
    Tape& t = tape_of(a, b);
    return t.push(Op::Add, evaluate(Op::Add, a.value(), b.value(), 0.0), a.index(), 1.0, b.index(), 1.0);
}

Var operator-(const Var& a, const Var& b) {
    Tape& t = tape_of(a, b);
    return t.push(Op::Sub, evaluate(Op::Sub, a.value(), b.value(), 0.0), a.index(), 1.0, b.index(), -1.0);
}

Var operator*(const Var& a, const Var& b) {
    Tape& t = tape_of(a, b);
    const double av = a.value();
    const double bv = b.value();
    return t.push(Op::Mul, evaluate(Op::Mul, av, bv, 0.0), a.index(), bv, b.index(), av);
}

Var operator/(const Var& a, const Var& b) {
    Tape& t = tape_of(a, b);
    const double av = a.value();
    const double bv = b.value();
    if (bv == 0.0) {
        throw DomainError("ad: division by zero");
    }
    return t.push(Op::Div, evaluate(Op::Div, av, bv, 0.0), a.index(), 1.0 / bv, b.index(), -av / (bv * bv));
}

Var operator-(const Var& a) { return unary(Op::Neg, a, -1.0); }
Var operator+(const Var& a, double c) { return with_const(Op::AddC, a, c, 1.0); }
Var operator+(double c, const Var& a) { return with_const(Op::AddC, a, c, 1.0); }
Var operator-(const Var& a, double c) { return with_const(Op::AddC, a, -c, 1.0); }
Var operator-(double c, const Var& a) { return with_const(Op::RSubC, a, c, -1.0); }
Var operator*(const Var& a, double c) { return with_const(Op::MulC, a, c, c); }
Var operator*(double c, const Var& a) { return with_const(Op::MulC, a, c, c); }

Var operator/(const Var& a, double c) {
    if (c == 0.0) {
        throw DomainError("ad: division by zero");
    }
    return with_const(Op::DivC, a, c, 1.0 / c);
}

Var operator/(double c, const Var& a) {
    const double av = a.value();
    if (av == 0.0) {
        throw DomainError("ad: division by zero");
    }
    return with_const(Op::RDivC, a, c, -c / (av * av));
}

Var sin(const Var& a) { return unary(Op::Sin, a, std::cos(a.value())); }
Var cos(const Var& a) { return unary(Op::Cos, a, -std::sin(a.value())); }

Var exp(const Var& a) {
    Tape& t = tape_of(a);
    const double v = std::exp(a.value());
    return t.push(Op::Exp, v, a.index(), v);
}

Var log(const Var& a) {
    const double av = a.value();
    if (!(av > 0.0)) {
        throw DomainError("ad: ln of non-positive argument " + std::to_string(av));
    }
    return unary(Op::Log, a, 1.0 / av);
}

Var square(const Var& a) { return unary(Op::Square, a, 2.0 * a.value()); }
Var softplus(const Var& a) { return unary(Op::Softplus, a, lddmd::sigmoid(a.value())); }

Var sqrt(const Var& a) {
    const double av = a.value();
    if (av < 0.0) {
        throw DomainError("ad: sqrt of negative argument " + std::to_string(av));
    }
    const double r = std::sqrt(av);
    Tape& t = tape_of(a);
    return t.push(Op::Sqrt, r, a.index(), r > 0.0 ? 0.5 / r : 0.0);
}

Var abs(const Var& a) { return unary(Op::Abs, a, a.value() >= 0.0 ? 1.0 : -1.0); }
Var wrap_angle(const Var& a) { return unary(Op::WrapAngle, a, 1.0); }

}  // namespace lddmd::ad
