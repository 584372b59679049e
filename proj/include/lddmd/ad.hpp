#pragma once

// Reverse-mode automatic differentiation over scalars.
//
// A Tape records every elementary operation as a Node holding the value, the
// local partial derivatives with respect to at most two parents, and the
// adjoint filled in by backward(). Nodes are appended in evaluation order, so
// creation index is a topological order and backward is a single reverse
// sweep.

#include <cstdint>
#include <span>
#include <vector>

#include "lddmd/errors.hpp"
#include "lddmd/scalar_math.hpp"

namespace lddmd::ad {

enum class Op : std::uint8_t {
    Leaf,       // learnable input registered with Tape::variable
    Const,      // non-differentiated input
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    AddC,       // a + c
    RSubC,      // c - a
    MulC,       // a * c
    DivC,       // a / c
    RDivC,      // c / a
    Sin,
    Cos,
    Exp,
    Log,
    Square,
    Softplus,
    Sqrt,       // subgradient 0 at 0
    Abs,        // derivative +1 at 0
    WrapAngle,  // derivative 1
};

inline constexpr std::uint32_t kNoParent = 0xffffffffu;

struct Node {
    double value = 0.0;
    double adjoint = 0.0;
    double d0 = 0.0;  // d value / d parent0
    double d1 = 0.0;  // d value / d parent1
    double aux = 0.0; // constant operand of the *C ops
    std::uint32_t p0 = kNoParent;
    std::uint32_t p1 = kNoParent;
    Op op = Op::Const;
};

class Tape;

/// Handle to a node on a tape. Cheap to copy; only valid while the tape's
/// generation matches the one it was created in.
class Var {
public:
    Var() = default;

    double value() const;
    double adjoint() const;
    Tape* tape() const { return tape_; }
    std::uint32_t index() const { return index_; }
    std::uint64_t generation() const { return generation_; }

private:
    friend class Tape;
    Var(Tape* tape, std::uint32_t index, std::uint64_t generation)
        : tape_(tape), index_(index), generation_(generation) {}

    Tape* tape_ = nullptr;
    std::uint32_t index_ = 0;
    std::uint64_t generation_ = 0;
};

class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Registers a learnable leaf. Non-finite values are rejected.
    Var variable(double value);
    /// A leaf that is not tracked as a variable.
    Var constant(double value);

    /// Fills adjoints with d root / d node. Resets previous adjoints first.
    void backward(const Var& root);
    void reset_adjoints();
    /// Drops all nodes; outstanding Vars become stale.
    void clear();

    /// Recomputes every non-leaf value from its op and parents. The result is
    /// bit-identical to the original evaluation.
    void replay();

    std::size_t size() const { return nodes_.size(); }
    const std::vector<Node>& nodes() const { return nodes_; }
    /// Node indices of registered variables, in registration order.
    std::span<const std::uint32_t> variables() const { return variables_; }
    /// Adjoints of all registered variables, in registration order.
    std::vector<double> gradient() const;

    double value(const Var& v) const;
    double adjoint(const Var& v) const;

    Var push(Op op, double value, std::uint32_t p0, double d0, std::uint32_t p1 = kNoParent,
             double d1 = 0.0, double aux = 0.0);
    void check(const Var& v) const;

private:
    std::vector<Node> nodes_;
    std::vector<std::uint32_t> variables_;
    std::uint64_t generation_ = 1;
};

// Elementary operations. Mixed Var/double overloads record the double as a
// constant operand instead of allocating a Const node.
Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);
Var operator+(const Var& a, double c);
Var operator+(double c, const Var& a);
Var operator-(const Var& a, double c);
Var operator-(double c, const Var& a);
Var operator*(const Var& a, double c);
Var operator*(double c, const Var& a);
Var operator/(const Var& a, double c);
Var operator/(double c, const Var& a);

Var sin(const Var& a);
Var cos(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
Var square(const Var& a);
Var softplus(const Var& a);
Var sqrt(const Var& a);
Var abs(const Var& a);
Var wrap_angle(const Var& a);

/// Lifts a plain value onto the tape as a learnable variable.
inline Var lift(Tape& tape, double value) { return tape.variable(value); }

}  // namespace lddmd::ad
