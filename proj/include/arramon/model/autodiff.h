#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "arramon/rng.h"

namespace arramon::ad {

using Matrix = Eigen::MatrixXd;

/// Trainable tensor with its gradient and Adam moments.
struct Param {
    std::string name;
    Matrix value;
    Matrix grad;
    Matrix m;
    Matrix v;

    Param() = default;
    Param(std::string n, Matrix init) : name(std::move(n)), value(std::move(init)) { zero_grad(); }
    void zero_grad() { grad = Matrix::Zero(value.rows(), value.cols()); }
};

class Tape;

/// Handle to a node on a tape.
struct Var {
    Tape* tape = nullptr;
    int id = -1;

    const Matrix& value() const;
    const Matrix& grad() const;
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
};

/// Reverse-mode tape. Nodes are recorded in evaluation order and
/// backward() walks them in reverse, accumulating into Param::grad.
class Tape {
  public:
    Var constant(Matrix m);
    /// Reads the parameter in place; gradients flow to p.grad on backward().
    Var param(Param& p);
    /// Read-only use of a parameter (inference); no gradient.
    Var param(const Param& p);
    /// Seeds d(loss)/d(loss) = 1 for a 1x1 node.
    void backward(Var loss);
    std::size_t size() const { return nodes_.size(); }

    // Internal API used by the op implementations.
    struct Node {
        Matrix own;
        const Matrix* ext = nullptr;
        Param* param = nullptr;
        Matrix grad;
        bool needs_grad = false;
        std::function<void(Tape&)> backward;

        const Matrix& value() const { return ext ? *ext : own; }
    };
    Var push(Matrix value, bool needs_grad, std::function<void(Tape&)> backward);
    Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
    const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
    bool needs(Var v) const { return node(v.id).needs_grad; }
    template <typename Expr>
    void accumulate(Var v, const Expr& g) {
        Node& n = node(v.id);
        if (!n.needs_grad) return;
        if (n.grad.size() == 0) {
            n.grad = g;
        } else {
            n.grad += g;
        }
    }

  private:
    std::vector<Node> nodes_;
};

Var matmul(Var a, Var b);
/// a * b^T
Var matmul_nt(Var a, Var b);
Var add(Var a, Var b);
/// Adds the 1 x n row `b` to every row of `a`.
Var add_row(Var a, Var b);
Var mul(Var a, Var b);
/// Multiplies every row of `a` elementwise by the 1 x n row `b`.
Var mul_row(Var a, Var b);
Var scale(Var a, double s);
Var tanh(Var a);
Var sigmoid(Var a);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_cols(Var a, Eigen::Index begin, Eigen::Index count);
Var slice_rows(Var a, Eigen::Index begin, Eigen::Index count);
Var gather_rows(Var table, std::span<const int> ids);
/// Stacks `times` copies of `a` vertically.
Var repeat_rows(Var a, int times);
Var softmax_rows(Var a);
/// Rows come in consecutive blocks of `block`; softmax runs down each
/// column within each block.
Var block_softmax_cols(Var a, int block);
/// out_t = a_t^T b_t for consecutive row blocks a_t, b_t of `block` rows.
Var block_matmul_tn(Var a, Var b, int block);
/// out_t = x_t h_t^T for row blocks x_t of `block` rows and rows h_t of h.
Var block_matvec(Var x, Var h, int block);
/// Multiplies by a fixed mask scaled by 1/(1-p); identity when p == 0.
Var dropout(Var a, double p, Rng& rng);
/// Mean negative log-likelihood of `targets` under row-wise softmax(logits).
Var cross_entropy(Var logits, std::span<const int> targets);

/// Row-wise softmax on a plain matrix (numerically stabilized).
Matrix softmax_rows(const Matrix& m);

} // namespace arramon::ad
