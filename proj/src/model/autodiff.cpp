#include "arramon/model/autodiff.h"

#include <cmath>

#include "arramon/error.h"

namespace arramon::ad {

const Matrix& Var::value() const { return tape->node(id).value(); }
const Matrix& Var::grad() const { return tape->node(id).grad; }

Var Tape::push(Matrix value, bool needs_grad, std::function<void(Tape&)> backward) {
    Node n;
    n.own = std::move(value);
    n.needs_grad = needs_grad;
    if (needs_grad) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return {this, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::constant(Matrix m) { return push(std::move(m), false, {}); }

Var Tape::param(Param& p) {
    Node n;
    n.ext = &p.value;
    n.param = &p;
    n.needs_grad = true;
    nodes_.push_back(std::move(n));
    return {this, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::param(const Param& p) {
    Node n;
    n.ext = &p.value;
    nodes_.push_back(std::move(n));
    return {this, static_cast<int>(nodes_.size() - 1)};
}

void Tape::backward(Var loss) {
    Node& l = node(loss.id);
    if (l.value().size() != 1) throw ShapeError("backward needs a scalar loss");
    l.grad = Matrix::Ones(1, 1);
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        if (!n.needs_grad || n.grad.size() == 0) continue;
        if (n.param) {
            n.param->grad += n.grad;
        } else if (n.backward) {
            n.backward(*this);
        }
    }
}

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw ShapeError(what);
}

bool any_needs(std::initializer_list<Var> vs) {
    for (Var v : vs) {
        if (v.tape->needs(v)) return true;
    }
    return false;
}

} // namespace

Var matmul(Var a, Var b) {
    require(a.cols() == b.rows(), "matmul: inner dimensions differ");
    Tape& t = *a.tape;
    const int out = static_cast<int>(t.size());
    return t.push(a.value() * b.value(), any_needs({a, b}), [a, b, out](Tape& t) {
        const Matrix& g = t.node(out).grad;
        if (t.needs(a)) t.accumulate(a, g * b.value().transpose());
        if (t.needs(b)) t.accumulate(b, a.value().transpose() * g);
    });
}

Var matmul_nt(Var a, Var b) {
    require(a.cols() == b.cols(), "matmul_nt: inner dimensions differ");
    Tape& t = *a.tape;
    const int out = static_cast<int>(t.size());
    return t.push(a.value() * b.value().transpose(), any_needs({a, b}), [a, b, out](Tape& t) {
        const Matrix& g = t.node(out).grad;
        if (t.needs(a)) t.accumulate(a, g * b.value());
        if (t.needs(b)) t.accumulate(b, g.transpose() * a.value());
    });
}

Var add(Var a, Var b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "add: shapes differ");
    Tape& t = *a.tape;
    const int out = static_cast<int>(t.size());
    return t.push(a.value() + b.value(), any_needs({a, b}), [a, b, out](Tape& t) {
        const Matrix& g = t.node(out).grad;
        t.accumulate(a, g);
        t.accumulate(b, g);
    });
}

Var add_row(Var a, Var b) {
    require(b.rows() == 1 && a.cols() == b.cols(), "add_row: shapes differ");
    Tape& t = *a.tape;
    const int out = static_cast<int>(t.size());
    Matrix v = a.value().rowwise() + b.value().row(0);
    return t.push(std::move(v), any_needs({a, b}), [a, b, out](Tape& t) {
        const Matrix& g = t.node(out).grad;
        t.accumulate(a, g);
        if (t.needs(b)) t.accumulate(b, g.colwise().sum());
    });
}

Var mul(Var a, Var b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "mul: shapes differ");
    Tape& t = *a.tape;
    const int out = static_cast<int>(t.size());
    return t.push(a.value().cwiseProduct(b.value()), any_needs({a, b}), [a, b, out](Tape& t) {
        const Matrix& g = t.node(out).grad;
        if (t.needs(a)) t.accumulate(a, g.cwiseProduct(b.value()));
        if (t.needs(b)) t.accumulate(b, g.cwiseProduct(a.value()));
    });
}

Var mul_row(Var a, Var b) {
    require(b.rows() == 1 && a.cols() == b.cols(), "mul_row: shapes differ");
    Tape& t = *a.tape;
    const int out = static_cast<int>(t.size());
    Matrix v = a.value().array().rowwise() * b.value().row(0).array();
    return t.push(std::move(v), any_needs({a, b}), [a, b, out](Tape& t) {
        const Matrix& g = t.node(out).grad;
        if (t.needs(a)) t.accumulate(a, Matrix(g.array().rowwise() * b.value().row(0).array()));
        if (t.needs(b)) t.accumulate(b, g.cwiseProduct(a.value()).colwise().sum());
    });
}

Var scale(Var a, double s) {
    Tape& t = *a.tape;
    const int out = static_cast<int>(t.size());
    return t.push(a.value() * s, any_needs({a}), [a, s, out](Tape& t) { t.accumulate(a, t.node(out).grad * s); });
}

Var tanh(Var a) {
    Tape& t = *a.tape;
    const int out = static_cast<int>(t.size());
    return t.push(a.value().array().tanh().matrix(), any_needs({a}), [a, out](Tape& t) {
        const Matrix& y = t.node(out).value();
        t.accumulate(a, Matrix(t.node(out).grad.array() * (1.0 - y.array().square())));
    });
}

Var sigmoid(Var a) {
    Tape& t = *a.tape;
    const int out = static_cast<int>(t.size());
    Matrix y = (1.0 + (-a.value().array()).exp()).inverse().matrix();
    return t.push(std::move(y), any_needs({a}), [a, out](Tape& t) {
        const Matrix& y = t.node(out).value();
        t.accumulate(a, Matrix(t.node(out).grad.array() * y.array() * (1.0 - y.array())));
    });
}

Var concat_cols(std::span<const Var> parts) {
    require(!parts.empty(), "concat_cols: nothing to concatenate");
    Tape& t = *parts[0].tape;
    Eigen::Index cols = 0;
    bool needs = false;
    for (Var p : parts) {
        require(p.rows() == parts[0].rows(), "concat_cols: row counts differ");
        cols += p.cols();
        needs = needs || t.needs(p);
    }
    Matrix v(parts[0].rows(), cols);
    Eigen::Index c = 0;
    for (Var p : parts) {
        v.middleCols(c, p.cols()) = p.value();
        c += p.cols();
    }
    const int out = static_cast<int>(t.size());
    std::vector<Var> ps(parts.begin(), parts.end());
    return t.push(std::move(v), needs, [ps, out](Tape& t) {
        const Matrix& g = t.node(out).grad;
        Eigen::Index c = 0;
        for (Var p : ps) {
            if (t.needs(p)) t.accumulate(p, g.middleCols(c, p.cols()));
            c += p.cols();
        }
    });
}

Var concat_rows(std::span<const Var> parts) {
    require(!parts.empty(), "concat_rows: nothing to concatenate");
    Tape& t = *parts[0].tape;
    Eigen::Index rows = 0;
    bool needs = false;
    for (Var p : parts) {
        require(p.cols() == parts[0].cols(), "concat_rows: column counts differ");
        rows += p.rows();
        needs = needs || t.needs(p);
    }
    Matrix v(rows, parts[0].cols());
    Eigen::Index r = 0;
    for (Var p : parts) {
        v.middleRows(r, p.rows()) = p.value();
        r += p.rows();
    }
    const int out = static_cast<int>(t.size());
    std::vector<Var> ps(parts.begin(), parts.end());
    return t.push(std::move(v), needs, [ps, out](Tape& t) {
        const Matrix& g = t.node(out).grad;
        Eigen::Index r = 0;
        for (Var p : ps) {
            if (t.needs(p)) t.accumulate(p, g.middleRows(r, p.rows()));
            r += p.rows();
        }
    });
}

Var slice_cols(Var a, Eigen::Index begin, Eigen::Index count) {
    require(begin >= 0 && begin + count <= a.cols(), "slice_cols: out of range");
    Tape& t = *a.tape;
    const int out = static_cast<int>(t.size());
    return t.push(a.value().middleCols(begin, count), any_needs({a}), [a, begin, count, out](Tape& t) {
        Matrix g = Matrix::Zero(a.rows(), a.cols());
        g.middleCols(begin, count) = t.node(out).grad;
        t.accumulate(a, g);
    });
}

Var slice_rows(Var a, Eigen::Index begin, Eigen::Index count) {
    require(begin >= 0 && begin + count <= a.rows(), "slice_rows: out of range");
    Tape& t = *a.tape;
    const int out = static_cast<int>(t.size());
    return t.push(a.value().middleRows(begin, count), any_needs({a}), [a, begin, count, out](Tape& t) {
        Matrix g = Matrix::Zero(a.rows(), a.cols());
        g.middleRows(begin, count) = t.node(out).grad;
        t.accumulate(a, g);
    });
}

Var gather_rows(Var table, std::span<const int> ids) {
    Tape& t = *table.tape;
    Matrix v(static_cast<Eigen::Index>(ids.size()), table.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        require(ids[i] >= 0 && ids[i] < table.rows(), "gather_rows: id out of range");
        v.row(static_cast<Eigen::Index>(i)) = table.value().row(ids[i]);
    }
    const int out = static_cast<int>(t.size());
    std::vector<int> idv(ids.begin(), ids.end());
    return t.push(std::move(v), any_needs({table}), [table, idv, out](Tape& t) {
        const Matrix& g = t.node(out).grad;
        Matrix d = Matrix::Zero(table.rows(), table.cols());
        for (std::size_t i = 0; i < idv.size(); ++i) d.row(idv[i]) += g.row(static_cast<Eigen::Index>(i));
        t.accumulate(table, d);
    });
}

Var repeat_rows(Var a, int times) {
    require(times >= 1, "repeat_rows: times must be positive");
    Tape& t = *a.tape;
    const Eigen::Index r = a.rows();
    Matrix v(r * times, a.cols());
    for (int k = 0; k < times; ++k) v.middleRows(k * r, r) = a.value();
    const int out = static_cast<int>(t.size());
    return t.push(std::move(v), any_needs({a}), [a, times, r, out](Tape& t) {
        const Matrix& g = t.node(out).grad;
        Matrix d = g.middleRows(0, r);
        for (int k = 1; k < times; ++k) d += g.middleRows(k * r, r);
        t.accumulate(a, d);
    });
}

Matrix softmax_rows(const Matrix& m) {
    Matrix y = m.colwise() - m.rowwise().maxCoeff();
    y = y.array().exp();
    y.array().colwise() /= y.rowwise().sum().array();
    return y;
}

Var softmax_rows(Var a) {
    Tape& t = *a.tape;
    const int out = static_cast<int>(t.size());
    return t.push(softmax_rows(a.value()), any_needs({a}), [a, out](Tape& t) {
        const Matrix& y = t.node(out).value();
        const Matrix& g = t.node(out).grad;
        const Eigen::VectorXd dot = g.cwiseProduct(y).rowwise().sum();
        t.accumulate(a, Matrix(y.array() * (g.colwise() - dot).array()));
    });
}

Var block_softmax_cols(Var a, int block) {
    require(block >= 1 && a.rows() % block == 0, "block_softmax_cols: rows not a multiple of block");
    Tape& t = *a.tape;
    const Eigen::Index nb = a.rows() / block;
    Matrix y(a.rows(), a.cols());
    for (Eigen::Index b = 0; b < nb; ++b) {
        auto src = a.value().middleRows(b * block, block);
        Matrix e = src.rowwise() - src.colwise().maxCoeff();
        e = e.array().exp();
        e.array().rowwise() /= e.colwise().sum().array();
        y.middleRows(b * block, block) = e;
    }
    const int out = static_cast<int>(t.size());
    return t.push(std::move(y), any_needs({a}), [a, block, nb, out](Tape& t) {
        const Matrix& y = t.node(out).value();
        const Matrix& g = t.node(out).grad;
        Matrix d(y.rows(), y.cols());
        for (Eigen::Index b = 0; b < nb; ++b) {
            auto yb = y.middleRows(b * block, block);
            auto gb = g.middleRows(b * block, block);
            const Eigen::RowVectorXd dot = gb.cwiseProduct(yb).colwise().sum();
            d.middleRows(b * block, block) = yb.array() * (gb.rowwise() - dot).array();
        }
        t.accumulate(a, d);
    });
}

Var block_matmul_tn(Var a, Var b, int block) {
    require(block >= 1 && a.rows() == b.rows() && a.rows() % block == 0, "block_matmul_tn: bad shapes");
    Tape& t = *a.tape;
    const Eigen::Index nb = a.rows() / block;
    const Eigen::Index m = a.cols();
    Matrix v(nb * m, b.cols());
    for (Eigen::Index k = 0; k < nb; ++k) {
        v.middleRows(k * m, m).noalias() =
            a.value().middleRows(k * block, block).transpose() * b.value().middleRows(k * block, block);
    }
    const int out = static_cast<int>(t.size());
    return t.push(std::move(v), any_needs({a, b}), [a, b, block, nb, m, out](Tape& t) {
        const Matrix& g = t.node(out).grad;
        if (t.needs(a)) {
            Matrix d(a.rows(), a.cols());
            for (Eigen::Index k = 0; k < nb; ++k) {
                d.middleRows(k * block, block).noalias() =
                    b.value().middleRows(k * block, block) * g.middleRows(k * m, m).transpose();
            }
            t.accumulate(a, d);
        }
        if (t.needs(b)) {
            Matrix d(b.rows(), b.cols());
            for (Eigen::Index k = 0; k < nb; ++k) {
                d.middleRows(k * block, block).noalias() =
                    a.value().middleRows(k * block, block) * g.middleRows(k * m, m);
            }
            t.accumulate(b, d);
        }
    });
}

Var block_matvec(Var x, Var h, int block) {
    require(block >= 1 && x.rows() == h.rows() * block && x.cols() == h.cols(), "block_matvec: bad shapes");
    Tape& t = *x.tape;
    const Eigen::Index nb = h.rows();
    Matrix v(x.rows(), 1);
    for (Eigen::Index k = 0; k < nb; ++k) {
        v.middleRows(k * block, block).noalias() = x.value().middleRows(k * block, block) * h.value().row(k).transpose();
    }
    const int out = static_cast<int>(t.size());
    return t.push(std::move(v), any_needs({x, h}), [x, h, block, nb, out](Tape& t) {
        const Matrix& g = t.node(out).grad;
        if (t.needs(x)) {
            Matrix d(x.rows(), x.cols());
            for (Eigen::Index k = 0; k < nb; ++k) {
                d.middleRows(k * block, block).noalias() = g.middleRows(k * block, block) * h.value().row(k);
            }
            t.accumulate(x, d);
        }
        if (t.needs(h)) {
            Matrix d(h.rows(), h.cols());
            for (Eigen::Index k = 0; k < nb; ++k) {
                d.row(k).noalias() = g.middleRows(k * block, block).transpose() * x.value().middleRows(k * block, block);
            }
            t.accumulate(h, d);
        }
    });
}

Var dropout(Var a, double p, Rng& rng) {
    if (p <= 0.0) return a;
    Matrix mask(a.rows(), a.cols());
    const double keep = 1.0 / (1.0 - p);
    for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng.chance(p) ? 0.0 : keep;
    return mul(a, a.tape->constant(std::move(mask)));
}

Var cross_entropy(Var logits, std::span<const int> targets) {
    require(static_cast<std::size_t>(logits.rows()) == targets.size() && !targets.empty(),
            "cross_entropy: one target per row");
    Tape& t = *logits.tape;
    const Matrix p = softmax_rows(logits.value());
    double loss = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        require(targets[i] >= 0 && targets[i] < logits.cols(), "cross_entropy: target out of range");
        loss -= std::log(p(static_cast<Eigen::Index>(i), targets[i]));
    }
    const double n = static_cast<double>(targets.size());
    Matrix v(1, 1);
    v(0, 0) = loss / n;
    const int out = static_cast<int>(t.size());
    std::vector<int> tg(targets.begin(), targets.end());
    return t.push(std::move(v), any_needs({logits}), [logits, p, tg, n, out](Tape& t) {
        const double g = t.node(out).grad(0, 0);
        Matrix d = p;
        for (std::size_t i = 0; i < tg.size(); ++i) d(static_cast<Eigen::Index>(i), tg[i]) -= 1.0;
        t.accumulate(logits, d * (g / n));
    });
}

} // namespace arramon::ad
