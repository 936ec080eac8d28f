#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "poselift/errors.hpp"
#include "poselift/tensor.hpp"

// Eager reverse-mode autodiff over Tensor. Every vjp is itself written in
// terms of graph ops, so gradients are differentiable again — the
// double-backward needed by the critic's gradient penalty falls out of the
// construction instead of being special-cased.
namespace poselift::ad {

struct Node;
using Var = std::shared_ptr<Node>;

using EigenMap =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstEigenMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

struct Node {
    Tensor value;
    bool requires_grad = false;
    std::uint64_t id = 0;
    std::vector<Var> parents;
    // Maps the upstream gradient to per-parent gradients (nullptr = none).
    std::function<std::vector<Var>(const Var& self, const Var& g)> vjp;
};

inline std::uint64_t next_node_id() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1, std::memory_order_relaxed);
}

inline Var make_node(Tensor value, std::vector<Var> parents,
                     std::function<std::vector<Var>(const Var&, const Var&)> vjp) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->parents = std::move(parents);
    n->vjp = std::move(vjp);
    n->id = next_node_id();
    for (const auto& p : n->parents)
        if (p && p->requires_grad) n->requires_grad = true;
    return n;
}

inline Var constant(Tensor t) { return make_node(std::move(t), {}, nullptr); }
inline Var constant(double v) { return constant(Tensor::scalar(v)); }

/// Leaf with gradient tracking (a trainable parameter or probed input).
inline Var leaf(Tensor t) {
    auto n = constant(std::move(t));
    n->requires_grad = true;
    return n;
}

/// Same value, no gradient.
inline Var stop_grad(const Var& x) { return constant(x->value); }

inline ConstEigenMap emap(const Tensor& t) {
    return ConstEigenMap(t.data.data(), static_cast<Eigen::Index>(t.rows),
                         static_cast<Eigen::Index>(t.cols));
}
inline EigenMap emap(Tensor& t) {
    return EigenMap(t.data.data(), static_cast<Eigen::Index>(t.rows),
                    static_cast<Eigen::Index>(t.cols));
}

// ---- broadcasting helpers --------------------------------------------

inline bool bcast_ok(std::size_t a, std::size_t b) { return a == b || a == 1 || b == 1; }

inline Var sum_to(const Var& x, std::size_t rows, std::size_t cols);
inline Var broadcast_to(const Var& x, std::size_t rows, std::size_t cols);

template <typename F>
Tensor bcast_apply(const Tensor& a, const Tensor& b, F f, const char* who) {
    if (!bcast_ok(a.rows, b.rows) || !bcast_ok(a.cols, b.cols))
        throw ShapeMismatch(std::string(who) + ": " + a.shape_str() + " vs " + b.shape_str());
    const std::size_t r = std::max(a.rows, b.rows), c = std::max(a.cols, b.cols);
    Tensor out(r, c);
    for (std::size_t i = 0; i < r; ++i) {
        const std::size_t ia = a.rows == 1 ? 0 : i, ib = b.rows == 1 ? 0 : i;
        for (std::size_t j = 0; j < c; ++j) {
            const std::size_t ja = a.cols == 1 ? 0 : j, jb = b.cols == 1 ? 0 : j;
            out.at(i, j) = f(a.at(ia, ja), b.at(ib, jb));
        }
    }
    return out;
}

// ---- elementwise binary ops ------------------------------------------

inline Var add(const Var& a, const Var& b) {
    Tensor v = bcast_apply(a->value, b->value, [](double x, double y) { return x + y; }, "add");
    return make_node(std::move(v), {a, b}, [](const Var& self, const Var& g) {
        const auto& pa = self->parents[0]->value;
        const auto& pb = self->parents[1]->value;
        return std::vector<Var>{sum_to(g, pa.rows, pa.cols), sum_to(g, pb.rows, pb.cols)};
    });
}

inline Var sub(const Var& a, const Var& b);
inline Var neg(const Var& a);
inline Var mul(const Var& a, const Var& b) {
    Tensor v = bcast_apply(a->value, b->value, [](double x, double y) { return x * y; }, "mul");
    return make_node(std::move(v), {a, b}, [](const Var& self, const Var& g) {
        const Var& a = self->parents[0];
        const Var& b = self->parents[1];
        return std::vector<Var>{sum_to(mul(g, b), a->value.rows, a->value.cols),
                                sum_to(mul(g, a), b->value.rows, b->value.cols)};
    });
}

inline Var neg(const Var& a) {
    Tensor v = a->value;
    for (double& x : v.data) x = -x;
    return make_node(std::move(v), {a}, [](const Var&, const Var& g) {
        return std::vector<Var>{neg(g)};
    });
}

inline Var sub(const Var& a, const Var& b) {
    Tensor v = bcast_apply(a->value, b->value, [](double x, double y) { return x - y; }, "sub");
    return make_node(std::move(v), {a, b}, [](const Var& self, const Var& g) {
        const auto& pa = self->parents[0]->value;
        const auto& pb = self->parents[1]->value;
        return std::vector<Var>{sum_to(g, pa.rows, pa.cols),
                                neg(sum_to(g, pb.rows, pb.cols))};
    });
}

inline Var div(const Var& a, const Var& b) {
    Tensor v = bcast_apply(a->value, b->value, [](double x, double y) { return x / y; }, "div");
    return make_node(std::move(v), {a, b}, [](const Var& self, const Var& g) {
        const Var& a = self->parents[0];
        const Var& b = self->parents[1];
        Var da = sum_to(div(g, b), a->value.rows, a->value.cols);
        Var db = sum_to(neg(div(mul(g, a), mul(b, b))), b->value.rows, b->value.cols);
        return std::vector<Var>{da, db};
    });
}

inline Var scale(const Var& a, double c) { return mul(a, constant(c)); }
inline Var add_scalar(const Var& a, double c) { return add(a, constant(c)); }

// ---- unary maps --------------------------------------------------------

inline Var exp(const Var& a) {
    Tensor v = a->value;
    for (double& x : v.data) x = std::exp(x);
    return make_node(std::move(v), {a}, [](const Var& self, const Var& g) {
        return std::vector<Var>{mul(g, self)};
    });
}

inline Var tanh(const Var& a) {
    Tensor v = a->value;
    for (double& x : v.data) x = std::tanh(x);
    return make_node(std::move(v), {a}, [](const Var& self, const Var& g) {
        return std::vector<Var>{mul(g, sub(constant(1.0), mul(self, self)))};
    });
}

inline Var sqrt(const Var& a) {
    Tensor v = a->value;
    for (double& x : v.data) x = std::sqrt(x);
    return make_node(std::move(v), {a}, [](const Var& self, const Var& g) {
        return std::vector<Var>{div(mul(g, constant(0.5)), self)};
    });
}

/// Elementwise sign; gradient-opaque (derivative zero a.e.).
inline Var sign(const Var& a) {
    Tensor v = a->value;
    for (double& x : v.data) x = (x > 0.0) - (x < 0.0);
    return make_node(std::move(v), {a}, [](const Var&, const Var&) {
        return std::vector<Var>{nullptr};
    });
}

inline Var abs(const Var& a) {
    Tensor v = a->value;
    for (double& x : v.data) x = std::abs(x);
    return make_node(std::move(v), {a}, [](const Var& self, const Var& g) {
        return std::vector<Var>{mul(g, sign(self->parents[0]))};
    });
}

inline Var relu(const Var& a) {
    Tensor v = a->value;
    for (double& x : v.data) x = x > 0.0 ? x : 0.0;
    return make_node(std::move(v), {a}, [](const Var& self, const Var& g) {
        Tensor m = self->parents[0]->value;
        for (double& x : m.data) x = x > 0.0 ? 1.0 : 0.0;
        return std::vector<Var>{mul(g, constant(std::move(m)))};
    });
}

// ---- reductions / broadcasts -------------------------------------------

inline Var sum_to(const Var& x, std::size_t rows, std::size_t cols) {
    const Tensor& xv = x->value;
    if (xv.rows == rows && xv.cols == cols) return x;
    if (!(rows == xv.rows || rows == 1) || !(cols == xv.cols || cols == 1))
        throw ShapeMismatch("sum_to: " + xv.shape_str() + " -> (" + std::to_string(rows) +
                            "," + std::to_string(cols) + ")");
    Tensor out(rows, cols, 0.0);
    for (std::size_t i = 0; i < xv.rows; ++i)
        for (std::size_t j = 0; j < xv.cols; ++j)
            out.at(rows == 1 ? 0 : i, cols == 1 ? 0 : j) += xv.at(i, j);
    return make_node(std::move(out), {x}, [](const Var& self, const Var& g) {
        const auto& p = self->parents[0]->value;
        return std::vector<Var>{broadcast_to(g, p.rows, p.cols)};
    });
}

inline Var broadcast_to(const Var& x, std::size_t rows, std::size_t cols) {
    const Tensor& xv = x->value;
    if (xv.rows == rows && xv.cols == cols) return x;
    if (!(xv.rows == rows || xv.rows == 1) || !(xv.cols == cols || xv.cols == 1))
        throw ShapeMismatch("broadcast_to: " + xv.shape_str());
    Tensor out(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            out.at(i, j) = xv.at(xv.rows == 1 ? 0 : i, xv.cols == 1 ? 0 : j);
    return make_node(std::move(out), {x}, [](const Var& self, const Var& g) {
        const auto& p = self->parents[0]->value;
        return std::vector<Var>{sum_to(g, p.rows, p.cols)};
    });
}

inline Var sum_all(const Var& x) { return sum_to(x, 1, 1); }
inline Var mean_all(const Var& x) {
    return scale(sum_all(x), 1.0 / static_cast<double>(x->value.size()));
}
inline Var row_sum(const Var& x) { return sum_to(x, x->value.rows, 1); }
inline Var row_mean(const Var& x) {
    return scale(row_sum(x), 1.0 / static_cast<double>(x->value.cols));
}

/// Per-row maximum, gradient-opaque. Used as a detached shift inside
/// softmax, where shift invariance keeps the gradient exact.
inline Var row_max_detached(const Var& x) {
    const Tensor& xv = x->value;
    Tensor out(xv.rows, 1);
    for (std::size_t i = 0; i < xv.rows; ++i) {
        double m = xv.at(i, 0);
        for (std::size_t j = 1; j < xv.cols; ++j) m = std::max(m, xv.at(i, j));
        out.at(i, 0) = m;
    }
    return constant(std::move(out));
}

inline Var softmax_rows(const Var& x) {
    Var e = exp(sub(x, row_max_detached(x)));
    return div(e, row_sum(e));
}

// ---- matmul -------------------------------------------------------------

inline Var matmul(const Var& a, const Var& b, bool ta = false, bool tb = false) {
    const Tensor& av = a->value;
    const Tensor& bv = b->value;
    const std::size_t m = ta ? av.cols : av.rows;
    const std::size_t k = ta ? av.rows : av.cols;
    const std::size_t k2 = tb ? bv.cols : bv.rows;
    const std::size_t n = tb ? bv.rows : bv.cols;
    if (k != k2)
        throw ShapeMismatch("matmul: " + av.shape_str() + (ta ? "^T" : "") + " x " +
                            bv.shape_str() + (tb ? "^T" : ""));
    Tensor out(m, n);
    auto A = emap(av);
    auto B = emap(bv);
    auto C = emap(out);
    if (!ta && !tb)
        C.noalias() = A * B;
    else if (ta && !tb)
        C.noalias() = A.transpose() * B;
    else if (!ta && tb)
        C.noalias() = A * B.transpose();
    else
        C.noalias() = A.transpose() * B.transpose();
    return make_node(std::move(out), {a, b}, [ta, tb](const Var& self, const Var& g) {
        const Var& a = self->parents[0];
        const Var& b = self->parents[1];
        Var da = ta ? matmul(b, g, tb, true) : matmul(g, b, false, !tb);
        Var db = tb ? matmul(g, a, true, ta) : matmul(a, g, !ta, false);
        return std::vector<Var>{da, db};
    });
}

// ---- structure ops -------------------------------------------------------

inline Var scatter_add_cols(const Var& x, std::vector<std::size_t> idx, std::size_t width);

/// Select columns by index (duplicates allowed).
inline Var gather_cols(const Var& x, std::vector<std::size_t> idx) {
    const Tensor& xv = x->value;
    Tensor out(xv.rows, idx.size());
    for (std::size_t i = 0; i < xv.rows; ++i)
        for (std::size_t j = 0; j < idx.size(); ++j) out.at(i, j) = xv.at(i, idx[j]);
    const std::size_t width = xv.cols;
    return make_node(std::move(out), {x},
                     [idx = std::move(idx), width](const Var&, const Var& g) {
                         return std::vector<Var>{scatter_add_cols(g, idx, width)};
                     });
}

/// y[:, idx[j]] += x[:, j], output width as given. Linear dual of gather.
inline Var scatter_add_cols(const Var& x, std::vector<std::size_t> idx, std::size_t width) {
    const Tensor& xv = x->value;
    if (idx.size() != xv.cols) throw ShapeMismatch("scatter_add_cols: index count");
    Tensor out(xv.rows, width, 0.0);
    for (std::size_t i = 0; i < xv.rows; ++i)
        for (std::size_t j = 0; j < idx.size(); ++j) out.at(i, idx[j]) += xv.at(i, j);
    return make_node(std::move(out), {x}, [idx = std::move(idx)](const Var&, const Var& g) {
        return std::vector<Var>{gather_cols(g, idx)};
    });
}

inline Var slice_cols(const Var& x, std::size_t begin, std::size_t count) {
    const Tensor& xv = x->value;
    if (begin + count > xv.cols) throw ShapeMismatch("slice_cols out of range");
    Tensor out(xv.rows, count);
    for (std::size_t i = 0; i < xv.rows; ++i)
        for (std::size_t j = 0; j < count; ++j) out.at(i, j) = xv.at(i, begin + j);
    const std::size_t width = xv.cols;
    return make_node(std::move(out), {x}, [begin, count, width](const Var&, const Var& g) {
        std::vector<std::size_t> idx(count);
        for (std::size_t j = 0; j < count; ++j) idx[j] = begin + j;
        return std::vector<Var>{scatter_add_cols(g, std::move(idx), width)};
    });
}

inline Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeMismatch("concat_cols: empty");
    const std::size_t rows = parts[0]->value.rows;
    std::size_t cols = 0;
    for (const auto& p : parts) {
        if (p->value.rows != rows) throw ShapeMismatch("concat_cols: row mismatch");
        cols += p->value.cols;
    }
    Tensor out(rows, cols);
    std::size_t off = 0;
    for (const auto& p : parts) {
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < p->value.cols; ++j)
                out.at(i, off + j) = p->value.at(i, j);
        off += p->value.cols;
    }
    return make_node(std::move(out), parts, [](const Var& self, const Var& g) {
        std::vector<Var> grads;
        std::size_t off = 0;
        for (const auto& p : self->parents) {
            grads.push_back(slice_cols(g, off, p->value.cols));
            off += p->value.cols;
        }
        return grads;
    });
}

inline Var reshape(const Var& x, std::size_t rows, std::size_t cols) {
    if (rows * cols != x->value.size()) throw ShapeMismatch("reshape: size change");
    Tensor out = x->value;
    out.rows = rows;
    out.cols = cols;
    return make_node(std::move(out), {x}, [](const Var& self, const Var& g) {
        const auto& p = self->parents[0]->value;
        return std::vector<Var>{reshape(g, p.rows, p.cols)};
    });
}

// ---- backward ------------------------------------------------------------

/// Gradients of a scalar loss w.r.t. the given nodes. Returned gradients
/// are graph nodes themselves, so they can be differentiated again.
/// Nodes not on a gradient path get an all-zero gradient.
inline std::vector<Var> grad(const Var& loss, const std::vector<Var>& wrt) {
    if (loss->value.size() != 1) throw ShapeMismatch("grad: loss must be scalar");
    if (!loss->value.finite()) throw NonFiniteLoss("grad: loss is not finite");

    std::vector<Var> order;
    std::unordered_set<const Node*> seen;
    std::vector<Var> stack;
    if (loss->requires_grad) stack.push_back(loss);
    while (!stack.empty()) {
        Var n = stack.back();
        stack.pop_back();
        if (seen.count(n.get())) continue;
        seen.insert(n.get());
        order.push_back(n);
        for (const auto& p : n->parents)
            if (p && p->requires_grad && !seen.count(p.get())) stack.push_back(p);
    }
    std::sort(order.begin(), order.end(),
              [](const Var& a, const Var& b) { return a->id > b->id; });

    std::unordered_map<const Node*, Var> acc;
    if (loss->requires_grad) acc[loss.get()] = constant(Tensor::scalar(1.0));
    for (const auto& n : order) {
        auto it = acc.find(n.get());
        if (it == acc.end() || !n->vjp) continue;
        Var g = it->second;
        if (g->value.same_shape(n->value) == false)
            g = broadcast_to(g, n->value.rows, n->value.cols);
        std::vector<Var> pg = n->vjp(n, g);
        for (std::size_t i = 0; i < n->parents.size(); ++i) {
            const Var& p = n->parents[i];
            if (!p || !p->requires_grad || i >= pg.size() || !pg[i]) continue;
            auto at = acc.find(p.get());
            if (at == acc.end())
                acc[p.get()] = pg[i];
            else
                at->second = add(at->second, pg[i]);
        }
    }

    std::vector<Var> out;
    out.reserve(wrt.size());
    for (const auto& w : wrt) {
        auto it = acc.find(w.get());
        if (it != acc.end())
            out.push_back(sum_to(it->second, w->value.rows, w->value.cols));
        else
            out.push_back(constant(Tensor(w->value.rows, w->value.cols, 0.0)));
    }
    return out;
}

}  // namespace poselift::ad
