#include "prl/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace prl {

using detail::Node;
using detail::make_op;

namespace {

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
    }
}

int normalize_axis(const char* op, int axis, int rank) {
    if (axis < 0) axis += rank;
    if (axis < 0 || axis >= rank) throw ShapeError(std::string(op) + ": axis out of range");
    return axis;
}

template <typename F, typename DF>
Tensor unary_op(const char* name, const Tensor& a, F f, DF dfdx) {
    const auto& x = a.values();
    std::vector<Real> y(x.size());
    for (size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
    return make_op(name, a.shape(), std::move(y), {a}, [a, dfdx](Node& n) {
        auto& ga = a.node()->ensure_grad();
        const auto& x = a.node()->value;
        for (size_t i = 0; i < x.size(); ++i) ga[i] += n.grad[i] * dfdx(x[i], n.value[i]);
    });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape("add", a, b);
    const auto& va = a.values();
    const auto& vb = b.values();
    std::vector<Real> y(va.size());
    for (size_t i = 0; i < y.size(); ++i) y[i] = va[i] + vb[i];
    return make_op("add", a.shape(), std::move(y), {a, b}, [a, b](Node& n) {
        if (a.node()->requires_grad) {
            auto& g = a.node()->ensure_grad();
            for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
        }
        if (b.node()->requires_grad) {
            auto& g = b.node()->ensure_grad();
            for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape("sub", a, b);
    const auto& va = a.values();
    const auto& vb = b.values();
    std::vector<Real> y(va.size());
    for (size_t i = 0; i < y.size(); ++i) y[i] = va[i] - vb[i];
    return make_op("sub", a.shape(), std::move(y), {a, b}, [a, b](Node& n) {
        if (a.node()->requires_grad) {
            auto& g = a.node()->ensure_grad();
            for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
        }
        if (b.node()->requires_grad) {
            auto& g = b.node()->ensure_grad();
            for (size_t i = 0; i < g.size(); ++i) g[i] -= n.grad[i];
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape("mul", a, b);
    const auto& va = a.values();
    const auto& vb = b.values();
    std::vector<Real> y(va.size());
    for (size_t i = 0; i < y.size(); ++i) y[i] = va[i] * vb[i];
    return make_op("mul", a.shape(), std::move(y), {a, b}, [a, b](Node& n) {
        const auto& va = a.node()->value;
        const auto& vb = b.node()->value;
        if (a.node()->requires_grad) {
            auto& g = a.node()->ensure_grad();
            for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * vb[i];
        }
        if (b.node()->requires_grad) {
            auto& g = b.node()->ensure_grad();
            for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * va[i];
        }
    });
}

Tensor add_scalar(const Tensor& a, Real s) {
    return unary_op("add_scalar", a, [s](Real x) { return x + s; },
                    [](Real, Real) { return 1.0; });
}

Tensor mul_scalar(const Tensor& a, Real s) {
    return unary_op("mul_scalar", a, [s](Real x) { return x * s; },
                    [s](Real, Real) { return s; });
}

Tensor neg(const Tensor& a) { return mul_scalar(a, -1.0); }

Tensor relu(const Tensor& a) {
    return unary_op("relu", a, [](Real x) { return x > 0.0 ? x : 0.0; },
                    [](Real x, Real) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor gelu(const Tensor& a) {
    constexpr Real kS = 0.7978845608028654;  // sqrt(2/pi)
    constexpr Real kC = 0.044715;
    return unary_op(
        "gelu", a,
        [](Real x) { return 0.5 * x * (1.0 + std::tanh(kS * (x + kC * x * x * x))); },
        [](Real x, Real) {
            Real t = std::tanh(kS * (x + kC * x * x * x));
            Real sech2 = 1.0 - t * t;
            return 0.5 * (1.0 + t) + 0.5 * x * sech2 * kS * (1.0 + 3.0 * kC * x * x);
        });
}

Tensor tanh(const Tensor& a) {
    return unary_op("tanh", a, [](Real x) { return std::tanh(x); },
                    [](Real, Real y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
    return unary_op("sigmoid", a, [](Real x) { return 1.0 / (1.0 + std::exp(-x)); },
                    [](Real, Real y) { return y * (1.0 - y); });
}

Tensor exp(const Tensor& a) {
    return unary_op("exp", a, [](Real x) { return std::exp(x); },
                    [](Real, Real y) { return y; });
}

Tensor sqrt(const Tensor& a) {
    return unary_op("sqrt", a, [](Real x) { return std::sqrt(x); },
                    [](Real, Real y) { return 0.5 / y; });
}

Tensor square(const Tensor& a) { return mul(a, a); }

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) throw ShapeError("matmul: inputs must be 2-D");
    const int m = a.dim(0), k = a.dim(1), k2 = b.dim(0), n = b.dim(1);
    if (k != k2) {
        throw ShapeError("matmul: inner dims differ, " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
    }
    const auto& va = a.values();
    const auto& vb = b.values();
    std::vector<Real> y(static_cast<size_t>(m) * n, 0.0);
    for (int i = 0; i < m; ++i) {
        for (int p = 0; p < k; ++p) {
            const Real aip = va[static_cast<size_t>(i) * k + p];
            const Real* brow = &vb[static_cast<size_t>(p) * n];
            Real* yrow = &y[static_cast<size_t>(i) * n];
            for (int j = 0; j < n; ++j) yrow[j] += aip * brow[j];
        }
    }
    return make_op("matmul", {m, n}, std::move(y), {a, b}, [a, b, m, k, n](Node& node) {
        const auto& va = a.node()->value;
        const auto& vb = b.node()->value;
        const auto& gy = node.grad;
        if (a.node()->requires_grad) {
            auto& ga = a.node()->ensure_grad();
            // dA = dY * B^T
            for (int i = 0; i < m; ++i) {
                for (int p = 0; p < k; ++p) {
                    Real acc = 0.0;
                    const Real* gyrow = &gy[static_cast<size_t>(i) * n];
                    const Real* brow = &vb[static_cast<size_t>(p) * n];
                    for (int j = 0; j < n; ++j) acc += gyrow[j] * brow[j];
                    ga[static_cast<size_t>(i) * k + p] += acc;
                }
            }
        }
        if (b.node()->requires_grad) {
            auto& gb = b.node()->ensure_grad();
            // dB = A^T * dY
            for (int i = 0; i < m; ++i) {
                const Real* gyrow = &gy[static_cast<size_t>(i) * n];
                for (int p = 0; p < k; ++p) {
                    const Real aip = va[static_cast<size_t>(i) * k + p];
                    Real* gbrow = &gb[static_cast<size_t>(p) * n];
                    for (int j = 0; j < n; ++j) gbrow[j] += aip * gyrow[j];
                }
            }
        }
    });
}

Tensor bmm(const Tensor& a, const Tensor& b) {
    if (a.rank() != 3 || b.rank() != 3) throw ShapeError("bmm: inputs must be 3-D");
    const int B = a.dim(0), m = a.dim(1), k = a.dim(2);
    if (b.dim(0) != B || b.dim(1) != k) {
        throw ShapeError("bmm: incompatible shapes " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
    }
    const int n = b.dim(2);
    const auto& va = a.values();
    const auto& vb = b.values();
    std::vector<Real> y(static_cast<size_t>(B) * m * n, 0.0);
    for (int bi = 0; bi < B; ++bi) {
        const Real* A = &va[static_cast<size_t>(bi) * m * k];
        const Real* Bm = &vb[static_cast<size_t>(bi) * k * n];
        Real* Y = &y[static_cast<size_t>(bi) * m * n];
        for (int i = 0; i < m; ++i) {
            for (int p = 0; p < k; ++p) {
                const Real aip = A[static_cast<size_t>(i) * k + p];
                const Real* brow = &Bm[static_cast<size_t>(p) * n];
                Real* yrow = &Y[static_cast<size_t>(i) * n];
                for (int j = 0; j < n; ++j) yrow[j] += aip * brow[j];
            }
        }
    }
    return make_op("bmm", {B, m, n}, std::move(y), {a, b}, [a, b, B, m, k, n](Node& node) {
        const auto& va = a.node()->value;
        const auto& vb = b.node()->value;
        const auto& gy = node.grad;
        for (int bi = 0; bi < B; ++bi) {
            const Real* A = &va[static_cast<size_t>(bi) * m * k];
            const Real* Bm = &vb[static_cast<size_t>(bi) * k * n];
            const Real* GY = &gy[static_cast<size_t>(bi) * m * n];
            if (a.node()->requires_grad) {
                Real* GA = &a.node()->ensure_grad()[static_cast<size_t>(bi) * m * k];
                for (int i = 0; i < m; ++i) {
                    for (int p = 0; p < k; ++p) {
                        Real acc = 0.0;
                        for (int j = 0; j < n; ++j)
                            acc += GY[static_cast<size_t>(i) * n + j] *
                                   Bm[static_cast<size_t>(p) * n + j];
                        GA[static_cast<size_t>(i) * k + p] += acc;
                    }
                }
            }
            if (b.node()->requires_grad) {
                Real* GB = &b.node()->ensure_grad()[static_cast<size_t>(bi) * k * n];
                for (int i = 0; i < m; ++i) {
                    for (int p = 0; p < k; ++p) {
                        const Real aip = A[static_cast<size_t>(i) * k + p];
                        for (int j = 0; j < n; ++j)
                            GB[static_cast<size_t>(p) * n + j] +=
                                aip * GY[static_cast<size_t>(i) * n + j];
                    }
                }
            }
        }
    });
}

Tensor softmax(const Tensor& x, int axis) {
    const int rank = x.rank();
    axis = normalize_axis("softmax", axis, rank);
    const auto& shape = x.shape();
    int64_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= shape[i];
    for (int i = axis + 1; i < rank; ++i) inner *= shape[i];
    const int n = shape[axis];
    const auto& vx = x.values();
    std::vector<Real> y(vx.size());
    for (int64_t o = 0; o < outer; ++o) {
        for (int64_t in = 0; in < inner; ++in) {
            const int64_t base = o * n * inner + in;
            Real mx = vx[base];
            for (int j = 1; j < n; ++j) mx = std::max(mx, vx[base + j * inner]);
            Real sum = 0.0;
            for (int j = 0; j < n; ++j) {
                Real e = std::exp(vx[base + j * inner] - mx);
                y[base + j * inner] = e;
                sum += e;
            }
            const Real inv = 1.0 / sum;
            for (int j = 0; j < n; ++j) y[base + j * inner] *= inv;
        }
    }
    return make_op("softmax", x.shape(), std::move(y), {x}, [x, outer, inner, n](Node& node) {
        auto& gx = x.node()->ensure_grad();
        const auto& y = node.value;
        const auto& gy = node.grad;
        for (int64_t o = 0; o < outer; ++o) {
            for (int64_t in = 0; in < inner; ++in) {
                const int64_t base = o * n * inner + in;
                Real dot = 0.0;
                for (int j = 0; j < n; ++j) dot += gy[base + j * inner] * y[base + j * inner];
                for (int j = 0; j < n; ++j) {
                    const int64_t i = base + j * inner;
                    gx[i] += y[i] * (gy[i] - dot);
                }
            }
        }
    });
}

Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Real eps) {
    const int c = x.dim(-1);
    if (gamma.rank() != 1 || gamma.dim(0) != c || beta.rank() != 1 || beta.dim(0) != c) {
        throw ShapeError("layernorm: gamma/beta must be [C] with C matching the last axis");
    }
    const auto& vx = x.values();
    const auto& vg = gamma.values();
    const auto& vb = beta.values();
    const int64_t tokens = x.size() / c;
    std::vector<Real> y(vx.size());
    std::vector<Real> inv_std(tokens);
    std::vector<Real> xhat(vx.size());
    for (int64_t t = 0; t < tokens; ++t) {
        const Real* row = &vx[t * c];
        Real mu = 0.0;
        for (int j = 0; j < c; ++j) mu += row[j];
        mu /= c;
        Real var = 0.0;
        for (int j = 0; j < c; ++j) var += (row[j] - mu) * (row[j] - mu);
        var /= c;
        const Real is = 1.0 / std::sqrt(var + eps);
        inv_std[t] = is;
        for (int j = 0; j < c; ++j) {
            const Real xh = (row[j] - mu) * is;
            xhat[t * c + j] = xh;
            y[t * c + j] = xh * vg[j] + vb[j];
        }
    }
    return make_op("layernorm", x.shape(), std::move(y), {x, gamma, beta},
                   [x, gamma, beta, tokens, c, inv_std = std::move(inv_std),
                    xhat = std::move(xhat)](Node& node) {
                       const auto& gy = node.grad;
                       const auto& vg = gamma.node()->value;
                       if (gamma.node()->requires_grad) {
                           auto& gg = gamma.node()->ensure_grad();
                           for (int64_t t = 0; t < tokens; ++t)
                               for (int j = 0; j < c; ++j) gg[j] += gy[t * c + j] * xhat[t * c + j];
                       }
                       if (beta.node()->requires_grad) {
                           auto& gb = beta.node()->ensure_grad();
                           for (int64_t t = 0; t < tokens; ++t)
                               for (int j = 0; j < c; ++j) gb[j] += gy[t * c + j];
                       }
                       if (x.node()->requires_grad) {
                           auto& gx = x.node()->ensure_grad();
                           for (int64_t t = 0; t < tokens; ++t) {
                               Real m1 = 0.0, m2 = 0.0;
                               for (int j = 0; j < c; ++j) {
                                   const Real dxh = gy[t * c + j] * vg[j];
                                   m1 += dxh;
                                   m2 += dxh * xhat[t * c + j];
                               }
                               m1 /= c;
                               m2 /= c;
                               for (int j = 0; j < c; ++j) {
                                   const Real dxh = gy[t * c + j] * vg[j];
                                   gx[t * c + j] +=
                                       inv_std[t] * (dxh - m1 - xhat[t * c + j] * m2);
                               }
                           }
                       }
                   });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    if (w.rank() != 2) throw ShapeError("linear: weight must be 2-D");
    const int in = w.dim(0), out = w.dim(1);
    if (x.dim(-1) != in) {
        throw ShapeError("linear: input last dim " + std::to_string(x.dim(-1)) +
                         " != weight rows " + std::to_string(in));
    }
    if (b.rank() != 1 || b.dim(0) != out) throw ShapeError("linear: bias must be [out]");
    const int64_t rows = x.size() / in;
    Shape flat{static_cast<int>(rows), in};
    Tensor y2 = matmul(reshape(x, flat), w);
    // broadcast bias over rows
    const auto& vy = y2.values();
    const auto& vb = b.values();
    std::vector<Real> y(vy.size());
    for (int64_t r = 0; r < rows; ++r)
        for (int j = 0; j < out; ++j) y[r * out + j] = vy[r * out + j] + vb[j];
    Shape out_shape = x.shape();
    out_shape.back() = out;
    Tensor biased =
        make_op("bias_add", {static_cast<int>(rows), out}, std::move(y), {y2, b},
                [y2, b, rows, out](Node& node) {
                    if (y2.node()->requires_grad) {
                        auto& g = y2.node()->ensure_grad();
                        for (size_t i = 0; i < g.size(); ++i) g[i] += node.grad[i];
                    }
                    if (b.node()->requires_grad) {
                        auto& gb = b.node()->ensure_grad();
                        for (int64_t r = 0; r < rows; ++r)
                            for (int j = 0; j < out; ++j) gb[j] += node.grad[r * out + j];
                    }
                });
    return reshape(biased, out_shape);
}

Tensor concat(const std::vector<Tensor>& xs, int axis) {
    if (xs.empty()) throw ShapeError("concat: no inputs");
    const int rank = xs[0].rank();
    axis = normalize_axis("concat", axis, rank);
    Shape out_shape = xs[0].shape();
    int total = 0;
    for (const auto& t : xs) {
        if (t.rank() != rank) throw ShapeError("concat: rank mismatch");
        for (int i = 0; i < rank; ++i) {
            if (i != axis && t.dim(i) != out_shape[i])
                throw ShapeError("concat: non-axis extent mismatch");
        }
        total += t.dim(axis);
    }
    out_shape[axis] = total;
    int64_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= out_shape[i];
    for (int i = axis + 1; i < rank; ++i) inner *= out_shape[i];

    std::vector<Real> y(numel(out_shape));
    std::vector<int> offsets;  // axis offset per input
    int off = 0;
    for (const auto& t : xs) {
        offsets.push_back(off);
        const int na = t.dim(axis);
        const auto& v = t.values();
        for (int64_t o = 0; o < outer; ++o) {
            std::copy(v.begin() + o * na * inner, v.begin() + (o + 1) * na * inner,
                      y.begin() + (o * total + off) * inner);
        }
        off += na;
    }
    return make_op("concat", out_shape, std::move(y), xs,
                   [xs, offsets, outer, inner, total](Node& node) {
                       for (size_t k = 0; k < xs.size(); ++k) {
                           if (!xs[k].node()->requires_grad) continue;
                           auto& g = xs[k].node()->ensure_grad();
                           const int na = static_cast<int>(g.size() / (outer * inner));
                           const int off = offsets[k];
                           for (int64_t o = 0; o < outer; ++o) {
                               const Real* srcg = &node.grad[(o * total + off) * inner];
                               Real* dstg = &g[o * na * inner];
                               for (int64_t i = 0; i < na * inner; ++i) dstg[i] += srcg[i];
                           }
                       }
                   });
}

Tensor reshape(const Tensor& x, Shape shape) {
    if (numel(shape) != x.size()) {
        throw ShapeError("reshape: element count mismatch " + shape_str(x.shape()) + " -> " +
                         shape_str(shape));
    }
    return make_op("reshape", std::move(shape), x.values(), {x}, [x](Node& node) {
        auto& g = x.node()->ensure_grad();
        for (size_t i = 0; i < g.size(); ++i) g[i] += node.grad[i];
    });
}

Tensor gather(const Tensor& x, std::vector<int64_t> index, Shape out_shape) {
    if (numel(out_shape) != static_cast<int64_t>(index.size()))
        throw ShapeError("gather: index length does not match out shape");
    const auto& v = x.values();
    std::vector<Real> y(index.size());
    for (size_t i = 0; i < index.size(); ++i) {
        const int64_t j = index[i];
        if (j < 0 || j >= static_cast<int64_t>(v.size())) throw ShapeError("gather: index out of range");
        y[i] = v[j];
    }
    auto idx = std::make_shared<std::vector<int64_t>>(std::move(index));
    return make_op("gather", std::move(out_shape), std::move(y), {x}, [x, idx](Node& node) {
        auto& g = x.node()->ensure_grad();
        for (size_t i = 0; i < idx->size(); ++i) g[(*idx)[i]] += node.grad[i];
    });
}

Tensor transpose(const Tensor& x, const std::vector<int>& perm) {
    const int rank = x.rank();
    if (static_cast<int>(perm.size()) != rank) throw ShapeError("transpose: perm rank mismatch");
    std::vector<bool> seen(rank, false);
    for (int p : perm) {
        if (p < 0 || p >= rank || seen[p]) throw ShapeError("transpose: invalid permutation");
        seen[p] = true;
    }
    const auto& in_shape = x.shape();
    Shape out_shape(rank);
    for (int i = 0; i < rank; ++i) out_shape[i] = in_shape[perm[i]];

    std::vector<int64_t> in_strides(rank, 1), out_strides(rank, 1);
    for (int i = rank - 2; i >= 0; --i) in_strides[i] = in_strides[i + 1] * in_shape[i + 1];
    for (int i = rank - 2; i >= 0; --i) out_strides[i] = out_strides[i + 1] * out_shape[i + 1];

    std::vector<int64_t> index(x.size());
    std::vector<int> coord(rank, 0);
    for (int64_t o = 0; o < x.size(); ++o) {
        int64_t src = 0;
        for (int i = 0; i < rank; ++i) src += static_cast<int64_t>(coord[i]) * in_strides[perm[i]];
        index[o] = src;
        for (int i = rank - 1; i >= 0; --i) {
            if (++coord[i] < out_shape[i]) break;
            coord[i] = 0;
        }
    }
    return gather(x, std::move(index), out_shape);
}

Tensor sum(const Tensor& x) {
    Real s = 0.0;
    for (Real v : x.values()) s += v;
    return make_op("sum", {1}, {s}, {x}, [x](Node& node) {
        auto& g = x.node()->ensure_grad();
        const Real gy = node.grad[0];
        for (auto& gi : g) gi += gy;
    });
}

Tensor mean(const Tensor& x) {
    const Real inv = 1.0 / static_cast<Real>(x.size());
    Real s = 0.0;
    for (Real v : x.values()) s += v;
    return make_op("mean", {1}, {s * inv}, {x}, [x, inv](Node& node) {
        auto& g = x.node()->ensure_grad();
        const Real gy = node.grad[0] * inv;
        for (auto& gi : g) gi += gy;
    });
}

Tensor pwconv(const Tensor& x, const Tensor& w, const Tensor& b) {
    if (x.rank() != 3) throw ShapeError("pwconv: input must be [H,W,C]");
    return linear(x, w, b);
}

Tensor conv3x3(const Tensor& x, const Tensor& w, const Tensor& b) {
    if (x.rank() != 3) throw ShapeError("conv3x3: input must be [H,W,C]");
    if (w.rank() != 4 || w.dim(0) != 3 || w.dim(1) != 3 || w.dim(2) != x.dim(2))
        throw ShapeError("conv3x3: weight must be [3,3,Cin,Cout]");
    const int H = x.dim(0), W = x.dim(1), Cin = x.dim(2), Cout = w.dim(3);
    if (b.rank() != 1 || b.dim(0) != Cout) throw ShapeError("conv3x3: bias must be [Cout]");
    const auto& vx = x.values();
    const auto& vw = w.values();
    const auto& vb = b.values();
    std::vector<Real> y(static_cast<size_t>(H) * W * Cout);
    for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c)
            for (int co = 0; co < Cout; ++co) y[(static_cast<size_t>(r) * W + c) * Cout + co] = vb[co];
    for (int r = 0; r < H; ++r) {
        for (int c = 0; c < W; ++c) {
            Real* yrow = &y[(static_cast<size_t>(r) * W + c) * Cout];
            for (int kr = 0; kr < 3; ++kr) {
                const int sr = r + kr - 1;
                if (sr < 0 || sr >= H) continue;
                for (int kc = 0; kc < 3; ++kc) {
                    const int sc = c + kc - 1;
                    if (sc < 0 || sc >= W) continue;
                    const Real* xrow = &vx[(static_cast<size_t>(sr) * W + sc) * Cin];
                    const Real* wrow = &vw[((static_cast<size_t>(kr) * 3 + kc) * Cin) * Cout];
                    for (int ci = 0; ci < Cin; ++ci) {
                        const Real xv = xrow[ci];
                        const Real* wv = &wrow[static_cast<size_t>(ci) * Cout];
                        for (int co = 0; co < Cout; ++co) yrow[co] += xv * wv[co];
                    }
                }
            }
        }
    }
    return make_op("conv3x3", {H, W, Cout}, std::move(y), {x, w, b},
                   [x, w, b, H, W, Cin, Cout](Node& node) {
                       const auto& vx = x.node()->value;
                       const auto& vw = w.node()->value;
                       const auto& gy = node.grad;
                       const bool need_x = x.node()->requires_grad;
                       const bool need_w = w.node()->requires_grad;
                       if (b.node()->requires_grad) {
                           auto& gb = b.node()->ensure_grad();
                           for (int64_t p = 0; p < static_cast<int64_t>(H) * W; ++p)
                               for (int co = 0; co < Cout; ++co) gb[co] += gy[p * Cout + co];
                       }
                       if (!need_x && !need_w) return;
                       auto* gxd = need_x ? x.node()->ensure_grad().data() : nullptr;
                       auto* gwd = need_w ? w.node()->ensure_grad().data() : nullptr;
                       for (int r = 0; r < H; ++r) {
                           for (int c = 0; c < W; ++c) {
                               const Real* gyrow = &gy[(static_cast<size_t>(r) * W + c) * Cout];
                               for (int kr = 0; kr < 3; ++kr) {
                                   const int sr = r + kr - 1;
                                   if (sr < 0 || sr >= H) continue;
                                   for (int kc = 0; kc < 3; ++kc) {
                                       const int sc = c + kc - 1;
                                       if (sc < 0 || sc >= W) continue;
                                       const size_t xoff = (static_cast<size_t>(sr) * W + sc) * Cin;
                                       const size_t woff =
                                           (static_cast<size_t>(kr) * 3 + kc) * Cin * Cout;
                                       for (int ci = 0; ci < Cin; ++ci) {
                                           Real accx = 0.0;
                                           const Real xv = vx[xoff + ci];
                                           for (int co = 0; co < Cout; ++co) {
                                               const Real gv = gyrow[co];
                                               accx += gv * vw[woff + ci * Cout + co];
                                               if (need_w) gwd[woff + ci * Cout + co] += gv * xv;
                                           }
                                           if (need_x) gxd[xoff + ci] += accx;
                                       }
                                   }
                               }
                           }
                       }
                   });
}

Tensor upsample_nearest(const Tensor& x, int factor) {
    if (x.rank() != 3) throw ShapeError("upsample_nearest: input must be [H,W,C]");
    if (factor < 1) throw ShapeError("upsample_nearest: factor must be >= 1");
    const int H = x.dim(0), W = x.dim(1), C = x.dim(2);
    const int OH = H * factor, OW = W * factor;
    std::vector<int64_t> index(static_cast<size_t>(OH) * OW * C);
    size_t o = 0;
    for (int r = 0; r < OH; ++r) {
        const int sr = r / factor;
        for (int c = 0; c < OW; ++c) {
            const int sc = c / factor;
            const int64_t base = (static_cast<int64_t>(sr) * W + sc) * C;
            for (int ch = 0; ch < C; ++ch) index[o++] = base + ch;
        }
    }
    return gather(x, std::move(index), {OH, OW, C});
}

Tensor upsample_bilinear(const Tensor& x, int factor) {
    if (x.rank() != 3) throw ShapeError("upsample_bilinear: input must be [H,W,C]");
    if (factor < 1) throw ShapeError("upsample_bilinear: factor must be >= 1");
    const int H = x.dim(0), W = x.dim(1), C = x.dim(2);
    const int OH = H * factor, OW = W * factor;

    // Half-pixel-center mapping, clamped at the border.
    auto taps = [factor](int out, int extent) {
        Real s = (out + 0.5) / factor - 0.5;
        s = std::clamp(s, 0.0, static_cast<Real>(extent - 1));
        const int i0 = static_cast<int>(std::floor(s));
        const int i1 = std::min(i0 + 1, extent - 1);
        return std::tuple<int, int, Real>(i0, i1, s - i0);
    };

    std::vector<int> r0(OH), r1(OH);
    std::vector<Real> fr(OH);
    for (int r = 0; r < OH; ++r) std::tie(r0[r], r1[r], fr[r]) = taps(r, H);
    std::vector<int> c0(OW), c1(OW);
    std::vector<Real> fc(OW);
    for (int c = 0; c < OW; ++c) std::tie(c0[c], c1[c], fc[c]) = taps(c, W);

    const auto& vx = x.values();
    std::vector<Real> y(static_cast<size_t>(OH) * OW * C);
    for (int r = 0; r < OH; ++r) {
        for (int c = 0; c < OW; ++c) {
            const Real w00 = (1 - fr[r]) * (1 - fc[c]), w01 = (1 - fr[r]) * fc[c];
            const Real w10 = fr[r] * (1 - fc[c]), w11 = fr[r] * fc[c];
            const Real* p00 = &vx[(static_cast<size_t>(r0[r]) * W + c0[c]) * C];
            const Real* p01 = &vx[(static_cast<size_t>(r0[r]) * W + c1[c]) * C];
            const Real* p10 = &vx[(static_cast<size_t>(r1[r]) * W + c0[c]) * C];
            const Real* p11 = &vx[(static_cast<size_t>(r1[r]) * W + c1[c]) * C];
            Real* out = &y[(static_cast<size_t>(r) * OW + c) * C];
            for (int ch = 0; ch < C; ++ch)
                out[ch] = w00 * p00[ch] + w01 * p01[ch] + w10 * p10[ch] + w11 * p11[ch];
        }
    }
    return make_op("upsample_bilinear", {OH, OW, C}, std::move(y), {x},
                   [x, OH, OW, W, C, r0, r1, fr, c0, c1, fc](Node& node) {
                       auto& gx = x.node()->ensure_grad();
                       const auto& gy = node.grad;
                       for (int r = 0; r < OH; ++r) {
                           for (int c = 0; c < OW; ++c) {
                               const Real w00 = (1 - fr[r]) * (1 - fc[c]), w01 = (1 - fr[r]) * fc[c];
                               const Real w10 = fr[r] * (1 - fc[c]), w11 = fr[r] * fc[c];
                               const Real* g = &gy[(static_cast<size_t>(r) * OW + c) * C];
                               Real* g00 = &gx[(static_cast<size_t>(r0[r]) * W + c0[c]) * C];
                               Real* g01 = &gx[(static_cast<size_t>(r0[r]) * W + c1[c]) * C];
                               Real* g10 = &gx[(static_cast<size_t>(r1[r]) * W + c0[c]) * C];
                               Real* g11 = &gx[(static_cast<size_t>(r1[r]) * W + c1[c]) * C];
                               for (int ch = 0; ch < C; ++ch) {
                                   g00[ch] += w00 * g[ch];
                                   g01[ch] += w01 * g[ch];
                                   g10[ch] += w10 * g[ch];
                                   g11[ch] += w11 * g[ch];
                               }
                           }
                       }
                   });
}

Tensor cyclic_shift(const Tensor& x, int shift_r, int shift_c) {
    if (x.rank() != 3) throw ShapeError("cyclic_shift: input must be [H,W,C]");
    const int H = x.dim(0), W = x.dim(1), C = x.dim(2);
    auto wrap = [](int v, int m) { return ((v % m) + m) % m; };
    std::vector<int64_t> index(x.size());
    size_t o = 0;
    for (int r = 0; r < H; ++r) {
        const int sr = wrap(r - shift_r, H);
        for (int c = 0; c < W; ++c) {
            const int sc = wrap(c - shift_c, W);
            const int64_t base = (static_cast<int64_t>(sr) * W + sc) * C;
            for (int ch = 0; ch < C; ++ch) index[o++] = base + ch;
        }
    }
    return gather(x, std::move(index), x.shape());
}

Tensor grid_sample_offsets(const Tensor& src, const Tensor& off) {
    if (src.rank() != 3) throw ShapeError("grid_sample_offsets: src must be [H,W,C]");
    if (off.rank() != 3 || off.dim(2) != 2 || off.dim(0) != src.dim(0) || off.dim(1) != src.dim(1))
        throw ShapeError("grid_sample_offsets: off must be [H,W,2] matching src");
    const int H = src.dim(0), W = src.dim(1), C = src.dim(2);
    const auto& vs = src.values();
    const auto& vo = off.values();
    std::vector<Real> y(static_cast<size_t>(H) * W * C);
    for (int r = 0; r < H; ++r) {
        for (int c = 0; c < W; ++c) {
            const size_t oi = (static_cast<size_t>(r) * W + c) * 2;
            const Real sx = std::clamp(c + vo[oi + 0], 0.0, static_cast<Real>(W - 1));
            const Real sy = std::clamp(r + vo[oi + 1], 0.0, static_cast<Real>(H - 1));
            const int x0 = static_cast<int>(std::floor(sx));
            const int y0 = static_cast<int>(std::floor(sy));
            const int x1 = std::min(x0 + 1, W - 1);
            const int y1 = std::min(y0 + 1, H - 1);
            const Real fx = sx - x0, fy = sy - y0;
            const Real* p00 = &vs[(static_cast<size_t>(y0) * W + x0) * C];
            const Real* p01 = &vs[(static_cast<size_t>(y0) * W + x1) * C];
            const Real* p10 = &vs[(static_cast<size_t>(y1) * W + x0) * C];
            const Real* p11 = &vs[(static_cast<size_t>(y1) * W + x1) * C];
            Real* out = &y[(static_cast<size_t>(r) * W + c) * C];
            for (int ch = 0; ch < C; ++ch) {
                out[ch] = (1 - fy) * ((1 - fx) * p00[ch] + fx * p01[ch]) +
                          fy * ((1 - fx) * p10[ch] + fx * p11[ch]);
            }
        }
    }
    return make_op("grid_sample_offsets", {H, W, C}, std::move(y), {src, off},
                   [src, off, H, W, C](Node& node) {
                       const auto& vs = src.node()->value;
                       const auto& vo = off.node()->value;
                       const auto& gy = node.grad;
                       const bool need_src = src.node()->requires_grad;
                       const bool need_off = off.node()->requires_grad;
                       auto* gs = need_src ? src.node()->ensure_grad().data() : nullptr;
                       auto* go = need_off ? off.node()->ensure_grad().data() : nullptr;
                       for (int r = 0; r < H; ++r) {
                           for (int c = 0; c < W; ++c) {
                               const size_t oi = (static_cast<size_t>(r) * W + c) * 2;
                               const Real rx = c + vo[oi + 0];
                               const Real ry = r + vo[oi + 1];
                               const bool cx = rx <= 0.0 || rx >= W - 1;  // clamp kills d/dx
                               const bool cy = ry <= 0.0 || ry >= H - 1;
                               const Real sx = std::clamp(rx, 0.0, static_cast<Real>(W - 1));
                               const Real sy = std::clamp(ry, 0.0, static_cast<Real>(H - 1));
                               const int x0 = static_cast<int>(std::floor(sx));
                               const int y0 = static_cast<int>(std::floor(sy));
                               const int x1 = std::min(x0 + 1, W - 1);
                               const int y1 = std::min(y0 + 1, H - 1);
                               const Real fx = sx - x0, fy = sy - y0;
                               const size_t i00 = (static_cast<size_t>(y0) * W + x0) * C;
                               const size_t i01 = (static_cast<size_t>(y0) * W + x1) * C;
                               const size_t i10 = (static_cast<size_t>(y1) * W + x0) * C;
                               const size_t i11 = (static_cast<size_t>(y1) * W + x1) * C;
                               const Real* g = &gy[(static_cast<size_t>(r) * W + c) * C];
                               Real dx = 0.0, dy = 0.0;
                               for (int ch = 0; ch < C; ++ch) {
                                   const Real gv = g[ch];
                                   if (need_src) {
                                       gs[i00 + ch] += (1 - fy) * (1 - fx) * gv;
                                       gs[i01 + ch] += (1 - fy) * fx * gv;
                                       gs[i10 + ch] += fy * (1 - fx) * gv;
                                       gs[i11 + ch] += fy * fx * gv;
                                   }
                                   if (need_off) {
                                       dx += gv * ((1 - fy) * (vs[i01 + ch] - vs[i00 + ch]) +
                                                   fy * (vs[i11 + ch] - vs[i10 + ch]));
                                       dy += gv * ((1 - fx) * (vs[i10 + ch] - vs[i00 + ch]) +
                                                   fx * (vs[i11 + ch] - vs[i01 + ch]));
                                   }
                               }
                               if (need_off) {
                                   if (!cx) go[oi + 0] += dx;
                                   if (!cy) go[oi + 1] += dy;
                               }
                           }
                       }
                   });
}

Tensor window_partition(const Tensor& x, int ws) {
    if (x.rank() != 3) throw ShapeError("window_partition: input must be [H,W,C]");
    const int H = x.dim(0), W = x.dim(1), C = x.dim(2);
    if (ws < 1 || H % ws != 0 || W % ws != 0)
        throw ShapeError("window_partition: H and W must be divisible by the window size");
    const int gh = H / ws, gw = W / ws, nw = gh * gw, T = ws * ws;
    std::vector<int64_t> index(x.size());
    size_t o = 0;
    for (int wy = 0; wy < gh; ++wy)
        for (int wx = 0; wx < gw; ++wx)
            for (int iy = 0; iy < ws; ++iy)
                for (int ix = 0; ix < ws; ++ix) {
                    const int64_t base =
                        (static_cast<int64_t>(wy * ws + iy) * W + (wx * ws + ix)) * C;
                    for (int ch = 0; ch < C; ++ch) index[o++] = base + ch;
                }
    return gather(x, std::move(index), {nw, T, C});
}

Tensor window_reverse(const Tensor& windows, int ws, int h, int w) {
    if (windows.rank() != 3) throw ShapeError("window_reverse: input must be [nW,T,C]");
    const int C = windows.dim(2), T = windows.dim(1);
    if (T != ws * ws) throw ShapeError("window_reverse: token count != ws^2");
    const int gh = h / ws, gw = w / ws;
    if (h % ws != 0 || w % ws != 0 || windows.dim(0) != gh * gw)
        throw ShapeError("window_reverse: window count inconsistent with map size");
    std::vector<int64_t> index(windows.size());
    size_t o = 0;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const int wy = r / ws, wx = c / ws, iy = r % ws, ix = c % ws;
            const int64_t base =
                ((static_cast<int64_t>(wy * gw + wx) * T) + (iy * ws + ix)) * C;
            for (int ch = 0; ch < C; ++ch) index[o++] = base + ch;
        }
    return gather(windows, std::move(index), {h, w, C});
}

}  // namespace prl
