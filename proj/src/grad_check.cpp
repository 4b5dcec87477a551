#include "prl/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "prl/losses.hpp"
#include "prl/ops.hpp"
#include "prl/rng.hpp"

namespace prl {

using detail::Node;
using detail::make_op;

GradCheckResult grad_check(const std::string& name,
                           const std::function<Tensor(const std::vector<Tensor>&)>& f,
                           std::vector<Tensor> inputs, Real h, Real tol) {
    for (auto& x : inputs) x.set_requires_grad(true);

    Tensor y = f(inputs);
    if (y.size() != 1) throw ShapeError("grad_check: f must produce a scalar");
    for (auto& x : inputs) x.zero_grad();
    y.backward();

    std::vector<std::vector<Real>> analytic;
    for (auto& x : inputs) analytic.push_back(x.grad());

    GradCheckResult res{name, 0.0, tol, false};
    for (size_t k = 0; k < inputs.size(); ++k) {
        auto& vals = inputs[k].node()->value;
        for (size_t i = 0; i < vals.size(); ++i) {
            const Real keep = vals[i];
            vals[i] = keep + h;
            const Real fp = f(inputs).item();
            vals[i] = keep - h;
            const Real fm = f(inputs).item();
            vals[i] = keep;
            const Real numeric = (fp - fm) / (2.0 * h);
            const Real a = analytic[k][i];
            const Real rel =
                std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 0.01});
            res.max_rel_err = std::max(res.max_rel_err, rel);
        }
    }
    res.pass = res.max_rel_err < tol;
    return res;
}

GradCheckResult grad_check(const std::string& name,
                           const std::function<Tensor(const Tensor&)>& f, Tensor x, Real h,
                           Real tol) {
    return grad_check(
        name, [&f](const std::vector<Tensor>& xs) { return f(xs[0]); }, {std::move(x)}, h, tol);
}

namespace {

Tensor random_tensor(Rng& rng, Shape shape, Real lo = -1.0, Real hi = 1.0) {
    std::vector<Real> v(numel(shape));
    for (auto& x : v) x = rng.uniform(lo, hi);
    return Tensor::from_data(std::move(shape), std::move(v));
}

// Random values kept away from the relu kink at 0.
Tensor random_off_kink(Rng& rng, Shape shape) {
    std::vector<Real> v(numel(shape));
    for (auto& x : v) {
        x = rng.uniform(-1.0, 1.0);
        if (std::abs(x) < 0.05) x += x >= 0.0 ? 0.05 : -0.05;
    }
    return Tensor::from_data(std::move(shape), std::move(v));
}

// Reduces an arbitrary op output to a scalar with fixed random weights so
// every output component influences the check.
Tensor weighted_sum(const Tensor& y, Rng& rng) {
    std::vector<Real> w(y.size());
    for (auto& x : w) x = rng.uniform(-1.0, 1.0);
    return sum(mul(y, Tensor::from_data(y.shape(), std::move(w))));
}

// Identity with a sign-flipped backward rule; the grad-check failure path is
// exercised through it when inject_bug is set.
Tensor buggy_identity(const Tensor& x) {
    return make_op("buggy_identity", x.shape(), x.values(), {x}, [x](Node& n) {
        auto& g = x.node()->ensure_grad();
        for (size_t i = 0; i < g.size(); ++i) g[i] -= n.grad[i];
    });
}

struct SuiteRunner {
    uint64_t seed;
    int instances = 10;
    std::vector<GradCheckResult> results;

    // Runs `instances` random repetitions and records the worst one.
    void run(const std::string& name,
             const std::function<GradCheckResult(Rng&, int)>& one, Real tol = 1e-4) {
        GradCheckResult agg{name, 0.0, tol, true};
        for (int i = 0; i < instances; ++i) {
            Rng rng(seed, std::hash<std::string>{}(name) + i);
            GradCheckResult r = one(rng, i);
            agg.max_rel_err = std::max(agg.max_rel_err, r.max_rel_err);
            agg.pass = agg.pass && r.pass;
        }
        results.push_back(agg);
    }
};

}  // namespace

std::vector<GradCheckResult> run_kernel_grad_suite(uint64_t seed, bool inject_bug) {
    SuiteRunner s{seed};

    s.run("add", [](Rng& rng, int) {
        auto f = [](const std::vector<Tensor>& xs) { return sum(add(xs[0], xs[1])); };
        return grad_check("add", f, {random_tensor(rng, {3, 4}), random_tensor(rng, {3, 4})});
    });
    s.run("sub", [](Rng& rng, int) {
        auto f = [](const std::vector<Tensor>& xs) { return sum(sub(xs[0], xs[1])); };
        return grad_check("sub", f, {random_tensor(rng, {3, 4}), random_tensor(rng, {3, 4})});
    });
    s.run("mul", [](Rng& rng, int) {
        auto f = [](const std::vector<Tensor>& xs) { return sum(mul(xs[0], xs[1])); };
        return grad_check("mul", f, {random_tensor(rng, {3, 4}), random_tensor(rng, {3, 4})});
    });
    s.run("mul_scalar", [](Rng& rng, int) {
        auto f = [](const std::vector<Tensor>& xs) { return sum(mul_scalar(xs[0], -2.5)); };
        return grad_check("mul_scalar", f, {random_tensor(rng, {3, 4})});
    });
    s.run("relu", [](Rng& rng, int) {
        Rng wr(rng.seed(), rng.stream() + 1000);
        auto f = [&wr](const std::vector<Tensor>& xs) {
            Rng r2(wr.seed(), wr.stream());
            return weighted_sum(relu(xs[0]), r2);
        };
        return grad_check("relu", f, {random_off_kink(rng, {3, 4})});
    });
    auto unary_case = [&](const std::string& name, Tensor (*op)(const Tensor&), Real lo,
                          Real hi) {
        s.run(name, [name, op, lo, hi](Rng& rng, int) {
            Rng wr(rng.seed(), rng.stream() + 1000);
            auto f = [op, &wr](const std::vector<Tensor>& xs) {
                Rng r2(wr.seed(), wr.stream());
                return weighted_sum(op(xs[0]), r2);
            };
            return grad_check(name, f, {random_tensor(rng, {3, 4}, lo, hi)});
        });
    };
    unary_case("gelu", &gelu, -2.0, 2.0);
    unary_case("tanh", &tanh, -2.0, 2.0);
    unary_case("sigmoid", &sigmoid, -3.0, 3.0);
    unary_case("exp", &exp, -1.5, 1.5);
    unary_case("sqrt", &sqrt, 0.5, 2.0);

    s.run("matmul", [](Rng& rng, int) {
        Rng wr(rng.seed(), rng.stream() + 1000);
        auto f = [&wr](const std::vector<Tensor>& xs) {
            Rng r2(wr.seed(), wr.stream());
            return weighted_sum(matmul(xs[0], xs[1]), r2);
        };
        return grad_check("matmul", f,
                          {random_tensor(rng, {5, 4}), random_tensor(rng, {4, 3})}, 1e-4, 1e-6);
    });
    s.run("bmm", [](Rng& rng, int) {
        Rng wr(rng.seed(), rng.stream() + 1000);
        auto f = [&wr](const std::vector<Tensor>& xs) {
            Rng r2(wr.seed(), wr.stream());
            return weighted_sum(bmm(xs[0], xs[1]), r2);
        };
        return grad_check("bmm", f,
                          {random_tensor(rng, {2, 3, 4}), random_tensor(rng, {2, 4, 2})});
    });
    s.run("softmax", [](Rng& rng, int inst) {
        const int axis = inst % 2;
        Rng wr(rng.seed(), rng.stream() + 1000);
        auto f = [axis, &wr](const std::vector<Tensor>& xs) {
            Rng r2(wr.seed(), wr.stream());
            return weighted_sum(softmax(xs[0], axis), r2);
        };
        return grad_check("softmax", f, {random_tensor(rng, {4, 6}, -2.0, 2.0)});
    });
    s.run("layernorm", [](Rng& rng, int) {
        Rng wr(rng.seed(), rng.stream() + 1000);
        auto f = [&wr](const std::vector<Tensor>& xs) {
            Rng r2(wr.seed(), wr.stream());
            return weighted_sum(layernorm(xs[0], xs[1], xs[2]), r2);
        };
        return grad_check("layernorm", f,
                          {random_tensor(rng, {3, 5}), random_tensor(rng, {5}, 0.5, 1.5),
                           random_tensor(rng, {5})});
    });
    s.run("linear", [](Rng& rng, int) {
        Rng wr(rng.seed(), rng.stream() + 1000);
        auto f = [&wr](const std::vector<Tensor>& xs) {
            Rng r2(wr.seed(), wr.stream());
            return weighted_sum(linear(xs[0], xs[1], xs[2]), r2);
        };
        return grad_check("linear", f,
                          {random_tensor(rng, {2, 3, 4}), random_tensor(rng, {4, 3}),
                           random_tensor(rng, {3})});
    });
    s.run("concat", [](Rng& rng, int inst) {
        const int axis = inst % 2;
        Rng wr(rng.seed(), rng.stream() + 1000);
        auto f = [axis, &wr](const std::vector<Tensor>& xs) {
            Rng r2(wr.seed(), wr.stream());
            return weighted_sum(concat({xs[0], xs[1]}, axis), r2);
        };
        return grad_check("concat", f,
                          {random_tensor(rng, {2, 3}), random_tensor(rng, {2, 3})});
    });
    s.run("reshape", [](Rng& rng, int) {
        Rng wr(rng.seed(), rng.stream() + 1000);
        auto f = [&wr](const std::vector<Tensor>& xs) {
            Rng r2(wr.seed(), wr.stream());
            return weighted_sum(reshape(xs[0], {2, 6}), r2);
        };
        return grad_check("reshape", f, {random_tensor(rng, {3, 4})});
    });
    s.run("transpose", [](Rng& rng, int) {
        Rng wr(rng.seed(), rng.stream() + 1000);
        auto f = [&wr](const std::vector<Tensor>& xs) {
            Rng r2(wr.seed(), wr.stream());
            return weighted_sum(transpose(xs[0], {2, 0, 1}), r2);
        };
        return grad_check("transpose", f, {random_tensor(rng, {2, 3, 4})});
    });
    s.run("conv3x3", [](Rng& rng, int) {
        Rng wr(rng.seed(), rng.stream() + 1000);
        auto f = [&wr](const std::vector<Tensor>& xs) {
            Rng r2(wr.seed(), wr.stream());
            return weighted_sum(conv3x3(xs[0], xs[1], xs[2]), r2);
        };
        return grad_check("conv3x3", f,
                          {random_tensor(rng, {5, 6, 2}), random_tensor(rng, {3, 3, 2, 3}),
                           random_tensor(rng, {3})});
    });
    s.run("pwconv", [](Rng& rng, int) {
        Rng wr(rng.seed(), rng.stream() + 1000);
        auto f = [&wr](const std::vector<Tensor>& xs) {
            Rng r2(wr.seed(), wr.stream());
            return weighted_sum(pwconv(xs[0], xs[1], xs[2]), r2);
        };
        return grad_check("pwconv", f,
                          {random_tensor(rng, {4, 4, 3}), random_tensor(rng, {3, 2}),
                           random_tensor(rng, {2})});
    });
    s.run("upsample_nearest", [](Rng& rng, int) {
        Rng wr(rng.seed(), rng.stream() + 1000);
        auto f = [&wr](const std::vector<Tensor>& xs) {
            Rng r2(wr.seed(), wr.stream());
            return weighted_sum(upsample_nearest(xs[0], 2), r2);
        };
        return grad_check("upsample_nearest", f, {random_tensor(rng, {3, 3, 2})});
    });
    s.run("upsample_bilinear", [](Rng& rng, int) {
        Rng wr(rng.seed(), rng.stream() + 1000);
        auto f = [&wr](const std::vector<Tensor>& xs) {
            Rng r2(wr.seed(), wr.stream());
            return weighted_sum(upsample_bilinear(xs[0], 2), r2);
        };
        return grad_check("upsample_bilinear", f, {random_tensor(rng, {3, 3, 2})});
    });
    s.run("cyclic_shift", [](Rng& rng, int inst) {
        Rng wr(rng.seed(), rng.stream() + 1000);
        auto f = [inst, &wr](const std::vector<Tensor>& xs) {
            Rng r2(wr.seed(), wr.stream());
            return weighted_sum(cyclic_shift(xs[0], 1 + inst % 3, -1 - inst % 2), r2);
        };
        return grad_check("cyclic_shift", f, {random_tensor(rng, {4, 5, 2})});
    });
    s.run("window_partition", [](Rng& rng, int) {
        Rng wr(rng.seed(), rng.stream() + 1000);
        auto f = [&wr](const std::vector<Tensor>& xs) {
            Rng r2(wr.seed(), wr.stream());
            return weighted_sum(window_reverse(window_partition(xs[0], 2), 2, 4, 4), r2);
        };
        return grad_check("window_partition", f, {random_tensor(rng, {4, 4, 2})});
    });
    s.run("grid_sample_offsets", [](Rng& rng, int) {
        const int H = 6, W = 6, C = 2;
        Tensor src = random_tensor(rng, {H, W, C});
        // Sampling points inside the map and away from integer kinks and the
        // clamped border.
        std::vector<Real> off(static_cast<size_t>(H) * W * 2);
        for (int r = 0; r < H; ++r)
            for (int c = 0; c < W; ++c) {
                const Real tx = rng.uniform_index(W - 2) + rng.uniform(0.15, 0.85);
                const Real ty = rng.uniform_index(H - 2) + rng.uniform(0.15, 0.85);
                off[(static_cast<size_t>(r) * W + c) * 2 + 0] = tx - c;
                off[(static_cast<size_t>(r) * W + c) * 2 + 1] = ty - r;
            }
        Tensor offsets = Tensor::from_data({H, W, 2}, std::move(off));
        Rng wr(rng.seed(), rng.stream() + 1000);
        auto f = [&wr](const std::vector<Tensor>& xs) {
            Rng r2(wr.seed(), wr.stream());
            return weighted_sum(grid_sample_offsets(xs[0], xs[1]), r2);
        };
        return grad_check("grid_sample_offsets", f, {src, offsets});
    });
    s.run("sum", [](Rng& rng, int) {
        auto f = [](const std::vector<Tensor>& xs) { return sum(xs[0]); };
        return grad_check("sum", f, {random_tensor(rng, {3, 4})});
    });
    s.run("mean", [](Rng& rng, int) {
        auto f = [](const std::vector<Tensor>& xs) { return mean(xs[0]); };
        return grad_check("mean", f, {random_tensor(rng, {3, 4})});
    });

    if (inject_bug) {
        s.run("injected_bug(tanh)", [](Rng& rng, int) {
            Rng wr(rng.seed(), rng.stream() + 1000);
            auto f = [&wr](const std::vector<Tensor>& xs) {
                Rng r2(wr.seed(), wr.stream());
                return weighted_sum(tanh(buggy_identity(xs[0])), r2);
            };
            return grad_check("injected_bug(tanh)", f, {random_tensor(rng, {3, 4})});
        });
    }
    return s.results;
}

std::vector<GradCheckResult> run_loss_grad_suite(uint64_t seed) {
    SuiteRunner s{seed};

    s.run("loss_sdm", [](Rng& rng, int) {
        Tensor target = random_tensor(rng, {8, 8});
        auto f = [&target](const std::vector<Tensor>& xs) { return loss_sdm(xs[0], target); };
        return grad_check("loss_sdm", f, {random_tensor(rng, {8, 8})}, 1e-4, 1e-5);
    }, 1e-5);

    s.run("loss_df", [](Rng& rng, int) {
        // Vector pairs bounded away from zero norm, from parallel equality
        // and from the anti-parallel acos singularity.
        const int H = 8, W = 8;
        std::vector<Real> vp(static_cast<size_t>(H) * W * 2), vt(vp.size());
        for (size_t i = 0; i < vp.size() / 2; ++i) {
            const Real phi_t = rng.uniform(0.0, 6.283185307179586);
            const Real mag_t = rng.uniform(0.5, 2.0);
            vt[2 * i] = mag_t * std::cos(phi_t);
            vt[2 * i + 1] = mag_t * std::sin(phi_t);
            Real dphi = rng.uniform(0.05, 2.2);
            if (rng.uniform() < 0.5) dphi = -dphi;
            const Real mag_p = rng.uniform(0.5, 2.0);
            vp[2 * i] = mag_p * std::cos(phi_t + dphi);
            vp[2 * i + 1] = mag_p * std::sin(phi_t + dphi);
        }
        Tensor target = Tensor::from_data({H, W, 2}, std::move(vt));
        auto f = [&target](const std::vector<Tensor>& xs) { return loss_df(xs[0], target); };
        return grad_check("loss_df", f, {Tensor::from_data({H, W, 2}, std::move(vp))});
    });

    s.run("loss_ds", [](Rng& rng, int) {
        const int H = 8, W = 8;
        BinaryMask gt{H, W, {}};
        gt.values.resize(static_cast<size_t>(H) * W);
        bool has_fg = false, has_bg = false;
        for (auto& v : gt.values) {
            v = rng.uniform() < 0.4 ? 1 : 0;
            (v ? has_fg : has_bg) = true;
        }
        if (!has_fg) gt.values[0] = 1;
        if (!has_bg) gt.values[1] = 0;
        const DirectionField field = direction_field(gt);
        auto f = [&gt, &field](const std::vector<Tensor>& xs) {
            return loss_ds(xs[0], gt, field);
        };
        // psi has curvature ~1/psi_eps near zero differences, so the
        // difference step must sit well below that scale.
        return grad_check("loss_ds", f, {random_tensor(rng, {H, W}, 0.0, 1.0)}, 1e-6);
    });

    return s.results;
}

}  // namespace prl
