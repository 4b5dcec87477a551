#pragma once

#include <functional>
#include <string>
#include <vector>

#include "prl/tensor.hpp"

namespace prl {

struct GradCheckResult {
    std::string name;
    double max_rel_err = 0.0;
    double tol = 0.0;
    bool pass = false;
};

// Compares reverse-mode gradients of a scalar function against central finite
// differences with step h. Relative error per component is
// |a - n| / max(|a|, |n|, 0.01); the floor keeps near-zero gradients from
// inflating the ratio with finite-difference noise. f must be twice
// differentiable at the probe points (callers keep inputs off relu kinks,
// clamp boundaries and zero-norm vectors). Throws ShapeError if f is not
// scalar.
GradCheckResult grad_check(const std::string& name,
                           const std::function<Tensor(const std::vector<Tensor>&)>& f,
                           std::vector<Tensor> inputs, Real h = 1e-4, Real tol = 1e-4);

GradCheckResult grad_check(const std::string& name,
                           const std::function<Tensor(const Tensor&)>& f, Tensor x,
                           Real h = 1e-4, Real tol = 1e-4);

// Finite-difference suites over every differentiable kernel and the three
// supervision losses, >= 10 random instances each. inject_bug flips the sign
// of one analytic gradient so the failure path itself stays tested.
std::vector<GradCheckResult> run_kernel_grad_suite(uint64_t seed, bool inject_bug = false);
std::vector<GradCheckResult> run_loss_grad_suite(uint64_t seed);

}  // namespace prl
