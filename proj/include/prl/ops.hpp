#pragma once

#include <cstdint>
#include <vector>

#include "prl/tensor.hpp"

namespace prl {

// Elementwise (same shape, except the _scalar variants).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& a, Real s);
Tensor mul_scalar(const Tensor& a, Real s);
Tensor neg(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor gelu(const Tensor& a);  // tanh approximation
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor sqrt(const Tensor& a);  // pre: strictly positive input when grad is needed
Tensor square(const Tensor& a);

// matmul is strictly 2-D: [m,k]x[k,n] -> [m,n]. bmm batches over a shared
// leading dim: [B,m,k]x[B,k,n] -> [B,m,n].
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor bmm(const Tensor& a, const Tensor& b);

Tensor softmax(const Tensor& x, int axis);
// Normalizes the last axis; gamma/beta are [C].
Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Real eps = 1e-5);
// Last-axis affine map: [..,in]x[in,out]+[out].
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

Tensor concat(const std::vector<Tensor>& xs, int axis);
Tensor reshape(const Tensor& x, Shape shape);
Tensor transpose(const Tensor& x, const std::vector<int>& perm);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// Pure element relocation: out[i] = x[index[i]]. Backward scatter-adds, so
// repeated indices are fine. Building block for the layout ops below.
Tensor gather(const Tensor& x, std::vector<int64_t> index, Shape out_shape);

// Spatial ops on [H,W,C] maps.
Tensor pwconv(const Tensor& x, const Tensor& w, const Tensor& b);  // 1x1 conv == linear
Tensor conv3x3(const Tensor& x, const Tensor& w, const Tensor& b);  // w: [3,3,Cin,Cout], zero pad
Tensor upsample_nearest(const Tensor& x, int factor);
Tensor upsample_bilinear(const Tensor& x, int factor);
Tensor cyclic_shift(const Tensor& x, int shift_r, int shift_c);  // 2-D roll over H,W

// Bilinear sample of src at (col + off[..,0], row + off[..,1]), coordinates
// clamped to the border; differentiable in both src and off.
Tensor grid_sample_offsets(const Tensor& src, const Tensor& off);

// [H,W,C] -> [nW, ws*ws, C]; windows row-major over the window grid, tokens
// row-major within a window. window_reverse is the exact inverse.
Tensor window_partition(const Tensor& x, int ws);
Tensor window_reverse(const Tensor& windows, int ws, int h, int w);

}  // namespace prl
