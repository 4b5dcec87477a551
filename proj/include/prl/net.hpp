#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "prl/config.hpp"
#include "prl/image_io.hpp"
#include "prl/ops.hpp"
#include "prl/rng.hpp"
#include "prl/tensor.hpp"

namespace prl {

using NamedParams = std::vector<std::pair<std::string, Tensor>>;

// Every stated dimension of the architecture as a pure function of the
// config; usable as a dry run without allocating weights.
struct ShapeChain {
    int h = 0, w = 0, c = 0;
    std::array<int, 4> enc_grid{};  // per stream, stages 1..4
    std::array<int, 4> enc_ch{};
    int sdmam_grid = 0;       // h/4
    int sdmam_scale_ch = 32;  // every y^i
    int sdmam_concat_ch = 96;
    int z4_grid = 0, z4_ch = 0;  // h/32, 8c
    int z3_grid = 0, z3_ch = 0;  // h/16, 4c
    int z2_grid = 0, z2_ch = 0;  // h/8, 2c
    int z1_grid = 0, z1_ch = 0;  // h/4, c
    int z_ch = 64;               // decoder output at full resolution
    int zstar_ch = 0;            // 2c
    int df_ch = 2;
    int sal_ch = 1;
};
ShapeChain compute_shape_chain(const NetConfig& cfg);

struct LinearLayer {
    Tensor w, b;
    void init(Rng& rng, int in, int out);
    Tensor operator()(const Tensor& x) const { return linear(x, w, b); }
    void collect(NamedParams& out, const std::string& prefix) const;
};

struct LayerNormLayer {
    Tensor gamma, beta;
    void init(int c);
    Tensor operator()(const Tensor& x) const { return layernorm(x, gamma, beta); }
    void collect(NamedParams& out, const std::string& prefix) const;
};

struct Mlp {
    LinearLayer fc1, fc2;
    void init(Rng& rng, int c, int hidden);
    Tensor operator()(const Tensor& x) const { return fc2(gelu(fc1(x))); }
    void collect(NamedParams& out, const std::string& prefix) const;
};

// Multi-head scaled dot-product attention over already-partitioned windows.
struct WindowAttention {
    LinearLayer q, k, v, proj;
    int heads = 1;
    void init(Rng& rng, int c, int n_heads);
    // x: [nW,T,C]; mask (optional) is additive, pre-expanded to [nW*heads,T,T].
    Tensor operator()(const Tensor& x, const Tensor* mask = nullptr) const;
    // Same computation, also returning the post-softmax attention rows.
    std::pair<Tensor, Tensor> forward_with_probs(const Tensor& x,
                                                 const Tensor* mask = nullptr) const;
    void collect(NamedParams& out, const std::string& prefix) const;
};

// Additive attention mask for shifted windows: tokens from different
// pre-shift regions must not attend across the wrap seam.
Tensor make_swmsa_mask(int h, int w, int window, int shift, int heads);

Tensor wmsa(const Tensor& x, const WindowAttention& attn, int window);
Tensor swmsa(const Tensor& x, const WindowAttention& attn, int window, int shift,
             const Tensor& mask);

// One W-MSA block plus one SW-MSA block, each LN -> attention/MLP -> residual.
struct SwinBlockPair {
    LayerNormLayer ln1, ln2, ln3, ln4;
    WindowAttention attn_w, attn_sw;
    Mlp mlp1, mlp2;
    int window = 0, shift = 0;
    Tensor mask;  // defined only when shift > 0
    void init(Rng& rng, int c, int n_heads, int grid, const NetConfig& cfg);
    Tensor operator()(const Tensor& x) const;  // x: [H,W,C]
    void collect(NamedParams& out, const std::string& prefix) const;
};

// [H,W,C] -> [H/2,W/2,4C] by stacking each 2x2 neighborhood channelwise, and
// the inverse expansion [H,W,4C'] -> [2H,2W,C'].
Tensor merge_2x2(const Tensor& x);
Tensor split_2x2(const Tensor& x);

struct PatchMerge {
    LinearLayer reduce;  // 4C -> 2C
    void init(Rng& rng, int c_in);
    Tensor operator()(const Tensor& x) const { return reduce(merge_2x2(x)); }
    void collect(NamedParams& out, const std::string& prefix) const;
};

struct PatchSeparate {
    LinearLayer expand;  // C -> 2C, then each token becomes a 2x2 block of C/2
    void init(Rng& rng, int c_in);
    Tensor operator()(const Tensor& x) const { return split_2x2(expand(x)); }
    void collect(NamedParams& out, const std::string& prefix) const;
};

struct PatchEmbed {
    LinearLayer proj;  // patch*patch*3 -> c (a stride-4 4x4 conv in matrix form)
    int patch = 4;
    void init(Rng& rng, int patch_size, int c);
    Tensor operator()(const Tensor& img) const;  // [H,W,3] -> [H/p,W/p,c]
    void collect(NamedParams& out, const std::string& prefix) const;
};

struct FeaturePyramid {
    std::array<Tensor, 4> x;  // x^1..x^4
};

struct EncoderStream {
    PatchEmbed embed;
    std::array<std::vector<SwinBlockPair>, 4> stages;
    std::array<PatchMerge, 3> merges;
    void init(Rng& rng, const NetConfig& cfg);
    FeaturePyramid operator()(const Tensor& img) const;
    void collect(NamedParams& out, const std::string& prefix) const;
};

// Predicts the signed distance map from the three shallow scales
// (concatenated RGB-T channels): pointwise conv + relu to 32 channels per
// scale, upsample to the h/4 grid, concat, 3x3 conv to 1 channel, tanh,
// upsample x4.
struct Sdmam {
    std::array<LinearLayer, 3> pw;
    Tensor fuse_w, fuse_b;  // 3x3 conv, 96 -> 1
    void init(Rng& rng, int c);
    Tensor operator()(const Tensor& x1, const Tensor& x2, const Tensor& x3) const;
    void collect(NamedParams& out, const std::string& prefix) const;
};

// Cross-spectrum fusion: concatenated deepest features, full (non-windowed)
// multi-head attention, no output projection.
struct FusionAttention {
    LinearLayer q, k, v;  // 16c -> 8c
    int heads = 1;
    void init(Rng& rng, int c, int n_heads);
    Tensor operator()(const Tensor& x4r, const Tensor& x4t) const;
    std::pair<Tensor, Tensor> forward_with_probs(const Tensor& x4r, const Tensor& x4t) const;
    void collect(NamedParams& out, const std::string& prefix) const;
};

struct RstStage {
    LinearLayer skip_proj;  // (z + both skips) -> stage width
    SwinBlockPair stb;
    PatchSeparate ps;
    void init(Rng& rng, int z_ch, int skip_ch, int n_heads, int grid, const NetConfig& cfg);
    Tensor operator()(const Tensor& z, const Tensor& xr, const Tensor& xt) const;
    void collect(NamedParams& out, const std::string& prefix) const;
};

struct Decoder {
    std::array<RstStage, 3> stages;  // applied for i = 3, 2, 1
    LinearLayer out_proj;            // c -> 64 before the final x4 upsample
    void init(Rng& rng, const NetConfig& cfg);
    Tensor operator()(const Tensor& z4, const FeaturePyramid& r, const FeaturePyramid& t) const;
    void collect(NamedParams& out, const std::string& prefix) const;
};

// Iterative refinement along the predicted field. Warp mode resamples the
// previous iterate at p + F(p); additive mode adds a learned projection of F
// each iteration. Both are differentiable in z and F.
Tensor frdf_refine(const Tensor& z, const Tensor& field, int iterations, FrdfMode mode,
                   const LinearLayer* field_proj = nullptr);

struct Frdf {
    LinearLayer zstar_proj;  // 64 -> 2c after refinement
    LinearLayer field_proj;  // 2 -> 64, used by additive mode
    FrdfMode mode = FrdfMode::kWarp;
    int iterations = 5;
    void init(Rng& rng, const NetConfig& cfg);
    Tensor operator()(const Tensor& z, const Tensor& field) const;
    void collect(NamedParams& out, const std::string& prefix) const;
};

struct PrlNet {
    NetConfig cfg;
    EncoderStream enc_r, enc_t;
    Sdmam sdmam;
    FusionAttention fusion;
    Decoder decoder;
    LinearLayer df_head;  // 64 -> 2
    Frdf frdf;
    LinearLayer sal_head;  // 64 + 2c -> 1, sigmoid

    struct Forward {
        FeaturePyramid pyr_r, pyr_t;
        Tensor sdm;    // [h,w,1], tanh range
        Tensor z4;     // [h/32,w/32,8c]
        Tensor z;      // [h,w,64]
        Tensor df;     // [h,w,2]
        Tensor zstar;  // [h,w,2c]
        Tensor sal;    // [h,w,1], sigmoid range
    };

    static PrlNet create(const NetConfig& cfg, Rng& rng);
    Forward forward(const Tensor& rgb, const Tensor& thermal) const;
    NamedParams params() const;
    void load_params(const NamedParams& tensors);
};

// [h,w,3] in [0,1]; single-channel thermal inputs are replicated outside.
Tensor image_to_tensor(const RgbImage& img);

struct Adam {
    Real lr = 1e-3;
    Real beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    int64_t t = 0;
    std::vector<std::vector<Real>> m, v;
    explicit Adam(const NamedParams& params, Real learning_rate = 1e-3);
    // Applies one update from accumulated gradients, then clears them.
    void step(NamedParams& params);
};

}  // namespace prl
