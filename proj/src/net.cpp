#include "prl/net.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace prl {

namespace {

Tensor trunc_normal_param(Rng& rng, Shape shape, Real stddev = 0.02) {
    std::vector<Real> v(numel(shape));
    for (auto& x : v) x = rng.trunc_normal(stddev);
    return Tensor::from_data(std::move(shape), std::move(v), /*requires_grad=*/true);
}

Tensor zeros_param(Shape shape) { return Tensor::zeros(std::move(shape), true); }

}  // namespace

ShapeChain compute_shape_chain(const NetConfig& cfg) {
    cfg.validate_shapes();
    ShapeChain s;
    s.h = s.w = cfg.image_size;
    s.c = cfg.embed_dim;
    for (int i = 0; i < 4; ++i) {
        s.enc_grid[i] = cfg.image_size / cfg.patch_size / (1 << i);
        s.enc_ch[i] = cfg.embed_dim * (1 << i);
    }
    s.sdmam_grid = s.enc_grid[0];
    s.z4_grid = s.enc_grid[3];
    s.z4_ch = 8 * cfg.embed_dim;
    s.z3_grid = s.enc_grid[2];
    s.z3_ch = 4 * cfg.embed_dim;
    s.z2_grid = s.enc_grid[1];
    s.z2_ch = 2 * cfg.embed_dim;
    s.z1_grid = s.enc_grid[0];
    s.z1_ch = cfg.embed_dim;
    s.zstar_ch = 2 * cfg.embed_dim;
    return s;
}

void LinearLayer::init(Rng& rng, int in, int out) {
    w = trunc_normal_param(rng, {in, out});
    b = zeros_param({out});
}

void LinearLayer::collect(NamedParams& out, const std::string& prefix) const {
    out.emplace_back(prefix + ".w", w);
    out.emplace_back(prefix + ".b", b);
}

void LayerNormLayer::init(int c) {
    gamma = Tensor::full({c}, 1.0, true);
    beta = zeros_param({c});
}

void LayerNormLayer::collect(NamedParams& out, const std::string& prefix) const {
    out.emplace_back(prefix + ".gamma", gamma);
    out.emplace_back(prefix + ".beta", beta);
}

void Mlp::init(Rng& rng, int c, int hidden) {
    fc1.init(rng, c, hidden);
    fc2.init(rng, hidden, c);
}

void Mlp::collect(NamedParams& out, const std::string& prefix) const {
    fc1.collect(out, prefix + ".fc1");
    fc2.collect(out, prefix + ".fc2");
}

void WindowAttention::init(Rng& rng, int c, int n_heads) {
    if (c % n_heads != 0) throw Error("attention width not divisible by head count");
    heads = n_heads;
    q.init(rng, c, c);
    k.init(rng, c, c);
    v.init(rng, c, c);
    proj.init(rng, c, c);
}

std::pair<Tensor, Tensor> WindowAttention::forward_with_probs(const Tensor& x,
                                                              const Tensor* mask) const {
    const int nw = x.dim(0), T = x.dim(1), C = x.dim(2);
    const int d = C / heads;
    auto to_heads = [&](const Tensor& t) {
        return reshape(transpose(reshape(t, {nw, T, heads, d}), {0, 2, 1, 3}),
                       {nw * heads, T, d});
    };
    Tensor qh = to_heads(q(x));
    Tensor kh = to_heads(k(x));
    Tensor vh = to_heads(v(x));
    Tensor logits = mul_scalar(bmm(qh, transpose(kh, {0, 2, 1})), 1.0 / std::sqrt(static_cast<Real>(d)));
    if (mask) logits = add(logits, *mask);
    Tensor probs = softmax(logits, 2);
    Tensor out = bmm(probs, vh);
    out = reshape(transpose(reshape(out, {nw, heads, T, d}), {0, 2, 1, 3}), {nw, T, C});
    return {proj(out), probs};
}

Tensor WindowAttention::operator()(const Tensor& x, const Tensor* mask) const {
    return forward_with_probs(x, mask).first;
}

void WindowAttention::collect(NamedParams& out, const std::string& prefix) const {
    q.collect(out, prefix + ".q");
    k.collect(out, prefix + ".k");
    v.collect(out, prefix + ".v");
    proj.collect(out, prefix + ".proj");
}

Tensor make_swmsa_mask(int h, int w, int window, int shift, int heads) {
    // Region labels follow the usual 3-slice construction on the shifted
    // layout; windows then mask any cross-region token pair.
    auto region_of = [&](int r, int extent) {
        if (r < extent - window) return 0;
        if (r < extent - shift) return 1;
        return 2;
    };
    std::vector<int> region(static_cast<size_t>(h) * w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            region[static_cast<size_t>(r) * w + c] = region_of(r, h) * 3 + region_of(c, w);

    const int gh = h / window, gw = w / window, T = window * window;
    const int nw = gh * gw;
    std::vector<Real> mask(static_cast<size_t>(nw) * heads * T * T, 0.0);
    for (int wy = 0; wy < gh; ++wy)
        for (int wx = 0; wx < gw; ++wx) {
            const int wi = wy * gw + wx;
            for (int a = 0; a < T; ++a)
                for (int b = 0; b < T; ++b) {
                    const int ra = region[static_cast<size_t>(wy * window + a / window) * w +
                                          wx * window + a % window];
                    const int rb = region[static_cast<size_t>(wy * window + b / window) * w +
                                          wx * window + b % window];
                    if (ra != rb) {
                        for (int hd = 0; hd < heads; ++hd)
                            mask[((static_cast<size_t>(wi) * heads + hd) * T + a) * T + b] = -1e9;
                    }
                }
        }
    return Tensor::from_data({nw * heads, T, T}, std::move(mask));
}

Tensor wmsa(const Tensor& x, const WindowAttention& attn, int window) {
    const int h = x.dim(0), w = x.dim(1);
    return window_reverse(attn(window_partition(x, window)), window, h, w);
}

Tensor swmsa(const Tensor& x, const WindowAttention& attn, int window, int shift,
             const Tensor& mask) {
    if (shift == 0) return wmsa(x, attn, window);
    const int h = x.dim(0), w = x.dim(1);
    Tensor shifted = cyclic_shift(x, -shift, -shift);
    Tensor out = window_reverse(attn(window_partition(shifted, window), &mask), window, h, w);
    return cyclic_shift(out, shift, shift);
}

void SwinBlockPair::init(Rng& rng, int c, int n_heads, int grid, const NetConfig& cfg) {
    window = cfg.effective_window(grid);
    shift = window < grid ? window / 2 : 0;  // single-window grids do not shift
    ln1.init(c);
    ln2.init(c);
    ln3.init(c);
    ln4.init(c);
    attn_w.init(rng, c, n_heads);
    attn_sw.init(rng, c, n_heads);
    mlp1.init(rng, c, 4 * c);
    mlp2.init(rng, c, 4 * c);
    if (shift > 0) mask = make_swmsa_mask(grid, grid, window, shift, n_heads);
}

Tensor SwinBlockPair::operator()(const Tensor& x) const {
    Tensor z = add(x, wmsa(ln1(x), attn_w, window));
    z = add(z, mlp1(ln2(z)));
    z = add(z, swmsa(ln3(z), attn_sw, window, shift, mask));
    z = add(z, mlp2(ln4(z)));
    return z;
}

void SwinBlockPair::collect(NamedParams& out, const std::string& prefix) const {
    ln1.collect(out, prefix + ".ln1");
    attn_w.collect(out, prefix + ".wmsa");
    ln2.collect(out, prefix + ".ln2");
    mlp1.collect(out, prefix + ".mlp1");
    ln3.collect(out, prefix + ".ln3");
    attn_sw.collect(out, prefix + ".swmsa");
    ln4.collect(out, prefix + ".ln4");
    mlp2.collect(out, prefix + ".mlp2");
}

Tensor merge_2x2(const Tensor& x) {
    const int h = x.dim(0), w = x.dim(1), c = x.dim(2);
    if (h % 2 != 0 || w % 2 != 0) throw ShapeError("merge_2x2: odd spatial extents");
    std::vector<int64_t> idx(x.size());
    size_t o = 0;
    for (int r = 0; r < h / 2; ++r)
        for (int col = 0; col < w / 2; ++col)
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                    const int64_t base = (static_cast<int64_t>(2 * r + dy) * w + 2 * col + dx) * c;
                    for (int ch = 0; ch < c; ++ch) idx[o++] = base + ch;
                }
    return gather(x, std::move(idx), {h / 2, w / 2, 4 * c});
}

Tensor split_2x2(const Tensor& x) {
    const int h = x.dim(0), w = x.dim(1), c4 = x.dim(2);
    if (c4 % 4 != 0) throw ShapeError("split_2x2: channels must be divisible by 4");
    const int c = c4 / 4;
    std::vector<int64_t> idx(x.size());
    size_t o = 0;
    for (int r = 0; r < 2 * h; ++r)
        for (int col = 0; col < 2 * w; ++col) {
            const int sub = (r % 2) * 2 + (col % 2);
            const int64_t base =
                (static_cast<int64_t>(r / 2) * w + col / 2) * c4 + static_cast<int64_t>(sub) * c;
            for (int ch = 0; ch < c; ++ch) idx[o++] = base + ch;
        }
    return gather(x, std::move(idx), {2 * h, 2 * w, c});
}

void PatchMerge::init(Rng& rng, int c_in) { reduce.init(rng, 4 * c_in, 2 * c_in); }

void PatchMerge::collect(NamedParams& out, const std::string& prefix) const {
    reduce.collect(out, prefix + ".reduce");
}

void PatchSeparate::init(Rng& rng, int c_in) {
    if (c_in % 2 != 0) throw Error("patch separating needs an even channel count");
    expand.init(rng, c_in, 2 * c_in);
}

void PatchSeparate::collect(NamedParams& out, const std::string& prefix) const {
    expand.collect(out, prefix + ".expand");
}

void PatchEmbed::init(Rng& rng, int patch_size, int c) {
    patch = patch_size;
    proj.init(rng, patch * patch * 3, c);
}

Tensor PatchEmbed::operator()(const Tensor& img) const {
    const int h = img.dim(0), w = img.dim(1), c = img.dim(2);
    if (c != 3) throw ShapeError("patch embed expects a 3-channel image");
    if (h % patch != 0 || w % patch != 0)
        throw ShapeError("image extents must be divisible by the patch size");
    const int gh = h / patch, gw = w / patch;
    std::vector<int64_t> idx(img.size());
    size_t o = 0;
    for (int r = 0; r < gh; ++r)
        for (int col = 0; col < gw; ++col)
            for (int dy = 0; dy < patch; ++dy)
                for (int dx = 0; dx < patch; ++dx) {
                    const int64_t base =
                        (static_cast<int64_t>(r * patch + dy) * w + col * patch + dx) * 3;
                    for (int ch = 0; ch < 3; ++ch) idx[o++] = base + ch;
                }
    Tensor patches = gather(img, std::move(idx), {gh, gw, patch * patch * 3});
    return proj(patches);
}

void PatchEmbed::collect(NamedParams& out, const std::string& prefix) const {
    proj.collect(out, prefix + ".proj");
}

void EncoderStream::init(Rng& rng, const NetConfig& cfg) {
    embed.init(rng, cfg.patch_size, cfg.embed_dim);
    for (int i = 0; i < 4; ++i) {
        const int grid = cfg.image_size / cfg.patch_size / (1 << i);
        const int ch = cfg.embed_dim * (1 << i);
        stages[i].resize(cfg.blocks[i]);
        for (auto& blk : stages[i]) blk.init(rng, ch, cfg.heads[i], grid, cfg);
        if (i < 3) merges[i].init(rng, ch);
    }
}

FeaturePyramid EncoderStream::operator()(const Tensor& img) const {
    FeaturePyramid pyr;
    Tensor t = embed(img);
    for (int i = 0; i < 4; ++i) {
        for (const auto& blk : stages[i]) t = blk(t);
        pyr.x[i] = t;
        if (i < 3) t = merges[i](t);
    }
    return pyr;
}

void EncoderStream::collect(NamedParams& out, const std::string& prefix) const {
    embed.collect(out, prefix + ".embed");
    for (int i = 0; i < 4; ++i) {
        for (size_t b = 0; b < stages[i].size(); ++b)
            stages[i][b].collect(out, prefix + ".stage" + std::to_string(i + 1) + ".block" +
                                          std::to_string(b));
        if (i < 3) merges[i].collect(out, prefix + ".merge" + std::to_string(i + 1));
    }
}

void Sdmam::init(Rng& rng, int c) {
    for (int i = 0; i < 3; ++i) pw[i].init(rng, 2 * c * (1 << i), 32);
    fuse_w = trunc_normal_param(rng, {3, 3, 96, 1});
    fuse_b = zeros_param({1});
}

Tensor Sdmam::operator()(const Tensor& x1, const Tensor& x2, const Tensor& x3) const {
    const std::array<const Tensor*, 3> xs{&x1, &x2, &x3};
    std::vector<Tensor> ys;
    for (int i = 0; i < 3; ++i) {
        Tensor y = relu(pwconv(*xs[i], pw[i].w, pw[i].b));
        if (i > 0) y = upsample_bilinear(y, 1 << i);
        ys.push_back(y);
    }
    Tensor y = concat(ys, 2);
    return upsample_bilinear(tanh(conv3x3(y, fuse_w, fuse_b)), 4);
}

void Sdmam::collect(NamedParams& out, const std::string& prefix) const {
    for (int i = 0; i < 3; ++i) pw[i].collect(out, prefix + ".pw" + std::to_string(i + 1));
    out.emplace_back(prefix + ".fuse.w", fuse_w);
    out.emplace_back(prefix + ".fuse.b", fuse_b);
}

void FusionAttention::init(Rng& rng, int c, int n_heads) {
    heads = n_heads;
    q.init(rng, 16 * c, 8 * c);
    k.init(rng, 16 * c, 8 * c);
    v.init(rng, 16 * c, 8 * c);
}

std::pair<Tensor, Tensor> FusionAttention::forward_with_probs(const Tensor& x4r,
                                                              const Tensor& x4t) const {
    if (x4r.shape() != x4t.shape()) throw ShapeError("fusion: stream shapes differ");
    const int g = x4r.dim(0), gw = x4r.dim(1);
    Tensor x = concat({x4r, x4t}, 2);  // 16c channels
    const int n = g * gw;
    const int width = q.w.dim(1);  // 8c
    const int d = width / heads;
    Tensor tokens = reshape(x, {n, x.dim(2)});
    auto to_heads = [&](const Tensor& t) {
        return transpose(reshape(t, {n, heads, d}), {1, 0, 2});  // [heads, n, d]
    };
    Tensor qh = to_heads(q(tokens));
    Tensor kh = to_heads(k(tokens));
    Tensor vh = to_heads(v(tokens));
    Tensor logits =
        mul_scalar(bmm(qh, transpose(kh, {0, 2, 1})), 1.0 / std::sqrt(static_cast<Real>(d)));
    Tensor probs = softmax(logits, 2);
    Tensor out = bmm(probs, vh);  // [heads, n, d]
    out = reshape(transpose(out, {1, 0, 2}), {g, gw, width});
    return {out, probs};
}

Tensor FusionAttention::operator()(const Tensor& x4r, const Tensor& x4t) const {
    return forward_with_probs(x4r, x4t).first;
}

void FusionAttention::collect(NamedParams& out, const std::string& prefix) const {
    q.collect(out, prefix + ".q");
    k.collect(out, prefix + ".k");
    v.collect(out, prefix + ".v");
}

void RstStage::init(Rng& rng, int z_ch, int skip_ch, int n_heads, int grid,
                    const NetConfig& cfg) {
    skip_proj.init(rng, z_ch + 2 * skip_ch, z_ch);
    stb.init(rng, z_ch, n_heads, grid, cfg);
    ps.init(rng, z_ch);
}

Tensor RstStage::operator()(const Tensor& z, const Tensor& xr, const Tensor& xt) const {
    Tensor merged = skip_proj(concat({z, xr, xt}, 2));
    return ps(stb(merged));
}

void RstStage::collect(NamedParams& out, const std::string& prefix) const {
    skip_proj.collect(out, prefix + ".skip_proj");
    stb.collect(out, prefix + ".stb");
    ps.collect(out, prefix + ".ps");
}

void Decoder::init(Rng& rng, const NetConfig& cfg) {
    const int c = cfg.embed_dim;
    // Stage order i = 3,2,1: widths 8c, 4c, 2c at grids h/32, h/16, h/8.
    for (int s = 0; s < 3; ++s) {
        const int width = (8 >> s) * c;
        const int grid = cfg.image_size / 32 * (1 << s);
        stages[s].init(rng, width, width, cfg.heads[3 - s], grid, cfg);
    }
    out_proj.init(rng, c, 64);
}

Tensor Decoder::operator()(const Tensor& z4, const FeaturePyramid& r,
                           const FeaturePyramid& t) const {
    Tensor z = z4;
    for (int s = 0; s < 3; ++s) {
        const int skip = 3 - s;  // x^4, x^3, x^2
        z = stages[s](z, r.x[skip], t.x[skip]);
    }
    return upsample_bilinear(out_proj(z), 4);
}

void Decoder::collect(NamedParams& out, const std::string& prefix) const {
    for (int s = 0; s < 3; ++s)
        stages[s].collect(out, prefix + ".rst" + std::to_string(3 - s));
    out_proj.collect(out, prefix + ".out_proj");
}

Tensor frdf_refine(const Tensor& z, const Tensor& field, int iterations, FrdfMode mode,
                   const LinearLayer* field_proj) {
    if (z.rank() != 3 || field.rank() != 3 || field.dim(2) != 2 || z.dim(0) != field.dim(0) ||
        z.dim(1) != field.dim(1))
        throw ShapeError("frdf_refine: z must be [H,W,C] and field [H,W,2] on the same grid");
    Tensor cur = z;
    if (mode == FrdfMode::kWarp) {
        for (int k = 0; k < iterations; ++k) cur = grid_sample_offsets(cur, field);
    } else {
        if (!field_proj) throw Error("frdf_refine: additive mode needs a field projection");
        Tensor add_term = (*field_proj)(field);
        for (int k = 0; k < iterations; ++k) cur = add(cur, add_term);
    }
    return cur;
}

void Frdf::init(Rng& rng, const NetConfig& cfg) {
    mode = cfg.frdf_mode;
    iterations = cfg.frdf_iterations;
    zstar_proj.init(rng, 64, 2 * cfg.embed_dim);
    field_proj.init(rng, 2, 64);
}

Tensor Frdf::operator()(const Tensor& z, const Tensor& field) const {
    return zstar_proj(frdf_refine(z, field, iterations, mode, &field_proj));
}

void Frdf::collect(NamedParams& out, const std::string& prefix) const {
    zstar_proj.collect(out, prefix + ".zstar_proj");
    field_proj.collect(out, prefix + ".field_proj");
}

PrlNet PrlNet::create(const NetConfig& cfg, Rng& rng) {
    cfg.validate();
    PrlNet net;
    net.cfg = cfg;
    net.enc_r.init(rng, cfg);
    net.enc_t.init(rng, cfg);
    net.sdmam.init(rng, cfg.embed_dim);
    net.fusion.init(rng, cfg.embed_dim, cfg.fusion_heads);
    net.decoder.init(rng, cfg);
    net.df_head.init(rng, 64, 2);
    net.frdf.init(rng, cfg);
    net.sal_head.init(rng, 64 + 2 * cfg.embed_dim, 1);
    return net;
}

PrlNet::Forward PrlNet::forward(const Tensor& rgb, const Tensor& thermal) const {
    if (rgb.rank() != 3 || rgb.dim(2) != 3 || rgb.shape() != thermal.shape())
        throw ShapeError("forward expects two [h,w,3] inputs");
    if (rgb.dim(0) != cfg.image_size || rgb.dim(1) != cfg.image_size)
        throw ShapeError("input extent does not match the configured image size");
    Forward f;
    f.pyr_r = enc_r(rgb);
    f.pyr_t = enc_t(thermal);
    f.sdm = sdmam(concat({f.pyr_r.x[0], f.pyr_t.x[0]}, 2), concat({f.pyr_r.x[1], f.pyr_t.x[1]}, 2),
                  concat({f.pyr_r.x[2], f.pyr_t.x[2]}, 2));
    f.z4 = fusion(f.pyr_r.x[3], f.pyr_t.x[3]);
    f.z = decoder(f.z4, f.pyr_r, f.pyr_t);
    f.df = pwconv(f.z, df_head.w, df_head.b);
    f.zstar = frdf(f.z, f.df);
    f.sal = sigmoid(pwconv(concat({f.z, f.zstar}, 2), sal_head.w, sal_head.b));
    return f;
}

NamedParams PrlNet::params() const {
    NamedParams out;
    enc_r.collect(out, "enc_r");
    enc_t.collect(out, "enc_t");
    sdmam.collect(out, "sdmam");
    fusion.collect(out, "fusion");
    decoder.collect(out, "decoder");
    df_head.collect(out, "df_head");
    frdf.collect(out, "frdf");
    sal_head.collect(out, "sal_head");
    return out;
}

void PrlNet::load_params(const NamedParams& tensors) {
    std::map<std::string, Tensor> by_name(tensors.begin(), tensors.end());
    for (auto& [name, param] : params()) {
        auto it = by_name.find(name);
        if (it == by_name.end()) throw Error("checkpoint missing parameter " + name);
        if (it->second.shape() != param.shape())
            throw Error("checkpoint shape mismatch for " + name);
        Tensor p = param;
        p.mutable_values() = it->second.values();
    }
}

Tensor image_to_tensor(const RgbImage& img) {
    std::vector<Real> v(img.values.size());
    for (size_t i = 0; i < v.size(); ++i) v[i] = img.values[i] / 255.0;
    return Tensor::from_data({img.height, img.width, 3}, std::move(v));
}

Adam::Adam(const NamedParams& params, Real learning_rate) : lr(learning_rate) {
    for (const auto& [name, p] : params) {
        m.emplace_back(p.size(), 0.0);
        v.emplace_back(p.size(), 0.0);
    }
}

void Adam::step(NamedParams& params) {
    ++t;
    const Real bc1 = 1.0 - std::pow(beta1, static_cast<Real>(t));
    const Real bc2 = 1.0 - std::pow(beta2, static_cast<Real>(t));
    for (size_t i = 0; i < params.size(); ++i) {
        Tensor& p = params[i].second;
        const auto& g = p.grad();
        auto& vals = p.mutable_values();
        for (size_t j = 0; j < vals.size(); ++j) {
            m[i][j] = beta1 * m[i][j] + (1.0 - beta1) * g[j];
            v[i][j] = beta2 * v[i][j] + (1.0 - beta2) * g[j] * g[j];
            const Real mhat = m[i][j] / bc1;
            const Real vhat = v[i][j] / bc2;
            vals[j] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
        p.zero_grad();
    }
}

}  // namespace prl
