#include "legopet/unet.hpp"

#include <cmath>

#include "legopet/errors.hpp"

namespace legopet::nn {

namespace {

int norm_groups(int channels) {
    int g = std::min(32, channels);
    while (channels % g) --g;
    return g;
}

torch::nn::GroupNorm make_norm(int channels) {
    return torch::nn::GroupNorm(torch::nn::GroupNormOptions(norm_groups(channels), channels));
}

torch::nn::Conv2d conv3x3(int in, int out, int stride = 1) {
    return torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 3).stride(stride).padding(1));
}

torch::nn::Conv2d conv1x1(int in, int out) {
    return torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 1));
}

}  // namespace

void UNetConfig::validate() const {
    if (image_size < 8 || image_size % 8 != 0)
        throw ConfigError("UNetConfig: image_size must be divisible by 8 (4-level downsampling), got " +
                          std::to_string(image_size));
    if (in_channels < 1 || out_channels < 1 || base_channels < 1)
        throw ConfigError("UNetConfig: channel counts must be positive");
    if (n_res_blocks_per_level < 1)
        throw ConfigError("UNetConfig: n_res_blocks_per_level must be >= 1");
    for (int m : channel_multipliers)
        if (m < 1) throw ConfigError("UNetConfig: channel multipliers must be >= 1");
    for (int l : attention_levels)
        if (l < 0 || l >= n_encoder_levels)
            throw ConfigError("UNetConfig: attention level out of range: " + std::to_string(l));
}

FeaturePyramid FeaturePyramid::detach() const {
    FeaturePyramid out;
    for (const auto& t : b_d) out.b_d.push_back(t.detach());
    for (const auto& t : b_m) out.b_m.push_back(t.detach());
    return out;
}

FeaturePyramid FeaturePyramid::scale(double factor) const {
    FeaturePyramid out;
    for (const auto& t : b_d) out.b_d.push_back(t * factor);
    for (const auto& t : b_m) out.b_m.push_back(t * factor);
    return out;
}

std::vector<std::array<int64_t, 3>> tap_shapes(const UNetConfig& cfg) {
    std::vector<std::array<int64_t, 3>> shapes;
    for (int l = 0; l < UNetConfig::n_encoder_levels; ++l)
        shapes.push_back({cfg.level_channels(l), cfg.level_size(l), cfg.level_size(l)});
    for (int m = 0; m < UNetConfig::n_middle_blocks; ++m)
        shapes.push_back({cfg.level_channels(3), cfg.level_size(3), cfg.level_size(3)});
    return shapes;
}

FeaturePyramid zero_pyramid(const UNetConfig& cfg, int64_t batch,
                            const torch::TensorOptions& opts) {
    FeaturePyramid pyr;
    const auto shapes = tap_shapes(cfg);
    for (int l = 0; l < UNetConfig::n_encoder_levels; ++l)
        pyr.b_d.push_back(torch::zeros({batch, shapes[l][0], shapes[l][1], shapes[l][2]}, opts));
    for (int m = 0; m < UNetConfig::n_middle_blocks; ++m) {
        const auto& s = shapes[UNetConfig::n_encoder_levels + m];
        pyr.b_m.push_back(torch::zeros({batch, s[0], s[1], s[2]}, opts));
    }
    return pyr;
}

torch::Tensor timestep_embedding(const torch::Tensor& t, int dim) {
    TORCH_CHECK(dim % 2 == 0, "timestep_embedding: dim must be even");
    const int half = dim / 2;
    auto opts = torch::TensorOptions().dtype(torch::kFloat64).device(t.device());
    auto freqs = torch::exp(torch::arange(half, opts) * (-std::log(10000.0) / half));
    auto args = t.to(torch::kFloat64).unsqueeze(-1) * freqs.unsqueeze(0);  // (B, half)
    auto emb = torch::stack({args.sin(), args.cos()}, /*dim=*/-1).flatten(-2);  // interleave
    return emb;
}

std::vector<double> timestep_embedding(int64_t t, int dim) {
    auto emb = timestep_embedding(torch::tensor({t}, torch::kFloat64), dim).squeeze(0);
    return std::vector<double>(emb.data_ptr<double>(), emb.data_ptr<double>() + emb.numel());
}

ResBlockImpl::ResBlockImpl(int in_ch, int out_ch, int temb_dim) {
    norm1 = register_module("norm1", make_norm(in_ch));
    conv1 = register_module("conv1", conv3x3(in_ch, out_ch));
    if (temb_dim > 0)
        temb_proj = register_module("temb_proj", torch::nn::Linear(temb_dim, out_ch));
    norm2 = register_module("norm2", make_norm(out_ch));
    conv2 = register_module("conv2", conv3x3(out_ch, out_ch));
    if (in_ch != out_ch) skip = register_module("skip", conv1x1(in_ch, out_ch));
}

torch::Tensor ResBlockImpl::forward(const torch::Tensor& x, const torch::Tensor& temb) {
    auto h = conv1(torch::silu(norm1(x)));
    if (temb_proj && temb.defined())
        h = h + temb_proj(torch::silu(temb)).unsqueeze(-1).unsqueeze(-1);
    h = conv2(torch::silu(norm2(h)));
    return h + (skip ? skip(x) : x);
}

AttentionBlockImpl::AttentionBlockImpl(int channels) : channels_(channels) {
    norm = register_module("norm", make_norm(channels));
    qkv = register_module("qkv", conv1x1(channels, 3 * channels));
    proj = register_module("proj", conv1x1(channels, channels));
    torch::nn::init::zeros_(proj->weight);
    torch::nn::init::zeros_(proj->bias);
}

torch::Tensor AttentionBlockImpl::forward(const torch::Tensor& x) {
    const auto b = x.size(0), c = x.size(1), h = x.size(2), w = x.size(3);
    auto qkv_maps = qkv(norm(x)).reshape({b, 3, c, h * w});
    auto q = qkv_maps.select(1, 0);
    auto k = qkv_maps.select(1, 1);
    auto v = qkv_maps.select(1, 2);
    const double scale = 1.0 / std::sqrt(static_cast<double>(c));
    auto attn = torch::softmax(torch::bmm(q.transpose(1, 2), k) * scale, /*dim=*/-1);  // (b,hw,hw)
    auto out = torch::bmm(v, attn.transpose(1, 2)).reshape({b, c, h, w});
    return x + proj(out);
}

UNetImpl::UNetImpl(UNetConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    const int temb_dim = cfg_.time_embedding ? cfg_.temb_dim() : 0;

    stem_ = register_module("stem", conv3x3(cfg_.in_channels, cfg_.base_channels));
    if (cfg_.time_embedding) {
        time_fc1_ = register_module("time_fc1", torch::nn::Linear(cfg_.base_channels, temb_dim));
        time_fc2_ = register_module("time_fc2", torch::nn::Linear(temb_dim, temb_dim));
    }

    int prev_ch = cfg_.base_channels;
    for (int l = 0; l < UNetConfig::n_encoder_levels; ++l) {
        const int ch = cfg_.level_channels(l);
        std::vector<ResBlock> blocks;
        for (int i = 0; i < cfg_.n_res_blocks_per_level; ++i) {
            ResBlock blk(i == 0 ? prev_ch : ch, ch, temb_dim);
            register_module("enc_" + std::to_string(l) + "_" + std::to_string(i), blk);
            blocks.push_back(blk);
        }
        enc_blocks_.push_back(std::move(blocks));
        if (cfg_.attention_levels.count(l)) {
            AttentionBlock attn(ch);
            register_module("enc_attn_" + std::to_string(l), attn);
            enc_attn_.push_back(attn);
        } else {
            enc_attn_.push_back(nullptr);
        }
        if (l + 1 < UNetConfig::n_encoder_levels) {
            auto down = conv3x3(ch, cfg_.level_channels(l + 1), /*stride=*/2);
            register_module("down_" + std::to_string(l), down);
            downs_.push_back(down);
        }
        prev_ch = ch;
    }

    const int mid_ch = cfg_.level_channels(3);
    const bool mid_attn = cfg_.attention_levels.count(3) > 0;
    for (int m = 0; m < UNetConfig::n_middle_blocks; ++m) {
        ResBlock blk(mid_ch, mid_ch, temb_dim);
        register_module("mid_" + std::to_string(m), blk);
        middle_blocks_.push_back(blk);
        if (mid_attn) {
            AttentionBlock attn(mid_ch);
            register_module("mid_attn_" + std::to_string(m), attn);
            middle_attn_.push_back(attn);
        } else {
            middle_attn_.push_back(nullptr);
        }
    }

    if (cfg_.feature_adapter_1x1) {
        const auto shapes = tap_shapes(cfg_);
        for (size_t i = 0; i < shapes.size(); ++i) {
            auto ad = conv1x1(static_cast<int>(shapes[i][0]), static_cast<int>(shapes[i][0]));
            register_module("bias_adapter_" + std::to_string(i), ad);
            bias_adapters_.push_back(ad);
        }
    }

    for (int l = UNetConfig::n_encoder_levels - 1; l >= 0; --l) {
        const int ch = cfg_.level_channels(l);
        const int in_ch = (l == UNetConfig::n_encoder_levels - 1 ? mid_ch : ch) + ch;
        std::vector<ResBlock> blocks;
        for (int i = 0; i < cfg_.n_res_blocks_per_level; ++i) {
            ResBlock blk(i == 0 ? in_ch : ch, ch, temb_dim);
            register_module("dec_" + std::to_string(l) + "_" + std::to_string(i), blk);
            blocks.push_back(blk);
        }
        dec_blocks_.push_back(std::move(blocks));
        if (cfg_.attention_levels.count(l)) {
            AttentionBlock attn(ch);
            register_module("dec_attn_" + std::to_string(l), attn);
            dec_attn_.push_back(attn);
        } else {
            dec_attn_.push_back(nullptr);
        }
        if (l > 0) {
            // nearest x2 upsample happens in forward; this conv follows it and
            // changes channels to the next-finer level
            auto up = conv3x3(ch, cfg_.level_channels(l - 1));
            register_module("up_" + std::to_string(l), up);
            up_convs_.push_back(up);
        }
    }

    head_norm_ = register_module("head_norm", make_norm(cfg_.base_channels));
    head_conv_ = register_module("head_conv", conv3x3(cfg_.base_channels, cfg_.out_channels));
    torch::nn::init::zeros_(head_conv_->weight);
    torch::nn::init::zeros_(head_conv_->bias);
}

torch::Tensor UNetImpl::embed_time(const torch::Tensor& t, const torch::TensorOptions& opts,
                                   int64_t batch) {
    if (!cfg_.time_embedding) return {};
    TORCH_CHECK(t.defined(), "UNet: time_embedding enabled but no timestep given");
    auto tt = t.dim() == 0 ? t.reshape({1}).expand({batch}) : t;
    auto emb = timestep_embedding(tt, cfg_.base_channels).to(opts.dtype());
    return time_fc2_(torch::silu(time_fc1_(emb)));
}

torch::Tensor UNetImpl::forward(const torch::Tensor& x, const torch::Tensor& t,
                                const ForwardHooks& hooks) {
    if (x.dim() != 4 || x.size(1) != cfg_.in_channels || x.size(2) != cfg_.image_size ||
        x.size(3) != cfg_.image_size)
        throw ShapeError("UNet: input must be (B," + std::to_string(cfg_.in_channels) + "," +
                         std::to_string(cfg_.image_size) + "," + std::to_string(cfg_.image_size) +
                         ")");
    const FeaturePyramid* bias = hooks.bias && hooks.bias->defined() ? hooks.bias : nullptr;
    if (bias) {
        const auto shapes = tap_shapes(cfg_);
        auto check = [&](const torch::Tensor& m, size_t i, const char* list) {
            if (m.dim() != 4 || m.size(0) != x.size(0) || m.size(1) != shapes[i][0] ||
                m.size(2) != shapes[i][1] || m.size(3) != shapes[i][2])
                throw ShapeError(std::string("UNet: bias pyramid ") + list +
                                 " map has wrong shape at index " + std::to_string(i));
        };
        if (bias->b_d.size() != UNetConfig::n_encoder_levels ||
            bias->b_m.size() != UNetConfig::n_middle_blocks)
            throw ShapeError("UNet: bias pyramid must have 4 b_d and 2 b_m maps");
        for (size_t l = 0; l < bias->b_d.size(); ++l) check(bias->b_d[l], l, "b_d");
        for (size_t m = 0; m < bias->b_m.size(); ++m)
            check(bias->b_m[m], UNetConfig::n_encoder_levels + m, "b_m");
    }
    if (hooks.taps) {
        hooks.taps->b_d.clear();
        hooks.taps->b_m.clear();
    }

    auto apply_bias = [&](torch::Tensor h, size_t tap_index) {
        if (!bias) return h;
        const torch::Tensor& map = tap_index < UNetConfig::n_encoder_levels
                                       ? bias->b_d[tap_index]
                                       : bias->b_m[tap_index - UNetConfig::n_encoder_levels];
        if (!bias_adapters_.empty()) return h + bias_adapters_[tap_index](map);
        return h + map;
    };

    const auto temb = embed_time(t, x.options(), x.size(0));

    auto h = stem_(x);
    std::vector<torch::Tensor> skips(UNetConfig::n_encoder_levels);
    for (int l = 0; l < UNetConfig::n_encoder_levels; ++l) {
        for (auto& blk : enc_blocks_[l]) h = blk->forward(h, temb);
        if (enc_attn_[l]) h = enc_attn_[l]->forward(h);
        // tap point: activation right before downsampling
        h = apply_bias(h, l);
        if (hooks.taps) hooks.taps->b_d.push_back(h);
        skips[l] = h;
        if (l + 1 < UNetConfig::n_encoder_levels) h = downs_[l](h);
    }

    for (int m = 0; m < UNetConfig::n_middle_blocks; ++m) {
        h = middle_blocks_[m]->forward(h, temb);
        if (middle_attn_[m]) h = middle_attn_[m]->forward(h);
        // tap point: middle block output
        h = apply_bias(h, UNetConfig::n_encoder_levels + m);
        if (hooks.taps) hooks.taps->b_m.push_back(h);
    }

    for (int i = 0; i < UNetConfig::n_encoder_levels; ++i) {
        const int l = UNetConfig::n_encoder_levels - 1 - i;
        h = torch::cat({h, skips[l]}, /*dim=*/1);
        for (auto& blk : dec_blocks_[i]) h = blk->forward(h, temb);
        if (dec_attn_[i]) h = dec_attn_[i]->forward(h);
        if (l > 0) {
            h = torch::upsample_nearest2d(h, {h.size(2) * 2, h.size(3) * 2});
            h = up_convs_[i](h);
        }
    }

    return head_conv_(torch::silu(head_norm_(h)));
}

int64_t UNetImpl::parameter_count() const {
    int64_t n = 0;
    for (const auto& p : parameters()) n += p.numel();
    return n;
}

UNet build_unet(const UNetConfig& cfg) {
    cfg.validate();
    return UNet(cfg);
}

std::pair<torch::Tensor, FeaturePyramid> forward_with_taps(UNet& net, const torch::Tensor& input) {
    FeaturePyramid pyr;
    UNetImpl::ForwardHooks hooks;
    hooks.taps = &pyr;
    auto out = net->forward(input, {}, hooks);
    return {out, pyr};
}

torch::Tensor forward_with_biases(UNet& net, const torch::Tensor& input, const torch::Tensor& t,
                                  const FeaturePyramid* pyr) {
    UNetImpl::ForwardHooks hooks;
    hooks.bias = pyr;
    return net->forward(input, t, hooks);
}

torch::Tensor resample_sinogram(const torch::Tensor& sino, int image_size) {
    auto s = sino;
    const bool squeeze = s.dim() == 2;
    if (squeeze) s = s.unsqueeze(0).unsqueeze(0);
    TORCH_CHECK(s.dim() == 4, "resample_sinogram: expected (B,C,A,N) or (A,N)");
    auto out = torch::nn::functional::interpolate(
        s, torch::nn::functional::InterpolateFuncOptions()
               .size(std::vector<int64_t>{image_size, image_size})
               .mode(torch::kBilinear)
               .align_corners(false));
    return squeeze ? out.squeeze(0).squeeze(0) : out;
}

}  // namespace legopet::nn
