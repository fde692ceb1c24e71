#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <vector>

#include <torch/torch.h>

namespace legopet::nn {

/// Shared architecture description for PnPNet, the diffusion denoiser and the
/// regression baseline. 4 encoder levels (resolutions H, H/2, H/4, H/8) and
/// 2 middle blocks are fixed; everything else is a knob.
struct UNetConfig {
    int image_size = 64;
    int in_channels = 1;
    int out_channels = 1;
    int base_channels = 32;
    std::array<int, 4> channel_multipliers{1, 2, 2, 4};
    int n_res_blocks_per_level = 1;
    std::set<int> attention_levels{2, 3};  // level indices, 0 = finest
    bool time_embedding = true;
    int time_embedding_dim = 0;  // 0 -> 4 * base_channels
    bool feature_adapter_1x1 = false;  // learnable 1x1 on injected features; default pure addition

    static constexpr int n_encoder_levels = 4;
    static constexpr int n_middle_blocks = 2;

    void validate() const;
    int temb_dim() const { return time_embedding_dim > 0 ? time_embedding_dim : 4 * base_channels; }
    int level_channels(int level) const { return base_channels * channel_multipliers[level]; }
    int level_size(int level) const { return image_size >> level; }
};

/// Hierarchical feature maps tapped from (or injected into) the U-Net:
/// b_d holds one map per encoder level (pre-downsample activation),
/// b_m one map per middle block output.
struct FeaturePyramid {
    std::vector<torch::Tensor> b_d;
    std::vector<torch::Tensor> b_m;

    bool defined() const { return !b_d.empty() || !b_m.empty(); }
    FeaturePyramid detach() const;
    FeaturePyramid scale(double factor) const;
};

/// (channels, height, width) of each tap for a given config; b_d entries
/// first, then b_m.
std::vector<std::array<int64_t, 3>> tap_shapes(const UNetConfig& cfg);

/// All-zero pyramid with the correct tap shapes ("null" conditioning).
FeaturePyramid zero_pyramid(const UNetConfig& cfg, int64_t batch, const torch::TensorOptions& opts);

/// Sinusoidal embedding, interleaved [sin w0 t, cos w0 t, sin w1 t, ...].
torch::Tensor timestep_embedding(const torch::Tensor& t, int dim);
std::vector<double> timestep_embedding(int64_t t, int dim);

class ResBlockImpl : public torch::nn::Module {
  public:
    ResBlockImpl(int in_ch, int out_ch, int temb_dim);
    torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& temb);

  private:
    torch::nn::GroupNorm norm1{nullptr}, norm2{nullptr};
    torch::nn::Conv2d conv1{nullptr}, conv2{nullptr};
    torch::nn::Linear temb_proj{nullptr};
    torch::nn::Conv2d skip{nullptr};
};
TORCH_MODULE(ResBlock);

class AttentionBlockImpl : public torch::nn::Module {
  public:
    explicit AttentionBlockImpl(int channels);
    torch::Tensor forward(const torch::Tensor& x);

  private:
    torch::nn::GroupNorm norm{nullptr};
    torch::nn::Conv2d qkv{nullptr}, proj{nullptr};
    int channels_;
};
TORCH_MODULE(AttentionBlock);

class UNetImpl : public torch::nn::Module {
  public:
    explicit UNetImpl(UNetConfig cfg);

    struct ForwardHooks {
        const FeaturePyramid* bias = nullptr;  // added at the tap points
        FeaturePyramid* taps = nullptr;        // filled with the tap activations
    };

    torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& t = {},
                          const ForwardHooks& hooks = {});

    const UNetConfig& config() const { return cfg_; }
    int64_t parameter_count() const;

  private:
    torch::Tensor embed_time(const torch::Tensor& t, const torch::TensorOptions& opts,
                             int64_t batch);

    UNetConfig cfg_;
    torch::nn::Conv2d stem_{nullptr};
    torch::nn::Linear time_fc1_{nullptr}, time_fc2_{nullptr};
    std::vector<std::vector<ResBlock>> enc_blocks_;
    std::vector<AttentionBlock> enc_attn_;     // per level, may be null
    std::vector<torch::nn::Conv2d> downs_;     // between levels
    std::vector<ResBlock> middle_blocks_;
    std::vector<AttentionBlock> middle_attn_;  // per middle block, may be null
    std::vector<std::vector<ResBlock>> dec_blocks_;
    std::vector<AttentionBlock> dec_attn_;
    std::vector<torch::nn::Conv2d> up_convs_;  // conv after nearest upsample
    std::vector<torch::nn::Conv2d> bias_adapters_;  // optional 1x1 on injected features
    torch::nn::GroupNorm head_norm_{nullptr};
    torch::nn::Conv2d head_conv_{nullptr};
};
TORCH_MODULE(UNet);

UNet build_unet(const UNetConfig& cfg);

/// Plain forward plus the tapped feature pyramid.
std::pair<torch::Tensor, FeaturePyramid> forward_with_taps(UNet& net, const torch::Tensor& input);

/// Forward with pyramid maps added at the tap points. pyr == nullptr (or an
/// undefined pyramid) means null conditioning and is equivalent to adding
/// all-zero maps.
torch::Tensor forward_with_biases(UNet& net, const torch::Tensor& input, const torch::Tensor& t,
                                  const FeaturePyramid* pyr);

/// Bilinear resample of a (B,1,n_angles,n_bins) sinogram stack (or a single
/// (n_angles,n_bins) map) onto the square image grid used as conditioning.
torch::Tensor resample_sinogram(const torch::Tensor& sino, int image_size);

}  // namespace legopet::nn
