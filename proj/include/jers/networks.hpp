#pragma once

#include <string>
#include <utility>
#include <vector>

#include "jers/common.hpp"
#include "jers/tensor.hpp"

namespace jers {

struct NamedParam {
    std::string name;
    Tensor tensor;
};

// Architecture hyperparameters. The width lists give the channel count after
// each convolutional layer, consumed in order across encoder and decoder.
struct NetworkConfig {
    int classes = 4;   // includes the background class at channel 0
    std::vector<int> ext_widths = {16, 32, 32, 64, 64, 64, 32, 32, 32, 16};
    std::vector<int> reg_widths = {16, 32, 64, 128, 256, 512};
    std::vector<int> seg_widths = {128, 256, 256, 512, 512, 512, 256, 256, 256, 128};
    real steep_slope = 50;    // slope of the binarization surrogate
    real leaky_slope = real(0.2);
};

struct ConvLayer {
    Tensor weight;   // [Cout,Cin,k,k,k]
    Tensor bias;     // [Cout]
    int stride = 1;
    int pad = 1;

    Tensor operator()(const Tensor& x) const;
};

// Encoder-decoder with two stride-2 levels and skip connections between
// mirrored resolutions: 10 3x3x3 convolutions consuming `widths` in order,
// then a 1x1x1 head. Spatial extents must be divisible by 4.
class UNet3d {
public:
    UNet3d() = default;
    UNet3d(int in_channels, int out_channels, const std::vector<int>& widths, real leaky,
           Rng& rng, real head_weight_scale = 1, real head_bias = 0);

    Tensor forward(const Tensor& x) const;   // [1,Cin,X,Y,Z] -> [1,Cout,X,Y,Z]
    void collect_params(const std::string& prefix, std::vector<NamedParam>& out) const;

private:
    std::vector<ConvLayer> layers_;   // enc1..enc6, dec7..dec10
    ConvLayer head_;
    real leaky_ = real(0.2);
};

// Mask eliminator ("f_e"): one parameter set applied at every extraction
// stage; produces a soft mask in (0,1) the same shape as its input.
class ExtractionNet {
public:
    ExtractionNet() = default;
    ExtractionNet(const NetworkConfig& cfg, Rng& rng);

    Tensor forward(const Tensor& e_prev) const;   // [X,Y,Z] -> [X,Y,Z] soft mask
    void collect_params(std::vector<NamedParam>& out) const;

private:
    UNet3d unet_;
    real slope_ = 50;
};

// Incremental aligner ("f_r"): a strided convolutional encoder over the
// 2-channel (warped, target) pair, global pooling, and a fully-connected
// head predicting a delta that is added to the identity parameters. The
// head is zero-initialized, so a fresh network returns the exact identity.
class RegistrationNet {
public:
    RegistrationNet() = default;
    RegistrationNet(const NetworkConfig& cfg, Rng& rng);

    Tensor forward(const Tensor& warped, const Tensor& target) const;   // -> [12]
    void collect_params(std::vector<NamedParam>& out) const;

private:
    std::vector<ConvLayer> encoder_;
    Tensor fc_weight_;   // [12, widths.back()]
    Tensor fc_bias_;     // [12]
    real leaky_ = real(0.2);
};

// Label predictor ("f_s"): per-voxel class distribution over C classes.
class SegmentationNet {
public:
    SegmentationNet() = default;
    SegmentationNet(const NetworkConfig& cfg, Rng& rng);

    Tensor forward(const Tensor& source) const;   // [X,Y,Z] -> [C,X,Y,Z] simplex
    void collect_params(std::vector<NamedParam>& out) const;
    int classes() const { return classes_; }

private:
    UNet3d unet_;
    int classes_ = 0;
};

// Kaiming-style fan-in uniform init, seed-controlled.
void kaiming_fill(Tensor& t, int64_t fan_in, Rng& rng, real scale = 1);

} // namespace jers
