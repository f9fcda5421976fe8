#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cooccur/pair.hpp"
#include "cooccur/tensor.hpp"

namespace cooccur::nnet {

enum class LayerKind : uint8_t {
  Conv = 1,
  Fc = 2,
  Relu = 3,
  Sigmoid = 4,
  Flatten = 5,
};

// Conv: p = {in_channels, out_channels, kernel, stride} (valid padding).
// Fc:   p = {in_dim, out_dim, 0, 0}. Other kinds carry no hyperparameters.
struct LayerSpec {
  LayerKind kind;
  uint32_t p[4] = {0, 0, 0, 0};

  static LayerSpec conv(uint32_t in_c, uint32_t out_c, uint32_t k,
                        uint32_t stride) {
    return {LayerKind::Conv, {in_c, out_c, k, stride}};
  }
  static LayerSpec fc(uint32_t in_dim, uint32_t out_dim) {
    return {LayerKind::Fc, {in_dim, out_dim, 0, 0}};
  }
  static LayerSpec relu() { return {LayerKind::Relu, {0, 0, 0, 0}}; }
  static LayerSpec sigmoid() { return {LayerKind::Sigmoid, {0, 0, 0, 0}}; }
  static LayerSpec flatten() { return {LayerKind::Flatten, {0, 0, 0, 0}}; }
};

// Conv weights are stored (ky, kx, in_c, out_c) so the innermost loops run
// over contiguous out_c vectors; fc weights are (out, in).
struct Layer {
  LayerSpec spec;
  Tensor w;
  Tensor b;
};

// Shared-branch classifier: one branch parameter store referenced for both
// inputs, then a head over the concatenated branch features producing one
// logit.
struct SiameseNet {
  uint32_t input_side = 0;
  std::vector<Layer> branch;
  std::vector<Layer> head;
  uint64_t init_seed = 0;

  std::size_t branch_out_dim() const;
};

// Builds a net from layer specs; validates the shape chain end to end and
// initializes weights (Gaussian, std sqrt(2/fan_in), seeded) with zero biases.
SiameseNet make_net(uint32_t input_side, const std::vector<LayerSpec>& branch,
                    const std::vector<LayerSpec>& head, uint64_t seed);

// 17x17x3 patch net: conv3->16 k5 s1, relu, conv16->32 k3 s2, relu, flatten,
// fc->64; head: fc 128->64, relu, fc 64->1.
SiameseNet make_patch_net(uint64_t seed);
// 33x33x3 frame/photo net: conv3->16 k5 s2, relu, conv16->32 k3 s2, relu,
// conv32->32 k3 s1, relu, flatten, fc->64; same head.
SiameseNet make_context_net(uint64_t seed);

// Layer inputs/outputs captured during a forward pass, for backprop.
struct Tape {
  std::vector<Tensor> x;  // x[0] = input, x[i+1] = output of layer i
};

// Branch feature extraction; tape optional. Input must match the net's
// input side.
Tensor branch_forward(const SiameseNet& net, const Tensor& in,
                      Tape* tape = nullptr);
// Head over two branch feature vectors (order matters).
double head_forward(const SiameseNet& net, const Tensor& fa, const Tensor& fb,
                    Tape* tape = nullptr);

double forward_pair(const SiameseNet& net, const Tensor& a, const Tensor& b);
double sigmoid(double x);
// P(C=1 | a, b) = sigmoid(forward_pair).
double predict_prob(const SiameseNet& net, const Tensor& a, const Tensor& b);

// -[y log s(z) + (1-y) log(1-s(z))] in overflow-safe form.
double logistic_loss(double logit, int label);

// Per-layer (weight, bias) gradient pair; empty tensors for paramless kinds.
struct TensorPair {
  Tensor w;
  Tensor b;
};

struct Gradients {
  std::vector<TensorPair> branch;
  std::vector<TensorPair> head;
};

Gradients zero_gradients(const SiameseNet& net);

// Accumulates d logistic_loss / d theta into grads (branch gradients sum the
// A-path and B-path contributions). Returns the example loss.
double backward_pair(const SiameseNet& net, const Tensor& a, const Tensor& b,
                     int label, Gradients& grads);

// Central finite differences of the pair loss w.r.t. every parameter.
Gradients numeric_gradients(const SiameseNet& net, const Tensor& a,
                            const Tensor& b, int label, double epsilon);

// Relative error |ga-gn| / max(|ga|,|gn|,1e-8), maximized over parameters.
double gradient_rel_error(const Gradients& analytic, const Gradients& numeric);

// backward_pair vs numeric_gradients over all parameters.
double grad_check(const SiameseNet& net, const PairExample& ex, double epsilon);

// v <- momentum*v - lr*g; theta <- theta + v (classical momentum).
void sgd_step(SiameseNet& net, const Gradients& grads, Gradients& velocity,
              double lr, double momentum);

enum class LabelSource { C, Q };

struct TrainConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t batch_size = 64;
  std::size_t epochs = 8;
  double lr_decay_factor = 0.5;
  std::size_t lr_decay_every = 0;  // 0 -> ceil(epochs/4)
  uint64_t seed = 0;
  LabelSource label_source = LabelSource::C;
};

struct TrainResult {
  std::vector<double> epoch_mean_loss;
};

// Mini-batch SGD with per-epoch reshuffle; single-threaded and fully
// deterministic for a fixed (seed, data, config).
TrainResult train(SiameseNet& net, const std::vector<PairExample>& examples,
                  const TrainConfig& config);

// Weights file: little-endian, magic "CGRP", version 1; see README.
void save_params(const SiameseNet& net, const std::string& path);
SiameseNet load_params(const std::string& path);

}  // namespace cooccur::nnet
