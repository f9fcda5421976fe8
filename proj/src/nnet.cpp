#include "cooccur/nnet.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "cooccur/errors.hpp"
#include "cooccur/kernels.hpp"
#include "cooccur/rng.hpp"

namespace cooccur::nnet {

namespace {

// Shape flowing through a layer chain: rank 3 (h, w, c) or rank 1 (dim).
struct Shape {
  std::size_t h = 0, w = 0, c = 0;
  std::size_t flat = 0;
  bool is_flat = false;

  static Shape image(std::size_t side) { return {side, side, 3, 0, false}; }
  static Shape vec(std::size_t d) { return {0, 0, 0, d, true}; }
  std::size_t numel() const { return is_flat ? flat : h * w * c; }
};

Shape apply_spec(const Shape& in, const LayerSpec& s, const char* where) {
  switch (s.kind) {
    case LayerKind::Conv: {
      if (in.is_flat)
        fail(ErrorCategory::Format,
             std::string(where) + ": conv after flatten");
      const std::size_t k = s.p[2], stride = s.p[3];
      if (k == 0 || k % 2 == 0 || stride == 0)
        fail(ErrorCategory::Format,
             std::string(where) + ": conv kernel must be odd >=1, stride >=1");
      if (in.c != s.p[0])
        fail(ErrorCategory::Format,
             std::string(where) + ": conv in-channels mismatch");
      if (in.h < k || in.w < k)
        fail(ErrorCategory::Format, std::string(where) + ": conv kernel larger than input");
      Shape out;
      out.h = (in.h - k) / stride + 1;
      out.w = (in.w - k) / stride + 1;
      out.c = s.p[1];
      return out;
    }
    case LayerKind::Fc:
      if (!in.is_flat || in.flat != s.p[0])
        fail(ErrorCategory::Format,
             std::string(where) + ": fc input dim mismatch");
      return Shape::vec(s.p[1]);
    case LayerKind::Relu:
    case LayerKind::Sigmoid:
      return in;
    case LayerKind::Flatten:
      return Shape::vec(in.numel());
  }
  fail(ErrorCategory::Format, std::string(where) + ": unknown layer kind");
}

Layer make_layer(const LayerSpec& s, Rng& rng) {
  Layer layer;
  layer.spec = s;
  if (s.kind == LayerKind::Conv) {
    const std::size_t in_c = s.p[0], out_c = s.p[1], k = s.p[2];
    layer.w = Tensor({k, k, in_c, out_c});
    layer.b = Tensor({out_c});
    const double std = std::sqrt(2.0 / double(k * k * in_c));
    for (double& v : layer.w.data) v = rng.normal(0.0, std);
  } else if (s.kind == LayerKind::Fc) {
    const std::size_t in_d = s.p[0], out_d = s.p[1];
    layer.w = Tensor({out_d, in_d});
    layer.b = Tensor({out_d});
    const double std = std::sqrt(2.0 / double(in_d));
    for (double& v : layer.w.data) v = rng.normal(0.0, std);
  }
  return layer;
}

void conv_forward(const Tensor& in, const Layer& layer, Tensor& out) {
  const std::size_t k = layer.spec.p[2], stride = layer.spec.p[3];
  const std::size_t in_c = layer.spec.p[0], out_c = layer.spec.p[1];
  const std::size_t oh = out.shape[0], ow = out.shape[1];
  const std::size_t in_w = in.shape[1];
  const double* w = layer.w.ptr();
  for (std::size_t oy = 0; oy < oh; ++oy) {
    for (std::size_t ox = 0; ox < ow; ++ox) {
      double* o = out.data.data() + (oy * ow + ox) * out_c;
      std::memcpy(o, layer.b.ptr(), out_c * sizeof(double));
      for (std::size_t ky = 0; ky < k; ++ky) {
        const double* in_row =
            in.ptr() + ((oy * stride + ky) * in_w + ox * stride) * in_c;
        const double* w_row = w + ky * k * in_c * out_c;
        for (std::size_t kx = 0; kx < k; ++kx) {
          for (std::size_t ic = 0; ic < in_c; ++ic) {
            const double v = in_row[kx * in_c + ic];
            if (v != 0.0)
              kern::axpy(v, w_row + (kx * in_c + ic) * out_c, o, out_c);
          }
        }
      }
    }
  }
}

void conv_backward(const Tensor& in, const Layer& layer, const Tensor& dout,
                   Tensor& dw, Tensor& db, Tensor& din) {
  const std::size_t k = layer.spec.p[2], stride = layer.spec.p[3];
  const std::size_t in_c = layer.spec.p[0], out_c = layer.spec.p[1];
  const std::size_t oh = dout.shape[0], ow = dout.shape[1];
  const std::size_t in_w = in.shape[1];
  const double* w = layer.w.ptr();
  for (std::size_t oy = 0; oy < oh; ++oy) {
    for (std::size_t ox = 0; ox < ow; ++ox) {
      const double* g = dout.ptr() + (oy * ow + ox) * out_c;
      kern::axpy(1.0, g, db.ptr(), out_c);
      for (std::size_t ky = 0; ky < k; ++ky) {
        const std::size_t base = ((oy * stride + ky) * in_w + ox * stride) * in_c;
        const double* in_row = in.ptr() + base;
        double* din_row = din.ptr() + base;
        const double* w_row = w + ky * k * in_c * out_c;
        double* dw_row = dw.ptr() + ky * k * in_c * out_c;
        for (std::size_t kx = 0; kx < k; ++kx) {
          for (std::size_t ic = 0; ic < in_c; ++ic) {
            const std::size_t off = (kx * in_c + ic) * out_c;
            const double v = in_row[kx * in_c + ic];
            if (v != 0.0) kern::axpy(v, g, dw_row + off, out_c);
            din_row[kx * in_c + ic] += kern::dot(w_row + off, g, out_c);
          }
        }
      }
    }
  }
}

void fc_forward(const Tensor& in, const Layer& layer, Tensor& out) {
  const std::size_t out_d = layer.spec.p[1], in_d = layer.spec.p[0];
  for (std::size_t o = 0; o < out_d; ++o)
    out.data[o] =
        layer.b.data[o] + kern::dot(layer.w.ptr() + o * in_d, in.ptr(), in_d);
}

void fc_backward(const Tensor& in, const Layer& layer, const Tensor& dout,
                 Tensor& dw, Tensor& db, Tensor& din) {
  const std::size_t out_d = layer.spec.p[1], in_d = layer.spec.p[0];
  for (std::size_t o = 0; o < out_d; ++o) {
    const double g = dout.data[o];
    db.data[o] += g;
    if (g == 0.0) continue;
    kern::axpy(g, in.ptr(), dw.ptr() + o * in_d, in_d);
    kern::axpy(g, layer.w.ptr() + o * in_d, din.ptr(), in_d);
  }
}

Tensor layer_forward(const Layer& layer, const Tensor& in) {
  switch (layer.spec.kind) {
    case LayerKind::Conv: {
      const std::size_t k = layer.spec.p[2], stride = layer.spec.p[3];
      Tensor out({(in.shape[0] - k) / stride + 1,
                  (in.shape[1] - k) / stride + 1, layer.spec.p[1]});
      conv_forward(in, layer, out);
      return out;
    }
    case LayerKind::Fc: {
      Tensor out({layer.spec.p[1]});
      fc_forward(in, layer, out);
      return out;
    }
    case LayerKind::Relu: {
      Tensor out = in;
      for (double& v : out.data) v = v > 0.0 ? v : 0.0;
      return out;
    }
    case LayerKind::Sigmoid: {
      Tensor out = in;
      for (double& v : out.data) v = sigmoid(v);
      return out;
    }
    case LayerKind::Flatten: {
      Tensor out = in;
      out.shape = {in.numel()};
      return out;
    }
  }
  fail(ErrorCategory::Internal, "unknown layer kind");
}

// din for one layer; accumulates parameter gradients.
Tensor layer_backward(const Layer& layer, const Tensor& in, const Tensor& out,
                      const Tensor& dout, TensorPair& grads) {
  switch (layer.spec.kind) {
    case LayerKind::Conv: {
      Tensor din(in.shape);
      conv_backward(in, layer, dout, grads.w, grads.b, din);
      return din;
    }
    case LayerKind::Fc: {
      Tensor din(in.shape);
      fc_backward(in, layer, dout, grads.w, grads.b, din);
      return din;
    }
    case LayerKind::Relu: {
      Tensor din = dout;
      for (std::size_t i = 0; i < din.numel(); ++i)
        if (in.data[i] <= 0.0) din.data[i] = 0.0;
      return din;
    }
    case LayerKind::Sigmoid: {
      Tensor din = dout;
      for (std::size_t i = 0; i < din.numel(); ++i)
        din.data[i] *= out.data[i] * (1.0 - out.data[i]);
      return din;
    }
    case LayerKind::Flatten: {
      Tensor din = dout;
      din.shape = in.shape;
      return din;
    }
  }
  fail(ErrorCategory::Internal, "unknown layer kind");
}

Tensor run_chain(const std::vector<Layer>& layers, Tensor x, Tape* tape) {
  if (tape) {
    tape->x.clear();
    tape->x.push_back(x);
  }
  for (const Layer& layer : layers) {
    x = layer_forward(layer, x);
    if (tape) tape->x.push_back(x);
  }
  return x;
}

// Backprop through a chain given its tape; returns d(input).
Tensor chain_backward(const std::vector<Layer>& layers, const Tape& tape,
                      Tensor dout, std::vector<TensorPair>& grads) {
  for (std::size_t li = layers.size(); li-- > 0;)
    dout = layer_backward(layers[li], tape.x[li], tape.x[li + 1], dout,
                          grads[li]);
  return dout;
}

void validate_chain(uint32_t input_side, const std::vector<Layer>& branch,
                    const std::vector<Layer>& head) {
  Shape s = Shape::image(input_side);
  for (const Layer& l : branch) s = apply_spec(s, l.spec, "branch");
  if (!s.is_flat)
    fail(ErrorCategory::Format, "branch output must be a flat vector");
  Shape h = Shape::vec(2 * s.flat);
  for (const Layer& l : head) h = apply_spec(h, l.spec, "head");
  if (!h.is_flat || h.flat != 1)
    fail(ErrorCategory::Format, "head output must be a single logit");
}

}  // namespace

std::size_t SiameseNet::branch_out_dim() const {
  Shape s = Shape::image(input_side);
  for (const Layer& l : branch) s = apply_spec(s, l.spec, "branch");
  return s.flat;
}

SiameseNet make_net(uint32_t input_side, const std::vector<LayerSpec>& branch,
                    const std::vector<LayerSpec>& head, uint64_t seed) {
  SiameseNet net;
  net.input_side = input_side;
  net.init_seed = seed;
  std::size_t layer_index = 0;
  for (const LayerSpec& s : branch) {
    Rng rng(derive_seed(seed, "nnet.init", layer_index++));
    net.branch.push_back(make_layer(s, rng));
  }
  for (const LayerSpec& s : head) {
    Rng rng(derive_seed(seed, "nnet.init", layer_index++));
    net.head.push_back(make_layer(s, rng));
  }
  validate_chain(input_side, net.branch, net.head);
  return net;
}

SiameseNet make_patch_net(uint64_t seed) {
  return make_net(17,
                  {LayerSpec::conv(3, 16, 5, 1), LayerSpec::relu(),
                   LayerSpec::conv(16, 32, 3, 2), LayerSpec::relu(),
                   LayerSpec::flatten(), LayerSpec::fc(6 * 6 * 32, 64)},
                  {LayerSpec::fc(128, 64), LayerSpec::relu(),
                   LayerSpec::fc(64, 1)},
                  seed);
}

SiameseNet make_context_net(uint64_t seed) {
  return make_net(33,
                  {LayerSpec::conv(3, 16, 5, 2), LayerSpec::relu(),
                   LayerSpec::conv(16, 32, 3, 2), LayerSpec::relu(),
                   LayerSpec::conv(32, 32, 3, 1), LayerSpec::relu(),
                   LayerSpec::flatten(), LayerSpec::fc(5 * 5 * 32, 64)},
                  {LayerSpec::fc(128, 64), LayerSpec::relu(),
                   LayerSpec::fc(64, 1)},
                  seed);
}

Tensor branch_forward(const SiameseNet& net, const Tensor& in, Tape* tape) {
  require_shape(in, net.input_side, "branch_forward");
  return run_chain(net.branch, in, tape);
}

double head_forward(const SiameseNet& net, const Tensor& fa, const Tensor& fb,
                    Tape* tape) {
  Tensor concat({fa.numel() + fb.numel()});
  std::memcpy(concat.ptr(), fa.ptr(), fa.numel() * sizeof(double));
  std::memcpy(concat.ptr() + fa.numel(), fb.ptr(), fb.numel() * sizeof(double));
  Tensor out = run_chain(net.head, concat, tape);
  return out.data[0];
}

double forward_pair(const SiameseNet& net, const Tensor& a, const Tensor& b) {
  return head_forward(net, branch_forward(net, a), branch_forward(net, b));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double predict_prob(const SiameseNet& net, const Tensor& a, const Tensor& b) {
  return sigmoid(forward_pair(net, a, b));
}

double logistic_loss(double logit, int label) {
  if (label != 0 && label != 1)
    fail(ErrorCategory::Input, "logistic_loss: label must be 0 or 1");
  return std::max(logit, 0.0) - logit * label +
         std::log1p(std::exp(-std::abs(logit)));
}

Gradients zero_gradients(const SiameseNet& net) {
  Gradients g;
  auto zero_of = [](const std::vector<Layer>& layers) {
    std::vector<TensorPair> out;
    out.reserve(layers.size());
    for (const Layer& l : layers)
      out.push_back({Tensor(l.w.shape), Tensor(l.b.shape)});
    return out;
  };
  g.branch = zero_of(net.branch);
  g.head = zero_of(net.head);
  return g;
}

double backward_pair(const SiameseNet& net, const Tensor& a, const Tensor& b,
                     int label, Gradients& grads) {
  Tape tape_a, tape_b, tape_h;
  const Tensor fa = branch_forward(net, a, &tape_a);
  const Tensor fb = branch_forward(net, b, &tape_b);
  const double logit = head_forward(net, fa, fb, &tape_h);
  const double loss = logistic_loss(logit, label);

  Tensor dlogit({1});
  dlogit.data[0] = sigmoid(logit) - double(label);
  const Tensor dconcat = chain_backward(net.head, tape_h, dlogit, grads.head);

  const std::size_t d = fa.numel();
  Tensor dfa({d}), dfb({d});
  std::memcpy(dfa.ptr(), dconcat.ptr(), d * sizeof(double));
  std::memcpy(dfb.ptr(), dconcat.ptr() + d, d * sizeof(double));
  chain_backward(net.branch, tape_a, dfa, grads.branch);
  chain_backward(net.branch, tape_b, dfb, grads.branch);
  return loss;
}

namespace {

template <typename F>
void for_each_param(SiameseNet& net, F&& f) {
  for (std::size_t li = 0; li < net.branch.size(); ++li) {
    f(net.branch[li].w, true, li, true);
    f(net.branch[li].b, true, li, false);
  }
  for (std::size_t li = 0; li < net.head.size(); ++li) {
    f(net.head[li].w, false, li, true);
    f(net.head[li].b, false, li, false);
  }
}

}  // namespace

Gradients numeric_gradients(const SiameseNet& net, const Tensor& a,
                            const Tensor& b, int label, double epsilon) {
  if (epsilon <= 0.0)
    fail(ErrorCategory::Input, "numeric_gradients: epsilon must be positive");
  SiameseNet work = net;
  Gradients num = zero_gradients(net);
  for_each_param(work, [&](Tensor& t, bool in_branch, std::size_t li, bool is_w) {
    Tensor& out = is_w ? (in_branch ? num.branch[li].w : num.head[li].w)
                       : (in_branch ? num.branch[li].b : num.head[li].b);
    for (std::size_t i = 0; i < t.numel(); ++i) {
      const double saved = t.data[i];
      t.data[i] = saved + epsilon;
      const double lp = logistic_loss(forward_pair(work, a, b), label);
      t.data[i] = saved - epsilon;
      const double lm = logistic_loss(forward_pair(work, a, b), label);
      t.data[i] = saved;
      out.data[i] = (lp - lm) / (2.0 * epsilon);
    }
  });
  return num;
}

double gradient_rel_error(const Gradients& analytic, const Gradients& numeric) {
  double max_err = 0.0;
  auto scan = [&](const std::vector<TensorPair>& ga,
                  const std::vector<TensorPair>& gn) {
    for (std::size_t li = 0; li < ga.size(); ++li) {
      for (int part = 0; part < 2; ++part) {
        const Tensor& ta = part == 0 ? ga[li].w : ga[li].b;
        const Tensor& tn = part == 0 ? gn[li].w : gn[li].b;
        for (std::size_t i = 0; i < ta.numel(); ++i) {
          const double da = ta.data[i], dn = tn.data[i];
          const double denom = std::max({std::abs(da), std::abs(dn), 1e-8});
          max_err = std::max(max_err, std::abs(da - dn) / denom);
        }
      }
    }
  };
  scan(analytic.branch, numeric.branch);
  scan(analytic.head, numeric.head);
  return max_err;
}

double grad_check(const SiameseNet& net, const PairExample& ex,
                  double epsilon) {
  Gradients analytic = zero_gradients(net);
  backward_pair(net, ex.a, ex.b, ex.c_label, analytic);
  const Gradients numeric =
      numeric_gradients(net, ex.a, ex.b, ex.c_label, epsilon);
  return gradient_rel_error(analytic, numeric);
}

void sgd_step(SiameseNet& net, const Gradients& grads, Gradients& velocity,
              double lr, double momentum) {
  auto step = [&](std::vector<Layer>& layers, const std::vector<TensorPair>& g,
                  std::vector<TensorPair>& v) {
    for (std::size_t li = 0; li < layers.size(); ++li) {
      for (int part = 0; part < 2; ++part) {
        Tensor& theta = part == 0 ? layers[li].w : layers[li].b;
        const Tensor& grad = part == 0 ? g[li].w : g[li].b;
        Tensor& vel = part == 0 ? v[li].w : v[li].b;
        if (theta.empty()) continue;
        kern::scale(vel.ptr(), momentum, vel.numel());
        kern::axpy(-lr, grad.ptr(), vel.ptr(), vel.numel());
        kern::axpy(1.0, vel.ptr(), theta.ptr(), theta.numel());
      }
    }
  };
  step(net.branch, grads.branch, velocity.branch);
  step(net.head, grads.head, velocity.head);
}

TrainResult train(SiameseNet& net, const std::vector<PairExample>& examples,
                  const TrainConfig& config) {
  if (examples.empty())
    fail(ErrorCategory::Input, "train: examples must be non-empty");
  if (config.learning_rate <= 0.0 || config.momentum < 0.0 ||
      config.momentum >= 1.0 || config.batch_size == 0)
    fail(ErrorCategory::Config, "train: invalid optimizer configuration");
  if (config.label_source == LabelSource::Q) {
    for (const PairExample& ex : examples)
      if (!ex.q_label.has_value())
        fail(ErrorCategory::MissingLabel,
             "train: label-source=Q but an example has no Q label");
  }

  const std::size_t decay_every =
      config.lr_decay_every > 0
          ? config.lr_decay_every
          : (config.epochs + 3) / 4;  // ceil(epochs/4)

  Gradients grads = zero_gradients(net);
  Gradients velocity = zero_gradients(net);
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainResult result;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr =
        config.learning_rate *
        std::pow(config.lr_decay_factor, double(epoch / decay_every));
    Rng rng(derive_seed(config.seed, "train.shuffle", epoch));
    rng.shuffle(order);

    double loss_total = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += config.batch_size) {
      const std::size_t end =
          std::min(order.size(), start + config.batch_size);
      auto zero = [](std::vector<TensorPair>& g) {
        for (TensorPair& p : g) {
          p.w.fill(0.0);
          p.b.fill(0.0);
        }
      };
      zero(grads.branch);
      zero(grads.head);
      double batch_loss = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const PairExample& ex = examples[order[i]];
        const int label = config.label_source == LabelSource::C
                              ? ex.c_label
                              : *ex.q_label;
        batch_loss += backward_pair(net, ex.a, ex.b, label, grads);
      }
      if (!std::isfinite(batch_loss))
        fail(ErrorCategory::Internal, "train: non-finite loss in batch");
      const double inv = 1.0 / double(end - start);
      for (auto* g : {&grads.branch, &grads.head})
        for (TensorPair& p : *g) {
          kern::scale(p.w.ptr(), inv, p.w.numel());
          kern::scale(p.b.ptr(), inv, p.b.numel());
        }
      sgd_step(net, grads, velocity, lr, config.momentum);
      loss_total += batch_loss;
    }
    result.epoch_mean_loss.push_back(loss_total / double(examples.size()));
  }
  return result;
}

// --- persistence ------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'C', 'G', 'R', 'P'};
constexpr uint32_t kVersion = 1;

void put_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

uint32_t get_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (in.gcount() != 4) fail(ErrorCategory::Format, path + ": truncated file");
  return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 |
         uint32_t(b[3]) << 24;
}

uint64_t get_u64(std::istream& in, const std::string& path) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (in.gcount() != 8) fail(ErrorCategory::Format, path + ": truncated file");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= uint64_t(b[i]) << (8 * i);
  return v;
}

void put_tensor(std::ostream& out, const Tensor& t) {
  put_u64(out, t.numel());
  // f64 payload written natively; little-endian hosts assumed.
  out.write(reinterpret_cast<const char*>(t.ptr()),
            static_cast<std::streamsize>(t.numel() * sizeof(double)));
}

void get_tensor_payload(std::istream& in, Tensor& t, const std::string& path) {
  const uint64_t len = get_u64(in, path);
  if (len != t.numel())
    fail(ErrorCategory::Format,
         path + ": parameter length does not match architecture header");
  in.read(reinterpret_cast<char*>(t.ptr()),
          static_cast<std::streamsize>(len * sizeof(double)));
  if (static_cast<uint64_t>(in.gcount()) != len * sizeof(double))
    fail(ErrorCategory::Format, path + ": truncated parameter payload");
}

bool has_params(LayerKind k) {
  return k == LayerKind::Conv || k == LayerKind::Fc;
}

}  // namespace

void save_params(const SiameseNet& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCategory::Ingestion, path + ": cannot write");
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, net.input_side);
  put_u32(out, static_cast<uint32_t>(net.branch.size() + net.head.size()));
  auto put_layers = [&](const std::vector<Layer>& layers) {
    for (const Layer& l : layers) {
      const unsigned char kind = static_cast<unsigned char>(l.spec.kind);
      out.write(reinterpret_cast<const char*>(&kind), 1);
      for (uint32_t p : l.spec.p) put_u32(out, p);
      if (has_params(l.spec.kind)) {
        put_tensor(out, l.w);
        put_tensor(out, l.b);
      }
    }
  };
  put_layers(net.branch);
  put_layers(net.head);
  if (!out) fail(ErrorCategory::Ingestion, path + ": write failed");
}

SiameseNet load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCategory::Ingestion, path + ": cannot open");
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0)
    fail(ErrorCategory::Format, path + ": bad magic");
  if (get_u32(in, path) != kVersion)
    fail(ErrorCategory::Format, path + ": unsupported format version");
  const uint32_t side = get_u32(in, path);
  const uint32_t layer_count = get_u32(in, path);
  if (side == 0 || layer_count == 0)
    fail(ErrorCategory::Format, path + ": empty architecture");

  SiameseNet net;
  net.input_side = side;
  Shape shape = Shape::image(side);
  bool in_head = false;
  for (uint32_t li = 0; li < layer_count; ++li) {
    unsigned char kind_byte = 0;
    in.read(reinterpret_cast<char*>(&kind_byte), 1);
    if (in.gcount() != 1) fail(ErrorCategory::Format, path + ": truncated file");
    if (kind_byte < 1 || kind_byte > 5)
      fail(ErrorCategory::Format, path + ": unknown layer kind");
    Layer layer;
    layer.spec.kind = static_cast<LayerKind>(kind_byte);
    for (uint32_t& p : layer.spec.p) p = get_u32(in, path);

    // The head starts at the fc layer whose input is twice the branch
    // output (the concat of the two branch feature vectors).
    if (!in_head && layer.spec.kind == LayerKind::Fc && shape.is_flat &&
        layer.spec.p[0] == 2 * shape.flat) {
      in_head = true;
      shape = Shape::vec(2 * shape.flat);
    }
    shape = apply_spec(shape, layer.spec, in_head ? "head" : "branch");

    if (has_params(layer.spec.kind)) {
      if (layer.spec.kind == LayerKind::Conv) {
        layer.w = Tensor({layer.spec.p[2], layer.spec.p[2], layer.spec.p[0],
                          layer.spec.p[1]});
        layer.b = Tensor({layer.spec.p[1]});
      } else {
        layer.w = Tensor({layer.spec.p[1], layer.spec.p[0]});
        layer.b = Tensor({layer.spec.p[1]});
      }
      get_tensor_payload(in, layer.w, path);
      get_tensor_payload(in, layer.b, path);
    }
    (in_head ? net.head : net.branch).push_back(std::move(layer));
  }
  if (!in_head || !shape.is_flat || shape.flat != 1)
    fail(ErrorCategory::Format, path + ": architecture is not a siamese pair net");
  char extra;
  in.read(&extra, 1);
  if (in.gcount() != 0)
    fail(ErrorCategory::Format, path + ": trailing bytes after payload");
  validate_chain(side, net.branch, net.head);
  return net;
}

}  // namespace cooccur::nnet
