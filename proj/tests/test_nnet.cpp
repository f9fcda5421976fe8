#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "cooccur/errors.hpp"
#include "cooccur/nnet.hpp"
#include "cooccur/rng.hpp"

using namespace cooccur;
using namespace cooccur::nnet;

namespace {

Tensor random_input(std::size_t side, Rng& rng) {
  Tensor t({side, side, 3});
  for (double& v : t.data) v = rng.uniform();
  return t;
}

// Small net used by most tests: 9x9 input, one conv, modest fc sizes.
SiameseNet tiny_net(uint64_t seed) {
  return make_net(9,
                  {LayerSpec::conv(3, 4, 3, 2), LayerSpec::relu(),
                   LayerSpec::flatten(), LayerSpec::fc(4 * 4 * 4, 8)},
                  {LayerSpec::fc(16, 8), LayerSpec::relu(), LayerSpec::fc(8, 1)},
                  seed);
}

void zero_params(SiameseNet& net) {
  for (auto* part : {&net.branch, &net.head})
    for (Layer& l : *part) {
      l.w.fill(0.0);
      l.b.fill(0.0);
    }
}

double grad_norm(const Gradients& g) {
  double acc = 0.0;
  for (const auto* part : {&g.branch, &g.head})
    for (const TensorPair& p : *part) {
      for (double v : p.w.data) acc += v * v;
      for (double v : p.b.data) acc += v * v;
    }
  return std::sqrt(acc);
}

bool same_params(const SiameseNet& a, const SiameseNet& b) {
  auto eq = [](const std::vector<Layer>& x, const std::vector<Layer>& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x[i].w.data != y[i].w.data || x[i].b.data != y[i].b.data)
        return false;
    return true;
  };
  return eq(a.branch, b.branch) && eq(a.head, b.head);
}

}  // namespace

TEST_CASE("logistic loss closed forms") {
  CHECK(logistic_loss(0.0, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(logistic_loss(0.0, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(logistic_loss(10.0, 1) ==
        doctest::Approx(std::log1p(std::exp(-10.0))).epsilon(1e-12));
  CHECK(logistic_loss(10.0, 1) == doctest::Approx(4.5398899e-5).epsilon(1e-6));
  CHECK(logistic_loss(10.0, 0) == doctest::Approx(10.0000454).epsilon(1e-7));
  CHECK(logistic_loss(1000.0, 1) >= 0.0);  // no overflow at saturation
  CHECK(std::isfinite(logistic_loss(-1000.0, 0)));
  CHECK(logistic_loss(3.7, 1) >= 0.0);
}

TEST_CASE("sigmoid values") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(-2.0) == doctest::Approx(0.11920292202211755).epsilon(1e-12));
  CHECK(sigmoid(50.0) >= 1.0 - 1e-20);
  CHECK(sigmoid(-50.0) <= 1e-20);
}

TEST_CASE("zero-parameter net yields logit 0 and probability 0.5") {
  SiameseNet net = tiny_net(7);
  zero_params(net);
  Rng rng(11);
  const Tensor a = random_input(9, rng), b = random_input(9, rng);
  CHECK(forward_pair(net, a, b) == 0.0);
  CHECK(predict_prob(net, a, b) == 0.5);
}

TEST_CASE("forward is deterministic and generally asymmetric") {
  SiameseNet net = tiny_net(21);
  Rng rng(22);
  const Tensor a = random_input(9, rng), b = random_input(9, rng);
  const double l1 = forward_pair(net, a, b);
  const double l2 = forward_pair(net, a, b);
  CHECK(l1 == l2);
  CHECK(forward_pair(net, a, b) != forward_pair(net, b, a));
}

TEST_CASE("input shape is validated") {
  SiameseNet net = tiny_net(1);
  Tensor bad({7, 7, 3});
  Tensor ok({9, 9, 3});
  CHECK_THROWS_AS(forward_pair(net, bad, ok), Error);
  try {
    forward_pair(net, bad, ok);
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::InputShape);
  }
}

TEST_CASE("gradients match central finite differences per layer kind") {
  Rng rng(31);
  struct Case {
    const char* name;
    SiameseNet net;
  };
  std::vector<Case> cases;
  cases.push_back({"conv+relu+fc", tiny_net(100)});
  cases.push_back(
      {"conv stride1",
       make_net(7,
                {LayerSpec::conv(3, 2, 3, 1), LayerSpec::flatten(),
                 LayerSpec::fc(5 * 5 * 2, 6)},
                {LayerSpec::fc(12, 4), LayerSpec::relu(), LayerSpec::fc(4, 1)},
                101)});
  cases.push_back(
      {"sigmoid layer",
       make_net(7,
                {LayerSpec::conv(3, 3, 3, 2), LayerSpec::sigmoid(),
                 LayerSpec::flatten(), LayerSpec::fc(3 * 3 * 3, 5)},
                {LayerSpec::fc(10, 1)}, 102)});
  cases.push_back(
      {"fc only",
       make_net(5,
                {LayerSpec::flatten(), LayerSpec::fc(75, 10), LayerSpec::relu(),
                 LayerSpec::fc(10, 6)},
                {LayerSpec::fc(12, 5), LayerSpec::relu(), LayerSpec::fc(5, 1)},
                103)});
  for (auto& c : cases) {
    CAPTURE(c.name);
    const std::size_t side = c.net.input_side;
    for (int rep = 0; rep < 3; ++rep) {
      PairExample ex;
      ex.a = random_input(side, rng);
      ex.b = random_input(side, rng);
      ex.c_label = rep % 2;
      CHECK(grad_check(c.net, ex, 1e-5) < 1e-4);
    }
  }
}

TEST_CASE("single-weight linear net matches the closed-form derivative") {
  SiameseNet net = make_net(
      1, {LayerSpec::flatten(), LayerSpec::fc(3, 1)},
      {LayerSpec::fc(2, 1)}, 5);
  zero_params(net);
  net.branch[1].w.data[0] = 0.8;   // single active weight w
  net.head[0].w.data[0] = 1.0;     // head passes the A feature through
  Tensor a({1, 1, 3}), b({1, 1, 3});
  a.data = {0.6, 0.0, 0.0};
  b.data = {0.3, 0.0, 0.0};

  Gradients g = zero_gradients(net);
  backward_pair(net, a, b, 1, g);
  const double z = 0.8 * 0.6;
  const double expected = (sigmoid(z) - 1.0) * 0.6;
  CHECK(g.branch[1].w.data[0] == doctest::Approx(expected).epsilon(1e-12));

  const Gradients num = numeric_gradients(net, a, b, 1, 1e-5);
  const double rel =
      std::abs(g.branch[1].w.data[0] - num.branch[1].w.data[0]) /
      std::max({std::abs(g.branch[1].w.data[0]),
                std::abs(num.branch[1].w.data[0]), 1e-8});
  CHECK(rel < 1e-8);
}

TEST_CASE("a sign-flipped gradient is caught by the checker") {
  SiameseNet net = tiny_net(55);
  Rng rng(56);
  PairExample ex;
  ex.a = random_input(9, rng);
  ex.b = random_input(9, rng);
  ex.c_label = 1;
  Gradients analytic = zero_gradients(net);
  backward_pair(net, ex.a, ex.b, ex.c_label, analytic);
  // Flip the sign of one fc weight gradient.
  auto& t = analytic.head.back().w;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < t.numel(); ++i)
    if (std::abs(t.data[i]) > std::abs(t.data[arg])) arg = i;
  REQUIRE(std::abs(t.data[arg]) > 1e-6);
  t.data[arg] = -t.data[arg];
  const Gradients numeric = numeric_gradients(net, ex.a, ex.b, ex.c_label, 1e-5);
  CHECK(gradient_rel_error(analytic, numeric) > 1.5);
}

TEST_CASE("zero inputs with zero biases leave conv weight gradients at zero") {
  SiameseNet net = tiny_net(60);
  for (Layer& l : net.branch) l.b.fill(0.0);
  for (Layer& l : net.head) l.b.fill(0.0);
  Tensor a({9, 9, 3}), b({9, 9, 3});
  Gradients g = zero_gradients(net);
  backward_pair(net, a, b, 1, g);
  for (double v : g.branch[0].w.data) CHECK(v == 0.0);
}

TEST_CASE("branch parameters are shared by both paths") {
  SiameseNet net = tiny_net(70);
  Rng rng(71);
  const Tensor a = random_input(9, rng), b = random_input(9, rng);
  const Tensor fa0 = branch_forward(net, a);
  const Tensor fb0 = branch_forward(net, b);
  net.branch[0].w.data[0] += 0.25;
  const Tensor fa1 = branch_forward(net, a);
  const Tensor fb1 = branch_forward(net, b);
  CHECK(fa0.data != fa1.data);
  CHECK(fb0.data != fb1.data);
}

TEST_CASE("sgd_step: plain gradient step") {
  SiameseNet net = make_net(1, {LayerSpec::flatten(), LayerSpec::fc(3, 1)},
                            {LayerSpec::fc(2, 1)}, 9);
  zero_params(net);
  net.head[0].w.data[0] = 1.0;
  Gradients g = zero_gradients(net);
  Gradients v = zero_gradients(net);
  g.head[0].w.data[0] = 2.0;
  sgd_step(net, g, v, 0.1, 0.0);
  CHECK(net.head[0].w.data[0] == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("sgd_step: zero gradient is a fixed point") {
  SiameseNet net = tiny_net(80);
  const SiameseNet before = net;
  Gradients g = zero_gradients(net);
  Gradients v = zero_gradients(net);
  sgd_step(net, g, v, 0.1, 0.9);
  CHECK(same_params(net, before));
}

TEST_CASE("sgd_step: two momentum steps by hand recursion") {
  SiameseNet net = make_net(1, {LayerSpec::flatten(), LayerSpec::fc(3, 1)},
                            {LayerSpec::fc(2, 1)}, 9);
  zero_params(net);
  Gradients g = zero_gradients(net);
  Gradients v = zero_gradients(net);
  g.head[0].w.data[0] = 1.0;
  sgd_step(net, g, v, 0.1, 0.9);
  CHECK(net.head[0].w.data[0] == doctest::Approx(-0.1).epsilon(1e-15));
  sgd_step(net, g, v, 0.1, 0.9);
  CHECK(net.head[0].w.data[0] == doctest::Approx(-0.29).epsilon(1e-14));
}

TEST_CASE("overfitting one example drives the gradient to zero") {
  SiameseNet net = tiny_net(90);
  Rng rng(91);
  const Tensor a = random_input(9, rng), b = random_input(9, rng);
  Gradients v = zero_gradients(net);
  Gradients g = zero_gradients(net);
  for (int step = 0; step < 20000; ++step) {
    for (auto* part : {&g.branch, &g.head})
      for (TensorPair& p : *part) {
        p.w.fill(0.0);
        p.b.fill(0.0);
      }
    backward_pair(net, a, b, 1, g);
    sgd_step(net, g, v, 20.0, 0.9);
  }
  for (auto* part : {&g.branch, &g.head})
    for (TensorPair& p : *part) {
      p.w.fill(0.0);
      p.b.fill(0.0);
    }
  backward_pair(net, a, b, 1, g);
  CHECK(grad_norm(g) < 1e-6);
}

namespace {

// Pairs labeled by "mean(a) > mean(b) + 0.2": base level per side plus small
// per-pixel noise; labels computed from the actual means.
std::vector<PairExample> separable_set(std::size_t n, uint64_t seed) {
  Rng rng(seed);
  std::vector<PairExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    PairExample ex;
    ex.a = Tensor({9, 9, 3});
    ex.b = Tensor({9, 9, 3});
    const double base_a = rng.uniform(), base_b = rng.uniform();
    for (double& v : ex.a.data)
      v = std::clamp(base_a + rng.uniform(-0.02, 0.02), 0.0, 1.0);
    for (double& v : ex.b.data)
      v = std::clamp(base_b + rng.uniform(-0.02, 0.02), 0.0, 1.0);
    double ma = 0, mb = 0;
    for (double vv : ex.a.data) ma += vv;
    for (double vv : ex.b.data) mb += vv;
    ma /= double(ex.a.numel());
    mb /= double(ex.b.numel());
    ex.c_label = ma > mb + 0.2 ? 1 : 0;
    out.push_back(std::move(ex));
  }
  return out;
}

double train_ap(const SiameseNet& net, const std::vector<PairExample>& set) {
  // AP of predict_prob over the set (order-sensitive score).
  std::vector<std::pair<double, int>> scored;
  for (const auto& ex : set)
    scored.push_back({predict_prob(net, ex.a, ex.b), ex.c_label});
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& x, const auto& y) { return x.first > y.first; });
  std::size_t pos = 0, hits = 0;
  for (const auto& [s, l] : scored) pos += l;
  double ap = 0.0;
  for (std::size_t r = 0; r < scored.size(); ++r)
    if (scored[r].second == 1) {
      ++hits;
      ap += double(hits) / double(r + 1);
    }
  return ap / double(pos);
}

}  // namespace

TEST_CASE("training separates a mean-threshold dataset") {
  const auto set = separable_set(2000, 123);
  SiameseNet net = tiny_net(124);
  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.seed = 125;
  train(net, set, cfg);
  CHECK(train_ap(net, set) > 0.95);
}

TEST_CASE("zero epochs leaves the net at initialization") {
  SiameseNet net = tiny_net(130);
  const SiameseNet before = net;
  const auto set = separable_set(32, 131);
  TrainConfig cfg;
  cfg.epochs = 0;
  const TrainResult r = train(net, set, cfg);
  CHECK(r.epoch_mean_loss.empty());
  CHECK(same_params(net, before));
}

TEST_CASE("training is bit-deterministic for a fixed seed") {
  const auto set = separable_set(200, 140);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.seed = 141;
  SiameseNet n1 = tiny_net(142);
  SiameseNet n2 = tiny_net(142);
  train(n1, set, cfg);
  train(n2, set, cfg);
  CHECK(same_params(n1, n2));
}

TEST_CASE("training with Q labels requires Q everywhere") {
  auto set = separable_set(16, 150);
  for (auto& ex : set) ex.q_label = ex.c_label;
  set[7].q_label.reset();
  SiameseNet net = tiny_net(151);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.label_source = LabelSource::Q;
  CHECK_THROWS_AS(train(net, set, cfg), Error);
  try {
    train(net, set, cfg);
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::MissingLabel);
  }
}

TEST_CASE("save/load round-trips bit-exactly") {
  const std::string path = "/tmp/cooccur_test_weights.bin";
  SiameseNet net = make_patch_net(160);
  save_params(net, path);
  const SiameseNet loaded = load_params(path);
  CHECK(loaded.input_side == 17);
  CHECK(same_params(net, loaded));
  Rng rng(161);
  for (int i = 0; i < 100; ++i) {
    const Tensor a = random_input(17, rng), b = random_input(17, rng);
    CHECK(forward_pair(net, a, b) == forward_pair(loaded, a, b));
  }
  std::remove(path.c_str());
}

TEST_CASE("weights file error paths") {
  const std::string path = "/tmp/cooccur_test_weights2.bin";
  SiameseNet net = tiny_net(170);
  save_params(net, path);

  auto slurp = [&]() {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  };
  const std::string good = slurp();

  auto expect_format_error = [&](const std::string& bytes) {
    const std::string tmp = path + ".mut";
    std::ofstream(tmp, std::ios::binary) << bytes;
    bool threw = false;
    try {
      load_params(tmp);
    } catch (const Error& e) {
      threw = true;
      CHECK(e.category() == ErrorCategory::Format);
    }
    CHECK(threw);
    std::remove(tmp.c_str());
  };

  SUBCASE("corrupt magic") {
    std::string bad = good;
    bad[0] = 'X';
    expect_format_error(bad);
  }
  SUBCASE("truncated payload") {
    expect_format_error(good.substr(0, good.size() / 2));
  }
  SUBCASE("trailing bytes") { expect_format_error(good + "zz"); }
  SUBCASE("architecture header vs payload mismatch") {
    // input-side lives at offset 8; 9 -> 11 breaks the conv chain shapes.
    std::string bad = good;
    bad[8] = 11;
    expect_format_error(bad);
  }
  std::remove(path.c_str());
}

TEST_CASE("activations stay finite through forward and backward") {
  SiameseNet net = make_patch_net(180);
  Rng rng(181);
  const Tensor a = random_input(17, rng), b = random_input(17, rng);
  Tape tape;
  const Tensor f = branch_forward(net, a, &tape);
  for (const Tensor& t : tape.x) CHECK(t.all_finite());
  CHECK(f.all_finite());
  Gradients g = zero_gradients(net);
  const double loss = backward_pair(net, a, b, 1, g);
  CHECK(std::isfinite(loss));
  for (const auto* part : {&g.branch, &g.head})
    for (const TensorPair& p : *part) {
      CHECK(p.w.all_finite());
      CHECK(p.b.all_finite());
    }
}
