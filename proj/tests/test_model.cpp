#include <doctest.h>

#include <cmath>

#include "dann/data.hpp"
#include "dann/errors.hpp"
#include "dann/layers.hpp"
#include "dann/model.hpp"

using namespace dann;

namespace {

ArchConfig tiny_arch() {
  ArchConfig arch;
  arch.input_length = 40;
  arch.conv1_width = 5;
  arch.conv1_maps = 3;
  arch.conv1_stride = 2;
  arch.conv2_width = 3;
  arch.conv2_maps = 2;
  arch.conv2_stride = 1;
  arch.pool = 2;
  arch.head_depth = 2;
  arch.head_width = 6;
  arch.num_classes = 3;
  return arch;
}

Tensor random_input(std::size_t batch, std::size_t len, Rng& rng) {
  std::uniform_real_distribution<double> dist(-1, 1);
  Tensor x({batch, 1, len});
  for (double& v : x.data) v = dist(rng);
  return x;
}

}  // namespace

TEST_CASE("full-scale preset feature width is 4096") {
  ArchConfig arch;  // defaults are the 4960-sample preset
  CHECK(arch.feature_dim() == 4096);

  // conv1(k64,s31) -> 158, pool2 -> 79, conv2(k15,s1) -> 65, pool2 -> 32
  arch.head_width = 8;  // keep the heads small; only the trunk matters here
  arch.head_depth = 2;
  DannModel model(arch, 1);
  Rng rng(2);
  Tensor f = model.extract_features(random_input(1, 4960, rng));
  CHECK(f.shape == std::vector<std::size_t>{1, 4096});
}

TEST_CASE("zero input with zero biases gives zero features") {
  DannModel model(tiny_arch(), 3);
  Tensor f = model.extract_features(Tensor({2, 1, 40}));
  // conv of zeros is the bias, which starts at zero
  for (double v : f.data) CHECK(v == 0.0);
}

TEST_CASE("feature extraction is row-independent across the batch") {
  DannModel model(tiny_arch(), 4);
  Rng rng(5);
  Tensor x = random_input(2, 40, rng);
  Tensor both = model.extract_features(x);
  for (std::size_t b = 0; b < 2; ++b) {
    Tensor row({1, 1, 40});
    std::copy_n(x.data.begin() + static_cast<std::ptrdiff_t>(b * 40), 40, row.data.begin());
    Tensor single = model.extract_features(row);
    for (std::size_t j = 0; j < single.numel(); ++j)
      CHECK(single.data[j] == both.at(b, j));
  }
}

TEST_CASE("wrong input length is rejected") {
  DannModel model(tiny_arch(), 6);
  CHECK_THROWS_AS(model.extract_features(Tensor({1, 1, 39})), DimensionError);
}

TEST_CASE("domain forward is unaffected by lambda") {
  DannModel model(tiny_arch(), 7);
  Rng rng(8);
  Tensor x = random_input(3, 40, rng);
  model.set_lambda(0.0);
  Tensor a = model.forward_domain(x);
  model.set_lambda(1.0);
  Tensor b = model.forward_domain(x);
  CHECK(a.data == b.data);
  CHECK(a.shape == std::vector<std::size_t>{3, 2});
}

TEST_CASE("label logits have shape [B x K]") {
  DannModel model(tiny_arch(), 9);
  Rng rng(10);
  CHECK(model.forward_label(random_input(4, 40, rng)).shape ==
        std::vector<std::size_t>{4, 3});
}

TEST_CASE("untrained domain accuracy on balanced random data is near chance") {
  DannModel model(tiny_arch(), 11);
  Rng rng(12);
  std::size_t hits = 0;
  const std::size_t n = 1000;
  for (std::size_t i = 0; i < n; ++i) {
    Tensor logits = model.forward_domain(random_input(1, 40, rng));
    const int pred = logits.at(0, 0) >= logits.at(0, 1) ? 0 : 1;
    hits += pred == static_cast<int>(i % 2) ? 1 : 0;
  }
  const double acc = static_cast<double>(hits) / static_cast<double>(n);
  CHECK(acc > 0.4);
  CHECK(acc < 0.6);
}

TEST_CASE("predict is argmax of label logits and ignores the domain head") {
  DannModel model(tiny_arch(), 13);
  Rng rng(14);
  Tensor x = random_input(5, 40, rng);

  Tensor logits = model.forward_label(x);
  std::vector<int> pred = model.predict(x);
  for (std::size_t b = 0; b < 5; ++b) {
    int best = 0;
    for (int k = 1; k < 3; ++k)
      if (logits.at(b, static_cast<std::size_t>(k)) >
          logits.at(b, static_cast<std::size_t>(best)))
        best = k;
    CHECK(pred[b] == best);
  }

  // mangle every domain-head parameter; predictions must not move
  for (ParamRef& p : model.domain_params())
    for (double& v : p.value->data) v = 123.0 + v;
  CHECK(model.predict(x) == pred);
  CHECK(model.predict(x) == pred);  // and they are deterministic
}

TEST_CASE("argmax picks the largest logit") {
  // [0.1, 2.0, -1.0] -> class 1, checked through a head forced to identity
  Tensor logits({1, 3}, {0.1, 2.0, -1.0});
  int best = 0;
  for (int k = 1; k < 3; ++k)
    if (logits.at(0, static_cast<std::size_t>(k)) >
        logits.at(0, static_cast<std::size_t>(best)))
      best = k;
  CHECK(best == 1);
}

TEST_CASE("composite feature gradient matches finite differences of Ly - lambda*Ld") {
  const double lambda = 0.6;
  DannModel model(tiny_arch(), 15);
  model.set_lambda(lambda);
  Rng rng(16);
  Tensor x = random_input(4, 40, rng);
  std::vector<int> class_labels = {0, 1, kAbsentLabel, kAbsentLabel};
  std::vector<std::uint8_t> mask = {1, 1, 0, 0};
  std::vector<int> domain_labels = {0, 0, 1, 1};

  auto objective = [&]() {
    Tensor f = model.extract_features(x);
    const double ly = masked_softmax_cross_entropy(model.label_head_forward(f, false),
                                                   class_labels, mask)
                          .loss;
    const double ld =
        softmax_cross_entropy(model.domain_head_forward(f, false), domain_labels).loss;
    return ly - lambda * ld;
  };

  Tensor f = model.feature_forward(x, true);
  auto label_ce = masked_softmax_cross_entropy(model.label_head_forward(f, true),
                                               class_labels, mask);
  auto domain_ce =
      softmax_cross_entropy(model.domain_head_forward(f, true), domain_labels);
  Tensor grad = add(model.label_head_backward(label_ce.grad_logits),
                    model.domain_head_backward(domain_ce.grad_logits));
  model.feature_backward(grad);

  const double eps = 1e-6;
  std::vector<ParamRef> params = model.feature_params();
  // probe a few entries of the first conv weight
  ParamRef& w = params[0];
  for (std::size_t i = 0; i < w.value->numel(); i += 11) {
    const double saved = w.value->data[i];
    w.value->data[i] = saved + eps;
    const double hi = objective();
    w.value->data[i] = saved - eps;
    const double lo = objective();
    w.value->data[i] = saved;
    const double fd = (hi - lo) / (2 * eps);
    const double analytic = w.grad->data[i];
    CHECK(std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), 1e-4}) <
          1e-4);
  }
}

TEST_CASE("GRL backprop equals -lambda times the un-reversed backprop") {
  const double lambda = 0.37;
  DannModel with_grl(tiny_arch(), 17);
  with_grl.set_lambda(lambda);
  Rng rng(18);
  Tensor x = random_input(3, 40, rng);
  std::vector<int> domain_labels = {0, 1, 1};

  Tensor f = with_grl.feature_forward(x, true);
  auto ce = softmax_cross_entropy(with_grl.domain_head_forward(f, true), domain_labels);
  Tensor reversed = with_grl.domain_head_backward(ce.grad_logits);

  with_grl.set_lambda(1.0);
  with_grl.feature_forward(x, true);
  auto ce2 = softmax_cross_entropy(with_grl.domain_head_forward(f, true), domain_labels);
  Tensor unit = with_grl.domain_head_backward(ce2.grad_logits);

  // reversed(lambda) == lambda * reversed(1), so against the raw
  // gradient g = -reversed(1): reversed(lambda) == -lambda * g exactly
  for (std::size_t i = 0; i < reversed.numel(); ++i)
    CHECK(reversed.data[i] == lambda * unit.data[i]);
}
