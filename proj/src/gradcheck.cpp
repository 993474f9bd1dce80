#include "dann/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "dann/errors.hpp"
#include "dann/data.hpp"
#include "dann/model.hpp"

namespace dann {

namespace {

double rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), 1e-4});
}

Tensor random_tensor(const std::vector<std::size_t>& shape, Rng& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Tensor t(shape);
  for (double& v : t.data) v = dist(rng);
  return t;
}

// Scalar probe s = sum(g * forward(x)).
double probe(Layer& layer, const Tensor& input, const Tensor& g) {
  Tensor out = layer.forward(input, false);
  double s = 0.0;
  for (std::size_t i = 0; i < out.numel(); ++i) s += g.data[i] * out.data[i];
  return s;
}

}  // namespace

double layer_gradcheck(Layer& layer, const Tensor& input, Rng& rng, double eps) {
  Tensor out = layer.forward(input, true);
  Tensor g = random_tensor(out.shape, rng);
  Tensor grad_in = layer.backward(g);

  std::vector<ParamRef> params;
  layer.collect_params("p", params);

  double worst = 0.0;
  // Parameter gradients: perturb each element, re-run the forward.
  for (const ParamRef& p : params) {
    for (std::size_t i = 0; i < p.value->numel(); ++i) {
      const double saved = p.value->data[i];
      p.value->data[i] = saved + eps;
      const double hi = probe(layer, input, g);
      p.value->data[i] = saved - eps;
      const double lo = probe(layer, input, g);
      p.value->data[i] = saved;
      worst = std::max(worst, rel_err(p.grad->data[i], (hi - lo) / (2.0 * eps)));
    }
  }
  // Input gradient.
  Tensor x = input;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double saved = x.data[i];
    x.data[i] = saved + eps;
    const double hi = probe(layer, x, g);
    x.data[i] = saved - eps;
    const double lo = probe(layer, x, g);
    x.data[i] = saved;
    worst = std::max(worst, rel_err(grad_in.data[i], (hi - lo) / (2.0 * eps)));
  }
  return worst;
}

namespace {

double check_conv(Rng& rng, double eps) {
  Conv1d conv(3, 2, 3, 2, rng);
  Tensor x = random_tensor({2, 3, 9}, rng);
  return layer_gradcheck(conv, x, rng, eps);
}

double check_avgpool(Rng& rng, double eps) {
  AvgPool1d pool(2);
  Tensor x = random_tensor({2, 2, 7}, rng);  // odd length: remainder dropped
  return layer_gradcheck(pool, x, rng, eps);
}

double check_relu(Rng& rng, double eps) {
  Relu relu;
  Tensor x = random_tensor({3, 2, 6}, rng);
  // keep every element away from the kink
  for (double& v : x.data)
    if (std::abs(v) < 1e-3) v = v < 0.0 ? v - 1e-3 : v + 1e-3;
  return layer_gradcheck(relu, x, rng, eps);
}

double check_dense(Rng& rng, double eps) {
  Dense dense(5, 4, rng);
  Tensor x = random_tensor({3, 5}, rng);
  return layer_gradcheck(dense, x, rng, eps);
}

double check_softmax_ce(Rng& rng, double eps) {
  Tensor logits = random_tensor({4, 3}, rng);
  std::uniform_int_distribution<int> pick(0, 2);
  std::vector<int> labels(4);
  for (int& l : labels) l = pick(rng);

  CrossEntropyResult res = softmax_cross_entropy(logits, labels);
  double worst = 0.0;
  for (std::size_t i = 0; i < logits.numel(); ++i) {
    const double saved = logits.data[i];
    logits.data[i] = saved + eps;
    const double hi = softmax_cross_entropy(logits, labels).loss;
    logits.data[i] = saved - eps;
    const double lo = softmax_cross_entropy(logits, labels).loss;
    logits.data[i] = saved;
    worst = std::max(worst, rel_err(res.grad_logits.data[i], (hi - lo) / (2.0 * eps)));
  }
  return worst;
}

double check_grl(Rng& rng, double) {
  double worst = 0.0;
  for (double lambda : {0.0, 0.5, 1.0}) {
    GradientReversal grl(lambda);
    Tensor x = random_tensor({2, 5}, rng);
    Tensor fwd = grl.forward(x, true);
    for (std::size_t i = 0; i < x.numel(); ++i)
      if (fwd.data[i] != x.data[i]) worst = std::max(worst, 1.0);
    Tensor g = random_tensor(x.shape, rng);
    Tensor back = grl.backward(g);
    for (std::size_t i = 0; i < g.numel(); ++i)
      if (back.data[i] != -lambda * g.data[i]) worst = std::max(worst, 1.0);
  }
  return worst;
}

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

// Composite total-objective gradient into the shared trunk:
// dE/dTheta_f with E = L_y (source rows) - lambda * L_d (all rows).
double check_composite(Rng& rng, double eps) {
  const double lambda = 0.7;
  std::uniform_int_distribution<std::uint64_t> seed_pick;
  DannModel model(tiny_arch(), seed_pick(rng));
  model.set_lambda(lambda);

  Tensor x = random_tensor({4, 1, 40}, rng);
  std::vector<int> class_labels = {0, 2, kAbsentLabel, kAbsentLabel};
  std::vector<std::uint8_t> source_mask = {1, 1, 0, 0};
  std::vector<int> domain_labels = {0, 0, 1, 1};

  auto objective = [&]() {
    Tensor f = model.extract_features(x);
    const double ly =
        masked_softmax_cross_entropy(model.label_head_forward(f, false), class_labels,
                                     source_mask)
            .loss;
    const double ld =
        softmax_cross_entropy(model.domain_head_forward(f, false), domain_labels).loss;
    return ly - lambda * ld;
  };

  // Analytic pass through the split-path train API.
  Tensor f = model.feature_forward(x, true);
  CrossEntropyResult label_ce = masked_softmax_cross_entropy(
      model.label_head_forward(f, true), class_labels, source_mask);
  CrossEntropyResult domain_ce =
      softmax_cross_entropy(model.domain_head_forward(f, true), domain_labels);
  Tensor feature_grad = add(model.label_head_backward(label_ce.grad_logits),
                            model.domain_head_backward(domain_ce.grad_logits));
  model.feature_backward(feature_grad);

  double worst = 0.0;
  for (ParamRef& p : model.feature_params()) {
    // Sample a handful of elements per tensor to keep the suite fast.
    const std::size_t n = p.value->numel();
    const std::size_t step = std::max<std::size_t>(1, n / 8);
    for (std::size_t i = 0; i < n; i += step) {
      const double saved = p.value->data[i];
      p.value->data[i] = saved + eps;
      const double hi = objective();
      p.value->data[i] = saved - eps;
      const double lo = objective();
      p.value->data[i] = saved;
      worst = std::max(worst, rel_err(p.grad->data[i], (hi - lo) / (2.0 * eps)));
    }
  }
  return worst;
}

}  // namespace

std::vector<GradCheckEntry> run_gradcheck_suite(std::uint64_t base_seed,
                                                std::size_t num_seeds, double tol,
                                                double eps) {
  struct Check {
    const char* name;
    double (*fn)(Rng&, double);
  };
  const Check checks[] = {
      {"conv1d", check_conv},       {"avgpool1d", check_avgpool},
      {"relu", check_relu},         {"dense", check_dense},
      {"softmax_ce", check_softmax_ce}, {"gradient_reversal", check_grl},
      {"composite_dann", check_composite},
  };

  std::vector<GradCheckEntry> out;
  for (const Check& check : checks) {
    double worst = 0.0;
    for (std::size_t s = 0; s < num_seeds; ++s) {
      Rng rng(base_seed + s * 101 + 1);
      worst = std::max(worst, check.fn(rng, eps));
    }
    out.push_back({check.name, worst, worst < tol});
  }
  return out;
}

}  // namespace dann
