/* Copyright 2026 The sigmaquant Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#include "sigmaquant/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sigmaquant/random.hpp"

namespace sigmaquant {

namespace {

struct LayerCache {
  Tensor input;      // consumed by the layer (after activation fake-quant)
  Tensor raw_input;  // before activation fake-quant, kept only when quantized
  std::optional<ActQuantParams> act;
  Tensor weight;     // effective weight (fake-quantized under a plan)
  std::optional<ChannelQuantParams> weight_qparams;
  std::vector<std::size_t> argmax;  // maxpool routing
  Tensor output;                    // softmax backward needs its output
};

std::vector<const LayerPlan*> plan_by_layer(const ModelGraph& model,
                                            const BitPlan* plan) {
  std::vector<const LayerPlan*> out(model.layers.size(), nullptr);
  if (!plan_active(plan)) return out;
  plan->validate(model);
  for (const LayerPlan& lp : plan->layers) out[lp.layer_index] = &lp;
  return out;
}

/// Number of leading layers producing logits: a trailing softmax is excluded.
std::size_t logits_end(const ModelGraph& model) {
  if (!model.layers.empty() && model.layers.back().kind == LayerKind::Softmax) {
    return model.layers.size() - 1;
  }
  return model.layers.size();
}

Shape with_batch(std::size_t batch, const Shape& sample) {
  Shape dims{batch};
  dims.insert(dims.end(), sample.begin(), sample.end());
  return dims;
}

Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor* bias) {
  const std::size_t batch = x.dim(0);
  const std::size_t out = w.dim(0);
  const std::size_t in = w.dim(1);
  Tensor y(Shape{batch, out});
  const float* xd = x.data().data();
  const float* wd = w.data().data();
  float* yd = y.data().data();
  for (std::size_t b = 0; b < batch; ++b) {
    const float* xr = xd + b * in;
    for (std::size_t o = 0; o < out; ++o) {
      const float* wr = wd + o * in;
      double acc = bias ? (*bias)[o] : 0.0;
      for (std::size_t i = 0; i < in; ++i) {
        acc += static_cast<double>(wr[i]) * static_cast<double>(xr[i]);
      }
      yd[b * out + o] = static_cast<float>(acc);
    }
  }
  return y;
}

struct ConvGeometry {
  std::size_t batch, in_c, in_h, in_w, out_c, out_h, out_w, k, stride, pad;
};

ConvGeometry conv_geometry(const LayerRecord& layer, const Tensor& x) {
  const LayerHyper& h = layer.hyper;
  ConvGeometry g{};
  g.batch = x.dim(0);
  g.in_c = x.dim(1);
  g.in_h = x.dim(2);
  g.in_w = x.dim(3);
  g.out_c = h.out_channels;
  g.k = h.kernel;
  g.stride = h.stride;
  g.pad = h.padding;
  g.out_h = (g.in_h + 2 * g.pad - g.k) / g.stride + 1;
  g.out_w = (g.in_w + 2 * g.pad - g.k) / g.stride + 1;
  return g;
}

/// Calls fn(input_offset, weight_offset, output_offset) for every in-bounds
/// multiply-accumulate of a convolution.
template <typename Fn>
void for_each_conv_mac(const ConvGeometry& g, Fn&& fn) {
  for (std::size_t b = 0; b < g.batch; ++b) {
    for (std::size_t o = 0; o < g.out_c; ++o) {
      for (std::size_t oh = 0; oh < g.out_h; ++oh) {
        for (std::size_t ow = 0; ow < g.out_w; ++ow) {
          const std::size_t y_off = ((b * g.out_c + o) * g.out_h + oh) * g.out_w + ow;
          for (std::size_t c = 0; c < g.in_c; ++c) {
            for (std::size_t kh = 0; kh < g.k; ++kh) {
              const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * g.stride + kh) -
                                        static_cast<std::ptrdiff_t>(g.pad);
              if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
              for (std::size_t kw = 0; kw < g.k; ++kw) {
                const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ow * g.stride + kw) -
                                          static_cast<std::ptrdiff_t>(g.pad);
                if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(g.in_w)) continue;
                const std::size_t x_off =
                    ((b * g.in_c + c) * g.in_h + static_cast<std::size_t>(ih)) * g.in_w +
                    static_cast<std::size_t>(iw);
                const std::size_t w_off = ((o * g.in_c + c) * g.k + kh) * g.k + kw;
                fn(x_off, w_off, y_off);
              }
            }
          }
        }
      }
    }
  }
}

Tensor conv_forward(const LayerRecord& layer, const Tensor& x, const Tensor& w,
                    const Tensor* bias) {
  const ConvGeometry g = conv_geometry(layer, x);
  std::vector<double> acc(g.batch * g.out_c * g.out_h * g.out_w, 0.0);
  const auto& xd = x.values();
  const auto& wd = w.values();
  for_each_conv_mac(g, [&](std::size_t xo, std::size_t wo, std::size_t yo) {
    acc[yo] += static_cast<double>(wd[wo]) * static_cast<double>(xd[xo]);
  });
  Tensor y(Shape{g.batch, g.out_c, g.out_h, g.out_w});
  const std::size_t plane = g.out_h * g.out_w;
  for (std::size_t i = 0; i < acc.size(); ++i) {
    const double b = bias ? (*bias)[(i / plane) % g.out_c] : 0.0;
    y[i] = static_cast<float>(acc[i] + b);
  }
  return y;
}

Tensor maxpool_forward(const LayerRecord& layer, const Tensor& x,
                       std::vector<std::size_t>& argmax) {
  const std::size_t batch = x.dim(0), ch = x.dim(1), ih = x.dim(2), iw = x.dim(3);
  const std::size_t k = layer.hyper.kernel, s = layer.hyper.stride;
  const std::size_t oh = (ih - k) / s + 1, ow = (iw - k) / s + 1;
  Tensor y(Shape{batch, ch, oh, ow});
  argmax.assign(y.numel(), 0);
  std::size_t out = 0;
  for (std::size_t bc = 0; bc < batch * ch; ++bc) {
    for (std::size_t r = 0; r < oh; ++r) {
      for (std::size_t c = 0; c < ow; ++c, ++out) {
        std::size_t best = bc * ih * iw + (r * s) * iw + c * s;
        for (std::size_t kr = 0; kr < k; ++kr) {
          for (std::size_t kc = 0; kc < k; ++kc) {
            const std::size_t idx = bc * ih * iw + (r * s + kr) * iw + (c * s + kc);
            if (x[idx] > x[best]) best = idx;
          }
        }
        argmax[out] = best;
        y[out] = x[best];
      }
    }
  }
  return y;
}

Tensor softmax_rows(const Tensor& x) {
  const std::size_t batch = x.dim(0);
  const std::size_t width = x.numel() / batch;
  Tensor y(x.dims());
  for (std::size_t b = 0; b < batch; ++b) {
    const float* xr = x.data().data() + b * width;
    float* yr = y.data().data() + b * width;
    const float mx = *std::max_element(xr, xr + width);
    double sum = 0.0;
    for (std::size_t i = 0; i < width; ++i) sum += std::exp(double{xr[i]} - mx);
    for (std::size_t i = 0; i < width; ++i) {
      yr[i] = static_cast<float>(std::exp(double{xr[i]} - mx) / sum);
    }
  }
  return y;
}

Tensor run_chain(const ModelGraph& model, const Tensor& batch,
                 const BitPlan* plan, std::size_t end,
                 std::vector<LayerCache>* cache) {
  const std::vector<const LayerPlan*> by_layer = plan_by_layer(model, plan);
  const std::size_t n = batch.dim(0);
  if (batch.numel() != n * shape_numel(model.input_shape)) {
    throw Error("batch dims " + shape_to_string(batch.dims()) +
                " do not match model input " + shape_to_string(model.input_shape));
  }
  Tensor x = batch.reshaped(with_batch(n, model.input_shape));
  if (cache) cache->assign(end, LayerCache{});

  for (std::size_t l = 0; l < end; ++l) {
    const LayerRecord& layer = model.layers[l];
    LayerCache* lc = cache ? &(*cache)[l] : nullptr;
    switch (layer.kind) {
      case LayerKind::Dense:
      case LayerKind::Conv2d: {
        const LayerPlan* lp = by_layer[l];
        std::optional<ChannelQuantParams> wq;
        Tensor weight;
        if (lp) {
          wq = lp->weight_qparams ? *lp->weight_qparams
                                  : per_channel_qparams(*layer.weights, lp->bits_w);
          weight = quantize_dequantize(*layer.weights, *wq);
        } else {
          weight = *layer.weights;
        }
        if (lp && lp->act_qparams) {
          if (lc) {
            lc->raw_input = x;
            lc->act = lp->act_qparams;
          }
          x = act_quantize(x, *lp->act_qparams);
        }
        const Tensor* bias = layer.bias ? &*layer.bias : nullptr;
        Tensor y = layer.kind == LayerKind::Dense
                       ? dense_forward(x.reshaped(Shape{n, x.numel() / n}), weight, bias)
                       : conv_forward(layer, x, weight, bias);
        if (lc) {
          lc->input = std::move(x);
          lc->weight = std::move(weight);
          lc->weight_qparams = std::move(wq);
        }
        x = std::move(y);
        break;
      }
      case LayerKind::Relu: {
        Tensor y = x;
        for (float& v : y.values()) v = std::max(v, 0.0f);
        if (lc) lc->input = std::move(x);
        x = std::move(y);
        break;
      }
      case LayerKind::MaxPool2d: {
        std::vector<std::size_t> argmax;
        Tensor y = maxpool_forward(layer, x, argmax);
        if (lc) {
          lc->input = std::move(x);
          lc->argmax = std::move(argmax);
        }
        x = std::move(y);
        break;
      }
      case LayerKind::Flatten: {
        Tensor y = x.reshaped(Shape{n, x.numel() / n});
        if (lc) lc->input = std::move(x);
        x = std::move(y);
        break;
      }
      case LayerKind::Softmax: {
        Tensor y = softmax_rows(x);
        if (lc) {
          lc->input = std::move(x);
          lc->output = y;
        }
        x = std::move(y);
        break;
      }
    }
  }
  return x;
}

void apply_weight_ste(const Tensor& latent, const ChannelQuantParams& wq,
                      Tensor& grad) {
  const std::size_t block = latent.numel() / wq.channels.size();
  for (std::size_t i = 0; i < grad.numel(); ++i) {
    grad[i] = static_cast<float>(ste_grad(latent[i], wq.channels[i / block], grad[i]));
  }
}

void apply_act_ste(const Tensor& raw, const ActQuantParams& act, Tensor& grad) {
  for (std::size_t i = 0; i < grad.numel(); ++i) {
    const double v = raw[i];
    if (v < act.lo || v > act.hi) grad[i] = 0.0f;
  }
}

/// Softmax cross-entropy over logits [B, C]; fills dlogits with the mean-loss
/// gradient when requested.
double cross_entropy(const Tensor& logits, std::span<const std::uint32_t> labels,
                     Tensor* dlogits, std::size_t* correct) {
  const std::size_t batch = logits.dim(0);
  const std::size_t classes = logits.numel() / batch;
  if (labels.size() != batch) throw Error("one label per sample required");
  if (dlogits) *dlogits = Tensor(Shape{batch, classes});
  double total = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const float* row = logits.data().data() + b * classes;
    if (labels[b] >= classes) throw Error("label exceeds model output width");
    const float mx = *std::max_element(row, row + classes);
    double sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) sum += std::exp(double{row[c]} - mx);
    const double log_z = std::log(sum) + mx;
    total += log_z - row[labels[b]];
    if (correct) {
      const std::size_t arg =
          static_cast<std::size_t>(std::max_element(row, row + classes) - row);
      if (arg == labels[b]) ++*correct;
    }
    if (dlogits) {
      for (std::size_t c = 0; c < classes; ++c) {
        double p = std::exp(double{row[c]} - log_z);
        if (c == labels[b]) p -= 1.0;
        (*dlogits)[b * classes + c] = static_cast<float>(p / static_cast<double>(batch));
      }
    }
  }
  return total;
}

void check_finite_model(const ModelGraph& model, bool& ok) {
  for (const LayerRecord& layer : model.layers) {
    for (const auto* t : {&layer.weights, &layer.bias}) {
      if (!*t) continue;
      for (float v : (*t)->values()) {
        if (!std::isfinite(v)) {
          ok = false;
          return;
        }
      }
    }
  }
}

struct OptimizerState {
  std::vector<std::vector<double>> first;
  std::vector<std::vector<double>> second;
  std::size_t step = 0;
};

void apply_update(Tensor& param, const Tensor& grad, std::vector<double>& first,
                  std::vector<double>& second, const TrainConfig& cfg,
                  std::size_t step) {
  if (first.empty()) first.assign(param.numel(), 0.0);
  auto& p = param.values();
  const auto& g = grad.values();
  if (cfg.optimizer == Optimizer::Sgd) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      first[i] = cfg.momentum * first[i] + g[i];
      p[i] = static_cast<float>(p[i] - cfg.learning_rate * first[i]);
    }
    return;
  }
  constexpr double kBeta2 = 0.999, kEps = 1e-8;
  const double beta1 = cfg.momentum;
  if (second.empty()) second.assign(param.numel(), 0.0);
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
  for (std::size_t i = 0; i < p.size(); ++i) {
    first[i] = beta1 * first[i] + (1.0 - beta1) * g[i];
    second[i] = kBeta2 * second[i] + (1.0 - kBeta2) * g[i] * g[i];
    const double update = (first[i] / c1) / (std::sqrt(second[i] / c2) + kEps);
    p[i] = static_cast<float>(p[i] - cfg.learning_rate * update);
  }
}

TrainResult train_impl(const ModelGraph& model, const BitPlan* plan,
                       const Dataset& dataset, const TrainConfig& cfg) {
  cfg.validate();
  dataset.validate();
  TrainResult result{model, false, 0.0, 0};
  if (cfg.epochs == 0 || dataset.size() == 0) return result;

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t layers = model.layers.size();
  OptimizerState w_state{std::vector<std::vector<double>>(layers),
                         std::vector<std::vector<double>>(layers), 0};
  OptimizerState b_state = w_state;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, order.size() - start);
      std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                   order.begin() + static_cast<std::ptrdiff_t>(start + count));
      const Dataset batch = dataset.gather(idx);
      LossAndGradients lg =
          loss_gradients(result.model, batch.inputs, batch.labels, plan);
      if (!std::isfinite(lg.loss)) {
        return TrainResult{model, true, lg.loss, result.steps};
      }
      ++result.steps;
      for (std::size_t l = 0; l < layers; ++l) {
        LayerRecord& layer = result.model.layers[l];
        if (lg.grads.weights[l]) {
          apply_update(*layer.weights, *lg.grads.weights[l], w_state.first[l],
                       w_state.second[l], cfg, result.steps);
        }
        if (lg.grads.bias[l] && layer.bias) {
          apply_update(*layer.bias, *lg.grads.bias[l], b_state.first[l],
                       b_state.second[l], cfg, result.steps);
        }
      }
      epoch_loss += lg.loss * static_cast<double>(count);
    }
    result.final_loss = epoch_loss / static_cast<double>(dataset.size());
  }
  bool finite = std::isfinite(result.final_loss);
  if (finite) check_finite_model(result.model, finite);
  if (!finite) return TrainResult{model, true, result.final_loss, result.steps};
  return result;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size == 0) throw Error("batch_size must be positive");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw Error("learning_rate must be a finite non-negative number");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw Error("momentum must lie in [0, 1)");
  }
}

bool plan_active(const BitPlan* plan) { return plan && !plan->layers.empty(); }

Tensor forward(const ModelGraph& model, const Tensor& batch, const BitPlan* plan) {
  return run_chain(model, batch, plan, model.layers.size(), nullptr);
}

double ste_grad(double w, const QuantParams& qp, double upstream) {
  return std::abs(w / qp.scale) <= static_cast<double>(qp.qmax) ? upstream : 0.0;
}

LossAndGradients loss_gradients(const ModelGraph& model, const Tensor& inputs,
                                std::span<const std::uint32_t> labels,
                                const BitPlan* plan) {
  const std::size_t end = logits_end(model);
  std::vector<LayerCache> cache;
  const Tensor logits = run_chain(model, inputs, plan, end, &cache);
  const std::size_t n = logits.dim(0);

  LossAndGradients out;
  out.grads.weights.resize(model.layers.size());
  out.grads.bias.resize(model.layers.size());
  Tensor grad;
  out.loss = cross_entropy(logits, labels, &grad, nullptr) / static_cast<double>(n);

  for (std::size_t l = end; l-- > 0;) {
    const LayerRecord& layer = model.layers[l];
    LayerCache& lc = cache[l];
    const bool need_input_grad = l > 0;
    switch (layer.kind) {
      case LayerKind::Dense: {
        const std::size_t out_f = lc.weight.dim(0), in_f = lc.weight.dim(1);
        const float* x = lc.input.data().data();
        const float* w = lc.weight.data().data();
        const float* g = grad.data().data();
        std::vector<double> dw(out_f * in_f, 0.0), db(out_f, 0.0);
        for (std::size_t b = 0; b < n; ++b) {
          for (std::size_t o = 0; o < out_f; ++o) {
            const double go = g[b * out_f + o];
            if (go == 0.0) continue;
            db[o] += go;
            double* dwr = dw.data() + o * in_f;
            const float* xr = x + b * in_f;
            for (std::size_t i = 0; i < in_f; ++i) dwr[i] += go * xr[i];
          }
        }
        Tensor dx;
        if (need_input_grad) {
          dx = Tensor(lc.input.dims());
          for (std::size_t b = 0; b < n; ++b) {
            for (std::size_t i = 0; i < in_f; ++i) {
              double acc = 0.0;
              for (std::size_t o = 0; o < out_f; ++o) {
                acc += static_cast<double>(g[b * out_f + o]) * w[o * in_f + i];
              }
              dx[b * in_f + i] = static_cast<float>(acc);
            }
          }
        }
        Tensor dwt(lc.weight.dims(), std::vector<float>(dw.begin(), dw.end()));
        if (lc.weight_qparams) apply_weight_ste(*layer.weights, *lc.weight_qparams, dwt);
        out.grads.weights[l] = std::move(dwt);
        if (layer.bias) out.grads.bias[l] = Tensor(Shape{out_f}, std::vector<float>(db.begin(), db.end()));
        if (need_input_grad && lc.act) apply_act_ste(lc.raw_input, *lc.act, dx);
        grad = std::move(dx);
        break;
      }
      case LayerKind::Conv2d: {
        const ConvGeometry geo = conv_geometry(layer, lc.input);
        const auto& x = lc.input.values();
        const auto& w = lc.weight.values();
        const auto& g = grad.values();
        std::vector<double> dw(lc.weight.numel(), 0.0), dxd;
        if (need_input_grad) dxd.assign(lc.input.numel(), 0.0);
        for_each_conv_mac(geo, [&](std::size_t xo, std::size_t wo, std::size_t yo) {
          const double gy = g[yo];
          dw[wo] += gy * x[xo];
          if (need_input_grad) dxd[xo] += gy * w[wo];
        });
        std::vector<double> db(geo.out_c, 0.0);
        const std::size_t plane = geo.out_h * geo.out_w;
        for (std::size_t i = 0; i < g.size(); ++i) db[(i / plane) % geo.out_c] += g[i];
        Tensor dwt(lc.weight.dims(), std::vector<float>(dw.begin(), dw.end()));
        if (lc.weight_qparams) apply_weight_ste(*layer.weights, *lc.weight_qparams, dwt);
        out.grads.weights[l] = std::move(dwt);
        if (layer.bias) out.grads.bias[l] = Tensor(Shape{geo.out_c}, std::vector<float>(db.begin(), db.end()));
        Tensor dx;
        if (need_input_grad) {
          dx = Tensor(lc.input.dims(), std::vector<float>(dxd.begin(), dxd.end()));
          if (lc.act) apply_act_ste(lc.raw_input, *lc.act, dx);
        }
        grad = std::move(dx);
        break;
      }
      case LayerKind::Relu: {
        Tensor dx = std::move(grad);
        for (std::size_t i = 0; i < dx.numel(); ++i) {
          if (!(lc.input[i] > 0.0f)) dx[i] = 0.0f;
        }
        grad = std::move(dx);
        break;
      }
      case LayerKind::MaxPool2d: {
        Tensor dx(lc.input.dims());
        for (std::size_t i = 0; i < lc.argmax.size(); ++i) dx[lc.argmax[i]] += grad[i];
        grad = std::move(dx);
        break;
      }
      case LayerKind::Flatten:
        grad = grad.reshaped(lc.input.dims());
        break;
      case LayerKind::Softmax: {
        const std::size_t width = lc.output.numel() / n;
        Tensor dx(lc.input.dims());
        for (std::size_t b = 0; b < n; ++b) {
          double dot = 0.0;
          for (std::size_t i = 0; i < width; ++i) {
            dot += double{grad[b * width + i]} * lc.output[b * width + i];
          }
          for (std::size_t i = 0; i < width; ++i) {
            const std::size_t k = b * width + i;
            dx[k] = static_cast<float>(lc.output[k] * (grad[k] - dot));
          }
        }
        grad = std::move(dx);
        break;
      }
    }
  }
  return out;
}

EvalReport evaluate_accuracy(const ModelGraph& model, const Dataset& dataset,
                             const BitPlan* plan, std::size_t chunk) {
  dataset.validate();
  if (dataset.size() == 0) throw Error("cannot evaluate on an empty dataset");
  if (chunk == 0) throw Error("evaluation chunk must be positive");
  const std::size_t end = logits_end(model);
  EvalReport report;
  report.count = dataset.size();
  double loss = 0.0;
  for (std::size_t start = 0; start < dataset.size(); start += chunk) {
    const std::size_t count = std::min(chunk, dataset.size() - start);
    const Dataset part = dataset.slice(start, count);
    const Tensor logits = run_chain(model, part.inputs, plan, end, nullptr);
    loss += cross_entropy(logits, part.labels, nullptr, &report.correct);
  }
  report.loss = loss / static_cast<double>(report.count);
  report.top1_accuracy = 100.0 * static_cast<double>(report.correct) /
                         static_cast<double>(report.count);
  return report;
}

BitPlan calibrate(const ModelGraph& model, const Dataset& calib_set,
                  const BitPlan& plan, double percentile) {
  plan.validate(model);
  calib_set.validate();
  if (calib_set.size() == 0) throw Error("calibration set is empty");
  std::vector<ActObserver> observers(plan.layers.size(), ActObserver(percentile));
  constexpr std::size_t kChunk = 256;
  for (std::size_t start = 0; start < calib_set.size(); start += kChunk) {
    const std::size_t count = std::min(kChunk, calib_set.size() - start);
    const Dataset part = calib_set.slice(start, count);
    std::vector<LayerCache> cache;
    run_chain(model, part.inputs, nullptr, plan.layers.back().layer_index + 1, &cache);
    for (std::size_t i = 0; i < plan.layers.size(); ++i) {
      observers[i].update(cache[plan.layers[i].layer_index].input.data());
    }
  }
  BitPlan out = plan;
  for (std::size_t i = 0; i < out.layers.size(); ++i) {
    LayerPlan& lp = out.layers[i];
    lp.act_qparams = act_qparams(observers[i], lp.bits_a);
    lp.weight_qparams = per_channel_qparams(*model.layers[lp.layer_index].weights, lp.bits_w);
  }
  return out;
}

TrainResult train_float(const ModelGraph& model, const Dataset& dataset,
                        const TrainConfig& cfg) {
  return train_impl(model, nullptr, dataset, cfg);
}

TrainResult qat_epochs(const ModelGraph& model, const BitPlan& plan,
                       const Dataset& dataset, const TrainConfig& cfg) {
  plan.validate(model);
  if (!plan.calibrated()) throw Error("QAT needs a calibrated plan");
  return train_impl(model, &plan, dataset, cfg);
}

}  // namespace sigmaquant
