#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "polydub/nn/ops.hpp"
#include "polydub/nn/tensor.hpp"

namespace polydub::nn {

// Owns the named trainable tensors of a model; the checkpoint container
// serializes it and the optimizer iterates it.
class ParamStore {
 public:
  Tensor create(const std::string& name, std::vector<int> shape, Rng& rng, float stdev) {
    Tensor t = stdev == 0.0f ? Tensor::zeros(shape, true)
                             : Tensor::randn(shape, rng, stdev, true);
    t.set_requires_grad(true);
    t.zero_grad();
    items_.emplace_back(name, t);
    return t;
  }

  const std::vector<std::pair<std::string, Tensor>>& items() const { return items_; }

  std::vector<Tensor> tensors() const {
    std::vector<Tensor> out;
    out.reserve(items_.size());
    for (const auto& [_, t] : items_) out.push_back(t);
    return out;
  }

  Tensor find(const std::string& name) const {
    for (const auto& [n, t] : items_)
      if (n == name) return t;
    throw std::out_of_range("ParamStore: no parameter named " + name);
  }

 private:
  std::vector<std::pair<std::string, Tensor>> items_;
};

inline float fan_in_stdev(int fan_in) { return 1.0f / std::sqrt(static_cast<float>(fan_in)); }

struct Linear {
  Tensor w;  // [in, out]
  Tensor b;  // [out]
  Linear() = default;
  Linear(ParamStore& ps, const std::string& name, int in, int out, Rng& rng) {
    w = ps.create(name + ".w", {in, out}, rng, fan_in_stdev(in));
    b = ps.create(name + ".b", {out}, rng, 0.0f);
  }
  // x [T,in] -> [T,out]
  Tensor operator()(const Tensor& x) const { return add(matmul(x, w), b); }
};

struct Conv1d {
  Tensor w;  // [out, in, k]
  Tensor b;
  int stride = 1, pad = 0;
  Conv1d() = default;
  Conv1d(ParamStore& ps, const std::string& name, int in, int out, int k, int stride_,
         int pad_, Rng& rng)
      : stride(stride_), pad(pad_) {
    w = ps.create(name + ".w", {out, in, k}, rng, fan_in_stdev(in * k));
    b = ps.create(name + ".b", {out}, rng, 0.0f);
  }
  Tensor operator()(const Tensor& x) const { return conv1d(x, w, b, stride, pad); }
};

struct ConvT1d {
  Tensor w;  // [in, out, k]
  Tensor b;
  int stride = 1, pad = 0;
  ConvT1d() = default;
  ConvT1d(ParamStore& ps, const std::string& name, int in, int out, int k, int stride_,
          int pad_, Rng& rng)
      : stride(stride_), pad(pad_) {
    w = ps.create(name + ".w", {in, out, k}, rng, fan_in_stdev(in * k / stride_));
    b = ps.create(name + ".b", {out}, rng, 0.0f);
  }
  Tensor operator()(const Tensor& x) const {
    return conv_transpose1d(x, w, b, stride, pad);
  }
};

struct Conv2d {
  Tensor w;  // [out, in, kh, kw]
  Tensor b;
  int stride = 1, pad = 0;
  Conv2d() = default;
  Conv2d(ParamStore& ps, const std::string& name, int in, int out, int k, int stride_,
         int pad_, Rng& rng)
      : stride(stride_), pad(pad_) {
    w = ps.create(name + ".w", {out, in, k, k}, rng, fan_in_stdev(in * k * k));
    b = ps.create(name + ".b", {out}, rng, 0.0f);
  }
  Tensor operator()(const Tensor& x) const { return conv2d(x, w, b, stride, pad); }
};

struct ConvT2d {
  Tensor w;  // [in, out, kh, kw]
  Tensor b;
  int stride = 1, pad = 0;
  ConvT2d() = default;
  ConvT2d(ParamStore& ps, const std::string& name, int in, int out, int k, int stride_,
          int pad_, Rng& rng)
      : stride(stride_), pad(pad_) {
    w = ps.create(name + ".w", {in, out, k, k}, rng,
                  fan_in_stdev(in * k * k / (stride_ * stride_)));
    b = ps.create(name + ".b", {out}, rng, 0.0f);
  }
  Tensor operator()(const Tensor& x) const {
    return conv_transpose2d(x, w, b, stride, pad);
  }
};

struct LayerNorm {
  Tensor gain, bias;
  LayerNorm() = default;
  LayerNorm(ParamStore& ps, const std::string& name, int c, Rng& rng) {
    gain = ps.create(name + ".g", {c}, rng, 0.0f);
    for (auto& v : gain.data()) v = 1.0f;
    bias = ps.create(name + ".b", {c}, rng, 0.0f);
  }
  Tensor operator()(const Tensor& x) const { return layer_norm(x, gain, bias); }
};

struct GruCell {
  Linear zr;  // [in+hid] -> 2*hid (update, reset gates)
  Linear hc;  // [in+hid] -> hid (candidate)
  int hid = 0;
  GruCell() = default;
  GruCell(ParamStore& ps, const std::string& name, int in, int hid_, Rng& rng)
      : zr(ps, name + ".zr", in + hid_, 2 * hid_, rng),
        hc(ps, name + ".hc", in + hid_, hid_, rng),
        hid(hid_) {}
  // x [1,in], h [1,hid] -> [1,hid]
  Tensor step(const Tensor& x, const Tensor& h) const {
    Tensor xh = cat_cols(x, h);
    Tensor gates = sigmoid_(zr(xh));
    Tensor z = slice_cols(gates, 0, hid);
    Tensor r = slice_cols(gates, hid, hid);
    Tensor cand = tanh_(hc(cat_cols(x, mul(r, h))));
    // h' = (1-z)*h + z*cand
    Tensor one_minus_z = add_scalar(neg(z), 1.0f);
    return add(mul(one_minus_z, h), mul(z, cand));
  }
};

}  // namespace polydub::nn
