#include "polydub/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace polydub::nn {

namespace {

NodePtr make_node(std::vector<int> shape, std::initializer_list<Tensor> parents) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value.assign(static_cast<size_t>(n->numel()), 0.0f);
  bool rg = false;
  for (const auto& t : parents) rg = rg || t.requires_grad();
  n->requires_grad = rg;
  if (rg)
    for (const auto& t : parents) n->parents.push_back(t.node());
  return n;
}

bool same_shape(const Tensor& a, const Tensor& b) { return a.shape() == b.shape(); }

[[noreturn]] void shape_error(const char* op) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes");
}

// Broadcast mode for binary elementwise ops.
enum class Bcast { Same, Scalar, RowVec };

Bcast bcast_mode(const Tensor& a, const Tensor& b, const char* op) {
  if (same_shape(a, b)) return Bcast::Same;
  if (b.numel() == 1) return Bcast::Scalar;
  if (a.ndim() == 2 && b.ndim() == 1 && b.dim(0) == a.dim(1)) return Bcast::RowVec;
  shape_error(op);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  Bcast mode = bcast_mode(a, b, "add");
  auto n = make_node(a.shape(), {a, b});
  const auto& av = a.data();
  const auto& bv = b.data();
  auto& out = n->value;
  const size_t sz = av.size();
  if (mode == Bcast::Same) {
    for (size_t i = 0; i < sz; ++i) out[i] = av[i] + bv[i];
  } else if (mode == Bcast::Scalar) {
    const float c = bv[0];
    for (size_t i = 0; i < sz; ++i) out[i] = av[i] + c;
  } else {
    const size_t cols = static_cast<size_t>(a.dim(1));
    for (size_t i = 0; i < sz; ++i) out[i] = av[i] + bv[i % cols];
  }
  if (n->requires_grad) {
    n->backprop = [mode](Node& self) {
      Node* pa = self.parents[0].get();
      Node* pb = self.parents[1].get();
      const size_t sz = self.grad.size();
      if (pa->requires_grad)
        for (size_t i = 0; i < sz; ++i) pa->grad[i] += self.grad[i];
      if (pb->requires_grad) {
        if (mode == Bcast::Same) {
          for (size_t i = 0; i < sz; ++i) pb->grad[i] += self.grad[i];
        } else if (mode == Bcast::Scalar) {
          double acc = 0.0;
          for (size_t i = 0; i < sz; ++i) acc += self.grad[i];
          pb->grad[0] += static_cast<float>(acc);
        } else {
          const size_t cols = pb->value.size();
          for (size_t i = 0; i < sz; ++i) pb->grad[i % cols] += self.grad[i];
        }
      }
    };
  }
  return Tensor(n);
}

Tensor sub(const Tensor& a, const Tensor& b) {
  Bcast mode = bcast_mode(a, b, "sub");
  auto n = make_node(a.shape(), {a, b});
  const auto& av = a.data();
  const auto& bv = b.data();
  auto& out = n->value;
  const size_t sz = av.size();
  if (mode == Bcast::Same) {
    for (size_t i = 0; i < sz; ++i) out[i] = av[i] - bv[i];
  } else if (mode == Bcast::Scalar) {
    const float c = bv[0];
    for (size_t i = 0; i < sz; ++i) out[i] = av[i] - c;
  } else {
    const size_t cols = static_cast<size_t>(a.dim(1));
    for (size_t i = 0; i < sz; ++i) out[i] = av[i] - bv[i % cols];
  }
  if (n->requires_grad) {
    n->backprop = [mode](Node& self) {
      Node* pa = self.parents[0].get();
      Node* pb = self.parents[1].get();
      const size_t sz = self.grad.size();
      if (pa->requires_grad)
        for (size_t i = 0; i < sz; ++i) pa->grad[i] += self.grad[i];
      if (pb->requires_grad) {
        if (mode == Bcast::Same) {
          for (size_t i = 0; i < sz; ++i) pb->grad[i] -= self.grad[i];
        } else if (mode == Bcast::Scalar) {
          double acc = 0.0;
          for (size_t i = 0; i < sz; ++i) acc += self.grad[i];
          pb->grad[0] -= static_cast<float>(acc);
        } else {
          const size_t cols = pb->value.size();
          for (size_t i = 0; i < sz; ++i) pb->grad[i % cols] -= self.grad[i];
        }
      }
    };
  }
  return Tensor(n);
}

Tensor mul(const Tensor& a, const Tensor& b) {
  Bcast mode = bcast_mode(a, b, "mul");
  auto n = make_node(a.shape(), {a, b});
  const auto& av = a.data();
  const auto& bv = b.data();
  auto& out = n->value;
  const size_t sz = av.size();
  if (mode == Bcast::Same) {
    for (size_t i = 0; i < sz; ++i) out[i] = av[i] * bv[i];
  } else if (mode == Bcast::Scalar) {
    const float c = bv[0];
    for (size_t i = 0; i < sz; ++i) out[i] = av[i] * c;
  } else {
    const size_t cols = static_cast<size_t>(a.dim(1));
    for (size_t i = 0; i < sz; ++i) out[i] = av[i] * bv[i % cols];
  }
  if (n->requires_grad) {
    n->backprop = [mode](Node& self) {
      Node* pa = self.parents[0].get();
      Node* pb = self.parents[1].get();
      const size_t sz = self.grad.size();
      if (pa->requires_grad) {
        if (mode == Bcast::Same) {
          for (size_t i = 0; i < sz; ++i) pa->grad[i] += self.grad[i] * pb->value[i];
        } else if (mode == Bcast::Scalar) {
          const float c = pb->value[0];
          for (size_t i = 0; i < sz; ++i) pa->grad[i] += self.grad[i] * c;
        } else {
          const size_t cols = pb->value.size();
          for (size_t i = 0; i < sz; ++i)
            pa->grad[i] += self.grad[i] * pb->value[i % cols];
        }
      }
      if (pb->requires_grad) {
        if (mode == Bcast::Same) {
          for (size_t i = 0; i < sz; ++i) pb->grad[i] += self.grad[i] * pa->value[i];
        } else if (mode == Bcast::Scalar) {
          double acc = 0.0;
          for (size_t i = 0; i < sz; ++i) acc += double(self.grad[i]) * pa->value[i];
          pb->grad[0] += static_cast<float>(acc);
        } else {
          const size_t cols = pb->value.size();
          for (size_t i = 0; i < sz; ++i)
            pb->grad[i % cols] += self.grad[i] * pa->value[i];
        }
      }
    };
  }
  return Tensor(n);
}

Tensor scale(const Tensor& a, float c) {
  auto n = make_node(a.shape(), {a});
  const auto& av = a.data();
  for (size_t i = 0; i < av.size(); ++i) n->value[i] = av[i] * c;
  if (n->requires_grad) {
    n->backprop = [c](Node& self) {
      Node* p = self.parents[0].get();
      if (!p->requires_grad) return;
      for (size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i] * c;
    };
  }
  return Tensor(n);
}

Tensor add_scalar(const Tensor& a, float c) {
  auto n = make_node(a.shape(), {a});
  const auto& av = a.data();
  for (size_t i = 0; i < av.size(); ++i) n->value[i] = av[i] + c;
  if (n->requires_grad) {
    n->backprop = [](Node& self) {
      Node* p = self.parents[0].get();
      if (!p->requires_grad) return;
      for (size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
    };
  }
  return Tensor(n);
}

Tensor neg(const Tensor& a) { return scale(a, -1.0f); }

Tensor mul_rows(const Tensor& x, const Tensor& rows) {
  if (x.ndim() != 2 || rows.ndim() != 1 || rows.dim(0) != x.dim(0))
    shape_error("mul_rows");
  auto n = make_node(x.shape(), {x, rows});
  const int T = x.dim(0), C = x.dim(1);
  const auto& xv = x.data();
  const auto& rv = rows.data();
  for (int t = 0; t < T; ++t) {
    const float m = rv[static_cast<size_t>(t)];
    for (int c = 0; c < C; ++c)
      n->value[static_cast<size_t>(t) * C + c] = xv[static_cast<size_t>(t) * C + c] * m;
  }
  if (n->requires_grad) {
    n->backprop = [T, C](Node& self) {
      Node* px = self.parents[0].get();
      Node* pr = self.parents[1].get();
      for (int t = 0; t < T; ++t) {
        const size_t base = static_cast<size_t>(t) * C;
        if (px->requires_grad) {
          const float m = pr->value[static_cast<size_t>(t)];
          for (int c = 0; c < C; ++c) px->grad[base + c] += self.grad[base + c] * m;
        }
        if (pr->requires_grad) {
          double acc = 0.0;
          for (int c = 0; c < C; ++c)
            acc += double(self.grad[base + c]) * px->value[base + c];
          pr->grad[static_cast<size_t>(t)] += static_cast<float>(acc);
        }
      }
    };
  }
  return Tensor(n);
}

Tensor add_channels(const Tensor& x, const Tensor& v) {
  if (x.ndim() < 2 || v.ndim() != 1 || v.dim(0) != x.dim(0)) shape_error("add_channels");
  const int C = x.dim(0);
  const size_t plane = static_cast<size_t>(x.numel() / C);
  auto n = make_node(x.shape(), {x, v});
  const auto& xv = x.data();
  const auto& vv = v.data();
  for (int c = 0; c < C; ++c) {
    const float b = vv[static_cast<size_t>(c)];
    const size_t base = static_cast<size_t>(c) * plane;
    for (size_t i = 0; i < plane; ++i) n->value[base + i] = xv[base + i] + b;
  }
  if (n->requires_grad) {
    n->backprop = [C, plane](Node& self) {
      Node* px = self.parents[0].get();
      Node* pv = self.parents[1].get();
      if (px->requires_grad)
        for (size_t i = 0; i < self.grad.size(); ++i) px->grad[i] += self.grad[i];
      if (pv->requires_grad) {
        for (int c = 0; c < C; ++c) {
          const size_t base = static_cast<size_t>(c) * plane;
          double acc = 0.0;
          for (size_t i = 0; i < plane; ++i) acc += self.grad[base + i];
          pv->grad[static_cast<size_t>(c)] += static_cast<float>(acc);
        }
      }
    };
  }
  return Tensor(n);
}

Tensor channel_means(const Tensor& x) {
  if (x.ndim() < 2) shape_error("channel_means");
  const int C = x.dim(0);
  const size_t plane = static_cast<size_t>(x.numel() / C);
  auto n = make_node({C}, {x});
  const auto& xv = x.data();
  for (int c = 0; c < C; ++c) {
    const size_t base = static_cast<size_t>(c) * plane;
    double acc = 0.0;
    for (size_t i = 0; i < plane; ++i) acc += xv[base + i];
    n->value[static_cast<size_t>(c)] = static_cast<float>(acc / double(plane));
  }
  if (n->requires_grad) {
    n->backprop = [C, plane](Node& self) {
      Node* px = self.parents[0].get();
      if (!px->requires_grad) return;
      const float inv = 1.0f / static_cast<float>(plane);
      for (int c = 0; c < C; ++c) {
        const float g = self.grad[static_cast<size_t>(c)] * inv;
        const size_t base = static_cast<size_t>(c) * plane;
        for (size_t i = 0; i < plane; ++i) px->grad[base + i] += g;
      }
    };
  }
  return Tensor(n);
}

Tensor tile_channels(const Tensor& v, int h, int w) {
  if (v.ndim() != 1) shape_error("tile_channels");
  const int C = v.dim(0);
  const size_t plane = static_cast<size_t>(h) * w;
  auto n = make_node({C, h, w}, {v});
  const auto& vv = v.data();
  for (int c = 0; c < C; ++c) {
    const float val = vv[static_cast<size_t>(c)];
    const size_t base = static_cast<size_t>(c) * plane;
    for (size_t i = 0; i < plane; ++i) n->value[base + i] = val;
  }
  if (n->requires_grad) {
    n->backprop = [C, plane](Node& self) {
      Node* pv = self.parents[0].get();
      if (!pv->requires_grad) return;
      for (int c = 0; c < C; ++c) {
        const size_t base = static_cast<size_t>(c) * plane;
        double acc = 0.0;
        for (size_t i = 0; i < plane; ++i) acc += self.grad[base + i];
        pv->grad[static_cast<size_t>(c)] += static_cast<float>(acc);
      }
    };
  }
  return Tensor(n);
}

namespace {

template <typename FwdFn, typename GradFn>
Tensor unary_op(const Tensor& a, FwdFn fwd, GradFn dydx) {
  auto n = make_node(a.shape(), {a});
  const auto& av = a.data();
  for (size_t i = 0; i < av.size(); ++i) n->value[i] = fwd(av[i]);
  if (n->requires_grad) {
    n->backprop = [dydx](Node& self) {
      Node* p = self.parents[0].get();
      if (!p->requires_grad) return;
      for (size_t i = 0; i < self.grad.size(); ++i)
        p->grad[i] += self.grad[i] * dydx(p->value[i], self.value[i]);
    };
  }
  return Tensor(n);
}

}  // namespace

Tensor exp_(const Tensor& a) {
  return unary_op(
      a, [](float x) { return std::exp(x); }, [](float, float y) { return y; });
}

Tensor log_(const Tensor& a) {
  return unary_op(
      a, [](float x) { return std::log(x); }, [](float x, float) { return 1.0f / x; });
}

Tensor clamp_min(const Tensor& a, float lo) {
  return unary_op(
      a, [lo](float x) { return x < lo ? lo : x; },
      [lo](float x, float) { return x < lo ? 0.0f : 1.0f; });
}

Tensor tanh_(const Tensor& a) {
  return unary_op(
      a, [](float x) { return std::tanh(x); },
      [](float, float y) { return 1.0f - y * y; });
}

Tensor sigmoid_(const Tensor& a) {
  return unary_op(
      a, [](float x) { return 1.0f / (1.0f + std::exp(-x)); },
      [](float, float y) { return y * (1.0f - y); });
}

Tensor relu(const Tensor& a) {
  return unary_op(
      a, [](float x) { return x > 0.0f ? x : 0.0f; },
      [](float x, float) { return x > 0.0f ? 1.0f : 0.0f; });
}

Tensor leaky_relu(const Tensor& a, float slope) {
  return unary_op(
      a, [slope](float x) { return x > 0.0f ? x : slope * x; },
      [slope](float x, float) { return x > 0.0f ? 1.0f : slope; });
}

Tensor abs_(const Tensor& a) {
  return unary_op(
      a, [](float x) { return std::fabs(x); },
      [](float x, float) { return x > 0.0f ? 1.0f : (x < 0.0f ? -1.0f : 0.0f); });
}

Tensor sqrt_(const Tensor& a) {
  return unary_op(
      a, [](float x) { return std::sqrt(x); },
      [](float, float y) { return y > 0.0f ? 0.5f / y : 0.0f; });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(0)) shape_error("matmul");
  const int m = a.dim(0), k = a.dim(1), nn_ = b.dim(1);
  auto n = make_node({m, nn_}, {a, b});
  const float* av = a.data().data();
  const float* bv = b.data().data();
  float* out = n->value.data();
  for (int i = 0; i < m; ++i) {
    float* orow = out + static_cast<size_t>(i) * nn_;
    for (int kk = 0; kk < k; ++kk) {
      const float x = av[static_cast<size_t>(i) * k + kk];
      const float* brow = bv + static_cast<size_t>(kk) * nn_;
      for (int j = 0; j < nn_; ++j) orow[j] += x * brow[j];
    }
  }
  if (n->requires_grad) {
    n->backprop = [m, k, nn_](Node& self) {
      Node* pa = self.parents[0].get();
      Node* pb = self.parents[1].get();
      const float* g = self.grad.data();
      if (pa->requires_grad) {
        // dA = G * B^T
        const float* bv = pb->value.data();
        for (int i = 0; i < m; ++i) {
          const float* grow = g + static_cast<size_t>(i) * nn_;
          float* darow = pa->grad.data() + static_cast<size_t>(i) * k;
          for (int kk = 0; kk < k; ++kk) {
            const float* brow = bv + static_cast<size_t>(kk) * nn_;
            float acc = 0.0f;
            for (int j = 0; j < nn_; ++j) acc += grow[j] * brow[j];
            darow[kk] += acc;
          }
        }
      }
      if (pb->requires_grad) {
        // dB = A^T * G
        const float* av = pa->value.data();
        for (int i = 0; i < m; ++i) {
          const float* grow = g + static_cast<size_t>(i) * nn_;
          const float* arow = av + static_cast<size_t>(i) * k;
          for (int kk = 0; kk < k; ++kk) {
            const float x = arow[kk];
            float* dbrow = pb->grad.data() + static_cast<size_t>(kk) * nn_;
            for (int j = 0; j < nn_; ++j) dbrow[j] += x * grow[j];
          }
        }
      }
    };
  }
  return Tensor(n);
}

Tensor transpose(const Tensor& a) {
  if (a.ndim() != 2) shape_error("transpose");
  const int m = a.dim(0), c = a.dim(1);
  auto n = make_node({c, m}, {a});
  const auto& av = a.data();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < c; ++j)
      n->value[static_cast<size_t>(j) * m + i] = av[static_cast<size_t>(i) * c + j];
  if (n->requires_grad) {
    n->backprop = [m, c](Node& self) {
      Node* p = self.parents[0].get();
      if (!p->requires_grad) return;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < c; ++j)
          p->grad[static_cast<size_t>(i) * c + j] +=
              self.grad[static_cast<size_t>(j) * m + i];
    };
  }
  return Tensor(n);
}

Tensor sum_all(const Tensor& a) {
  auto n = make_node({1}, {a});
  double acc = 0.0;
  for (float x : a.data()) acc += x;
  n->value[0] = static_cast<float>(acc);
  if (n->requires_grad) {
    n->backprop = [](Node& self) {
      Node* p = self.parents[0].get();
      if (!p->requires_grad) return;
      const float g = self.grad[0];
      for (auto& gx : p->grad) gx += g;
    };
  }
  return Tensor(n);
}

Tensor mean_all(const Tensor& a) {
  const double inv = 1.0 / static_cast<double>(a.numel());
  auto n = make_node({1}, {a});
  double acc = 0.0;
  for (float x : a.data()) acc += x;
  n->value[0] = static_cast<float>(acc * inv);
  if (n->requires_grad) {
    n->backprop = [inv](Node& self) {
      Node* p = self.parents[0].get();
      if (!p->requires_grad) return;
      const float g = self.grad[0] * static_cast<float>(inv);
      for (auto& gx : p->grad) gx += g;
    };
  }
  return Tensor(n);
}

Tensor sum_axis0(const Tensor& a) {
  if (a.ndim() != 2) shape_error("sum_axis0");
  const int T = a.dim(0), C = a.dim(1);
  auto n = make_node({C}, {a});
  const auto& av = a.data();
  std::vector<double> acc(static_cast<size_t>(C), 0.0);
  for (int t = 0; t < T; ++t)
    for (int c = 0; c < C; ++c) acc[static_cast<size_t>(c)] += av[static_cast<size_t>(t) * C + c];
  for (int c = 0; c < C; ++c) n->value[static_cast<size_t>(c)] = static_cast<float>(acc[static_cast<size_t>(c)]);
  if (n->requires_grad) {
    n->backprop = [T, C](Node& self) {
      Node* p = self.parents[0].get();
      if (!p->requires_grad) return;
      for (int t = 0; t < T; ++t)
        for (int c = 0; c < C; ++c)
          p->grad[static_cast<size_t>(t) * C + c] += self.grad[static_cast<size_t>(c)];
    };
  }
  return Tensor(n);
}

Tensor dot(const Tensor& a, const Tensor& b) {
  if (a.numel() != b.numel()) shape_error("dot");
  auto n = make_node({1}, {a, b});
  const auto& av = a.data();
  const auto& bv = b.data();
  double acc = 0.0;
  for (size_t i = 0; i < av.size(); ++i) acc += double(av[i]) * bv[i];
  n->value[0] = static_cast<float>(acc);
  if (n->requires_grad) {
    n->backprop = [](Node& self) {
      Node* pa = self.parents[0].get();
      Node* pb = self.parents[1].get();
      const float g = self.grad[0];
      if (pa->requires_grad)
        for (size_t i = 0; i < pa->grad.size(); ++i) pa->grad[i] += g * pb->value[i];
      if (pb->requires_grad)
        for (size_t i = 0; i < pb->grad.size(); ++i) pb->grad[i] += g * pa->value[i];
    };
  }
  return Tensor(n);
}

Tensor slice_rows(const Tensor& a, int off, int len) {
  if (a.ndim() != 2 || off < 0 || len < 0 || off + len > a.dim(0))
    shape_error("slice_rows");
  const int C = a.dim(1);
  auto n = make_node({len, C}, {a});
  const auto& av = a.data();
  std::memcpy(n->value.data(), av.data() + static_cast<size_t>(off) * C,
              sizeof(float) * static_cast<size_t>(len) * C);
  if (n->requires_grad) {
    n->backprop = [off, len, C](Node& self) {
      Node* p = self.parents[0].get();
      if (!p->requires_grad) return;
      for (size_t i = 0; i < static_cast<size_t>(len) * C; ++i)
        p->grad[static_cast<size_t>(off) * C + i] += self.grad[i];
    };
  }
  return Tensor(n);
}

Tensor slice_cols(const Tensor& a, int off, int len) {
  if (a.ndim() != 2 || off < 0 || len < 0 || off + len > a.dim(1))
    shape_error("slice_cols");
  const int T = a.dim(0), C = a.dim(1);
  auto n = make_node({T, len}, {a});
  const auto& av = a.data();
  for (int t = 0; t < T; ++t)
    std::memcpy(n->value.data() + static_cast<size_t>(t) * len,
                av.data() + static_cast<size_t>(t) * C + off,
                sizeof(float) * static_cast<size_t>(len));
  if (n->requires_grad) {
    n->backprop = [off, len, T, C](Node& self) {
      Node* p = self.parents[0].get();
      if (!p->requires_grad) return;
      for (int t = 0; t < T; ++t)
        for (int j = 0; j < len; ++j)
          p->grad[static_cast<size_t>(t) * C + off + j] +=
              self.grad[static_cast<size_t>(t) * len + j];
    };
  }
  return Tensor(n);
}

Tensor cat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("cat_rows: empty");
  const int C = parts[0].ndim() == 1 ? parts[0].dim(0) : parts[0].dim(1);
  int total = 0;
  for (const auto& p : parts) {
    if (p.ndim() == 1) {
      if (p.dim(0) != C) shape_error("cat_rows");
      total += 1;
    } else if (p.ndim() == 2) {
      if (p.dim(1) != C) shape_error("cat_rows");
      total += p.dim(0);
    } else {
      shape_error("cat_rows");
    }
  }
  auto n = std::make_shared<Node>();
  n->shape = {total, C};
  n->value.resize(static_cast<size_t>(total) * C);
  bool rg = false;
  for (const auto& p : parts) rg = rg || p.requires_grad();
  n->requires_grad = rg;
  size_t pos = 0;
  for (const auto& p : parts) {
    std::memcpy(n->value.data() + pos, p.data().data(), sizeof(float) * p.data().size());
    pos += p.data().size();
    if (rg) n->parents.push_back(p.node());
  }
  if (rg) {
    n->backprop = [](Node& self) {
      size_t pos = 0;
      for (auto& p : self.parents) {
        if (p->requires_grad)
          for (size_t i = 0; i < p->value.size(); ++i) p->grad[i] += self.grad[pos + i];
        pos += p->value.size();
      }
    };
  }
  return Tensor(n);
}

Tensor cat_cols(const Tensor& a, const Tensor& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.dim(0) != b.dim(0)) shape_error("cat_cols");
  const int T = a.dim(0), Ca = a.dim(1), Cb = b.dim(1);
  auto n = make_node({T, Ca + Cb}, {a, b});
  const auto& av = a.data();
  const auto& bv = b.data();
  for (int t = 0; t < T; ++t) {
    std::memcpy(n->value.data() + static_cast<size_t>(t) * (Ca + Cb),
                av.data() + static_cast<size_t>(t) * Ca, sizeof(float) * Ca);
    std::memcpy(n->value.data() + static_cast<size_t>(t) * (Ca + Cb) + Ca,
                bv.data() + static_cast<size_t>(t) * Cb, sizeof(float) * Cb);
  }
  if (n->requires_grad) {
    n->backprop = [T, Ca, Cb](Node& self) {
      Node* pa = self.parents[0].get();
      Node* pb = self.parents[1].get();
      for (int t = 0; t < T; ++t) {
        const size_t base = static_cast<size_t>(t) * (Ca + Cb);
        if (pa->requires_grad)
          for (int c = 0; c < Ca; ++c)
            pa->grad[static_cast<size_t>(t) * Ca + c] += self.grad[base + c];
        if (pb->requires_grad)
          for (int c = 0; c < Cb; ++c)
            pb->grad[static_cast<size_t>(t) * Cb + c] += self.grad[base + Ca + c];
      }
    };
  }
  return Tensor(n);
}

Tensor flip_cols(const Tensor& a) {
  if (a.ndim() != 2) shape_error("flip_cols");
  const int T = a.dim(0), C = a.dim(1);
  auto n = make_node({T, C}, {a});
  const auto& av = a.data();
  for (int t = 0; t < T; ++t)
    for (int c = 0; c < C; ++c)
      n->value[static_cast<size_t>(t) * C + c] = av[static_cast<size_t>(t) * C + (C - 1 - c)];
  if (n->requires_grad) {
    n->backprop = [T, C](Node& self) {
      Node* p = self.parents[0].get();
      if (!p->requires_grad) return;
      for (int t = 0; t < T; ++t)
        for (int c = 0; c < C; ++c)
          p->grad[static_cast<size_t>(t) * C + (C - 1 - c)] +=
              self.grad[static_cast<size_t>(t) * C + c];
    };
  }
  return Tensor(n);
}

Tensor reshape(const Tensor& a, std::vector<int> shape) {
  int64_t total = 1;
  for (int d : shape) total *= d;
  if (total != a.numel()) shape_error("reshape");
  auto n = make_node(std::move(shape), {a});
  n->value = a.data();
  if (n->requires_grad) {
    n->backprop = [](Node& self) {
      Node* p = self.parents[0].get();
      if (!p->requires_grad) return;
      for (size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
    };
  }
  return Tensor(n);
}

Tensor cat_channels(const Tensor& a, const Tensor& b) {
  if (a.ndim() != 3 || b.ndim() != 3 || a.dim(1) != b.dim(1) || a.dim(2) != b.dim(2))
    shape_error("cat_channels");
  const int Ca = a.dim(0), Cb = b.dim(0), H = a.dim(1), W = a.dim(2);
  auto n = make_node({Ca + Cb, H, W}, {a, b});
  std::memcpy(n->value.data(), a.data().data(), sizeof(float) * a.data().size());
  std::memcpy(n->value.data() + a.data().size(), b.data().data(),
              sizeof(float) * b.data().size());
  if (n->requires_grad) {
    n->backprop = [](Node& self) {
      Node* pa = self.parents[0].get();
      Node* pb = self.parents[1].get();
      const size_t na = pa->value.size();
      if (pa->requires_grad)
        for (size_t i = 0; i < na; ++i) pa->grad[i] += self.grad[i];
      if (pb->requires_grad)
        for (size_t i = 0; i < pb->value.size(); ++i) pb->grad[i] += self.grad[na + i];
    };
  }
  return Tensor(n);
}

Tensor slice_height(const Tensor& a, int y0, int h) {
  if (a.ndim() != 3 || y0 < 0 || h < 0 || y0 + h > a.dim(1)) shape_error("slice_height");
  const int C = a.dim(0), H = a.dim(1), W = a.dim(2);
  auto n = make_node({C, h, W}, {a});
  const auto& av = a.data();
  for (int c = 0; c < C; ++c)
    std::memcpy(n->value.data() + static_cast<size_t>(c) * h * W,
                av.data() + (static_cast<size_t>(c) * H + y0) * W,
                sizeof(float) * static_cast<size_t>(h) * W);
  if (n->requires_grad) {
    n->backprop = [C, H, W, y0, h](Node& self) {
      Node* p = self.parents[0].get();
      if (!p->requires_grad) return;
      for (int c = 0; c < C; ++c)
        for (size_t i = 0; i < static_cast<size_t>(h) * W; ++i)
          p->grad[(static_cast<size_t>(c) * H + y0) * W + i] +=
              self.grad[static_cast<size_t>(c) * h * W + i];
    };
  }
  return Tensor(n);
}

Tensor gather_rows(const Tensor& table, const std::vector<int>& ids) {
  if (table.ndim() != 2) shape_error("gather_rows");
  const int V = table.dim(0), C = table.dim(1);
  for (int id : ids)
    if (id < 0 || id >= V) throw std::out_of_range("gather_rows: id out of range");
  auto n = make_node({static_cast<int>(ids.size()), C}, {table});
  const auto& tv = table.data();
  for (size_t i = 0; i < ids.size(); ++i)
    std::memcpy(n->value.data() + i * C, tv.data() + static_cast<size_t>(ids[i]) * C,
                sizeof(float) * C);
  if (n->requires_grad) {
    auto ids_copy = ids;
    n->backprop = [ids_copy, C](Node& self) {
      Node* p = self.parents[0].get();
      if (!p->requires_grad) return;
      for (size_t i = 0; i < ids_copy.size(); ++i)
        for (int c = 0; c < C; ++c)
          p->grad[static_cast<size_t>(ids_copy[i]) * C + c] += self.grad[i * C + c];
    };
  }
  return Tensor(n);
}

// --- convolutions ---

Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
  if (x.ndim() != 2 || w.ndim() != 3 || w.dim(1) != x.dim(0)) shape_error("conv1d");
  const int Cin = x.dim(0), T = x.dim(1);
  const int Cout = w.dim(0), K = w.dim(2);
  const int Tout = (T + 2 * pad - K) / stride + 1;
  if (Tout < 0) shape_error("conv1d");
  Tensor bias = b.defined() ? b : Tensor();
  auto n = bias.defined() ? make_node({Cout, Tout}, {x, w, bias})
                          : make_node({Cout, Tout}, {x, w});
  const float* xv = x.data().data();
  const float* wv = w.data().data();
  float* out = n->value.data();
  if (bias.defined()) {
    for (int oc = 0; oc < Cout; ++oc) {
      const float bb = bias.data()[static_cast<size_t>(oc)];
      for (int t = 0; t < Tout; ++t) out[static_cast<size_t>(oc) * Tout + t] = bb;
    }
  }
  for (int oc = 0; oc < Cout; ++oc) {
    float* orow = out + static_cast<size_t>(oc) * Tout;
    for (int ic = 0; ic < Cin; ++ic) {
      const float* xrow = xv + static_cast<size_t>(ic) * T;
      const float* wrow = wv + (static_cast<size_t>(oc) * Cin + ic) * K;
      for (int k = 0; k < K; ++k) {
        const float wk = wrow[k];
        const int off = k - pad;
        int t0 = 0;
        while (t0 < Tout && t0 * stride + off < 0) ++t0;
        int t1 = Tout;
        while (t1 > t0 && (t1 - 1) * stride + off >= T) --t1;
        for (int t = t0; t < t1; ++t) orow[t] += wk * xrow[t * stride + off];
      }
    }
  }
  const bool has_bias = bias.defined();
  if (n->requires_grad) {
    n->backprop = [Cin, T, Cout, K, Tout, stride, pad, has_bias](Node& self) {
      Node* px = self.parents[0].get();
      Node* pw = self.parents[1].get();
      Node* pb = has_bias ? self.parents[2].get() : nullptr;
      const float* g = self.grad.data();
      if (px->requires_grad) {
        for (int oc = 0; oc < Cout; ++oc) {
          const float* grow = g + static_cast<size_t>(oc) * Tout;
          for (int ic = 0; ic < Cin; ++ic) {
            float* dxrow = px->grad.data() + static_cast<size_t>(ic) * T;
            const float* wrow = pw->value.data() + (static_cast<size_t>(oc) * Cin + ic) * K;
            for (int k = 0; k < K; ++k) {
              const float wk = wrow[k];
              const int off = k - pad;
              int t0 = 0;
              while (t0 < Tout && t0 * stride + off < 0) ++t0;
              int t1 = Tout;
              while (t1 > t0 && (t1 - 1) * stride + off >= T) --t1;
              for (int t = t0; t < t1; ++t) dxrow[t * stride + off] += wk * grow[t];
            }
          }
        }
      }
      if (pw->requires_grad) {
        for (int oc = 0; oc < Cout; ++oc) {
          const float* grow = g + static_cast<size_t>(oc) * Tout;
          for (int ic = 0; ic < Cin; ++ic) {
            const float* xrow = px->value.data() + static_cast<size_t>(ic) * T;
            float* dwrow = pw->grad.data() + (static_cast<size_t>(oc) * Cin + ic) * K;
            for (int k = 0; k < K; ++k) {
              const int off = k - pad;
              int t0 = 0;
              while (t0 < Tout && t0 * stride + off < 0) ++t0;
              int t1 = Tout;
              while (t1 > t0 && (t1 - 1) * stride + off >= T) --t1;
              double acc = 0.0;
              for (int t = t0; t < t1; ++t) acc += double(grow[t]) * xrow[t * stride + off];
              dwrow[k] += static_cast<float>(acc);
            }
          }
        }
      }
      if (pb && pb->requires_grad) {
        for (int oc = 0; oc < Cout; ++oc) {
          const float* grow = g + static_cast<size_t>(oc) * Tout;
          double acc = 0.0;
          for (int t = 0; t < Tout; ++t) acc += grow[t];
          pb->grad[static_cast<size_t>(oc)] += static_cast<float>(acc);
        }
      }
    };
  }
  return Tensor(n);
}

Tensor conv_transpose1d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
                        int pad) {
  if (x.ndim() != 2 || w.ndim() != 3 || w.dim(0) != x.dim(0))
    shape_error("conv_transpose1d");
  const int Cin = x.dim(0), T = x.dim(1);
  const int Cout = w.dim(1), K = w.dim(2);
  const int Tout = (T - 1) * stride + K - 2 * pad;
  if (Tout <= 0) shape_error("conv_transpose1d");
  Tensor bias = b.defined() ? b : Tensor();
  auto n = bias.defined() ? make_node({Cout, Tout}, {x, w, bias})
                          : make_node({Cout, Tout}, {x, w});
  const float* xv = x.data().data();
  const float* wv = w.data().data();
  float* out = n->value.data();
  if (bias.defined()) {
    for (int oc = 0; oc < Cout; ++oc) {
      const float bb = bias.data()[static_cast<size_t>(oc)];
      for (int t = 0; t < Tout; ++t) out[static_cast<size_t>(oc) * Tout + t] = bb;
    }
  }
  for (int ic = 0; ic < Cin; ++ic) {
    const float* xrow = xv + static_cast<size_t>(ic) * T;
    for (int oc = 0; oc < Cout; ++oc) {
      float* orow = out + static_cast<size_t>(oc) * Tout;
      const float* wrow = wv + (static_cast<size_t>(ic) * Cout + oc) * K;
      for (int k = 0; k < K; ++k) {
        const float wk = wrow[k];
        const int off = k - pad;
        for (int t = 0; t < T; ++t) {
          const int to = t * stride + off;
          if (to >= 0 && to < Tout) orow[to] += wk * xrow[t];
        }
      }
    }
  }
  const bool has_bias = bias.defined();
  if (n->requires_grad) {
    n->backprop = [Cin, T, Cout, K, Tout, stride, pad, has_bias](Node& self) {
      Node* px = self.parents[0].get();
      Node* pw = self.parents[1].get();
      Node* pb = has_bias ? self.parents[2].get() : nullptr;
      const float* g = self.grad.data();
      if (px->requires_grad) {
        for (int ic = 0; ic < Cin; ++ic) {
          float* dxrow = px->grad.data() + static_cast<size_t>(ic) * T;
          for (int oc = 0; oc < Cout; ++oc) {
            const float* grow = g + static_cast<size_t>(oc) * Tout;
            const float* wrow = pw->value.data() + (static_cast<size_t>(ic) * Cout + oc) * K;
            for (int k = 0; k < K; ++k) {
              const float wk = wrow[k];
              const int off = k - pad;
              for (int t = 0; t < T; ++t) {
                const int to = t * stride + off;
                if (to >= 0 && to < Tout) dxrow[t] += wk * grow[to];
              }
            }
          }
        }
      }
      if (pw->requires_grad) {
        for (int ic = 0; ic < Cin; ++ic) {
          const float* xrow = px->value.data() + static_cast<size_t>(ic) * T;
          for (int oc = 0; oc < Cout; ++oc) {
            const float* grow = g + static_cast<size_t>(oc) * Tout;
            float* dwrow = pw->grad.data() + (static_cast<size_t>(ic) * Cout + oc) * K;
            for (int k = 0; k < K; ++k) {
              const int off = k - pad;
              double acc = 0.0;
              for (int t = 0; t < T; ++t) {
                const int to = t * stride + off;
                if (to >= 0 && to < Tout) acc += double(xrow[t]) * grow[to];
              }
              dwrow[k] += static_cast<float>(acc);
            }
          }
        }
      }
      if (pb && pb->requires_grad) {
        for (int oc = 0; oc < Cout; ++oc) {
          const float* grow = g + static_cast<size_t>(oc) * Tout;
          double acc = 0.0;
          for (int t = 0; t < Tout; ++t) acc += grow[t];
          pb->grad[static_cast<size_t>(oc)] += static_cast<float>(acc);
        }
      }
    };
  }
  return Tensor(n);
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
  if (x.ndim() != 3 || w.ndim() != 4 || w.dim(1) != x.dim(0)) shape_error("conv2d");
  const int Cin = x.dim(0), H = x.dim(1), W = x.dim(2);
  const int Cout = w.dim(0), KH = w.dim(2), KW = w.dim(3);
  const int Hout = (H + 2 * pad - KH) / stride + 1;
  const int Wout = (W + 2 * pad - KW) / stride + 1;
  if (Hout <= 0 || Wout <= 0) shape_error("conv2d");
  Tensor bias = b.defined() ? b : Tensor();
  auto n = bias.defined() ? make_node({Cout, Hout, Wout}, {x, w, bias})
                          : make_node({Cout, Hout, Wout}, {x, w});
  const float* xv = x.data().data();
  const float* wv = w.data().data();
  float* out = n->value.data();
  const size_t oplane = static_cast<size_t>(Hout) * Wout;
  const size_t iplane = static_cast<size_t>(H) * W;
  if (bias.defined()) {
    for (int oc = 0; oc < Cout; ++oc) {
      const float bb = bias.data()[static_cast<size_t>(oc)];
      float* op = out + static_cast<size_t>(oc) * oplane;
      for (size_t i = 0; i < oplane; ++i) op[i] = bb;
    }
  }
  for (int oc = 0; oc < Cout; ++oc) {
    float* op = out + static_cast<size_t>(oc) * oplane;
    for (int ic = 0; ic < Cin; ++ic) {
      const float* ip = xv + static_cast<size_t>(ic) * iplane;
      const float* wbase = wv + ((static_cast<size_t>(oc) * Cin + ic) * KH) * KW;
      for (int kh = 0; kh < KH; ++kh) {
        for (int kw = 0; kw < KW; ++kw) {
          const float wk = wbase[static_cast<size_t>(kh) * KW + kw];
          const int hoff = kh - pad, woff = kw - pad;
          for (int oh = 0; oh < Hout; ++oh) {
            const int ih = oh * stride + hoff;
            if (ih < 0 || ih >= H) continue;
            float* orow = op + static_cast<size_t>(oh) * Wout;
            const float* irow = ip + static_cast<size_t>(ih) * W;
            int ow0 = 0;
            while (ow0 < Wout && ow0 * stride + woff < 0) ++ow0;
            int ow1 = Wout;
            while (ow1 > ow0 && (ow1 - 1) * stride + woff >= W) --ow1;
            for (int ow = ow0; ow < ow1; ++ow) orow[ow] += wk * irow[ow * stride + woff];
          }
        }
      }
    }
  }
  const bool has_bias = bias.defined();
  if (n->requires_grad) {
    n->backprop = [Cin, H, W, Cout, KH, KW, Hout, Wout, stride, pad,
                   has_bias](Node& self) {
      Node* px = self.parents[0].get();
      Node* pw = self.parents[1].get();
      Node* pb = has_bias ? self.parents[2].get() : nullptr;
      const float* g = self.grad.data();
      const size_t oplane = static_cast<size_t>(Hout) * Wout;
      const size_t iplane = static_cast<size_t>(H) * W;
      for (int oc = 0; oc < Cout; ++oc) {
        const float* gp = g + static_cast<size_t>(oc) * oplane;
        for (int ic = 0; ic < Cin; ++ic) {
          const float* ip = px->value.data() + static_cast<size_t>(ic) * iplane;
          float* dxp = px->requires_grad ? px->grad.data() + static_cast<size_t>(ic) * iplane
                                         : nullptr;
          const float* wbase =
              pw->value.data() + ((static_cast<size_t>(oc) * Cin + ic) * KH) * KW;
          float* dwbase = pw->requires_grad
                              ? pw->grad.data() + ((static_cast<size_t>(oc) * Cin + ic) * KH) * KW
                              : nullptr;
          for (int kh = 0; kh < KH; ++kh) {
            for (int kw = 0; kw < KW; ++kw) {
              const float wk = wbase[static_cast<size_t>(kh) * KW + kw];
              const int hoff = kh - pad, woff = kw - pad;
              double wacc = 0.0;
              for (int oh = 0; oh < Hout; ++oh) {
                const int ih = oh * stride + hoff;
                if (ih < 0 || ih >= H) continue;
                const float* grow = gp + static_cast<size_t>(oh) * Wout;
                const float* irow = ip + static_cast<size_t>(ih) * W;
                float* dxrow = dxp ? dxp + static_cast<size_t>(ih) * W : nullptr;
                int ow0 = 0;
                while (ow0 < Wout && ow0 * stride + woff < 0) ++ow0;
                int ow1 = Wout;
                while (ow1 > ow0 && (ow1 - 1) * stride + woff >= W) --ow1;
                if (dxrow) {
                  for (int ow = ow0; ow < ow1; ++ow)
                    dxrow[ow * stride + woff] += wk * grow[ow];
                }
                if (dwbase) {
                  for (int ow = ow0; ow < ow1; ++ow)
                    wacc += double(grow[ow]) * irow[ow * stride + woff];
                }
              }
              if (dwbase) dwbase[static_cast<size_t>(kh) * KW + kw] += static_cast<float>(wacc);
            }
          }
        }
        if (pb && pb->requires_grad) {
          double acc = 0.0;
          for (size_t i = 0; i < oplane; ++i) acc += gp[i];
          pb->grad[static_cast<size_t>(oc)] += static_cast<float>(acc);
        }
      }
    };
  }
  return Tensor(n);
}

Tensor conv_transpose2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
                        int pad) {
  if (x.ndim() != 3 || w.ndim() != 4 || w.dim(0) != x.dim(0))
    shape_error("conv_transpose2d");
  const int Cin = x.dim(0), H = x.dim(1), W = x.dim(2);
  const int Cout = w.dim(1), KH = w.dim(2), KW = w.dim(3);
  const int Hout = (H - 1) * stride + KH - 2 * pad;
  const int Wout = (W - 1) * stride + KW - 2 * pad;
  if (Hout <= 0 || Wout <= 0) shape_error("conv_transpose2d");
  Tensor bias = b.defined() ? b : Tensor();
  auto n = bias.defined() ? make_node({Cout, Hout, Wout}, {x, w, bias})
                          : make_node({Cout, Hout, Wout}, {x, w});
  const float* xv = x.data().data();
  const float* wv = w.data().data();
  float* out = n->value.data();
  const size_t oplane = static_cast<size_t>(Hout) * Wout;
  const size_t iplane = static_cast<size_t>(H) * W;
  if (bias.defined()) {
    for (int oc = 0; oc < Cout; ++oc) {
      const float bb = bias.data()[static_cast<size_t>(oc)];
      float* op = out + static_cast<size_t>(oc) * oplane;
      for (size_t i = 0; i < oplane; ++i) op[i] = bb;
    }
  }
  for (int ic = 0; ic < Cin; ++ic) {
    const float* ip = xv + static_cast<size_t>(ic) * iplane;
    for (int oc = 0; oc < Cout; ++oc) {
      float* op = out + static_cast<size_t>(oc) * oplane;
      const float* wbase = wv + ((static_cast<size_t>(ic) * Cout + oc) * KH) * KW;
      for (int kh = 0; kh < KH; ++kh) {
        for (int kw = 0; kw < KW; ++kw) {
          const float wk = wbase[static_cast<size_t>(kh) * KW + kw];
          const int hoff = kh - pad, woff = kw - pad;
          for (int ih = 0; ih < H; ++ih) {
            const int oh = ih * stride + hoff;
            if (oh < 0 || oh >= Hout) continue;
            const float* irow = ip + static_cast<size_t>(ih) * W;
            float* orow = op + static_cast<size_t>(oh) * Wout;
            for (int iw = 0; iw < W; ++iw) {
              const int ow = iw * stride + woff;
              if (ow >= 0 && ow < Wout) orow[ow] += wk * irow[iw];
            }
          }
        }
      }
    }
  }
  const bool has_bias = bias.defined();
  if (n->requires_grad) {
    n->backprop = [Cin, H, W, Cout, KH, KW, Hout, Wout, stride, pad,
                   has_bias](Node& self) {
      Node* px = self.parents[0].get();
      Node* pw = self.parents[1].get();
      Node* pb = has_bias ? self.parents[2].get() : nullptr;
      const float* g = self.grad.data();
      const size_t oplane = static_cast<size_t>(Hout) * Wout;
      const size_t iplane = static_cast<size_t>(H) * W;
      for (int ic = 0; ic < Cin; ++ic) {
        const float* ip = px->value.data() + static_cast<size_t>(ic) * iplane;
        float* dxp = px->requires_grad ? px->grad.data() + static_cast<size_t>(ic) * iplane
                                       : nullptr;
        for (int oc = 0; oc < Cout; ++oc) {
          const float* gp = g + static_cast<size_t>(oc) * oplane;
          const float* wbase =
              pw->value.data() + ((static_cast<size_t>(ic) * Cout + oc) * KH) * KW;
          float* dwbase = pw->requires_grad
                              ? pw->grad.data() + ((static_cast<size_t>(ic) * Cout + oc) * KH) * KW
                              : nullptr;
          for (int kh = 0; kh < KH; ++kh) {
            for (int kw = 0; kw < KW; ++kw) {
              const float wk = wbase[static_cast<size_t>(kh) * KW + kw];
              const int hoff = kh - pad, woff = kw - pad;
              double wacc = 0.0;
              for (int ih = 0; ih < H; ++ih) {
                const int oh = ih * stride + hoff;
                if (oh < 0 || oh >= Hout) continue;
                const float* grow = gp + static_cast<size_t>(oh) * Wout;
                const float* irow = ip + static_cast<size_t>(ih) * W;
                float* dxrow = dxp ? dxp + static_cast<size_t>(ih) * W : nullptr;
                for (int iw = 0; iw < W; ++iw) {
                  const int ow = iw * stride + woff;
                  if (ow < 0 || ow >= Wout) continue;
                  if (dxrow) dxrow[iw] += wk * grow[ow];
                  if (dwbase) wacc += double(irow[iw]) * grow[ow];
                }
              }
              if (dwbase) dwbase[static_cast<size_t>(kh) * KW + kw] += static_cast<float>(wacc);
            }
          }
        }
      }
      if (pb && pb->requires_grad) {
        for (int oc = 0; oc < Cout; ++oc) {
          const float* gp = g + static_cast<size_t>(oc) * oplane;
          double acc = 0.0;
          for (size_t i = 0; i < oplane; ++i) acc += gp[i];
          pb->grad[static_cast<size_t>(oc)] += static_cast<float>(acc);
        }
      }
    };
  }
  return Tensor(n);
}

Tensor avg_pool2d(const Tensor& x, int k) {
  if (x.ndim() != 3 || x.dim(1) % k != 0 || x.dim(2) % k != 0) shape_error("avg_pool2d");
  const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const int Hout = H / k, Wout = W / k;
  auto n = make_node({C, Hout, Wout}, {x});
  const auto& xv = x.data();
  const float inv = 1.0f / static_cast<float>(k * k);
  for (int c = 0; c < C; ++c)
    for (int oh = 0; oh < Hout; ++oh)
      for (int ow = 0; ow < Wout; ++ow) {
        float acc = 0.0f;
        for (int dh = 0; dh < k; ++dh)
          for (int dw = 0; dw < k; ++dw)
            acc += xv[(static_cast<size_t>(c) * H + oh * k + dh) * W + ow * k + dw];
        n->value[(static_cast<size_t>(c) * Hout + oh) * Wout + ow] = acc * inv;
      }
  if (n->requires_grad) {
    n->backprop = [C, H, W, Hout, Wout, k, inv](Node& self) {
      Node* p = self.parents[0].get();
      if (!p->requires_grad) return;
      for (int c = 0; c < C; ++c)
        for (int oh = 0; oh < Hout; ++oh)
          for (int ow = 0; ow < Wout; ++ow) {
            const float g = self.grad[(static_cast<size_t>(c) * Hout + oh) * Wout + ow] * inv;
            for (int dh = 0; dh < k; ++dh)
              for (int dw = 0; dw < k; ++dw)
                p->grad[(static_cast<size_t>(c) * H + oh * k + dh) * W + ow * k + dw] += g;
          }
    };
  }
  return Tensor(n);
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias) {
  if (x.ndim() != 2 || gain.ndim() != 1 || bias.ndim() != 1 || gain.dim(0) != x.dim(1) ||
      bias.dim(0) != x.dim(1))
    shape_error("layer_norm");
  const int T = x.dim(0), C = x.dim(1);
  constexpr float kEps = 1e-5f;
  auto n = make_node({T, C}, {x, gain, bias});
  const auto& xv = x.data();
  const auto& gv = gain.data();
  const auto& bv = bias.data();
  std::vector<float> mean(static_cast<size_t>(T)), rstd(static_cast<size_t>(T));
  for (int t = 0; t < T; ++t) {
    const float* row = xv.data() + static_cast<size_t>(t) * C;
    double m = 0.0;
    for (int c = 0; c < C; ++c) m += row[c];
    m /= C;
    double var = 0.0;
    for (int c = 0; c < C; ++c) var += (row[c] - m) * (row[c] - m);
    var /= C;
    mean[static_cast<size_t>(t)] = static_cast<float>(m);
    rstd[static_cast<size_t>(t)] = 1.0f / std::sqrt(static_cast<float>(var) + kEps);
    for (int c = 0; c < C; ++c) {
      const float xh = (row[c] - mean[static_cast<size_t>(t)]) * rstd[static_cast<size_t>(t)];
      n->value[static_cast<size_t>(t) * C + c] = gv[static_cast<size_t>(c)] * xh + bv[static_cast<size_t>(c)];
    }
  }
  if (n->requires_grad) {
    n->backprop = [T, C, mean, rstd](Node& self) {
      Node* px = self.parents[0].get();
      Node* pg = self.parents[1].get();
      Node* pb = self.parents[2].get();
      for (int t = 0; t < T; ++t) {
        const size_t base = static_cast<size_t>(t) * C;
        const float m = mean[static_cast<size_t>(t)], r = rstd[static_cast<size_t>(t)];
        double sum_dxh = 0.0, sum_dxh_xh = 0.0;
        for (int c = 0; c < C; ++c) {
          const float xh = (px->value[base + c] - m) * r;
          const float dy = self.grad[base + c];
          const float dxh = dy * pg->value[static_cast<size_t>(c)];
          sum_dxh += dxh;
          sum_dxh_xh += double(dxh) * xh;
          if (pg->requires_grad) pg->grad[static_cast<size_t>(c)] += dy * xh;
          if (pb->requires_grad) pb->grad[static_cast<size_t>(c)] += dy;
        }
        if (px->requires_grad) {
          const float inv_c = 1.0f / static_cast<float>(C);
          for (int c = 0; c < C; ++c) {
            const float xh = (px->value[base + c] - m) * r;
            const float dxh = self.grad[base + c] * pg->value[static_cast<size_t>(c)];
            px->grad[base + c] +=
                r * (dxh - static_cast<float>(sum_dxh) * inv_c -
                     xh * static_cast<float>(sum_dxh_xh) * inv_c);
          }
        }
      }
    };
  }
  return Tensor(n);
}

Tensor grad_reverse(const Tensor& x, float lambda_val) {
  if (lambda_val < 0.0f) throw std::invalid_argument("grad_reverse: lambda must be >= 0");
  auto n = make_node(x.shape(), {x});
  n->value = x.data();
  if (n->requires_grad) {
    n->backprop = [lambda_val](Node& self) {
      Node* p = self.parents[0].get();
      if (!p->requires_grad) return;
      for (size_t i = 0; i < self.grad.size(); ++i)
        p->grad[i] += -lambda_val * self.grad[i];
    };
  }
  return Tensor(n);
}

Tensor detach(const Tensor& x) {
  auto n = std::make_shared<Node>();
  n->shape = x.shape();
  n->value = x.data();
  n->requires_grad = false;
  return Tensor(n);
}

Tensor l2_normalize(const Tensor& v) {
  auto n = make_node(v.shape(), {v});
  const auto& vv = v.data();
  double ss = 0.0;
  for (float x : vv) ss += double(x) * x;
  const float r = static_cast<float>(std::sqrt(ss + 1e-12));
  const float inv = 1.0f / r;
  for (size_t i = 0; i < vv.size(); ++i) n->value[i] = vv[i] * inv;
  if (n->requires_grad) {
    n->backprop = [inv](Node& self) {
      Node* p = self.parents[0].get();
      if (!p->requires_grad) return;
      double gy = 0.0;
      for (size_t i = 0; i < self.grad.size(); ++i)
        gy += double(self.grad[i]) * self.value[i];
      for (size_t i = 0; i < self.grad.size(); ++i)
        p->grad[i] += inv * (self.grad[i] - static_cast<float>(gy) * self.value[i]);
    };
  }
  return Tensor(n);
}

Tensor l1_loss(const Tensor& a, const Tensor& b) {
  if (a.numel() != b.numel()) shape_error("l1_loss");
  auto n = make_node({1}, {a, b});
  const auto& av = a.data();
  const auto& bv = b.data();
  double acc = 0.0;
  for (size_t i = 0; i < av.size(); ++i) acc += std::fabs(double(av[i]) - bv[i]);
  const double inv = 1.0 / static_cast<double>(av.size());
  n->value[0] = static_cast<float>(acc * inv);
  if (n->requires_grad) {
    n->backprop = [inv](Node& self) {
      Node* pa = self.parents[0].get();
      Node* pb = self.parents[1].get();
      const float g = self.grad[0] * static_cast<float>(inv);
      for (size_t i = 0; i < pa->value.size(); ++i) {
        const float d = pa->value[i] - pb->value[i];
        const float s = d > 0.0f ? 1.0f : (d < 0.0f ? -1.0f : 0.0f);
        if (pa->requires_grad) pa->grad[i] += g * s;
        if (pb->requires_grad) pb->grad[i] -= g * s;
      }
    };
  }
  return Tensor(n);
}

Tensor mse_loss(const Tensor& a, const Tensor& b) {
  if (a.numel() != b.numel()) shape_error("mse_loss");
  auto n = make_node({1}, {a, b});
  const auto& av = a.data();
  const auto& bv = b.data();
  double acc = 0.0;
  for (size_t i = 0; i < av.size(); ++i) {
    const double d = double(av[i]) - bv[i];
    acc += d * d;
  }
  const double inv = 1.0 / static_cast<double>(av.size());
  n->value[0] = static_cast<float>(acc * inv);
  if (n->requires_grad) {
    n->backprop = [inv](Node& self) {
      Node* pa = self.parents[0].get();
      Node* pb = self.parents[1].get();
      const float g = self.grad[0] * static_cast<float>(2.0 * inv);
      for (size_t i = 0; i < pa->value.size(); ++i) {
        const float d = pa->value[i] - pb->value[i];
        if (pa->requires_grad) pa->grad[i] += g * d;
        if (pb->requires_grad) pb->grad[i] -= g * d;
      }
    };
  }
  return Tensor(n);
}

Tensor bce_on_prob(const Tensor& p, float target) {
  if (p.numel() != 1) shape_error("bce_on_prob");
  constexpr float kEps = 1e-7f;
  auto n = make_node({1}, {p});
  const float pc = std::clamp(p.data()[0], kEps, 1.0f - kEps);
  n->value[0] = -(target * std::log(pc) + (1.0f - target) * std::log(1.0f - pc));
  if (n->requires_grad) {
    n->backprop = [target, pc](Node& self) {
      Node* pp = self.parents[0].get();
      if (!pp->requires_grad) return;
      const float raw = pp->value[0];
      if (raw < 1e-7f || raw > 1.0f - 1e-7f) return;  // clamped region
      pp->grad[0] += self.grad[0] * (-(target / pc) + (1.0f - target) / (1.0f - pc));
    };
  }
  return Tensor(n);
}

Tensor cross_entropy_logits(const Tensor& logits, int target) {
  if (logits.ndim() != 1) shape_error("cross_entropy_logits");
  const int C = logits.dim(0);
  if (target < 0 || target >= C) throw std::out_of_range("cross_entropy_logits: target");
  auto n = make_node({1}, {logits});
  const auto& lv = logits.data();
  float mx = lv[0];
  for (int c = 1; c < C; ++c) mx = std::max(mx, lv[static_cast<size_t>(c)]);
  double se = 0.0;
  for (int c = 0; c < C; ++c) se += std::exp(double(lv[static_cast<size_t>(c)]) - mx);
  const double lse = mx + std::log(se);
  n->value[0] = static_cast<float>(lse - lv[static_cast<size_t>(target)]);
  if (n->requires_grad) {
    std::vector<float> soft(static_cast<size_t>(C));
    for (int c = 0; c < C; ++c)
      soft[static_cast<size_t>(c)] = static_cast<float>(std::exp(double(lv[static_cast<size_t>(c)]) - lse));
    n->backprop = [soft, target](Node& self) {
      Node* p = self.parents[0].get();
      if (!p->requires_grad) return;
      const float g = self.grad[0];
      for (size_t c = 0; c < soft.size(); ++c) {
        float d = soft[c];
        if (static_cast<int>(c) == target) d -= 1.0f;
        p->grad[c] += g * d;
      }
    };
  }
  return Tensor(n);
}

Tensor frame_signal(const Tensor& wave, int frame_len, int hop) {
  if (wave.ndim() != 1) shape_error("frame_signal");
  const int N = wave.dim(0);
  const int pad = frame_len / 2;
  const int T = N / hop + 1;
  auto n = make_node({T, frame_len}, {wave});
  const auto& wv = wave.data();
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < frame_len; ++i) {
      const int src = t * hop - pad + i;
      n->value[static_cast<size_t>(t) * frame_len + i] =
          (src >= 0 && src < N) ? wv[static_cast<size_t>(src)] : 0.0f;
    }
  }
  if (n->requires_grad) {
    n->backprop = [N, frame_len, hop, pad, T](Node& self) {
      Node* p = self.parents[0].get();
      if (!p->requires_grad) return;
      for (int t = 0; t < T; ++t)
        for (int i = 0; i < frame_len; ++i) {
          const int src = t * hop - pad + i;
          if (src >= 0 && src < N)
            p->grad[static_cast<size_t>(src)] += self.grad[static_cast<size_t>(t) * frame_len + i];
        }
    };
  }
  return Tensor(n);
}

}  // namespace polydub::nn
