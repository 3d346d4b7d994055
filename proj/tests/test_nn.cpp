#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "polydub/audio/audio.hpp"
#include "polydub/nn/adam.hpp"
#include "polydub/nn/layers.hpp"
#include "polydub/nn/ops.hpp"

using namespace polydub;
using nn::Tensor;

namespace {

// Central-difference check of every coordinate of every leaf against the
// analytic gradients from one backward pass.
void check_grads(std::vector<Tensor> leaves, const std::function<Tensor()>& loss_fn,
                 float h = 1e-2f, float tol = 2e-2f) {
  for (auto& l : leaves) l.zero_grad();
  Tensor loss = loss_fn();
  loss.backward();
  std::vector<std::vector<float>> analytic;
  for (auto& l : leaves) analytic.push_back(l.grad());

  for (size_t li = 0; li < leaves.size(); ++li) {
    auto& data = leaves[li].data();
    for (size_t j = 0; j < data.size(); ++j) {
      const float orig = data[j];
      data[j] = orig + h;
      const double lp = loss_fn().item();
      data[j] = orig - h;
      const double lm = loss_fn().item();
      data[j] = orig;
      const double fd = (lp - lm) / (2.0 * h);
      const double an = analytic[li][j];
      const double err = std::fabs(fd - an) / std::max(1.0, std::fabs(fd));
      INFO("leaf ", li, " coord ", j, " fd=", fd, " analytic=", an);
      CHECK(err < tol);
    }
  }
}

}  // namespace

TEST_CASE("elementwise and reduction gradients") {
  Rng rng(7);
  Tensor a = Tensor::randn({3, 4}, rng, 1.0f, true);
  Tensor b = Tensor::randn({3, 4}, rng, 1.0f, true);
  Tensor v = Tensor::randn({4}, rng, 1.0f, true);
  check_grads({a, b, v}, [&] {
    Tensor x = nn::add(nn::mul(a, b), v);
    Tensor y = nn::tanh_(nn::sub(x, nn::scale(b, 0.5f)));
    return nn::mean_all(nn::mul(y, y));
  });
}

TEST_CASE("matmul, transpose, slicing, cat gradients") {
  Rng rng(11);
  Tensor a = Tensor::randn({3, 5}, rng, 0.7f, true);
  Tensor w = Tensor::randn({5, 4}, rng, 0.7f, true);
  check_grads({a, w}, [&] {
    Tensor y = nn::matmul(a, w);
    Tensor z = nn::cat_cols(nn::slice_cols(y, 0, 2), nn::slice_cols(y, 2, 2));
    Tensor t = nn::transpose(nn::slice_rows(z, 1, 2));
    return nn::sum_all(nn::sigmoid_(t));
  });
}

TEST_CASE("conv1d / conv_transpose1d gradients") {
  Rng rng(13);
  Tensor x = Tensor::randn({3, 9}, rng, 1.0f, true);
  Tensor w = Tensor::randn({4, 3, 3}, rng, 0.5f, true);
  Tensor b = Tensor::randn({4}, rng, 0.5f, true);
  check_grads({x, w, b}, [&] {
    return nn::mean_all(nn::tanh_(nn::conv1d(x, w, b, 2, 1)));
  });

  Tensor wt = Tensor::randn({3, 2, 8}, rng, 0.5f, true);
  Tensor bt = Tensor::randn({2}, rng, 0.5f, true);
  check_grads({x, wt, bt}, [&] {
    return nn::mean_all(nn::tanh_(nn::conv_transpose1d(x, wt, bt, 4, 2)));
  });
}

TEST_CASE("conv2d / conv_transpose2d / avg_pool gradients") {
  Rng rng(17);
  Tensor x = Tensor::randn({2, 6, 6}, rng, 1.0f, true);
  Tensor w = Tensor::randn({3, 2, 3, 3}, rng, 0.5f, true);
  Tensor b = Tensor::randn({3}, rng, 0.5f, true);
  check_grads({x, w, b}, [&] {
    Tensor y = nn::leaky_relu(nn::conv2d(x, w, b, 2, 1), 0.2f);
    return nn::mean_all(nn::avg_pool2d(y, 3));
  });

  Tensor wt = Tensor::randn({2, 3, 4, 4}, rng, 0.5f, true);
  Tensor bt = Tensor::randn({3}, rng, 0.5f, true);
  check_grads({x, wt, bt}, [&] {
    return nn::mean_all(nn::sigmoid_(nn::conv_transpose2d(x, wt, bt, 2, 1)));
  });
}

TEST_CASE("layer_norm, gather_rows, channel ops gradients") {
  Rng rng(19);
  Tensor x = Tensor::randn({4, 6}, rng, 1.5f, true);
  Tensor g = Tensor::randn({6}, rng, 0.5f, true);
  Tensor b = Tensor::randn({6}, rng, 0.5f, true);
  check_grads({x, g, b}, [&] { return nn::mean_all(nn::layer_norm(x, g, b)); },
              1e-2f, 3e-2f);

  Tensor table = Tensor::randn({5, 3}, rng, 1.0f, true);
  check_grads({table}, [&] {
    Tensor rows = nn::gather_rows(table, {0, 2, 2, 4});
    return nn::mean_all(nn::mul(rows, rows));
  });

  Tensor img = Tensor::randn({3, 4, 4}, rng, 1.0f, true);
  Tensor v = Tensor::randn({3}, rng, 1.0f, true);
  check_grads({img, v}, [&] {
    Tensor centered = nn::add_channels(img, nn::neg(nn::channel_means(img)));
    Tensor t = nn::cat_channels(centered, nn::tile_channels(v, 4, 4));
    return nn::mean_all(nn::mul(t, t));
  });
}

TEST_CASE("losses and normalization gradients") {
  Rng rng(23);
  Tensor a = Tensor::randn({8}, rng, 1.0f, true);
  Tensor b = Tensor::randn({8}, rng, 1.0f, true);
  check_grads({a, b}, [&] { return nn::mse_loss(a, b); });
  check_grads({a}, [&] { return nn::l1_loss(a, b); }, 1e-3f, 3e-2f);
  check_grads({a}, [&] { return nn::cross_entropy_logits(a, 3); });
  check_grads({a, b}, [&] {
    Tensor c = nn::dot(nn::l2_normalize(a), nn::l2_normalize(b));
    return nn::bce_on_prob(nn::scale(nn::add_scalar(c, 1.0f), 0.5f), 1.0f);
  });
}

TEST_CASE("gru cell gradient") {
  Rng rng(29);
  nn::ParamStore ps;
  nn::GruCell cell(ps, "g", 3, 4, rng);
  Tensor x0 = Tensor::randn({1, 3}, rng, 1.0f, true);
  Tensor x1 = Tensor::randn({1, 3}, rng, 1.0f, true);
  auto leaves = ps.tensors();
  leaves.push_back(x0);
  leaves.push_back(x1);
  check_grads(leaves, [&] {
    Tensor h = Tensor::zeros({1, 4});
    h = cell.step(x0, h);
    h = cell.step(x1, h);
    return nn::mean_all(nn::mul(h, h));
  });
}

TEST_CASE("grad_reverse: identity forward, -lambda backward") {
  Tensor x = Tensor::from({2}, {2.0f, -4.0f}, true);
  Tensor y = nn::grad_reverse(x, 0.5f);
  CHECK(y.data()[0] == 2.0f);
  CHECK(y.data()[1] == -4.0f);
  // upstream grad [2,-4] via loss = 2*y0 - 4*y1... use dot with constants.
  Tensor c = Tensor::from({2}, {2.0f, -4.0f});
  Tensor loss = nn::dot(y, c);
  loss.backward();
  CHECK(x.grad()[0] == doctest::Approx(-1.0f));
  CHECK(x.grad()[1] == doctest::Approx(2.0f));

  Tensor x2 = Tensor::from({2}, {1.0f, 1.0f}, true);
  Tensor loss2 = nn::dot(nn::grad_reverse(x2, 0.0f), c);
  loss2.backward();
  CHECK(x2.grad()[0] == 0.0f);
  CHECK(x2.grad()[1] == 0.0f);
}

TEST_CASE("differentiable mel agrees with plain mel and frame count invariant") {
  audio::MelConfig cfg;
  cfg.n_fft = 256;
  cfg.win_length = 256;
  cfg.hop_length = 128;
  cfg.n_mels = 20;
  audio::MelBasis basis(cfg);

  Rng rng(31);
  const int n = 1000;
  std::vector<float> samples(n);
  for (auto& s : samples) s = static_cast<float>(rng.normal()) * 0.2f;

  audio::Waveform w{samples, cfg.sample_rate};
  auto mel = audio::mel_spectrogram(w, basis);
  CHECK(mel.t == n / cfg.hop_length + 1);
  CHECK(mel.bins == 20);

  Tensor wave = Tensor::from({n}, std::vector<float>(samples), true);
  Tensor g = basis.compute_graph(wave);
  REQUIRE(g.numel() == static_cast<int64_t>(mel.data.size()));
  for (size_t i = 0; i < mel.data.size(); ++i)
    CHECK(g.data()[i] == doctest::Approx(mel.data[i]).epsilon(1e-4));

  // gradient flows through the analysis chain
  Tensor loss = nn::mean_all(g);
  loss.backward();
  double gsum = 0.0;
  for (float v : wave.grad()) gsum += std::fabs(v);
  CHECK(gsum > 0.0);
}

TEST_CASE("adam reduces a quadratic") {
  Rng rng(37);
  Tensor p = Tensor::randn({8}, rng, 2.0f, true);
  Tensor target = Tensor::randn({8}, rng, 1.0f);
  nn::Adam opt({p}, 5e-2f);
  float first = 0.0f, last = 0.0f;
  for (int i = 0; i < 200; ++i) {
    opt.zero_grad();
    Tensor loss = nn::mse_loss(p, target);
    if (i == 0) first = loss.item();
    last = loss.item();
    loss.backward();
    opt.step();
  }
  CHECK(last < 0.01f * first);
}

TEST_CASE("wav round trip") {
  audio::Waveform w;
  w.sample_rate = 22050;
  Rng rng(41);
  w.samples.resize(2205);
  for (auto& s : w.samples) s = static_cast<float>(std::sin(rng.normal()));
  audio::write_wav("test_roundtrip.wav", w);
  auto r = audio::read_wav("test_roundtrip.wav");
  REQUIRE(r.samples.size() == w.samples.size());
  CHECK(r.sample_rate == 22050);
  for (size_t i = 0; i < r.samples.size(); i += 97)
    CHECK(r.samples[i] == doctest::Approx(w.samples[i]).epsilon(1e-3));
}
