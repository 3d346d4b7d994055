#pragma once

#include <vector>

#include "polydub/nn/tensor.hpp"

namespace polydub::nn {

// Elementwise / broadcast. add/mul accept b of the same shape, a scalar [1],
// or a vector [C] broadcast over the rows of a 2-D a[T,C].
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float c);
Tensor add_scalar(const Tensor& a, float c);
Tensor neg(const Tensor& a);

// Row/channel broadcasts.
Tensor mul_rows(const Tensor& x, const Tensor& rows);      // x[T,C] * rows[T]
Tensor add_channels(const Tensor& x, const Tensor& v);     // x[C,...] + v[C]
Tensor channel_means(const Tensor& x);                     // x[C,...] -> [C]
Tensor tile_channels(const Tensor& v, int h, int w);       // v[C] -> [C,h,w]

Tensor exp_(const Tensor& a);
Tensor log_(const Tensor& a);
Tensor clamp_min(const Tensor& a, float lo);
Tensor tanh_(const Tensor& a);
Tensor sigmoid_(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor leaky_relu(const Tensor& a, float slope);
Tensor abs_(const Tensor& a);
Tensor sqrt_(const Tensor& a);

Tensor matmul(const Tensor& a, const Tensor& b);  // [m,k] x [k,n]
Tensor transpose(const Tensor& a);                // [m,n] -> [n,m]

Tensor sum_all(const Tensor& a);   // -> [1]
Tensor mean_all(const Tensor& a);  // -> [1]
Tensor sum_axis0(const Tensor& a); // [T,C] -> [C]
Tensor dot(const Tensor& a, const Tensor& b);  // 1-D, 1-D -> [1]

Tensor slice_rows(const Tensor& a, int off, int len);
Tensor slice_cols(const Tensor& a, int off, int len);
Tensor cat_rows(const std::vector<Tensor>& parts);
Tensor cat_cols(const Tensor& a, const Tensor& b);
Tensor flip_cols(const Tensor& a);
Tensor reshape(const Tensor& a, std::vector<int> shape);
Tensor cat_channels(const Tensor& a, const Tensor& b);  // [C1,H,W],[C2,H,W]
Tensor slice_height(const Tensor& a, int y0, int h);    // [C,H,W] -> [C,h,W]

Tensor gather_rows(const Tensor& table, const std::vector<int>& ids);

Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad);
Tensor conv_transpose1d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
                        int pad);
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad);
Tensor conv_transpose2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
                        int pad);
Tensor avg_pool2d(const Tensor& x, int k);

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias);

// Identity forward; backward multiplies incoming gradients by -lambda.
Tensor grad_reverse(const Tensor& x, float lambda_val);
Tensor detach(const Tensor& x);

Tensor l2_normalize(const Tensor& v);

Tensor l1_loss(const Tensor& a, const Tensor& b);
Tensor mse_loss(const Tensor& a, const Tensor& b);
// -t*log(p) - (1-t)*log(1-p) with p clamped to [eps, 1-eps].
Tensor bce_on_prob(const Tensor& p, float target);
Tensor cross_entropy_logits(const Tensor& logits, int target);  // logits [C]

// Frames a 1-D signal with centered zero padding (pad = frame_len/2 each side).
// Produces [n_frames, frame_len] where n_frames = floor(N/hop)+1.
Tensor frame_signal(const Tensor& wave, int frame_len, int hop);

}  // namespace polydub::nn
