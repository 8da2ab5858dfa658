#pragma once

#include "tpseg/tensor.hpp"

namespace tpseg::ad {

enum class Interp { Nearest, Bilinear };
enum class Act { Relu, Sigmoid };

// Stride-s cross-correlation of x[N,Ci,H,W] with kernel[Co,Ci,kh,kw] plus
// bias[Co]. kh,kw must be odd and the output extent must divide evenly.
Tensor conv2d(const Tensor& x, const Tensor& kernel, const Tensor& bias,
              int stride = 1, int padding = 0);

// 2x2 max pooling, stride 2. Gradient routes to the argmax; ties go to the
// first element in row-major scan order.
Tensor maxpool2(const Tensor& x);

// Doubles H and W. Nearest duplicates each pixel 2x2; bilinear uses the
// align-corners-false convention (sample at (dst+0.5)/2-0.5, border clamped).
Tensor upsample2(const Tensor& x, Interp mode);

Tensor activation(const Tensor& x, Act kind);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);

enum class Elem { Add, Mul };

Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor elementwise(Elem kind, const Tensor& a, const Tensor& b);

// x[N,C,H,W] * att[N,1,H,W], the attention map duplicated across channels.
Tensor mul_broadcast_channel(const Tensor& x, const Tensor& att);

Tensor concat_channels(const Tensor& a, const Tensor& b);
Tensor slice_channels(const Tensor& x, int c0, int c1);

// Per-pixel channel softmax, stabilized by max subtraction.
Tensor softmax_channel(const Tensor& x);

Tensor sum_all(const Tensor& x);          // -> shape [1]
Tensor scale(const Tensor& x, double c);  // c * x

}  // namespace tpseg::ad
