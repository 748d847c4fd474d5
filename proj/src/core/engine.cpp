/* Copyright 2026 The JNR Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "engine.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cstring>

namespace jnr::detail {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using RowVecMap = Eigen::Map<Eigen::RowVectorXd>;
using ConstRowVecMap = Eigen::Map<const Eigen::RowVectorXd>;

std::size_t positions(const LayerSpec& s) {
  return static_cast<std::size_t>(s.out_h) * s.out_w;
}

void im2col(const double* in, std::size_t n, const LayerSpec& s, double* col) {
  const std::size_t K = s.fan_in();
  const std::size_t Cin = s.in_channels;
  const std::size_t row_len = static_cast<std::size_t>(s.kernel) * Cin;
  const std::size_t plane = static_cast<std::size_t>(s.in_h) * s.in_w * Cin;
  for (std::size_t b = 0; b < n; ++b) {
    const double* img = in + b * plane;
    for (int oy = 0; oy < s.out_h; ++oy) {
      for (int ox = 0; ox < s.out_w; ++ox) {
        double* dst = col + ((b * s.out_h + oy) * s.out_w + ox) * K;
        for (int ky = 0; ky < s.kernel; ++ky) {
          const double* src =
              img + (static_cast<std::size_t>(oy * s.stride + ky) * s.in_w +
                     static_cast<std::size_t>(ox) * s.stride) * Cin;
          std::memcpy(dst + ky * row_len, src, row_len * sizeof(double));
        }
      }
    }
  }
}

// Inverse scatter of im2col; out must be zeroed by the caller.
void col2im(const double* col, std::size_t n, const LayerSpec& s, double* out) {
  const std::size_t K = s.fan_in();
  const std::size_t Cin = s.in_channels;
  const std::size_t row_len = static_cast<std::size_t>(s.kernel) * Cin;
  const std::size_t plane = static_cast<std::size_t>(s.in_h) * s.in_w * Cin;
  for (std::size_t b = 0; b < n; ++b) {
    double* img = out + b * plane;
    for (int oy = 0; oy < s.out_h; ++oy) {
      for (int ox = 0; ox < s.out_w; ++ox) {
        const double* src = col + ((b * s.out_h + oy) * s.out_w + ox) * K;
        for (int ky = 0; ky < s.kernel; ++ky) {
          double* dst = img + (static_cast<std::size_t>(oy * s.stride + ky) * s.in_w +
                               static_cast<std::size_t>(ox) * s.stride) * Cin;
          const double* row = src + ky * row_len;
          for (std::size_t j = 0; j < row_len; ++j) dst[j] += row[j];
        }
      }
    }
  }
}

// out (rows x out) = in (rows x fan_in) * W^T + b
void affine(const double* in, std::size_t rows, std::size_t fan_in,
            const Tensor& w, const Tensor& b, double* out) {
  const auto n_out = static_cast<Eigen::Index>(b.size());
  ConstMatMap x(in, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(fan_in));
  ConstMatMap W(w.values.data(), n_out, static_cast<Eigen::Index>(fan_in));
  MatMap y(out, static_cast<Eigen::Index>(rows), n_out);
  y.noalias() = x * W.transpose();
  y.rowwise() += ConstRowVecMap(b.values.data(), n_out);
}

void relu(std::vector<double>& v) {
  for (double& x : v) x = x > 0.0 ? x : 0.0;
}

// dW += dy^T * x,  db += colsum(dy)
void accumulate_affine_grads(const double* dy, const double* x, std::size_t rows,
                             std::size_t fan_in, std::size_t n_out, Tensor& dw,
                             Tensor& db) {
  const auto r = static_cast<Eigen::Index>(rows);
  const auto k = static_cast<Eigen::Index>(fan_in);
  const auto o = static_cast<Eigen::Index>(n_out);
  ConstMatMap DY(dy, r, o);
  ConstMatMap X(x, r, k);
  MatMap DW(dw.values.data(), o, k);
  DW.noalias() += DY.transpose() * X;
  RowVecMap(db.values.data(), o) += DY.colwise().sum();
}

}  // namespace

void scale_pixels(const Dataset& d, std::size_t first, std::size_t n,
                  std::vector<double>& out) {
  const std::size_t pc = d.dims().pixel_count();
  out.resize(n * pc);
  for (std::size_t i = 0; i < n; ++i) {
    auto px = d.pixels(first + i);
    double* dst = out.data() + i * pc;
    for (std::size_t j = 0; j < pc; ++j) dst[j] = px[j] * (1.0 / 255.0);
  }
}

void forward_chunk(const ModelParams& params, const std::vector<LayerSpec>& specs,
                   std::span<const double> input, std::size_t n, Activations& a) {
  const std::size_t n_conv = params.config.conv_blocks.size();
  a.n = n;
  a.cols.resize(n_conv);
  a.acts.resize(n_conv);

  const double* x = input.data();
  for (std::size_t l = 0; l < n_conv; ++l) {
    const LayerSpec& s = specs[l];
    const std::size_t rows = n * positions(s);
    a.cols[l].resize(rows * s.fan_in());
    im2col(x, n, s, a.cols[l].data());
    a.acts[l].resize(rows * s.out_channels);
    affine(a.cols[l].data(), rows, s.fan_in(), params.weight(l), params.bias(l),
           a.acts[l].data());
    relu(a.acts[l]);
    x = a.acts[l].data();
  }

  // Global average pool.
  const LayerSpec& last = specs[n_conv - 1];
  const std::size_t P = positions(last);
  const std::size_t C = last.out_channels;
  a.pooled.assign(n * C, 0.0);
  {
    ConstMatMap act(a.acts[n_conv - 1].data(), static_cast<Eigen::Index>(n * P),
                    static_cast<Eigen::Index>(C));
    for (std::size_t b = 0; b < n; ++b) {
      RowVecMap(a.pooled.data() + b * C, static_cast<Eigen::Index>(C)) =
          act.middleRows(static_cast<Eigen::Index>(b * P), static_cast<Eigen::Index>(P))
              .colwise()
              .sum() /
          static_cast<double>(P);
    }
  }

  const LayerSpec& feat = specs[n_conv];
  a.feature.resize(n * feat.out_channels);
  affine(a.pooled.data(), n, C, params.weight(n_conv), params.bias(n_conv),
         a.feature.data());
  relu(a.feature);

  for (std::size_t m = 0; m < 4; ++m) {
    const std::size_t layer = n_conv + 1 + m;
    a.logits[m].resize(n * kHeadSizes[m]);
    affine(a.feature.data(), n, feat.out_channels, params.weight(layer),
           params.bias(layer), a.logits[m].data());
  }
}

void backward_chunk(const ModelParams& params, const std::vector<LayerSpec>& specs,
                    const Activations& a,
                    const std::array<std::vector<double>, 4>& dlogits,
                    ModelParams& grads) {
  const std::size_t n = a.n;
  const std::size_t n_conv = params.config.conv_blocks.size();
  const std::size_t D = specs[n_conv].out_channels;
  const auto en = static_cast<Eigen::Index>(n);
  const auto eD = static_cast<Eigen::Index>(D);

  // Heads; their contributions sum at the shared feature.
  std::vector<double> dfeat(n * D, 0.0);
  MatMap dF(dfeat.data(), en, eD);
  for (std::size_t m = 0; m < 4; ++m) {
    const std::size_t layer = n_conv + 1 + m;
    const std::size_t S = kHeadSizes[m];
    accumulate_affine_grads(dlogits[m].data(), a.feature.data(), n, D, S,
                            grads.weight(layer), grads.bias(layer));
    ConstMatMap dL(dlogits[m].data(), en, static_cast<Eigen::Index>(S));
    ConstMatMap W(params.weight(layer).values.data(), static_cast<Eigen::Index>(S), eD);
    dF.noalias() += dL * W;
  }
  for (std::size_t i = 0; i < dfeat.size(); ++i)
    if (a.feature[i] <= 0.0) dfeat[i] = 0.0;

  // Feature layer.
  const LayerSpec& last = specs[n_conv - 1];
  const std::size_t C = last.out_channels;
  const auto eC = static_cast<Eigen::Index>(C);
  accumulate_affine_grads(dfeat.data(), a.pooled.data(), n, C, D,
                          grads.weight(n_conv), grads.bias(n_conv));
  std::vector<double> dpooled(n * C);
  MatMap(dpooled.data(), en, eC).noalias() =
      dF * ConstMatMap(params.weight(n_conv).values.data(), eD, eC);

  // Pooling spreads each gradient evenly over the positions.
  const std::size_t P = positions(last);
  std::vector<double> dact(n * P * C);
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t p = 0; p < P; ++p) {
      double* dst = dact.data() + (b * P + p) * C;
      const double* src = dpooled.data() + b * C;
      for (std::size_t c = 0; c < C; ++c) dst[c] = src[c] / static_cast<double>(P);
    }
  }

  std::vector<double> dcol;
  for (std::size_t l = n_conv; l-- > 0;) {
    const LayerSpec& s = specs[l];
    const std::size_t rows = n * positions(s);
    const std::vector<double>& act = a.acts[l];
    for (std::size_t i = 0; i < dact.size(); ++i)
      if (act[i] <= 0.0) dact[i] = 0.0;
    accumulate_affine_grads(dact.data(), a.cols[l].data(), rows, s.fan_in(),
                            s.out_channels, grads.weight(l), grads.bias(l));
    if (l == 0) break;

    const auto er = static_cast<Eigen::Index>(rows);
    const auto eK = static_cast<Eigen::Index>(s.fan_in());
    const auto eO = static_cast<Eigen::Index>(s.out_channels);
    dcol.resize(rows * s.fan_in());
    MatMap(dcol.data(), er, eK).noalias() =
        ConstMatMap(dact.data(), er, eO) *
        ConstMatMap(params.weight(l).values.data(), eO, eK);
    std::vector<double> dprev(n * static_cast<std::size_t>(s.in_h) * s.in_w * s.in_channels,
                              0.0);
    col2im(dcol.data(), n, s, dprev.data());
    dact = std::move(dprev);
  }
}

}  // namespace jnr::detail
