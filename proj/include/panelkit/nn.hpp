#pragma once

// CPU training stack: NCHW float tensors, layers with exact backward passes,
// softmax cross-entropy, and SGD with momentum. Convolutions run as im2col +
// GEMM. Everything is single-threaded and bit-deterministic for a fixed seed.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <iostream>
#include <limits>
#include <memory>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "panelkit/errors.hpp"
#include "panelkit/rng.hpp"

namespace panelkit::nn {

using Matrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;

struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<float> data;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_, float fill = 0.0f)
        : n(n_), c(c_), h(h_), w(w_),
          data(static_cast<size_t>(n_) * c_ * h_ * w_, fill) {}

    size_t size() const { return data.size(); }
    size_t plane() const { return static_cast<size_t>(h) * w; }

    float& at(int i, int j, int y, int x) {
        return data[((static_cast<size_t>(i) * c + j) * h + y) * w + x];
    }
    float at(int i, int j, int y, int x) const {
        return data[((static_cast<size_t>(i) * c + j) * h + y) * w + x];
    }

    bool same_shape(const Tensor& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }
};

struct Param {
    std::vector<float> w; // values
    std::vector<float> g; // gradient accumulator
    std::vector<float> v; // momentum buffer

    void resize(size_t size) {
        w.assign(size, 0.0f);
        g.assign(size, 0.0f);
        v.assign(size, 0.0f);
    }
    void zero_grad() { std::fill(g.begin(), g.end(), 0.0f); }
};

class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor forward(const Tensor& x, bool train) = 0;
    virtual Tensor backward(const Tensor& dy) = 0;
    virtual std::vector<Param*> params() { return {}; }
    // Non-trainable state that still belongs in a snapshot (e.g. BN running
    // statistics).
    virtual std::vector<std::vector<float>*> state() { return {}; }
    virtual void init(Rng&) {}
};

// ---------------------------------------------------------------------------
// Convolution
// ---------------------------------------------------------------------------

class Conv2d : public Layer {
public:
    Conv2d(int in_c, int out_c, int k, int stride = 1, int pad = 0, bool bias = true)
        : in_c_(in_c), out_c_(out_c), k_(k), stride_(stride), pad_(pad), has_bias_(bias) {
        weight_.resize(static_cast<size_t>(out_c_) * in_c_ * k_ * k_);
        if (has_bias_) bias_.resize(static_cast<size_t>(out_c_));
    }

    void init(Rng& rng) override {
        const float std_dev = std::sqrt(2.0f / (static_cast<float>(in_c_) * k_ * k_));
        for (auto& v : weight_.w) v = static_cast<float>(rng.normal()) * std_dev;
        if (has_bias_) std::fill(bias_.w.begin(), bias_.w.end(), 0.0f);
    }

    int out_dim(int in) const { return (in + 2 * pad_ - k_) / stride_ + 1; }

    Tensor forward(const Tensor& x, bool train) override {
        if (x.c != in_c_) throw DimensionMismatchError("conv expects " + std::to_string(in_c_) +
                                                       " channels, got " + std::to_string(x.c));
        x_shape_ = {x.n, x.c, x.h, x.w};
        const int oh = out_dim(x.h), ow = out_dim(x.w);
        if (oh <= 0 || ow <= 0) throw DimensionMismatchError("conv output would be empty");
        Tensor y(x.n, out_c_, oh, ow);
        const int ickk = in_c_ * k_ * k_;
        const size_t cols_size = static_cast<size_t>(ickk) * oh * ow;
        cols_cache_.assign(train ? cols_size * x.n : cols_size, 0.0f);
        cached_all_ = train;
        ConstMatrixMap wmat(weight_.w.data(), out_c_, ickk);
        for (int i = 0; i < x.n; ++i) {
            float* cols = cols_cache_.data() + (train ? cols_size * i : 0);
            im2col(x, i, cols, oh, ow);
            MatrixMap cmat(cols, ickk, static_cast<Eigen::Index>(oh) * ow);
            MatrixMap ymat(y.data.data() + static_cast<size_t>(i) * y.c * y.plane(), out_c_,
                           static_cast<Eigen::Index>(oh) * ow);
            ymat.noalias() = wmat * cmat;
            if (has_bias_)
                for (int o = 0; o < out_c_; ++o) ymat.row(o).array() += bias_.w[o];
        }
        return y;
    }

    Tensor backward(const Tensor& dy) override {
        // Eval-mode forwards keep only the last sample's columns, which is
        // still a complete cache for single-sample (attribution) backwards.
        if (!cached_all_ && x_shape_[0] != 1)
            throw DimensionMismatchError("conv backward requires a training forward");
        const auto [n, c, h, w] = x_shape_;
        const int oh = dy.h, ow = dy.w;
        const int ickk = in_c_ * k_ * k_;
        const size_t cols_size = static_cast<size_t>(ickk) * oh * ow;
        Tensor dx(n, c, h, w);
        std::vector<float> dcols(cols_size);
        ConstMatrixMap wmat(weight_.w.data(), out_c_, ickk);
        MatrixMap gw(weight_.g.data(), out_c_, ickk);
        for (int i = 0; i < n; ++i) {
            ConstMatrixMap dymat(dy.data.data() + static_cast<size_t>(i) * dy.c * dy.plane(),
                                 out_c_, static_cast<Eigen::Index>(oh) * ow);
            ConstMatrixMap cmat(cols_cache_.data() + cols_size * i, ickk,
                                static_cast<Eigen::Index>(oh) * ow);
            gw.noalias() += dymat * cmat.transpose();
            if (has_bias_)
                for (int o = 0; o < out_c_; ++o) bias_.g[o] += dymat.row(o).sum();
            MatrixMap dcmat(dcols.data(), ickk, static_cast<Eigen::Index>(oh) * ow);
            dcmat.noalias() = wmat.transpose() * dymat;
            col2im(dcols.data(), dx, i, oh, ow);
        }
        return dx;
    }

    std::vector<Param*> params() override {
        return has_bias_ ? std::vector<Param*>{&weight_, &bias_} : std::vector<Param*>{&weight_};
    }

private:
    void im2col(const Tensor& x, int sample, float* cols, int oh, int ow) const {
        const int ow64 = ow;
        for (int ci = 0; ci < in_c_; ++ci)
            for (int ky = 0; ky < k_; ++ky)
                for (int kx = 0; kx < k_; ++kx) {
                    const int row = (ci * k_ + ky) * k_ + kx;
                    float* dst = cols + static_cast<size_t>(row) * oh * ow64;
                    for (int oy = 0; oy < oh; ++oy) {
                        const int iy = oy * stride_ + ky - pad_;
                        if (iy < 0 || iy >= x.h) {
                            std::fill(dst, dst + ow64, 0.0f);
                            dst += ow64;
                            continue;
                        }
                        for (int ox = 0; ox < ow64; ++ox) {
                            const int ix = ox * stride_ + kx - pad_;
                            *dst++ = (ix >= 0 && ix < x.w) ? x.at(sample, ci, iy, ix) : 0.0f;
                        }
                    }
                }
    }

    void col2im(const float* cols, Tensor& dx, int sample, int oh, int ow) const {
        for (int ci = 0; ci < in_c_; ++ci)
            for (int ky = 0; ky < k_; ++ky)
                for (int kx = 0; kx < k_; ++kx) {
                    const int row = (ci * k_ + ky) * k_ + kx;
                    const float* src = cols + static_cast<size_t>(row) * oh * ow;
                    for (int oy = 0; oy < oh; ++oy) {
                        const int iy = oy * stride_ + ky - pad_;
                        if (iy < 0 || iy >= dx.h) {
                            src += ow;
                            continue;
                        }
                        for (int ox = 0; ox < ow; ++ox) {
                            const int ix = ox * stride_ + kx - pad_;
                            if (ix >= 0 && ix < dx.w) dx.at(sample, ci, iy, ix) += *src;
                            ++src;
                        }
                    }
                }
    }

    int in_c_, out_c_, k_, stride_, pad_;
    bool has_bias_;
    Param weight_, bias_;
    std::array<int, 4> x_shape_{};
    std::vector<float> cols_cache_;
    bool cached_all_ = false;
};

// ---------------------------------------------------------------------------
// Batch normalization (biased batch variance; running stats updated with
// momentum 0.1). The eval-mode backward treats running stats as constants so
// gradient-based attribution works on frozen models.
// ---------------------------------------------------------------------------

class BatchNorm2d : public Layer {
public:
    explicit BatchNorm2d(int channels, float eps = 1e-5f, float momentum = 0.1f)
        : c_(channels), eps_(eps), momentum_(momentum) {
        gamma_.resize(static_cast<size_t>(c_));
        beta_.resize(static_cast<size_t>(c_));
        std::fill(gamma_.w.begin(), gamma_.w.end(), 1.0f);
        running_mean_.assign(static_cast<size_t>(c_), 0.0f);
        running_var_.assign(static_cast<size_t>(c_), 1.0f);
    }

    void init(Rng&) override {
        std::fill(gamma_.w.begin(), gamma_.w.end(), 1.0f);
        std::fill(beta_.w.begin(), beta_.w.end(), 0.0f);
    }

    Tensor forward(const Tensor& x, bool train) override {
        if (x.c != c_) throw DimensionMismatchError("batchnorm channel mismatch");
        train_ = train;
        const size_t m = static_cast<size_t>(x.n) * x.h * x.w;
        Tensor y(x.n, x.c, x.h, x.w);
        mean_.assign(c_, 0.0f);
        inv_std_.assign(c_, 0.0f);
        if (train) {
            for (int j = 0; j < c_; ++j) {
                double sum = 0.0;
                for (int i = 0; i < x.n; ++i)
                    for (int yy = 0; yy < x.h; ++yy)
                        for (int xx = 0; xx < x.w; ++xx) sum += x.at(i, j, yy, xx);
                const float mu = static_cast<float>(sum / static_cast<double>(m));
                double var = 0.0;
                for (int i = 0; i < x.n; ++i)
                    for (int yy = 0; yy < x.h; ++yy)
                        for (int xx = 0; xx < x.w; ++xx) {
                            const double d = x.at(i, j, yy, xx) - mu;
                            var += d * d;
                        }
                const float sigma2 = static_cast<float>(var / static_cast<double>(m));
                mean_[j] = mu;
                inv_std_[j] = 1.0f / std::sqrt(sigma2 + eps_);
                running_mean_[j] = (1.0f - momentum_) * running_mean_[j] + momentum_ * mu;
                running_var_[j] = (1.0f - momentum_) * running_var_[j] + momentum_ * sigma2;
            }
        } else {
            for (int j = 0; j < c_; ++j) {
                mean_[j] = running_mean_[j];
                inv_std_[j] = 1.0f / std::sqrt(running_var_[j] + eps_);
            }
        }
        xhat_ = Tensor(x.n, x.c, x.h, x.w);
        for (int i = 0; i < x.n; ++i)
            for (int j = 0; j < c_; ++j)
                for (int yy = 0; yy < x.h; ++yy)
                    for (int xx = 0; xx < x.w; ++xx) {
                        const float xh = (x.at(i, j, yy, xx) - mean_[j]) * inv_std_[j];
                        xhat_.at(i, j, yy, xx) = xh;
                        y.at(i, j, yy, xx) = gamma_.w[j] * xh + beta_.w[j];
                    }
        return y;
    }

    Tensor backward(const Tensor& dy) override {
        const float m = static_cast<float>(static_cast<size_t>(dy.n) * dy.h * dy.w);
        Tensor dx(dy.n, dy.c, dy.h, dy.w);
        for (int j = 0; j < c_; ++j) {
            double sum_dy = 0.0, sum_dy_xhat = 0.0;
            for (int i = 0; i < dy.n; ++i)
                for (int yy = 0; yy < dy.h; ++yy)
                    for (int xx = 0; xx < dy.w; ++xx) {
                        const float d = dy.at(i, j, yy, xx);
                        sum_dy += d;
                        sum_dy_xhat += d * xhat_.at(i, j, yy, xx);
                    }
            beta_.g[j] += static_cast<float>(sum_dy);
            gamma_.g[j] += static_cast<float>(sum_dy_xhat);
            const float k = gamma_.w[j] * inv_std_[j];
            if (train_) {
                const float mean_dy = static_cast<float>(sum_dy) / m;
                const float mean_dy_xhat = static_cast<float>(sum_dy_xhat) / m;
                for (int i = 0; i < dy.n; ++i)
                    for (int yy = 0; yy < dy.h; ++yy)
                        for (int xx = 0; xx < dy.w; ++xx)
                            dx.at(i, j, yy, xx) =
                                k * (dy.at(i, j, yy, xx) - mean_dy -
                                     xhat_.at(i, j, yy, xx) * mean_dy_xhat);
            } else {
                for (int i = 0; i < dy.n; ++i)
                    for (int yy = 0; yy < dy.h; ++yy)
                        for (int xx = 0; xx < dy.w; ++xx)
                            dx.at(i, j, yy, xx) = k * dy.at(i, j, yy, xx);
            }
        }
        return dx;
    }

    std::vector<Param*> params() override { return {&gamma_, &beta_}; }
    std::vector<std::vector<float>*> state() override { return {&running_mean_, &running_var_}; }

private:
    int c_;
    float eps_, momentum_;
    bool train_ = true;
    Param gamma_, beta_;
    std::vector<float> running_mean_, running_var_;
    std::vector<float> mean_, inv_std_;
    Tensor xhat_;
};

class ReLU : public Layer {
public:
    Tensor forward(const Tensor& x, bool) override {
        mask_.assign(x.size(), 0);
        Tensor y = x;
        for (size_t i = 0; i < y.size(); ++i) {
            if (y.data[i] > 0.0f)
                mask_[i] = 1;
            else
                y.data[i] = 0.0f;
        }
        return y;
    }
    Tensor backward(const Tensor& dy) override {
        Tensor dx = dy;
        for (size_t i = 0; i < dx.size(); ++i)
            if (!mask_[i]) dx.data[i] = 0.0f;
        return dx;
    }

private:
    std::vector<uint8_t> mask_;
};

class MaxPool2d : public Layer {
public:
    MaxPool2d(int k, int stride, int pad = 0) : k_(k), stride_(stride), pad_(pad) {}

    Tensor forward(const Tensor& x, bool) override {
        x_shape_ = {x.n, x.c, x.h, x.w};
        const int oh = (x.h + 2 * pad_ - k_) / stride_ + 1;
        const int ow = (x.w + 2 * pad_ - k_) / stride_ + 1;
        Tensor y(x.n, x.c, oh, ow);
        argmax_.assign(y.size(), 0);
        size_t out = 0;
        for (int i = 0; i < x.n; ++i)
            for (int j = 0; j < x.c; ++j)
                for (int oy = 0; oy < oh; ++oy)
                    for (int ox = 0; ox < ow; ++ox, ++out) {
                        float best = -std::numeric_limits<float>::infinity();
                        size_t best_idx = 0;
                        for (int ky = 0; ky < k_; ++ky)
                            for (int kx = 0; kx < k_; ++kx) {
                                const int iy = oy * stride_ + ky - pad_;
                                const int ix = ox * stride_ + kx - pad_;
                                if (iy < 0 || iy >= x.h || ix < 0 || ix >= x.w) continue;
                                const float v = x.at(i, j, iy, ix);
                                if (v > best) {
                                    best = v;
                                    best_idx = ((static_cast<size_t>(i) * x.c + j) * x.h + iy) * x.w + ix;
                                }
                            }
                        y.data[out] = best;
                        argmax_[out] = best_idx;
                    }
        return y;
    }

    Tensor backward(const Tensor& dy) override {
        const auto [n, c, h, w] = x_shape_;
        Tensor dx(n, c, h, w);
        for (size_t i = 0; i < dy.size(); ++i) dx.data[argmax_[i]] += dy.data[i];
        return dx;
    }

private:
    int k_, stride_, pad_;
    std::array<int, 4> x_shape_{};
    std::vector<size_t> argmax_;
};

class GlobalAvgPool : public Layer {
public:
    Tensor forward(const Tensor& x, bool) override {
        x_shape_ = {x.n, x.c, x.h, x.w};
        Tensor y(x.n, x.c, 1, 1);
        const float scale = 1.0f / static_cast<float>(x.plane());
        for (int i = 0; i < x.n; ++i)
            for (int j = 0; j < x.c; ++j) {
                double sum = 0.0;
                for (int yy = 0; yy < x.h; ++yy)
                    for (int xx = 0; xx < x.w; ++xx) sum += x.at(i, j, yy, xx);
                y.at(i, j, 0, 0) = static_cast<float>(sum) * scale;
            }
        return y;
    }
    Tensor backward(const Tensor& dy) override {
        const auto [n, c, h, w] = x_shape_;
        Tensor dx(n, c, h, w);
        const float scale = 1.0f / static_cast<float>(static_cast<size_t>(h) * w);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < c; ++j) {
                const float g = dy.at(i, j, 0, 0) * scale;
                for (int yy = 0; yy < h; ++yy)
                    for (int xx = 0; xx < w; ++xx) dx.at(i, j, yy, xx) = g;
            }
        return dx;
    }

private:
    std::array<int, 4> x_shape_{};
};

// Fully connected head: flattens [n, c, h, w] to [n, c*h*w].
class Dense : public Layer {
public:
    Dense(int in, int out) : in_(in), out_(out) {
        weight_.resize(static_cast<size_t>(out_) * in_);
        bias_.resize(static_cast<size_t>(out_));
    }

    void init(Rng& rng) override {
        const float std_dev = std::sqrt(2.0f / static_cast<float>(in_));
        for (auto& v : weight_.w) v = static_cast<float>(rng.normal()) * std_dev;
        std::fill(bias_.w.begin(), bias_.w.end(), 0.0f);
    }

    Tensor forward(const Tensor& x, bool) override {
        if (x.c * x.h * x.w != in_)
            throw DimensionMismatchError("dense expects " + std::to_string(in_) + " features, got " +
                                         std::to_string(x.c * x.h * x.w));
        x_shape_ = {x.n, x.c, x.h, x.w};
        x_cache_ = x.data;
        Tensor y(x.n, out_, 1, 1);
        ConstMatrixMap xm(x.data.data(), x.n, in_);
        ConstMatrixMap wm(weight_.w.data(), out_, in_);
        MatrixMap ym(y.data.data(), x.n, out_);
        ym.noalias() = xm * wm.transpose();
        for (int o = 0; o < out_; ++o) ym.col(o).array() += bias_.w[o];
        return y;
    }

    Tensor backward(const Tensor& dy) override {
        const auto [n, c, h, w] = x_shape_;
        ConstMatrixMap dym(dy.data.data(), n, out_);
        ConstMatrixMap xm(x_cache_.data(), n, in_);
        MatrixMap gw(weight_.g.data(), out_, in_);
        gw.noalias() += dym.transpose() * xm;
        for (int o = 0; o < out_; ++o) bias_.g[o] += dym.col(o).sum();
        Tensor dx(n, c, h, w);
        MatrixMap dxm(dx.data.data(), n, in_);
        ConstMatrixMap wm(weight_.w.data(), out_, in_);
        dxm.noalias() = dym * wm;
        return dx;
    }

    std::vector<Param*> params() override { return {&weight_, &bias_}; }

private:
    int in_, out_;
    Param weight_, bias_;
    std::array<int, 4> x_shape_{};
    std::vector<float> x_cache_;
};

// Bottleneck residual block (1x1 reduce, 3x3, 1x1 expand) with an optional
// projection shortcut; the final ReLU is part of the block.
class Bottleneck : public Layer {
public:
    Bottleneck(int in_c, int planes, int stride, int expansion = 4) {
        const int out_c = planes * expansion;
        main_.emplace_back(std::make_unique<Conv2d>(in_c, planes, 1, 1, 0, false));
        main_.emplace_back(std::make_unique<BatchNorm2d>(planes));
        main_.emplace_back(std::make_unique<ReLU>());
        main_.emplace_back(std::make_unique<Conv2d>(planes, planes, 3, stride, 1, false));
        main_.emplace_back(std::make_unique<BatchNorm2d>(planes));
        main_.emplace_back(std::make_unique<ReLU>());
        main_.emplace_back(std::make_unique<Conv2d>(planes, out_c, 1, 1, 0, false));
        main_.emplace_back(std::make_unique<BatchNorm2d>(out_c));
        if (stride != 1 || in_c != out_c) {
            shortcut_.emplace_back(std::make_unique<Conv2d>(in_c, out_c, 1, stride, 0, false));
            shortcut_.emplace_back(std::make_unique<BatchNorm2d>(out_c));
        }
    }

    Tensor forward(const Tensor& x, bool train) override {
        Tensor main = x;
        for (auto& l : main_) main = l->forward(main, train);
        Tensor skip = x;
        for (auto& l : shortcut_) skip = l->forward(skip, train);
        if (!main.same_shape(skip)) throw DimensionMismatchError("residual shape mismatch");
        sum_pos_.assign(main.size(), 0);
        for (size_t i = 0; i < main.size(); ++i) {
            main.data[i] += skip.data[i];
            if (main.data[i] > 0.0f)
                sum_pos_[i] = 1;
            else
                main.data[i] = 0.0f;
        }
        return main;
    }

    Tensor backward(const Tensor& dy) override {
        Tensor d = dy;
        for (size_t i = 0; i < d.size(); ++i)
            if (!sum_pos_[i]) d.data[i] = 0.0f;
        Tensor dmain = d;
        for (auto it = main_.rbegin(); it != main_.rend(); ++it) dmain = (*it)->backward(dmain);
        Tensor dskip = d;
        for (auto it = shortcut_.rbegin(); it != shortcut_.rend(); ++it)
            dskip = (*it)->backward(dskip);
        for (size_t i = 0; i < dmain.size(); ++i) dmain.data[i] += dskip.data[i];
        return dmain;
    }

    std::vector<Param*> params() override {
        std::vector<Param*> out;
        for (auto& l : main_)
            for (auto* p : l->params()) out.push_back(p);
        for (auto& l : shortcut_)
            for (auto* p : l->params()) out.push_back(p);
        return out;
    }

    std::vector<std::vector<float>*> state() override {
        std::vector<std::vector<float>*> out;
        for (auto& l : main_)
            for (auto* s : l->state()) out.push_back(s);
        for (auto& l : shortcut_)
            for (auto* s : l->state()) out.push_back(s);
        return out;
    }

    void init(Rng& rng) override {
        for (auto& l : main_) l->init(rng);
        for (auto& l : shortcut_) l->init(rng);
    }

private:
    std::vector<std::unique_ptr<Layer>> main_;
    std::vector<std::unique_ptr<Layer>> shortcut_;
    std::vector<uint8_t> sum_pos_;
};

// ---------------------------------------------------------------------------
// Network: an ordered list of named layers with cached activations and
// output gradients, which is what gradient-based attribution needs.
// ---------------------------------------------------------------------------

class Network {
public:
    std::string backbone_id;
    int in_channels = 1;
    int num_classes = 0;
    std::vector<float> channel_mean{0.5f};
    std::vector<float> channel_std{0.5f};

    void add(std::string name, std::unique_ptr<Layer> layer) {
        layers_.emplace_back(std::move(name), std::move(layer));
    }

    Tensor forward(const Tensor& x, bool train) {
        acts_.clear();
        grads_.assign(layers_.size(), Tensor{});
        Tensor cur = x;
        for (auto& [name, layer] : layers_) {
            cur = layer->forward(cur, train);
            acts_.push_back(cur);
        }
        return cur;
    }

    // dloss is the gradient at the network output; gradients w.r.t. every
    // layer output are captured on the way down.
    Tensor backward(const Tensor& dloss) {
        Tensor cur = dloss;
        for (size_t i = layers_.size(); i-- > 0;) {
            grads_[i] = cur;
            cur = layers_[i].second->backward(cur);
        }
        return cur;
    }

    const Tensor& activation(const std::string& name) const {
        return acts_.at(index_of(name));
    }
    const Tensor& activation_grad(const std::string& name) const {
        const auto& g = grads_.at(index_of(name));
        if (g.size() == 0) throw LayerNotFoundError("no gradient recorded for layer '" + name + "'");
        return g;
    }
    bool has_layer(const std::string& name) const {
        for (const auto& [n, l] : layers_)
            if (n == name) return true;
        return false;
    }

    std::vector<Param*> parameters() {
        std::vector<Param*> out;
        for (auto& [name, layer] : layers_)
            for (auto* p : layer->params()) out.push_back(p);
        return out;
    }

    std::vector<std::vector<float>*> state_vectors() {
        std::vector<std::vector<float>*> out;
        for (auto& [name, layer] : layers_)
            for (auto* s : layer->state()) out.push_back(s);
        return out;
    }

    void init_params(uint64_t seed) {
        int i = 0;
        for (auto& [name, layer] : layers_) {
            Rng rng(derive_seed(seed, "init", i++));
            layer->init(rng);
        }
    }

    void zero_grad() {
        for (auto* p : parameters()) p->zero_grad();
    }

    size_t layer_count() const { return layers_.size(); }
    const std::string& layer_name(size_t i) const { return layers_[i].first; }

private:
    size_t index_of(const std::string& name) const {
        for (size_t i = 0; i < layers_.size(); ++i)
            if (layers_[i].first == name) return i;
        throw LayerNotFoundError("layer '" + name + "' not found");
    }

    std::vector<std::pair<std::string, std::unique_ptr<Layer>>> layers_;
    std::vector<Tensor> acts_;
    std::vector<Tensor> grads_;
};

// ---------------------------------------------------------------------------
// Loss and optimizer
// ---------------------------------------------------------------------------

struct LossResult {
    float loss = 0.0f;
    Tensor dlogits;
    std::vector<std::vector<float>> probs; // [n][classes]
};

inline std::vector<float> softmax(const float* logits, int classes) {
    float mx = logits[0];
    for (int j = 1; j < classes; ++j) mx = std::max(mx, logits[j]);
    std::vector<float> p(classes);
    double sum = 0.0;
    for (int j = 0; j < classes; ++j) {
        p[j] = std::exp(logits[j] - mx);
        sum += p[j];
    }
    for (auto& v : p) v = static_cast<float>(v / sum);
    return p;
}

inline LossResult softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    const int n = logits.n, classes = logits.c;
    if (static_cast<int>(labels.size()) != n)
        throw DimensionMismatchError("label count does not match batch size");
    LossResult r;
    r.dlogits = Tensor(n, classes, 1, 1);
    r.probs.resize(n);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        if (labels[i] < 0 || labels[i] >= classes)
            throw IdOutOfRangeError("label " + std::to_string(labels[i]) + " outside [0, " +
                                    std::to_string(classes) + ")");
        r.probs[i] = softmax(logits.data.data() + static_cast<size_t>(i) * classes, classes);
        total += -std::log(std::max(r.probs[i][labels[i]], 1e-12f));
        for (int j = 0; j < classes; ++j)
            r.dlogits.at(i, j, 0, 0) =
                (r.probs[i][j] - (j == labels[i] ? 1.0f : 0.0f)) / static_cast<float>(n);
    }
    r.loss = static_cast<float>(total / n);
    return r;
}

struct Sgd {
    float lr = 0.001f;
    float momentum = 0.9f;

    void step(const std::vector<Param*>& params) const {
        for (auto* p : params)
            for (size_t i = 0; i < p->w.size(); ++i) {
                p->v[i] = momentum * p->v[i] + p->g[i];
                p->w[i] -= lr * p->v[i];
            }
    }
};

// ---------------------------------------------------------------------------
// Backbone factory
// ---------------------------------------------------------------------------

// Input-channel count and pretraining normalization per backbone id, cheap
// to query without instantiating the network itself.
struct BackboneNorm {
    int in_channels = 1;
    std::vector<float> mean, std;
};

inline BackboneNorm backbone_norm(const std::string& id) {
    if (id == "tiny") return {1, {0.5f}, {0.5f}};
    if (id == "resnet101-imagenet" || id == "resnet101")
        return {3, {0.485f, 0.456f, 0.406f}, {0.229f, 0.224f, 0.225f}};
    throw ConfigError("unknown backbone '" + id + "'");
}

// "tiny": four conv blocks on grayscale input; sized so a full synthetic
// experiment trains on one CPU core in minutes. "resnet101-imagenet": the
// standard [3,4,23,3] bottleneck stack on RGB with ImageNet normalization;
// weights come from a snapshot file, otherwise random init (warned).
inline Network make_backbone(const std::string& id, int num_classes, uint64_t seed) {
    Network net;
    net.backbone_id = id;
    net.num_classes = num_classes;
    const auto norm = backbone_norm(id);
    net.in_channels = norm.in_channels;
    net.channel_mean = norm.mean;
    net.channel_std = norm.std;
    if (id == "tiny") {
        auto block = [&](int idx, int in_c, int out_c, int stride) {
            const std::string base = "layer" + std::to_string(idx);
            net.add(base + ".conv", std::make_unique<Conv2d>(in_c, out_c, 3, stride, 1, false));
            net.add(base + ".bn", std::make_unique<BatchNorm2d>(out_c));
            net.add(base, std::make_unique<ReLU>()); // block output carries the plain name
        };
        block(1, 1, 16, 2);
        block(2, 16, 32, 2);
        block(3, 32, 64, 2);
        block(4, 64, 64, 1);
        net.add("gap", std::make_unique<GlobalAvgPool>());
        net.add("fc", std::make_unique<Dense>(64, num_classes));
    } else if (id == "resnet101-imagenet" || id == "resnet101") {
        net.add("conv1", std::make_unique<Conv2d>(3, 64, 7, 2, 3, false));
        net.add("bn1", std::make_unique<BatchNorm2d>(64));
        net.add("relu1", std::make_unique<ReLU>());
        net.add("maxpool", std::make_unique<MaxPool2d>(3, 2, 1));
        const std::array<int, 4> depths{3, 4, 23, 3};
        const std::array<int, 4> planes{64, 128, 256, 512};
        int in_c = 64;
        for (int s = 0; s < 4; ++s) {
            for (int b = 0; b < depths[s]; ++b) {
                const int stride = (b == 0 && s > 0) ? 2 : 1;
                const std::string name = "layer" + std::to_string(s + 1) + "." + std::to_string(b);
                net.add(b + 1 == depths[s] ? "layer" + std::to_string(s + 1) : name,
                        std::make_unique<Bottleneck>(in_c, planes[s], stride));
                in_c = planes[s] * 4;
            }
        }
        net.add("gap", std::make_unique<GlobalAvgPool>());
        net.add("fc", std::make_unique<Dense>(2048, num_classes));
    } else {
        throw ConfigError("unknown backbone '" + id + "'");
    }
    net.init_params(seed);
    return net;
}

// Default attribution target: output of the last convolutional block.
inline std::string default_target_layer(const Network& net) { return "layer4"; }

// ---------------------------------------------------------------------------
// Snapshots: raw little-endian float blobs, one per parameter and state
// vector in network order, preceded by a small header.
// ---------------------------------------------------------------------------

inline void save_network(Network& net, std::ostream& out) {
    const char magic[8] = {'P', 'K', 'N', 'E', 'T', '0', '0', '1'};
    out.write(magic, 8);
    const uint32_t id_len = static_cast<uint32_t>(net.backbone_id.size());
    out.write(reinterpret_cast<const char*>(&id_len), 4);
    out.write(net.backbone_id.data(), id_len);
    const uint32_t classes = static_cast<uint32_t>(net.num_classes);
    out.write(reinterpret_cast<const char*>(&classes), 4);
    auto write_vec = [&](const std::vector<float>& v) {
        const uint64_t size = v.size();
        out.write(reinterpret_cast<const char*>(&size), 8);
        out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(size * 4));
    };
    const auto params = net.parameters();
    const uint64_t np = params.size();
    out.write(reinterpret_cast<const char*>(&np), 8);
    for (auto* p : params) write_vec(p->w);
    const auto states = net.state_vectors();
    const uint64_t ns = states.size();
    out.write(reinterpret_cast<const char*>(&ns), 8);
    for (auto* s : states) write_vec(*s);
    if (!out) throw IoError("failed to write network snapshot");
}

inline Network load_network(std::istream& in) {
    char magic[8];
    in.read(magic, 8);
    if (!in || std::string(magic, 8) != "PKNET001") throw IoError("not a network snapshot");
    uint32_t id_len = 0;
    in.read(reinterpret_cast<char*>(&id_len), 4);
    if (!in || id_len > 256) throw IoError("corrupt snapshot header");
    std::string id(id_len, '\0');
    in.read(id.data(), id_len);
    uint32_t classes = 0;
    in.read(reinterpret_cast<char*>(&classes), 4);
    Network net = make_backbone(id, static_cast<int>(classes), 0);
    auto read_vec = [&](std::vector<float>& v) {
        uint64_t size = 0;
        in.read(reinterpret_cast<char*>(&size), 8);
        if (!in || size != v.size()) throw IoError("snapshot tensor size mismatch");
        in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(size * 4));
    };
    uint64_t np = 0;
    in.read(reinterpret_cast<char*>(&np), 8);
    auto params = net.parameters();
    if (np != params.size()) throw IoError("snapshot parameter count mismatch");
    for (auto* p : params) read_vec(p->w);
    uint64_t ns = 0;
    in.read(reinterpret_cast<char*>(&ns), 8);
    auto states = net.state_vectors();
    if (ns != states.size()) throw IoError("snapshot state count mismatch");
    for (auto* s : states) read_vec(*s);
    if (!in) throw IoError("truncated network snapshot");
    return net;
}

} // namespace panelkit::nn
