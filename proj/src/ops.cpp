// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#include "siamct/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "siamct/errors.hpp"

namespace siamct::ops {

using ag::make_result;
using ag::Node;

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

ConstMatMap cmap(const double* p, std::size_t rows, std::size_t cols)
{
    return ConstMatMap(p, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

MatMap mmap(double* p, std::size_t rows, std::size_t cols)
{
    return MatMap(p, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

// Parent i when it wants a gradient, else nullptr.
Node* wants_grad(Node& self, std::size_t i)
{
    const auto& p = self.parents[i];
    return (p && p->requires_grad) ? p.get() : nullptr;
}

void require_rank(const Var& v, std::size_t rank, const char* op)
{
    if (v.value().rank() != rank) {
        throw ShapeError(fmt::format("{}: expected rank {}, got {}", op, rank, shape_str(v.shape())));
    }
}

template <typename F>
Var unary(const Var& a, F&& forward_derivative)
{
    Tensor out(a.shape());
    std::vector<double> deriv(a.size());
    const auto& in = a.value().data;
    for (std::size_t i = 0; i < in.size(); ++i) {
        auto [y, dy] = forward_derivative(in[i]);
        out.data[i] = y;
        deriv[i] = dy;
    }
    return make_result(std::move(out), {a}, [deriv = std::move(deriv)](Node& self) {
        if (Node* pa = wants_grad(self, 0)) {
            auto& g = pa->ensure_grad();
            for (std::size_t i = 0; i < deriv.size(); ++i) {
                g[i] += self.grad[i] * deriv[i];
            }
        }
    });
}

}  // namespace

Var add(const Var& a, const Var& b)
{
    if (a.shape() != b.shape()) {
        throw ShapeError(fmt::format("add: {} vs {}", shape_str(a.shape()), shape_str(b.shape())));
    }
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out.data[i] += b.value().data[i];
    }
    return make_result(std::move(out), {a, b}, [](Node& self) {
        for (std::size_t k = 0; k < 2; ++k) {
            if (Node* p = wants_grad(self, k)) {
                auto& g = p->ensure_grad();
                for (std::size_t i = 0; i < g.size(); ++i) {
                    g[i] += self.grad[i];
                }
            }
        }
    });
}

Var add_row(const Var& x, const Var& row)
{
    require_rank(x, 2, "add_row");
    const std::size_t m = x.shape()[0];
    const std::size_t n = x.shape()[1];
    if (row.size() != n) {
        throw ShapeError(fmt::format("add_row: row of {} values for {}", row.size(), shape_str(x.shape())));
    }
    Tensor out = x.value();
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            out.data[r * n + c] += row.value().data[c];
        }
    }
    return make_result(std::move(out), {x, row}, [m, n](Node& self) {
        if (Node* px = wants_grad(self, 0)) {
            auto& g = px->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) {
                g[i] += self.grad[i];
            }
        }
        if (Node* pr = wants_grad(self, 1)) {
            auto& g = pr->ensure_grad();
            for (std::size_t r = 0; r < m; ++r) {
                for (std::size_t c = 0; c < n; ++c) {
                    g[c] += self.grad[r * n + c];
                }
            }
        }
    });
}

Var mul(const Var& a, const Var& b)
{
    if (a.shape() != b.shape()) {
        throw ShapeError(fmt::format("mul: {} vs {}", shape_str(a.shape()), shape_str(b.shape())));
    }
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out.data[i] *= b.value().data[i];
    }
    return make_result(std::move(out), {a, b}, [](Node& self) {
        const auto& av = self.parents[0]->value.data;
        const auto& bv = self.parents[1]->value.data;
        if (Node* pa = wants_grad(self, 0)) {
            auto& g = pa->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) {
                g[i] += self.grad[i] * bv[i];
            }
        }
        if (Node* pb = wants_grad(self, 1)) {
            auto& g = pb->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) {
                g[i] += self.grad[i] * av[i];
            }
        }
    });
}

Var scale(const Var& a, double factor)
{
    return unary(a, [factor](double v) { return std::pair{v * factor, factor}; });
}

Var matmul(const Var& a, const Var& b)
{
    require_rank(a, 2, "matmul");
    require_rank(b, 2, "matmul");
    const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    if (b.shape()[0] != k) {
        throw ShapeError(fmt::format("matmul: {} x {}", shape_str(a.shape()), shape_str(b.shape())));
    }
    Tensor out({m, n});
    mmap(out.data.data(), m, n).noalias() = cmap(a.value().data.data(), m, k) * cmap(b.value().data.data(), k, n);
    return make_result(std::move(out), {a, b}, [m, k, n](Node& self) {
        auto dc = cmap(self.grad.data(), m, n);
        if (Node* pa = wants_grad(self, 0)) {
            mmap(pa->ensure_grad().data(), m, k).noalias() += dc * cmap(self.parents[1]->value.data.data(), k, n).transpose();
        }
        if (Node* pb = wants_grad(self, 1)) {
            mmap(pb->ensure_grad().data(), k, n).noalias() += cmap(self.parents[0]->value.data.data(), m, k).transpose() * dc;
        }
    });
}

Var linear(const Var& x, const Var& weight, const Var& bias)
{
    require_rank(x, 2, "linear");
    require_rank(weight, 2, "linear weight");
    const std::size_t m = x.shape()[0], in = x.shape()[1], outn = weight.shape()[0];
    if (weight.shape()[1] != in) {
        throw ShapeError(fmt::format("linear: input {} vs weight {}", shape_str(x.shape()), shape_str(weight.shape())));
    }
    if (bias.defined() && bias.size() != outn) {
        throw ShapeError(fmt::format("linear: bias {} for {} outputs", shape_str(bias.shape()), outn));
    }
    Tensor out({m, outn});
    auto y = mmap(out.data.data(), m, outn);
    y.noalias() = cmap(x.value().data.data(), m, in) * cmap(weight.value().data.data(), outn, in).transpose();
    if (bias.defined()) {
        y.rowwise() += cmap(bias.value().data.data(), 1, outn).row(0);
    }
    std::vector<Var> parents{x, weight};
    if (bias.defined()) {
        parents.push_back(bias);
    }
    return make_result(std::move(out), parents, [m, in, outn](Node& self) {
        auto dy = cmap(self.grad.data(), m, outn);
        if (Node* px = wants_grad(self, 0)) {
            mmap(px->ensure_grad().data(), m, in).noalias() += dy * cmap(self.parents[1]->value.data.data(), outn, in);
        }
        if (Node* pw = wants_grad(self, 1)) {
            mmap(pw->ensure_grad().data(), outn, in).noalias() += dy.transpose() * cmap(self.parents[0]->value.data.data(), m, in);
        }
        if (self.parents.size() > 2) {
            if (Node* pb = wants_grad(self, 2)) {
                mmap(pb->ensure_grad().data(), 1, outn) += dy.colwise().sum();
            }
        }
    });
}

Var transpose(const Var& a)
{
    require_rank(a, 2, "transpose");
    const std::size_t m = a.shape()[0], n = a.shape()[1];
    Tensor out({n, m});
    mmap(out.data.data(), n, m) = cmap(a.value().data.data(), m, n).transpose();
    return make_result(std::move(out), {a}, [m, n](Node& self) {
        if (Node* pa = wants_grad(self, 0)) {
            mmap(pa->ensure_grad().data(), m, n) += cmap(self.grad.data(), n, m).transpose();
        }
    });
}

Var reshape(const Var& a, Shape shape)
{
    if (numel(shape) != a.size()) {
        throw ShapeError(fmt::format("reshape: {} to {}", shape_str(a.shape()), shape_str(shape)));
    }
    Tensor out(std::move(shape), a.value().data);
    return make_result(std::move(out), {a}, [](Node& self) {
        if (Node* pa = wants_grad(self, 0)) {
            auto& g = pa->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) {
                g[i] += self.grad[i];
            }
        }
    });
}

Var relu(const Var& a)
{
    return unary(a, [](double v) { return v > 0.0 ? std::pair{v, 1.0} : std::pair{0.0, 0.0}; });
}

Var tanh(const Var& a)
{
    return unary(a, [](double v) {
        const double t = std::tanh(v);
        return std::pair{t, 1.0 - t * t};
    });
}

Var sigmoid(const Var& a)
{
    return unary(a, [](double v) {
        const double s = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
        return std::pair{s, s * (1.0 - s)};
    });
}

Var slice_cols(const Var& a, std::size_t begin, std::size_t count)
{
    require_rank(a, 2, "slice_cols");
    const std::size_t m = a.shape()[0], n = a.shape()[1];
    if (begin + count > n) {
        throw ShapeError(fmt::format("slice_cols: [{}, {}) of {}", begin, begin + count, shape_str(a.shape())));
    }
    Tensor out({m, count});
    mmap(out.data.data(), m, count) = cmap(a.value().data.data(), m, n).middleCols(begin, count);
    return make_result(std::move(out), {a}, [m, n, begin, count](Node& self) {
        if (Node* pa = wants_grad(self, 0)) {
            mmap(pa->ensure_grad().data(), m, n).middleCols(begin, count) += cmap(self.grad.data(), m, count);
        }
    });
}

Var concat_cols(const std::vector<Var>& parts)
{
    if (parts.empty()) {
        throw ShapeError("concat_cols: nothing to concatenate");
    }
    const std::size_t m = parts.front().shape()[0];
    std::vector<std::size_t> widths;
    std::size_t total = 0;
    for (const auto& p : parts) {
        require_rank(p, 2, "concat_cols");
        if (p.shape()[0] != m) {
            throw ShapeError("concat_cols: row counts differ");
        }
        widths.push_back(p.shape()[1]);
        total += p.shape()[1];
    }
    Tensor out({m, total});
    auto o = mmap(out.data.data(), m, total);
    std::size_t offset = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        o.middleCols(offset, widths[i]) = cmap(parts[i].value().data.data(), m, widths[i]);
        offset += widths[i];
    }
    return make_result(std::move(out), parts, [m, total, widths](Node& self) {
        auto g = cmap(self.grad.data(), m, total);
        std::size_t off = 0;
        for (std::size_t i = 0; i < widths.size(); ++i) {
            if (Node* p = wants_grad(self, i)) {
                mmap(p->ensure_grad().data(), m, widths[i]) += g.middleCols(off, widths[i]);
            }
            off += widths[i];
        }
    });
}

Var concat_leading(const std::vector<Var>& parts)
{
    if (parts.empty()) {
        throw ShapeError("concat_leading: nothing to concatenate");
    }
    Shape tail(parts.front().shape().begin() + 1, parts.front().shape().end());
    std::size_t lead = 0;
    std::vector<std::size_t> sizes;
    for (const auto& p : parts) {
        if (Shape(p.shape().begin() + 1, p.shape().end()) != tail) {
            throw ShapeError("concat_leading: trailing shapes differ");
        }
        lead += p.shape()[0];
        sizes.push_back(p.size());
    }
    Shape shape{lead};
    shape.insert(shape.end(), tail.begin(), tail.end());
    Tensor out(shape);
    std::size_t offset = 0;
    for (const auto& p : parts) {
        std::copy(p.value().data.begin(), p.value().data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(offset));
        offset += p.size();
    }
    return make_result(std::move(out), parts, [sizes](Node& self) {
        std::size_t off = 0;
        for (std::size_t i = 0; i < sizes.size(); ++i) {
            if (Node* p = wants_grad(self, i)) {
                auto& g = p->ensure_grad();
                for (std::size_t j = 0; j < sizes[i]; ++j) {
                    g[j] += self.grad[off + j];
                }
            }
            off += sizes[i];
        }
    });
}

Var softmax_rows(const Var& a, std::span<const std::uint8_t> keep)
{
    require_rank(a, 2, "softmax_rows");
    const std::size_t m = a.shape()[0], n = a.shape()[1];
    if (!keep.empty() && keep.size() != n) {
        throw ShapeError(fmt::format("softmax_rows: mask of {} for {} columns", keep.size(), n));
    }
    if (!keep.empty() && std::none_of(keep.begin(), keep.end(), [](std::uint8_t k) { return k != 0; })) {
        throw ValidationError("softmax_rows: every column is masked");
    }
    Tensor out({m, n});
    const auto& x = a.value().data;
    for (std::size_t r = 0; r < m; ++r) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < n; ++c) {
            if (keep.empty() || keep[c]) {
                mx = std::max(mx, x[r * n + c]);
            }
        }
        double total = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            const double e = (keep.empty() || keep[c]) ? std::exp(x[r * n + c] - mx) : 0.0;
            out.data[r * n + c] = e;
            total += e;
        }
        for (std::size_t c = 0; c < n; ++c) {
            out.data[r * n + c] /= total;
        }
    }
    auto probs = std::make_shared<std::vector<double>>(out.data);
    return make_result(std::move(out), {a}, [m, n, probs](Node& self) {
        if (Node* pa = wants_grad(self, 0)) {
            auto& g = pa->ensure_grad();
            const auto& y = *probs;
            for (std::size_t r = 0; r < m; ++r) {
                double dot = 0.0;
                for (std::size_t c = 0; c < n; ++c) {
                    dot += y[r * n + c] * self.grad[r * n + c];
                }
                for (std::size_t c = 0; c < n; ++c) {
                    g[r * n + c] += y[r * n + c] * (self.grad[r * n + c] - dot);
                }
            }
        }
    });
}

Var layer_norm_rows(const Var& x, const Var& gamma, const Var& beta, double eps)
{
    require_rank(x, 2, "layer_norm_rows");
    const std::size_t m = x.shape()[0], n = x.shape()[1];
    if (gamma.size() != n || beta.size() != n) {
        throw ShapeError("layer_norm_rows: gain/bias size mismatch");
    }
    Tensor out({m, n});
    auto normed = std::make_shared<std::vector<double>>(m * n);
    auto inv_std = std::make_shared<std::vector<double>>(m);
    const auto& xv = x.value().data;
    for (std::size_t r = 0; r < m; ++r) {
        double mean = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            mean += xv[r * n + c];
        }
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            const double d = xv[r * n + c] - mean;
            var += d * d;
        }
        var /= static_cast<double>(n);
        const double is = 1.0 / std::sqrt(var + eps);
        (*inv_std)[r] = is;
        for (std::size_t c = 0; c < n; ++c) {
            const double xh = (xv[r * n + c] - mean) * is;
            (*normed)[r * n + c] = xh;
            out.data[r * n + c] = gamma.value().data[c] * xh + beta.value().data[c];
        }
    }
    return make_result(std::move(out), {x, gamma, beta}, [m, n, normed, inv_std](Node& self) {
        const auto& xh = *normed;
        const auto& gv = self.parents[1]->value.data;
        if (Node* px = wants_grad(self, 0)) {
            auto& g = px->ensure_grad();
            for (std::size_t r = 0; r < m; ++r) {
                double mean_d = 0.0, mean_dx = 0.0;
                for (std::size_t c = 0; c < n; ++c) {
                    const double d = self.grad[r * n + c] * gv[c];
                    mean_d += d;
                    mean_dx += d * xh[r * n + c];
                }
                mean_d /= static_cast<double>(n);
                mean_dx /= static_cast<double>(n);
                for (std::size_t c = 0; c < n; ++c) {
                    const double d = self.grad[r * n + c] * gv[c];
                    g[r * n + c] += (*inv_std)[r] * (d - mean_d - xh[r * n + c] * mean_dx);
                }
            }
        }
        if (Node* pg = wants_grad(self, 1)) {
            auto& g = pg->ensure_grad();
            for (std::size_t i = 0; i < m * n; ++i) {
                g[i % n] += self.grad[i] * xh[i];
            }
        }
        if (Node* pb = wants_grad(self, 2)) {
            auto& g = pb->ensure_grad();
            for (std::size_t i = 0; i < m * n; ++i) {
                g[i % n] += self.grad[i];
            }
        }
    });
}

Var dropout(const Var& x, double p, std::mt19937_64& rng)
{
    if (p <= 0.0) {
        return x;
    }
    if (p >= 1.0) {
        throw ValidationError("dropout: p must be < 1");
    }
    std::bernoulli_distribution keep(1.0 - p);
    const double s = 1.0 / (1.0 - p);
    std::vector<double> mask(x.size());
    Tensor out = x.value();
    for (std::size_t i = 0; i < mask.size(); ++i) {
        mask[i] = keep(rng) ? s : 0.0;
        out.data[i] *= mask[i];
    }
    return make_result(std::move(out), {x}, [mask = std::move(mask)](Node& self) {
        if (Node* px = wants_grad(self, 0)) {
            auto& g = px->ensure_grad();
            for (std::size_t i = 0; i < mask.size(); ++i) {
                g[i] += self.grad[i] * mask[i];
            }
        }
    });
}

Var conv2d(const Var& x, const Var& weight, const Var& bias, const ConvSpec& spec)
{
    require_rank(x, 3, "conv2d");
    require_rank(weight, 4, "conv2d weight");
    const std::size_t C = x.shape()[0], H = x.shape()[1], W = x.shape()[2];
    const std::size_t O = weight.shape()[0];
    const std::size_t G = spec.groups;
    const std::size_t kh = spec.kernel_h, kw = spec.kernel_w;
    if (G == 0 || C % G != 0 || O % G != 0 || weight.shape()[1] != C / G || weight.shape()[2] != kh ||
        weight.shape()[3] != kw) {
        throw ShapeError(fmt::format("conv2d: input {} weight {} groups {}", shape_str(x.shape()),
                                     shape_str(weight.shape()), G));
    }
    if (H + 2 * spec.pad_h < kh || W + 2 * spec.pad_w < kw || spec.stride_h == 0 || spec.stride_w == 0) {
        throw ShapeError(fmt::format("conv2d: kernel {}x{} does not fit {}", kh, kw, shape_str(x.shape())));
    }
    if (bias.defined() && bias.size() != O) {
        throw ShapeError("conv2d: bias size mismatch");
    }
    const std::size_t Ho = (H + 2 * spec.pad_h - kh) / spec.stride_h + 1;
    const std::size_t Wo = (W + 2 * spec.pad_w - kw) / spec.stride_w + 1;
    const std::size_t P = Ho * Wo;
    const std::size_t Cg = C / G, Og = O / G, K = Cg * kh * kw;

    auto cols = std::make_shared<std::vector<double>>(C * kh * kw * P, 0.0);
    const auto& xv = x.value().data;
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t i = 0; i < kh; ++i) {
            for (std::size_t j = 0; j < kw; ++j) {
                double* row = cols->data() + ((c * kh + i) * kw + j) * P;
                for (std::size_t oy = 0; oy < Ho; ++oy) {
                    const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * spec.stride_h + i) -
                                              static_cast<std::ptrdiff_t>(spec.pad_h);
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) {
                        continue;
                    }
                    for (std::size_t ox = 0; ox < Wo; ++ox) {
                        const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * spec.stride_w + j) -
                                                  static_cast<std::ptrdiff_t>(spec.pad_w);
                        if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(W)) {
                            row[oy * Wo + ox] = xv[(c * H + static_cast<std::size_t>(iy)) * W + static_cast<std::size_t>(ix)];
                        }
                    }
                }
            }
        }
    }

    Tensor out({O, Ho, Wo});
    for (std::size_t g = 0; g < G; ++g) {
        mmap(out.data.data() + g * Og * P, Og, P).noalias() =
            cmap(weight.value().data.data() + g * Og * K, Og, K) * cmap(cols->data() + g * K * P, K, P);
    }
    if (bias.defined()) {
        for (std::size_t o = 0; o < O; ++o) {
            const double b = bias.value().data[o];
            for (std::size_t p = 0; p < P; ++p) {
                out.data[o * P + p] += b;
            }
        }
    }

    std::vector<Var> parents{x, weight};
    if (bias.defined()) {
        parents.push_back(bias);
    }
    return make_result(std::move(out), parents, [=](Node& self) {
        if (Node* pw = wants_grad(self, 1)) {
            auto& gw = pw->ensure_grad();
            for (std::size_t g = 0; g < G; ++g) {
                mmap(gw.data() + g * Og * K, Og, K).noalias() +=
                    cmap(self.grad.data() + g * Og * P, Og, P) * cmap(cols->data() + g * K * P, K, P).transpose();
            }
        }
        if (self.parents.size() > 2) {
            if (Node* pb = wants_grad(self, 2)) {
                auto& gb = pb->ensure_grad();
                for (std::size_t o = 0; o < O; ++o) {
                    for (std::size_t p = 0; p < P; ++p) {
                        gb[o] += self.grad[o * P + p];
                    }
                }
            }
        }
        if (Node* px = wants_grad(self, 0)) {
            std::vector<double> dcols(C * kh * kw * P);
            const auto& wv = self.parents[1]->value.data;
            for (std::size_t g = 0; g < G; ++g) {
                mmap(dcols.data() + g * K * P, K, P).noalias() =
                    cmap(wv.data() + g * Og * K, Og, K).transpose() * cmap(self.grad.data() + g * Og * P, Og, P);
            }
            auto& gx = px->ensure_grad();
            for (std::size_t c = 0; c < C; ++c) {
                for (std::size_t i = 0; i < kh; ++i) {
                    for (std::size_t j = 0; j < kw; ++j) {
                        const double* row = dcols.data() + ((c * kh + i) * kw + j) * P;
                        for (std::size_t oy = 0; oy < Ho; ++oy) {
                            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * spec.stride_h + i) -
                                                      static_cast<std::ptrdiff_t>(spec.pad_h);
                            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) {
                                continue;
                            }
                            for (std::size_t ox = 0; ox < Wo; ++ox) {
                                const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * spec.stride_w + j) -
                                                          static_cast<std::ptrdiff_t>(spec.pad_w);
                                if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(W)) {
                                    gx[(c * H + static_cast<std::size_t>(iy)) * W + static_cast<std::size_t>(ix)] +=
                                        row[oy * Wo + ox];
                                }
                            }
                        }
                    }
                }
            }
        }
    });
}

Var conv1d(const Var& x, const Var& weight, const Var& bias, std::size_t kernel, std::size_t padding,
           std::size_t groups)
{
    require_rank(x, 2, "conv1d");
    require_rank(weight, 3, "conv1d weight");
    const Shape& xs = x.shape();
    const Shape& ws = weight.shape();
    ConvSpec spec;
    spec.kernel_h = 1;
    spec.kernel_w = kernel;
    spec.pad_w = padding;
    spec.groups = groups;
    Var out = conv2d(reshape(x, {xs[0], 1, xs[1]}), reshape(weight, {ws[0], ws[1], 1, ws[2]}), bias, spec);
    return reshape(out, {out.shape()[0], out.shape()[2]});
}

Var max_pool2d(const Var& x, std::size_t kernel_h, std::size_t kernel_w, std::size_t stride_h, std::size_t stride_w)
{
    require_rank(x, 3, "max_pool2d");
    const std::size_t C = x.shape()[0], H = x.shape()[1], W = x.shape()[2];
    if (H < kernel_h || W < kernel_w || stride_h == 0 || stride_w == 0) {
        throw ShapeError(fmt::format("max_pool2d: kernel {}x{} does not fit {}", kernel_h, kernel_w, shape_str(x.shape())));
    }
    const std::size_t Ho = (H - kernel_h) / stride_h + 1;
    const std::size_t Wo = (W - kernel_w) / stride_w + 1;
    Tensor out({C, Ho, Wo});
    std::vector<std::size_t> argmax(C * Ho * Wo);
    const auto& xv = x.value().data;
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t oy = 0; oy < Ho; ++oy) {
            for (std::size_t ox = 0; ox < Wo; ++ox) {
                std::size_t best = (c * H + oy * stride_h) * W + ox * stride_w;
                for (std::size_t i = 0; i < kernel_h; ++i) {
                    for (std::size_t j = 0; j < kernel_w; ++j) {
                        const std::size_t idx = (c * H + oy * stride_h + i) * W + ox * stride_w + j;
                        if (xv[idx] > xv[best]) {
                            best = idx;
                        }
                    }
                }
                const std::size_t o = (c * Ho + oy) * Wo + ox;
                argmax[o] = best;
                out.data[o] = xv[best];
            }
        }
    }
    return make_result(std::move(out), {x}, [argmax = std::move(argmax)](Node& self) {
        if (Node* px = wants_grad(self, 0)) {
            auto& g = px->ensure_grad();
            for (std::size_t o = 0; o < argmax.size(); ++o) {
                g[argmax[o]] += self.grad[o];
            }
        }
    });
}

Var max_pool1d(const Var& x, std::size_t kernel, std::size_t stride)
{
    require_rank(x, 2, "max_pool1d");
    const std::size_t C = x.shape()[0], L = x.shape()[1];
    Var out = max_pool2d(reshape(x, {C, 1, L}), 1, kernel, 1, stride);
    return reshape(out, {C, out.shape()[2]});
}

Var resample_spatial(const Var& x, const Tensor& rows, const Tensor& cols)
{
    require_rank(x, 3, "resample_spatial");
    const std::size_t C = x.shape()[0], H = x.shape()[1], W = x.shape()[2];
    if (rows.rank() != 2 || cols.rank() != 2 || rows.shape[1] != H || cols.shape[1] != W) {
        throw ShapeError(fmt::format("resample_spatial: {} with rows {} cols {}", shape_str(x.shape()),
                                     shape_str(rows.shape), shape_str(cols.shape)));
    }
    const std::size_t h = rows.shape[0], w = cols.shape[0];
    Tensor out({C, h, w});
    auto R = std::make_shared<Tensor>(rows);
    auto Q = std::make_shared<Tensor>(cols);
    for (std::size_t c = 0; c < C; ++c) {
        mmap(out.data.data() + c * h * w, h, w).noalias() =
            cmap(R->data.data(), h, H) * cmap(x.value().data.data() + c * H * W, H, W) * cmap(Q->data.data(), w, W).transpose();
    }
    return make_result(std::move(out), {x}, [=](Node& self) {
        if (Node* px = wants_grad(self, 0)) {
            auto& g = px->ensure_grad();
            for (std::size_t c = 0; c < C; ++c) {
                mmap(g.data() + c * H * W, H, W).noalias() +=
                    cmap(R->data.data(), h, H).transpose() * cmap(self.grad.data() + c * h * w, h, w) * cmap(Q->data.data(), w, W);
            }
        }
    });
}

Var mean_spatial(const Var& x)
{
    require_rank(x, 3, "mean_spatial");
    const std::size_t C = x.shape()[0], P = x.shape()[1] * x.shape()[2];
    Tensor out({1, C});
    for (std::size_t c = 0; c < C; ++c) {
        double s = 0.0;
        for (std::size_t p = 0; p < P; ++p) {
            s += x.value().data[c * P + p];
        }
        out.data[c] = s / static_cast<double>(P);
    }
    return make_result(std::move(out), {x}, [C, P](Node& self) {
        if (Node* px = wants_grad(self, 0)) {
            auto& g = px->ensure_grad();
            for (std::size_t c = 0; c < C; ++c) {
                const double d = self.grad[c] / static_cast<double>(P);
                for (std::size_t p = 0; p < P; ++p) {
                    g[c * P + p] += d;
                }
            }
        }
    });
}

Var scale_channels(const Var& x, const Var& f)
{
    require_rank(x, 3, "scale_channels");
    const std::size_t C = x.shape()[0], P = x.shape()[1] * x.shape()[2];
    if (f.size() != C) {
        throw ShapeError(fmt::format("scale_channels: {} filters for {} channels", f.size(), C));
    }
    Tensor out = x.value();
    for (std::size_t c = 0; c < C; ++c) {
        const double s = f.value().data[c];
        for (std::size_t p = 0; p < P; ++p) {
            out.data[c * P + p] *= s;
        }
    }
    return make_result(std::move(out), {x, f}, [C, P](Node& self) {
        const auto& xv = self.parents[0]->value.data;
        const auto& fv = self.parents[1]->value.data;
        if (Node* px = wants_grad(self, 0)) {
            auto& g = px->ensure_grad();
            for (std::size_t c = 0; c < C; ++c) {
                for (std::size_t p = 0; p < P; ++p) {
                    g[c * P + p] += self.grad[c * P + p] * fv[c];
                }
            }
        }
        if (Node* pf = wants_grad(self, 1)) {
            auto& g = pf->ensure_grad();
            for (std::size_t c = 0; c < C; ++c) {
                double s = 0.0;
                for (std::size_t p = 0; p < P; ++p) {
                    s += self.grad[c * P + p] * xv[c * P + p];
                }
                g[c] += s;
            }
        }
    });
}

Var sum(const Var& a)
{
    double s = 0.0;
    for (double v : a.value().data) {
        s += v;
    }
    return make_result(Tensor::scalar(s), {a}, [](Node& self) {
        if (Node* pa = wants_grad(self, 0)) {
            auto& g = pa->ensure_grad();
            for (double& v : g) {
                v += self.grad[0];
            }
        }
    });
}

Var bce(const Var& probability, double label, double clamp)
{
    if (probability.size() != 1) {
        throw ShapeError("bce: expects a single probability");
    }
    // The derivative is taken at the clamped value so saturated wrong
    // predictions still receive a gradient.
    const double p = std::clamp(probability.value().data[0], clamp, 1.0 - clamp);
    const double loss = -(label * std::log(p) + (1.0 - label) * std::log(1.0 - p));
    const double dp = -label / p + (1.0 - label) / (1.0 - p);
    return make_result(Tensor::scalar(loss), {probability}, [dp](Node& self) {
        if (Node* pp = wants_grad(self, 0)) {
            pp->ensure_grad()[0] += self.grad[0] * dp;
        }
    });
}

Tensor adaptive_pool_matrix(std::size_t in, std::size_t out)
{
    if (out == 0 || out > in) {
        throw ValidationError(fmt::format("adaptive pooling from {} to {} is undefined", in, out));
    }
    Tensor m({out, in});
    for (std::size_t i = 0; i < out; ++i) {
        const std::size_t start = (i * in) / out;
        const std::size_t end = ((i + 1) * in + out - 1) / out;
        for (std::size_t j = start; j < end; ++j) {
            m.at(i, j) = 1.0 / static_cast<double>(end - start);
        }
    }
    return m;
}

Tensor bilinear_matrix(std::size_t in, std::size_t out)
{
    Tensor m({out, in});
    for (std::size_t i = 0; i < out; ++i) {
        if (in == 1) {
            m.at(i, 0) = 1.0;
            continue;
        }
        const double pos = out == 1 ? 0.0 : static_cast<double>(i) * static_cast<double>(in - 1) / static_cast<double>(out - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, in - 1);
        const double frac = pos - static_cast<double>(lo);
        m.at(i, lo) += 1.0 - frac;
        m.at(i, hi) += frac;
    }
    return m;
}

}  // namespace siamct::ops
