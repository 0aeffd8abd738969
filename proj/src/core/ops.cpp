#include "core/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "core/blas.hpp"
#include "core/errors.hpp"

namespace topdown {
namespace ops {

namespace {

constexpr float kSquashGuard = 1e-24f;  // keeps squash(0) == 0 without a branch

// ---------------------------------------------------------------------------
// Broadcast / reduction index tables.
//
// For a full shape S and a set of "expanded" axes R, enumerate offsets of the
// kept subspace (axes not in R, iterated row-major) and of the expanded
// subspace. Every element of S factors as kept[j] + red[i].
// ---------------------------------------------------------------------------
struct AxisTables {
  std::vector<int64_t> kept;
  std::vector<int64_t> red;
};

std::vector<int64_t> shape_strides(const Shape& s) {
  std::vector<int64_t> st(s.size(), 1);
  for (int i = static_cast<int>(s.size()) - 2; i >= 0; --i)
    st[i] = st[i + 1] * s[i + 1];
  return st;
}

std::vector<int64_t> subspace_offsets(const Shape& dims, const std::vector<int64_t>& strides) {
  int64_t count = 1;
  for (int64_t d : dims) count *= d;
  std::vector<int64_t> offs(static_cast<size_t>(count));
  std::vector<int64_t> idx(dims.size(), 0);
  for (int64_t j = 0; j < count; ++j) {
    int64_t off = 0;
    for (size_t k = 0; k < dims.size(); ++k) off += idx[k] * strides[k];
    offs[static_cast<size_t>(j)] = off;
    for (int k = static_cast<int>(dims.size()) - 1; k >= 0; --k) {
      if (++idx[k] < dims[k]) break;
      idx[k] = 0;
    }
  }
  return offs;
}

AxisTables make_axis_tables(const Shape& shape, const std::vector<int>& axes) {
  std::vector<bool> reduced(shape.size(), false);
  for (int a : axes) {
    check_shape(a >= 0 && a < static_cast<int>(shape.size()), "axis out of range");
    reduced[static_cast<size_t>(a)] = true;
  }
  auto strides = shape_strides(shape);
  Shape kept_dims, red_dims;
  std::vector<int64_t> kept_strides, red_strides;
  for (size_t i = 0; i < shape.size(); ++i) {
    if (reduced[i]) {
      red_dims.push_back(shape[i]);
      red_strides.push_back(strides[i]);
    } else {
      kept_dims.push_back(shape[i]);
      kept_strides.push_back(strides[i]);
    }
  }
  AxisTables t;
  t.kept = subspace_offsets(kept_dims, kept_strides);
  t.red = subspace_offsets(red_dims, red_strides);
  return t;
}

Shape normalize_binary_shapes(const Shape& a, const Shape& b) {
  size_t nd = std::max(a.size(), b.size());
  Shape out(nd, 1);
  for (size_t i = 0; i < nd; ++i) {
    int64_t da = i < nd - a.size() ? 1 : a[i - (nd - a.size())];
    int64_t db = i < nd - b.size() ? 1 : b[i - (nd - b.size())];
    check_shape(da == db || da == 1 || db == 1,
                "broadcast mismatch: " + shape_to_string(a) + " vs " + shape_to_string(b));
    out[i] = std::max(da, db);
  }
  return out;
}

using EwFn = float (*)(float, float);

Var broadcast_if_needed(const Var& v, const Shape& target) {
  if (v->value.shape() == target) return v;
  return broadcast_to(v, target);
}

}  // namespace

// ---------------------------------------------------------------------------
// Elementwise
// ---------------------------------------------------------------------------

namespace {

template <typename ValueFn>
Var ew_binary(const Var& a, const Var& b, ValueFn fn, BackwardFn backward) {
  Shape target = normalize_binary_shapes(a->value.shape(), b->value.shape());
  Var a2 = broadcast_if_needed(a, target);
  Var b2 = broadcast_if_needed(b, target);
  Tensor out(target);
  const float* pa = a2->value.data();
  const float* pb = b2->value.data();
  float* po = out.data();
  for (int64_t i = 0; i < out.size(); ++i) po[i] = fn(pa[i], pb[i]);
  return make_op_node(std::move(out), {a2, b2}, std::move(backward));
}

template <typename ValueFn>
Var ew_unary(const Var& a, ValueFn fn, BackwardFn backward) {
  Tensor out(a->value.shape());
  const float* pa = a->value.data();
  float* po = out.data();
  for (int64_t i = 0; i < out.size(); ++i) po[i] = fn(pa[i]);
  return make_op_node(std::move(out), {a}, std::move(backward));
}

}  // namespace

Var add(const Var& a, const Var& b) {
  return ew_binary(
      a, b, [](float x, float y) { return x + y; },
      [](const Var& g, const std::vector<Var>&) -> std::vector<Var> {
        return {g, g};
      });
}

Var sub(const Var& a, const Var& b) {
  return ew_binary(
      a, b, [](float x, float y) { return x - y; },
      [](const Var& g, const std::vector<Var>&) -> std::vector<Var> {
        return {g, neg(g)};
      });
}

Var mul(const Var& a, const Var& b) {
  return ew_binary(
      a, b, [](float x, float y) { return x * y; },
      [](const Var& g, const std::vector<Var>& ps) -> std::vector<Var> {
        return {mul(g, ps[1]), mul(g, ps[0])};
      });
}

Var divide(const Var& a, const Var& b) {
  return ew_binary(
      a, b, [](float x, float y) { return x / y; },
      [](const Var& g, const std::vector<Var>& ps) -> std::vector<Var> {
        Var ga = divide(g, ps[1]);
        Var gb = neg(divide(mul(g, ps[0]), mul(ps[1], ps[1])));
        return {ga, gb};
      });
}

Var neg(const Var& a) {
  return ew_unary(
      a, [](float x) { return -x; },
      [](const Var& g, const std::vector<Var>&) -> std::vector<Var> {
        return {neg(g)};
      });
}

Var add_scalar(const Var& a, float s) {
  return ew_unary(
      a, [s](float x) { return x + s; },
      [](const Var& g, const std::vector<Var>&) -> std::vector<Var> {
        return {g};
      });
}

Var mul_scalar(const Var& a, float s) {
  return ew_unary(
      a, [s](float x) { return x * s; },
      [s](const Var& g, const std::vector<Var>&) -> std::vector<Var> {
        return {mul_scalar(g, s)};
      });
}

Var pow_scalar(const Var& a, float p) {
  return ew_unary(
      a, [p](float x) { return std::pow(x, p); },
      [p](const Var& g, const std::vector<Var>& ps) -> std::vector<Var> {
        return {mul(g, mul_scalar(pow_scalar(ps[0], p - 1.0f), p))};
      });
}

Var exp(const Var& a) {
  return ew_unary(
      a, [](float x) { return std::exp(x); },
      [](const Var& g, const std::vector<Var>& ps) -> std::vector<Var> {
        return {mul(g, exp(ps[0]))};
      });
}

Var leaky_relu(const Var& a, float slope) {
  return ew_unary(
      a, [slope](float x) { return x >= 0.0f ? x : slope * x; },
      [slope](const Var& g, const std::vector<Var>& ps) -> std::vector<Var> {
        // Mask is piecewise constant in x; treated as a constant, which is
        // the a.e.-correct second derivative as well.
        Tensor mask(ps[0]->value.shape());
        const float* px = ps[0]->value.data();
        float* pm = mask.data();
        for (int64_t i = 0; i < mask.size(); ++i) pm[i] = px[i] >= 0.0f ? 1.0f : slope;
        return {mul(g, make_const(std::move(mask)))};
      });
}

// ---------------------------------------------------------------------------
// Shape ops
// ---------------------------------------------------------------------------

Var reshape(const Var& a, Shape shape) {
  Shape orig = a->value.shape();
  Tensor out = a->value.reshaped(std::move(shape));
  return make_op_node(std::move(out), {a},
                      [orig](const Var& g, const std::vector<Var>&) -> std::vector<Var> {
                        return {reshape(g, orig)};
                      });
}

Var broadcast_to(const Var& a, Shape shape) {
  const Shape& src = a->value.shape();
  size_t nd = shape.size();
  check_shape(src.size() <= nd, "broadcast_to: cannot drop dims");
  std::vector<int> expand_axes;
  for (size_t i = 0; i < nd; ++i) {
    int64_t ds = i < nd - src.size() ? 1 : src[i - (nd - src.size())];
    check_shape(ds == shape[i] || ds == 1, "broadcast_to: incompatible shapes");
    if (ds == 1 && shape[i] != 1) expand_axes.push_back(static_cast<int>(i));
  }
  auto tables = make_axis_tables(shape, expand_axes);
  check_shape(static_cast<int64_t>(tables.kept.size()) == a->value.size(),
              "broadcast_to: internal table mismatch");
  Tensor out(shape);
  const float* ps = a->value.data();
  float* po = out.data();
  for (size_t i = 0; i < tables.red.size(); ++i) {
    int64_t roff = tables.red[i];
    for (size_t j = 0; j < tables.kept.size(); ++j) po[tables.kept[j] + roff] = ps[j];
  }
  Shape src_shape = src;
  return make_op_node(
      std::move(out), {a},
      [expand_axes, src_shape](const Var& g, const std::vector<Var>&) -> std::vector<Var> {
        Var r = reduce_sum(g, expand_axes, /*keepdims=*/true);
        return {reshape(r, src_shape)};
      });
}

Var reduce_sum(const Var& a, std::vector<int> axes, bool keepdims) {
  const Shape& s = a->value.shape();
  std::sort(axes.begin(), axes.end());
  auto tables = make_axis_tables(s, axes);
  Shape out_shape;
  std::vector<bool> reduced(s.size(), false);
  for (int ax : axes) reduced[static_cast<size_t>(ax)] = true;
  for (size_t i = 0; i < s.size(); ++i) {
    if (!reduced[i])
      out_shape.push_back(s[i]);
    else if (keepdims)
      out_shape.push_back(1);
  }
  if (out_shape.empty()) out_shape.push_back(1);
  Tensor out(out_shape);
  const float* ps = a->value.data();
  float* po = out.data();
  for (size_t i = 0; i < tables.red.size(); ++i) {
    int64_t roff = tables.red[i];
    for (size_t j = 0; j < tables.kept.size(); ++j) po[j] += ps[tables.kept[j] + roff];
  }
  Shape in_shape = s;
  Shape kd_shape(s.size());
  for (size_t i = 0; i < s.size(); ++i) kd_shape[i] = reduced[i] ? 1 : s[i];
  return make_op_node(
      std::move(out), {a},
      [in_shape, kd_shape](const Var& g, const std::vector<Var>&) -> std::vector<Var> {
        return {broadcast_to(reshape(g, kd_shape), in_shape)};
      });
}

Var reduce_mean(const Var& a, std::vector<int> axes, bool keepdims) {
  int64_t count = 1;
  for (int ax : axes) count *= a->value.shape()[static_cast<size_t>(ax)];
  return mul_scalar(reduce_sum(a, std::move(axes), keepdims), 1.0f / static_cast<float>(count));
}

namespace {

// Embeds g into a zero tensor along `axis` at `start`; adjoint of slice.
Var unslice(const Var& g, int axis, int64_t start, int64_t orig_dim);

void slice_copy(const float* src, const Shape& s, int axis, int64_t start, int64_t len,
                float* dst, bool into_slice) {
  auto strides = shape_strides(s);
  int64_t outer = 1;
  for (int i = 0; i < axis; ++i) outer *= s[static_cast<size_t>(i)];
  int64_t inner = strides[static_cast<size_t>(axis)];
  int64_t dim = s[static_cast<size_t>(axis)];
  for (int64_t o = 0; o < outer; ++o) {
    const int64_t src_base = o * dim * inner;
    const int64_t dst_base = o * len * inner;
    for (int64_t k = 0; k < len; ++k) {
      const float* sp;
      float* dp;
      if (!into_slice) {
        sp = src + src_base + (start + k) * inner;
        dp = dst + dst_base + k * inner;
      } else {
        sp = src + dst_base + k * inner;
        dp = dst + src_base + (start + k) * inner;
      }
      std::copy(sp, sp + inner, dp);
    }
  }
}

}  // namespace

Var slice(const Var& a, int axis, int64_t start, int64_t len) {
  const Shape& s = a->value.shape();
  check_shape(axis >= 0 && axis < static_cast<int>(s.size()), "slice: bad axis");
  check_shape(start >= 0 && len >= 0 && start + len <= s[static_cast<size_t>(axis)],
              "slice: out of range");
  Shape out_shape = s;
  out_shape[static_cast<size_t>(axis)] = len;
  Tensor out(out_shape);
  slice_copy(a->value.data(), s, axis, start, len, out.data(), /*into_slice=*/false);
  int64_t orig = s[static_cast<size_t>(axis)];
  return make_op_node(std::move(out), {a},
                      [axis, start, orig](const Var& g, const std::vector<Var>&) -> std::vector<Var> {
                        return {unslice(g, axis, start, orig)};
                      });
}

namespace {

Var unslice(const Var& g, int axis, int64_t start, int64_t orig_dim) {
  const Shape& s = g->value.shape();
  Shape out_shape = s;
  out_shape[static_cast<size_t>(axis)] = orig_dim;
  Tensor out(out_shape);
  slice_copy(g->value.data(), out_shape, axis, start, s[static_cast<size_t>(axis)], out.data(),
             /*into_slice=*/true);
  int64_t len = s[static_cast<size_t>(axis)];
  return make_op_node(std::move(out), {g},
                      [axis, start, len](const Var& gg, const std::vector<Var>&) -> std::vector<Var> {
                        return {slice(gg, axis, start, len)};
                      });
}

}  // namespace

Var concat(const std::vector<Var>& parts, int axis) {
  check_shape(!parts.empty(), "concat: empty");
  const Shape& s0 = parts[0]->value.shape();
  Shape out_shape = s0;
  int64_t total = 0;
  for (const auto& p : parts) {
    const Shape& s = p->value.shape();
    check_shape(s.size() == s0.size(), "concat: rank mismatch");
    for (size_t i = 0; i < s.size(); ++i)
      check_shape(static_cast<int>(i) == axis || s[i] == s0[i], "concat: dim mismatch");
    total += s[static_cast<size_t>(axis)];
  }
  out_shape[static_cast<size_t>(axis)] = total;
  Tensor out(out_shape);
  std::vector<int64_t> starts;
  int64_t at = 0;
  for (const auto& p : parts) {
    starts.push_back(at);
    int64_t len = p->value.shape()[static_cast<size_t>(axis)];
    slice_copy(p->value.data(), out_shape, axis, at, len, out.data(), /*into_slice=*/true);
    at += len;
  }
  std::vector<int64_t> lens;
  for (const auto& p : parts) lens.push_back(p->value.shape()[static_cast<size_t>(axis)]);
  return make_op_node(std::move(out), parts,
                      [axis, starts, lens](const Var& g, const std::vector<Var>& ps) -> std::vector<Var> {
                        std::vector<Var> out_grads;
                        for (size_t i = 0; i < ps.size(); ++i)
                          out_grads.push_back(slice(g, axis, starts[i], lens[i]));
                        return out_grads;
                      });
}

Var permute(const Var& a, std::vector<int> order) {
  const Shape& s = a->value.shape();
  check_shape(order.size() == s.size(), "permute: order size mismatch");
  Shape out_shape(s.size());
  for (size_t i = 0; i < order.size(); ++i) out_shape[i] = s[static_cast<size_t>(order[i])];
  auto in_strides = shape_strides(s);
  auto out_strides = shape_strides(out_shape);
  Tensor out(out_shape);
  const float* ps = a->value.data();
  float* po = out.data();
  int64_t n = out.size();
  size_t nd = s.size();
  std::vector<int64_t> idx(nd, 0);
  for (int64_t lin = 0; lin < n; ++lin) {
    int64_t src_off = 0;
    for (size_t k = 0; k < nd; ++k) src_off += idx[k] * in_strides[static_cast<size_t>(order[k])];
    po[lin] = ps[src_off];
    for (int k = static_cast<int>(nd) - 1; k >= 0; --k) {
      if (++idx[static_cast<size_t>(k)] < out_shape[static_cast<size_t>(k)]) break;
      idx[static_cast<size_t>(k)] = 0;
    }
  }
  std::vector<int> inverse(order.size());
  for (size_t i = 0; i < order.size(); ++i) inverse[static_cast<size_t>(order[i])] = static_cast<int>(i);
  return make_op_node(std::move(out), {a},
                      [inverse](const Var& g, const std::vector<Var>&) -> std::vector<Var> {
                        return {permute(g, inverse)};
                      });
}

// ---------------------------------------------------------------------------
// Matmul
// ---------------------------------------------------------------------------

Var matmul(const Var& a, const Var& b) {
  const Shape& sa = a->value.shape();
  const Shape& sb = b->value.shape();
  check_shape(sa.size() == 2 && sb.size() == 2 && sa[1] == sb[0],
              "matmul: " + shape_to_string(sa) + " x " + shape_to_string(sb));
  int64_t m = sa[0], k = sa[1], n = sb[1];
  Tensor out({m, n});
  sgemm(false, false, m, n, k, 1.0f, a->value.data(), k, b->value.data(), n, 0.0f, out.data(), n);
  return make_op_node(std::move(out), {a, b},
                      [](const Var& g, const std::vector<Var>& ps) -> std::vector<Var> {
                        return {matmul(g, transpose2d(ps[1])), matmul(transpose2d(ps[0]), g)};
                      });
}

Var transpose2d(const Var& a) {
  check_shape(a->value.ndim() == 2, "transpose2d: rank != 2");
  return permute(a, {1, 0});
}

Var transpose_last2(const Var& a) {
  int nd = a->value.ndim();
  check_shape(nd >= 2, "transpose_last2: rank < 2");
  std::vector<int> order(static_cast<size_t>(nd));
  for (int i = 0; i < nd; ++i) order[static_cast<size_t>(i)] = i;
  std::swap(order[static_cast<size_t>(nd - 2)], order[static_cast<size_t>(nd - 1)]);
  return permute(a, order);
}

Var batched_matmul(const Var& a, const Var& b) {
  const Shape& sa = a->value.shape();
  const Shape& sb = b->value.shape();
  check_shape(sa.size() == sb.size() && sa.size() >= 3, "batched_matmul: rank mismatch");
  size_t nd = sa.size();
  int64_t batch = 1;
  for (size_t i = 0; i + 2 < nd; ++i) {
    check_shape(sa[i] == sb[i], "batched_matmul: batch dims differ");
    batch *= sa[i];
  }
  int64_t m = sa[nd - 2], k = sa[nd - 1], k2 = sb[nd - 2], n = sb[nd - 1];
  check_shape(k == k2, "batched_matmul: inner dims differ");
  Shape out_shape(sa.begin(), sa.end() - 2);
  out_shape.push_back(m);
  out_shape.push_back(n);
  Tensor out(out_shape);
  const float* pa = a->value.data();
  const float* pb = b->value.data();
  float* po = out.data();
  for (int64_t i = 0; i < batch; ++i) {
    sgemm(false, false, m, n, k, 1.0f, pa + i * m * k, k, pb + i * k * n, n, 0.0f,
          po + i * m * n, n);
  }
  return make_op_node(std::move(out), {a, b},
                      [](const Var& g, const std::vector<Var>& ps) -> std::vector<Var> {
                        return {batched_matmul(g, transpose_last2(ps[1])),
                                batched_matmul(transpose_last2(ps[0]), g)};
                      });
}

// ---------------------------------------------------------------------------
// Convolutions
// ---------------------------------------------------------------------------

namespace {

int64_t conv_out_dim(int64_t in, int64_t k, int64_t stride, int64_t pad_lo, int64_t pad_hi) {
  int64_t span = in + pad_lo + pad_hi - k;
  check_shape(span >= 0 && stride >= 1, "conv: kernel larger than padded input");
  return span / stride + 1;
}

void im2col(const float* data, int64_t C, int64_t H, int64_t W, int64_t kh, int64_t kw,
            const Conv2dSpec& sp, int64_t OH, int64_t OW, float* col) {
  int64_t idx = 0;
  for (int64_t c = 0; c < C; ++c) {
    const float* plane = data + c * H * W;
    for (int64_t ki = 0; ki < kh; ++ki) {
      for (int64_t kj = 0; kj < kw; ++kj) {
        for (int64_t oh = 0; oh < OH; ++oh) {
          int64_t ih = oh * sp.stride_h - sp.pad_h + ki;
          if (ih < 0 || ih >= H) {
            std::fill(col + idx, col + idx + OW, 0.0f);
            idx += OW;
            continue;
          }
          const float* row = plane + ih * W;
          for (int64_t ow = 0; ow < OW; ++ow) {
            int64_t iw = ow * sp.stride_w - sp.pad_w + kj;
            col[idx++] = (iw >= 0 && iw < W) ? row[iw] : 0.0f;
          }
        }
      }
    }
  }
}

void col2im(const float* col, int64_t C, int64_t H, int64_t W, int64_t kh, int64_t kw,
            const Conv2dSpec& sp, int64_t OH, int64_t OW, float* data) {
  int64_t idx = 0;
  for (int64_t c = 0; c < C; ++c) {
    float* plane = data + c * H * W;
    for (int64_t ki = 0; ki < kh; ++ki) {
      for (int64_t kj = 0; kj < kw; ++kj) {
        for (int64_t oh = 0; oh < OH; ++oh) {
          int64_t ih = oh * sp.stride_h - sp.pad_h + ki;
          if (ih < 0 || ih >= H) {
            idx += OW;
            continue;
          }
          float* row = plane + ih * W;
          for (int64_t ow = 0; ow < OW; ++ow) {
            int64_t iw = ow * sp.stride_w - sp.pad_w + kj;
            if (iw >= 0 && iw < W) row[iw] += col[idx];
            ++idx;
          }
        }
      }
    }
  }
}

}  // namespace

Var conv2d(const Var& x, const Var& w, const Conv2dSpec& spec) {
  const Shape& xs = x->value.shape();
  const Shape& ws = w->value.shape();
  check_shape(xs.size() == 4 && ws.size() == 4, "conv2d: expects NCHW x OCkhkw");
  check_shape(xs[1] == ws[1], "conv2d: channel mismatch " + shape_to_string(xs) + " vs " +
                                  shape_to_string(ws));
  int64_t N = xs[0], C = xs[1], H = xs[2], W = xs[3];
  int64_t O = ws[0], kh = ws[2], kw = ws[3];
  int64_t OH = conv_out_dim(H, kh, spec.stride_h, spec.pad_h, spec.pad_h);
  int64_t OW = conv_out_dim(W, kw, spec.stride_w, spec.pad_w, spec.pad_w);
  int64_t K = C * kh * kw, P = OH * OW;
  Tensor out({N, O, OH, OW});
  std::vector<float> col(static_cast<size_t>(K * P));
  for (int64_t n = 0; n < N; ++n) {
    im2col(x->value.data() + n * C * H * W, C, H, W, kh, kw, spec, OH, OW, col.data());
    sgemm(false, false, O, P, K, 1.0f, w->value.data(), K, col.data(), P, 0.0f,
          out.data() + n * O * P, P);
  }
  Shape x_shape = xs, w_shape = ws;
  Conv2dSpec sp = spec;
  return make_op_node(std::move(out), {x, w},
                      [sp, x_shape, w_shape](const Var& g, const std::vector<Var>& ps) -> std::vector<Var> {
                        return {conv2d_data_grad(g, ps[1], x_shape, sp),
                                conv2d_weight_grad(g, ps[0], w_shape, sp)};
                      });
}

Var conv2d_data_grad(const Var& gy, const Var& w, Shape x_shape, const Conv2dSpec& spec) {
  const Shape& gs = gy->value.shape();
  const Shape& ws = w->value.shape();
  int64_t N = x_shape[0], C = x_shape[1], H = x_shape[2], W = x_shape[3];
  int64_t O = ws[0], kh = ws[2], kw = ws[3];
  int64_t OH = gs[2], OW = gs[3];
  check_shape(gs[0] == N && gs[1] == O, "conv2d_data_grad: shape mismatch");
  int64_t K = C * kh * kw, P = OH * OW;
  Tensor out(x_shape);
  std::vector<float> colg(static_cast<size_t>(K * P));
  for (int64_t n = 0; n < N; ++n) {
    // colg = W^T (K,O) * gy_n (O,P)
    sgemm(true, false, K, P, O, 1.0f, w->value.data(), K, gy->value.data() + n * O * P, P, 0.0f,
          colg.data(), P);
    col2im(colg.data(), C, H, W, kh, kw, spec, OH, OW, out.data() + n * C * H * W);
  }
  Conv2dSpec sp = spec;
  Shape xs = std::move(x_shape), wsc = ws;
  return make_op_node(std::move(out), {gy, w},
                      [sp, xs, wsc](const Var& u, const std::vector<Var>& ps) -> std::vector<Var> {
                        return {conv2d(u, ps[1], sp),
                                conv2d_weight_grad(ps[0], u, wsc, sp)};
                      });
}

Var conv2d_weight_grad(const Var& gy, const Var& x, Shape w_shape, const Conv2dSpec& spec) {
  const Shape& gs = gy->value.shape();
  const Shape& xs = x->value.shape();
  int64_t N = xs[0], C = xs[1], H = xs[2], W = xs[3];
  int64_t O = w_shape[0], kh = w_shape[2], kw = w_shape[3];
  int64_t OH = gs[2], OW = gs[3];
  check_shape(gs[0] == N && gs[1] == O && w_shape[1] == C, "conv2d_weight_grad: shape mismatch");
  int64_t K = C * kh * kw, P = OH * OW;
  Tensor out(w_shape);
  std::vector<float> col(static_cast<size_t>(K * P));
  for (int64_t n = 0; n < N; ++n) {
    im2col(x->value.data() + n * C * H * W, C, H, W, kh, kw, spec, OH, OW, col.data());
    // dW (O,K) += gy_n (O,P) * col^T (P,K)
    sgemm(false, true, O, K, P, 1.0f, gy->value.data() + n * O * P, P, col.data(), P, 1.0f,
          out.data(), K);
  }
  Conv2dSpec sp = spec;
  Shape xsc = xs, wsc = std::move(w_shape);
  return make_op_node(std::move(out), {gy, x},
                      [sp, xsc, wsc](const Var& u, const std::vector<Var>& ps) -> std::vector<Var> {
                        return {conv2d(ps[1], u, sp),
                                conv2d_data_grad(ps[0], u, xsc, sp)};
                      });
}

Var unfold2d(const Var& x, int64_t kh, int64_t kw, const Conv2dSpec& spec) {
  const Shape& xs = x->value.shape();
  check_shape(xs.size() == 4, "unfold2d: expects NCHW");
  int64_t N = xs[0], C = xs[1], H = xs[2], W = xs[3];
  int64_t OH = conv_out_dim(H, kh, spec.stride_h, spec.pad_h, spec.pad_h);
  int64_t OW = conv_out_dim(W, kw, spec.stride_w, spec.pad_w, spec.pad_w);
  int64_t K = C * kh * kw, P = OH * OW;
  Tensor out({N, K, P});
  for (int64_t n = 0; n < N; ++n)
    im2col(x->value.data() + n * C * H * W, C, H, W, kh, kw, spec, OH, OW, out.data() + n * K * P);
  Shape x_shape = xs;
  Conv2dSpec sp = spec;
  return make_op_node(
      std::move(out), {x},
      [x_shape, kh, kw, sp](const Var& g, const std::vector<Var>&) -> std::vector<Var> {
        // fold: adjoint scatter-add back to image layout
        int64_t N2 = x_shape[0], C2 = x_shape[1], H2 = x_shape[2], W2 = x_shape[3];
        int64_t OH2 = conv_out_dim(H2, kh, sp.stride_h, sp.pad_h, sp.pad_h);
        int64_t OW2 = conv_out_dim(W2, kw, sp.stride_w, sp.pad_w, sp.pad_w);
        int64_t K2 = C2 * kh * kw;
        Tensor out2(x_shape);
        for (int64_t n = 0; n < N2; ++n)
          col2im(g->value.data() + n * K2 * OH2 * OW2, C2, H2, W2, kh, kw, sp, OH2, OW2,
                 out2.data() + n * C2 * H2 * W2);
        return {make_op_node(std::move(out2), {g},
                             [kh, kw, sp](const Var& gg, const std::vector<Var>&) -> std::vector<Var> {
                               return {unfold2d(gg, kh, kw, sp)};
                             })};
      });
}

namespace {

void vol2col(const float* data, int64_t C, int64_t D, int64_t H, int64_t W, int64_t kd,
             int64_t kh, int64_t kw, const Conv3dSpec& sp, int64_t OD, int64_t OH, int64_t OW,
             float* col) {
  int64_t idx = 0;
  for (int64_t c = 0; c < C; ++c) {
    const float* vol = data + c * D * H * W;
    for (int64_t kz = 0; kz < kd; ++kz)
      for (int64_t ki = 0; ki < kh; ++ki)
        for (int64_t kj = 0; kj < kw; ++kj) {
          for (int64_t od = 0; od < OD; ++od) {
            int64_t id = od * sp.stride_d - sp.pad_d_lo + kz;
            for (int64_t oh = 0; oh < OH; ++oh) {
              int64_t ih = oh * sp.stride_h - sp.pad_h_lo + ki;
              if (id < 0 || id >= D || ih < 0 || ih >= H) {
                std::fill(col + idx, col + idx + OW, 0.0f);
                idx += OW;
                continue;
              }
              const float* row = vol + (id * H + ih) * W;
              for (int64_t ow = 0; ow < OW; ++ow) {
                int64_t iw = ow * sp.stride_w - sp.pad_w_lo + kj;
                col[idx++] = (iw >= 0 && iw < W) ? row[iw] : 0.0f;
              }
            }
          }
        }
  }
}

void col2vol(const float* col, int64_t C, int64_t D, int64_t H, int64_t W, int64_t kd,
             int64_t kh, int64_t kw, const Conv3dSpec& sp, int64_t OD, int64_t OH, int64_t OW,
             float* data) {
  int64_t idx = 0;
  for (int64_t c = 0; c < C; ++c) {
    float* vol = data + c * D * H * W;
    for (int64_t kz = 0; kz < kd; ++kz)
      for (int64_t ki = 0; ki < kh; ++ki)
        for (int64_t kj = 0; kj < kw; ++kj) {
          for (int64_t od = 0; od < OD; ++od) {
            int64_t id = od * sp.stride_d - sp.pad_d_lo + kz;
            for (int64_t oh = 0; oh < OH; ++oh) {
              int64_t ih = oh * sp.stride_h - sp.pad_h_lo + ki;
              if (id < 0 || id >= D || ih < 0 || ih >= H) {
                idx += OW;
                continue;
              }
              float* row = vol + (id * H + ih) * W;
              for (int64_t ow = 0; ow < OW; ++ow) {
                int64_t iw = ow * sp.stride_w - sp.pad_w_lo + kj;
                if (iw >= 0 && iw < W) row[iw] += col[idx];
                ++idx;
              }
            }
          }
        }
  }
}

}  // namespace

Var conv3d(const Var& x, const Var& w, const Conv3dSpec& spec) {
  const Shape& xs = x->value.shape();
  const Shape& ws = w->value.shape();
  check_shape(xs.size() == 5 && ws.size() == 5, "conv3d: expects NCDHW x OCkdkhkw");
  check_shape(xs[1] == ws[1], "conv3d: channel mismatch");
  int64_t N = xs[0], C = xs[1], D = xs[2], H = xs[3], W = xs[4];
  int64_t O = ws[0], kd = ws[2], kh = ws[3], kw = ws[4];
  int64_t OD = conv_out_dim(D, kd, spec.stride_d, spec.pad_d_lo, spec.pad_d_hi);
  int64_t OH = conv_out_dim(H, kh, spec.stride_h, spec.pad_h_lo, spec.pad_h_hi);
  int64_t OW = conv_out_dim(W, kw, spec.stride_w, spec.pad_w_lo, spec.pad_w_hi);
  int64_t K = C * kd * kh * kw, P = OD * OH * OW;
  Tensor out({N, O, OD, OH, OW});
  std::vector<float> col(static_cast<size_t>(K * P));
  for (int64_t n = 0; n < N; ++n) {
    vol2col(x->value.data() + n * C * D * H * W, C, D, H, W, kd, kh, kw, spec, OD, OH, OW,
            col.data());
    sgemm(false, false, O, P, K, 1.0f, w->value.data(), K, col.data(), P, 0.0f,
          out.data() + n * O * P, P);
  }
  Shape x_shape = xs, w_shape = ws;
  Conv3dSpec sp = spec;
  return make_op_node(std::move(out), {x, w},
                      [sp, x_shape, w_shape](const Var& g, const std::vector<Var>& ps) -> std::vector<Var> {
                        return {conv3d_data_grad(g, ps[1], x_shape, sp),
                                conv3d_weight_grad(g, ps[0], w_shape, sp)};
                      });
}

Var conv3d_data_grad(const Var& gy, const Var& w, Shape x_shape, const Conv3dSpec& spec) {
  const Shape& gs = gy->value.shape();
  const Shape& ws = w->value.shape();
  int64_t N = x_shape[0], C = x_shape[1], D = x_shape[2], H = x_shape[3], W = x_shape[4];
  int64_t O = ws[0], kd = ws[2], kh = ws[3], kw = ws[4];
  int64_t OD = gs[2], OH = gs[3], OW = gs[4];
  int64_t K = C * kd * kh * kw, P = OD * OH * OW;
  Tensor out(x_shape);
  std::vector<float> colg(static_cast<size_t>(K * P));
  for (int64_t n = 0; n < N; ++n) {
    sgemm(true, false, K, P, O, 1.0f, w->value.data(), K, gy->value.data() + n * O * P, P, 0.0f,
          colg.data(), P);
    col2vol(colg.data(), C, D, H, W, kd, kh, kw, spec, OD, OH, OW,
            out.data() + n * C * D * H * W);
  }
  Conv3dSpec sp = spec;
  Shape xs = std::move(x_shape), wsc = ws;
  return make_op_node(std::move(out), {gy, w},
                      [sp, xs, wsc](const Var& u, const std::vector<Var>& ps) -> std::vector<Var> {
                        return {conv3d(u, ps[1], sp),
                                conv3d_weight_grad(ps[0], u, wsc, sp)};
                      });
}

Var conv3d_weight_grad(const Var& gy, const Var& x, Shape w_shape, const Conv3dSpec& spec) {
  const Shape& gs = gy->value.shape();
  const Shape& xs = x->value.shape();
  int64_t N = xs[0], C = xs[1], D = xs[2], H = xs[3], W = xs[4];
  int64_t O = w_shape[0], kd = w_shape[2], kh = w_shape[3], kw = w_shape[4];
  int64_t OD = gs[2], OH = gs[3], OW = gs[4];
  int64_t K = C * kd * kh * kw, P = OD * OH * OW;
  Tensor out(w_shape);
  std::vector<float> col(static_cast<size_t>(K * P));
  for (int64_t n = 0; n < N; ++n) {
    vol2col(x->value.data() + n * C * D * H * W, C, D, H, W, kd, kh, kw, spec, OD, OH, OW,
            col.data());
    sgemm(false, true, O, K, P, 1.0f, gy->value.data() + n * O * P, P, col.data(), P, 1.0f,
          out.data(), K);
  }
  Conv3dSpec sp = spec;
  Shape xsc = xs, wsc = std::move(w_shape);
  return make_op_node(std::move(out), {gy, x},
                      [sp, xsc, wsc](const Var& u, const std::vector<Var>& ps) -> std::vector<Var> {
                        return {conv3d(ps[1], u, sp),
                                conv3d_data_grad(ps[0], u, xsc, sp)};
                      });
}

// ---------------------------------------------------------------------------
// Resampling
// ---------------------------------------------------------------------------

Var upsample_nearest2x(const Var& a) {
  const Shape& s = a->value.shape();
  check_shape(s.size() == 4, "upsample: expects NCHW");
  int64_t N = s[0], C = s[1], H = s[2], W = s[3];
  Tensor out({N, C, 2 * H, 2 * W});
  const float* ps = a->value.data();
  float* po = out.data();
  for (int64_t nc = 0; nc < N * C; ++nc) {
    const float* src = ps + nc * H * W;
    float* dst = po + nc * 4 * H * W;
    for (int64_t h = 0; h < H; ++h) {
      for (int64_t w = 0; w < W; ++w) {
        float v = src[h * W + w];
        int64_t base = (2 * h) * (2 * W) + 2 * w;
        dst[base] = v;
        dst[base + 1] = v;
        dst[base + 2 * W] = v;
        dst[base + 2 * W + 1] = v;
      }
    }
  }
  return make_op_node(std::move(out), {a},
                      [](const Var& g, const std::vector<Var>&) -> std::vector<Var> {
                        return {mul_scalar(downsample_avg2x(g), 4.0f)};
                      });
}

Var downsample_avg2x(const Var& a) {
  const Shape& s = a->value.shape();
  check_shape(s.size() == 4, "downsample: expects NCHW");
  check_shape(s[2] % 2 == 0 && s[3] % 2 == 0, "downsample: odd spatial dims");
  int64_t N = s[0], C = s[1], H = s[2] / 2, W = s[3] / 2;
  Tensor out({N, C, H, W});
  const float* ps = a->value.data();
  float* po = out.data();
  for (int64_t nc = 0; nc < N * C; ++nc) {
    const float* src = ps + nc * 4 * H * W;
    float* dst = po + nc * H * W;
    for (int64_t h = 0; h < H; ++h) {
      for (int64_t w = 0; w < W; ++w) {
        int64_t base = (2 * h) * (2 * W) + 2 * w;
        dst[h * W + w] =
            0.25f * (src[base] + src[base + 1] + src[base + 2 * W] + src[base + 2 * W + 1]);
      }
    }
  }
  return make_op_node(std::move(out), {a},
                      [](const Var& g, const std::vector<Var>&) -> std::vector<Var> {
                        return {mul_scalar(upsample_nearest2x(g), 0.25f)};
                      });
}

// ---------------------------------------------------------------------------
// Composites
// ---------------------------------------------------------------------------

Var softmax(const Var& a, int axis) {
  const Shape& s = a->value.shape();
  check_shape(axis >= 0 && axis < static_cast<int>(s.size()), "softmax: bad axis");
  // Shift by the axis max for stability; the shift is gradient-transparent.
  auto tables = make_axis_tables(s, {axis});
  Tensor mx(s);
  const float* ps = a->value.data();
  float* pm = mx.data();
  for (size_t j = 0; j < tables.kept.size(); ++j) {
    float m = -std::numeric_limits<float>::infinity();
    for (size_t i = 0; i < tables.red.size(); ++i)
      m = std::max(m, ps[tables.kept[j] + tables.red[i]]);
    for (size_t i = 0; i < tables.red.size(); ++i) pm[tables.kept[j] + tables.red[i]] = m;
  }
  Var e = exp(sub(a, make_const(std::move(mx))));
  Var z = reduce_sum(e, {axis}, /*keepdims=*/true);
  return divide(e, z);
}

Var pixelwise_norm(const Var& a, float epsilon) {
  check_shape(a->value.ndim() == 4, "pixelwise_norm: expects NCHW");
  Var m = reduce_mean(mul(a, a), {1}, /*keepdims=*/true);
  Var r = pow_scalar(add_scalar(m, epsilon), -0.5f);
  return mul(a, r);
}

Var minibatch_stddev(const Var& a) {
  const Shape& s = a->value.shape();
  check_shape(s.size() == 4, "minibatch_stddev: expects NCHW");
  Var mu = reduce_mean(a, {0}, /*keepdims=*/true);
  Var d = sub(a, mu);
  // Population variance over the batch (N denominator), no epsilon so an
  // identical batch yields an exactly zero channel.
  Var v = reduce_mean(mul(d, d), {0}, /*keepdims=*/true);
  Var sd = pow_scalar(v, 0.5f);
  Var avg = mean_all(sd);
  Var channel = broadcast_to(reshape(avg, {1, 1, 1, 1}), {s[0], 1, s[2], s[3]});
  return concat({a, channel}, 1);
}

Var squash(const Var& a, int axis) {
  Var n2 = reduce_sum(mul(a, a), {axis}, /*keepdims=*/true);
  Var denom = mul(add_scalar(n2, 1.0f), pow_scalar(add_scalar(n2, kSquashGuard), 0.5f));
  return mul(a, divide(n2, denom));
}

Var sum_all(const Var& a) {
  std::vector<int> axes;
  for (int i = 0; i < a->value.ndim(); ++i) axes.push_back(i);
  return reduce_sum(a, axes, /*keepdims=*/false);
}

Var mean_all(const Var& a) {
  return mul_scalar(sum_all(a), 1.0f / static_cast<float>(a->value.size()));
}

Var constant_like(const Var& a, float value) {
  return make_const(Tensor::full(a->value.shape(), value));
}

Tensor downsample_avg_to(const Tensor& img, int64_t target_hw) {
  check_shape(img.ndim() == 4, "downsample_avg_to: expects NCHW");
  Tensor cur = img;
  while (cur.dim(2) > target_hw) {
    NoGrad ng;
    Var v = downsample_avg2x(make_const(cur));
    cur = v->value;
  }
  check_shape(cur.dim(2) == target_hw && cur.dim(3) == target_hw,
              "downsample_avg_to: target not reachable by halving");
  return cur;
}

}  // namespace ops
}  // namespace topdown
