#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "cxrs/error.hpp"
#include "cxrs/tensor.hpp"

namespace cxrs::autograd {

class Node;
using Var = std::shared_ptr<Node>;

// One vertex of the dynamically built computation graph. Parents are the
// operation inputs; backward_fn scatters this node's gradient into theirs.
class Node {
 public:
  Tensor value;
  std::vector<double> grad;  // same numel as value once materialized
  bool requires_grad = false;
  std::vector<Var> parents;
  std::function<void(Node&)> backward_fn;

  void ensure_grad() {
    if (grad.size() != value.numel()) grad.assign(value.numel(), 0.0);
  }

  void zero_grad() { grad.assign(value.numel(), 0.0); }
};

inline Var make_leaf(Tensor value, bool requires_grad = false) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  if (requires_grad) node->ensure_grad();
  return node;
}

inline Var make_op(Tensor value, std::vector<Var> parents,
                   std::function<void(Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->parents = std::move(parents);
  for (const auto& p : node->parents) {
    if (p->requires_grad) {
      node->requires_grad = true;
      break;
    }
  }
  if (node->requires_grad) node->backward_fn = std::move(backward_fn);
  return node;
}

// Reverse-mode accumulation from a scalar root. Parameters reachable from the
// root receive gradient contributions; anything else keeps its zeros. The
// traversal order is a deterministic function of the graph structure.
inline void backward(const Var& root) {
  if (!root) throw StateError("backward called before any forward pass");
  if (root->value.numel() != 1) {
    throw ValidationError("backward requires a scalar loss, got shape " +
                          shape_to_string(root->value.shape));
  }

  // Iterative post-order DFS: every parent precedes its consumers.
  std::vector<Node*> topo;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{root.get(), 0}};
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next_parent] = stack.back();
    if (next_parent < node->parents.size()) {
      Node* parent = node->parents[next_parent++].get();
      if (parent->requires_grad && visited.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      topo.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* node : topo) node->ensure_grad();
  root->grad[0] = 1.0;
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    Node* node = *it;
    if (node->backward_fn) node->backward_fn(*node);
  }
}

namespace detail {

using MatrixRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatrixRM>;
using ConstMapRM = Eigen::Map<const MatrixRM>;

struct ConvDims {
  std::size_t batch, in_c, in_h, in_w;
  std::size_t out_c, k_h, k_w;
  std::size_t out_h, out_w;
  std::size_t groups, in_cg, out_cg;  // per-group channel counts
  int stride, pad;
};

inline ConvDims conv_dims(const Tensor& input, const Tensor& weight, int stride, int pad,
                          int groups) {
  if (input.rank() != 4 || weight.rank() != 4) {
    throw ValidationError("conv2d expects NCHW input and OIHW weight, got shapes " +
                          shape_to_string(input.shape) + " and " +
                          shape_to_string(weight.shape));
  }
  if (stride < 1) throw ValidationError("conv2d stride must be >= 1");
  if (pad < 0) throw ValidationError("conv2d pad must be >= 0");
  if (groups < 1) throw ValidationError("conv2d groups must be >= 1");

  ConvDims d{};
  d.batch = input.shape[0];
  d.in_c = input.shape[1];
  d.in_h = input.shape[2];
  d.in_w = input.shape[3];
  d.out_c = weight.shape[0];
  d.k_h = weight.shape[2];
  d.k_w = weight.shape[3];
  d.stride = stride;
  d.pad = pad;
  d.groups = static_cast<std::size_t>(groups);

  if (d.in_c % d.groups != 0 || d.out_c % d.groups != 0) {
    throw ValidationError("conv2d channels (" + std::to_string(d.in_c) + " in, " +
                          std::to_string(d.out_c) + " out) not divisible by groups " +
                          std::to_string(groups));
  }
  d.in_cg = d.in_c / d.groups;
  d.out_cg = d.out_c / d.groups;
  if (weight.shape[1] != d.in_cg) {
    throw ValidationError("conv2d weight shape " + shape_to_string(weight.shape) +
                          " does not match input shape " + shape_to_string(input.shape) +
                          " with groups " + std::to_string(groups));
  }

  const long oh = (static_cast<long>(d.in_h) + 2 * pad - static_cast<long>(d.k_h)) / stride + 1;
  const long ow = (static_cast<long>(d.in_w) + 2 * pad - static_cast<long>(d.k_w)) / stride + 1;
  if (oh < 1 || ow < 1) {
    throw ValidationError("conv2d output would be empty for input " +
                          shape_to_string(input.shape) + " and kernel " +
                          shape_to_string(weight.shape));
  }
  d.out_h = static_cast<std::size_t>(oh);
  d.out_w = static_cast<std::size_t>(ow);
  return d;
}

// Gathers one (sample, group) slice into a (in_cg*k_h*k_w) x (out_h*out_w)
// patch matrix; zero padding outside the input.
inline void im2col(const double* in, const ConvDims& d, double* col) {
  const std::size_t hw = d.out_h * d.out_w;
  for (std::size_t c = 0; c < d.in_cg; ++c) {
    const double* plane = in + c * d.in_h * d.in_w;
    for (std::size_t kh = 0; kh < d.k_h; ++kh) {
      for (std::size_t kw = 0; kw < d.k_w; ++kw) {
        double* dst = col + ((c * d.k_h + kh) * d.k_w + kw) * hw;
        for (std::size_t oh = 0; oh < d.out_h; ++oh) {
          const long ih = static_cast<long>(oh) * d.stride - d.pad + static_cast<long>(kh);
          if (ih < 0 || ih >= static_cast<long>(d.in_h)) {
            std::fill(dst, dst + d.out_w, 0.0);
            dst += d.out_w;
            continue;
          }
          const double* src_row = plane + static_cast<std::size_t>(ih) * d.in_w;
          for (std::size_t ow = 0; ow < d.out_w; ++ow) {
            const long iw = static_cast<long>(ow) * d.stride - d.pad + static_cast<long>(kw);
            *dst++ = (iw < 0 || iw >= static_cast<long>(d.in_w))
                         ? 0.0
                         : src_row[static_cast<std::size_t>(iw)];
          }
        }
      }
    }
  }
}

// Scatter-add of a patch matrix back onto the input plane (adjoint of im2col).
inline void col2im_add(const double* col, const ConvDims& d, double* in_grad) {
  const std::size_t hw = d.out_h * d.out_w;
  for (std::size_t c = 0; c < d.in_cg; ++c) {
    double* plane = in_grad + c * d.in_h * d.in_w;
    for (std::size_t kh = 0; kh < d.k_h; ++kh) {
      for (std::size_t kw = 0; kw < d.k_w; ++kw) {
        const double* src = col + ((c * d.k_h + kh) * d.k_w + kw) * hw;
        for (std::size_t oh = 0; oh < d.out_h; ++oh) {
          const long ih = static_cast<long>(oh) * d.stride - d.pad + static_cast<long>(kh);
          if (ih < 0 || ih >= static_cast<long>(d.in_h)) {
            src += d.out_w;
            continue;
          }
          double* dst_row = plane + static_cast<std::size_t>(ih) * d.in_w;
          for (std::size_t ow = 0; ow < d.out_w; ++ow) {
            const long iw = static_cast<long>(ow) * d.stride - d.pad + static_cast<long>(kw);
            if (iw >= 0 && iw < static_cast<long>(d.in_w)) {
              dst_row[static_cast<std::size_t>(iw)] += src[ow];
            }
          }
        }
      }
    }
  }
}

inline bool is_pointwise(const ConvDims& d) {
  return d.k_h == 1 && d.k_w == 1 && d.stride == 1 && d.pad == 0;
}

inline bool is_depthwise(const ConvDims& d) { return d.in_cg == 1 && d.out_cg == 1; }

inline void conv2d_forward_impl(const Tensor& input, const Tensor& weight,
                                const Tensor* bias, const ConvDims& d, Tensor& out) {
  const std::size_t hw = d.out_h * d.out_w;
  const std::size_t patch = d.in_cg * d.k_h * d.k_w;

  std::vector<double> col;
  if (!is_pointwise(d) && !is_depthwise(d)) col.resize(patch * hw);

  for (std::size_t n = 0; n < d.batch; ++n) {
    for (std::size_t g = 0; g < d.groups; ++g) {
      const double* in = &input.data[(n * d.in_c + g * d.in_cg) * d.in_h * d.in_w];
      double* out_ptr = &out.data[(n * d.out_c + g * d.out_cg) * hw];
      const double* w = &weight.data[g * d.out_cg * patch];

      if (is_depthwise(d)) {
        // One input channel, one output channel per group: direct correlation.
        for (std::size_t oh = 0; oh < d.out_h; ++oh) {
          for (std::size_t ow = 0; ow < d.out_w; ++ow) {
            double acc = 0.0;
            for (std::size_t kh = 0; kh < d.k_h; ++kh) {
              const long ih = static_cast<long>(oh) * d.stride - d.pad + static_cast<long>(kh);
              if (ih < 0 || ih >= static_cast<long>(d.in_h)) continue;
              for (std::size_t kw = 0; kw < d.k_w; ++kw) {
                const long iw = static_cast<long>(ow) * d.stride - d.pad + static_cast<long>(kw);
                if (iw < 0 || iw >= static_cast<long>(d.in_w)) continue;
                acc += in[static_cast<std::size_t>(ih) * d.in_w + static_cast<std::size_t>(iw)] *
                       w[kh * d.k_w + kw];
              }
            }
            out_ptr[oh * d.out_w + ow] = acc;
          }
        }
      } else if (is_pointwise(d)) {
        ConstMapRM w_m(w, d.out_cg, patch);
        ConstMapRM in_m(in, d.in_cg, hw);
        MapRM out_m(out_ptr, d.out_cg, hw);
        out_m.noalias() = w_m * in_m;
      } else {
        im2col(in, d, col.data());
        ConstMapRM w_m(w, d.out_cg, patch);
        ConstMapRM col_m(col.data(), patch, hw);
        MapRM out_m(out_ptr, d.out_cg, hw);
        out_m.noalias() = w_m * col_m;
      }
    }
    if (bias) {
      for (std::size_t oc = 0; oc < d.out_c; ++oc) {
        double* out_ptr = &out.data[(n * d.out_c + oc) * hw];
        const double b = bias->data[oc];
        for (std::size_t i = 0; i < hw; ++i) out_ptr[i] += b;
      }
    }
  }
}

inline void conv2d_backward_impl(const Tensor& input, const Tensor& weight,
                                 const ConvDims& d, const std::vector<double>& out_grad,
                                 std::vector<double>* in_grad, std::vector<double>* w_grad,
                                 std::vector<double>* b_grad) {
  const std::size_t hw = d.out_h * d.out_w;
  const std::size_t patch = d.in_cg * d.k_h * d.k_w;

  std::vector<double> col, col_grad;
  const bool pointwise = is_pointwise(d);
  const bool depthwise = is_depthwise(d);
  if (!pointwise && !depthwise) {
    col.resize(patch * hw);
    col_grad.resize(patch * hw);
  }

  for (std::size_t n = 0; n < d.batch; ++n) {
    for (std::size_t g = 0; g < d.groups; ++g) {
      const std::size_t in_off = (n * d.in_c + g * d.in_cg) * d.in_h * d.in_w;
      const std::size_t out_off = (n * d.out_c + g * d.out_cg) * hw;
      const std::size_t w_off = g * d.out_cg * patch;
      const double* in = &input.data[in_off];
      const double* dout = &out_grad[out_off];
      const double* w = &weight.data[w_off];

      if (depthwise) {
        for (std::size_t oh = 0; oh < d.out_h; ++oh) {
          for (std::size_t ow = 0; ow < d.out_w; ++ow) {
            const double gval = dout[oh * d.out_w + ow];
            if (gval == 0.0) continue;
            for (std::size_t kh = 0; kh < d.k_h; ++kh) {
              const long ih = static_cast<long>(oh) * d.stride - d.pad + static_cast<long>(kh);
              if (ih < 0 || ih >= static_cast<long>(d.in_h)) continue;
              for (std::size_t kw = 0; kw < d.k_w; ++kw) {
                const long iw = static_cast<long>(ow) * d.stride - d.pad + static_cast<long>(kw);
                if (iw < 0 || iw >= static_cast<long>(d.in_w)) continue;
                const std::size_t in_idx =
                    static_cast<std::size_t>(ih) * d.in_w + static_cast<std::size_t>(iw);
                if (w_grad) (*w_grad)[w_off + kh * d.k_w + kw] += gval * in[in_idx];
                if (in_grad) (*in_grad)[in_off + in_idx] += gval * w[kh * d.k_w + kw];
              }
            }
          }
        }
      } else if (pointwise) {
        ConstMapRM dout_m(dout, d.out_cg, hw);
        ConstMapRM w_m(w, d.out_cg, patch);
        ConstMapRM in_m(in, d.in_cg, hw);
        if (w_grad) {
          MapRM wg_m(&(*w_grad)[w_off], d.out_cg, patch);
          wg_m.noalias() += dout_m * in_m.transpose();
        }
        if (in_grad) {
          MapRM ig_m(&(*in_grad)[in_off], d.in_cg, hw);
          ig_m.noalias() += w_m.transpose() * dout_m;
        }
      } else {
        im2col(in, d, col.data());
        ConstMapRM dout_m(dout, d.out_cg, hw);
        ConstMapRM col_m(col.data(), patch, hw);
        if (w_grad) {
          MapRM wg_m(&(*w_grad)[w_off], d.out_cg, patch);
          wg_m.noalias() += dout_m * col_m.transpose();
        }
        if (in_grad) {
          ConstMapRM w_m(w, d.out_cg, patch);
          MapRM cg_m(col_grad.data(), patch, hw);
          cg_m.noalias() = w_m.transpose() * dout_m;
          col2im_add(col_grad.data(), d, &(*in_grad)[in_off]);
        }
      }
    }
    if (b_grad) {
      for (std::size_t oc = 0; oc < d.out_c; ++oc) {
        const double* dout = &out_grad[(n * d.out_c + oc) * hw];
        double acc = 0.0;
        for (std::size_t i = 0; i < hw; ++i) acc += dout[i];
        (*b_grad)[oc] += acc;
      }
    }
  }
}

}  // namespace detail

// 2-D cross-correlation over NCHW input with OIHW weights. Output spatial dims
// are floor((in + 2*pad - k) / stride) + 1. Bias may be null.
inline Var conv2d(const Var& input, const Var& weight, const Var& bias, int stride = 1,
                  int pad = 0, int groups = 1) {
  const detail::ConvDims d = detail::conv_dims(input->value, weight->value, stride, pad, groups);
  if (bias && (bias->value.rank() != 1 || bias->value.shape[0] != d.out_c)) {
    throw ValidationError("conv2d bias shape " + shape_to_string(bias->value.shape) +
                          " does not match " + std::to_string(d.out_c) + " output channels");
  }

  Tensor out({d.batch, d.out_c, d.out_h, d.out_w});
  detail::conv2d_forward_impl(input->value, weight->value, bias ? &bias->value : nullptr, d, out);

  std::vector<Var> parents = bias ? std::vector<Var>{input, weight, bias}
                                  : std::vector<Var>{input, weight};
  return make_op(std::move(out), std::move(parents), [d](Node& node) {
    const Var& in = node.parents[0];
    const Var& w = node.parents[1];
    const Var* b = node.parents.size() > 2 ? &node.parents[2] : nullptr;
    const bool need_in = in->requires_grad;
    const bool need_w = w->requires_grad;
    const bool need_b = b && (*b)->requires_grad;
    if (need_in) in->ensure_grad();
    if (need_w) w->ensure_grad();
    if (need_b) (*b)->ensure_grad();
    detail::conv2d_backward_impl(in->value, w->value, d, node.grad,
                                 need_in ? &in->grad : nullptr,
                                 need_w ? &w->grad : nullptr,
                                 need_b ? &(*b)->grad : nullptr);
  });
}

inline Var relu(const Var& x) {
  Tensor out = x->value;
  for (double& v : out.data) v = std::max(0.0, v);
  return make_op(std::move(out), {x}, [](Node& node) {
    const Var& in = node.parents[0];
    if (!in->requires_grad) return;
    in->ensure_grad();
    for (std::size_t i = 0; i < node.grad.size(); ++i) {
      if (in->value.data[i] > 0.0) in->grad[i] += node.grad[i];
    }
  });
}

inline Var sigmoid(const Var& x) {
  Tensor out = x->value;
  for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
  return make_op(std::move(out), {x}, [](Node& node) {
    const Var& in = node.parents[0];
    if (!in->requires_grad) return;
    in->ensure_grad();
    for (std::size_t i = 0; i < node.grad.size(); ++i) {
      const double y = node.value.data[i];
      in->grad[i] += node.grad[i] * y * (1.0 - y);
    }
  });
}

// Elementwise sum of two equally shaped tensors (additive skip junctions).
inline Var add(const Var& a, const Var& b) {
  if (!a->value.same_shape(b->value)) {
    throw ValidationError("add shape mismatch: " + shape_to_string(a->value.shape) +
                          " vs " + shape_to_string(b->value.shape));
  }
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b->value.data[i];
  return make_op(std::move(out), {a, b}, [](Node& node) {
    for (const Var& p : node.parents) {
      if (!p->requires_grad) continue;
      p->ensure_grad();
      for (std::size_t i = 0; i < node.grad.size(); ++i) p->grad[i] += node.grad[i];
    }
  });
}

// 2x2 max pooling with stride 2; odd trailing rows/columns are dropped.
inline Var max_pool2(const Var& x) {
  const Tensor& v = x->value;
  if (v.rank() != 4) {
    throw ValidationError("max_pool2 expects NCHW, got " + shape_to_string(v.shape));
  }
  const std::size_t n = v.shape[0], c = v.shape[1];
  const std::size_t oh = v.shape[2] / 2, ow = v.shape[3] / 2;
  if (oh == 0 || ow == 0) {
    throw ValidationError("max_pool2 input " + shape_to_string(v.shape) + " too small");
  }

  Tensor out({n, c, oh, ow});
  std::vector<std::size_t> argmax(out.numel());
  const std::size_t ih = v.shape[2], iw = v.shape[3];
  std::size_t o = 0;
  for (std::size_t i = 0; i < n * c; ++i) {
    const double* plane = &v.data[i * ih * iw];
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t z = 0; z < ow; ++z) {
        const std::size_t base = (2 * y) * iw + 2 * z;
        std::size_t best = base;
        double best_v = plane[base];
        for (const std::size_t cand : {base + 1, base + iw, base + iw + 1}) {
          if (plane[cand] > best_v) {
            best_v = plane[cand];
            best = cand;
          }
        }
        out.data[o] = best_v;
        argmax[o] = i * ih * iw + best;
        ++o;
      }
    }
  }

  return make_op(std::move(out), {x}, [argmax = std::move(argmax)](Node& node) {
    const Var& in = node.parents[0];
    if (!in->requires_grad) return;
    in->ensure_grad();
    for (std::size_t i = 0; i < node.grad.size(); ++i) {
      in->grad[argmax[i]] += node.grad[i];
    }
  });
}

// Global average pool NCHW -> NC.
inline Var global_avg_pool(const Var& x) {
  const Tensor& v = x->value;
  if (v.rank() != 4) {
    throw ValidationError("global_avg_pool expects NCHW, got " + shape_to_string(v.shape));
  }
  const std::size_t n = v.shape[0], c = v.shape[1], hw = v.shape[2] * v.shape[3];
  Tensor out({n, c});
  for (std::size_t i = 0; i < n * c; ++i) {
    const double* plane = &v.data[i * hw];
    double acc = 0.0;
    for (std::size_t j = 0; j < hw; ++j) acc += plane[j];
    out.data[i] = acc / static_cast<double>(hw);
  }
  return make_op(std::move(out), {x}, [hw](Node& node) {
    const Var& in = node.parents[0];
    if (!in->requires_grad) return;
    in->ensure_grad();
    const double inv = 1.0 / static_cast<double>(hw);
    for (std::size_t i = 0; i < node.grad.size(); ++i) {
      const double g = node.grad[i] * inv;
      double* dst = &in->grad[i * hw];
      for (std::size_t j = 0; j < hw; ++j) dst[j] += g;
    }
  });
}

// Fully connected layer: y = x W^T + b with x (N, F), W (O, F), b (O).
inline Var dense(const Var& x, const Var& weight, const Var& bias) {
  const Tensor& xv = x->value;
  const Tensor& wv = weight->value;
  if (xv.rank() != 2 || wv.rank() != 2 || xv.shape[1] != wv.shape[1]) {
    throw ValidationError("dense shape mismatch: input " + shape_to_string(xv.shape) +
                          " vs weight " + shape_to_string(wv.shape));
  }
  const std::size_t n = xv.shape[0], f = xv.shape[1], o = wv.shape[0];
  if (bias && (bias->value.rank() != 1 || bias->value.shape[0] != o)) {
    throw ValidationError("dense bias shape " + shape_to_string(bias->value.shape) +
                          " does not match " + std::to_string(o) + " outputs");
  }

  Tensor out({n, o});
  {
    detail::ConstMapRM x_m(xv.data.data(), n, f);
    detail::ConstMapRM w_m(wv.data.data(), o, f);
    detail::MapRM out_m(out.data.data(), n, o);
    out_m.noalias() = x_m * w_m.transpose();
    if (bias) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < o; ++j) out.data[i * o + j] += bias->value.data[j];
      }
    }
  }

  std::vector<Var> parents = bias ? std::vector<Var>{x, weight, bias}
                                  : std::vector<Var>{x, weight};
  return make_op(std::move(out), std::move(parents), [n, f, o](Node& node) {
    const Var& in = node.parents[0];
    const Var& w = node.parents[1];
    detail::ConstMapRM dout(node.grad.data(), n, o);
    if (in->requires_grad) {
      in->ensure_grad();
      detail::MapRM din(in->grad.data(), n, f);
      detail::ConstMapRM w_m(w->value.data.data(), o, f);
      din.noalias() += dout * w_m;
    }
    if (w->requires_grad) {
      w->ensure_grad();
      detail::MapRM dw(w->grad.data(), o, f);
      detail::ConstMapRM x_m(in->value.data.data(), n, f);
      dw.noalias() += dout.transpose() * x_m;
    }
    if (node.parents.size() > 2 && node.parents[2]->requires_grad) {
      const Var& b = node.parents[2];
      b->ensure_grad();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < o; ++j) b->grad[j] += node.grad[i * o + j];
      }
    }
  });
}

// Mean squared error against a fixed target; numel of prediction and target
// must match (shapes (N) and (N, 1) are both accepted).
inline Var mse_loss(const Var& pred, const Tensor& target) {
  const std::size_t n = pred->value.numel();
  if (n == 0 || n != target.numel()) {
    throw ValidationError("mse_loss length mismatch: " + std::to_string(n) + " vs " +
                          std::to_string(target.numel()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double diff = pred->value.data[i] - target.data[i];
    acc += diff * diff;
  }
  Tensor out({1});
  out.data[0] = acc / static_cast<double>(n);

  return make_op(std::move(out), {pred}, [target](Node& node) {
    const Var& p = node.parents[0];
    if (!p->requires_grad) return;
    p->ensure_grad();
    const double scale = 2.0 * node.grad[0] / static_cast<double>(target.numel());
    for (std::size_t i = 0; i < target.numel(); ++i) {
      p->grad[i] += scale * (p->value.data[i] - target.data[i]);
    }
  });
}

// Sum of all elements; handy for reduction-style gradient tests.
inline Var sum(const Var& x) {
  Tensor out({1});
  for (double v : x->value.data) out.data[0] += v;
  return make_op(std::move(out), {x}, [](Node& node) {
    const Var& in = node.parents[0];
    if (!in->requires_grad) return;
    in->ensure_grad();
    for (double& g : in->grad) g += node.grad[0];
  });
}

}  // namespace cxrs::autograd
