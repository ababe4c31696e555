// Copyright 2026 The dmpcs Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dmpcs/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "dmpcs/errors.hpp"
#include "dmpcs/sensing.hpp"

namespace dmpcs::ad {

const Tensor& Var::value() const { return graph->value(*this); }

std::size_t Graph::check_owned(Var v) const {
  require(v.graph == this, "variable belongs to a different graph");
  require(v.id < nodes_.size(), "variable id out of range");
  return v.id;
}

Var Graph::constant(Tensor value) {
  nodes_.push_back(Node{"constant", std::move(value), {}, {}, {}, false});
  return Var{this, nodes_.size() - 1};
}

Var Graph::parameter(const std::string& name, const Tensor& value, bool requires_grad) {
  if (auto it = params_.find(name); it != params_.end()) return Var{this, it->second};
  nodes_.push_back(Node{"parameter", value, {}, {}, name, requires_grad});
  params_.emplace(name, nodes_.size() - 1);
  return Var{this, nodes_.size() - 1};
}

Var Graph::record(const char* op, Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  Node node{op, std::move(value), {}, std::move(backward), {}, false};
  const std::size_t next = nodes_.size();
  for (Var v : inputs) {
    const std::size_t id = check_owned(v);
    // Inputs must already exist; this is what keeps the tape acyclic.
    require(id < next, "graph cycle: input does not precede its consumer");
    node.inputs.push_back(id);
    node.requires_grad = node.requires_grad || nodes_[id].requires_grad;
  }
  nodes_.push_back(std::move(node));
  return Var{this, next};
}

Gradients Graph::backward(Var loss) {
  const std::size_t root = check_owned(loss);
  require(nodes_[root].value.size() == 1,
          "backward needs a one-element loss, got shape " +
              shape_string(nodes_[root].value.shape()));

  std::vector<Tensor> grads(root + 1);
  grads[root] = Tensor::full(nodes_[root].value.shape(), 1.0);

  std::vector<const Tensor*> in_values;
  std::vector<Tensor*> in_grads;
  for (std::size_t k = root + 1; k-- > 0;) {
    const Node& node = nodes_[k];
    if (!node.requires_grad || grads[k].empty() || !node.backward) continue;
    in_values.clear();
    in_grads.clear();
    for (std::size_t id : node.inputs) {
      if (id >= k) throw NumericalError("graph cycle detected at node " + std::to_string(k));
      in_values.push_back(&nodes_[id].value);
      if (nodes_[id].requires_grad) {
        if (grads[id].empty()) grads[id] = Tensor(nodes_[id].value.shape());
        in_grads.push_back(&grads[id]);
      } else {
        in_grads.push_back(nullptr);
      }
    }
    node.backward(grads[k], in_values, in_grads);
  }

  Gradients out;
  for (const auto& [name, id] : params_) {
    if (!nodes_[id].requires_grad || id > root) continue;
    out.emplace(name, grads[id].empty() ? Tensor(nodes_[id].value.shape()) : grads[id]);
  }
  return out;
}

namespace {

void same_shape(Var a, Var b, const char* op) {
  require(a.shape() == b.shape(), std::string(op) + ": shape mismatch " +
                                      shape_string(a.shape()) + " vs " +
                                      shape_string(b.shape()));
}

Graph& graph_of(Var a, Var b) {
  require(a.graph != nullptr && a.graph == b.graph, "variables from different graphs");
  return *a.graph;
}

void check_chw(const Tensor& t, const char* what) {
  require(t.rank() == 3, std::string(what) + " must be [C,H,W], got " + shape_string(t.shape()));
}

}  // namespace

Var add(Var a, Var b) {
  same_shape(a, b, "add");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return graph_of(a, b).record("add", std::move(out), {a, b},
                               [](const Tensor& g, auto, auto grads) {
                                 for (Tensor* dst : grads)
                                   if (dst)
                                     for (std::size_t i = 0; i < g.size(); ++i) (*dst)[i] += g[i];
                               });
}

Var sub(Var a, Var b) {
  same_shape(a, b, "sub");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return graph_of(a, b).record("sub", std::move(out), {a, b},
                               [](const Tensor& g, auto, auto grads) {
                                 if (grads[0])
                                   for (std::size_t i = 0; i < g.size(); ++i) (*grads[0])[i] += g[i];
                                 if (grads[1])
                                   for (std::size_t i = 0; i < g.size(); ++i) (*grads[1])[i] -= g[i];
                               });
}

Var mul(Var a, Var b) {
  same_shape(a, b, "mul");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return graph_of(a, b).record("mul", std::move(out), {a, b},
                               [](const Tensor& g, auto in, auto grads) {
                                 if (grads[0])
                                   for (std::size_t i = 0; i < g.size(); ++i)
                                     (*grads[0])[i] += g[i] * (*in[1])[i];
                                 if (grads[1])
                                   for (std::size_t i = 0; i < g.size(); ++i)
                                     (*grads[1])[i] += g[i] * (*in[0])[i];
                               });
}

Var scale(Var a, double factor) {
  Tensor out = a.value();
  for (double& v : out.data()) v *= factor;
  return a.graph->record("scale", std::move(out), {a},
                         [factor](const Tensor& g, auto, auto grads) {
                           for (std::size_t i = 0; i < g.size(); ++i) (*grads[0])[i] += factor * g[i];
                         });
}

Var mul_scalar(Var a, Var s) {
  require(s.value().size() == 1, "mul_scalar: scale must hold one element");
  const double k = s.value()[0];
  Tensor out = a.value();
  for (double& v : out.data()) v = k * v;
  return graph_of(a, s).record("mul_scalar", std::move(out), {a, s},
                               [](const Tensor& g, auto in, auto grads) {
                                 const double k = (*in[1])[0];
                                 if (grads[0])
                                   for (std::size_t i = 0; i < g.size(); ++i) (*grads[0])[i] += k * g[i];
                                 if (grads[1]) {
                                   double acc = 0.0;
                                   for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * (*in[0])[i];
                                   (*grads[1])[0] += acc;
                                 }
                               });
}

Var exp(Var a) {
  Tensor out = a.value();
  for (double& v : out.data()) v = std::exp(v);
  Tensor saved = out;
  return a.graph->record("exp", std::move(out), {a},
                         [saved = std::move(saved)](const Tensor& g, auto, auto grads) {
                           for (std::size_t i = 0; i < g.size(); ++i) (*grads[0])[i] += g[i] * saved[i];
                         });
}

Var relu(Var a) {
  Tensor out = a.value();
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return a.graph->record("relu", std::move(out), {a}, [](const Tensor& g, auto in, auto grads) {
    const Tensor& x = *in[0];
    for (std::size_t i = 0; i < g.size(); ++i)
      if (x[i] > 0.0) (*grads[0])[i] += g[i];
  });
}

Var mse(Var a, Var b) {
  same_shape(a, b, "mse");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require(av.size() > 0, "mse of empty tensors");
  double acc = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double d = av[i] - bv[i];
    acc += d * d;
  }
  const double n = double(av.size());
  return graph_of(a, b).record("mse", Tensor::scalar(acc / n), {a, b},
                               [n](const Tensor& g, auto in, auto grads) {
                                 const Tensor& x = *in[0];
                                 const Tensor& y = *in[1];
                                 const double k = 2.0 * g[0] / n;
                                 for (std::size_t i = 0; i < x.size(); ++i) {
                                   const double d = k * (x[i] - y[i]);
                                   if (grads[0]) (*grads[0])[i] += d;
                                   if (grads[1]) (*grads[1])[i] -= d;
                                 }
                               });
}

namespace kernels {

// Tap (ky,kx) shifts the input by (ky-1, kx-1); these ranges keep the
// shifted index inside the image, which is zero padding.
struct TapRange {
  std::size_t lo, hi;
};
inline TapRange tap_range(std::size_t k, std::size_t extent) {
  return {k == 0 ? 1u : 0u, k == 2 ? extent - 1 : extent};
}

void conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, Tensor& out) {
  const std::size_t cin = x.dim(0), h = x.dim(1), wd = x.dim(2), cout = w.dim(0);
  const std::size_t hw = h * wd;
  out = Tensor({cout, h, wd});
  const double* in = x.data().data();
  double* dst_base = out.data().data();
  for (std::size_t co = 0; co < cout; ++co) {
    double* dst = dst_base + co * hw;
    std::fill(dst, dst + hw, b[co]);
    for (std::size_t ci = 0; ci < cin; ++ci) {
      const double* src = in + ci * hw;
      const double* kern = w.data().data() + (co * cin + ci) * 9;
      for (std::size_t ky = 0; ky < 3; ++ky) {
        const auto [y0, y1] = tap_range(ky, h);
        for (std::size_t kx = 0; kx < 3; ++kx) {
          const auto [x0, x1] = tap_range(kx, wd);
          const double k = kern[ky * 3 + kx];
          for (std::size_t y = y0; y < y1; ++y) {
            double* row = dst + y * wd;
            const double* srow = src + (y + ky - 1) * wd + kx;
            for (std::size_t xx = x0; xx < x1; ++xx) row[xx] += k * srow[xx - 1];
          }
        }
      }
    }
  }
}

void conv2d_backward_input(const Tensor& grad_out, const Tensor& w, Tensor& grad_x) {
  const std::size_t cin = grad_x.dim(0), h = grad_x.dim(1), wd = grad_x.dim(2);
  const std::size_t cout = w.dim(0), hw = h * wd;
  for (std::size_t co = 0; co < cout; ++co) {
    const double* g = grad_out.data().data() + co * hw;
    for (std::size_t ci = 0; ci < cin; ++ci) {
      double* dst = grad_x.data().data() + ci * hw;
      const double* kern = w.data().data() + (co * cin + ci) * 9;
      for (std::size_t ky = 0; ky < 3; ++ky) {
        const auto [y0, y1] = tap_range(ky, h);
        for (std::size_t kx = 0; kx < 3; ++kx) {
          const auto [x0, x1] = tap_range(kx, wd);
          const double k = kern[ky * 3 + kx];
          for (std::size_t y = y0; y < y1; ++y) {
            const double* grow = g + y * wd;
            double* drow = dst + (y + ky - 1) * wd + kx;
            for (std::size_t xx = x0; xx < x1; ++xx) drow[xx - 1] += k * grow[xx];
          }
        }
      }
    }
  }
}

void conv2d_backward_weight(const Tensor& grad_out, const Tensor& x, Tensor& grad_w,
                            Tensor& grad_b) {
  const std::size_t cin = x.dim(0), h = x.dim(1), wd = x.dim(2);
  const std::size_t cout = grad_out.dim(0), hw = h * wd;
  for (std::size_t co = 0; co < cout; ++co) {
    const double* g = grad_out.data().data() + co * hw;
    if (!grad_b.empty()) {
      double acc = 0.0;
      for (std::size_t i = 0; i < hw; ++i) acc += g[i];
      grad_b[co] += acc;
    }
    if (grad_w.empty()) continue;
    for (std::size_t ci = 0; ci < cin; ++ci) {
      const double* src = x.data().data() + ci * hw;
      double* gk = grad_w.data().data() + (co * cin + ci) * 9;
      for (std::size_t ky = 0; ky < 3; ++ky) {
        const auto [y0, y1] = tap_range(ky, h);
        for (std::size_t kx = 0; kx < 3; ++kx) {
          const auto [x0, x1] = tap_range(kx, wd);
          double acc = 0.0;
          for (std::size_t y = y0; y < y1; ++y) {
            const double* grow = g + y * wd;
            const double* srow = src + (y + ky - 1) * wd + kx;
            for (std::size_t xx = x0; xx < x1; ++xx) acc += grow[xx] * srow[xx - 1];
          }
          gk[ky * 3 + kx] += acc;
        }
      }
    }
  }
}

}  // namespace kernels

Var conv2d(Var x, Var w, Var b) {
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  const Tensor& bv = b.value();
  check_chw(xv, "conv2d input");
  require(wv.rank() == 4 && wv.dim(2) == 3 && wv.dim(3) == 3,
          "conv2d kernel must be [Cout,Cin,3,3], got " + shape_string(wv.shape()));
  require(wv.dim(1) == xv.dim(0), "conv2d: input has " + std::to_string(xv.dim(0)) +
                                      " channels but kernel expects " + std::to_string(wv.dim(1)));
  require(bv.rank() == 1 && bv.dim(0) == wv.dim(0), "conv2d: bias length must equal Cout");
  require(xv.dim(1) >= 1 && xv.dim(2) >= 1, "conv2d: empty spatial dims");
  Tensor out;
  kernels::conv2d_forward(xv, wv, bv, out);
  Graph& g = graph_of(x, w);
  require(b.graph == &g, "variables from different graphs");
  return g.record("conv2d", std::move(out), {x, w, b},
                  [](const Tensor& grad, auto in, auto grads) {
                    if (grads[0]) kernels::conv2d_backward_input(grad, *in[1], *grads[0]);
                    if (grads[1] || grads[2]) {
                      Tensor none;
                      kernels::conv2d_backward_weight(grad, *in[0], grads[1] ? *grads[1] : none,
                                                      grads[2] ? *grads[2] : none);
                    }
                  });
}

Var matvec(Var w, Var v) {
  const Tensor& wv = w.value();
  const Tensor& vv = v.value();
  require(wv.rank() == 2 && vv.size() == wv.dim(1),
          "matvec: shapes " + shape_string(wv.shape()) + " and " + shape_string(vv.shape()));
  const std::size_t rows = wv.dim(0), cols = wv.dim(1);
  Tensor out({rows});
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += wv[r * cols + c] * vv[c];
    out[r] = acc;
  }
  return graph_of(w, v).record("matvec", std::move(out), {w, v},
                               [rows, cols](const Tensor& g, auto in, auto grads) {
                                 for (std::size_t r = 0; r < rows; ++r)
                                   for (std::size_t c = 0; c < cols; ++c) {
                                     if (grads[0]) (*grads[0])[r * cols + c] += g[r] * (*in[1])[c];
                                     if (grads[1]) (*grads[1])[c] += g[r] * (*in[0])[r * cols + c];
                                   }
                               });
}

Var concat_channels(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_channels of nothing");
  const Tensor& first = parts.front().value();
  check_chw(first, "concat_channels input");
  std::size_t channels = 0;
  std::vector<std::size_t> offsets;
  for (Var p : parts) {
    const Tensor& t = p.value();
    check_chw(t, "concat_channels input");
    require(t.dim(1) == first.dim(1) && t.dim(2) == first.dim(2),
            "concat_channels: spatial dims differ");
    require(p.graph == parts.front().graph, "variables from different graphs");
    offsets.push_back(channels);
    channels += t.dim(0);
  }
  const std::size_t hw = first.dim(1) * first.dim(2);
  Tensor out({channels, first.dim(1), first.dim(2)});
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& t = parts[k].value();
    std::copy(t.data().begin(), t.data().end(), out.data().begin() + offsets[k] * hw);
  }
  return parts.front().graph->record(
      "concat_channels", std::move(out), parts,
      [offsets, hw](const Tensor& g, auto in, auto grads) {
        for (std::size_t k = 0; k < grads.size(); ++k) {
          if (!grads[k]) continue;
          const std::size_t n = in[k]->size();
          for (std::size_t i = 0; i < n; ++i) (*grads[k])[i] += g[offsets[k] * hw + i];
        }
      });
}

Var slice_channels(Var x, std::size_t begin, std::size_t count) {
  const Tensor& xv = x.value();
  check_chw(xv, "slice_channels input");
  require(count > 0 && begin + count <= xv.dim(0), "slice_channels: range out of bounds");
  const std::size_t hw = xv.dim(1) * xv.dim(2);
  Tensor out({count, xv.dim(1), xv.dim(2)});
  std::copy_n(xv.data().begin() + begin * hw, count * hw, out.data().begin());
  return x.graph->record("slice_channels", std::move(out), {x},
                         [begin, hw](const Tensor& g, auto, auto grads) {
                           for (std::size_t i = 0; i < g.size(); ++i)
                             (*grads[0])[begin * hw + i] += g[i];
                         });
}

namespace {

sensing::BlockScheme scheme_for(std::size_t block, std::size_t h, std::size_t w) {
  sensing::BlockScheme s{block, h, w};
  s.validate();
  return s;
}

}  // namespace

Var block_sense(Var image, Var phi, std::size_t block) {
  const Tensor& img = image.value();
  const Tensor& pv = phi.value();
  require(img.rank() == 3 && img.dim(0) == 1, "block_sense: image must be [1,H,W]");
  require(pv.rank() == 2 && pv.dim(1) == block * block,
          "block_sense: Phi must have B*B columns, got " + shape_string(pv.shape()));
  const auto scheme = scheme_for(block, img.dim(1), img.dim(2));
  const std::size_t m = pv.dim(0), n = pv.dim(1);
  const Tensor xb = sensing::partition_blocks(img, scheme);
  Tensor y({scheme.block_count(), m});
  sensing::apply_matrix_blocks(pv.data(), m, n, xb.data(), y.data());
  return graph_of(image, phi).record(
      "block_sense", std::move(y), {image, phi},
      [scheme, m, n, xb](const Tensor& g, auto in, auto grads) {
        const Tensor& p = *in[1];
        if (grads[0]) {
          Tensor gx({scheme.block_count(), n});
          sensing::apply_transpose_blocks(p.data(), m, n, g.data(), gx.data());
          const Tensor gi = sensing::merge_blocks(gx, scheme);
          for (std::size_t i = 0; i < gi.size(); ++i) (*grads[0])[i] += gi[i];
        }
        if (grads[1]) {
          Tensor& gp = *grads[1];
          for (std::size_t b = 0; b < scheme.block_count(); ++b)
            for (std::size_t i = 0; i < m; ++i) {
              const double gi = g[b * m + i];
              double* row = gp.data().data() + i * n;
              const double* xr = xb.data().data() + b * n;
              for (std::size_t j = 0; j < n; ++j) row[j] += gi * xr[j];
            }
        }
      });
}

Var block_adjoint(Var y, Var phi, std::size_t block, std::size_t height, std::size_t width) {
  const Tensor& yv = y.value();
  const Tensor& pv = phi.value();
  require(pv.rank() == 2 && pv.dim(1) == block * block,
          "block_adjoint: Phi must have B*B columns, got " + shape_string(pv.shape()));
  const auto scheme = scheme_for(block, height, width);
  const std::size_t m = pv.dim(0), n = pv.dim(1);
  require(yv.rank() == 2 && yv.dim(0) == scheme.block_count() && yv.dim(1) == m,
          "block_adjoint: measurements must be [blocks, M], got " + shape_string(yv.shape()));
  Tensor xb({scheme.block_count(), n});
  sensing::apply_transpose_blocks(pv.data(), m, n, yv.data(), xb.data());
  Tensor img = sensing::merge_blocks(xb, scheme).reshaped({1, height, width});
  return graph_of(y, phi).record(
      "block_adjoint", std::move(img), {y, phi},
      [scheme, m, n](const Tensor& g, auto in, auto grads) {
        const Tensor gb = sensing::partition_blocks(g, scheme);
        const Tensor& p = *in[1];
        const Tensor& yv = *in[0];
        if (grads[0]) {
          Tensor gy({scheme.block_count(), m});
          sensing::apply_matrix_blocks(p.data(), m, n, gb.data(), gy.data());
          for (std::size_t i = 0; i < gy.size(); ++i) (*grads[0])[i] += gy[i];
        }
        if (grads[1]) {
          Tensor& gp = *grads[1];
          for (std::size_t b = 0; b < scheme.block_count(); ++b)
            for (std::size_t i = 0; i < m; ++i) {
              const double yi = yv[b * m + i];
              double* row = gp.data().data() + i * n;
              const double* gr = gb.data().data() + b * n;
              for (std::size_t j = 0; j < n; ++j) row[j] += yi * gr[j];
            }
        }
      });
}

}  // namespace dmpcs::ad
