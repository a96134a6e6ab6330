// Copyright 2026 The Spiketrain Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "spiketrain/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace spiketrain {

namespace {

[[noreturn]] void fail(const std::string& op, const std::string& what) {
  throw std::invalid_argument(op + ": " + what);
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    fail(op, "shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

// C(m,n) = A(m,k) * B(k,n); fixed i,l,j accumulation order.
void gemm_nn(const double* a, const double* b, double* c, index_t m, index_t k, index_t n) {
  std::fill(c, c + m * n, 0.0);
  for (index_t i = 0; i < m; ++i) {
    for (index_t l = 0; l < k; ++l) {
      const double av = a[i * k + l];
      if (av == 0.0) continue;
      const double* brow = b + l * n;
      double* crow = c + i * n;
      for (index_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C(m,n) = A(m,p) * B(n,p)^T
void gemm_nt(const double* a, const double* b, double* c, index_t m, index_t p, index_t n) {
  for (index_t i = 0; i < m; ++i) {
    const double* arow = a + i * p;
    for (index_t j = 0; j < n; ++j) {
      const double* brow = b + j * p;
      double acc = 0.0;
      for (index_t l = 0; l < p; ++l) acc += arow[l] * brow[l];
      c[i * n + j] = acc;
    }
  }
}

// C(k,n) = A(m,k)^T * B(m,n)
void gemm_tn(const double* a, const double* b, double* c, index_t m, index_t k, index_t n) {
  std::fill(c, c + k * n, 0.0);
  for (index_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    const double* brow = b + i * n;
    for (index_t l = 0; l < k; ++l) {
      const double av = arow[l];
      if (av == 0.0) continue;
      double* crow = c + l * n;
      for (index_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

struct ConvDims {
  index_t batch, cin, h, w, cout, kh, kw, ho, wo;
};

ConvDims conv_dims(const Tensor& x, const Tensor& w, int pad) {
  if (x.ndim() != 4) fail("conv2d", "input must be 4-d, got " + shape_str(x.shape()));
  if (w.ndim() != 4) fail("conv2d", "weight must be 4-d, got " + shape_str(w.shape()));
  ConvDims d;
  d.batch = x.dim(0);
  d.cin = x.dim(1);
  d.h = x.dim(2);
  d.w = x.dim(3);
  d.cout = w.dim(0);
  d.kh = w.dim(2);
  d.kw = w.dim(3);
  if (w.dim(1) != d.cin) {
    fail("conv2d", "channel mismatch: input " + shape_str(x.shape()) + " vs weight " +
                       shape_str(w.shape()));
  }
  d.ho = d.h + 2 * pad - d.kh + 1;
  d.wo = d.w + 2 * pad - d.kw + 1;
  if (d.ho < 1 || d.wo < 1) {
    fail("conv2d", "kernel " + shape_str(w.shape()) + " larger than padded input " +
                       shape_str(x.shape()));
  }
  return d;
}

// Patch matrix (N*Ho*Wo, Cin*kh*kw); out-of-bounds taps are zero.
std::vector<double> im2col(const Tensor& x, const ConvDims& d, int pad) {
  const index_t cols = d.cin * d.kh * d.kw;
  std::vector<double> patches(static_cast<std::size_t>(d.batch * d.ho * d.wo * cols), 0.0);
  const double* xp = x.data();
  for (index_t n = 0; n < d.batch; ++n) {
    for (index_t oy = 0; oy < d.ho; ++oy) {
      for (index_t ox = 0; ox < d.wo; ++ox) {
        double* row = patches.data() + ((n * d.ho + oy) * d.wo + ox) * cols;
        for (index_t c = 0; c < d.cin; ++c) {
          for (index_t dy = 0; dy < d.kh; ++dy) {
            const index_t iy = oy + dy - pad;
            if (iy < 0 || iy >= d.h) continue;
            for (index_t dx = 0; dx < d.kw; ++dx) {
              const index_t ix = ox + dx - pad;
              if (ix < 0 || ix >= d.w) continue;
              row[(c * d.kh + dy) * d.kw + dx] = xp[((n * d.cin + c) * d.h + iy) * d.w + ix];
            }
          }
        }
      }
    }
  }
  return patches;
}

// Scatter-add of the patch-space gradient back onto the input layout.
void col2im(const std::vector<double>& dpatches, const ConvDims& d, int pad, Tensor& dx) {
  const index_t cols = d.cin * d.kh * d.kw;
  double* xp = dx.data();
  for (index_t n = 0; n < d.batch; ++n) {
    for (index_t oy = 0; oy < d.ho; ++oy) {
      for (index_t ox = 0; ox < d.wo; ++ox) {
        const double* row = dpatches.data() + ((n * d.ho + oy) * d.wo + ox) * cols;
        for (index_t c = 0; c < d.cin; ++c) {
          for (index_t dy = 0; dy < d.kh; ++dy) {
            const index_t iy = oy + dy - pad;
            if (iy < 0 || iy >= d.h) continue;
            for (index_t dx_ = 0; dx_ < d.kw; ++dx_) {
              const index_t ix = ox + dx_ - pad;
              if (ix < 0 || ix >= d.w) continue;
              xp[((n * d.cin + c) * d.h + iy) * d.w + ix] += row[(c * d.kh + dy) * d.kw + dx_];
            }
          }
        }
      }
    }
  }
}

}  // namespace

Tape::Node& Tape::node(Var v) {
  if (!v.valid() || static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw std::logic_error("invalid tape handle");
  }
  return nodes_[static_cast<std::size_t>(v.id)];
}

const Tape::Node& Tape::node(Var v) const {
  if (!v.valid() || static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw std::logic_error("invalid tape handle");
  }
  return nodes_[static_cast<std::size_t>(v.id)];
}

Tensor& Tape::adjoint_of(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.adjoint.empty()) n.adjoint = Tensor(n.value.shape());
  return n.adjoint;
}

Var Tape::record(Tensor value, std::vector<int> inputs,
                 std::function<void(Tape&, int)> backward_fn) {
  Node n;
  n.value = std::move(value);
  n.inputs = std::move(inputs);
  n.backward = std::move(backward_fn);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(Tensor value, bool is_param) {
  Var v = record(std::move(value), {}, nullptr);
  nodes_.back().is_param = is_param;
  return v;
}

const Tensor& Tape::value(Var v) const { return node(v).value; }

const Tensor* Tape::grad_ptr(Var v) const {
  const Node& n = node(v);
  return n.adjoint.empty() ? nullptr : &n.adjoint;
}

Tensor Tape::grad(Var v) const {
  const Node& n = node(v);
  if (n.adjoint.empty()) return Tensor(n.value.shape());
  return n.adjoint;
}

// ---------------------------------------------------------------------------
// elementwise
// ---------------------------------------------------------------------------

Var Tape::add(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  require_same_shape("add", av, bv);
  Tensor out(av.shape());
  for (index_t i = 0; i < av.numel(); ++i) out[i] = av[i] + bv[i];
  return record(std::move(out), {a.id, b.id}, [](Tape& t, int id) {
    const Node& self = t.nodes_[static_cast<std::size_t>(id)];
    Tensor& da = t.adjoint_of(self.inputs[0]);
    Tensor& db = t.adjoint_of(self.inputs[1]);
    for (index_t i = 0; i < self.adjoint.numel(); ++i) {
      da[i] += self.adjoint[i];
      db[i] += self.adjoint[i];
    }
  });
}

Var Tape::sub(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  require_same_shape("sub", av, bv);
  Tensor out(av.shape());
  for (index_t i = 0; i < av.numel(); ++i) out[i] = av[i] - bv[i];
  return record(std::move(out), {a.id, b.id}, [](Tape& t, int id) {
    const Node& self = t.nodes_[static_cast<std::size_t>(id)];
    Tensor& da = t.adjoint_of(self.inputs[0]);
    Tensor& db = t.adjoint_of(self.inputs[1]);
    for (index_t i = 0; i < self.adjoint.numel(); ++i) {
      da[i] += self.adjoint[i];
      db[i] -= self.adjoint[i];
    }
  });
}

Var Tape::mul(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  require_same_shape("mul", av, bv);
  Tensor out(av.shape());
  for (index_t i = 0; i < av.numel(); ++i) out[i] = av[i] * bv[i];
  return record(std::move(out), {a.id, b.id}, [](Tape& t, int id) {
    const Node& self = t.nodes_[static_cast<std::size_t>(id)];
    const Tensor& av = t.nodes_[static_cast<std::size_t>(self.inputs[0])].value;
    const Tensor& bv = t.nodes_[static_cast<std::size_t>(self.inputs[1])].value;
    Tensor& da = t.adjoint_of(self.inputs[0]);
    Tensor& db = t.adjoint_of(self.inputs[1]);
    for (index_t i = 0; i < self.adjoint.numel(); ++i) {
      da[i] += self.adjoint[i] * bv[i];
      db[i] += self.adjoint[i] * av[i];
    }
  });
}

Var Tape::scale(Var a, double s) {
  const Tensor& av = value(a);
  Tensor out(av.shape());
  for (index_t i = 0; i < av.numel(); ++i) out[i] = av[i] * s;
  return record(std::move(out), {a.id}, [s](Tape& t, int id) {
    const Node& self = t.nodes_[static_cast<std::size_t>(id)];
    Tensor& da = t.adjoint_of(self.inputs[0]);
    for (index_t i = 0; i < self.adjoint.numel(); ++i) da[i] += self.adjoint[i] * s;
  });
}

Var Tape::add_scalar(Var a, double s) {
  const Tensor& av = value(a);
  Tensor out(av.shape());
  for (index_t i = 0; i < av.numel(); ++i) out[i] = av[i] + s;
  return record(std::move(out), {a.id}, [](Tape& t, int id) {
    const Node& self = t.nodes_[static_cast<std::size_t>(id)];
    Tensor& da = t.adjoint_of(self.inputs[0]);
    for (index_t i = 0; i < self.adjoint.numel(); ++i) da[i] += self.adjoint[i];
  });
}

Var Tape::square(Var a) {
  const Tensor& av = value(a);
  Tensor out(av.shape());
  for (index_t i = 0; i < av.numel(); ++i) out[i] = av[i] * av[i];
  return record(std::move(out), {a.id}, [](Tape& t, int id) {
    const Node& self = t.nodes_[static_cast<std::size_t>(id)];
    const Tensor& av = t.nodes_[static_cast<std::size_t>(self.inputs[0])].value;
    Tensor& da = t.adjoint_of(self.inputs[0]);
    for (index_t i = 0; i < self.adjoint.numel(); ++i) da[i] += self.adjoint[i] * 2.0 * av[i];
  });
}

Var Tape::custom_unary(Var a, const std::function<double(double)>& forward_fn,
                       const std::function<double(double, double)>& grad_fn) {
  const Tensor& av = value(a);
  Tensor out(av.shape());
  for (index_t i = 0; i < av.numel(); ++i) out[i] = forward_fn(av[i]);
  return record(std::move(out), {a.id}, [grad_fn](Tape& t, int id) {
    const Node& self = t.nodes_[static_cast<std::size_t>(id)];
    const Tensor& av = t.nodes_[static_cast<std::size_t>(self.inputs[0])].value;
    Tensor& da = t.adjoint_of(self.inputs[0]);
    for (index_t i = 0; i < self.adjoint.numel(); ++i) {
      da[i] += self.adjoint[i] * grad_fn(av[i], self.value[i]);
    }
  });
}

Var Tape::detach(Var a) { return leaf(value(a), false); }

// ---------------------------------------------------------------------------
// shape
// ---------------------------------------------------------------------------

Var Tape::reshape(Var a, std::vector<index_t> shape) {
  const Tensor& av = value(a);
  if (shape_numel(shape) != av.numel()) {
    fail("reshape", "cannot view " + shape_str(av.shape()) + " as " + shape_str(shape));
  }
  Tensor out(std::move(shape), av.values());
  return record(std::move(out), {a.id}, [](Tape& t, int id) {
    const Node& self = t.nodes_[static_cast<std::size_t>(id)];
    Tensor& da = t.adjoint_of(self.inputs[0]);
    for (index_t i = 0; i < self.adjoint.numel(); ++i) da[i] += self.adjoint[i];
  });
}

namespace {

// Flat-index map from a full shape onto a reduced shape where `collapsed`
// axes contribute stride 0. Used by both broadcast and reductions.
struct AxisMap {
  std::vector<index_t> full_shape;
  std::vector<index_t> stride;  // per full axis; 0 on collapsed axes

  static AxisMap make(const std::vector<index_t>& full, const std::vector<bool>& collapsed) {
    AxisMap m;
    m.full_shape = full;
    m.stride.assign(full.size(), 0);
    index_t s = 1;
    for (int a = static_cast<int>(full.size()) - 1; a >= 0; --a) {
      if (!collapsed[static_cast<std::size_t>(a)]) {
        m.stride[static_cast<std::size_t>(a)] = s;
        s *= full[static_cast<std::size_t>(a)];
      }
    }
    return m;
  }

  // Applies fn(full_flat, reduced_flat) over every element of the full shape.
  template <class Fn>
  void for_each(Fn&& fn) const {
    const std::size_t d = full_shape.size();
    std::vector<index_t> idx(d, 0);
    const index_t n = shape_numel(full_shape);
    index_t reduced = 0;
    for (index_t flat = 0; flat < n; ++flat) {
      fn(flat, reduced);
      for (int a = static_cast<int>(d) - 1; a >= 0; --a) {
        const std::size_t ua = static_cast<std::size_t>(a);
        ++idx[ua];
        reduced += stride[ua];
        if (idx[ua] < full_shape[ua]) break;
        reduced -= stride[ua] * full_shape[ua];
        idx[ua] = 0;
      }
    }
  }
};

std::vector<bool> axes_mask(const char* op, std::size_t ndim, const std::vector<int>& axes) {
  std::vector<bool> mask(ndim, false);
  for (int a : axes) {
    if (a < 0 || static_cast<std::size_t>(a) >= ndim) {
      fail(op, "axis " + std::to_string(a) + " out of range for rank " + std::to_string(ndim));
    }
    mask[static_cast<std::size_t>(a)] = true;
  }
  return mask;
}

std::vector<index_t> reduced_shape(const std::vector<index_t>& in, const std::vector<bool>& mask,
                                   bool keepdims) {
  std::vector<index_t> out;
  for (std::size_t a = 0; a < in.size(); ++a) {
    if (mask[a]) {
      if (keepdims) out.push_back(1);
    } else {
      out.push_back(in[a]);
    }
  }
  return out;
}

}  // namespace

Var Tape::broadcast(Var a, std::vector<index_t> shape) {
  const Tensor& av = value(a);
  if (av.ndim() != shape.size()) {
    fail("broadcast", "rank mismatch " + shape_str(av.shape()) + " vs " + shape_str(shape));
  }
  std::vector<bool> expanded(shape.size(), false);
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (av.dim(i) == shape[i]) continue;
    if (av.dim(i) == 1) {
      expanded[i] = true;
    } else {
      fail("broadcast", "cannot expand " + shape_str(av.shape()) + " to " + shape_str(shape));
    }
  }
  AxisMap map = AxisMap::make(shape, expanded);
  Tensor out(shape);
  map.for_each([&](index_t flat, index_t src) { out[flat] = av[src]; });
  return record(std::move(out), {a.id}, [map](Tape& t, int id) {
    const Node& self = t.nodes_[static_cast<std::size_t>(id)];
    Tensor& da = t.adjoint_of(self.inputs[0]);
    map.for_each([&](index_t flat, index_t src) { da[src] += self.adjoint[flat]; });
  });
}

Var Tape::reduce_sum(Var a, std::vector<int> axes, bool keepdims) {
  const Tensor& av = value(a);
  std::vector<bool> mask = axes_mask("reduce_sum", av.ndim(), axes);
  AxisMap map = AxisMap::make(av.shape(), mask);
  Tensor out(reduced_shape(av.shape(), mask, keepdims));
  map.for_each([&](index_t flat, index_t dst) { out[dst] += av[flat]; });
  return record(std::move(out), {a.id}, [map](Tape& t, int id) {
    const Node& self = t.nodes_[static_cast<std::size_t>(id)];
    Tensor& da = t.adjoint_of(self.inputs[0]);
    map.for_each([&](index_t flat, index_t dst) { da[flat] += self.adjoint[dst]; });
  });
}

Var Tape::reduce_mean(Var a, std::vector<int> axes, bool keepdims) {
  const Tensor& av = value(a);
  std::vector<bool> mask = axes_mask("reduce_mean", av.ndim(), axes);
  index_t count = 1;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) count *= av.dim(i);
  }
  if (count == 0) fail("reduce_mean", "mean over zero elements of " + shape_str(av.shape()));
  AxisMap map = AxisMap::make(av.shape(), mask);
  const double inv = 1.0 / static_cast<double>(count);
  Tensor out(reduced_shape(av.shape(), mask, keepdims));
  map.for_each([&](index_t flat, index_t dst) { out[dst] += av[flat] * inv; });
  return record(std::move(out), {a.id}, [map, inv](Tape& t, int id) {
    const Node& self = t.nodes_[static_cast<std::size_t>(id)];
    Tensor& da = t.adjoint_of(self.inputs[0]);
    map.for_each([&](index_t flat, index_t dst) { da[flat] += self.adjoint[dst] * inv; });
  });
}

Var Tape::concat0(const std::vector<Var>& parts) {
  if (parts.empty()) fail("concat0", "no inputs");
  const Tensor& first = value(parts[0]);
  std::vector<index_t> shape = first.shape();
  if (shape.empty()) fail("concat0", "cannot concatenate scalars");
  index_t rows = 0;
  std::vector<int> ids;
  for (const Var& p : parts) {
    const Tensor& pv = value(p);
    if (pv.ndim() != shape.size()) {
      fail("concat0", "rank mismatch " + shape_str(pv.shape()) + " vs " + shape_str(shape));
    }
    for (std::size_t i = 1; i < shape.size(); ++i) {
      if (pv.dim(i) != shape[i]) {
        fail("concat0", "trailing-dim mismatch " + shape_str(pv.shape()) + " vs " +
                            shape_str(shape));
      }
    }
    rows += pv.dim(0);
    ids.push_back(p.id);
  }
  shape[0] = rows;
  Tensor out(shape);
  index_t offset = 0;
  for (const Var& p : parts) {
    const Tensor& pv = value(p);
    std::copy(pv.data(), pv.data() + pv.numel(), out.data() + offset);
    offset += pv.numel();
  }
  return record(std::move(out), std::move(ids), [](Tape& t, int id) {
    const Node& self = t.nodes_[static_cast<std::size_t>(id)];
    index_t offset = 0;
    for (int in : self.inputs) {
      Tensor& da = t.adjoint_of(in);
      for (index_t i = 0; i < da.numel(); ++i) da[i] += self.adjoint[offset + i];
      offset += da.numel();
    }
  });
}

std::vector<Var> Tape::split0(Var a, index_t parts) {
  // Copy: recording the pieces below may reallocate node storage.
  const Tensor av = value(a);
  if (av.ndim() == 0 || parts < 1 || av.dim(0) % parts != 0) {
    fail("split0", "cannot split " + shape_str(av.shape()) + " into " + std::to_string(parts) +
                       " parts");
  }
  std::vector<index_t> shape = av.shape();
  shape[0] /= parts;
  const index_t chunk = shape_numel(shape);
  std::vector<Var> out;
  out.reserve(static_cast<std::size_t>(parts));
  for (index_t p = 0; p < parts; ++p) {
    Tensor piece(shape, std::vector<double>(av.data() + p * chunk, av.data() + (p + 1) * chunk));
    const index_t offset = p * chunk;
    out.push_back(record(std::move(piece), {a.id}, [offset](Tape& t, int id) {
      const Node& self = t.nodes_[static_cast<std::size_t>(id)];
      Tensor& da = t.adjoint_of(self.inputs[0]);
      for (index_t i = 0; i < self.adjoint.numel(); ++i) da[offset + i] += self.adjoint[i];
    }));
  }
  return out;
}

// ---------------------------------------------------------------------------
// linear algebra
// ---------------------------------------------------------------------------

Var Tape::matmul(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  if (av.ndim() != 2 || bv.ndim() != 2 || av.dim(1) != bv.dim(0)) {
    fail("matmul", "incompatible shapes " + shape_str(av.shape()) + " x " + shape_str(bv.shape()));
  }
  const index_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  Tensor out({m, n});
  gemm_nn(av.data(), bv.data(), out.data(), m, k, n);
  return record(std::move(out), {a.id, b.id}, [m, k, n](Tape& t, int id) {
    const Node& self = t.nodes_[static_cast<std::size_t>(id)];
    const Tensor& av = t.nodes_[static_cast<std::size_t>(self.inputs[0])].value;
    const Tensor& bv = t.nodes_[static_cast<std::size_t>(self.inputs[1])].value;
    Tensor da({m, k});
    Tensor db({k, n});
    gemm_nt(self.adjoint.data(), bv.data(), da.data(), m, n, k);
    gemm_tn(av.data(), self.adjoint.data(), db.data(), m, k, n);
    Tensor& ga = t.adjoint_of(self.inputs[0]);
    Tensor& gb = t.adjoint_of(self.inputs[1]);
    for (index_t i = 0; i < da.numel(); ++i) ga[i] += da[i];
    for (index_t i = 0; i < db.numel(); ++i) gb[i] += db[i];
  });
}

Var Tape::conv2d(Var x, Var w, int pad) {
  const Tensor& xv = value(x);
  const Tensor& wv = value(w);
  const ConvDims d = conv_dims(xv, wv, pad);
  const index_t rows = d.batch * d.ho * d.wo;
  const index_t cols = d.cin * d.kh * d.kw;
  const std::vector<double> patches = im2col(xv, d, pad);

  // (rows, cols) x (cout, cols)^T -> (rows, cout), then to (N, Cout, Ho, Wo).
  std::vector<double> prod(static_cast<std::size_t>(rows * d.cout));
  gemm_nt(patches.data(), wv.data(), prod.data(), rows, cols, d.cout);
  Tensor out({d.batch, d.cout, d.ho, d.wo});
  for (index_t n = 0; n < d.batch; ++n) {
    for (index_t oy = 0; oy < d.ho; ++oy) {
      for (index_t ox = 0; ox < d.wo; ++ox) {
        const index_t r = (n * d.ho + oy) * d.wo + ox;
        for (index_t f = 0; f < d.cout; ++f) {
          out[((n * d.cout + f) * d.ho + oy) * d.wo + ox] = prod[r * d.cout + f];
        }
      }
    }
  }

  return record(std::move(out), {x.id, w.id}, [d, pad](Tape& t, int id) {
    const Node& self = t.nodes_[static_cast<std::size_t>(id)];
    const Tensor& xv = t.nodes_[static_cast<std::size_t>(self.inputs[0])].value;
    const Tensor& wv = t.nodes_[static_cast<std::size_t>(self.inputs[1])].value;
    const index_t rows = d.batch * d.ho * d.wo;
    const index_t cols = d.cin * d.kh * d.kw;

    // Adjoint back to (rows, cout) layout.
    std::vector<double> dprod(static_cast<std::size_t>(rows * d.cout));
    for (index_t n = 0; n < d.batch; ++n) {
      for (index_t f = 0; f < d.cout; ++f) {
        for (index_t oy = 0; oy < d.ho; ++oy) {
          for (index_t ox = 0; ox < d.wo; ++ox) {
            dprod[((n * d.ho + oy) * d.wo + ox) * d.cout + f] =
                self.adjoint[((n * d.cout + f) * d.ho + oy) * d.wo + ox];
          }
        }
      }
    }

    const std::vector<double> patches = im2col(xv, d, pad);

    // dW = dY^T * P
    Tensor dw({d.cout, d.cin, d.kh, d.kw});
    gemm_tn(dprod.data(), patches.data(), dw.data(), rows, d.cout, cols);

    // dP = dY * W, then scatter back to input layout.
    std::vector<double> dpatches(static_cast<std::size_t>(rows * cols));
    gemm_nn(dprod.data(), wv.data(), dpatches.data(), rows, d.cout, cols);
    Tensor dx({d.batch, d.cin, d.h, d.w});
    col2im(dpatches, d, pad, dx);

    Tensor& gx = t.adjoint_of(self.inputs[0]);
    Tensor& gw = t.adjoint_of(self.inputs[1]);
    for (index_t i = 0; i < dx.numel(); ++i) gx[i] += dx[i];
    for (index_t i = 0; i < dw.numel(); ++i) gw[i] += dw[i];
  });
}

Var Tape::avg_pool(Var x, int k) {
  const Tensor& xv = value(x);
  if (xv.ndim() != 4) fail("avg_pool", "input must be 4-d, got " + shape_str(xv.shape()));
  if (k < 1) fail("avg_pool", "window must be >= 1");
  const index_t n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
  const index_t ho = h / k, wo = w / k;
  if (ho < 1 || wo < 1) {
    fail("avg_pool", "window " + std::to_string(k) + " larger than input " +
                         shape_str(xv.shape()));
  }
  const double inv = 1.0 / static_cast<double>(k * k);
  Tensor out({n, c, ho, wo});
  for (index_t in = 0; in < n; ++in) {
    for (index_t ic = 0; ic < c; ++ic) {
      for (index_t oy = 0; oy < ho; ++oy) {
        for (index_t ox = 0; ox < wo; ++ox) {
          double acc = 0.0;
          for (index_t dy = 0; dy < k; ++dy) {
            for (index_t dx = 0; dx < k; ++dx) {
              acc += xv[((in * c + ic) * h + oy * k + dy) * w + ox * k + dx];
            }
          }
          out[((in * c + ic) * ho + oy) * wo + ox] = acc * inv;
        }
      }
    }
  }
  return record(std::move(out), {x.id}, [n, c, h, w, ho, wo, k, inv](Tape& t, int id) {
    const Node& self = t.nodes_[static_cast<std::size_t>(id)];
    Tensor& dx = t.adjoint_of(self.inputs[0]);
    for (index_t in = 0; in < n; ++in) {
      for (index_t ic = 0; ic < c; ++ic) {
        for (index_t oy = 0; oy < ho; ++oy) {
          for (index_t ox = 0; ox < wo; ++ox) {
            const double g = self.adjoint[((in * c + ic) * ho + oy) * wo + ox] * inv;
            for (index_t dy = 0; dy < k; ++dy) {
              for (index_t dx_ = 0; dx_ < k; ++dx_) {
                dx[((in * c + ic) * h + oy * k + dy) * w + ox * k + dx_] += g;
              }
            }
          }
        }
      }
    }
  });
}

Var Tape::softmax_cross_entropy(Var logits, std::vector<int> labels) {
  const Tensor& lv = value(logits);
  if (lv.ndim() != 2) {
    fail("softmax_cross_entropy", "logits must be 2-d, got " + shape_str(lv.shape()));
  }
  const index_t n = lv.dim(0), k = lv.dim(1);
  if (static_cast<index_t>(labels.size()) != n) {
    fail("softmax_cross_entropy", "expected " + std::to_string(n) + " labels, got " +
                                      std::to_string(labels.size()));
  }
  for (index_t i = 0; i < n; ++i) {
    if (labels[static_cast<std::size_t>(i)] < 0 || labels[static_cast<std::size_t>(i)] >= k) {
      fail("softmax_cross_entropy", "invalid class index " +
                                        std::to_string(labels[static_cast<std::size_t>(i)]) +
                                        " at row " + std::to_string(i) + " for " +
                                        std::to_string(k) + " classes");
    }
  }
  double loss = 0.0;
  for (index_t i = 0; i < n; ++i) {
    const double* row = lv.data() + i * k;
    double m = row[0];
    for (index_t j = 1; j < k; ++j) m = std::max(m, row[j]);
    double lse = 0.0;
    for (index_t j = 0; j < k; ++j) lse += std::exp(row[j] - m);
    lse = std::log(lse);
    loss += lse - (row[labels[static_cast<std::size_t>(i)]] - m);
  }
  loss /= static_cast<double>(n);
  return record(Tensor::scalar(loss), {logits.id}, [labels, n, k](Tape& t, int id) {
    const Node& self = t.nodes_[static_cast<std::size_t>(id)];
    const Tensor& lv = t.nodes_[static_cast<std::size_t>(self.inputs[0])].value;
    Tensor& dl = t.adjoint_of(self.inputs[0]);
    const double g = self.adjoint[0] / static_cast<double>(n);
    for (index_t i = 0; i < n; ++i) {
      const double* row = lv.data() + i * k;
      double m = row[0];
      for (index_t j = 1; j < k; ++j) m = std::max(m, row[j]);
      double z = 0.0;
      for (index_t j = 0; j < k; ++j) z += std::exp(row[j] - m);
      for (index_t j = 0; j < k; ++j) {
        const double p = std::exp(row[j] - m) / z;
        dl[i * k + j] += g * (p - (j == labels[static_cast<std::size_t>(i)] ? 1.0 : 0.0));
      }
    }
  });
}

// ---------------------------------------------------------------------------
// reverse pass
// ---------------------------------------------------------------------------

void Tape::backward(Var output, const Tensor& seed) {
  if (nodes_.empty()) return;  // nothing recorded: all gradients are zero
  const Node& out = node(output);
  if (!out.value.same_shape(seed)) {
    fail("backward", "seed shape " + shape_str(seed.shape()) + " does not match output " +
                         shape_str(out.value.shape()));
  }
  for (Node& n : nodes_) n.adjoint = Tensor();
  nodes_[static_cast<std::size_t>(output.id)].adjoint = seed;
  for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.backward) continue;       // leaf
    if (n.adjoint.empty()) continue; // not on any path to the output
    n.backward(*this, id);
  }
}

void Tape::backward(Var output) {
  const Tensor& v = value(output);
  backward(output, Tensor::full(v.shape(), 1.0));
}

}  // namespace spiketrain
