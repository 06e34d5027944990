// rescore/ops.cc

// Copyright 2026  The rescore Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "rescore/ops.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rescore {
namespace nn {

namespace {

bool any_tracked(std::initializer_list<const Tensor *> ins) {
  if (Tape::active() == nullptr) return false;
  for (const Tensor *t : ins)
    if (t->defined() && t->tracked()) return true;
  return false;
}

Tensor make_output(Shape shape, std::vector<double> values, bool track) {
  Tensor out = Tensor::constant(std::move(shape), std::move(values));
  if (track) {
    out.impl()->tracked = true;
    out.impl()->g.assign(out.values().size(), 0.0);
  }
  return out;
}

void check_same_shape(const char *op, const Tensor &a, const Tensor &b) {
  if (a.shape() != b.shape())
    throw DimError(strcat_all(op, ": shape mismatch ", shape_str(a.shape()),
                              " vs ", shape_str(b.shape())));
}

void check_vector(const char *op, const Tensor &t) {
  if (t.shape().size() != 1)
    throw DimError(strcat_all(op, ": expected a vector, got ",
                              shape_str(t.shape())));
}

void check_matrix(const char *op, const Tensor &t) {
  if (t.shape().size() != 2)
    throw DimError(strcat_all(op, ": expected a matrix, got ",
                              shape_str(t.shape())));
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor add(const Tensor &a, const Tensor &b) {
  check_same_shape("add", a, b);
  std::vector<double> v(a.numel());
  for (int i = 0; i < a.numel(); ++i) v[i] = a.values()[i] + b.values()[i];
  bool track = any_tracked({&a, &b});
  Tensor out = make_output(a.shape(), std::move(v), track);
  if (track) {
    auto ai = a.impl(), bi = b.impl(), oi = out.impl();
    Tape::active()->record([ai, bi, oi] {
      if (ai->tracked)
        for (size_t i = 0; i < oi->g.size(); ++i) ai->g[i] += oi->g[i];
      if (bi->tracked)
        for (size_t i = 0; i < oi->g.size(); ++i) bi->g[i] += oi->g[i];
    });
  }
  return out;
}

Tensor sub(const Tensor &a, const Tensor &b) {
  check_same_shape("sub", a, b);
  std::vector<double> v(a.numel());
  for (int i = 0; i < a.numel(); ++i) v[i] = a.values()[i] - b.values()[i];
  bool track = any_tracked({&a, &b});
  Tensor out = make_output(a.shape(), std::move(v), track);
  if (track) {
    auto ai = a.impl(), bi = b.impl(), oi = out.impl();
    Tape::active()->record([ai, bi, oi] {
      if (ai->tracked)
        for (size_t i = 0; i < oi->g.size(); ++i) ai->g[i] += oi->g[i];
      if (bi->tracked)
        for (size_t i = 0; i < oi->g.size(); ++i) bi->g[i] -= oi->g[i];
    });
  }
  return out;
}

Tensor mul(const Tensor &a, const Tensor &b) {
  check_same_shape("mul", a, b);
  std::vector<double> v(a.numel());
  for (int i = 0; i < a.numel(); ++i) v[i] = a.values()[i] * b.values()[i];
  bool track = any_tracked({&a, &b});
  Tensor out = make_output(a.shape(), std::move(v), track);
  if (track) {
    auto ai = a.impl(), bi = b.impl(), oi = out.impl();
    Tape::active()->record([ai, bi, oi] {
      if (ai->tracked)
        for (size_t i = 0; i < oi->g.size(); ++i) ai->g[i] += oi->g[i] * bi->v[i];
      if (bi->tracked)
        for (size_t i = 0; i < oi->g.size(); ++i) bi->g[i] += oi->g[i] * ai->v[i];
    });
  }
  return out;
}

Tensor scale(const Tensor &a, double c) {
  std::vector<double> v(a.numel());
  for (int i = 0; i < a.numel(); ++i) v[i] = c * a.values()[i];
  bool track = any_tracked({&a});
  Tensor out = make_output(a.shape(), std::move(v), track);
  if (track) {
    auto ai = a.impl(), oi = out.impl();
    Tape::active()->record([ai, oi, c] {
      for (size_t i = 0; i < oi->g.size(); ++i) ai->g[i] += c * oi->g[i];
    });
  }
  return out;
}

Tensor add_const(const Tensor &a, const std::vector<double> &c) {
  RESCORE_CHECK(c.size() == static_cast<size_t>(a.numel()),
                "add_const: constant length ", c.size(), " vs tensor ",
                shape_str(a.shape()));
  std::vector<double> v(a.numel());
  for (int i = 0; i < a.numel(); ++i) v[i] = a.values()[i] + c[i];
  bool track = any_tracked({&a});
  Tensor out = make_output(a.shape(), std::move(v), track);
  if (track) {
    auto ai = a.impl(), oi = out.impl();
    Tape::active()->record([ai, oi] {
      for (size_t i = 0; i < oi->g.size(); ++i) ai->g[i] += oi->g[i];
    });
  }
  return out;
}

Tensor axpb(const Tensor &x, double a, const std::vector<double> &b) {
  RESCORE_CHECK(b.size() == static_cast<size_t>(x.numel()),
                "axpb: constant length ", b.size(), " vs tensor ",
                shape_str(x.shape()));
  std::vector<double> v(x.numel());
  for (int i = 0; i < x.numel(); ++i) v[i] = a * x.values()[i] + b[i];
  bool track = any_tracked({&x});
  Tensor out = make_output(x.shape(), std::move(v), track);
  if (track) {
    auto xi = x.impl(), oi = out.impl();
    Tape::active()->record([xi, oi, a] {
      for (size_t i = 0; i < oi->g.size(); ++i) xi->g[i] += a * oi->g[i];
    });
  }
  return out;
}

Tensor sigmoid(const Tensor &x) {
  std::vector<double> v(x.numel());
  for (int i = 0; i < x.numel(); ++i) v[i] = stable_sigmoid(x.values()[i]);
  bool track = any_tracked({&x});
  Tensor out = make_output(x.shape(), std::move(v), track);
  if (track) {
    auto xi = x.impl(), oi = out.impl();
    Tape::active()->record([xi, oi] {
      for (size_t i = 0; i < oi->g.size(); ++i)
        xi->g[i] += oi->g[i] * oi->v[i] * (1.0 - oi->v[i]);
    });
  }
  return out;
}

Tensor tanh_op(const Tensor &x) {
  std::vector<double> v(x.numel());
  for (int i = 0; i < x.numel(); ++i) v[i] = std::tanh(x.values()[i]);
  bool track = any_tracked({&x});
  Tensor out = make_output(x.shape(), std::move(v), track);
  if (track) {
    auto xi = x.impl(), oi = out.impl();
    Tape::active()->record([xi, oi] {
      for (size_t i = 0; i < oi->g.size(); ++i)
        xi->g[i] += oi->g[i] * (1.0 - oi->v[i] * oi->v[i]);
    });
  }
  return out;
}

Tensor affine(const Tensor &x, const Tensor &w, const Tensor &b) {
  check_vector("affine", x);
  check_matrix("affine", w);
  check_vector("affine", b);
  const int in = w.dim(0), out_dim = w.dim(1);
  if (x.dim(0) != in || b.dim(0) != out_dim)
    throw DimError(strcat_all("affine: x ", shape_str(x.shape()), ", b ",
                              shape_str(b.shape()),
                              " incompatible with W ", shape_str(w.shape())));
  std::vector<double> y(b.values());
  const auto &xv = x.values();
  const auto &wv = w.values();
  for (int k = 0; k < in; ++k) {
    const double xk = xv[k];
    if (xk == 0.0) continue;
    const double *wrow = wv.data() + static_cast<size_t>(k) * out_dim;
    for (int j = 0; j < out_dim; ++j) y[j] += xk * wrow[j];
  }
  bool track = any_tracked({&x, &w, &b});
  Tensor out = make_output({out_dim}, std::move(y), track);
  if (track) {
    auto xi = x.impl(), wi = w.impl(), bi = b.impl(), oi = out.impl();
    Tape::active()->record([xi, wi, bi, oi, in, out_dim] {
      const auto &dy = oi->g;
      if (xi->tracked) {
        for (int k = 0; k < in; ++k) {
          const double *wrow = wi->v.data() + static_cast<size_t>(k) * out_dim;
          double acc = 0.0;
          for (int j = 0; j < out_dim; ++j) acc += wrow[j] * dy[j];
          xi->g[k] += acc;
        }
      }
      if (wi->tracked) {
        for (int k = 0; k < in; ++k) {
          const double xk = xi->v[k];
          if (xk == 0.0) continue;
          double *gw = wi->g.data() + static_cast<size_t>(k) * out_dim;
          for (int j = 0; j < out_dim; ++j) gw[j] += xk * dy[j];
        }
      }
      if (bi->tracked)
        for (int j = 0; j < out_dim; ++j) bi->g[j] += dy[j];
    });
  }
  return out;
}

Tensor linear_rows(const Tensor &x, const Tensor &w, const Tensor &b) {
  check_matrix("linear_rows", x);
  check_matrix("linear_rows", w);
  const int t_len = x.dim(0), d = x.dim(1), c = w.dim(1);
  if (w.dim(0) != d)
    throw DimError(strcat_all("linear_rows: X ", shape_str(x.shape()),
                              " incompatible with W ", shape_str(w.shape())));
  if (b.defined() && (b.shape().size() != 1 || b.dim(0) != c))
    throw DimError(strcat_all("linear_rows: bias ", shape_str(b.shape()),
                              " incompatible with W ", shape_str(w.shape())));
  std::vector<double> y(static_cast<size_t>(t_len) * c, 0.0);
  for (int t = 0; t < t_len; ++t) {
    double *yr = y.data() + static_cast<size_t>(t) * c;
    if (b.defined())
      for (int j = 0; j < c; ++j) yr[j] = b.values()[j];
    const double *xr = x.values().data() + static_cast<size_t>(t) * d;
    for (int k = 0; k < d; ++k) {
      const double xk = xr[k];
      if (xk == 0.0) continue;
      const double *wrow = w.values().data() + static_cast<size_t>(k) * c;
      for (int j = 0; j < c; ++j) yr[j] += xk * wrow[j];
    }
  }
  Tensor bb = b;
  bool track = b.defined() ? any_tracked({&x, &w, &b}) : any_tracked({&x, &w});
  Tensor out = make_output({t_len, c}, std::move(y), track);
  if (track) {
    auto xi = x.impl(), wi = w.impl(), oi = out.impl();
    auto bimpl = b.defined() ? b.impl() : nullptr;
    Tape::active()->record([xi, wi, bimpl, oi, t_len, d, c] {
      for (int t = 0; t < t_len; ++t) {
        const double *dyr = oi->g.data() + static_cast<size_t>(t) * c;
        const double *xr = xi->v.data() + static_cast<size_t>(t) * d;
        if (xi->tracked) {
          double *dxr = xi->g.data() + static_cast<size_t>(t) * d;
          for (int k = 0; k < d; ++k) {
            const double *wrow = wi->v.data() + static_cast<size_t>(k) * c;
            double acc = 0.0;
            for (int j = 0; j < c; ++j) acc += wrow[j] * dyr[j];
            dxr[k] += acc;
          }
        }
        if (wi->tracked) {
          for (int k = 0; k < d; ++k) {
            const double xk = xr[k];
            if (xk == 0.0) continue;
            double *gw = wi->g.data() + static_cast<size_t>(k) * c;
            for (int j = 0; j < c; ++j) gw[j] += xk * dyr[j];
          }
        }
        if (bimpl && bimpl->tracked)
          for (int j = 0; j < c; ++j) bimpl->g[j] += dyr[j];
      }
    });
  }
  return out;
}

Tensor matvec(const Tensor &m, const Tensor &v) {
  check_matrix("matvec", m);
  check_vector("matvec", v);
  const int t_len = m.dim(0), a = m.dim(1);
  if (v.dim(0) != a)
    throw DimError(strcat_all("matvec: M ", shape_str(m.shape()), " vs v ",
                              shape_str(v.shape())));
  std::vector<double> e(t_len, 0.0);
  for (int t = 0; t < t_len; ++t) {
    const double *mr = m.values().data() + static_cast<size_t>(t) * a;
    double acc = 0.0;
    for (int k = 0; k < a; ++k) acc += mr[k] * v.values()[k];
    e[t] = acc;
  }
  bool track = any_tracked({&m, &v});
  Tensor out = make_output({t_len}, std::move(e), track);
  if (track) {
    auto mi = m.impl(), vi = v.impl(), oi = out.impl();
    Tape::active()->record([mi, vi, oi, t_len, a] {
      for (int t = 0; t < t_len; ++t) {
        const double de = oi->g[t];
        if (de == 0.0) continue;
        const double *mr = mi->v.data() + static_cast<size_t>(t) * a;
        if (mi->tracked) {
          double *gm = mi->g.data() + static_cast<size_t>(t) * a;
          for (int k = 0; k < a; ++k) gm[k] += de * vi->v[k];
        }
        if (vi->tracked)
          for (int k = 0; k < a; ++k) vi->g[k] += de * mr[k];
      }
    });
  }
  return out;
}

Tensor weighted_row_sum(const Tensor &m, const Tensor &w) {
  check_matrix("weighted_row_sum", m);
  check_vector("weighted_row_sum", w);
  const int t_len = m.dim(0), d = m.dim(1);
  if (w.dim(0) != t_len)
    throw DimError(strcat_all("weighted_row_sum: M ", shape_str(m.shape()),
                              " vs w ", shape_str(w.shape())));
  std::vector<double> y(d, 0.0);
  for (int t = 0; t < t_len; ++t) {
    const double wt = w.values()[t];
    const double *mr = m.values().data() + static_cast<size_t>(t) * d;
    for (int k = 0; k < d; ++k) y[k] += wt * mr[k];
  }
  bool track = any_tracked({&m, &w});
  Tensor out = make_output({d}, std::move(y), track);
  if (track) {
    auto mi = m.impl(), wi = w.impl(), oi = out.impl();
    Tape::active()->record([mi, wi, oi, t_len, d] {
      for (int t = 0; t < t_len; ++t) {
        const double *mr = mi->v.data() + static_cast<size_t>(t) * d;
        if (wi->tracked) {
          double acc = 0.0;
          for (int k = 0; k < d; ++k) acc += oi->g[k] * mr[k];
          wi->g[t] += acc;
        }
        if (mi->tracked) {
          const double wt = wi->v[t];
          double *gm = mi->g.data() + static_cast<size_t>(t) * d;
          for (int k = 0; k < d; ++k) gm[k] += wt * oi->g[k];
        }
      }
    });
  }
  return out;
}

Tensor row(const Tensor &m, int r) {
  check_matrix("row", m);
  const int rows = m.dim(0), d = m.dim(1);
  RESCORE_CHECK(r >= 0 && r < rows, "row index ", r, " out of range for ",
                shape_str(m.shape()));
  std::vector<double> y(m.values().begin() + static_cast<size_t>(r) * d,
                        m.values().begin() + static_cast<size_t>(r + 1) * d);
  bool track = any_tracked({&m});
  Tensor out = make_output({d}, std::move(y), track);
  if (track) {
    auto mi = m.impl(), oi = out.impl();
    Tape::active()->record([mi, oi, r, d] {
      double *gm = mi->g.data() + static_cast<size_t>(r) * d;
      for (int k = 0; k < d; ++k) gm[k] += oi->g[k];
    });
  }
  return out;
}

Tensor splice_rows(const Tensor &m, const std::vector<int> &offsets) {
  check_matrix("splice_rows", m);
  RESCORE_CHECK(!offsets.empty(), "splice_rows: empty offset list");
  const int t_len = m.dim(0), d = m.dim(1);
  const int k_off = static_cast<int>(offsets.size());
  std::vector<double> y(static_cast<size_t>(t_len) * k_off * d);
  for (int t = 0; t < t_len; ++t)
    for (int o = 0; o < k_off; ++o) {
      int src = std::clamp(t + offsets[o], 0, t_len - 1);
      std::copy_n(m.values().data() + static_cast<size_t>(src) * d, d,
                  y.data() + (static_cast<size_t>(t) * k_off + o) * d);
    }
  bool track = any_tracked({&m});
  Tensor out = make_output({t_len, k_off * d}, std::move(y), track);
  if (track) {
    auto mi = m.impl(), oi = out.impl();
    auto offs = offsets;
    Tape::active()->record([mi, oi, offs, t_len, d] {
      const int k_off = static_cast<int>(offs.size());
      for (int t = 0; t < t_len; ++t)
        for (int o = 0; o < k_off; ++o) {
          int src = std::clamp(t + offs[o], 0, t_len - 1);
          const double *dy =
              oi->g.data() + (static_cast<size_t>(t) * k_off + o) * d;
          double *gm = mi->g.data() + static_cast<size_t>(src) * d;
          for (int k = 0; k < d; ++k) gm[k] += dy[k];
        }
    });
  }
  return out;
}

Tensor concat(const Tensor &a, const Tensor &b) {
  check_vector("concat", a);
  check_vector("concat", b);
  const int na = a.dim(0), nb = b.dim(0);
  std::vector<double> y;
  y.reserve(na + nb);
  y.insert(y.end(), a.values().begin(), a.values().end());
  y.insert(y.end(), b.values().begin(), b.values().end());
  bool track = any_tracked({&a, &b});
  Tensor out = make_output({na + nb}, std::move(y), track);
  if (track) {
    auto ai = a.impl(), bi = b.impl(), oi = out.impl();
    Tape::active()->record([ai, bi, oi, na, nb] {
      if (ai->tracked)
        for (int i = 0; i < na; ++i) ai->g[i] += oi->g[i];
      if (bi->tracked)
        for (int i = 0; i < nb; ++i) bi->g[i] += oi->g[na + i];
    });
  }
  return out;
}

Tensor slice(const Tensor &v, int begin, int len) {
  check_vector("slice", v);
  RESCORE_CHECK(begin >= 0 && len >= 0 && begin + len <= v.dim(0),
                "slice [", begin, ", ", begin + len, ") out of range for ",
                shape_str(v.shape()));
  std::vector<double> y(v.values().begin() + begin,
                        v.values().begin() + begin + len);
  bool track = any_tracked({&v});
  Tensor out = make_output({len}, std::move(y), track);
  if (track) {
    auto vi = v.impl(), oi = out.impl();
    Tape::active()->record([vi, oi, begin, len] {
      for (int i = 0; i < len; ++i) vi->g[begin + i] += oi->g[i];
    });
  }
  return out;
}

Tensor pick(const Tensor &v, int i) {
  check_vector("pick", v);
  RESCORE_CHECK(i >= 0 && i < v.dim(0), "pick index ", i, " out of range for ",
                shape_str(v.shape()));
  bool track = any_tracked({&v});
  Tensor out = make_output({1}, {v.values()[i]}, track);
  if (track) {
    auto vi = v.impl(), oi = out.impl();
    Tape::active()->record([vi, oi, i] { vi->g[i] += oi->g[0]; });
  }
  return out;
}

Tensor stack(const std::vector<Tensor> &scalars) {
  RESCORE_CHECK(!scalars.empty(), "stack: empty input");
  std::vector<double> y(scalars.size());
  bool track = false;
  for (size_t i = 0; i < scalars.size(); ++i) {
    RESCORE_CHECK(scalars[i].numel() == 1, "stack: input ", i,
                  " is not a scalar");
    y[i] = scalars[i].values()[0];
    track = track || (Tape::active() && scalars[i].tracked());
  }
  Tensor out = make_output({static_cast<int>(scalars.size())}, std::move(y), track);
  if (track) {
    std::vector<std::shared_ptr<TensorImpl>> ins;
    ins.reserve(scalars.size());
    for (const auto &s : scalars) ins.push_back(s.impl());
    auto oi = out.impl();
    Tape::active()->record([ins, oi] {
      for (size_t i = 0; i < ins.size(); ++i)
        if (ins[i]->tracked) ins[i]->g[0] += oi->g[i];
    });
  }
  return out;
}

Tensor stack_rows(const std::vector<Tensor> &rows) {
  RESCORE_CHECK(!rows.empty(), "stack_rows: empty input");
  const int d = rows[0].numel();
  std::vector<double> y;
  y.reserve(rows.size() * d);
  bool track = false;
  for (size_t i = 0; i < rows.size(); ++i) {
    check_vector("stack_rows", rows[i]);
    RESCORE_CHECK(rows[i].numel() == d, "stack_rows: row ", i,
                  " has length ", rows[i].numel(), ", expected ", d);
    y.insert(y.end(), rows[i].values().begin(), rows[i].values().end());
    track = track || (Tape::active() && rows[i].tracked());
  }
  Tensor out =
      make_output({static_cast<int>(rows.size()), d}, std::move(y), track);
  if (track) {
    std::vector<std::shared_ptr<TensorImpl>> ins;
    ins.reserve(rows.size());
    for (const auto &r : rows) ins.push_back(r.impl());
    auto oi = out.impl();
    Tape::active()->record([ins, oi, d] {
      for (size_t i = 0; i < ins.size(); ++i) {
        if (!ins[i]->tracked) continue;
        const double *dy = oi->g.data() + i * d;
        for (int k = 0; k < d; ++k) ins[i]->g[k] += dy[k];
      }
    });
  }
  return out;
}

Tensor softmax(const Tensor &v) {
  check_vector("softmax", v);
  RESCORE_CHECK(v.dim(0) >= 1, "softmax: empty input");
  const int n = v.dim(0);
  double m = *std::max_element(v.values().begin(), v.values().end());
  std::vector<double> y(n);
  double z = 0.0;
  for (int i = 0; i < n; ++i) {
    y[i] = std::exp(v.values()[i] - m);
    z += y[i];
  }
  for (int i = 0; i < n; ++i) y[i] /= z;
  bool track = any_tracked({&v});
  Tensor out = make_output({n}, std::move(y), track);
  if (track) {
    auto vi = v.impl(), oi = out.impl();
    Tape::active()->record([vi, oi, n] {
      double dot = 0.0;
      for (int i = 0; i < n; ++i) dot += oi->g[i] * oi->v[i];
      for (int i = 0; i < n; ++i)
        vi->g[i] += oi->v[i] * (oi->g[i] - dot);
    });
  }
  return out;
}

Tensor log_softmax(const Tensor &v) {
  check_vector("log_softmax", v);
  RESCORE_CHECK(v.dim(0) >= 1, "log_softmax: empty input");
  const int n = v.dim(0);
  double m = *std::max_element(v.values().begin(), v.values().end());
  double z = 0.0;
  for (int i = 0; i < n; ++i) z += std::exp(v.values()[i] - m);
  const double logz = m + std::log(z);
  std::vector<double> y(n);
  for (int i = 0; i < n; ++i) y[i] = v.values()[i] - logz;
  bool track = any_tracked({&v});
  Tensor out = make_output({n}, std::move(y), track);
  if (track) {
    auto vi = v.impl(), oi = out.impl();
    Tape::active()->record([vi, oi, n] {
      double gsum = 0.0;
      for (int i = 0; i < n; ++i) gsum += oi->g[i];
      for (int i = 0; i < n; ++i)
        vi->g[i] += oi->g[i] - std::exp(oi->v[i]) * gsum;
    });
  }
  return out;
}

Tensor sum(const Tensor &v) {
  double s = 0.0;
  for (double x : v.values()) s += x;
  bool track = any_tracked({&v});
  Tensor out = make_output({1}, {s}, track);
  if (track) {
    auto vi = v.impl(), oi = out.impl();
    Tape::active()->record([vi, oi] {
      for (size_t i = 0; i < vi->g.size(); ++i) vi->g[i] += oi->g[0];
    });
  }
  return out;
}

Tensor mean_of(const std::vector<Tensor> &scalars) {
  RESCORE_CHECK(!scalars.empty(), "mean_of: empty input");
  double s = 0.0;
  bool track = false;
  for (const auto &t : scalars) {
    RESCORE_CHECK(t.numel() == 1, "mean_of: non-scalar input");
    s += t.values()[0];
    track = track || (Tape::active() && t.tracked());
  }
  const double inv_n = 1.0 / static_cast<double>(scalars.size());
  Tensor out = make_output({1}, {s * inv_n}, track);
  if (track) {
    std::vector<std::shared_ptr<TensorImpl>> ins;
    for (const auto &t : scalars) ins.push_back(t.impl());
    auto oi = out.impl();
    Tape::active()->record([ins, oi, inv_n] {
      for (auto &in : ins)
        if (in->tracked) in->g[0] += oi->g[0] * inv_n;
    });
  }
  return out;
}

Tensor dot(const Tensor &a, const Tensor &b) {
  check_same_shape("dot", a, b);
  double s = 0.0;
  for (int i = 0; i < a.numel(); ++i) s += a.values()[i] * b.values()[i];
  bool track = any_tracked({&a, &b});
  Tensor out = make_output({1}, {s}, track);
  if (track) {
    auto ai = a.impl(), bi = b.impl(), oi = out.impl();
    Tape::active()->record([ai, bi, oi] {
      const double dy = oi->g[0];
      if (ai->tracked)
        for (size_t i = 0; i < ai->g.size(); ++i) ai->g[i] += dy * bi->v[i];
      if (bi->tracked)
        for (size_t i = 0; i < bi->g.size(); ++i) bi->g[i] += dy * ai->v[i];
    });
  }
  return out;
}

Tensor dot_const(const Tensor &a, const std::vector<double> &c) {
  RESCORE_CHECK(c.size() == static_cast<size_t>(a.numel()),
                "dot_const: constant length ", c.size(), " vs tensor ",
                shape_str(a.shape()));
  double s = 0.0;
  for (int i = 0; i < a.numel(); ++i) s += a.values()[i] * c[i];
  bool track = any_tracked({&a});
  Tensor out = make_output({1}, {s}, track);
  if (track) {
    auto ai = a.impl(), oi = out.impl();
    auto cc = c;
    Tape::active()->record([ai, oi, cc] {
      const double dy = oi->g[0];
      for (size_t i = 0; i < ai->g.size(); ++i) ai->g[i] += dy * cc[i];
    });
  }
  return out;
}

LstmState lstm_step(const Tensor &x, const LstmState &state, const LstmParams &p) {
  check_vector("lstm_step", x);
  check_vector("lstm_step", state.h);
  check_vector("lstm_step", state.c);
  const int in = p.w_ih.dim(0);
  const int h4 = p.w_ih.dim(1);
  const int hd = p.w_hh.dim(0);
  if (h4 != 4 * hd || p.w_hh.dim(1) != h4 || p.b.dim(0) != h4)
    throw DimError(strcat_all("lstm_step: inconsistent parameter shapes W_ih ",
                              shape_str(p.w_ih.shape()), ", W_hh ",
                              shape_str(p.w_hh.shape()), ", b ",
                              shape_str(p.b.shape())));
  if (x.dim(0) != in || state.h.dim(0) != hd || state.c.dim(0) != hd)
    throw DimError(strcat_all("lstm_step: x ", shape_str(x.shape()), ", h ",
                              shape_str(state.h.shape()), ", c ",
                              shape_str(state.c.shape()),
                              " incompatible with W_ih ",
                              shape_str(p.w_ih.shape())));

  std::vector<double> pre(p.b.values());
  const auto &xv = x.values();
  const auto &hv = state.h.values();
  for (int j = 0; j < in; ++j) {
    const double xj = xv[j];
    if (xj == 0.0) continue;
    const double *wr = p.w_ih.values().data() + static_cast<size_t>(j) * h4;
    for (int k = 0; k < h4; ++k) pre[k] += xj * wr[k];
  }
  for (int j = 0; j < hd; ++j) {
    const double hj = hv[j];
    if (hj == 0.0) continue;
    const double *wr = p.w_hh.values().data() + static_cast<size_t>(j) * h4;
    for (int k = 0; k < h4; ++k) pre[k] += hj * wr[k];
  }

  // gate order: input, forget, candidate, output
  std::vector<double> gates(h4);
  for (int k = 0; k < hd; ++k) {
    gates[k] = stable_sigmoid(pre[k]);
    gates[hd + k] = stable_sigmoid(pre[hd + k]);
    gates[2 * hd + k] = std::tanh(pre[2 * hd + k]);
    gates[3 * hd + k] = stable_sigmoid(pre[3 * hd + k]);
  }
  std::vector<double> cv(hd), tc(hd), hvnew(hd);
  for (int k = 0; k < hd; ++k) {
    cv[k] = gates[hd + k] * state.c.values()[k] + gates[k] * gates[2 * hd + k];
    tc[k] = std::tanh(cv[k]);
    hvnew[k] = gates[3 * hd + k] * tc[k];
  }

  bool track = any_tracked({&x, &state.h, &state.c, &p.w_ih, &p.w_hh, &p.b});
  Tensor h_new = make_output({hd}, std::move(hvnew), track);
  Tensor c_new = make_output({hd}, std::move(cv), track);
  if (track) {
    auto xi = x.impl(), hi = state.h.impl(), ci = state.c.impl();
    auto wih = p.w_ih.impl(), whh = p.w_hh.impl(), bi = p.b.impl();
    auto hni = h_new.impl(), cni = c_new.impl();
    Tape::active()->record([xi, hi, ci, wih, whh, bi, hni, cni,
                            gates = std::move(gates), tc = std::move(tc), in,
                            hd, h4] {
      std::vector<double> dpre(h4);
      for (int k = 0; k < hd; ++k) {
        const double ig = gates[k], fg = gates[hd + k], gg = gates[2 * hd + k],
                     og = gates[3 * hd + k];
        const double dh = hni->g[k];
        const double do_ = dh * tc[k];
        const double dc = cni->g[k] + dh * og * (1.0 - tc[k] * tc[k]);
        dpre[3 * hd + k] = do_ * og * (1.0 - og);
        dpre[hd + k] = dc * ci->v[k] * fg * (1.0 - fg);
        dpre[k] = dc * gg * ig * (1.0 - ig);
        dpre[2 * hd + k] = dc * ig * (1.0 - gg * gg);
        if (ci->tracked) ci->g[k] += dc * fg;
      }
      if (xi->tracked) {
        for (int j = 0; j < in; ++j) {
          const double *wr = wih->v.data() + static_cast<size_t>(j) * h4;
          double acc = 0.0;
          for (int k = 0; k < h4; ++k) acc += wr[k] * dpre[k];
          xi->g[j] += acc;
        }
      }
      if (wih->tracked) {
        for (int j = 0; j < in; ++j) {
          const double xj = xi->v[j];
          if (xj == 0.0) continue;
          double *gw = wih->g.data() + static_cast<size_t>(j) * h4;
          for (int k = 0; k < h4; ++k) gw[k] += xj * dpre[k];
        }
      }
      if (hi->tracked) {
        for (int j = 0; j < hd; ++j) {
          const double *wr = whh->v.data() + static_cast<size_t>(j) * h4;
          double acc = 0.0;
          for (int k = 0; k < h4; ++k) acc += wr[k] * dpre[k];
          hi->g[j] += acc;
        }
      }
      if (whh->tracked) {
        for (int j = 0; j < hd; ++j) {
          const double hj = hi->v[j];
          if (hj == 0.0) continue;
          double *gw = whh->g.data() + static_cast<size_t>(j) * h4;
          for (int k = 0; k < h4; ++k) gw[k] += hj * dpre[k];
        }
      }
      if (bi->tracked)
        for (int k = 0; k < h4; ++k) bi->g[k] += dpre[k];
    });
  }
  return {h_new, c_new};
}

Tensor conv_time(const Tensor &x, const Tensor &kernel3x3) {
  check_matrix("conv_time", x);
  check_matrix("conv_time", kernel3x3);
  RESCORE_CHECK(kernel3x3.dim(0) == 3 && kernel3x3.dim(1) == 3,
                "conv_time: kernel must be 3x3, got ",
                shape_str(kernel3x3.shape()));
  const int t_len = x.dim(0), d = x.dim(1);
  RESCORE_CHECK(t_len >= 1, "conv_time: empty time axis");
  const auto &xv = x.values();
  const auto &kv = kernel3x3.values();

  // convolution with zero same-padding over both axes
  std::vector<double> conv(static_cast<size_t>(t_len) * d, 0.0);
  for (int t = 0; t < t_len; ++t)
    for (int f = 0; f < d; ++f) {
      double acc = 0.0;
      for (int a = 0; a < 3; ++a) {
        int ti = t + a - 1;
        if (ti < 0 || ti >= t_len) continue;
        for (int b = 0; b < 3; ++b) {
          int fi = f + b - 1;
          if (fi < 0 || fi >= d) continue;
          acc += kv[a * 3 + b] * xv[static_cast<size_t>(ti) * d + fi];
        }
      }
      conv[static_cast<size_t>(t) * d + f] = acc;
    }

  // non-overlapping max pool over time; the tail window is shorter
  const int t_out = (t_len + 2) / 3;
  std::vector<double> pooled(static_cast<size_t>(t_out) * d);
  std::vector<int> argmax(static_cast<size_t>(t_out) * d);
  for (int w = 0; w < t_out; ++w) {
    const int t0 = 3 * w, t1 = std::min(3 * w + 3, t_len);
    for (int f = 0; f < d; ++f) {
      double best = -std::numeric_limits<double>::infinity();
      int best_t = t0;
      for (int t = t0; t < t1; ++t) {
        const double c = conv[static_cast<size_t>(t) * d + f];
        if (c > best) {
          best = c;
          best_t = t;
        }
      }
      pooled[static_cast<size_t>(w) * d + f] = best;
      argmax[static_cast<size_t>(w) * d + f] = best_t;
    }
  }

  bool track = any_tracked({&x, &kernel3x3});
  Tensor out = make_output({t_out, d}, std::move(pooled), track);
  if (track) {
    auto xi = x.impl(), ki = kernel3x3.impl(), oi = out.impl();
    Tape::active()->record(
        [xi, ki, oi, argmax = std::move(argmax), t_len, d, t_out] {
          for (int w = 0; w < t_out; ++w)
            for (int f = 0; f < d; ++f) {
              const double dy = oi->g[static_cast<size_t>(w) * d + f];
              if (dy == 0.0) continue;
              const int t = argmax[static_cast<size_t>(w) * d + f];
              for (int a = 0; a < 3; ++a) {
                int ti = t + a - 1;
                if (ti < 0 || ti >= t_len) continue;
                for (int b = 0; b < 3; ++b) {
                  int fi = f + b - 1;
                  if (fi < 0 || fi >= d) continue;
                  if (xi->tracked)
                    xi->g[static_cast<size_t>(ti) * d + fi] +=
                        ki->v[a * 3 + b] * dy;
                  if (ki->tracked)
                    ki->g[a * 3 + b] +=
                        xi->v[static_cast<size_t>(ti) * d + fi] * dy;
                }
              }
            }
        });
  }
  return out;
}

double grad_check(const std::function<Tensor()> &f, std::span<Tensor> params,
                  double eps) {
  RESCORE_CHECK(eps > 0.0, "grad_check: eps must be positive");

  std::vector<std::vector<double>> analytic;
  {
    for (auto &p : params) p.zero_grad();
    Tape tape;
    TapeScope scope(tape);
    Tensor loss = f();
    tape.backward(loss);
    for (auto &p : params) analytic.push_back(p.grad());
  }

  double max_rel = 0.0;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Tensor &p = params[pi];
    for (int k = 0; k < p.numel(); ++k) {
      const double orig = p.values()[k];
      p.values()[k] = orig + eps;
      const double fp = f().item();
      p.values()[k] = orig - eps;
      const double fm = f().item();
      p.values()[k] = orig;
      const double numeric = (fp - fm) / (2.0 * eps);
      const double ana = analytic[pi][k];
      // Floor keeps FD rounding noise (~1e-10 absolute) on zero-gradient
      // components from registering as large relative error.
      const double denom = std::max({std::fabs(ana), std::fabs(numeric), 1e-5});
      max_rel = std::max(max_rel, std::fabs(ana - numeric) / denom);
    }
  }
  return max_rel;
}

}  // namespace nn
}  // namespace rescore
