#include "cemb/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cemb/errors.hpp"

namespace cemb {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

void check_finite(const Tensor& t, const char* op) {
  if (!t.all_finite())
    throw NumericalError(std::string(op) + " produced non-finite values");
}

Graph& same_graph(const Var& a, const Var& b, const char* op) {
  if (!a || !b) throw UsageError(std::string(op) + ": unbound Var");
  if (a.graph() != b.graph())
    throw UsageError(std::string(op) + ": operands belong to different graphs");
  return *a.graph();
}

Var finish(Graph& g, Tensor out, std::vector<int> parents, Graph::BackwardFn fn, const char* op) {
  check_finite(out, op);
  return g.record(std::move(out), std::move(parents), std::move(fn), op);
}

bool is_scalar_shape(const std::vector<int>& s) {
  Eigen::Index n = 1;
  for (int e : s) n *= e;
  return n == 1;
}

// Shapes combine when equal, when one side is a scalar, or when a row
// vector [c] meets a matrix [r x c].
std::vector<int> broadcast_shape(const std::vector<int>& a, const std::vector<int>& b,
                                 const char* op) {
  if (a == b) return a;
  if (is_scalar_shape(a)) return b;
  if (is_scalar_shape(b)) return a;
  if (a.size() == 2 && b.size() == 1 && a[1] == b[0]) return a;
  if (b.size() == 2 && a.size() == 1 && b[1] == a[0]) return b;
  throw ShapeError(std::string(op) + ": shapes " + shape_to_string(a) + " and " +
                   shape_to_string(b) + " do not broadcast");
}

Tensor expand_to(const Tensor& t, const std::vector<int>& shape) {
  if (t.shape() == shape) return t;
  Tensor out(shape);
  if (t.numel() == 1) {
    out.flat().setConstant(t(0));
    return out;
  }
  // row vector onto matrix rows
  out.mat() = t.vec().transpose().replicate(shape[0], 1);
  return out;
}

Tensor reduce_to(const Tensor& g, const std::vector<int>& shape) {
  if (g.shape() == shape) return g;
  if (is_scalar_shape(shape)) {
    Tensor out(shape);
    out.flat().setConstant(0.0);
    out(0) = g.flat().sum();
    return out;
  }
  // matrix gradient reduced onto a row vector: sum over rows
  Tensor out(shape);
  out.vec() = g.mat().colwise().sum().transpose();
  return out;
}

template <class Contrib>
Var unary(const Var& a, Tensor out, Contrib contrib, const char* op) {
  if (!a) throw UsageError(std::string(op) + ": unbound Var");
  Graph& g = *a.graph();
  int pa = a.id();
  return finish(
      g, std::move(out), {pa},
      [pa, contrib](Graph& gg, const Tensor& og) { gg.accumulate(pa, contrib(gg.value(pa), og)); },
      op);
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  Graph& g = same_graph(a, b, "matmul");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  int ra = av.rank(), rb = bv.rank();
  if (ra > 2 || rb > 2)
    throw ShapeError("matmul: rank must be 1 or 2, got " + av.shape_str() + " and " +
                     bv.shape_str());
  if (ra == 1 && rb == 1) throw ShapeError("matmul: both operands rank 1; use dot()");
  // promote: rank-1 a is a row [1 x k], rank-1 b is a column [k x 1]
  int m = ra == 2 ? av.extent(0) : 1;
  int k = ra == 2 ? av.extent(1) : av.extent(0);
  int kb = rb == 2 ? bv.extent(0) : bv.extent(0);
  int n = rb == 2 ? bv.extent(1) : 1;
  if (k != kb)
    throw ShapeError("matmul: inner dimensions disagree: " + av.shape_str() + " vs " +
                     bv.shape_str());

  std::vector<int> oshape;
  if (ra == 2 && rb == 2)
    oshape = {m, n};
  else if (ra == 1)
    oshape = {n};
  else
    oshape = {m};

  Tensor out(oshape);
  out.view(m, n) = av.view(m, k) * bv.view(k, n);

  int pa = a.id(), pb = b.id();
  std::vector<int> ash = av.shape(), bsh = bv.shape();
  return finish(
      g, std::move(out), {pa, pb},
      [pa, pb, ash, bsh, m, k, n](Graph& gg, const Tensor& og) {
        auto gv = og.view(m, n);
        if (gg.requires_grad(pa)) {
          Tensor ga(ash);
          ga.view(m, k) = gv * gg.value(pb).view(k, n).transpose();
          gg.accumulate(pa, ga);
        }
        if (gg.requires_grad(pb)) {
          Tensor gb(bsh);
          gb.view(k, n) = gg.value(pa).view(m, k).transpose() * gv;
          gg.accumulate(pb, gb);
        }
      },
      "matmul");
}

Var transpose(const Var& a) {
  if (!a) throw UsageError("transpose: unbound Var");
  Graph& g = *a.graph();
  const Tensor& av = a.value();
  if (av.rank() != 2) throw ShapeError("transpose: requires rank 2, got " + av.shape_str());
  int r = av.extent(0), c = av.extent(1);
  Tensor out({c, r});
  out.view(c, r) = av.view(r, c).transpose();
  int pa = a.id();
  return finish(
      g, std::move(out), {pa},
      [pa, r, c](Graph& gg, const Tensor& og) {
        Tensor ga({r, c});
        ga.view(r, c) = og.view(c, r).transpose();
        gg.accumulate(pa, ga);
      },
      "transpose");
}

Var add(const Var& a, const Var& b) {
  Graph& g = same_graph(a, b, "add");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  std::vector<int> oshape = broadcast_shape(av.shape(), bv.shape(), "add");
  Tensor out(oshape);
  out.flat() = expand_to(av, oshape).flat() + expand_to(bv, oshape).flat();
  int pa = a.id(), pb = b.id();
  std::vector<int> ash = av.shape(), bsh = bv.shape();
  return finish(
      g, std::move(out), {pa, pb},
      [pa, pb, ash, bsh](Graph& gg, const Tensor& og) {
        gg.accumulate(pa, reduce_to(og, ash));
        gg.accumulate(pb, reduce_to(og, bsh));
      },
      "add");
}

Var sub(const Var& a, const Var& b) {
  Graph& g = same_graph(a, b, "sub");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  std::vector<int> oshape = broadcast_shape(av.shape(), bv.shape(), "sub");
  Tensor out(oshape);
  out.flat() = expand_to(av, oshape).flat() - expand_to(bv, oshape).flat();
  int pa = a.id(), pb = b.id();
  std::vector<int> ash = av.shape(), bsh = bv.shape();
  return finish(
      g, std::move(out), {pa, pb},
      [pa, pb, ash, bsh](Graph& gg, const Tensor& og) {
        gg.accumulate(pa, reduce_to(og, ash));
        Tensor neg(og.shape());
        neg.flat() = -og.flat();
        gg.accumulate(pb, reduce_to(neg, bsh));
      },
      "sub");
}

Var mul(const Var& a, const Var& b) {
  Graph& g = same_graph(a, b, "mul");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  std::vector<int> oshape = broadcast_shape(av.shape(), bv.shape(), "mul");
  Tensor out(oshape);
  out.flat() = expand_to(av, oshape).flat() * expand_to(bv, oshape).flat();
  int pa = a.id(), pb = b.id();
  std::vector<int> ash = av.shape(), bsh = bv.shape();
  return finish(
      g, std::move(out), {pa, pb},
      [pa, pb, ash, bsh, oshape](Graph& gg, const Tensor& og) {
        if (gg.requires_grad(pa)) {
          Tensor t(oshape);
          t.flat() = og.flat() * expand_to(gg.value(pb), oshape).flat();
          gg.accumulate(pa, reduce_to(t, ash));
        }
        if (gg.requires_grad(pb)) {
          Tensor t(oshape);
          t.flat() = og.flat() * expand_to(gg.value(pa), oshape).flat();
          gg.accumulate(pb, reduce_to(t, bsh));
        }
      },
      "mul");
}

Var scale(const Var& a, double c) {
  if (!std::isfinite(c)) throw ParameterError("scale: factor must be finite");
  Tensor out(a.value().shape());
  out.flat() = a.value().flat() * c;
  return unary(
      a, std::move(out),
      [c](const Tensor& x, const Tensor& og) {
        Tensor t(x.shape());
        t.flat() = og.flat() * c;
        return t;
      },
      "scale");
}

Var abs(const Var& a) {
  Tensor out(a.value().shape());
  out.flat() = a.value().flat().abs();
  return unary(
      a, std::move(out),
      [](const Tensor& x, const Tensor& og) {
        Tensor t(x.shape());
        t.flat() = og.flat() * x.flat().sign();
        return t;
      },
      "abs");
}

Var exp(const Var& a) {
  Tensor out(a.value().shape());
  out.flat() = a.value().flat().exp();
  Tensor saved = out;
  return unary(
      a, std::move(out),
      [saved](const Tensor&, const Tensor& og) {
        Tensor t(saved.shape());
        t.flat() = og.flat() * saved.flat();
        return t;
      },
      "exp");
}

Var log(const Var& a) {
  const Tensor& av = a.value();
  if ((av.flat() <= 0.0).any()) throw DomainError("log: input must be strictly positive");
  Tensor out(av.shape());
  out.flat() = av.flat().log();
  return unary(
      a, std::move(out),
      [](const Tensor& x, const Tensor& og) {
        Tensor t(x.shape());
        t.flat() = og.flat() / x.flat();
        return t;
      },
      "log");
}

Var tanh(const Var& a) {
  Tensor out(a.value().shape());
  out.flat() = a.value().flat().tanh();
  Tensor saved = out;
  return unary(
      a, std::move(out),
      [saved](const Tensor&, const Tensor& og) {
        Tensor t(saved.shape());
        t.flat() = og.flat() * (1.0 - saved.flat().square());
        return t;
      },
      "tanh");
}

Var gelu(const Var& a) {
  const Tensor& av = a.value();
  Tensor out(av.shape());
  for (Eigen::Index i = 0; i < av.numel(); ++i) {
    double x = av(i);
    out(i) = x * 0.5 * (1.0 + std::erf(x * kInvSqrt2));
  }
  return unary(
      a, std::move(out),
      [](const Tensor& x, const Tensor& og) {
        Tensor t(x.shape());
        for (Eigen::Index i = 0; i < x.numel(); ++i) {
          double v = x(i);
          double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
          double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
          t(i) = og(i) * (cdf + v * pdf);
        }
        return t;
      },
      "gelu");
}

Var clamp_min(const Var& a, double lo) {
  Tensor out(a.value().shape());
  out.flat() = a.value().flat().max(lo);
  return unary(
      a, std::move(out),
      [lo](const Tensor& x, const Tensor& og) {
        Tensor t(x.shape());
        t.flat() = og.flat() * (x.flat() > lo).cast<double>();
        return t;
      },
      "clamp_min");
}

Var concat(const std::vector<Var>& parts) {
  if (parts.empty()) throw UsageError("concat: no parts");
  Graph& g = *parts[0].graph();
  int rank = parts[0].value().rank();
  if (rank != 1 && rank != 2) throw ShapeError("concat: parts must be rank 1 or 2");
  int rows = rank == 2 ? parts[0].value().extent(0) : 1;
  int total_cols = 0;
  std::vector<int> ids, widths;
  for (const Var& p : parts) {
    same_graph(parts[0], p, "concat");
    const Tensor& pv = p.value();
    if (pv.rank() != rank)
      throw ShapeError("concat: mixed ranks, " + parts[0].value().shape_str() + " vs " +
                       pv.shape_str());
    if (rank == 2 && pv.extent(0) != rows)
      throw ShapeError("concat: row counts differ, " + parts[0].value().shape_str() + " vs " +
                       pv.shape_str());
    ids.push_back(p.id());
    widths.push_back(pv.cols());
    total_cols += pv.cols();
  }
  std::vector<int> oshape = rank == 2 ? std::vector<int>{rows, total_cols}
                                      : std::vector<int>{total_cols};
  Tensor out(oshape);
  int off = 0;
  for (size_t i = 0; i < ids.size(); ++i) {
    out.view(rows, total_cols).block(0, off, rows, widths[i]) =
        g.value(ids[i]).view(rows, widths[i]);
    off += widths[i];
  }
  return finish(
      g, std::move(out), ids,
      [ids, widths, rows, total_cols, rank](Graph& gg, const Tensor& og) {
        int o = 0;
        for (size_t i = 0; i < ids.size(); ++i) {
          std::vector<int> pshape =
              rank == 2 ? std::vector<int>{rows, widths[i]} : std::vector<int>{widths[i]};
          Tensor t(pshape);
          t.view(rows, widths[i]) = og.view(rows, total_cols).block(0, o, rows, widths[i]);
          gg.accumulate(ids[i], t);
          o += widths[i];
        }
      },
      "concat");
}

Var stack_rows(const std::vector<Var>& rows) {
  if (rows.empty()) throw UsageError("stack_rows: no rows");
  Graph& g = *rows[0].graph();
  int c = rows[0].value().extent(0);
  std::vector<int> ids;
  for (const Var& r : rows) {
    same_graph(rows[0], r, "stack_rows");
    if (r.value().rank() != 1 || r.value().extent(0) != c)
      throw ShapeError("stack_rows: every row must be rank 1 of length " + std::to_string(c) +
                       ", got " + r.value().shape_str());
    ids.push_back(r.id());
  }
  int n = static_cast<int>(rows.size());
  Tensor out({n, c});
  for (int i = 0; i < n; ++i) out.view(n, c).row(i) = g.value(ids[i]).vec().transpose();
  return finish(
      g, std::move(out), ids,
      [ids, n, c](Graph& gg, const Tensor& og) {
        for (int i = 0; i < n; ++i) {
          Tensor t({c});
          t.vec() = og.view(n, c).row(i).transpose();
          gg.accumulate(ids[i], t);
        }
      },
      "stack_rows");
}

Var gather_rows(const Var& a, std::vector<int> indices) {
  if (!a) throw UsageError("gather_rows: unbound Var");
  Graph& g = *a.graph();
  const Tensor& av = a.value();
  if (av.rank() != 2) throw ShapeError("gather_rows: requires rank 2, got " + av.shape_str());
  if (indices.empty()) throw UsageError("gather_rows: empty index list");
  int r = av.extent(0), c = av.extent(1);
  for (int idx : indices)
    if (idx < 0 || idx >= r)
      throw UsageError("gather_rows: index " + std::to_string(idx) + " out of range [0, " +
                       std::to_string(r) + ")");
  int k = static_cast<int>(indices.size());
  Tensor out({k, c});
  for (int i = 0; i < k; ++i) out.view(k, c).row(i) = av.view(r, c).row(indices[i]);
  int pa = a.id();
  return finish(
      g, std::move(out), {pa},
      [pa, indices, r, c, k](Graph& gg, const Tensor& og) {
        Tensor t({r, c}, 0.0);
        for (int i = 0; i < k; ++i) t.view(r, c).row(indices[i]) += og.view(k, c).row(i);
        gg.accumulate(pa, t);
      },
      "gather_rows");
}

Var mean(const Var& a, int axis) {
  if (!a) throw UsageError("mean: unbound Var");
  Graph& g = *a.graph();
  const Tensor& av = a.value();
  int pa = a.id();
  if (av.rank() == 1) {
    if (axis != 0) throw UsageError("mean: axis out of range for " + av.shape_str());
    int n = av.extent(0);
    Tensor out = Tensor::scalar(av.flat().sum() / n);
    return finish(
        g, std::move(out), {pa},
        [pa, n](Graph& gg, const Tensor& og) {
          Tensor t({n});
          t.flat().setConstant(og(0) / n);
          gg.accumulate(pa, t);
        },
        "mean");
  }
  if (av.rank() != 2 || (axis != 0 && axis != 1))
    throw UsageError("mean: axis " + std::to_string(axis) + " invalid for " + av.shape_str());
  int r = av.extent(0), c = av.extent(1);
  if (axis == 0) {
    Tensor out({c});
    out.vec() = av.view(r, c).colwise().mean().transpose();
    return finish(
        g, std::move(out), {pa},
        [pa, r, c](Graph& gg, const Tensor& og) {
          Tensor t({r, c});
          t.view(r, c) = (og.vec().transpose() / r).replicate(r, 1);
          gg.accumulate(pa, t);
        },
        "mean");
  }
  Tensor out({r});
  out.vec() = av.view(r, c).rowwise().mean();
  return finish(
      g, std::move(out), {pa},
      [pa, r, c](Graph& gg, const Tensor& og) {
        Tensor t({r, c});
        t.view(r, c) = (og.vec() / c).replicate(1, c);
        gg.accumulate(pa, t);
      },
      "mean");
}

Var sum(const Var& a) {
  if (!a) throw UsageError("sum: unbound Var");
  Graph& g = *a.graph();
  const Tensor& av = a.value();
  int pa = a.id();
  std::vector<int> ash = av.shape();
  Tensor out = Tensor::scalar(av.flat().sum());
  return finish(
      g, std::move(out), {pa},
      [pa, ash](Graph& gg, const Tensor& og) {
        Tensor t(ash);
        t.flat().setConstant(og(0));
        gg.accumulate(pa, t);
      },
      "sum");
}

Var dot(const Var& a, const Var& b) {
  Graph& g = same_graph(a, b, "dot");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 1 || bv.rank() != 1 || av.extent(0) != bv.extent(0))
    throw ShapeError("dot: requires equal-length rank-1 tensors, got " + av.shape_str() + " and " +
                     bv.shape_str());
  Tensor out = Tensor::scalar(av.vec().dot(bv.vec()));
  int pa = a.id(), pb = b.id();
  return finish(
      g, std::move(out), {pa, pb},
      [pa, pb](Graph& gg, const Tensor& og) {
        if (gg.requires_grad(pa)) {
          Tensor t(gg.value(pb).shape());
          t.flat() = gg.value(pb).flat() * og(0);
          gg.accumulate(pa, t);
        }
        if (gg.requires_grad(pb)) {
          Tensor t(gg.value(pa).shape());
          t.flat() = gg.value(pa).flat() * og(0);
          gg.accumulate(pb, t);
        }
      },
      "dot");
}

Var l2_normalize(const Var& a) {
  if (!a) throw UsageError("l2_normalize: unbound Var");
  Graph& g = *a.graph();
  const Tensor& av = a.value();
  if (av.rank() != 1 && av.rank() != 2)
    throw ShapeError("l2_normalize: requires rank 1 or 2, got " + av.shape_str());
  int r = av.rank() == 2 ? av.extent(0) : 1;
  int c = av.cols();
  Tensor out(av.shape());
  for (int i = 0; i < r; ++i) {
    double nrm = av.view(r, c).row(i).norm();
    if (nrm == 0.0) throw DomainError("l2_normalize: zero-norm row");
    out.view(r, c).row(i) = av.view(r, c).row(i) / nrm;
  }
  int pa = a.id();
  return finish(
      g, std::move(out), {pa},
      [pa, r, c](Graph& gg, const Tensor& og) {
        const Tensor& x = gg.value(pa);
        Tensor t(x.shape());
        for (int i = 0; i < r; ++i) {
          auto xi = x.view(r, c).row(i);
          auto gi = og.view(r, c).row(i);
          double nrm = xi.norm();
          Eigen::RowVectorXd y = xi / nrm;
          t.view(r, c).row(i) = (gi - y * gi.dot(y)) / nrm;
        }
        gg.accumulate(pa, t);
      },
      "l2_normalize");
}

Var softmax(const Var& a, double temperature) {
  if (!a) throw UsageError("softmax: unbound Var");
  if (!(temperature > 0.0)) throw ParameterError("softmax: temperature must be > 0");
  Graph& g = *a.graph();
  const Tensor& av = a.value();
  if (av.rank() != 1 && av.rank() != 2)
    throw ShapeError("softmax: requires rank 1 or 2, got " + av.shape_str());
  int r = av.rank() == 2 ? av.extent(0) : 1;
  int c = av.cols();
  Tensor out(av.shape());
  for (int i = 0; i < r; ++i) {
    Eigen::RowVectorXd z = av.view(r, c).row(i) / temperature;
    double m = z.maxCoeff();
    Eigen::RowVectorXd e = (z.array() - m).exp();
    out.view(r, c).row(i) = e / e.sum();
  }
  Tensor saved = out;
  int pu = a.id();
  return finish(
      g, std::move(out), {pu},
      [pu, saved, r, c, temperature](Graph& gg, const Tensor& og) {
        Tensor t(saved.shape());
        for (int i = 0; i < r; ++i) {
          auto y = saved.view(r, c).row(i);
          auto gi = og.view(r, c).row(i);
          double inner = gi.dot(y);
          t.view(r, c).row(i) = (y.array() * (gi.array() - inner)).matrix() / temperature;
        }
        gg.accumulate(pu, t);
      },
      "softmax");
}

Var logsumexp(const Var& a) {
  if (!a) throw UsageError("logsumexp: unbound Var");
  Graph& g = *a.graph();
  const Tensor& av = a.value();
  if (av.rank() != 1) throw ShapeError("logsumexp: requires rank 1, got " + av.shape_str());
  double m = av.flat().maxCoeff();
  double lse = m + std::log((av.flat() - m).exp().sum());
  int pa = a.id();
  return finish(
      g, std::move(Tensor::scalar(lse)), {pa},
      [pa, lse](Graph& gg, const Tensor& og) {
        const Tensor& x = gg.value(pa);
        Tensor t(x.shape());
        t.flat() = (x.flat() - lse).exp() * og(0);
        gg.accumulate(pa, t);
      },
      "logsumexp");
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps) {
  Graph& g = same_graph(x, gain, "layer_norm");
  same_graph(x, bias, "layer_norm");
  if (!(eps > 0.0)) throw ParameterError("layer_norm: eps must be > 0");
  const Tensor& xv = x.value();
  const Tensor& gv = gain.value();
  const Tensor& bv = bias.value();
  if (xv.rank() != 1 && xv.rank() != 2)
    throw ShapeError("layer_norm: input must be rank 1 or 2, got " + xv.shape_str());
  int r = xv.rank() == 2 ? xv.extent(0) : 1;
  int d = xv.cols();
  if (gv.rank() != 1 || gv.extent(0) != d || bv.rank() != 1 || bv.extent(0) != d)
    throw ShapeError("layer_norm: gain/bias must be rank 1 of length " + std::to_string(d));

  Tensor out(xv.shape());
  for (int i = 0; i < r; ++i) {
    auto row = xv.view(r, d).row(i);
    double mu = row.mean();
    double var = (row.array() - mu).square().sum() / d;
    double inv = 1.0 / std::sqrt(var + eps);
    out.view(r, d).row(i) =
        ((row.array() - mu) * inv * gv.vec().transpose().array()).matrix() +
        bv.vec().transpose();
  }
  int px = x.id(), pg = gain.id(), pb = bias.id();
  return finish(
      g, std::move(out), {px, pg, pb},
      [px, pg, pb, r, d, eps](Graph& gg, const Tensor& og) {
        const Tensor& xv2 = gg.value(px);
        const Tensor& gv2 = gg.value(pg);
        Tensor dx(xv2.shape(), 0.0);
        Tensor dgain({d}, 0.0);
        Tensor dbias({d}, 0.0);
        for (int i = 0; i < r; ++i) {
          auto row = xv2.view(r, d).row(i);
          auto go = og.view(r, d).row(i);
          double mu = row.mean();
          double var = (row.array() - mu).square().sum() / d;
          double inv = 1.0 / std::sqrt(var + eps);
          Eigen::ArrayXd centered = (row.array() - mu).transpose();
          Eigen::ArrayXd xhat = centered * inv;
          Eigen::ArrayXd ghat = go.transpose().array() * gv2.flat();
          double dvar = (ghat * centered).sum() * (-0.5) * inv * inv * inv;
          double dmu = -inv * ghat.sum();
          dx.view(r, d).row(i) =
              (ghat * inv + centered * (2.0 * dvar / d) + dmu / d).matrix().transpose();
          dgain.flat() += go.transpose().array() * xhat;
          dbias.flat() += go.transpose().array();
        }
        gg.accumulate(px, dx);
        gg.accumulate(pg, dgain);
        gg.accumulate(pb, dbias);
      },
      "layer_norm");
}

Var dropout(const Var& a, double rate, Rng& rng, bool train_mode) {
  if (!a) throw UsageError("dropout: unbound Var");
  if (rate < 0.0 || rate >= 1.0) throw ParameterError("dropout: rate must be in [0, 1)");
  if (!train_mode || rate == 0.0) return a;
  const Tensor& av = a.value();
  Tensor mask(av.shape());
  double keep_scale = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < mask.numel(); ++i)
    mask(i) = rng.uniform() < rate ? 0.0 : keep_scale;
  Tensor out(av.shape());
  out.flat() = av.flat() * mask.flat();
  return unary(
      a, std::move(out),
      [mask](const Tensor& x, const Tensor& og) {
        Tensor t(x.shape());
        t.flat() = og.flat() * mask.flat();
        return t;
      },
      "dropout");
}

}  // namespace cemb
