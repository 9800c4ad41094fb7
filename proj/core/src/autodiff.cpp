// SPDX-License-Identifier: Apache-2.0
#include "cef/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace cef {

namespace {

void require(bool ok, const char* op, const std::string& what) {
  if (!ok) {
    throw ShapeError(std::string(op) + ": " + what);
  }
}

std::string dims(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void check_segments(const char* op, std::span<const int> seg, Eigen::Index rows, int count) {
  require(static_cast<Eigen::Index>(seg.size()) == rows, op, "segment list length mismatch");
  for (int s : seg) {
    require(s >= 0 && s < count, op, "segment id out of range");
  }
}

}  // namespace

Tape::Tape(const ParamStore& params) : params_(params), grads_(Gradients::zeros_like(params)) {
  nodes_.reserve(256);
}

std::size_t Tape::checked(Var v) const {
  if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw ContractError("Var does not belong to this tape");
  }
  return static_cast<std::size_t>(v.id);
}

Var Tape::push(Matrix value, std::function<void(Tape&, const Matrix&)> backprop) {
  nodes_.push_back(Node{std::move(value), Matrix(), std::move(backprop)});
  return Var{static_cast<int>(nodes_.size() - 1)};
}

void Tape::accumulate(Var v, const Matrix& g) {
  Node& n = nodes_[checked(v)];
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

void Tape::accumulate_block(Var v, const Matrix& g, Eigen::Index col_begin) {
  Node& n = nodes_[checked(v)];
  if (n.grad.size() == 0) {
    n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  }
  n.grad.middleCols(col_begin, g.cols()) += g;
}

double Tape::scalar(Var v) const {
  const Matrix& m = value(v);
  if (m.rows() != 1 || m.cols() != 1) {
    throw ContractError("scalar(): value is " + dims(m) + ", not 1x1");
  }
  return m(0, 0);
}

Var Tape::constant(Matrix value) { return push(std::move(value)); }

Var Tape::zeros(Eigen::Index rows, Eigen::Index cols) {
  return push(Matrix::Zero(rows, cols));
}

Var Tape::linear(Var x, std::size_t group) {
  const ParamGroup& p = params_[group];
  const Matrix& xv = value(x);
  require(xv.cols() == p.weights.cols(), "linear",
          "'" + p.name + "' expects " + std::to_string(p.weights.cols()) + " columns, got " +
              dims(xv));
  Matrix y = xv * p.weights.transpose();
  y.rowwise() += p.bias.transpose();
  return push(std::move(y), [x, group](Tape& t, const Matrix& g) {
    const ParamGroup& p = t.params_[group];
    t.grads_.weights[group].noalias() += g.transpose() * t.value(x);
    t.grads_.bias[group] += g.colwise().sum().transpose();
    t.accumulate(x, g * p.weights);
  });
}

Var Tape::linear_partial(Var x, std::size_t group, int col_begin) {
  const ParamGroup& p = params_[group];
  const Matrix& xv = value(x);
  const auto width = xv.cols();
  require(col_begin >= 0 && col_begin + width <= p.weights.cols(), "linear_partial",
          "'" + p.name + "' column block out of range for input " + dims(xv));
  Matrix y = xv * p.weights.middleCols(col_begin, width).transpose();
  return push(std::move(y), [x, group, col_begin, width](Tape& t, const Matrix& g) {
    const ParamGroup& p = t.params_[group];
    t.grads_.weights[group].middleCols(col_begin, width).noalias() += g.transpose() * t.value(x);
    t.accumulate(x, g * p.weights.middleCols(col_begin, width));
  });
}

Var Tape::add_bias(Var x, std::size_t group) {
  const ParamGroup& p = params_[group];
  require(value(x).cols() == p.bias.size(), "add_bias", "'" + p.name + "' width mismatch");
  Matrix y = value(x);
  y.rowwise() += p.bias.transpose();
  return push(std::move(y), [x, group](Tape& t, const Matrix& g) {
    t.grads_.bias[group] += g.colwise().sum().transpose();
    t.accumulate(x, g);
  });
}

Var Tape::add(Var a, Var b) {
  require(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(), "add",
          dims(value(a)) + " vs " + dims(value(b)));
  return push(value(a) + value(b), [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var Tape::sub(Var a, Var b) {
  require(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(), "sub",
          dims(value(a)) + " vs " + dims(value(b)));
  return push(value(a) - value(b), [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, -g);
  });
}

Var Tape::scale(Var a, double factor) {
  return push(value(a) * factor,
              [a, factor](Tape& t, const Matrix& g) { t.accumulate(a, g * factor); });
}

Var Tape::mul_rowscalar(Var alpha, Var x) {
  const Matrix& av = value(alpha);
  const Matrix& xv = value(x);
  require(av.cols() == 1 && av.rows() == xv.rows(), "mul_rowscalar",
          "alpha " + dims(av) + " vs x " + dims(xv));
  Matrix y = xv.array().colwise() * av.col(0).array();
  return push(std::move(y), [alpha, x](Tape& t, const Matrix& g) {
    const Matrix& av = t.value(alpha);
    const Matrix& xv = t.value(x);
    Matrix ga = (g.array() * xv.array()).rowwise().sum().matrix();
    Matrix gx = g.array().colwise() * av.col(0).array();
    t.accumulate(alpha, ga);
    t.accumulate(x, gx);
  });
}

Var Tape::blend(Var alpha, Var keep, Var fresh) {
  const Matrix& av = value(alpha);
  const Matrix& kv = value(keep);
  const Matrix& fv = value(fresh);
  require(av.cols() == 1 && av.rows() == kv.rows(), "blend", "alpha " + dims(av));
  require(kv.rows() == fv.rows() && kv.cols() == fv.cols(), "blend",
          "keep " + dims(kv) + " vs fresh " + dims(fv));
  Matrix y(kv.rows(), kv.cols());
  for (Eigen::Index r = 0; r < kv.rows(); ++r) {
    const double a = av(r, 0);
    const double b = 1.0 - a;
    for (Eigen::Index c = 0; c < kv.cols(); ++c) {
      y(r, c) = a * kv(r, c) + b * fv(r, c);
    }
  }
  return push(std::move(y), [alpha, keep, fresh](Tape& t, const Matrix& g) {
    const Matrix& av = t.value(alpha);
    const Matrix& kv = t.value(keep);
    const Matrix& fv = t.value(fresh);
    Matrix ga = (g.array() * (kv - fv).array()).rowwise().sum().matrix();
    Matrix gk = g.array().colwise() * av.col(0).array();
    Matrix gf = g.array().colwise() * (1.0 - av.col(0).array());
    t.accumulate(alpha, ga);
    t.accumulate(keep, gk);
    t.accumulate(fresh, gf);
  });
}

Var Tape::concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols", "no inputs");
  const Eigen::Index rows = value(parts[0]).rows();
  Eigen::Index cols = 0;
  for (Var p : parts) {
    require(value(p).rows() == rows, "concat_cols", "row count mismatch");
    cols += value(p).cols();
  }
  Matrix y(rows, cols);
  Eigen::Index at = 0;
  for (Var p : parts) {
    y.middleCols(at, value(p).cols()) = value(p);
    at += value(p).cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return push(std::move(y), [inputs = std::move(inputs)](Tape& t, const Matrix& g) {
    Eigen::Index at = 0;
    for (Var p : inputs) {
      const auto w = t.value(p).cols();
      t.accumulate(p, g.middleCols(at, w));
      at += w;
    }
  });
}

Var Tape::column(Var x, int col) {
  require(col >= 0 && col < value(x).cols(), "column", "index out of range");
  return push(value(x).col(col), [x, col](Tape& t, const Matrix& g) {
    t.accumulate_block(x, g, col);
  });
}

Var Tape::gather_rows(Var x, std::span<const int> index) {
  const Matrix& xv = value(x);
  Matrix y(static_cast<Eigen::Index>(index.size()), xv.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    const int r = index[i];
    require(r >= -1 && r < xv.rows(), "gather_rows", "row index out of range");
    if (r < 0) {
      y.row(static_cast<Eigen::Index>(i)).setZero();
    } else {
      y.row(static_cast<Eigen::Index>(i)) = xv.row(r);
    }
  }
  std::vector<int> idx(index.begin(), index.end());
  return push(std::move(y), [x, idx = std::move(idx)](Tape& t, const Matrix& g) {
    const Matrix& xv = t.value(x);
    Matrix gx = Matrix::Zero(xv.rows(), xv.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (idx[i] >= 0) {
        gx.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
      }
    }
    t.accumulate(x, gx);
  });
}

Var Tape::tanh(Var x) {
  Matrix y = value(x).array().tanh().matrix();
  const Var out = push(std::move(y));
  nodes_[static_cast<std::size_t>(out.id)].backprop = [x, out](Tape& t, const Matrix& g) {
    const Matrix& yv = t.value(out);
    t.accumulate(x, (g.array() * (1.0 - yv.array().square())).matrix());
  };
  return out;
}

Var Tape::relu(Var x) {
  Matrix y = value(x).cwiseMax(0.0);
  return push(std::move(y), [x](Tape& t, const Matrix& g) {
    const Matrix& xv = t.value(x);
    t.accumulate(x, (xv.array() > 0.0).select(g, 0.0).matrix());
  });
}

Var Tape::sigmoid(Var x) {
  Matrix y = value(x).unaryExpr([](double v) { return act::sigmoid(v); });
  const Var out = push(std::move(y));
  nodes_[static_cast<std::size_t>(out.id)].backprop = [x, out](Tape& t, const Matrix& g) {
    const Matrix& yv = t.value(out);
    t.accumulate(x, (g.array() * yv.array() * (1.0 - yv.array())).matrix());
  };
  return out;
}

Var Tape::softmax_rows(Var x) {
  const Matrix& xv = value(x);
  require(xv.cols() > 0, "softmax_rows", "empty rows");
  Matrix y(xv.rows(), xv.cols());
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    const double shift = xv.row(r).maxCoeff();
    y.row(r) = (xv.row(r).array() - shift).exp().matrix();
    y.row(r) /= y.row(r).sum();
  }
  const Var out = push(std::move(y));
  nodes_[static_cast<std::size_t>(out.id)].backprop = [x, out](Tape& t, const Matrix& g) {
    const Matrix& yv = t.value(out);
    Matrix dot = (g.array() * yv.array()).rowwise().sum().matrix();
    Matrix gx = yv.array() * (g.array().colwise() - dot.col(0).array());
    t.accumulate(x, gx);
  };
  return out;
}

Var Tape::segment_max(Var x, std::span<const int> seg, int count) {
  const Matrix& xv = value(x);
  check_segments("segment_max", seg, xv.rows(), count);
  const Eigen::Index cols = xv.cols();
  Matrix y = Matrix::Zero(count, cols);
  // winner(s, c) = row that supplied the max, -1 for empty segments.
  std::vector<int> winner(static_cast<std::size_t>(count) * static_cast<std::size_t>(cols), -1);
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    const int s = seg[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < cols; ++c) {
      int& w = winner[static_cast<std::size_t>(s) * static_cast<std::size_t>(cols) +
                      static_cast<std::size_t>(c)];
      if (w < 0 || xv(r, c) > y(s, c)) {
        w = static_cast<int>(r);
        y(s, c) = xv(r, c);
      }
    }
  }
  return push(std::move(y), [x, cols, winner = std::move(winner)](Tape& t, const Matrix& g) {
    const Matrix& xv = t.value(x);
    Matrix gx = Matrix::Zero(xv.rows(), xv.cols());
    for (Eigen::Index s = 0; s < g.rows(); ++s) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        const int w = winner[static_cast<std::size_t>(s * cols + c)];
        if (w >= 0) {
          gx(w, c) += g(s, c);
        }
      }
    }
    t.accumulate(x, gx);
  });
}

Var Tape::segment_sum(Var x, std::span<const int> seg, int count) {
  const Matrix& xv = value(x);
  check_segments("segment_sum", seg, xv.rows(), count);
  Matrix y = Matrix::Zero(count, xv.cols());
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    y.row(seg[static_cast<std::size_t>(r)]) += xv.row(r);
  }
  std::vector<int> s(seg.begin(), seg.end());
  return push(std::move(y), [x, s = std::move(s)](Tape& t, const Matrix& g) {
    Matrix gx(static_cast<Eigen::Index>(s.size()), g.cols());
    for (std::size_t r = 0; r < s.size(); ++r) {
      gx.row(static_cast<Eigen::Index>(r)) = g.row(s[r]);
    }
    t.accumulate(x, gx);
  });
}

Var Tape::segment_mean(Var x, std::span<const int> seg, int count) {
  const Matrix& xv = value(x);
  check_segments("segment_mean", seg, xv.rows(), count);
  std::vector<double> inv(static_cast<std::size_t>(count), 0.0);
  for (int s : seg) {
    inv[static_cast<std::size_t>(s)] += 1.0;
  }
  for (double& v : inv) {
    v = v > 0.0 ? 1.0 / v : 0.0;
  }
  Matrix y = Matrix::Zero(count, xv.cols());
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    y.row(seg[static_cast<std::size_t>(r)]) += xv.row(r);
  }
  for (int s = 0; s < count; ++s) {
    y.row(s) *= inv[static_cast<std::size_t>(s)];
  }
  std::vector<int> sv(seg.begin(), seg.end());
  return push(std::move(y), [x, sv = std::move(sv), inv = std::move(inv)](Tape& t,
                                                                          const Matrix& g) {
    Matrix gx(static_cast<Eigen::Index>(sv.size()), g.cols());
    for (std::size_t r = 0; r < sv.size(); ++r) {
      gx.row(static_cast<Eigen::Index>(r)) = g.row(sv[r]) * inv[static_cast<std::size_t>(sv[r])];
    }
    t.accumulate(x, gx);
  });
}

Var Tape::segment_softmax(Var scores, std::span<const int> seg, int count) {
  const Matrix& sv = value(scores);
  require(sv.cols() == 1, "segment_softmax", "scores must be a column");
  check_segments("segment_softmax", seg, sv.rows(), count);
  std::vector<double> shift(static_cast<std::size_t>(count),
                            -std::numeric_limits<double>::infinity());
  for (Eigen::Index r = 0; r < sv.rows(); ++r) {
    auto& m = shift[static_cast<std::size_t>(seg[static_cast<std::size_t>(r)])];
    m = std::max(m, sv(r, 0));
  }
  Matrix y(sv.rows(), 1);
  std::vector<double> total(static_cast<std::size_t>(count), 0.0);
  for (Eigen::Index r = 0; r < sv.rows(); ++r) {
    const auto s = static_cast<std::size_t>(seg[static_cast<std::size_t>(r)]);
    y(r, 0) = std::exp(sv(r, 0) - shift[s]);
    total[s] += y(r, 0);
  }
  for (Eigen::Index r = 0; r < sv.rows(); ++r) {
    y(r, 0) /= total[static_cast<std::size_t>(seg[static_cast<std::size_t>(r)])];
  }
  std::vector<int> segv(seg.begin(), seg.end());
  const Var out = push(std::move(y));
  nodes_[static_cast<std::size_t>(out.id)].backprop =
      [scores, out, count, segv = std::move(segv)](Tape& t, const Matrix& g) {
        const Matrix& yv = t.value(out);
        std::vector<double> dot(static_cast<std::size_t>(count), 0.0);
        for (std::size_t r = 0; r < segv.size(); ++r) {
          const auto i = static_cast<Eigen::Index>(r);
          dot[static_cast<std::size_t>(segv[r])] += g(i, 0) * yv(i, 0);
        }
        Matrix gs(yv.rows(), 1);
        for (std::size_t r = 0; r < segv.size(); ++r) {
          const auto i = static_cast<Eigen::Index>(r);
          gs(i, 0) = yv(i, 0) * (g(i, 0) - dot[static_cast<std::size_t>(segv[r])]);
        }
        t.accumulate(scores, gs);
      };
  return out;
}

Var Tape::row_dot(Var a, Var b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  require(av.rows() == bv.rows() && av.cols() == bv.cols(), "row_dot",
          dims(av) + " vs " + dims(bv));
  Matrix y = (av.array() * bv.array()).rowwise().sum().matrix();
  return push(std::move(y), [a, b](Tape& t, const Matrix& g) {
    const Matrix& av = t.value(a);
    const Matrix& bv = t.value(b);
    t.accumulate(a, (bv.array().colwise() * g.col(0).array()).matrix());
    t.accumulate(b, (av.array().colwise() * g.col(0).array()).matrix());
  });
}

Var Tape::sum_all(Var x) {
  Matrix y(1, 1);
  y(0, 0) = value(x).sum();
  return push(std::move(y), [x](Tape& t, const Matrix& g) {
    const Matrix& xv = t.value(x);
    t.accumulate(x, Matrix::Constant(xv.rows(), xv.cols(), g(0, 0)));
  });
}

Var Tape::sum(std::span<const Var> scalars) {
  Matrix y = Matrix::Zero(1, 1);
  for (Var s : scalars) {
    require(value(s).rows() == 1 && value(s).cols() == 1, "sum", "inputs must be 1x1");
    y(0, 0) += value(s)(0, 0);
  }
  std::vector<Var> in(scalars.begin(), scalars.end());
  return push(std::move(y), [in = std::move(in)](Tape& t, const Matrix& g) {
    for (Var s : in) {
      t.accumulate(s, g);
    }
  });
}

Var Tape::bce_with_logits(Var logits, std::span<const double> target,
                          std::span<const double> weight) {
  const Matrix& z = value(logits);
  require(z.cols() == 1 && static_cast<std::size_t>(z.rows()) == target.size() &&
              target.size() == weight.size(),
          "bce_with_logits", "logits/target/weight length mismatch");
  Matrix y = Matrix::Zero(1, 1);
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const double w = weight[static_cast<std::size_t>(r)];
    if (w == 0.0) {
      continue;
    }
    const double x = z(r, 0);
    const double tgt = target[static_cast<std::size_t>(r)];
    y(0, 0) += w * (std::max(x, 0.0) - x * tgt + std::log1p(std::exp(-std::abs(x))));
  }
  std::vector<double> tv(target.begin(), target.end());
  std::vector<double> wv(weight.begin(), weight.end());
  return push(std::move(y), [logits, tv = std::move(tv), wv = std::move(wv)](Tape& t,
                                                                            const Matrix& g) {
    const Matrix& z = t.value(logits);
    Matrix gz(z.rows(), 1);
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
      const auto i = static_cast<std::size_t>(r);
      gz(r, 0) = g(0, 0) * wv[i] * (act::sigmoid(z(r, 0)) - tv[i]);
    }
    t.accumulate(logits, gz);
  });
}

Var Tape::squared_error(Var pred, std::span<const double> target, std::span<const double> weight) {
  const Matrix& p = value(pred);
  require(p.cols() == 1 && static_cast<std::size_t>(p.rows()) == target.size() &&
              target.size() == weight.size(),
          "squared_error", "pred/target/weight length mismatch");
  Matrix y = Matrix::Zero(1, 1);
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    const double e = p(r, 0) - target[static_cast<std::size_t>(r)];
    y(0, 0) += weight[static_cast<std::size_t>(r)] * e * e;
  }
  std::vector<double> tv(target.begin(), target.end());
  std::vector<double> wv(weight.begin(), weight.end());
  return push(std::move(y), [pred, tv = std::move(tv), wv = std::move(wv)](Tape& t,
                                                                          const Matrix& g) {
    const Matrix& p = t.value(pred);
    Matrix gp(p.rows(), 1);
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
      const auto i = static_cast<std::size_t>(r);
      gp(r, 0) = g(0, 0) * wv[i] * 2.0 * (p(r, 0) - tv[i]);
    }
    t.accumulate(pred, gp);
  });
}

Var Tape::softmax_xent(Var logits, std::span<const int> seg, int count,
                       std::span<const int> target_row, std::span<const double> weight) {
  const Matrix& z = value(logits);
  require(z.cols() == 1, "softmax_xent", "logits must be a column");
  check_segments("softmax_xent", seg, z.rows(), count);
  require(target_row.size() == static_cast<std::size_t>(count) &&
              weight.size() == static_cast<std::size_t>(count),
          "softmax_xent", "one target and weight per segment required");
  std::vector<double> shift(static_cast<std::size_t>(count),
                            -std::numeric_limits<double>::infinity());
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    auto& m = shift[static_cast<std::size_t>(seg[static_cast<std::size_t>(r)])];
    m = std::max(m, z(r, 0));
  }
  std::vector<double> total(static_cast<std::size_t>(count), 0.0);
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const auto s = static_cast<std::size_t>(seg[static_cast<std::size_t>(r)]);
    total[s] += std::exp(z(r, 0) - shift[s]);
  }
  Matrix y = Matrix::Zero(1, 1);
  for (int s = 0; s < count; ++s) {
    const auto i = static_cast<std::size_t>(s);
    if (weight[i] == 0.0) {
      continue;
    }
    const int tr = target_row[i];
    require(tr >= 0 && tr < z.rows() && seg[static_cast<std::size_t>(tr)] == s, "softmax_xent",
            "target row outside its segment");
    y(0, 0) += weight[i] * (shift[i] + std::log(total[i]) - z(tr, 0));
  }
  std::vector<int> sv(seg.begin(), seg.end());
  std::vector<int> tv(target_row.begin(), target_row.end());
  std::vector<double> wv(weight.begin(), weight.end());
  return push(std::move(y), [logits, sv = std::move(sv), tv = std::move(tv), wv = std::move(wv),
                             shift = std::move(shift),
                             total = std::move(total)](Tape& t, const Matrix& g) {
    const Matrix& z = t.value(logits);
    Matrix gz(z.rows(), 1);
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
      const auto s = static_cast<std::size_t>(sv[static_cast<std::size_t>(r)]);
      gz(r, 0) = g(0, 0) * wv[s] * std::exp(z(r, 0) - shift[s]) / total[s];
    }
    for (std::size_t s = 0; s < tv.size(); ++s) {
      if (wv[s] != 0.0) {
        gz(tv[s], 0) -= g(0, 0) * wv[s];
      }
    }
    t.accumulate(logits, gz);
  });
}

void Tape::backward(Var loss) {
  const std::size_t root = checked(loss);
  const Matrix& lv = nodes_[root].value;
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ContractError("backward(): loss must be 1x1, got " + dims(lv));
  }
  nodes_[root].grad = Matrix::Ones(1, 1);
  for (std::size_t i = root + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.size() == 0 || !n.backprop) {
      continue;
    }
    // Moving the gradient out keeps the reference valid while the callback
    // accumulates into earlier nodes.
    Matrix g = std::move(n.grad);
    n.backprop(*this, g);
    n.grad.resize(0, 0);
  }
}

Gradients grad(const std::function<Var(Tape&)>& loss_fn, const ParamStore& params) {
  Tape tape(params);
  const Var loss = loss_fn(tape);
  tape.backward(loss);
  return tape.take_gradients();
}

}  // namespace cef
