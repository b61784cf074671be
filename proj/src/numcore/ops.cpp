#include "tempref/numcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "tempref/numcore/errors.hpp"

namespace tempref::numcore {

namespace {

void require_rank2(const Var& a, const char* op) {
  if (!a) throw DimensionError(std::string(op) + ": null operand");
  if (a->value.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected rank-2 operand, got " +
                         a->value.shape_string());
  }
}

// C += A * B for row-major A [m,k], B [k,n].
void gemm_nn(const double* __restrict a, const double* __restrict b, double* __restrict c,
             std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* __restrict crow = c + i * n;
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* __restrict brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C += A * B^T for A [m,n], B [k,n]; C is [m,k]. B is transposed once so the
// inner loop streams contiguously.
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
             std::size_t k) {
  std::vector<double> bt(n * k);
  for (std::size_t p = 0; p < k; ++p) {
    for (std::size_t j = 0; j < n; ++j) bt[j * k + p] = b[p * n + j];
  }
  gemm_nn(a, bt.data(), c, m, n, k);
}

// C += A^T * B for A [m,k], B [m,n]; C is [k,n].
void gemm_tn(const double* __restrict a, const double* __restrict b, double* __restrict c,
             std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    const double* __restrict brow = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      double* __restrict crow = c + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

enum class Broadcast { kNone, kExpandB, kExpandA };

Broadcast broadcast_mode(const Var& a, const Var& b, const char* op) {
  require_rank2(a, op);
  require_rank2(b, op);
  if (a->value.same_shape(b->value)) return Broadcast::kNone;
  if (a->cols() == b->cols()) {
    if (b->rows() == 1) return Broadcast::kExpandB;
    if (a->rows() == 1) return Broadcast::kExpandA;
  }
  throw DimensionError(std::string(op) + ": incompatible shapes " + a->value.shape_string() +
                       " and " + b->value.shape_string());
}

template <class Forward, class GradA, class GradB>
Var binary(const Var& a, const Var& b, const char* tag, Forward f, GradA ga, GradB gb) {
  const Broadcast mode = broadcast_mode(a, b, tag);
  const std::size_t rows = std::max(a->rows(), b->rows());
  const std::size_t cols = a->cols();
  Array out(rows, cols);
  const bool expand_a = mode == Broadcast::kExpandA;
  const bool expand_b = mode == Broadcast::kExpandB;
  const double* av = a->value.ptr();
  const double* bv = b->value.ptr();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* ar = av + (expand_a ? 0 : r * cols);
    const double* br = bv + (expand_b ? 0 : r * cols);
    double* orow = out.ptr() + r * cols;
    for (std::size_t j = 0; j < cols; ++j) orow[j] = f(ar[j], br[j]);
  }
  return make_node(std::move(out), {a, b}, tag,
                   [=](Node& self) {
                     Node& pa = *self.parents[0];
                     Node& pb = *self.parents[1];
                     const double* g = self.grad.ptr();
                     const double* avv = pa.value.ptr();
                     const double* bvv = pb.value.ptr();
                     for (std::size_t r = 0; r < rows; ++r) {
                       const std::size_t ao = expand_a ? 0 : r * cols;
                       const std::size_t bo = expand_b ? 0 : r * cols;
                       for (std::size_t j = 0; j < cols; ++j) {
                         const double gr = g[r * cols + j];
                         if (pa.requires_grad) pa.grad[ao + j] += ga(gr, avv[ao + j], bvv[bo + j]);
                         if (pb.requires_grad) pb.grad[bo + j] += gb(gr, avv[ao + j], bvv[bo + j]);
                       }
                     }
                   });
}

// Unary op whose derivative is expressed through input x and output y.
template <class Forward, class Derivative>
Var unary(const Var& a, const char* tag, Forward f, Derivative d) {
  require_rank2(a, tag);
  Array out(a->value.shape());
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; ++i) out[i] = f(a->value[i]);
  return make_node(std::move(out), {a}, tag, [=](Node& self) {
    Node& p = *self.parents[0];
    for (std::size_t i = 0; i < n; ++i) p.grad[i] += self.grad[i] * d(p.value[i], self.value[i]);
  });
}

double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Row softmax of `scaled`, written into out.
void softmax_rows(const Array& scaled, Array& out) {
  const std::size_t rows = scaled.rows();
  const std::size_t cols = scaled.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = scaled.ptr() + r * cols;
    double* o = out.ptr() + r * cols;
    const double mx = *std::max_element(in, in + cols);
    double total = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      o[j] = std::exp(in[j] - mx);
      total += o[j];
    }
    for (std::size_t j = 0; j < cols; ++j) o[j] /= total;
  }
}

// dx += factor * y * (dy - sum(dy * y)) row by row.
void softmax_backward(const Array& y, const Array& dy, Array& dx, double factor) {
  const std::size_t rows = y.rows();
  const std::size_t cols = y.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* yr = y.ptr() + r * cols;
    const double* gr = dy.ptr() + r * cols;
    double dot = 0.0;
    for (std::size_t j = 0; j < cols; ++j) dot += yr[j] * gr[j];
    double* xr = dx.ptr() + r * cols;
    for (std::size_t j = 0; j < cols; ++j) xr[j] += factor * yr[j] * (gr[j] - dot);
  }
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  const std::size_t m = a->rows(), k = a->cols(), n = b->cols();
  if (b->rows() != k) {
    throw DimensionError("matmul: inner dimensions differ, " + a->value.shape_string() + " x " +
                         b->value.shape_string());
  }
  Array out(m, n);
  gemm_nn(a->value.ptr(), b->value.ptr(), out.ptr(), m, k, n);
  return make_node(std::move(out), {a, b}, "matmul", [m, k, n](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) gemm_nt(self.grad.ptr(), pb.value.ptr(), pa.grad.ptr(), m, n, k);
    if (pb.requires_grad) gemm_tn(pa.value.ptr(), self.grad.ptr(), pb.grad.ptr(), m, k, n);
  });
}

Var add(const Var& a, const Var& b) {
  return binary(
      a, b, "add", [](double x, double y) { return x + y; },
      [](double g, double, double) { return g; }, [](double g, double, double) { return g; });
}

Var sub(const Var& a, const Var& b) {
  return binary(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](double g, double, double) { return g; }, [](double g, double, double) { return -g; });
}

Var mul(const Var& a, const Var& b) {
  return binary(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](double g, double, double y) { return g * y; },
      [](double g, double x, double) { return g * x; });
}

Var scale(const Var& a, double factor) {
  return unary(
      a, "scale", [factor](double x) { return factor * x; },
      [factor](double, double) { return factor; });
}

Var sigmoid(const Var& a) {
  return unary(a, "sigmoid", sigmoid_scalar, [](double, double y) { return y * (1.0 - y); });
}

Var tanh(const Var& a) {
  return unary(
      a, "tanh", [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var log(const Var& a) {
  require_rank2(a, "log");
  for (double v : a->value.data()) {
    if (!(v > 0.0)) throw DomainError("log: non-positive entry " + std::to_string(v));
  }
  return unary(
      a, "log", [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var exp(const Var& a) {
  return unary(
      a, "exp", [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var softmax(const Var& a) {
  require_rank2(a, "softmax");
  Array out(a->value.shape());
  softmax_rows(a->value, out);
  return make_node(std::move(out), {a}, "softmax", [](Node& self) {
    softmax_backward(self.value, self.grad, self.parents[0]->grad, 1.0);
  });
}

Var elementwise(Elementwise op, const Var& a, const Var& b) {
  const bool binary_op = op == Elementwise::kAdd || op == Elementwise::kSub ||
                         op == Elementwise::kMul;
  if (binary_op && !b) throw DimensionError("elementwise: binary op needs two operands");
  switch (op) {
    case Elementwise::kAdd: return add(a, b);
    case Elementwise::kSub: return sub(a, b);
    case Elementwise::kMul: return mul(a, b);
    case Elementwise::kSigmoid: return sigmoid(a);
    case Elementwise::kTanh: return tanh(a);
    case Elementwise::kLog: return log(a);
    case Elementwise::kExp: return exp(a);
    case Elementwise::kSoftmax: return softmax(a);
  }
  throw DomainError("elementwise: unknown op");
}

Var sum(const Var& a) {
  require_rank2(a, "sum");
  double total = 0.0;
  for (double v : a->value.data()) total += v;
  return make_node(Array::scalar(total), {a}, "sum", [](Node& self) {
    const double g = self.grad[0];
    for (double& d : self.parents[0]->grad.data()) d += g;
  });
}

Var mean(const Var& a) { return scale(sum(a), 1.0 / static_cast<double>(a->value.size())); }

Var rows(const Var& a, std::size_t begin, std::size_t count) {
  require_rank2(a, "rows");
  if (count == 0 || begin + count > a->rows()) {
    throw DimensionError("rows: range [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") outside " + a->value.shape_string());
  }
  const std::size_t cols = a->cols();
  Array out(count, cols);
  std::copy_n(a->value.ptr() + begin * cols, count * cols, out.ptr());
  return make_node(std::move(out), {a}, "rows", [begin, cols](Node& self) {
    double* dst = self.parents[0]->grad.ptr() + begin * cols;
    const std::size_t n = self.grad.size();
    for (std::size_t i = 0; i < n; ++i) dst[i] += self.grad[i];
  });
}

Var row(const Var& a, std::size_t index) { return rows(a, index, 1); }

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no operands");
  require_rank2(parts[0], "concat_rows");
  const std::size_t cols = parts[0]->cols();
  std::size_t total = 0;
  for (const auto& p : parts) {
    require_rank2(p, "concat_rows");
    if (p->cols() != cols) throw DimensionError("concat_rows: column counts differ");
    total += p->rows();
  }
  Array out(total, cols);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    std::copy_n(p->value.ptr(), p->value.size(), out.ptr() + offset);
    offset += p->value.size();
  }
  return make_node(std::move(out), {parts.begin(), parts.end()}, "concat_rows", [](Node& self) {
    std::size_t off = 0;
    for (auto& p : self.parents) {
      const std::size_t n = p->value.size();
      if (p->requires_grad) {
        for (std::size_t i = 0; i < n; ++i) p->grad[i] += self.grad[off + i];
      }
      off += n;
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no operands");
  require_rank2(parts[0], "concat_cols");
  const std::size_t rows_n = parts[0]->rows();
  std::size_t total = 0;
  for (const auto& p : parts) {
    require_rank2(p, "concat_cols");
    if (p->rows() != rows_n) throw DimensionError("concat_cols: row counts differ");
    total += p->cols();
  }
  Array out(rows_n, total);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t c = p->cols();
    for (std::size_t r = 0; r < rows_n; ++r) {
      std::copy_n(p->value.ptr() + r * c, c, out.ptr() + r * total + offset);
    }
    offset += c;
  }
  return make_node(std::move(out), {parts.begin(), parts.end()}, "concat_cols",
                   [rows_n, total](Node& self) {
                     std::size_t off = 0;
                     for (auto& p : self.parents) {
                       const std::size_t c = p->cols();
                       if (p->requires_grad) {
                         for (std::size_t r = 0; r < rows_n; ++r) {
                           for (std::size_t j = 0; j < c; ++j) {
                             p->grad[r * c + j] += self.grad[r * total + off + j];
                           }
                         }
                       }
                       off += c;
                     }
                   });
}

Var grouped_dot(const Var& query, const Var& keys, std::size_t per_row) {
  require_rank2(query, "grouped_dot");
  require_rank2(keys, "grouped_dot");
  const std::size_t b = query->rows(), h = query->cols();
  if (per_row == 0 || keys->cols() != h || keys->rows() != b * per_row) {
    throw DimensionError("grouped_dot: query " + query->value.shape_string() + " vs keys " +
                         keys->value.shape_string() + " with " + std::to_string(per_row) +
                         " keys per row");
  }
  Array out(b, per_row);
  for (std::size_t i = 0; i < b; ++i) {
    const double* q = query->value.ptr() + i * h;
    for (std::size_t k = 0; k < per_row; ++k) {
      const double* key = keys->value.ptr() + (i * per_row + k) * h;
      double s = 0.0;
      for (std::size_t j = 0; j < h; ++j) s += q[j] * key[j];
      out.at(i, k) = s;
    }
  }
  return make_node(std::move(out), {query, keys}, "grouped_dot", [b, h, per_row](Node& self) {
    Node& pq = *self.parents[0];
    Node& pk = *self.parents[1];
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t k = 0; k < per_row; ++k) {
        const double g = self.grad.at(i, k);
        const std::size_t kr = (i * per_row + k) * h;
        for (std::size_t j = 0; j < h; ++j) {
          if (pq.requires_grad) pq.grad[i * h + j] += g * pk.value[kr + j];
          if (pk.requires_grad) pk.grad[kr + j] += g * pq.value[i * h + j];
        }
      }
    }
  });
}

Var grouped_mix(const Var& weights, const Var& values) {
  require_rank2(weights, "grouped_mix");
  require_rank2(values, "grouped_mix");
  const std::size_t b = weights->rows(), per_row = weights->cols(), h = values->cols();
  if (values->rows() != b * per_row) {
    throw DimensionError("grouped_mix: weights " + weights->value.shape_string() +
                         " vs values " + values->value.shape_string());
  }
  Array out(b, h);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t k = 0; k < per_row; ++k) {
      const double w = weights->value.at(i, k);
      const double* v = values->value.ptr() + (i * per_row + k) * h;
      for (std::size_t j = 0; j < h; ++j) out[i * h + j] += w * v[j];
    }
  }
  return make_node(std::move(out), {weights, values}, "grouped_mix",
                   [b, h, per_row](Node& self) {
                     Node& pw = *self.parents[0];
                     Node& pv = *self.parents[1];
                     for (std::size_t i = 0; i < b; ++i) {
                       const double* g = self.grad.ptr() + i * h;
                       for (std::size_t k = 0; k < per_row; ++k) {
                         const std::size_t vr = (i * per_row + k) * h;
                         if (pw.requires_grad) {
                           double s = 0.0;
                           for (std::size_t j = 0; j < h; ++j) s += g[j] * pv.value[vr + j];
                           pw.grad[i * per_row + k] += s;
                         }
                         if (pv.requires_grad) {
                           const double w = pw.value[i * per_row + k];
                           for (std::size_t j = 0; j < h; ++j) pv.grad[vr + j] += w * g[j];
                         }
                       }
                     }
                   });
}

std::size_t LstmWeights::hidden() const { return recurrent->rows(); }
std::size_t LstmWeights::input_size() const { return input->rows(); }

namespace {

void check_lstm_weights(const LstmWeights& w) {
  require_rank2(w.input, "lstm");
  require_rank2(w.recurrent, "lstm");
  require_rank2(w.bias, "lstm");
  const std::size_t h = w.recurrent->rows();
  if (w.recurrent->cols() != 4 * h || w.input->cols() != 4 * h || w.bias->cols() != 4 * h ||
      w.bias->rows() != 1) {
    throw DimensionError("lstm: gate weights must have 4H columns (input " +
                         w.input->value.shape_string() + ", recurrent " +
                         w.recurrent->value.shape_string() + ", bias " +
                         w.bias->value.shape_string() + ")");
  }
}

// Gate nonlinearities and the two state updates as two graph nodes sharing
// the activated gates.
LstmState lstm_gates(const Var& z, const Var& c_prev, std::size_t hidden) {
  const std::size_t batch = z->rows();
  const std::size_t h = hidden;
  auto act = std::make_shared<Array>(batch, 4 * h);
  for (std::size_t b = 0; b < batch; ++b) {
    const double* zr = z->value.ptr() + b * 4 * h;
    double* ar = act->ptr() + b * 4 * h;
    for (std::size_t j = 0; j < h; ++j) {
      ar[j] = sigmoid_scalar(zr[j]);
      ar[h + j] = sigmoid_scalar(zr[h + j]);
      ar[2 * h + j] = std::tanh(zr[2 * h + j]);
      ar[3 * h + j] = sigmoid_scalar(zr[3 * h + j]);
    }
  }

  Array c_val(batch, h);
  for (std::size_t b = 0; b < batch; ++b) {
    const double* ar = act->ptr() + b * 4 * h;
    for (std::size_t j = 0; j < h; ++j) {
      const double cp = c_prev ? c_prev->value[b * h + j] : 0.0;
      c_val[b * h + j] = ar[h + j] * cp + ar[j] * ar[2 * h + j];
    }
  }
  std::vector<Var> c_parents{z};
  if (c_prev) c_parents.push_back(c_prev);
  Var c_next = make_node(std::move(c_val), std::move(c_parents), "lstm_c",
                         [act, batch, h](Node& self) {
                           Node& pz = *self.parents[0];
                           Node* pc = self.parents.size() > 1 ? self.parents[1].get() : nullptr;
                           for (std::size_t b = 0; b < batch; ++b) {
                             const double* ar = act->ptr() + b * 4 * h;
                             double* dz = pz.grad.ptr() + b * 4 * h;
                             for (std::size_t j = 0; j < h; ++j) {
                               const double g = self.grad[b * h + j];
                               const double i = ar[j], f = ar[h + j], cand = ar[2 * h + j];
                               const double cp = pc ? pc->value[b * h + j] : 0.0;
                               if (pz.requires_grad) {
                                 dz[j] += g * cand * i * (1.0 - i);
                                 dz[h + j] += g * cp * f * (1.0 - f);
                                 dz[2 * h + j] += g * i * (1.0 - cand * cand);
                               }
                               if (pc && pc->requires_grad) pc->grad[b * h + j] += g * f;
                             }
                           }
                         });

  auto tanh_c = std::make_shared<Array>(batch, h);
  Array h_val(batch, h);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t j = 0; j < h; ++j) {
      const double t = std::tanh(c_next->value[b * h + j]);
      (*tanh_c)[b * h + j] = t;
      h_val[b * h + j] = act->at(b, 3 * h + j) * t;
    }
  }
  Var h_next = make_node(std::move(h_val), {z, c_next}, "lstm_h",
                         [act, tanh_c, batch, h](Node& self) {
                           Node& pz = *self.parents[0];
                           Node& pc = *self.parents[1];
                           for (std::size_t b = 0; b < batch; ++b) {
                             for (std::size_t j = 0; j < h; ++j) {
                               const double g = self.grad[b * h + j];
                               const double o = act->at(b, 3 * h + j);
                               const double t = (*tanh_c)[b * h + j];
                               if (pz.requires_grad) pz.grad[b * 4 * h + 3 * h + j] += g * t * o * (1.0 - o);
                               if (pc.requires_grad) pc.grad[b * h + j] += g * o * (1.0 - t * t);
                             }
                           }
                         });
  return {h_next, c_next};
}

}  // namespace

LstmState lstm_cell_projected(const Var& projected, const Var& h, const Var& c,
                              const LstmWeights& w) {
  check_lstm_weights(w);
  require_rank2(projected, "lstm_cell");
  const std::size_t hidden = w.hidden();
  const std::size_t batch = projected->rows();
  if (projected->cols() != 4 * hidden) throw DimensionError("lstm_cell: projected input must be [B, 4H]");
  auto check_state = [&](const Var& s, const char* name) {
    if (!s) return;
    require_rank2(s, "lstm_cell");
    if (s->rows() != batch || s->cols() != hidden) {
      throw DimensionError(std::string("lstm_cell: ") + name + " must be [" +
                           std::to_string(batch) + "," + std::to_string(hidden) + "], got " +
                           s->value.shape_string());
    }
  };
  check_state(h, "h");
  check_state(c, "c");
  const Var z = h ? add(projected, matmul(h, w.recurrent)) : projected;
  return lstm_gates(z, c, hidden);
}

LstmState lstm_cell(const Var& x, const Var& h, const Var& c, const LstmWeights& w) {
  check_lstm_weights(w);
  require_rank2(x, "lstm_cell");
  if (x->cols() != w.input_size()) {
    throw DimensionError("lstm_cell: input " + x->value.shape_string() + " does not match " +
                         w.input->value.shape_string());
  }
  return lstm_cell_projected(add(matmul(x, w.input), w.bias), h, c, w);
}

Var lstm_scan(const Var& sequence, const LstmWeights& w, LstmState initial) {
  check_lstm_weights(w);
  require_rank2(sequence, "lstm_scan");
  if (sequence->cols() != w.input_size()) {
    throw DimensionError("lstm_scan: input " + sequence->value.shape_string() +
                         " does not match " + w.input->value.shape_string());
  }
  const Var projected = add(matmul(sequence, w.input), w.bias);
  const std::size_t steps = sequence->rows();
  const std::size_t h = w.hidden();
  for (const Var* s : {&initial.h, &initial.c}) {
    if (*s && ((*s)->value.rank() != 2 || (*s)->rows() != 1 || (*s)->cols() != h)) {
      throw DimensionError("lstm_scan: initial state must be [1," + std::to_string(h) + "]");
    }
  }
  // The whole recurrence is one node; backward runs truncated-free BPTT.
  auto act = std::make_shared<Array>(steps, 4 * h);
  auto cells = std::make_shared<Array>(steps, h);
  auto tanh_c = std::make_shared<Array>(steps, h);
  Array out(steps, h);
  std::vector<double> h_prev(h, 0.0), c_prev(h, 0.0), z(4 * h);
  if (initial.h) std::copy_n(initial.h->value.ptr(), h, h_prev.begin());
  if (initial.c) std::copy_n(initial.c->value.ptr(), h, c_prev.begin());
  const double* wr = w.recurrent->value.ptr();
  for (std::size_t t = 0; t < steps; ++t) {
    std::copy_n(projected->value.ptr() + t * 4 * h, 4 * h, z.begin());
    gemm_nn(h_prev.data(), wr, z.data(), 1, h, 4 * h);
    double* ar = act->ptr() + t * 4 * h;
    for (std::size_t j = 0; j < h; ++j) {
      ar[j] = sigmoid_scalar(z[j]);
      ar[h + j] = sigmoid_scalar(z[h + j]);
      ar[2 * h + j] = std::tanh(z[2 * h + j]);
      ar[3 * h + j] = sigmoid_scalar(z[3 * h + j]);
      const double c = ar[h + j] * c_prev[j] + ar[j] * ar[2 * h + j];
      const double tc = std::tanh(c);
      (*cells)[t * h + j] = c;
      (*tanh_c)[t * h + j] = tc;
      out[t * h + j] = ar[3 * h + j] * tc;
      c_prev[j] = c;
      h_prev[j] = out[t * h + j];
    }
  }
  std::vector<Var> parents{projected, w.recurrent};
  const bool has_h0 = static_cast<bool>(initial.h);
  const bool has_c0 = static_cast<bool>(initial.c);
  if (has_h0) parents.push_back(initial.h);
  if (has_c0) parents.push_back(initial.c);
  return make_node(
      std::move(out), std::move(parents), "lstm_scan",
      [act, cells, tanh_c, steps, h, has_h0, has_c0](Node& self) {
        Node& pp = *self.parents[0];
        Node& pr = *self.parents[1];
        Node* ph0 = has_h0 ? self.parents[2].get() : nullptr;
        Node* pc0 = has_c0 ? self.parents[has_h0 ? 3 : 2].get() : nullptr;
        std::vector<double> dh_next(h, 0.0), dc_next(h, 0.0), dz(4 * h), h_before(h);
        std::vector<double> wr_t(4 * h * h);
        for (std::size_t r = 0; r < h; ++r) {
          for (std::size_t k = 0; k < 4 * h; ++k) wr_t[k * h + r] = pr.value[r * 4 * h + k];
        }
        for (std::size_t t = steps; t-- > 0;) {
          const double* ar = act->ptr() + t * 4 * h;
          for (std::size_t j = 0; j < h; ++j) {
            const double i = ar[j], f = ar[h + j], g = ar[2 * h + j], o = ar[3 * h + j];
            const double tc = (*tanh_c)[t * h + j];
            const double cp = t > 0 ? (*cells)[(t - 1) * h + j] : (pc0 ? pc0->value[j] : 0.0);
            const double dh = self.grad[t * h + j] + dh_next[j];
            const double dc = dc_next[j] + dh * o * (1.0 - tc * tc);
            dz[j] = dc * g * i * (1.0 - i);
            dz[h + j] = dc * cp * f * (1.0 - f);
            dz[2 * h + j] = dc * i * (1.0 - g * g);
            dz[3 * h + j] = dh * tc * o * (1.0 - o);
            dc_next[j] = dc * f;
          }
          if (pp.requires_grad) {
            double* dp = pp.grad.ptr() + t * 4 * h;
            for (std::size_t k = 0; k < 4 * h; ++k) dp[k] += dz[k];
          }
          for (std::size_t j = 0; j < h; ++j) {
            h_before[j] = t > 0 ? self.value[(t - 1) * h + j] : (ph0 ? ph0->value[j] : 0.0);
          }
          if (pr.requires_grad) gemm_tn(h_before.data(), dz.data(), pr.grad.ptr(), 1, h, 4 * h);
          std::fill(dh_next.begin(), dh_next.end(), 0.0);
          gemm_nn(dz.data(), wr_t.data(), dh_next.data(), 1, 4 * h, h);
        }
        if (ph0 && ph0->requires_grad) {
          for (std::size_t j = 0; j < h; ++j) ph0->grad[j] += dh_next[j];
        }
        if (pc0 && pc0->requires_grad) {
          for (std::size_t j = 0; j < h; ++j) pc0->grad[j] += dc_next[j];
        }
      });
}

Array gumbel_noise(std::size_t rows_n, std::size_t cols, Rng& rng) {
  Array noise(rows_n, cols);
  for (double& v : noise.data()) v = rng.gumbel();
  return noise;
}

Var gumbel_softmax(const Var& logits, const Array& noise, double temperature) {
  require_rank2(logits, "gumbel_softmax");
  if (!(temperature > 0.0)) {
    throw DomainError("gumbel_softmax: temperature must be positive, got " +
                      std::to_string(temperature));
  }
  if (!noise.same_shape(logits->value)) throw DimensionError("gumbel_softmax: noise shape mismatch");
  Array scaled(logits->value.shape());
  for (std::size_t i = 0; i < scaled.size(); ++i) {
    scaled[i] = (logits->value[i] + noise[i]) / temperature;
  }
  Array out(scaled.shape());
  softmax_rows(scaled, out);
  return make_node(std::move(out), {logits}, "gumbel_softmax", [temperature](Node& self) {
    softmax_backward(self.value, self.grad, self.parents[0]->grad, 1.0 / temperature);
  });
}

Var gumbel_softmax(const Var& logits, double temperature, Rng& rng) {
  require_rank2(logits, "gumbel_softmax");
  if (!(temperature > 0.0)) {
    throw DomainError("gumbel_softmax: temperature must be positive, got " +
                      std::to_string(temperature));
  }
  return gumbel_softmax(logits, gumbel_noise(logits->rows(), logits->cols(), rng), temperature);
}

Var cross_entropy(const Var& logits, std::span<const std::size_t> labels) {
  require_rank2(logits, "cross_entropy");
  const std::size_t b = logits->rows(), classes = logits->cols();
  if (labels.size() != b) {
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(b) + " rows");
  }
  for (auto l : labels) {
    if (l >= classes) {
      throw IndexError("cross_entropy: label " + std::to_string(l) + " outside [0, " +
                       std::to_string(classes) + ")");
    }
  }
  auto probs = std::make_shared<Array>(logits->value.shape());
  softmax_rows(logits->value, *probs);
  double total = 0.0;
  for (std::size_t r = 0; r < b; ++r) {
    const double* lr = logits->value.ptr() + r * classes;
    const double mx = *std::max_element(lr, lr + classes);
    double acc = 0.0;
    for (std::size_t j = 0; j < classes; ++j) acc += std::exp(lr[j] - mx);
    total += mx + std::log(acc) - lr[labels[r]];
  }
  std::vector<std::size_t> kept(labels.begin(), labels.end());
  return make_node(Array::scalar(total / static_cast<double>(b)), {logits}, "cross_entropy",
                   [probs, kept = std::move(kept), b, classes](Node& self) {
                     const double g = self.grad[0] / static_cast<double>(b);
                     Array& dl = self.parents[0]->grad;
                     for (std::size_t r = 0; r < b; ++r) {
                       for (std::size_t j = 0; j < classes; ++j) {
                         const double target = j == kept[r] ? 1.0 : 0.0;
                         dl[r * classes + j] += g * ((*probs)[r * classes + j] - target);
                       }
                     }
                   });
}

std::vector<std::size_t> argmax_rows(const Array& a) {
  std::vector<std::size_t> out(a.rows());
  const std::size_t cols = a.cols();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double* p = a.ptr() + r * cols;
    out[r] = static_cast<std::size_t>(std::max_element(p, p + cols) - p);
  }
  return out;
}

Array one_hot_rows(std::span<const std::size_t> indices, std::size_t classes) {
  Array out(indices.size(), classes);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= classes) throw IndexError("one_hot_rows: index out of range");
    out.at(r, indices[r]) = 1.0;
  }
  return out;
}

}  // namespace tempref::numcore
