#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "tempref/numcore/graph.hpp"
#include "tempref/numcore/rng.hpp"

namespace tempref::numcore {

// Binary elementwise ops accept equal shapes, or a [1, n] operand that is
// expanded along the leading axis of an [m, n] operand.

Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double factor);

Var sigmoid(const Var& a);
Var tanh(const Var& a);
/// Throws DomainError on any non-positive entry.
Var log(const Var& a);
Var exp(const Var& a);
/// Softmax over the last axis.
Var softmax(const Var& a);

enum class Elementwise { kAdd, kSub, kMul, kSigmoid, kTanh, kLog, kExp, kSoftmax };
/// Tag-dispatched form of the ops above; `b` is required for binary tags only.
Var elementwise(Elementwise op, const Var& a, const Var& b = nullptr);

/// Sum of all entries, as a [1, 1] node.
Var sum(const Var& a);
Var mean(const Var& a);

/// Rows [begin, begin + count).
Var rows(const Var& a, std::size_t begin, std::size_t count);
Var row(const Var& a, std::size_t index);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);

/// scores[b, k] = dot(query[b], keys[b * per_row + k]).
Var grouped_dot(const Var& query, const Var& keys, std::size_t per_row);
/// out[b] = sum_k weights[b, k] * values[b * K + k], K = weights.cols().
Var grouped_mix(const Var& weights, const Var& values);

/// Weights of one LSTM layer; gate column blocks are ordered input, forget,
/// cell candidate, output.
struct LstmWeights {
  Var input;      // [D_in, 4H]
  Var recurrent;  // [H, 4H]
  Var bias;       // [1, 4H]

  std::size_t hidden() const;
  std::size_t input_size() const;
};

struct LstmState {
  Var h;
  Var c;
};

/// One LSTM step. Null `h`/`c` mean zero state.
LstmState lstm_cell(const Var& x, const Var& h, const Var& c, const LstmWeights& w);
/// Same step when x * W_input + bias has already been computed.
LstmState lstm_cell_projected(const Var& projected, const Var& h, const Var& c,
                              const LstmWeights& w);
/// Scans the rows of `sequence` ([T, D_in]) as one length-T sequence from
/// `initial` (null members mean zeros). Returns all hidden states as [T, H].
Var lstm_scan(const Var& sequence, const LstmWeights& w, LstmState initial = {});

/// softmax((logits + noise) / temperature) for a caller-supplied noise array.
Var gumbel_softmax(const Var& logits, const Array& noise, double temperature);
/// Draws standard Gumbel noise row by row from `rng`.
Var gumbel_softmax(const Var& logits, double temperature, Rng& rng);
Array gumbel_noise(std::size_t rows, std::size_t cols, Rng& rng);

/// Mean over rows of -log softmax(logits)[row, labels[row]].
Var cross_entropy(const Var& logits, std::span<const std::size_t> labels);

/// Index of the largest entry of each row (first on ties).
std::vector<std::size_t> argmax_rows(const Array& a);
Array one_hot_rows(std::span<const std::size_t> indices, std::size_t classes);

}  // namespace tempref::numcore
