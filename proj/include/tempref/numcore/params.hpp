#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tempref/numcore/graph.hpp"
#include "tempref/numcore/rng.hpp"

namespace tempref::numcore {

/// Named trainable arrays. Each entry is a graph leaf, so the same node is
/// used directly when building computations and its grad slot persists
/// across forward passes.
class ParameterStore {
 public:
  /// Adds a [rows, cols] parameter with entries uniform in +-bound.
  const Var& add_uniform(const std::string& name, std::size_t rows, std::size_t cols, double bound,
                         Rng& rng);
  const Var& add_zeros(const std::string& name, std::size_t rows, std::size_t cols);
  const Var& add(const std::string& name, Array value);

  bool contains(const std::string& name) const { return entries_.contains(name); }
  const Var& get(const std::string& name) const;
  const std::map<std::string, Var>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;

  void zero_grad();
  bool grads_finite() const;
  /// Deep copy: new leaves with copied values and zero grads.
  ParameterStore clone() const;
  /// Values only; grads are ignored.
  bool same_values(const ParameterStore& other) const;

 private:
  std::map<std::string, Var> entries_;
};

struct AdamOptions {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First and second moment estimates, keyed like the store.
struct AdamMoments {
  std::map<std::string, std::vector<double>> first;
  std::map<std::string, std::vector<double>> second;
};

/// Thrown when a gradient entry is NaN or infinite; parameters are left
/// untouched.
class NonFiniteGradient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Applies one bias-corrected Adam update at step `t` (1-based), then zeroes
/// every grad.
void adam_step(ParameterStore& params, AdamMoments& moments, const AdamOptions& options,
               std::uint64_t t);

/// Writes `<stem>.manifest` (text: one `name shape offset` line per entry)
/// and `<stem>.bin` (little-endian float64 values back to back).
void save_checkpoint(const ParameterStore& params, const std::filesystem::path& stem);
ParameterStore load_checkpoint(const std::filesystem::path& stem);

}  // namespace tempref::numcore
