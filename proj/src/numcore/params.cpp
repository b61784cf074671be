#include "tempref/numcore/params.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "tempref/numcore/errors.hpp"

namespace tempref::numcore {

const Var& ParameterStore::add(const std::string& name, Array value) {
  if (entries_.contains(name)) throw ConfigError("duplicate parameter '" + name + "'");
  return entries_.emplace(name, leaf(std::move(value))).first->second;
}

const Var& ParameterStore::add_uniform(const std::string& name, std::size_t rows, std::size_t cols,
                                       double bound, Rng& rng) {
  Array value(rows, cols);
  for (double& v : value.data()) v = (2.0 * rng.uniform() - 1.0) * bound;
  return add(name, std::move(value));
}

const Var& ParameterStore::add_zeros(const std::string& name, std::size_t rows, std::size_t cols) {
  return add(name, Array(rows, cols));
}

const Var& ParameterStore::get(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ConfigError("unknown parameter '" + name + "'");
  return it->second;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, v] : entries_) n += v->value.size();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& [_, v] : entries_) v->zero_grad();
}

bool ParameterStore::grads_finite() const {
  for (const auto& [_, v] : entries_) {
    for (double g : v->grad.data()) {
      if (!std::isfinite(g)) return false;
    }
  }
  return true;
}

ParameterStore ParameterStore::clone() const {
  ParameterStore copy;
  for (const auto& [name, v] : entries_) copy.add(name, v->value);
  return copy;
}

bool ParameterStore::same_values(const ParameterStore& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (const auto& [name, v] : entries_) {
    auto it = other.entries_.find(name);
    if (it == other.entries_.end() || !(it->second->value == v->value)) return false;
  }
  return true;
}

void adam_step(ParameterStore& params, AdamMoments& moments, const AdamOptions& options,
               std::uint64_t t) {
  if (t == 0) throw DomainError("adam_step: step counter is 1-based");
  if (!params.grads_finite()) {
    params.zero_grad();
    throw NonFiniteGradient("adam_step: non-finite gradient");
  }
  const double bc1 = 1.0 - std::pow(options.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(options.beta2, static_cast<double>(t));
  for (const auto& [name, v] : params.entries()) {
    auto& m = moments.first[name];
    auto& s = moments.second[name];
    const std::size_t n = v->value.size();
    if (m.size() != n) m.assign(n, 0.0);
    if (s.size() != n) s.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double g = v->grad[i];
      m[i] = options.beta1 * m[i] + (1.0 - options.beta1) * g;
      s[i] = options.beta2 * s[i] + (1.0 - options.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double shat = s[i] / bc2;
      v->value[i] -= options.learning_rate * mhat / (std::sqrt(shat) + options.epsilon);
    }
    v->zero_grad();
  }
}

namespace {

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* suffix) {
  return std::filesystem::path(stem.string() + suffix);
}

void put_le(std::ostream& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

double get_le(const unsigned char* bytes) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void save_checkpoint(const ParameterStore& params, const std::filesystem::path& stem) {
  std::ofstream manifest(with_suffix(stem, ".manifest"), std::ios::binary);
  std::ofstream blob(with_suffix(stem, ".bin"), std::ios::binary);
  if (!manifest || !blob) throw FormatError("cannot write checkpoint " + stem.string());
  manifest << "# tempref parameters v1: name shape byte_offset\n";
  std::uint64_t offset = 0;
  for (const auto& [name, v] : params.entries()) {
    std::string dims;
    for (std::size_t i = 0; i < v->value.rank(); ++i) {
      if (i) dims += 'x';
      dims += std::to_string(v->value.shape()[i]);
    }
    manifest << name << ' ' << dims << ' ' << offset << '\n';
    for (double x : v->value.data()) put_le(blob, x);
    offset += 8 * v->value.size();
  }
  if (!manifest || !blob) throw FormatError("failed writing checkpoint " + stem.string());
}

ParameterStore load_checkpoint(const std::filesystem::path& stem) {
  std::ifstream manifest(with_suffix(stem, ".manifest"));
  std::ifstream blob_in(with_suffix(stem, ".bin"), std::ios::binary);
  if (!manifest || !blob_in) throw FormatError("cannot open checkpoint " + stem.string());
  std::vector<unsigned char> blob((std::istreambuf_iterator<char>(blob_in)),
                                  std::istreambuf_iterator<char>());
  ParameterStore params;
  std::string line;
  while (std::getline(manifest, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string name, dims;
    std::uint64_t offset = 0;
    if (!(fields >> name >> dims >> offset)) throw FormatError("bad manifest line: " + line);
    std::vector<std::size_t> shape;
    std::istringstream ds(dims);
    std::string d;
    while (std::getline(ds, d, 'x')) shape.push_back(std::stoull(d));
    Array value(shape);
    if (offset + 8 * value.size() > blob.size()) {
      throw FormatError("checkpoint blob too short for '" + name + "'");
    }
    for (std::size_t i = 0; i < value.size(); ++i) value[i] = get_le(blob.data() + offset + 8 * i);
    params.add(name, std::move(value));
  }
  return params;
}

}  // namespace tempref::numcore
