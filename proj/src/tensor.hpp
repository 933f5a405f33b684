#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace p2g::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense float64 array. 1-D tensors view as a single row.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims, double fill = 0.0);

  std::size_t numel() const { return data.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  Eigen::Map<Matrix> matrix();
  Eigen::Map<const Matrix> matrix() const;

  bool operator==(const Tensor&) const = default;
};

std::size_t shape_numel(const std::vector<std::size_t>& shape);
std::string shape_string(const std::vector<std::size_t>& shape);

enum class Init { Glorot, Zeros, Ones };

struct Parameter {
  Tensor value;
  Tensor grad;
  bool trainable = true;
};

/// Named parameters in deterministic (lexicographic) order.
class ParamStore {
 public:
  explicit ParamStore(std::uint64_t seed = 0) : seed_(seed) {}

  /// Weights [fan_in, fan_out] with Glorot init draw from a generator keyed on (seed, name).
  Parameter& add(const std::string& name, std::vector<std::size_t> shape, Init init, bool trainable = true);

  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.contains(name); }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }
  std::size_t size() const { return params_.size(); }

  std::size_t trainable_scalars() const;
  void zero_grad();
  std::uint64_t seed() const { return seed_; }

  bool values_equal(const ParamStore& other) const;

 private:
  std::uint64_t seed_;
  std::map<std::string, Parameter> params_;
};

/// 64-bit mixing function (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t x);
std::uint64_t hash_name(const std::string& s);
/// Uniform double in [0, 1) with 53 random bits.
double unit_uniform(std::uint64_t bits);

}  // namespace p2g::nn
