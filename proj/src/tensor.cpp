#include "tensor.hpp"

#include <cmath>
#include <random>

#include "errors.hpp"

namespace p2g::nn {

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return shape.empty() ? 0 : n;
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(std::vector<std::size_t> dims, double fill) : shape(std::move(dims)), data(shape_numel(shape), fill) {}

std::size_t Tensor::rows() const { return shape.size() >= 2 ? shape[0] : 1; }
std::size_t Tensor::cols() const {
  if (shape.empty()) return 0;
  return shape.size() >= 2 ? numel() / shape[0] : shape[0];
}

Eigen::Map<Matrix> Tensor::matrix() {
  return {data.data(), static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(cols())};
}
Eigen::Map<const Matrix> Tensor::matrix() const {
  return {data.data(), static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(cols())};
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_name(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double unit_uniform(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

Parameter& ParamStore::add(const std::string& name, std::vector<std::size_t> shape, Init init, bool trainable) {
  if (params_.contains(name)) fail(ErrorKind::InvalidConfig, "duplicate parameter name " + name);
  if (shape_numel(shape) == 0) fail(ErrorKind::InvalidConfig, "parameter " + name + " has an empty shape");
  Parameter p;
  p.value = Tensor(shape);
  p.grad = Tensor(shape);
  p.trainable = trainable;
  switch (init) {
    case Init::Zeros: break;
    case Init::Ones: std::fill(p.value.data.begin(), p.value.data.end(), 1.0); break;
    case Init::Glorot: {
      const double fan_in = static_cast<double>(shape.front());
      const double fan_out = static_cast<double>(shape.size() >= 2 ? shape[1] : shape.front());
      const double bound = std::sqrt(6.0 / (fan_in + fan_out));
      std::mt19937_64 gen(mix64(seed_ ^ hash_name(name)));
      for (double& v : p.value.data) v = (2.0 * unit_uniform(gen()) - 1.0) * bound;
      break;
    }
  }
  return params_.emplace(name, std::move(p)).first->second;
}

Parameter& ParamStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) fail(ErrorKind::InvalidConfig, "unknown parameter " + name);
  return it->second;
}

const Parameter& ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) fail(ErrorKind::InvalidConfig, "unknown parameter " + name);
  return it->second;
}

std::size_t ParamStore::trainable_scalars() const {
  std::size_t n = 0;
  for (const auto& [name, p] : params_) {
    if (p.trainable) n += p.value.numel();
  }
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [name, p] : params_) std::fill(p.grad.data.begin(), p.grad.data.end(), 0.0);
}

bool ParamStore::values_equal(const ParamStore& other) const {
  if (params_.size() != other.params_.size()) return false;
  auto it = other.params_.begin();
  for (const auto& [name, p] : params_) {
    if (name != it->first || p.value != it->second.value || p.trainable != it->second.trainable) return false;
    ++it;
  }
  return true;
}

}  // namespace p2g::nn
