#include <cmath>
#include <numeric>

#include "ctxslu/diffcore.hpp"
#include "ctxslu/errors.hpp"

namespace ctxslu::diff {

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape s, std::vector<double> v) : shape(std::move(s)), values(std::move(v)) {
  for (std::size_t extent : shape) {
    if (extent == 0) throw DimensionError("tensor extents must be positive: " + shape_string(shape));
  }
  if (element_count(shape) != values.size()) {
    throw DimensionError("tensor shape " + shape_string(shape) + " does not match " +
                         std::to_string(values.size()) + " values");
  }
}

Tensor Tensor::zeros(Shape s) {
  const std::size_t n = element_count(s);
  return Tensor(std::move(s), std::vector<double>(n, 0.0));
}

Tensor Tensor::vector(std::vector<double> v) {
  Shape s{v.size()};
  return Tensor(std::move(s), std::move(v));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> v) {
  return Tensor({rows, cols}, std::move(v));
}

// ---- ParameterStore -------------------------------------------------------

ParamId ParameterStore::add(std::string name, Tensor value) {
  if (by_name_.count(name)) throw DomainError("duplicate parameter name: " + name);
  by_name_.emplace(name, entries_.size());
  entries_.push_back({std::move(name), std::move(value)});
  return ParamId{entries_.size() - 1};
}

ParamId ParameterStore::add(std::string name, Shape shape, Init init, Rng& rng) {
  Tensor t = Tensor::zeros(shape);
  switch (init) {
    case Init::kZeros:
      break;
    case Init::kXavier: {
      const double fan_out = static_cast<double>(shape.size() == 2 ? shape[0] : 1);
      const double fan_in = static_cast<double>(shape.back());
      const double r = std::sqrt(6.0 / (fan_in + fan_out));
      for (double& v : t.values) v = uniform(rng, -r, r);
      break;
    }
    case Init::kLstmBias: {
      if (shape.size() != 1 || shape[0] % 4 != 0) {
        throw DimensionError("LSTM bias must be a vector of length 4H, got " + shape_string(shape));
      }
      const std::size_t hidden = shape[0] / 4;
      for (std::size_t i = hidden; i < 2 * hidden; ++i) t.values[i] = 1.0;
      break;
    }
  }
  return add(std::move(name), std::move(t));
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

std::optional<ParamId> ParameterStore::find(std::string_view name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) return std::nullopt;
  return ParamId{it->second};
}

ParamId ParameterStore::id(std::string_view name) const {
  if (auto found = find(name)) return *found;
  throw IndexError("unknown parameter: " + std::string(name));
}

std::vector<ParamId> ParameterStore::ids() const {
  std::vector<ParamId> out;
  out.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) out.push_back(ParamId{i});
  return out;
}

// ---- GradientMap ------------------------------------------------------------

const std::vector<double>& GradientMap::at(ParamId id) const {
  auto it = grads_.find(index_of(id));
  if (it == grads_.end()) throw IndexError("no gradient for parameter " + std::to_string(index_of(id)));
  return it->second;
}

void GradientMap::accumulate(ParamId id, std::span<const double> g, double scale) {
  auto [it, inserted] = grads_.try_emplace(index_of(id));
  if (inserted) it->second.assign(g.size(), 0.0);
  if (it->second.size() != g.size()) {
    throw DimensionError("gradient size mismatch for parameter " + std::to_string(index_of(id)));
  }
  for (std::size_t i = 0; i < g.size(); ++i) it->second[i] += scale * g[i];
}

void GradientMap::add(const GradientMap& other, double scale) {
  for (const auto& [id, g] : other.grads_) accumulate(ParamId{id}, g, scale);
}

}  // namespace ctxslu::diff
