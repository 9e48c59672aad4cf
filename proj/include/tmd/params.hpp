#pragma once

#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "tmd/autodiff.hpp"
#include "tmd/tensor.hpp"

namespace tmd {

/// Named trainable tensors, iterated in name order.
class ParamStore {
 public:
  void set(const std::string& name, Tensor value) { values_.insert_or_assign(name, std::move(value)); }
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const { return values_.count(name) != 0; }
  std::size_t size() const noexcept { return values_.size(); }

  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

  bool operator==(const ParamStore&) const = default;

 private:
  std::map<std::string, Tensor> values_;
};

using BoundParams = std::map<std::string, NodeId>;

/// Registers every tensor as a graph leaf, or as a constant when its name is
/// in `frozen`.
BoundParams bind_params(Graph& g, const ParamStore& store, const std::set<std::string>& frozen = {});

/// One line per tensor: `name [d0,d1] v0 v1 ...`, values row-major with 17
/// significant digits.
void save_params(std::ostream& out, const ParamStore& store);
ParamStore load_params(std::istream& in);

/// SGD with classical momentum: v <- mu v + grad; w <- w - lr v.
class SgdMomentum {
 public:
  SgdMomentum(double learning_rate, double momentum) : lr_(learning_rate), momentum_(momentum) {}

  void step(ParamStore& store, const BoundParams& bound, const Gradients& grads);

 private:
  double lr_;
  double momentum_;
  std::map<std::string, std::vector<double>> velocity_;
};

}  // namespace tmd
