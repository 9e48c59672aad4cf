#include "tmd/params.hpp"

#include <istream>
#include <ostream>
#include <sstream>

#include "tmd/errors.hpp"
#include "tmd/format.hpp"

namespace tmd {

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = values_.find(name);
  if (it == values_.end()) throw UnknownKey("no parameter named '" + name + "'");
  return it->second;
}

BoundParams bind_params(Graph& g, const ParamStore& store, const std::set<std::string>& frozen) {
  BoundParams bound;
  for (const auto& [name, value] : store) {
    bound[name] = frozen.count(name) ? g.constant(value) : g.parameter(value);
  }
  return bound;
}

void save_params(std::ostream& out, const ParamStore& store) {
  for (const auto& [name, value] : store) {
    out << name << ' ' << shape_string(value.shape());
    for (double v : value.data()) out << ' ' << fmt17(v);
    out << '\n';
  }
}

ParamStore load_params(std::istream& in) {
  ParamStore store;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string name, shape_text;
    if (!(row >> name >> shape_text) || shape_text.size() < 2 || shape_text.front() != '[' ||
        shape_text.back() != ']') {
      throw FormatError("parameter line without name and shape: " + line);
    }
    Tensor::Shape shape;
    std::istringstream dims(shape_text.substr(1, shape_text.size() - 2));
    std::string dim;
    while (std::getline(dims, dim, ',')) shape.push_back(std::stoul(dim));
    std::vector<double> values(shape_numel(shape));
    for (double& v : values) {
      if (!(row >> v)) throw FormatError("parameter '" + name + "' has too few values");
    }
    double extra;
    if (row >> extra) throw FormatError("parameter '" + name + "' has too many values");
    store.set(name, Tensor(std::move(shape), std::move(values)));
  }
  return store;
}

void SgdMomentum::step(ParamStore& store, const BoundParams& bound, const Gradients& grads) {
  for (const auto& [name, id] : bound) {
    auto it = grads.by_leaf.find(id);
    if (it == grads.by_leaf.end()) continue;  // frozen
    const Tensor& grad = it->second;
    const Tensor& current = store.get(name);
    auto& vel = velocity_[name];
    if (vel.empty()) vel.assign(current.numel(), 0.0);
    std::vector<double> next = current.to_vector();
    for (std::size_t i = 0; i < next.size(); ++i) {
      vel[i] = momentum_ * vel[i] + grad[i];
      next[i] -= lr_ * vel[i];
    }
    store.set(name, Tensor(current.shape(), std::move(next)));
  }
}

}  // namespace tmd
