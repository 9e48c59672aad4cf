#include "tmd/autodiff.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "tmd/errors.hpp"

namespace tmd {

namespace {

using Shape = Tensor::Shape;

void require_same_shape(OpKind op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeMismatch(std::string(op_name(op)) + ": " + shape_string(a.shape()) + " vs " +
                        shape_string(b.shape()));
  }
}

void require_matrix(OpKind op, const Tensor& a) {
  if (!a.is_matrix()) {
    throw ShapeMismatch(std::string(op_name(op)) + " expects a matrix, got " + shape_string(a.shape()));
  }
}

void require_arity(OpKind op, std::size_t got, std::size_t want) {
  if (got != want) {
    throw ShapeMismatch(std::string(op_name(op)) + " takes " + std::to_string(want) + " inputs, got " +
                        std::to_string(got));
  }
}

std::size_t arity(OpKind op) {
  switch (op) {
    case OpKind::leaf:
    case OpKind::constant:
      return 0;
    case OpKind::add:
    case OpKind::sub:
    case OpKind::hadamard:
    case OpKind::scalar_mul:
    case OpKind::matmul:
    case OpKind::diag_left_scale:
    case OpKind::diag_right_scale:
      return 2;
    default:
      return 1;
  }
}

template <class F>
Tensor map_unary(const Tensor& x, F&& f) {
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < x.numel(); ++i) out[i] = f(x[i]);
  return Tensor(x.shape(), std::move(out));
}

template <class F>
Tensor map_binary(const Tensor& a, const Tensor& b, F&& f) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < a.numel(); ++i) out[i] = f(a[i], b[i]);
  return Tensor(a.shape(), std::move(out));
}

double softplus_value(double x) { return std::log1p(std::exp(-std::abs(x))) + std::max(x, 0.0); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor matmul_values(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(m * n, 0.0);
  const auto ad = a.data();
  const auto bd = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ad[i * k + p];
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * bd[p * n + j];
    }
  }
  return Tensor::matrix(m, n, std::move(out));
}

Tensor pairwise_values(const Tensor& x) {
  const std::size_t m = x.rows(), n = x.cols();
  const auto xd = x.data();
  std::vector<double> norms(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < n; ++k) norms[i] += xd[i * n + k] * xd[i * n + k];
  }
  std::vector<double> out(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < n; ++k) dot += xd[i * n + k] * xd[j * n + k];
      // Expansion can go slightly negative through cancellation.
      const double d = std::max(0.0, norms[i] + norms[j] - 2.0 * dot);
      out[i * m + j] = d;
      out[j * m + i] = d;
    }
  }
  return Tensor::matrix(m, m, std::move(out));
}

}  // namespace

std::string_view op_name(OpKind op) {
  switch (op) {
    case OpKind::leaf: return "leaf";
    case OpKind::constant: return "constant";
    case OpKind::add: return "add";
    case OpKind::sub: return "sub";
    case OpKind::hadamard: return "hadamard";
    case OpKind::scalar_mul: return "scalar_mul";
    case OpKind::matmul: return "matmul";
    case OpKind::exp: return "exp";
    case OpKind::neg: return "neg";
    case OpKind::reciprocal: return "reciprocal";
    case OpKind::row_sum: return "row_sum";
    case OpKind::diag_left_scale: return "diag_left_scale";
    case OpKind::diag_right_scale: return "diag_right_scale";
    case OpKind::pairwise_sq_dist: return "pairwise_sq_dist";
    case OpKind::relu: return "relu";
    case OpKind::softplus: return "softplus";
    case OpKind::mean: return "mean";
    case OpKind::sum: return "sum";
    case OpKind::square: return "square";
  }
  return "unknown";
}

Tensor evaluate(OpKind op, std::span<const Tensor* const> in) {
  require_arity(op, in.size(), arity(op));
  switch (op) {
    case OpKind::leaf:
    case OpKind::constant:
      throw std::invalid_argument("source nodes are not evaluated");
    case OpKind::add:
      require_same_shape(op, *in[0], *in[1]);
      return map_binary(*in[0], *in[1], [](double a, double b) { return a + b; });
    case OpKind::sub:
      require_same_shape(op, *in[0], *in[1]);
      return map_binary(*in[0], *in[1], [](double a, double b) { return a - b; });
    case OpKind::hadamard:
      require_same_shape(op, *in[0], *in[1]);
      return map_binary(*in[0], *in[1], [](double a, double b) { return a * b; });
    case OpKind::scalar_mul: {
      if (!in[0]->is_scalar()) throw ShapeMismatch("scalar_mul: first input must hold one value");
      const double s = in[0]->item();
      return map_unary(*in[1], [s](double v) { return s * v; });
    }
    case OpKind::matmul:
      require_matrix(op, *in[0]);
      require_matrix(op, *in[1]);
      if (in[0]->cols() != in[1]->rows()) {
        throw ShapeMismatch("matmul: " + shape_string(in[0]->shape()) + " x " + shape_string(in[1]->shape()));
      }
      return matmul_values(*in[0], *in[1]);
    case OpKind::exp:
      return map_unary(*in[0], [](double v) { return std::exp(v); });
    case OpKind::neg:
      return map_unary(*in[0], [](double v) { return -v; });
    case OpKind::reciprocal:
      for (double v : in[0]->data()) {
        if (v == 0.0) throw NonFiniteResult("reciprocal of zero");
      }
      return map_unary(*in[0], [](double v) { return 1.0 / v; });
    case OpKind::row_sum: {
      require_matrix(op, *in[0]);
      const std::size_t m = in[0]->rows(), n = in[0]->cols();
      std::vector<double> out(m, 0.0);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) out[i] += in[0]->at(i, j);
      }
      return Tensor::vector(std::move(out));
    }
    case OpKind::diag_left_scale: {
      const Tensor& v = *in[0];
      const Tensor& a = *in[1];
      require_matrix(op, a);
      if (v.rank() != 1 || v.numel() != a.rows()) {
        throw ShapeMismatch("diag_left_scale: " + shape_string(v.shape()) + " against " + shape_string(a.shape()));
      }
      std::vector<double> out(a.numel());
      for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) out[i * a.cols() + j] = v[i] * a.at(i, j);
      }
      return Tensor(a.shape(), std::move(out));
    }
    case OpKind::diag_right_scale: {
      const Tensor& a = *in[0];
      const Tensor& v = *in[1];
      require_matrix(op, a);
      if (v.rank() != 1 || v.numel() != a.cols()) {
        throw ShapeMismatch("diag_right_scale: " + shape_string(a.shape()) + " against " +
                            shape_string(v.shape()));
      }
      std::vector<double> out(a.numel());
      for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) out[i * a.cols() + j] = a.at(i, j) * v[j];
      }
      return Tensor(a.shape(), std::move(out));
    }
    case OpKind::pairwise_sq_dist:
      require_matrix(op, *in[0]);
      return pairwise_values(*in[0]);
    case OpKind::relu:
      return map_unary(*in[0], [](double v) { return v > 0.0 ? v : 0.0; });
    case OpKind::softplus:
      return map_unary(*in[0], softplus_value);
    case OpKind::mean: {
      double s = 0.0;
      for (double v : in[0]->data()) s += v;
      return Tensor::scalar(s / static_cast<double>(in[0]->numel()));
    }
    case OpKind::sum: {
      double s = 0.0;
      for (double v : in[0]->data()) s += v;
      return Tensor::scalar(s);
    }
    case OpKind::square:
      return map_unary(*in[0], [](double v) { return v * v; });
  }
  throw std::invalid_argument("unknown op");
}

NodeId Graph::push(OpKind op, std::vector<NodeId> inputs, Tensor value) {
  nodes_.push_back(Node{op, std::move(inputs), std::move(value)});
  return nodes_.size() - 1;
}

NodeId Graph::parameter(Tensor value) { return push(OpKind::leaf, {}, std::move(value)); }

NodeId Graph::constant(Tensor value) { return push(OpKind::constant, {}, std::move(value)); }

NodeId Graph::record(OpKind op, std::span<const NodeId> inputs) {
  if (op == OpKind::leaf || op == OpKind::constant) {
    throw std::invalid_argument("use parameter() or constant() for source nodes");
  }
  std::vector<const Tensor*> values;
  values.reserve(inputs.size());
  for (NodeId id : inputs) {
    if (id >= nodes_.size()) throw std::out_of_range("node id " + std::to_string(id) + " not in graph");
    values.push_back(&nodes_[id].value);
  }
  Tensor out;
  try {
    out = evaluate(op, values);
  } catch (const NonFiniteResult& e) {
    throw NonFiniteResult(std::string(op_name(op)) + ": " + e.what());
  }
  return push(op, std::vector<NodeId>(inputs.begin(), inputs.end()), std::move(out));
}

std::vector<NodeId> Graph::parameters() const {
  std::vector<NodeId> out;
  for (NodeId i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].op == OpKind::leaf) out.push_back(i);
  }
  return out;
}

Gradients backward(const Graph& graph, NodeId loss) {
  if (loss >= graph.size()) throw std::out_of_range("loss node not in graph");
  if (!graph.value(loss).is_scalar()) {
    throw NonScalarLoss("loss has shape " + shape_string(graph.value(loss).shape()));
  }

  std::vector<std::vector<double>> grad(loss + 1);
  grad[loss] = {1.0};

  auto acc = [&](NodeId id) -> std::vector<double>& {
    auto& g = grad[id];
    if (g.empty()) g.assign(graph.value(id).numel(), 0.0);
    return g;
  };

  Gradients result;
  for (NodeId id = loss + 1; id-- > 0;) {
    ++result.nodes_visited;
    const Node& node = graph.node(id);
    if (grad[id].empty() || node.inputs.empty()) continue;
    const std::vector<double>& g = grad[id];
    const Tensor& y = node.value;
    const auto& in = node.inputs;

    switch (node.op) {
      case OpKind::leaf:
      case OpKind::constant:
        break;
      case OpKind::add: {
        auto& ga = acc(in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        auto& gb = acc(in[1]);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
        break;
      }
      case OpKind::sub: {
        auto& ga = acc(in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        auto& gb = acc(in[1]);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
        break;
      }
      case OpKind::hadamard: {
        const Tensor& a = graph.value(in[0]);
        const Tensor& b = graph.value(in[1]);
        auto& ga = acc(in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b[i];
        auto& gb = acc(in[1]);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a[i];
        break;
      }
      case OpKind::scalar_mul: {
        const double s = graph.value(in[0]).item();
        const Tensor& x = graph.value(in[1]);
        double gs = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) gs += g[i] * x[i];
        acc(in[0])[0] += gs;
        auto& gx = acc(in[1]);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += s * g[i];
        break;
      }
      case OpKind::matmul: {
        const Tensor& a = graph.value(in[0]);
        const Tensor& b = graph.value(in[1]);
        const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
        auto& ga = acc(in[0]);
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * b[p * n + j];
            ga[i * k + p] += s;
          }
        }
        auto& gb = acc(in[1]);
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            const double aip = a[i * k + p];
            for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * g[i * n + j];
          }
        }
        break;
      }
      case OpKind::exp: {
        auto& gx = acc(in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i];
        break;
      }
      case OpKind::neg: {
        auto& gx = acc(in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] -= g[i];
        break;
      }
      case OpKind::reciprocal: {
        auto& gx = acc(in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] -= g[i] * y[i] * y[i];
        break;
      }
      case OpKind::row_sum: {
        const Tensor& a = graph.value(in[0]);
        auto& ga = acc(in[0]);
        for (std::size_t i = 0; i < a.rows(); ++i) {
          for (std::size_t j = 0; j < a.cols(); ++j) ga[i * a.cols() + j] += g[i];
        }
        break;
      }
      case OpKind::diag_left_scale: {
        const Tensor& v = graph.value(in[0]);
        const Tensor& a = graph.value(in[1]);
        const std::size_t n = a.cols();
        auto& gv = acc(in[0]);
        for (std::size_t i = 0; i < a.rows(); ++i) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * a[i * n + j];
          gv[i] += s;
        }
        auto& ga = acc(in[1]);
        for (std::size_t i = 0; i < a.rows(); ++i) {
          for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += v[i] * g[i * n + j];
        }
        break;
      }
      case OpKind::diag_right_scale: {
        const Tensor& a = graph.value(in[0]);
        const Tensor& v = graph.value(in[1]);
        const std::size_t n = a.cols();
        auto& ga = acc(in[0]);
        for (std::size_t i = 0; i < a.rows(); ++i) {
          for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += g[i * n + j] * v[j];
        }
        auto& gv = acc(in[1]);
        for (std::size_t i = 0; i < a.rows(); ++i) {
          for (std::size_t j = 0; j < n; ++j) gv[j] += g[i * n + j] * a[i * n + j];
        }
        break;
      }
      case OpKind::pairwise_sq_dist: {
        // dX_i = 2 sum_j S_ij (x_i - x_j), S = G + G^T
        const Tensor& x = graph.value(in[0]);
        const std::size_t m = x.rows(), n = x.cols();
        auto& gx = acc(in[0]);
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < m; ++j) {
            if (i == j) continue;
            const double s = 2.0 * (g[i * m + j] + g[j * m + i]);
            if (s == 0.0) continue;
            for (std::size_t k = 0; k < n; ++k) gx[i * n + k] += s * (x[i * n + k] - x[j * n + k]);
          }
        }
        break;
      }
      case OpKind::relu: {
        const Tensor& x = graph.value(in[0]);
        auto& gx = acc(in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (x[i] > 0.0) gx[i] += g[i];
        }
        break;
      }
      case OpKind::softplus: {
        const Tensor& x = graph.value(in[0]);
        auto& gx = acc(in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * sigmoid(x[i]);
        break;
      }
      case OpKind::mean: {
        auto& gx = acc(in[0]);
        const double share = g[0] / static_cast<double>(gx.size());
        for (double& v : gx) v += share;
        break;
      }
      case OpKind::sum: {
        auto& gx = acc(in[0]);
        for (double& v : gx) v += g[0];
        break;
      }
      case OpKind::square: {
        const Tensor& x = graph.value(in[0]);
        auto& gx = acc(in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += 2.0 * g[i] * x[i];
        break;
      }
    }
  }

  for (NodeId id : graph.parameters()) {
    const Tensor& v = graph.value(id);
    if (id <= loss && !grad[id].empty()) {
      result.by_leaf.emplace(id, Tensor(v.shape(), std::move(grad[id])));
    } else {
      result.by_leaf.emplace(id, Tensor::zeros(v.shape()));
    }
  }
  return result;
}

Tensor finite_diff_gradient(const std::function<double(const Tensor&)>& f, const Tensor& param, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("finite_diff_gradient: step must be positive");
  std::vector<double> base = param.to_vector();
  std::vector<double> out(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    auto probe = base;
    probe[i] = base[i] + step;
    const double up = f(Tensor(param.shape(), probe));
    probe[i] = base[i] - step;
    const double down = f(Tensor(param.shape(), probe));
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NonFiniteResult("finite_diff_gradient: non-finite evaluation at coordinate " + std::to_string(i));
    }
    out[i] = (up - down) / (2.0 * step);
  }
  return Tensor(param.shape(), std::move(out));
}

}  // namespace tmd
