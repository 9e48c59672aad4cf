#include "tmd/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "tmd/autodiff.hpp"
#include "tmd/format.hpp"
#include "tmd/layer.hpp"
#include "tmd/nn.hpp"

namespace tmd {

double gradient_error(const Tensor& analytic, const Tensor& numeric, double abs_floor, double rel_tol) {
  const double near_zero = abs_floor / rel_tol;
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.numel(); ++i) {
    const double scale = std::max({std::abs(analytic[i]), std::abs(numeric[i]), near_zero});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / scale);
  }
  return worst;
}

namespace {

Tensor uniform_tensor(CounterRng& rng, Tensor::Shape shape, double lo, double hi) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor(std::move(shape), std::move(v));
}

struct Case {
  Tensor x, w, b, weights;
  TmdLayerParams layer;
};

double loss_value(const Case& c) {
  Graph g;
  const NodeId x = g.constant(c.x);
  const TmdLayerNodes nodes = bind_layer(g, c.layer, false);
  const NodeId w = g.constant(c.w), b = g.constant(c.b);
  LayerFunction f = [w, b](Graph& gr, NodeId in) { return gr.add(in, gr.softplus(linear(gr, in, w, b))); };
  const NodeId out = tmd_forward(g, f, x, nodes, c.layer).output;
  return g.value(g.sum(g.hadamard(out, g.constant(c.weights)))).item();
}

}  // namespace

GradcheckReport run_gradcheck(const GradcheckOptions& options) {
  GradcheckReport report;
  for (std::size_t k = 0; k < options.cases; ++k) {
    CounterRng rng(options.seed, "gradcheck/case=" + std::to_string(k));
    const std::size_t m = options.rows, d = options.input_dim;
    Case c;
    c.x = uniform_tensor(rng, {m, d}, -1.0, 1.0);
    c.w = uniform_tensor(rng, {d, d}, -1.0, 1.0);
    c.b = uniform_tensor(rng, {1, d}, -0.5, 0.5);
    c.weights = uniform_tensor(rng, {m, d}, -1.0, 1.0);
    c.layer = TmdLayerParams::init(d, options.latent_dim, rng);
    if (options.head_hidden > 0) {
      c.layer.density_head = DensityHead::mlp(options.latent_dim, options.head_hidden, rng);
    } else {
      c.layer.density_head.w1 = uniform_tensor(rng, {options.latent_dim, 1}, -0.5, 0.5);
    }
    c.layer.delta_t = rng.uniform(0.2, 1.0);
    {
      Graph g;
      const Tensor latent = g.value(g.matmul(g.constant(c.x), g.constant(c.layer.kernel.projection)));
      c.layer.kernel.epsilon = Bandwidth::fixed(median_bandwidth(latent));
    }

    Graph g;
    const NodeId x = g.parameter(c.x);
    const TmdLayerNodes nodes = bind_layer(g, c.layer, true);
    const NodeId w = g.constant(c.w), b = g.constant(c.b);
    LayerFunction f = [w, b](Graph& gr, NodeId in) { return gr.add(in, gr.softplus(linear(gr, in, w, b))); };
    const NodeId out = tmd_forward(g, f, x, nodes, c.layer).output;
    const Gradients grads = backward(g, g.sum(g.hadamard(out, g.constant(c.weights))));

    std::vector<std::pair<std::string, NodeId>> groups = {
        {"delta_t", nodes.delta_t}, {"projection", nodes.projection}, {"head.w1", nodes.head.w1},
        {"head.b1", nodes.head.b1}};
    if (nodes.head.w2) {
      groups.emplace_back("head.w2", *nodes.head.w2);
      groups.emplace_back("head.b2", *nodes.head.b2);
    }
    groups.emplace_back("inputs", x);

    for (const auto& [name, id] : groups) {
      auto perturbed = [&, name = name](const Tensor& t) {
        Case p = c;
        if (name == "delta_t") p.layer.delta_t = t.item();
        else if (name == "projection") p.layer.kernel.projection = t;
        else if (name == "head.w1") p.layer.density_head.w1 = t;
        else if (name == "head.b1") p.layer.density_head.b1 = t;
        else if (name == "head.w2") p.layer.density_head.w2 = t;
        else if (name == "head.b2") p.layer.density_head.b2 = t;
        else p.x = t;
        return loss_value(p);
      };
      const Tensor numeric = finite_diff_gradient(perturbed, g.value(id), options.step);
      const double err = gradient_error(grads[id], numeric, 1e-6, options.tolerance);
      report.rows.push_back({k, name, err});
      if (err >= report.worst.error) report.worst = report.rows.back();
      if (!(err <= options.tolerance)) report.passed = false;
    }
  }
  return report;
}

void write_gradcheck_csv(std::ostream& out, const GradcheckReport& report, double tolerance) {
  out << "case,group,error,passed\n";
  for (const auto& r : report.rows) {
    out << r.case_index << ',' << r.group << ',' << fmt17(r.error) << ',' << (r.error <= tolerance ? 1 : 0) << '\n';
  }
}

}  // namespace tmd
