#include "tmd/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "tmd/errors.hpp"
#include "tmd/format.hpp"
#include "tmd/kernel.hpp"
#include "tmd/operator.hpp"

namespace tmd {

GeneratorSpec::GeneratorSpec(std::vector<GaussianComponent> components) : components_(std::move(components)) {
  if (components_.empty()) throw ConfigError("density", "needs at least one component");
  dim_ = components_.front().mean.size();
  if (dim_ != 1 && dim_ != 2) throw ConfigError("density", "dimension must be 1 or 2");
  double total = 0.0;
  for (const auto& c : components_) {
    if (c.mean.size() != dim_) throw ConfigError("density", "components disagree on dimension");
    if (!(c.variance > 0.0)) throw ConfigError("density", "variance must be positive");
    if (!(c.weight > 0.0)) throw ConfigError("density", "weights must be positive");
    total += c.weight;
  }
  for (auto& c : components_) c.weight /= total;
}

GeneratorSpec GeneratorSpec::gaussian(std::vector<double> mean, double variance) {
  return GeneratorSpec({GaussianComponent{std::move(mean), variance, 1.0}});
}

GeneratorSpec GeneratorSpec::mixture(std::vector<GaussianComponent> components) {
  return GeneratorSpec(std::move(components));
}

namespace {

double component_log_density(const GaussianComponent& c, std::span<const double> x) {
  double r2 = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) r2 += (x[k] - c.mean[k]) * (x[k] - c.mean[k]);
  const double d = static_cast<double>(x.size());
  return std::log(c.weight) - 0.5 * d * std::log(2.0 * std::numbers::pi * c.variance) - r2 / (2.0 * c.variance);
}

}  // namespace

double GeneratorSpec::density(std::span<const double> x) const {
  double p = 0.0;
  for (const auto& c : components_) p += std::exp(component_log_density(c, x));
  return p;
}

std::vector<double> GeneratorSpec::grad_log_density(std::span<const double> x) const {
  // Responsibility-weighted component scores, normalized in log space.
  std::vector<double> logs;
  for (const auto& c : components_) logs.push_back(component_log_density(c, x));
  const double top = *std::max_element(logs.begin(), logs.end());
  double total = 0.0;
  for (double& l : logs) total += (l = std::exp(l - top));
  std::vector<double> g(dim_, 0.0);
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const auto& c = components_[k];
    for (std::size_t j = 0; j < dim_; ++j) g[j] -= logs[k] / total * (x[j] - c.mean[j]) / c.variance;
  }
  return g;
}

std::vector<double> GeneratorSpec::sample(CounterRng& rng) const {
  std::size_t pick = 0;
  if (components_.size() > 1) {
    double u = rng.uniform();
    while (pick + 1 < components_.size() && u >= components_[pick].weight) u -= components_[pick++].weight;
  }
  const auto& c = components_[pick];
  std::vector<double> x(dim_);
  const double sd = std::sqrt(c.variance);
  for (std::size_t j = 0; j < dim_; ++j) x[j] = rng.normal(c.mean[j], sd);
  return x;
}

std::vector<double> GeneratorSpec::mean() const {
  std::vector<double> mu(dim_, 0.0);
  for (const auto& c : components_) {
    for (std::size_t j = 0; j < dim_; ++j) mu[j] += c.weight * c.mean[j];
  }
  return mu;
}

double GeneratorSpec::spread() const {
  // Per-coordinate variance averaged over coordinates (law of total variance).
  const auto mu = mean();
  double var = 0.0;
  for (const auto& c : components_) {
    double between = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) between += (c.mean[j] - mu[j]) * (c.mean[j] - mu[j]);
    var += c.weight * (c.variance + between / static_cast<double>(dim_));
  }
  return std::sqrt(var);
}

TestFunction parse_test_function(const std::string& name) {
  if (name == "constant") return TestFunction::constant;
  if (name == "quadratic") return TestFunction::quadratic;
  if (name == "coordinate") return TestFunction::coordinate;
  if (name == "cosine") return TestFunction::cosine;
  throw ConfigError("test_function", "unknown test function '" + name + "'");
}

std::string to_string(TestFunction f) {
  switch (f) {
    case TestFunction::constant: return "constant";
    case TestFunction::quadratic: return "quadratic";
    case TestFunction::coordinate: return "coordinate";
    case TestFunction::cosine: return "cosine";
  }
  return "unknown";
}

double test_value(TestFunction f, std::span<const double> x) {
  switch (f) {
    case TestFunction::constant: return 1.0;
    case TestFunction::quadratic: {
      double s = 0.0;
      for (double v : x) s += v * v;
      return s;
    }
    case TestFunction::coordinate: return x[0];
    case TestFunction::cosine: return std::cos(x[0]);
  }
  return 0.0;
}

std::vector<double> test_gradient(TestFunction f, std::span<const double> x) {
  std::vector<double> g(x.size(), 0.0);
  switch (f) {
    case TestFunction::constant: break;
    case TestFunction::quadratic:
      for (std::size_t j = 0; j < x.size(); ++j) g[j] = 2.0 * x[j];
      break;
    case TestFunction::coordinate: g[0] = 1.0; break;
    case TestFunction::cosine: g[0] = -std::sin(x[0]); break;
  }
  return g;
}

double test_laplacian(TestFunction f, std::span<const double> x) {
  switch (f) {
    case TestFunction::constant: return 0.0;
    case TestFunction::quadratic: return 2.0 * static_cast<double>(x.size());
    case TestFunction::coordinate: return 0.0;
    case TestFunction::cosine: return -std::cos(x[0]);
  }
  return 0.0;
}

double analytic_generator(const GeneratorSpec& spec, TestFunction f, std::span<const double> x) {
  const auto drift = spec.grad_log_density(x);
  const auto grad = test_gradient(f, x);
  double out = test_laplacian(f, x);
  for (std::size_t j = 0; j < x.size(); ++j) out += drift[j] * grad[j];
  return out;
}

TrialError convergence_trial(const GeneratorSpec& spec, TestFunction f, std::size_t m, double epsilon,
                             std::uint64_t seed) {
  if (m < 10) throw ConfigError("m", "convergence trials need at least 10 samples");
  if (!(epsilon > 0.0)) throw InvalidBandwidth("epsilon must be positive");
  CounterRng rng(seed, "convergence/m=" + std::to_string(m) + "/eps=" + fmt17(epsilon));

  const std::size_t d = spec.dim();
  std::vector<double> points(m * d);
  std::vector<double> pi_sqrt(m), values(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto x = spec.sample(rng);
    std::copy(x.begin(), x.end(), points.begin() + static_cast<std::ptrdiff_t>(i * d));
    pi_sqrt[i] = std::sqrt(spec.density(x));
    values[i] = test_value(f, x);
  }
  const Tensor batch = Tensor::matrix(m, d, points);

  Graph g;
  const NodeId x = g.constant(batch);
  const NodeId kernel = gaussian_kernel(g, x, epsilon);
  const auto op = build_tmd_operator(g, kernel, kde(g, kernel), g.constant(Tensor::vector(pi_sqrt)), epsilon);
  const NodeId lf = apply_generator(g, op.generator, g.constant(Tensor::matrix(m, 1, values)));
  const Tensor& estimate = g.value(lf);

  const auto mu = spec.mean();
  const double radius = kInteriorRadius * spec.spread();
  TrialError err;
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const std::span<const double> xi(points.data() + i * d, d);
    double r2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) r2 += (xi[j] - mu[j]) * (xi[j] - mu[j]);
    if (std::sqrt(r2) > radius) continue;
    const double e = std::abs(estimate[i] - analytic_generator(spec, f, xi));
    err.max_interior_error = std::max(err.max_interior_error, e);
    total += e;
    ++err.interior_points;
  }
  if (err.interior_points) err.mean_interior_error = total / static_cast<double>(err.interior_points);
  return err;
}

std::vector<SweepRow> convergence_sweep(const GeneratorSpec& spec, TestFunction f,
                                        const std::vector<std::size_t>& m_grid,
                                        const std::vector<double>& epsilon_grid,
                                        const std::vector<std::uint64_t>& seeds) {
  if (m_grid.empty() || epsilon_grid.empty()) throw ConfigError("grid", "m and epsilon grids must be nonempty");
  std::vector<SweepRow> rows;
  for (std::size_t m : m_grid) {
    for (double eps : epsilon_grid) {
      for (std::uint64_t seed : seeds) rows.push_back(SweepRow{m, eps, seed, convergence_trial(spec, f, m, eps, seed)});
    }
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "m,epsilon,seed,max_err,mean_err\n";
  for (const auto& r : rows) {
    out << r.m << ',' << fmt17(r.epsilon) << ',' << r.seed << ',' << fmt17(r.error.max_interior_error) << ','
        << fmt17(r.error.mean_interior_error) << '\n';
  }
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace tmd
