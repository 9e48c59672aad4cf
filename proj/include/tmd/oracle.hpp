#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tmd/rng.hpp"

namespace tmd {

struct GaussianComponent {
  std::vector<double> mean;
  double variance = 1.0;
  double weight = 1.0;
};

/// Target density of an overdamped Langevin process with unit diffusion:
/// an isotropic Gaussian or a Gaussian mixture in dimension 1 or 2. Its
/// generator is L f = lap f + grad log pi . grad f.
class GeneratorSpec {
 public:
  static GeneratorSpec gaussian(std::vector<double> mean, double variance);
  static GeneratorSpec mixture(std::vector<GaussianComponent> components);

  std::size_t dim() const noexcept { return dim_; }
  const std::vector<GaussianComponent>& components() const noexcept { return components_; }

  double density(std::span<const double> x) const;
  std::vector<double> grad_log_density(std::span<const double> x) const;
  std::vector<double> sample(CounterRng& rng) const;

  /// Overall mean and per-coordinate standard deviation of the density.
  std::vector<double> mean() const;
  double spread() const;

 private:
  explicit GeneratorSpec(std::vector<GaussianComponent> components);
  std::vector<GaussianComponent> components_;
  std::size_t dim_;
};

enum class TestFunction { constant, quadratic, coordinate, cosine };

TestFunction parse_test_function(const std::string& name);
std::string to_string(TestFunction f);

double test_value(TestFunction f, std::span<const double> x);
std::vector<double> test_gradient(TestFunction f, std::span<const double> x);
double test_laplacian(TestFunction f, std::span<const double> x);

/// Closed-form generator lap f(x) + grad log pi(x) . grad f(x).
double analytic_generator(const GeneratorSpec& spec, TestFunction f, std::span<const double> x);

struct TrialError {
  double max_interior_error = 0.0;
  double mean_interior_error = 0.0;
  std::size_t interior_points = 0;
};

/// Samples m points from the target, builds L_m with the true pi^{1/2} and
/// compares (L_m f)_i with the closed form on points within 1.5 spreads of
/// the mean.
TrialError convergence_trial(const GeneratorSpec& spec, TestFunction f, std::size_t m, double epsilon,
                             std::uint64_t seed);

inline constexpr double kInteriorRadius = 1.5;

struct SweepRow {
  std::size_t m;
  double epsilon;
  std::uint64_t seed;
  TrialError error;
};

std::vector<SweepRow> convergence_sweep(const GeneratorSpec& spec, TestFunction f,
                                        const std::vector<std::size_t>& m_grid,
                                        const std::vector<double>& epsilon_grid,
                                        const std::vector<std::uint64_t>& seeds);

/// Header `m,epsilon,seed,max_err,mean_err`, 17 significant digits.
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

double median(std::vector<double> values);

}  // namespace tmd
