#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tmd/tensor.hpp"

namespace tmd {

/// Largest |a - b| / max(|a|, |b|, abs_floor / rel_tol) over the entries: the
/// relative error, except that entries below abs_floor / rel_tol in magnitude
/// are measured against the absolute bound. <= rel_tol means the gradient
/// passes.
double gradient_error(const Tensor& analytic, const Tensor& numeric, double abs_floor = 1e-6, double rel_tol = 1e-4);

struct GradcheckOptions {
  std::uint64_t seed = 0;
  std::size_t cases = 20;
  std::size_t rows = 6;
  std::size_t input_dim = 3;
  std::size_t latent_dim = 4;
  std::size_t head_hidden = 4;  // 0 for a linear density head
  double tolerance = 1e-4;
  double step = 1e-6;
};

struct GradcheckRow {
  std::size_t case_index;
  std::string group;
  double error;
};

struct GradcheckReport {
  std::vector<GradcheckRow> rows;
  GradcheckRow worst{0, "", 0.0};
  bool passed = true;
};

/// Random TMD layers around a smooth residual map; compares reverse-mode
/// gradients of a weighted sum of the output with central differences for
/// delta_t, the projection, every density-head tensor and the inputs.
/// Epsilon is fixed per case from the initial latent points.
GradcheckReport run_gradcheck(const GradcheckOptions& options);

/// `case,group,error,passed`
void write_gradcheck_csv(std::ostream& out, const GradcheckReport& report, double tolerance);

}  // namespace tmd
