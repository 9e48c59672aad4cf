#include "tmd/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tmd/errors.hpp"

namespace tmd {

Dataset two_moons(std::size_t n, double noise, CounterRng& rng) {
  std::vector<double> x(n * 2);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(rng.index(2));
    const double t = rng.uniform(0.0, std::numbers::pi);
    double px, py;
    if (label == 0) {
      px = std::cos(t);
      py = std::sin(t);
    } else {
      px = 1.0 - std::cos(t);
      py = 0.5 - std::sin(t);
    }
    x[2 * i] = px + rng.normal(0.0, noise);
    x[2 * i + 1] = py + rng.normal(0.0, noise);
    y[i] = label;
  }
  return Dataset{Tensor::matrix(n, 2, std::move(x)), std::move(y), 2};
}

Dataset gaussian_blobs(std::size_t n, std::size_t classes, double stddev, CounterRng& rng) {
  std::vector<double> x(n * 2);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto label = rng.index(classes);
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(label) / static_cast<double>(classes);
    x[2 * i] = 2.0 * std::cos(angle) + rng.normal(0.0, stddev);
    x[2 * i + 1] = 2.0 * std::sin(angle) + rng.normal(0.0, stddev);
    y[i] = static_cast<int>(label);
  }
  return Dataset{Tensor::matrix(n, 2, std::move(x)), std::move(y), classes};
}

Dataset make_classification_data(const std::string& name, std::size_t n, double noise, CounterRng& rng) {
  if (name == "two_moons") return two_moons(n, noise, rng);
  if (name == "blobs") return gaussian_blobs(n, 3, std::max(noise, 1e-3) * 4.0, rng);
  throw ConfigError("dataset", "unknown dataset '" + name + "'");
}

Dataset with_input_noise(const Dataset& data, double sigma, CounterRng& rng) {
  if (sigma == 0.0) return data;
  auto v = data.inputs.to_vector();
  for (double& x : v) x += rng.normal(0.0, sigma);
  return Dataset{Tensor(data.inputs.shape(), std::move(v)), data.labels, data.classes};
}

PointCloud make_shape_cloud(ShapeClass shape, std::size_t points, double jitter, CounterRng& rng) {
  std::vector<double> p(points * 2);
  const double rot = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double c = std::cos(rot), s = std::sin(rot);
  for (std::size_t i = 0; i < points; ++i) {
    double x = 0.0, y = 0.0;
    const double u = rng.uniform();
    switch (shape) {
      case ShapeClass::circle: {
        const double t = 2.0 * std::numbers::pi * u;
        x = std::cos(t);
        y = std::sin(t);
        break;
      }
      case ShapeClass::square: {
        const double half = 0.75;
        const double along = 8.0 * half * u;  // perimeter position
        const int side = static_cast<int>(along / (2.0 * half)) % 4;
        const double off = along - side * 2.0 * half - half;
        switch (side) {
          case 0: x = off, y = -half; break;
          case 1: x = half, y = off; break;
          case 2: x = -off, y = half; break;
          default: x = -half, y = -off; break;
        }
        break;
      }
      case ShapeClass::cross: {
        const double t = 4.0 * u - 2.0;  // two unit-radius segments
        if (t < 0.0) {
          x = t + 1.0;
          y = 0.0;
        } else {
          x = 0.0;
          y = t - 1.0;
        }
        break;
      }
    }
    x += rng.normal(0.0, jitter);
    y += rng.normal(0.0, jitter);
    p[2 * i] = c * x - s * y;
    p[2 * i + 1] = s * x + c * y;
  }
  return PointCloud{Tensor::matrix(points, 2, std::move(p)), static_cast<int>(shape)};
}

std::vector<PointCloud> make_shape_clouds(std::size_t count, std::size_t points, double jitter, CounterRng& rng) {
  std::vector<PointCloud> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto shape = static_cast<ShapeClass>(rng.index(kShapeClasses));
    out.push_back(make_shape_cloud(shape, points, jitter, rng));
  }
  return out;
}

SegmentationSample make_segmentation_sample(const SegmentationSpec& spec, CounterRng& rng) {
  const std::size_t n = spec.size;
  const double center = static_cast<double>(n) / 2.0 - 0.5;
  const double cy = center + rng.uniform(-0.1, 0.1) * static_cast<double>(n);
  const double cx = center + rng.uniform(-0.1, 0.1) * static_cast<double>(n);
  const bool disk = rng.index(2) == 0;
  const double r = rng.uniform(0.18, 0.28) * static_cast<double>(n);
  const double hy = rng.uniform(0.15, 0.3) * static_cast<double>(n);
  const double hx = rng.uniform(0.15, 0.3) * static_cast<double>(n);
  std::vector<double> image(n * n), mask(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double dy = static_cast<double>(i) - cy;
      const double dx = static_cast<double>(j) - cx;
      const bool inside = disk ? dx * dx + dy * dy <= r * r : std::abs(dx) <= hx && std::abs(dy) <= hy;
      mask[i * n + j] = inside ? 1.0 : 0.0;
      image[i * n + j] =
          std::clamp((inside ? spec.foreground : spec.background) + rng.normal(0.0, spec.noise), 0.0, 1.0);
    }
  }
  return SegmentationSample{Tensor::matrix(n, n, std::move(image)), Tensor::matrix(n, n, std::move(mask))};
}

}  // namespace tmd
