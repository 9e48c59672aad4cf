#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tmd/rng.hpp"
#include "tmd/tensor.hpp"

namespace tmd {

/// Labeled rows.
struct Dataset {
  Tensor inputs;
  std::vector<int> labels;
  std::size_t classes = 2;

  std::size_t size() const { return labels.size(); }
};

/// Two interleaving half circles with isotropic Gaussian noise; labels are
/// drawn per point so rows come in random order.
Dataset two_moons(std::size_t n, double noise, CounterRng& rng);

/// `classes` isotropic Gaussian blobs with centers on a circle of radius 2.
Dataset gaussian_blobs(std::size_t n, std::size_t classes, double stddev, CounterRng& rng);

Dataset make_classification_data(const std::string& name, std::size_t n, double noise, CounterRng& rng);

/// Adds N(0, sigma^2) to every input coordinate.
Dataset with_input_noise(const Dataset& data, double sigma, CounterRng& rng);

enum class ShapeClass { circle = 0, square = 1, cross = 2 };
inline constexpr std::size_t kShapeClasses = 3;

struct PointCloud {
  Tensor points;  // n x 2
  int label;
};

/// Points on the outline of a unit circle, a square of half-side 0.75, or a
/// cross of two unit-radius segments; jittered and randomly rotated.
PointCloud make_shape_cloud(ShapeClass shape, std::size_t points, double jitter, CounterRng& rng);

std::vector<PointCloud> make_shape_clouds(std::size_t count, std::size_t points, double jitter, CounterRng& rng);

/// Image with one filled rectangle or disk plus its ground-truth mask.
struct SegmentationSample {
  Tensor image;  // H x W
  Tensor mask;  // H x W of 0/1
};

struct SegmentationSpec {
  std::size_t size = 32;
  double foreground = 0.7;
  double background = 0.3;
  double noise = 0.2;
};

SegmentationSample make_segmentation_sample(const SegmentationSpec& spec, CounterRng& rng);

}  // namespace tmd
