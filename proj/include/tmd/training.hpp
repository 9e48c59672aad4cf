#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tmd/classifier.hpp"
#include "tmd/datasets.hpp"
#include "tmd/levelset.hpp"
#include "tmd/pointset.hpp"

namespace tmd {

struct MetricRow {
  std::size_t epoch;
  std::string split;
  double loss;
  std::string metric_name;
  double metric_value;
};

using MetricsHistory = std::vector<MetricRow>;

/// `epoch,split,loss,metric_name,metric_value`
void write_metrics_csv(std::ostream& out, const MetricsHistory& history);

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double learning_rate = 0.5;
  double momentum = 0.9;
  std::uint64_t seed = 0;
  bool use_tmd = true;
  std::size_t m_infer = 50;  // rows per generator at evaluation
};

struct Evaluation {
  double loss;
  double accuracy;
  std::vector<int> predicted;
};

Evaluation evaluate(const MlpClassifier& model, const Dataset& data, bool use_tmd, std::size_t m_infer);
Evaluation evaluate(const PointSetNet& net, const std::vector<PointCloud>& clouds, bool use_tmd);

/// Epoch 0 holds the metrics before any update. Rows are shuffled per epoch
/// from the seed; the trailing partial batch is kept. NonFiniteLoss carries
/// the zero-based update index.
MetricsHistory train_classifier(MlpClassifier& model, const Dataset& train, const Dataset& test,
                                const TrainConfig& config);

MetricsHistory train_pointset(PointSetNet& net, const std::vector<PointCloud>& train,
                              const std::vector<PointCloud>& test, const TrainConfig& config);

struct SegmentationRun {
  std::vector<LevelSetState> states;
  std::vector<double> iou;  // per image after the last step
  double mean_iou;
};

/// Evolves every image from initial_phi for `steps` steps, either per image
/// or as one TMD batch.
SegmentationRun run_segmentation(const std::vector<SegmentationSample>& samples, const LevelSetState& coefficients,
                                 std::size_t steps, const TmdLayerParams* tmd);

}  // namespace tmd
