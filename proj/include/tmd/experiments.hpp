#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tmd/config.hpp"
#include "tmd/training.hpp"

namespace tmd {

inline constexpr const char* kArtifactVersion = "0.1.0";

struct RunOutput {
  std::vector<std::string> files;  // relative to the run directory
  bool passed = true;  // false only for a failed gradient check
  std::string summary;  // one human-readable line
  std::optional<double> tmd_overhead;  // extra time of a TMD step relative to the plain step
};

struct ClassifierExperiment {
  Dataset train;
  Dataset test;
  MlpClassifier model;
  MetricsHistory history;  // includes the noisy test splits after training
  Evaluation final_test;
};

struct PointSetExperiment {
  std::vector<PointCloud> train;
  std::vector<PointCloud> test;
  PointSetNet net;
  MetricsHistory history;
  Evaluation final_test;
};

struct SegmentationExperiment {
  std::vector<SegmentationSample> samples;
  SegmentationRun initial;
  SegmentationRun result;
  TmdLayerParams layer;
};

ClassifierExperiment classifier_experiment(const ExperimentConfig& config);
PointSetExperiment pointset_experiment(const ExperimentConfig& config);
SegmentationExperiment segmentation_experiment(const ExperimentConfig& config);

/// Runs one experiment and writes its CSV/PGM/text outputs into `dir`
/// (created if needed). Output files depend only on the config.
RunOutput run_experiment(const ExperimentConfig& config, const std::filesystem::path& dir);

}  // namespace tmd
