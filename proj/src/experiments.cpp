#include "tmd/experiments.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

#include "tmd/errors.hpp"
#include "tmd/format.hpp"
#include "tmd/gradcheck.hpp"
#include "tmd/kernel.hpp"
#include "tmd/nn.hpp"
#include "tmd/operator.hpp"
#include "tmd/oracle.hpp"
#include "tmd/training.hpp"

namespace tmd {

namespace fs = std::filesystem;

namespace {

class Outputs {
 public:
  Outputs(fs::path dir, RunOutput& run) : dir_(std::move(dir)), run_(run) { fs::create_directories(dir_); }

  std::ofstream open(const std::string& name, bool binary = false) {
    run_.files.push_back(name);
    std::ofstream out(dir_ / name, binary ? std::ios::binary : std::ios::out);
    if (!out) throw FormatError("cannot write " + (dir_ / name).string());
    return out;
  }

 private:
  fs::path dir_;
  RunOutput& run_;
};

std::string short_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

Bandwidth bandwidth_of(const ExperimentConfig& c) {
  const double e = c.bandwidth("epsilon");
  return e == 0.0 ? Bandwidth::median() : Bandwidth::fixed(e);
}

template <class F>
double seconds(F&& f, int reps) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / reps;
}

TrainConfig train_config(const ExperimentConfig& c) {
  TrainConfig t;
  t.epochs = c.size("epochs");
  t.batch_size = c.size("batch_size");
  t.learning_rate = c.real("learning_rate");
  t.momentum = c.real("momentum");
  t.seed = c.integer("seed");
  t.use_tmd = c.flag("use_tmd");
  return t;
}

GeneratorSpec target_of(const std::string& name) {
  if (name == "gaussian1d") return GeneratorSpec::gaussian({0.0}, 1.0);
  if (name == "gaussian2d") return GeneratorSpec::gaussian({0.0, 0.0}, 1.0);
  return GeneratorSpec::mixture({{{-1.5}, 0.5, 0.5}, {{1.5}, 0.5, 0.5}});
}

void validate_generator(const ExperimentConfig& c, Outputs& out, RunOutput& run) {
  const GeneratorSpec spec = target_of(c.text("target"));
  const TestFunction f = parse_test_function(c.text("test_function"));
  std::vector<std::uint64_t> seeds;
  for (auto s : c.integers("seeds")) seeds.push_back(s + c.integer("seed"));
  std::vector<std::size_t> ms;
  for (auto m : c.integers("m_grid")) ms.push_back(static_cast<std::size_t>(m));
  const auto rows = convergence_sweep(spec, f, ms, c.reals("epsilon_grid"), seeds);
  auto sweep = out.open("sweep.csv");
  write_sweep_csv(sweep, rows);
  auto summary = out.open("summary.csv");
  summary << "m,epsilon,median_mean_err,median_max_err\n";
  for (auto m : ms) {
    for (double e : c.reals("epsilon_grid")) {
      std::vector<double> mean_err, max_err;
      for (const auto& r : rows) {
        if (r.m == m && r.epsilon == e) {
          mean_err.push_back(r.error.mean_interior_error);
          max_err.push_back(r.error.max_interior_error);
        }
      }
      const double med = median(mean_err);
      summary << m << ',' << fmt17(e) << ',' << fmt17(med) << ',' << fmt17(median(max_err)) << '\n';
      run.summary += "m=" + std::to_string(m) + " eps=" + short_number(e) + " median error " + short_number(med) + "; ";
    }
  }
}

void train_classifier_run(const ExperimentConfig& c, Outputs& out, RunOutput& run) {
  ClassifierExperiment x = classifier_experiment(c);
  const MlpClassifier& model = x.model;
  const Dataset& train = x.train;
  const Dataset& test = x.test;
  const Evaluation& final_test = x.final_test;
  const MetricsHistory& history = x.history;
  TrainConfig tc = train_config(c);
  auto metrics = out.open("metrics.csv");
  write_metrics_csv(metrics, history);

  auto pred = out.open("predictions.csv");
  pred << "index,label,predicted\n";
  for (std::size_t i = 0; i < test.size(); ++i) pred << i << ',' << test.labels[i] << ',' << final_test.predicted[i] << '\n';
  auto params = out.open("params.txt");
  save_params(params, model.params());
  run.summary = "test accuracy " + short_number(final_test.accuracy);

  if (tc.use_tmd) {
    const std::size_t rows = std::min(tc.batch_size, train.size());
    std::vector<std::size_t> idx(rows);
    for (std::size_t i = 0; i < rows; ++i) idx[i] = i;
    const Tensor x = take_rows(train.inputs, idx);
    std::vector<int> labels(train.labels.begin(), train.labels.begin() + static_cast<std::ptrdiff_t>(rows));
    auto step = [&](bool tmd) {
      Graph g;
      const BoundParams bound = bind_params(g, model.params());
      backward(g, brier_loss(g, model.forward(g, bound, g.constant(x), tmd), labels));
    };
    run.tmd_overhead = seconds([&] { step(true); }, 20) / seconds([&] { step(false); }, 20) - 1.0;
  }
}

void train_pointset_run(const ExperimentConfig& c, Outputs& out, RunOutput& run) {
  PointSetExperiment x = pointset_experiment(c);
  const PointSetNet& net = x.net;
  const auto& train = x.train;
  const auto& test = x.test;
  const Evaluation& final_test = x.final_test;
  const MetricsHistory& history = x.history;
  const TrainConfig tc = train_config(c);
  auto metrics = out.open("metrics.csv");
  write_metrics_csv(metrics, history);

  auto pred = out.open("predictions.csv");
  pred << "index,label,predicted\n";
  for (std::size_t i = 0; i < test.size(); ++i) pred << i << ',' << test[i].label << ',' << final_test.predicted[i] << '\n';
  auto params = out.open("params.txt");
  save_params(params, net.params());
  run.summary = "test accuracy " + short_number(final_test.accuracy);

  if (tc.use_tmd) {
    std::vector<Tensor> clouds;
    std::vector<int> labels;
    for (std::size_t i = 0; i < std::min(tc.batch_size, train.size()); ++i) {
      clouds.push_back(train[i].points);
      labels.push_back(train[i].label);
    }
    auto step = [&](bool tmd) {
      Graph g;
      const BoundParams bound = bind_params(g, net.params());
      backward(g, brier_loss(g, net.forward_batch(g, bound, clouds, tmd), labels));
    };
    run.tmd_overhead = seconds([&] { step(true); }, 3) / seconds([&] { step(false); }, 3) - 1.0;
  }
}

void segment_run(const ExperimentConfig& c, Outputs& out, RunOutput& run) {
  const SegmentationExperiment x = segmentation_experiment(c);
  const auto& samples = x.samples;
  const SegmentationRun& initial = x.initial;
  const SegmentationRun& result = x.result;
  const TmdLayerParams& layer = x.layer;
  const bool use_tmd = c.flag("use_tmd");

  MetricsHistory history{{0, "images", 1.0 - initial.mean_iou, "iou", initial.mean_iou},
                         {c.size("steps"), "images", 1.0 - result.mean_iou, "iou", result.mean_iou}};
  auto metrics = out.open("metrics.csv");
  write_metrics_csv(metrics, history);
  auto pred = out.open("predictions.csv");
  pred << "image,iou\n";
  for (std::size_t i = 0; i < samples.size(); ++i) pred << i << ',' << fmt17(result.iou[i]) << '\n';
  for (std::size_t i = 0; i < samples.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "mask_%02zu.pgm", i);
    auto m = out.open(name, true);
    write_pgm(m, foreground_mask(result.states[i].phi));
    std::snprintf(name, sizeof name, "truth_%02zu.pgm", i);
    auto t = out.open(name, true);
    write_pgm(t, samples[i].mask);
  }
  run.summary = "mean IoU " + short_number(result.mean_iou);

  if (use_tmd) {
    const double t_tmd = seconds([&] { chanvese_tmd_step(result.states, layer); }, 5);
    const double t_plain = seconds([&] {
      for (const auto& s : result.states) chanvese_step(s);
    }, 5);
    run.tmd_overhead = t_tmd / t_plain - 1.0;
  }
}

void gradcheck_run(const ExperimentConfig& c, Outputs& out, RunOutput& run) {
  GradcheckOptions o;
  o.seed = c.integer("seed");
  o.cases = c.size("cases");
  o.rows = c.size("rows");
  o.input_dim = c.size("input_dim");
  o.latent_dim = c.size("latent_dim");
  o.head_hidden = c.size("head_hidden");
  o.tolerance = c.real("tolerance");
  const GradcheckReport report = run_gradcheck(o);
  auto csv = out.open("gradcheck.csv");
  write_gradcheck_csv(csv, report, o.tolerance);
  run.passed = report.passed;
  run.summary = std::string(report.passed ? "all groups pass" : "FAILED") + "; worst " + short_number(report.worst.error) +
                " (case " + std::to_string(report.worst.case_index) + ", " + report.worst.group + ")";
}

void dump_operator_run(const ExperimentConfig& c, Outputs& out, RunOutput& run) {
  CounterRng rng(c.integer("seed"), "dump/points");
  const std::size_t m = c.size("rows"), d = c.size("input_dim");
  std::vector<double> v(m * d);
  for (double& x : v) x = rng.normal();
  const Tensor points = Tensor::matrix(m, d, std::move(v));
  const double eps = bandwidth_of(c).resolve(points);
  const Tensor k = gaussian_kernel(points, eps);
  const Tensor pi = target_density(points, DensityHead::linear(d));
  const TmdOperatorParts parts = build_tmd_operator(k, kde(k), pi, eps);
  auto p = out.open("points.csv");
  p << "index";
  for (std::size_t j = 0; j < d; ++j) p << ",x" << j;
  p << '\n';
  for (std::size_t i = 0; i < m; ++i) {
    p << i;
    for (std::size_t j = 0; j < d; ++j) p << ',' << fmt17(points.at(i, j));
    p << '\n';
  }
  auto op = out.open("operator.txt");
  write_operator(op, parts.op);
  run.summary = "L is " + std::to_string(m) + "x" + std::to_string(m) + ", epsilon " + short_number(eps);
}

}  // namespace

ClassifierExperiment classifier_experiment(const ExperimentConfig& c) {
  const std::uint64_t seed = c.integer("seed");
  CounterRng data_rng(seed, "classifier/data");
  CounterRng train_rng = data_rng.fork("train"), test_rng = data_rng.fork("test");
  Dataset train = make_classification_data(c.text("dataset"), c.size("n_train"), c.real("data_noise"), train_rng);
  Dataset test = make_classification_data(c.text("dataset"), c.size("n_test"), c.real("data_noise"), test_rng);

  ClassifierConfig mc;
  mc.input_dim = train.inputs.cols();
  mc.hidden = c.size("hidden");
  mc.classes = train.classes;
  mc.blocks = c.size("blocks");
  mc.with_tmd = c.flag("use_tmd");
  mc.latent_dim = c.size("latent_dim");
  mc.epsilon = bandwidth_of(c);
  mc.delta_t_init = c.real("delta_t_init");
  mc.freeze_delta_t = c.flag("freeze_delta_t");
  CounterRng model_rng(seed, "classifier/model");
  MlpClassifier model(mc, model_rng);

  TrainConfig tc = train_config(c);
  tc.m_infer = c.size("m_infer");
  MetricsHistory history = train_classifier(model, train, test, tc);
  for (double sigma : c.reals("test_noise")) {
    CounterRng noise_rng = data_rng.fork("noise=" + short_number(sigma));
    const Evaluation e = evaluate(model, with_input_noise(test, sigma, noise_rng), tc.use_tmd, tc.m_infer);
    history.push_back({tc.epochs, "test_noise_" + short_number(sigma), e.loss, "accuracy", e.accuracy});
  }
  Evaluation final_test = evaluate(model, test, tc.use_tmd, tc.m_infer);
  return ClassifierExperiment{std::move(train), std::move(test), std::move(model), std::move(history),
                              std::move(final_test)};
}

PointSetExperiment pointset_experiment(const ExperimentConfig& c) {
  const std::uint64_t seed = c.integer("seed");
  CounterRng data_rng(seed, "pointset/data");
  CounterRng train_rng = data_rng.fork("train"), test_rng = data_rng.fork("test");
  auto train = make_shape_clouds(c.size("n_train"), c.size("points"), c.real("jitter"), train_rng);
  auto test = make_shape_clouds(c.size("n_test"), c.size("points"), c.real("jitter"), test_rng);

  PointSetConfig pc;
  pc.hidden = c.size("hidden");
  pc.blocks = c.size("blocks");
  pc.with_tmd = c.flag("use_tmd");
  pc.latent_dim = c.size("latent_dim");
  pc.epsilon = bandwidth_of(c);
  pc.delta_t_init = c.real("delta_t_init");
  pc.freeze_delta_t = c.flag("freeze_delta_t");
  CounterRng model_rng(seed, "pointset/model");
  PointSetNet net(pc, model_rng);

  const TrainConfig tc = train_config(c);
  MetricsHistory history = train_pointset(net, train, test, tc);
  Evaluation final_test = evaluate(net, test, tc.use_tmd);
  return PointSetExperiment{std::move(train), std::move(test), std::move(net), std::move(history),
                            std::move(final_test)};
}

SegmentationExperiment segmentation_experiment(const ExperimentConfig& c) {
  const std::uint64_t seed = c.integer("seed");
  SegmentationSpec spec;
  spec.size = c.size("size");
  spec.noise = c.real("noise");
  CounterRng data_rng(seed, "segment/data");
  std::vector<SegmentationSample> samples;
  for (std::size_t i = 0; i < c.size("images"); ++i) samples.push_back(make_segmentation_sample(spec, data_rng));

  LevelSetState coeffs;
  coeffs.mu = c.real("mu");
  coeffs.nu = c.real("nu");
  coeffs.lambda1 = c.real("lambda1");
  coeffs.lambda2 = c.real("lambda2");
  coeffs.eta = c.real("eta");
  coeffs.step = c.real("contour_step");
  CounterRng layer_rng(seed, "segment/layer");
  TmdLayerParams layer = levelset_layer(c.real("delta_t"), c.size("latent_dim"), layer_rng);
  layer.kernel.epsilon = bandwidth_of(c);

  SegmentationRun initial = run_segmentation(samples, coeffs, 0, nullptr);
  SegmentationRun result = run_segmentation(samples, coeffs, c.size("steps"), c.flag("use_tmd") ? &layer : nullptr);
  return SegmentationExperiment{std::move(samples), std::move(initial), std::move(result), std::move(layer)};
}

RunOutput run_experiment(const ExperimentConfig& config, const fs::path& dir) {
  RunOutput run;
  Outputs out(dir, run);
  auto effective = out.open("config.txt");
  effective << config.canonical();
  effective.close();
  switch (config.kind()) {
    case ExperimentKind::validate_generator: validate_generator(config, out, run); break;
    case ExperimentKind::train_classifier: train_classifier_run(config, out, run); break;
    case ExperimentKind::train_pointset: train_pointset_run(config, out, run); break;
    case ExperimentKind::segment: segment_run(config, out, run); break;
    case ExperimentKind::gradcheck: gradcheck_run(config, out, run); break;
    case ExperimentKind::dump_operator: dump_operator_run(config, out, run); break;
  }
  return run;
}

}  // namespace tmd
