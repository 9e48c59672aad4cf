#include "tmd/training.hpp"

#include <cmath>
#include <numeric>
#include <ostream>

#include "tmd/errors.hpp"
#include "tmd/format.hpp"
#include "tmd/nn.hpp"

namespace tmd {

void write_metrics_csv(std::ostream& out, const MetricsHistory& history) {
  out << "epoch,split,loss,metric_name,metric_value\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << r.split << ',' << fmt17(r.loss) << ',' << r.metric_name << ',' << fmt17(r.metric_value)
        << '\n';
  }
}

namespace {

double brier_value(const Tensor& logits, const std::vector<int>& labels) {
  Graph g;
  return g.value(brier_loss(g, g.constant(logits), labels)).item();
}

std::vector<std::size_t> shuffled(std::size_t n, CounterRng rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  return order;
}

template <class Step>
void run_epochs(std::size_t n, const TrainConfig& config, Step&& step, const std::function<void(std::size_t)>& record) {
  if (config.batch_size == 0) throw ConfigError("batch_size", "must be at least 1");
  record(0);
  CounterRng root(config.seed, "train/shuffle");
  std::size_t update = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto order = shuffled(n, root.fork("epoch=" + std::to_string(epoch)));
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                          order.begin() + static_cast<std::ptrdiff_t>(std::min(n, start + config.batch_size)));
      try {
        step(rows);
      } catch (const NonFiniteResult& e) {
        throw NonFiniteLoss(update, e.what());
      }
      ++update;
    }
    record(epoch);
  }
}

std::vector<int> pick(const std::vector<int>& v, const std::vector<std::size_t>& rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(v[r]);
  return out;
}

}  // namespace

Evaluation evaluate(const MlpClassifier& model, const Dataset& data, bool use_tmd, std::size_t m_infer) {
  const Tensor z = model.logits(data.inputs, use_tmd, m_infer);
  auto predicted = argmax_rows(z);
  const double acc = accuracy(predicted, data.labels);
  return Evaluation{brier_value(z, data.labels), acc, std::move(predicted)};
}

Evaluation evaluate(const PointSetNet& net, const std::vector<PointCloud>& clouds, bool use_tmd) {
  std::vector<double> z;
  std::vector<int> labels;
  for (const auto& c : clouds) {
    const Tensor row = net.logits(c.points, use_tmd);
    z.insert(z.end(), row.data().begin(), row.data().end());
    labels.push_back(c.label);
  }
  const Tensor logits = Tensor::matrix(clouds.size(), net.config().classes, std::move(z));
  auto predicted = argmax_rows(logits);
  const double acc = accuracy(predicted, labels);
  return Evaluation{brier_value(logits, labels), acc, std::move(predicted)};
}

MetricsHistory train_classifier(MlpClassifier& model, const Dataset& train, const Dataset& test,
                                const TrainConfig& config) {
  MetricsHistory history;
  SgdMomentum opt(config.learning_rate, config.momentum);
  const auto frozen = model.frozen();
  auto record = [&](std::size_t epoch) {
    for (const auto& [split, data] : {std::pair{"train", &train}, std::pair{"test", &test}}) {
      const Evaluation e = evaluate(model, *data, config.use_tmd, config.m_infer);
      history.push_back({epoch, split, e.loss, "accuracy", e.accuracy});
    }
  };
  auto step = [&](const std::vector<std::size_t>& rows) {
    Graph g;
    const BoundParams bound = bind_params(g, model.params(), frozen);
    const NodeId x = g.constant(take_rows(train.inputs, rows));
    const NodeId loss = brier_loss(g, model.forward(g, bound, x, config.use_tmd), pick(train.labels, rows));
    opt.step(model.params(), bound, backward(g, loss));
  };
  run_epochs(train.size(), config, step, record);
  return history;
}

MetricsHistory train_pointset(PointSetNet& net, const std::vector<PointCloud>& train,
                              const std::vector<PointCloud>& test, const TrainConfig& config) {
  MetricsHistory history;
  SgdMomentum opt(config.learning_rate, config.momentum);
  const auto frozen = net.frozen();
  auto record = [&](std::size_t epoch) {
    for (const auto& [split, data] : {std::pair{"train", &train}, std::pair{"test", &test}}) {
      const Evaluation e = evaluate(net, *data, config.use_tmd);
      history.push_back({epoch, split, e.loss, "accuracy", e.accuracy});
    }
  };
  auto step = [&](const std::vector<std::size_t>& rows) {
    std::vector<Tensor> clouds;
    std::vector<int> labels;
    for (auto r : rows) {
      clouds.push_back(train[r].points);
      labels.push_back(train[r].label);
    }
    Graph g;
    const BoundParams bound = bind_params(g, net.params(), frozen);
    const NodeId loss = brier_loss(g, net.forward_batch(g, bound, clouds, config.use_tmd), labels);
    opt.step(net.params(), bound, backward(g, loss));
  };
  run_epochs(train.size(), config, step, record);
  return history;
}

SegmentationRun run_segmentation(const std::vector<SegmentationSample>& samples, const LevelSetState& coefficients,
                                 std::size_t steps, const TmdLayerParams* tmd) {
  SegmentationRun run;
  for (const auto& s : samples) {
    LevelSetState st = coefficients;
    st.image = s.image;
    st.phi = initial_phi(s.image.rows(), s.image.cols());
    st.c1.reset();
    st.c2.reset();
    st.validate();
    run.states.push_back(std::move(st));
  }
  for (std::size_t k = 0; k < steps; ++k) {
    if (tmd) {
      run.states = chanvese_tmd_step(run.states, *tmd);
    } else {
      for (auto& st : run.states) st = chanvese_step(st);
    }
  }
  double total = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    run.iou.push_back(iou(foreground_mask(run.states[i].phi), samples[i].mask));
    total += run.iou.back();
  }
  run.mean_iou = samples.empty() ? 0.0 : total / static_cast<double>(samples.size());
  return run;
}

}  // namespace tmd
