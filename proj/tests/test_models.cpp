#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "support.hpp"
#include "tmd/classifier.hpp"
#include "tmd/errors.hpp"
#include "tmd/levelset.hpp"
#include "tmd/nn.hpp"
#include "tmd/pointset.hpp"
#include "tmd/training.hpp"

using namespace tmd;
using tmd::testing::random_tensor;

namespace {

MlpClassifier small_classifier(std::uint64_t seed, double delta_t) {
  ClassifierConfig c;
  c.hidden = 8;
  c.latent_dim = 4;
  c.delta_t_init = delta_t;
  CounterRng rng(seed, "model");
  return MlpClassifier(c, rng);
}

PointSetNet small_pointset(std::uint64_t seed, double delta_t) {
  PointSetConfig c;
  c.hidden = 8;
  c.latent_dim = 4;
  c.delta_t_init = delta_t;
  CounterRng rng(seed, "model");
  return PointSetNet(c, rng);
}

Tensor circle_sdf(std::size_t n, double radius) {
  std::vector<double> phi(n * n);
  const double c = 0.5 * static_cast<double>(n) - 0.5;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      phi[i * n + j] = radius - std::hypot(static_cast<double>(i) - c, static_cast<double>(j) - c);
    }
  }
  return Tensor::matrix(n, n, std::move(phi));
}

double foreground_area(const LevelSetState& s) {
  double a = 0.0;
  for (std::size_t i = 0; i < s.phi.numel(); ++i) a += smoothed_heaviside(s.phi[i], s.eta);
  return a;
}

}  // namespace

TEST_CASE("classifier emits one logit row per input row") {
  const MlpClassifier model = small_classifier(1, 0.3);
  CounterRng rng(1, "x");
  const Tensor x = random_tensor(rng, {7, 2});
  CHECK(model.logits(x, true, 7).shape() == Tensor::Shape{7, 2});
  CHECK(model.logits(x, false, 3).shape() == Tensor::Shape{7, 2});
}

TEST_CASE("classifier with delta_t = 0 equals the plain network bitwise") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const MlpClassifier model = small_classifier(seed, 0.0);
    CounterRng rng(seed, "x");
    const Tensor x = random_tensor(rng, {12, 2});
    CHECK(bitwise_equal(model.logits(x, true, 12), model.logits(x, false, 12)));
  }
}

TEST_CASE("classifier with m_infer = 1 equals the plain network for any delta_t") {
  const MlpClassifier model = small_classifier(2, 0.9);
  CounterRng rng(2, "x");
  const Tensor x = random_tensor(rng, {9, 2});
  CHECK(bitwise_equal(model.logits(x, true, 1), model.logits(x, false, 9)));
  CHECK_FALSE(bitwise_equal(model.logits(x, true, 9), model.logits(x, false, 9)));
}

TEST_CASE("classifier argument errors") {
  ClassifierConfig c;
  c.with_tmd = false;
  CounterRng rng(0, "model");
  const MlpClassifier plain(c, rng);
  const Tensor x = Tensor::zeros({3, 2});
  CHECK_THROWS_AS(plain.logits(x, true, 3), ConfigError);
  CHECK_THROWS_AS(plain.logits(x, false, 0), ConfigError);
  c.classes = 1;
  CHECK_THROWS_AS(MlpClassifier(c, rng), ConfigError);
}

TEST_CASE("frozen delta_t is excluded from the update") {
  ClassifierConfig c;
  c.hidden = 8;
  c.latent_dim = 4;
  c.delta_t_init = 0.25;
  c.freeze_delta_t = true;
  CounterRng rng(4, "model");
  MlpClassifier model(c, rng);
  CounterRng data_rng(4, "data");
  const Dataset d = two_moons(40, 0.1, data_rng);
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 10;
  tc.m_infer = 10;
  train_classifier(model, d, d, tc);
  CHECK(model.params().get("block0.tmd.delta_t").item() == 0.25);
}

TEST_CASE("TMD with delta_t = 0 and plain arms agree bitwise through the first update") {
  MlpClassifier with_tmd = small_classifier(3, 0.0);
  MlpClassifier plain = with_tmd;
  CounterRng rng(3, "data");
  const Dataset d = two_moons(32, 0.1, rng);
  SgdMomentum opt_a(0.5, 0.9), opt_b(0.5, 0.9);
  double losses[2];
  for (int arm = 0; arm < 2; ++arm) {
    MlpClassifier& m = arm == 0 ? with_tmd : plain;
    Graph g;
    const BoundParams bound = bind_params(g, m.params());
    const NodeId loss = brier_loss(g, m.forward(g, bound, g.constant(d.inputs), arm == 0), d.labels);
    losses[arm] = g.value(loss).item();
    (arm == 0 ? opt_a : opt_b).step(m.params(), bound, backward(g, loss));
  }
  CHECK(losses[0] == losses[1]);
  for (const auto& [name, value] : plain.params()) {
    if (name.find(".tmd.") != std::string::npos) continue;
    CHECK_MESSAGE(bitwise_equal(value, with_tmd.params().get(name)), name);
  }
}

TEST_CASE("point-set logits are invariant to point order") {
  const PointSetNet net = small_pointset(5, 0.4);
  CounterRng rng(5, "cloud");
  for (int trial = 0; trial < 5; ++trial) {
    const Tensor cloud = random_tensor(rng, {20, 2});
    std::vector<std::size_t> order(20);
    for (std::size_t i = 0; i < 20; ++i) order[i] = i;
    for (std::size_t i = 20; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    const Tensor a = net.logits(cloud, true);
    const Tensor b = net.logits(take_rows(cloud, order), true);
    CHECK(max_abs_diff(a, b) <= 1e-10);
  }
}

TEST_CASE("single-point cloud reduces the point-set net to its feed-forward path") {
  const PointSetNet net = small_pointset(6, 0.8);
  const Tensor cloud = Tensor::matrix(1, 2, {0.3, -0.7});
  CHECK(bitwise_equal(net.logits(cloud, true), net.logits(cloud, false)));
}

TEST_CASE("batched point-set forward stacks the per-cloud logits") {
  const PointSetNet net = small_pointset(7, 0.2);
  CounterRng rng(7, "cloud");
  const std::vector<Tensor> clouds{random_tensor(rng, {5, 2}), random_tensor(rng, {8, 2}), random_tensor(rng, {3, 2})};
  Graph g;
  const BoundParams bound = bind_params(g, net.params());
  const Tensor stacked = g.value(net.forward_batch(g, bound, clouds, true));
  REQUIRE(stacked.shape() == Tensor::Shape{3, 3});
  for (std::size_t i = 0; i < 3; ++i) {
    const Tensor single = net.logits(clouds[i], true);
    for (std::size_t j = 0; j < 3; ++j) CHECK(stacked.at(i, j) == single[j]);
  }
}

TEST_CASE("smoothed Heaviside and its derivative") {
  CHECK(smoothed_heaviside(0.0, 1.0) == 0.5);
  CHECK(smoothed_heaviside(1.0, 1.0) == doctest::Approx(0.75));
  CHECK(smoothed_delta(0.0, 2.0) == doctest::Approx(1.0 / (2.0 * std::numbers::pi)));
  for (double z : {-3.0, -0.4, 0.0, 0.9, 5.0}) {
    const double h = 1e-5;
    const double fd = (smoothed_heaviside(z + h, 0.7) - smoothed_heaviside(z - h, 0.7)) / (2 * h);
    CHECK(smoothed_delta(z, 0.7) == doctest::Approx(fd).epsilon(1e-8));
  }
}

TEST_CASE("curvature of a circle's signed distance is minus one over the radius") {
  const Tensor phi = circle_sdf(64, 20.0);
  const Tensor k = curvature(phi);
  // pixels at distance ~10 and ~25 from the center, away from the borders
  CHECK(k.at(31, 41) == doctest::Approx(-1.0 / 9.5).epsilon(0.02));
  CHECK(k.at(31, 56) == doctest::Approx(-1.0 / 24.5).epsilon(0.02));
}

TEST_CASE("curvature of a plane is zero") {
  std::vector<double> v(100);
  for (std::size_t i = 0; i < 10; ++i) {
    for (std::size_t j = 0; j < 10; ++j) v[i * 10 + j] = 0.3 * static_cast<double>(i) - 0.2 * static_cast<double>(j);
  }
  const Tensor k = curvature(Tensor::matrix(10, 10, v));
  for (std::size_t i = 1; i < 9; ++i) {
    for (std::size_t j = 1; j < 9; ++j) CHECK(std::abs(k.at(i, j)) < 1e-12);
  }
}

TEST_CASE("chanvese_step with all coefficients zero is the identity") {
  CounterRng rng(9, "cv");
  LevelSetState s;
  s.phi = random_tensor(rng, {12, 12}, -3.0, 3.0);
  s.image = random_tensor(rng, {12, 12}, 0.0, 1.0);
  s.mu = s.nu = s.lambda1 = s.lambda2 = 0.0;
  CHECK(bitwise_equal(chanvese_step(s).phi, s.phi));
}

TEST_CASE("uniform image: region means coincide and data terms cancel") {
  CounterRng rng(10, "cv");
  LevelSetState s;
  s.phi = random_tensor(rng, {10, 10}, -3.0, 3.0);
  s.image = Tensor::filled({10, 10}, 0.4);
  s.mu = 0.0;
  const RegionMeans m = region_means(s);
  CHECK(m.c1 == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(m.c2 == doctest::Approx(0.4).epsilon(1e-14));
  const Tensor v = chanvese_velocity(s, RegionMeans{0.4, 0.4});
  for (double x : v.data()) CHECK(x == 0.0);
}

TEST_CASE("two-level image with the contour on the edge: data force reinforces the split") {
  std::vector<double> img(16 * 16), phi(16 * 16);
  for (std::size_t i = 0; i < 16; ++i) {
    for (std::size_t j = 0; j < 16; ++j) {
      img[i * 16 + j] = j < 8 ? 0.8 : 0.2;
      phi[i * 16 + j] = 7.5 - static_cast<double>(j);
    }
  }
  LevelSetState s;
  s.phi = Tensor::matrix(16, 16, phi);
  s.image = Tensor::matrix(16, 16, img);
  s.mu = 0.0;
  const Tensor v = chanvese_velocity(s, RegionMeans{0.8, 0.2});
  for (std::size_t i = 0; i < 16; ++i) {
    for (std::size_t j = 0; j < 16; ++j) CHECK((j < 8 ? v.at(i, j) > 0.0 : v.at(i, j) < 0.0));
  }
  // a straight contour has no curvature, so mu changes nothing in the interior rows
  s.mu = 0.5;
  const Tensor vm = chanvese_velocity(s, RegionMeans{0.8, 0.2});
  CHECK(max_abs_diff(vm, v) < 1e-12);
}

TEST_CASE("pure curvature flow shrinks a circle") {
  LevelSetState s;
  s.phi = circle_sdf(32, 8.0);
  s.image = Tensor::zeros({32, 32});
  s.mu = 1.0;
  s.nu = s.lambda1 = s.lambda2 = 0.0;
  s.step = 2.0;
  double area = foreground_area(s);
  for (int k = 0; k < 10; ++k) {
    s = chanvese_step(s);
    const double next = foreground_area(s);
    CHECK(next < area);
    area = next;
  }
}

TEST_CASE("degenerate region keeps the previous mean or throws") {
  LevelSetState s;
  s.phi = Tensor::filled({8, 8}, -1e15);
  s.image = Tensor::filled({8, 8}, 0.3);
  CHECK_THROWS_AS(region_means(s), DegenerateRegion);
  s.c1 = 0.9;
  const RegionMeans m = region_means(s);
  CHECK(m.c1 == 0.9);
  CHECK(m.c2 == doctest::Approx(0.3));
}

TEST_CASE("level-set state validation") {
  LevelSetState s;
  s.phi = Tensor::zeros({4, 4});
  s.image = Tensor::zeros({4, 5});
  CHECK_THROWS_AS(chanvese_step(s), ShapeMismatch);
  s.image = Tensor::zeros({4, 4});
  s.eta = 0.0;
  CHECK_THROWS_AS(chanvese_step(s), ConfigError);
  s.eta = 1.0;
  s.step = -1.0;
  CHECK_THROWS_AS(chanvese_step(s), ConfigError);
}

TEST_CASE("average pooling") {
  std::vector<double> v(16);
  for (std::size_t i = 0; i < 16; ++i) v[i] = static_cast<double>(i);
  const Tensor p = avg_pool(Tensor::matrix(4, 4, v), 2);
  CHECK(p.to_vector() == std::vector<double>{2.5, 4.5, 10.5, 12.5});
  CHECK_THROWS_AS(avg_pool(Tensor::matrix(4, 4, v), 3), ShapeMismatch);
}

TEST_CASE("TMD level-set step reduces to the plain step for m = 1 and delta_t = 0") {
  CounterRng rng(12, "seg");
  SegmentationSpec spec;
  std::vector<LevelSetState> states;
  for (int i = 0; i < 3; ++i) {
    LevelSetState s;
    const SegmentationSample sample = make_segmentation_sample(spec, rng);
    s.image = sample.image;
    s.phi = initial_phi(32, 32);
    states.push_back(chanvese_step(s));  // distinct phi fields
  }
  CounterRng layer_rng(12, "layer");
  TmdLayerParams layer = levelset_layer(0.7, 16, layer_rng);
  const auto single = chanvese_tmd_step({states[0]}, layer);
  CHECK(bitwise_equal(single[0].phi, chanvese_step(states[0]).phi));
  layer.delta_t = 0.0;
  const auto batch = chanvese_tmd_step(states, layer);
  for (std::size_t i = 0; i < 3; ++i) CHECK(bitwise_equal(batch[i].phi, chanvese_step(states[i]).phi));
  layer.delta_t = 0.7;
  CHECK_FALSE(bitwise_equal(chanvese_tmd_step(states, layer)[0].phi, batch[0].phi));
}

TEST_CASE("IoU properties") {
  const Tensor a = Tensor::matrix(2, 3, {1, 1, 0, 0, 1, 0});
  const Tensor b = Tensor::matrix(2, 3, {0, 1, 1, 0, 1, 0});
  const Tensor c = Tensor::matrix(2, 3, {0, 0, 1, 1, 0, 1});
  CHECK(iou(a, b) == 0.5);
  CHECK(iou(a, b) == iou(b, a));
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, c) == 0.0);
  CHECK(iou(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})) == 1.0);
  CHECK_THROWS_AS(iou(a, Tensor::zeros({3, 2})), ShapeMismatch);
}

TEST_CASE("PGM writer emits a P5 header and one byte per pixel") {
  std::ostringstream out;
  write_pgm(out, Tensor::matrix(2, 3, {1, 0, 0, 0, 1, 1}));
  const std::string s = out.str();
  CHECK(s.substr(0, 11) == "P5\n3 2\n255\n");
  REQUIRE(s.size() == 17);
  CHECK(static_cast<unsigned char>(s[11]) == 255);
  CHECK(static_cast<unsigned char>(s[12]) == 0);
  CHECK(static_cast<unsigned char>(s[16]) == 255);
}

TEST_CASE("segmentation with zero steps thresholds the initial contour") {
  CounterRng rng(13, "seg");
  const SegmentationSample s = make_segmentation_sample(SegmentationSpec{}, rng);
  const SegmentationRun run = run_segmentation({s}, LevelSetState{}, 0, nullptr);
  CHECK(bitwise_equal(foreground_mask(run.states[0].phi), foreground_mask(initial_phi(32, 32))));
}

TEST_CASE("noiseless segmentation recovers the shape") {
  CounterRng rng(14, "seg");
  SegmentationSpec spec;
  spec.noise = 0.0;
  LevelSetState coeffs;
  coeffs.mu = 0.1;
  coeffs.step = 10.0;
  const SegmentationRun run = run_segmentation({make_segmentation_sample(spec, rng)}, coeffs, 80, nullptr);
  CHECK(run.mean_iou > 0.9);
}

TEST_CASE("zero epochs record only the initial metrics") {
  MlpClassifier model = small_classifier(15, 0.0);
  const ParamStore before = model.params();
  CounterRng rng(15, "data");
  const Dataset d = two_moons(20, 0.1, rng);
  TrainConfig tc;
  tc.epochs = 0;
  tc.m_infer = 10;
  const MetricsHistory h = train_classifier(model, d, d, tc);
  REQUIRE(h.size() == 2);
  CHECK(h[0].epoch == 0);
  CHECK(h[0].split == "train");
  CHECK(h[1].split == "test");
  CHECK(model.params() == before);
}

TEST_CASE("training is deterministic and lowers the loss") {
  CounterRng rng(16, "data");
  const Dataset train = two_moons(120, 0.1, rng);
  const Dataset test = two_moons(60, 0.1, rng);
  TrainConfig tc;
  tc.epochs = 5;
  tc.seed = 16;
  tc.m_infer = 30;
  MlpClassifier a = small_classifier(16, 0.0), b = small_classifier(16, 0.0);
  const MetricsHistory ha = train_classifier(a, train, test, tc);
  const MetricsHistory hb = train_classifier(b, train, test, tc);
  std::ostringstream ca, cb;
  write_metrics_csv(ca, ha);
  write_metrics_csv(cb, hb);
  CHECK(ca.str() == cb.str());
  CHECK(ha.back().loss < ha[1].loss);
  CHECK(ca.str().rfind("epoch,split,loss,metric_name,metric_value\n0,train,", 0) == 0);
}

TEST_CASE("save/load round-trip reproduces evaluation exactly") {
  CounterRng rng(17, "data");
  const Dataset d = two_moons(60, 0.1, rng);
  MlpClassifier model = small_classifier(17, 0.0);
  TrainConfig tc;
  tc.epochs = 2;
  tc.m_infer = 20;
  train_classifier(model, d, d, tc);
  std::stringstream buf;
  save_params(buf, model.params());
  MlpClassifier restored = small_classifier(99, 0.0);
  for (const auto& [name, value] : load_params(buf)) restored.params().set(name, value);
  const Evaluation e1 = evaluate(model, d, true, 20);
  const Evaluation e2 = evaluate(restored, d, true, 20);
  CHECK(e1.loss == e2.loss);
  CHECK(e1.predicted == e2.predicted);
}

TEST_CASE("a diverging run reports the offending update") {
  MlpClassifier model = small_classifier(18, 0.0);
  CounterRng rng(18, "data");
  const Dataset d = two_moons(40, 0.1, rng);
  TrainConfig tc;
  tc.epochs = 3;
  tc.batch_size = 10;
  tc.m_infer = 10;
  tc.learning_rate = 1e300;
  try {
    train_classifier(model, d, d, tc);
    FAIL("expected NonFiniteLoss");
  } catch (const NonFiniteLoss& e) {
    CHECK(e.step() < 12);
    CHECK(e.kind() == "NonFiniteLoss");
  }
}

TEST_CASE("point-set training on a tiny set runs and records every epoch") {
  CounterRng rng(19, "data");
  const auto clouds = make_shape_clouds(6, 16, 0.02, rng);
  PointSetNet net = small_pointset(19, 0.0);
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 3;
  tc.learning_rate = 0.1;
  const MetricsHistory h = train_pointset(net, clouds, clouds, tc);
  CHECK(h.size() == 6);
  CHECK(h.back().epoch == 2);
}

TEST_CASE("plain and TMD models from one seed share every common weight") {
  ClassifierConfig c;
  CounterRng rng(20, "model");
  const MlpClassifier with_tmd(c, rng);
  c.with_tmd = false;
  const MlpClassifier plain(c, rng);
  CHECK(plain.params().size() < with_tmd.params().size());
  for (const auto& [name, value] : plain.params()) CHECK(bitwise_equal(value, with_tmd.params().get(name)));
}
