#include "tmd/levelset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "tmd/errors.hpp"

namespace tmd {

namespace {

constexpr double kGradFloor = 1e-8;
constexpr double kRegionFloor = 1e-10;

}  // namespace

void LevelSetState::validate() const {
  if (!phi.is_matrix() || phi.shape() != image.shape()) {
    throw ShapeMismatch("phi " + shape_string(phi.shape()) + " vs image " + shape_string(image.shape()));
  }
  if (!(eta > 0.0)) throw ConfigError("eta", "must be positive");
  if (!(step > 0.0)) throw ConfigError("step", "must be positive");
}

double smoothed_heaviside(double z, double eta) { return 0.5 * (1.0 + (2.0 / std::numbers::pi) * std::atan(z / eta)); }

double smoothed_delta(double z, double eta) { return eta / (std::numbers::pi * (eta * eta + z * z)); }

Tensor curvature(const Tensor& phi) {
  const std::size_t h = phi.rows(), w = phi.cols();
  auto at = [&](std::ptrdiff_t i, std::ptrdiff_t j) {
    i = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(h) - 1);
    j = std::clamp<std::ptrdiff_t>(j, 0, static_cast<std::ptrdiff_t>(w) - 1);
    return phi.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  };
  std::vector<double> k(h * w);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const auto i = static_cast<std::ptrdiff_t>(r), j = static_cast<std::ptrdiff_t>(c);
      const double px = 0.5 * (at(i, j + 1) - at(i, j - 1));
      const double py = 0.5 * (at(i + 1, j) - at(i - 1, j));
      const double pxx = at(i, j + 1) - 2.0 * at(i, j) + at(i, j - 1);
      const double pyy = at(i + 1, j) - 2.0 * at(i, j) + at(i - 1, j);
      const double pxy = 0.25 * (at(i + 1, j + 1) - at(i + 1, j - 1) - at(i - 1, j + 1) + at(i - 1, j - 1));
      const double norm = std::max(std::sqrt(px * px + py * py), kGradFloor);
      k[r * w + c] = (pxx * py * py - 2.0 * px * py * pxy + pyy * px * px) / (norm * norm * norm);
    }
  }
  return Tensor::matrix(h, w, std::move(k));
}

RegionMeans region_means(const LevelSetState& state) {
  double in_w = 0.0, in_s = 0.0, out_w = 0.0, out_s = 0.0;
  for (std::size_t i = 0; i < state.phi.numel(); ++i) {
    const double hv = smoothed_heaviside(state.phi[i], state.eta);
    in_w += hv;
    in_s += hv * state.image[i];
    out_w += 1.0 - hv;
    out_s += (1.0 - hv) * state.image[i];
  }
  auto pick = [](double weight, double total, const std::optional<double>& previous, const char* name) {
    if (weight > kRegionFloor) return total / weight;
    if (previous) return *previous;
    throw DegenerateRegion(std::string(name) + " region is empty and has no previous mean");
  };
  return RegionMeans{pick(in_w, in_s, state.c1, "foreground"), pick(out_w, out_s, state.c2, "background")};
}

Tensor chanvese_velocity(const LevelSetState& state, const RegionMeans& means) {
  const Tensor kappa = state.mu != 0.0 ? curvature(state.phi) : Tensor::zeros(state.phi.shape());
  std::vector<double> v(state.phi.numel());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double a = state.image[i] - means.c1;
    const double b = state.image[i] - means.c2;
    const double force = state.mu * kappa[i] - state.nu - state.lambda1 * a * a + state.lambda2 * b * b;
    v[i] = smoothed_delta(state.phi[i], state.eta) * force;
  }
  return Tensor(state.phi.shape(), std::move(v));
}

LevelSetState chanvese_step(const LevelSetState& state) {
  state.validate();
  const RegionMeans means = region_means(state);
  const Tensor v = chanvese_velocity(state, means);
  std::vector<double> next = state.phi.to_vector();
  for (std::size_t i = 0; i < next.size(); ++i) next[i] += state.step * v[i];
  LevelSetState out = state;
  out.phi = Tensor(state.phi.shape(), std::move(next));
  out.c1 = means.c1;
  out.c2 = means.c2;
  return out;
}

Tensor avg_pool(const Tensor& grid, std::size_t out) {
  const std::size_t h = grid.rows(), w = grid.cols();
  if (out == 0 || h % out != 0 || w % out != 0) {
    throw ShapeMismatch("cannot pool " + shape_string(grid.shape()) + " to " + std::to_string(out));
  }
  const std::size_t bh = h / out, bw = w / out;
  std::vector<double> p(out * out, 0.0);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) p[(r / bh) * out + c / bw] += grid.at(r, c);
  }
  const double inv = 1.0 / static_cast<double>(bh * bw);
  for (double& v : p) v *= inv;
  return Tensor::matrix(out, out, std::move(p));
}

std::vector<LevelSetState> chanvese_tmd_step(const std::vector<LevelSetState>& states, const TmdLayerParams& params) {
  if (states.empty()) throw ShapeMismatch("chanvese_tmd_step needs at least one state");
  const Tensor::Shape grid = states.front().phi.shape();
  const std::size_t m = states.size();
  const std::size_t cells = states.front().phi.numel();
  std::vector<LevelSetState> next;
  next.reserve(m);
  std::vector<double> features, fields;
  features.reserve(m * kPooledSide * kPooledSide);
  fields.reserve(m * cells);
  for (const auto& s : states) {
    if (s.phi.shape() != grid) throw ShapeMismatch("all level-set grids must share one shape");
    const Tensor pooled = avg_pool(s.phi, kPooledSide);
    features.insert(features.end(), pooled.data().begin(), pooled.data().end());
    next.push_back(chanvese_step(s));
    fields.insert(fields.end(), next.back().phi.data().begin(), next.back().phi.data().end());
  }
  const Tensor stepped = Tensor::matrix(m, cells, std::move(fields));
  LayerFunction f = [&stepped](Graph& g, NodeId) { return g.constant(stepped); };
  const Tensor out = tmd_forward(f, Tensor::matrix(m, kPooledSide * kPooledSide, std::move(features)), params);
  for (std::size_t i = 0; i < m; ++i) {
    const auto row = out.data().subspan(i * cells, cells);
    next[i].phi = Tensor(grid, std::vector<double>(row.begin(), row.end()));
  }
  return next;
}

TmdLayerParams levelset_layer(double delta_t, std::size_t latent_dim, CounterRng& rng) {
  TmdLayerParams p = TmdLayerParams::init(kPooledSide * kPooledSide, latent_dim, rng);
  p.delta_t = delta_t;
  return p;
}

Tensor initial_phi(std::size_t rows, std::size_t cols) {
  const double cy = 0.5 * static_cast<double>(rows) - 0.5, cx = 0.5 * static_cast<double>(cols) - 0.5;
  const double radius = 0.25 * static_cast<double>(std::min(rows, cols));
  std::vector<double> phi(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double d = std::hypot(static_cast<double>(r) - cy, static_cast<double>(c) - cx);
      phi[r * cols + c] = radius - d;
    }
  }
  return Tensor::matrix(rows, cols, std::move(phi));
}

Tensor foreground_mask(const Tensor& phi) {
  std::vector<double> m(phi.numel());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = phi[i] > 0.0 ? 1.0 : 0.0;
  return Tensor(phi.shape(), std::move(m));
}

double iou(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw ShapeMismatch("iou of " + shape_string(a.shape()) + " and " + shape_string(b.shape()));
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const bool x = a[i] > 0.5, y = b[i] > 0.5;
    inter += x && y;
    uni += x || y;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

void write_pgm(std::ostream& out, const Tensor& mask) {
  out << "P5\n" << mask.cols() << ' ' << mask.rows() << "\n255\n";
  for (std::size_t i = 0; i < mask.numel(); ++i) out.put(static_cast<char>(mask[i] > 0.5 ? 255 : 0));
}

}  // namespace tmd
