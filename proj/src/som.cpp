#include "ghsom/som.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "ghsom/adaptive.hpp"
#include "ghsom/error.hpp"
#include "ghsom/rng.hpp"

namespace ghsom {

double distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    fail(ErrorCode::invalid_argument, "dimension mismatch: " + std::to_string(a.size()) + " vs " +
                                          std::to_string(b.size()));
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    sum += diff * diff;
  }
  return std::sqrt(sum);
}

double grid_distance(GridPos a, GridPos b) noexcept {
  const double dr = a.row - b.row;
  const double dc = a.col - b.col;
  return std::sqrt(dr * dr + dc * dc);
}

GridPos find_bmu(const MapGrid& map, std::span<const double> x) {
  if (map.dim() != x.size())
    fail(ErrorCode::invalid_argument, "sample dimension " + std::to_string(x.size()) +
                                          " does not match map dimension " +
                                          std::to_string(map.dim()));
  double best = std::numeric_limits<double>::infinity();
  const Unit* winner = nullptr;
  // Squared distances: same argmin, and the strict < keeps the row-major
  // first unit on ties.
  for (const Unit& u : map.units) {
    if (!u.active) continue;
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double diff = x[i] - u.weight[i];
      sum += diff * diff;
    }
    if (sum < best || winner == nullptr) {
      best = sum;
      winner = &u;
    }
  }
  if (winner == nullptr) fail(ErrorCode::degenerate, "map has no active unit");
  return {winner->row, winner->col};
}

namespace {

double interpolate(double from, double to, std::size_t t, std::size_t total) noexcept {
  if (total <= 1) return from;
  const double frac = static_cast<double>(t) / static_cast<double>(total - 1);
  return from + (to - from) * frac;
}

}  // namespace

double learning_rate(std::size_t t, const Schedules& s, std::size_t total_iters) noexcept {
  return interpolate(s.lr_start, s.lr_end, t, total_iters);
}

double radius(std::size_t t, const Schedules& s, std::size_t total_iters) noexcept {
  return interpolate(s.radius_start, s.radius_end, t, total_iters);
}

double neighborhood_coefficient(double grid_dist, std::size_t t, const Schedules& s,
                                std::size_t total_iters) noexcept {
  const double lr = learning_rate(t, s, total_iters);
  const double sigma = radius(t, s, total_iters);
  if (grid_dist == 0.0) return lr;
  return lr * std::exp(-(grid_dist * grid_dist) / (2.0 * sigma * sigma));
}

TrainStatus train_map(MapGrid& map, const FeatureMatrix& data, std::span<const SampleId> samples,
                      const Schedules& schedules, std::uint64_t seed,
                      const AdaptiveParams& trackers) {
  if (samples.empty()) return TrainStatus::empty_samples;
  if (data.dim() != map.dim())
    fail(ErrorCode::invalid_argument, "data dimension does not match map dimension");

  const std::size_t n = samples.size();
  const std::size_t total = static_cast<std::size_t>(schedules.epochs) * n;
  std::vector<SampleId> order(samples.begin(), samples.end());
  Rng rng(seed);
  Vector previous(map.dim());

  std::size_t t = 0;
  for (int epoch = 0; epoch < schedules.epochs; ++epoch) {
    rng.shuffle(std::span<SampleId>(order));
    for (const SampleId id : order) {
      const auto x = data.row(id);
      const GridPos bmu = find_bmu(map, x);
      for (Unit& u : map.units) {
        if (!u.active) continue;
        const double h = neighborhood_coefficient(grid_distance(bmu, {u.row, u.col}), t, schedules, total);
        previous.assign(u.weight.begin(), u.weight.end());
        for (std::size_t i = 0; i < x.size(); ++i) u.weight[i] += h * (x[i] - u.weight[i]);
        u.wd = update_wd(u.wd, u.weight, previous, trackers.gamma_w);
        const double output = (u.row == bmu.row && u.col == bmu.col) ? 1.0 : 0.0;
        const Activity a = update_va(u.va, u.act, output, trackers.gamma_v, trackers.gamma_a);
        u.va = a.va;
        u.act = a.act;
      }
      ++t;
    }
  }
  return TrainStatus::ok;
}

void assign_and_score(MapGrid& map, const FeatureMatrix& data, std::span<const SampleId> samples) {
  for (Unit& u : map.units) {
    u.assigned.clear();
    u.qe = 0.0;
    u.mqe = 0.0;
  }
  for (const SampleId id : samples) {
    const auto x = data.row(id);
    Unit& u = map.at(find_bmu(map, x));
    u.assigned.push_back(id);
    u.qe += distance(u.weight, x);
  }
  double sum = 0.0;
  int winners = 0;
  for (Unit& u : map.units) {
    if (u.assigned.empty()) continue;
    u.mqe = u.qe / static_cast<double>(u.assigned.size());
    sum += u.qe;
    ++winners;
  }
  map.mqe = winners > 0 ? sum / winners : 0.0;
}

double map_mqe(const MapGrid& map) {
  double sum = 0.0;
  int winners = 0;
  for (const Unit& u : map.units) {
    if (!u.is_winner()) continue;
    sum += u.qe;
    ++winners;
  }
  if (winners == 0) fail(ErrorCode::degenerate, "map " + std::to_string(map.id) + " has no winner unit");
  return sum / winners;
}

Layer0Stats layer0_stats(const FeatureMatrix& data) {
  if (data.empty()) fail(ErrorCode::invalid_argument, "empty dataset");
  Layer0Stats s;
  s.m0.assign(data.dim(), 0.0);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto x = data.row(i);
    for (std::size_t j = 0; j < x.size(); ++j) s.m0[j] += x[j];
  }
  for (double& v : s.m0) v /= static_cast<double>(data.rows());
  for (std::size_t i = 0; i < data.rows(); ++i) s.qe0 += distance(s.m0, data.row(i));
  s.mqe0 = s.qe0 / static_cast<double>(data.rows());
  return s;
}

void randomize_weights(MapGrid& map, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  for (Unit& u : map.units) {
    u.weight.resize(dim);
    for (double& w : u.weight) w = rng.uniform01();
  }
}

}  // namespace ghsom
