#pragma once

// Flat SOM primitives shared by every map of the hierarchy.

#include <cstdint>
#include <span>

#include "ghsom/types.hpp"

namespace ghsom {

/// Euclidean distance between equal-length vectors.
double distance(std::span<const double> a, std::span<const double> b);

/// Lattice (grid) distance between two unit positions.
double grid_distance(GridPos a, GridPos b) noexcept;

/// Best-matching unit: the active unit whose weight is nearest to `x`.
/// Ties go to the lowest row, then the lowest column. Throws on dimension
/// mismatch or when the map has no active unit.
GridPos find_bmu(const MapGrid& map, std::span<const double> x);

/// Learning rate and radius interpolate linearly from their start to end
/// values, reaching the end value at iteration total_iters - 1.
double learning_rate(std::size_t t, const Schedules& s, std::size_t total_iters) noexcept;
double radius(std::size_t t, const Schedules& s, std::size_t total_iters) noexcept;

/// h_ci = lr(t) * exp(-dist^2 / (2 sigma(t)^2)).
double neighborhood_coefficient(double grid_dist, std::size_t t, const Schedules& s,
                                std::size_t total_iters) noexcept;

enum class TrainStatus { ok, empty_samples };

/// Sequential online training: `epochs` passes, each over a seeded shuffle of
/// `samples`. Every active unit moves toward the presented sample by h_ci.
/// Walking-distance and activity trackers are updated once per iteration.
/// Bit-identical for identical inputs.
TrainStatus train_map(MapGrid& map, const FeatureMatrix& data, std::span<const SampleId> samples,
                      const Schedules& schedules, std::uint64_t seed,
                      const AdaptiveParams& trackers = {});

/// Assigns each sample to its BMU and recomputes qe/mqe per unit and the map's
/// mean quantization error. Units without samples get qe = mqe = 0.
void assign_and_score(MapGrid& map, const FeatureMatrix& data, std::span<const SampleId> samples);

/// Mean over winner units of qe. Throws ErrorCode::degenerate when the map has
/// no winner unit.
double map_mqe(const MapGrid& map);

/// Mean vector of the data and its (mean) quantization error.
Layer0Stats layer0_stats(const FeatureMatrix& data);

/// Uniform random weights in [0,1)^dim for every unit.
void randomize_weights(MapGrid& map, std::size_t dim, std::uint64_t seed);

}  // namespace ghsom
