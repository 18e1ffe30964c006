#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mfc {

inline constexpr double kMassTolerance = 1e-9;
inline constexpr double kStrictNormalizationTolerance = 1e-6;
inline constexpr std::size_t kDefaultSizeCap = 10'000'000;

/// A point of the probability simplex, or a density histogram on a uniform
/// grid. Mass is sum(weights) * cell_width; cell_width is 1 in the finite case.
class DistributionVector {
 public:
  DistributionVector() = default;

  std::size_t dimension() const noexcept { return weights_.size(); }
  std::span<const double> weights() const noexcept { return weights_; }
  double operator[](std::size_t i) const { return weights_[i]; }
  double cell_width() const noexcept { return cell_width_; }
  double mass() const noexcept;

  bool operator==(const DistributionVector&) const = default;

 private:
  friend DistributionVector new_distribution(std::span<const double>, bool);
  friend DistributionVector new_density(std::span<const double>, double, bool);
  friend DistributionVector distribution_unchecked(std::vector<double>, double);

  std::vector<double> weights_;
  double cell_width_ = 1.0;
};

/// Probability vector from nonnegative weights. Weights off unit mass by more
/// than 1e-6 (relative) are rejected in strict mode, rescaled otherwise.
/// Throws NegativeMass, ZeroTotalMass, NormalizationTooLarge.
DistributionVector new_distribution(std::span<const double> weights, bool strict = true);

/// Density histogram with sum(weights) * cell_width == 1.
DistributionVector new_density(std::span<const double> weights, double cell_width,
                               bool strict = true);

/// Wraps weights that the caller has already verified (hot loops only).
DistributionVector distribution_unchecked(std::vector<double> weights, double cell_width = 1.0);

/// Euclidean distance on the simplex. Throws DimensionMismatch.
double distance(const DistributionVector& a, const DistributionVector& b);
double distance(std::span<const double> a, std::span<const double> b);

/// The uniform composition lattice {k / N : k in N^d, sum k = N}, in
/// lexicographic order.
class SimplexGrid {
 public:
  SimplexGrid(std::size_t dimension, std::size_t resolution, std::size_t cap = kDefaultSizeCap);

  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t resolution() const noexcept { return resolution_; }
  std::size_t size() const noexcept { return count_; }

  /// Integer composition of point `index` (components sum to resolution).
  std::span<const std::uint32_t> counts(std::size_t index) const;
  DistributionVector point(std::size_t index) const;
  double coordinate(std::size_t index, std::size_t component) const;

  /// Lexicographic rank of an integer composition.
  std::size_t index_of(std::span<const std::uint32_t> counts) const;

  /// Guaranteed covering radius sqrt(d) / (2N).
  double epsilon() const noexcept;

  bool operator==(const SimplexGrid& other) const noexcept {
    return dimension_ == other.dimension_ && resolution_ == other.resolution_;
  }

 private:
  std::size_t dimension_;
  std::size_t resolution_;
  std::size_t count_;
  std::vector<std::uint32_t> counts_;  // row-major, count_ x dimension_
};

/// Number of weak compositions of n into k parts, C(n + k - 1, k - 1);
/// saturates at SIZE_MAX.
std::size_t composition_count(std::size_t n, std::size_t k);

SimplexGrid enumerate_grid(std::size_t dimension, std::size_t resolution,
                           std::size_t cap = kDefaultSizeCap);

/// Index of the nearest grid point in Euclidean distance; ties go to the
/// lexicographically smallest point. Throws DimensionMismatch.
std::size_t project(const DistributionVector& mu, const SimplexGrid& grid);
std::size_t project(std::span<const double> mu, const SimplexGrid& grid);

/// A lifted action: one action index per underlying state.
struct ActionProfile {
  std::vector<std::uint32_t> actions;

  std::vector<double> as_real() const;
  bool operator==(const ActionProfile&) const = default;
};

/// All num_actions^num_states profiles, counting in base num_actions with the
/// last state varying fastest. Throws SizeOverflow past `cap`.
std::vector<ActionProfile> enumerate_action_profiles(std::size_t num_states,
                                                     std::size_t num_actions,
                                                     std::size_t cap = kDefaultSizeCap);

}  // namespace mfc
