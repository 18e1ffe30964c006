#include "mfc/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mfc/error.hpp"

namespace mfc {
namespace {

DistributionVector normalize_into(std::span<const double> weights, double cell_width, bool strict,
                                  DistributionVector (*wrap)(std::vector<double>, double)) {
  if (weights.empty()) fail(ErrorKind::DimensionMismatch, "distribution must be nonempty");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      fail(ErrorKind::NegativeMass, "component " + std::to_string(w) + " is negative or not finite");
    }
    total += w;
  }
  const double mass = total * cell_width;
  if (!(mass > 0.0)) fail(ErrorKind::ZeroTotalMass, "weights sum to zero");

  std::vector<double> out(weights.begin(), weights.end());
  if (std::abs(mass - 1.0) <= kMassTolerance) return wrap(std::move(out), cell_width);
  if (strict && std::abs(mass - 1.0) > kStrictNormalizationTolerance) {
    fail(ErrorKind::NormalizationTooLarge,
         "total mass " + std::to_string(mass) + " needs rescaling beyond tolerance");
  }
  for (double& w : out) w /= mass;
  return wrap(std::move(out), cell_width);
}

}  // namespace

double DistributionVector::mass() const noexcept {
  return std::accumulate(weights_.begin(), weights_.end(), 0.0) * cell_width_;
}

DistributionVector distribution_unchecked(std::vector<double> weights, double cell_width) {
  DistributionVector d;
  d.weights_ = std::move(weights);
  d.cell_width_ = cell_width;
  return d;
}

DistributionVector new_distribution(std::span<const double> weights, bool strict) {
  return normalize_into(weights, 1.0, strict, &distribution_unchecked);
}

DistributionVector new_density(std::span<const double> weights, double cell_width, bool strict) {
  if (!(cell_width > 0.0)) fail(ErrorKind::InvalidParameter, "cell width must be positive");
  return normalize_into(weights, cell_width, strict, &distribution_unchecked);
}

double distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    fail(ErrorKind::DimensionMismatch,
         "dimensions " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double distance(const DistributionVector& a, const DistributionVector& b) {
  return distance(a.weights(), b.weights());
}

std::size_t composition_count(std::size_t n, std::size_t k) {
  if (k == 0) return n == 0 ? 1 : 0;
  // C(n + k - 1, k - 1) computed incrementally; every prefix product is itself
  // a binomial coefficient, so the division is exact.
  const std::size_t r = std::min(k - 1, n);
  const std::size_t top = n + k - 1;
  std::size_t result = 1;
  for (std::size_t i = 1; i <= r; ++i) {
    const std::size_t factor = top - r + i;
    if (result > std::numeric_limits<std::size_t>::max() / factor) {
      return std::numeric_limits<std::size_t>::max();
    }
    result = result * factor / i;
  }
  return result;
}

SimplexGrid::SimplexGrid(std::size_t dimension, std::size_t resolution, std::size_t cap)
    : dimension_(dimension), resolution_(resolution) {
  if (dimension == 0) fail(ErrorKind::InvalidParameter, "grid dimension must be >= 1");
  if (resolution == 0) fail(ErrorKind::InvalidParameter, "grid resolution must be >= 1");
  count_ = composition_count(resolution, dimension);
  if (count_ > cap) {
    fail(ErrorKind::SizeOverflow, "grid would hold " + std::to_string(count_) +
                                      " points, cap is " + std::to_string(cap));
  }
  counts_.assign(count_ * dimension_, 0);

  // Lexicographic enumeration: odometer over the first d-1 components, the
  // last one absorbing the remainder.
  std::vector<std::uint32_t> current(dimension_, 0);
  current[dimension_ - 1] = static_cast<std::uint32_t>(resolution_);
  for (std::size_t row = 0; row < count_; ++row) {
    std::copy(current.begin(), current.end(), counts_.begin() + row * dimension_);
    if (row + 1 == count_) break;
    // Next composition in lex order: find the rightmost position i < d-1 that
    // can be incremented (the suffix after it holds some mass).
    std::size_t i = dimension_ - 1;
    while (i-- > 0) {
      std::uint32_t suffix = 0;
      for (std::size_t j = i + 1; j < dimension_; ++j) suffix += current[j];
      if (suffix > 0) {
        ++current[i];
        for (std::size_t j = i + 1; j < dimension_; ++j) current[j] = 0;
        current[dimension_ - 1] = suffix - 1;
        break;
      }
    }
  }
}

std::span<const std::uint32_t> SimplexGrid::counts(std::size_t index) const {
  return {counts_.data() + index * dimension_, dimension_};
}

double SimplexGrid::coordinate(std::size_t index, std::size_t component) const {
  return static_cast<double>(counts_[index * dimension_ + component]) /
         static_cast<double>(resolution_);
}

DistributionVector SimplexGrid::point(std::size_t index) const {
  std::vector<double> w(dimension_);
  for (std::size_t c = 0; c < dimension_; ++c) w[c] = coordinate(index, c);
  return distribution_unchecked(std::move(w));
}

std::size_t SimplexGrid::index_of(std::span<const std::uint32_t> counts) const {
  if (counts.size() != dimension_) fail(ErrorKind::DimensionMismatch, "composition length");
  std::size_t index = 0;
  std::size_t remaining = resolution_;
  for (std::size_t i = 0; i + 1 < dimension_; ++i) {
    const std::size_t parts_after = dimension_ - i - 1;
    // Points whose i-th component is smaller than counts[i] come first.
    for (std::uint32_t v = 0; v < counts[i]; ++v) {
      index += composition_count(remaining - v, parts_after);
    }
    remaining -= counts[i];
  }
  return index;
}

double SimplexGrid::epsilon() const noexcept {
  return std::sqrt(static_cast<double>(dimension_)) / (2.0 * static_cast<double>(resolution_));
}

SimplexGrid enumerate_grid(std::size_t dimension, std::size_t resolution, std::size_t cap) {
  return SimplexGrid(dimension, resolution, cap);
}

std::size_t project(std::span<const double> mu, const SimplexGrid& grid) {
  const std::size_t d = grid.dimension();
  if (mu.size() != d) {
    fail(ErrorKind::DimensionMismatch,
         "point has dimension " + std::to_string(mu.size()) + ", grid " + std::to_string(d));
  }
  const double n = static_cast<double>(grid.resolution());

  // Minimizing sum (k_i - n mu_i)^2 over integer compositions of n is
  // separable and convex: floor every coordinate, then hand the missing units
  // to the largest fractional parts.
  std::vector<std::uint32_t> k(d);
  std::vector<double> frac(d);
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < d; ++i) {
    const double scaled = std::clamp(mu[i], 0.0, 1.0) * n;
    const double fl = std::floor(scaled);
    k[i] = static_cast<std::uint32_t>(fl);
    frac[i] = scaled - fl;
    assigned += k[i];
  }
  std::int64_t missing = static_cast<std::int64_t>(grid.resolution()) - assigned;

  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  if (missing > 0) {
    // Equal fractional parts: favour later coordinates, which keeps the
    // chosen point lexicographically smallest among the tied candidates.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (frac[a] != frac[b]) return frac[a] > frac[b];
      return a > b;
    });
    for (std::size_t j = 0; j < d && missing > 0; ++j, --missing) ++k[order[j]];
  } else if (missing < 0) {
    // Only reachable for inputs carrying slightly more than unit mass.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (frac[a] != frac[b]) return frac[a] < frac[b];
      return a < b;
    });
    for (std::size_t j = 0; j < d && missing < 0; ++j) {
      if (k[order[j]] > 0) {
        --k[order[j]];
        ++missing;
      }
    }
  }
  return grid.index_of(k);
}

std::size_t project(const DistributionVector& mu, const SimplexGrid& grid) {
  return project(mu.weights(), grid);
}

std::vector<double> ActionProfile::as_real() const {
  return {actions.begin(), actions.end()};
}

std::vector<ActionProfile> enumerate_action_profiles(std::size_t num_states,
                                                     std::size_t num_actions, std::size_t cap) {
  if (num_states == 0 || num_actions == 0) {
    fail(ErrorKind::InvalidParameter, "need at least one state and one action");
  }
  std::size_t total = 1;
  for (std::size_t s = 0; s < num_states; ++s) {
    if (total > cap / num_actions) {
      fail(ErrorKind::SizeOverflow, std::to_string(num_actions) + "^" +
                                        std::to_string(num_states) + " profiles exceed cap");
    }
    total *= num_actions;
  }
  if (total > cap) fail(ErrorKind::SizeOverflow, "profile count exceeds cap");

  std::vector<ActionProfile> out(total);
  for (std::size_t p = 0; p < total; ++p) {
    auto& acts = out[p].actions;
    acts.resize(num_states);
    std::size_t rest = p;
    for (std::size_t s = num_states; s-- > 0;) {
      acts[s] = static_cast<std::uint32_t>(rest % num_actions);
      rest /= num_actions;
    }
  }
  return out;
}

}  // namespace mfc
