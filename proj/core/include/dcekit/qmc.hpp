#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace dce {

enum class DrawScheme { Sobol, Halton, Pseudo };

std::string_view to_string(DrawScheme scheme) noexcept;
DrawScheme parse_draw_scheme(std::string_view text);

/// Sobol points with Joe-Kuo direction numbers, random access by index.
///
/// With a scramble seed each coordinate is XOR-ed with a seed-derived
/// 32-bit digital shift, which keeps the net structure of every dyadic
/// block of points.
class SobolSequence {
 public:
  static constexpr std::size_t kMaxDimension = 32;

  explicit SobolSequence(std::size_t dimension);
  SobolSequence(std::size_t dimension, std::uint64_t scramble_seed);

  std::size_t dimension() const noexcept { return dimension_; }

  /// 32-bit integer coordinate `d` of point `index` (index 0 is the origin
  /// before scrambling).
  std::uint32_t raw(std::uint64_t index, std::size_t d) const noexcept;
  /// Point in [0, 1) for the unscrambled sequence; cell midpoints in
  /// (0, 1) otherwise.
  double coordinate(std::uint64_t index, std::size_t d) const noexcept;

 private:
  std::size_t dimension_;
  bool scrambled_ = false;
  std::vector<std::uint32_t> directions_;  // dimension x 32
  std::vector<std::uint32_t> shifts_;
};

/// Radical inverse of `index` in the base of the d-th prime.
double halton_coordinate(std::uint64_t index, std::size_t d);
inline constexpr std::size_t kMaxHaltonDimension = 100;

/// Standard-normal draws, one block of n_draws x dim per individual.
///
/// Sobol blocks are consecutive ranges of one scrambled sequence starting
/// after the first point; Halton blocks likewise, with a seed-derived
/// Cranley-Patterson rotation; pseudo draws come from a per-individual
/// substream. The same block serves all of an individual's tasks.
class DrawBlocks {
 public:
  DrawBlocks() = default;
  DrawBlocks(std::size_t n_individuals, std::size_t n_draws, std::size_t dim,
             std::vector<double> values);

  std::size_t n_individuals() const noexcept { return n_individuals_; }
  std::size_t n_draws() const noexcept { return n_draws_; }
  std::size_t dim() const noexcept { return dim_; }

  /// Draw r of individual i, `dim` consecutive values.
  std::span<const double> draw(std::size_t individual, std::size_t r) const noexcept {
    return {values_.data() + (individual * n_draws_ + r) * dim_, dim_};
  }
  double at(std::size_t individual, std::size_t r, std::size_t d) const noexcept {
    return values_[(individual * n_draws_ + r) * dim_ + d];
  }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::size_t n_individuals_ = 0;
  std::size_t n_draws_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

/// Sobol blocks are consecutive runs of the first 2^M shifted points, each
/// snapped to the midpoint of its 2^-M cell.
///
/// Throws DimensionTooLarge beyond the scheme's table and InvalidConfig for
/// n_draws == 0.
DrawBlocks quasi_draws(std::size_t n_individuals, std::size_t dim, std::size_t n_draws,
                       DrawScheme scheme, std::uint64_t seed);

}  // namespace dce
