#include "dcekit/qmc.hpp"

#include <array>
#include <cmath>

#include "dcekit/error.hpp"
#include "dcekit/normal.hpp"
#include "dcekit/rng.hpp"

namespace dce {

std::string_view to_string(DrawScheme scheme) noexcept {
  switch (scheme) {
    case DrawScheme::Sobol: return "sobol";
    case DrawScheme::Halton: return "halton";
    case DrawScheme::Pseudo: return "pseudo";
  }
  return "sobol";
}

DrawScheme parse_draw_scheme(std::string_view text) {
  if (text == "sobol") return DrawScheme::Sobol;
  if (text == "halton") return DrawScheme::Halton;
  if (text == "pseudo") return DrawScheme::Pseudo;
  throw Error(ErrorCode::InvalidConfig, "unknown draw scheme '" + std::string(text) + "'");
}

namespace {

struct Primitive {
  unsigned degree;
  unsigned a;
  std::array<std::uint32_t, 7> m;
};

// Joe-Kuo new-joe-kuo-6.21201, dimensions 2..32.
constexpr std::array<Primitive, 31> kPrimitives{{
    {1, 0, {1}},
    {2, 1, {1, 3}},
    {3, 1, {1, 3, 1}},
    {3, 2, {1, 1, 1}},
    {4, 1, {1, 1, 3, 3}},
    {4, 4, {1, 3, 5, 13}},
    {5, 2, {1, 1, 5, 5, 17}},
    {5, 4, {1, 1, 5, 5, 5}},
    {5, 7, {1, 1, 7, 11, 19}},
    {5, 11, {1, 1, 5, 1, 1}},
    {5, 13, {1, 1, 1, 3, 11}},
    {5, 14, {1, 3, 5, 5, 31}},
    {6, 1, {1, 3, 3, 9, 7, 49}},
    {6, 13, {1, 1, 1, 15, 21, 21}},
    {6, 16, {1, 3, 1, 13, 27, 49}},
    {6, 19, {1, 1, 1, 15, 7, 5}},
    {6, 22, {1, 3, 1, 15, 13, 25}},
    {6, 25, {1, 1, 5, 5, 19, 61}},
    {7, 1, {1, 3, 7, 11, 23, 15, 103}},
    {7, 4, {1, 3, 7, 13, 13, 15, 69}},
    {7, 7, {1, 1, 3, 13, 7, 35, 63}},
    {7, 8, {1, 3, 5, 9, 1, 25, 53}},
    {7, 14, {1, 3, 1, 13, 9, 35, 107}},
    {7, 19, {1, 3, 1, 5, 27, 61, 31}},
    {7, 21, {1, 1, 5, 11, 19, 41, 61}},
    {7, 28, {1, 3, 5, 3, 3, 13, 69}},
    {7, 31, {1, 1, 7, 13, 1, 19, 1}},
    {7, 32, {1, 3, 7, 5, 13, 19, 59}},
    {7, 37, {1, 1, 3, 9, 25, 29, 41}},
    {7, 41, {1, 3, 5, 13, 23, 1, 55}},
    {7, 42, {1, 3, 7, 3, 13, 59, 17}},
}};

constexpr unsigned kBits = 32;
constexpr double kTwo32 = 4294967296.0;

bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

std::uint64_t nth_prime(std::size_t d) {
  static const std::vector<std::uint64_t> primes = [] {
    std::vector<std::uint64_t> out;
    for (std::uint64_t n = 2; out.size() < kMaxHaltonDimension; ++n)
      if (is_prime(n)) out.push_back(n);
    return out;
  }();
  return primes[d];
}

/// Keeps inverse-CDF inputs off the endpoints.
double open_unit(double u) {
  constexpr double eps = 0x1.0p-53;
  return std::min(std::max(u, eps), 1.0 - eps);
}

}  // namespace

SobolSequence::SobolSequence(std::size_t dimension)
    : dimension_(dimension), directions_(dimension * kBits) {
  if (dimension > kMaxDimension)
    throw Error(ErrorCode::DimensionTooLarge, "Sobol dimension " + std::to_string(dimension) +
                                                  " exceeds " + std::to_string(kMaxDimension));
  for (std::size_t d = 0; d < dimension; ++d) {
    std::uint32_t* v = directions_.data() + d * kBits;
    if (d == 0) {
      for (unsigned j = 0; j < kBits; ++j) v[j] = 1u << (kBits - 1 - j);
      continue;
    }
    const Primitive& p = kPrimitives[d - 1];
    const unsigned s = p.degree;
    for (unsigned j = 0; j < s; ++j) v[j] = p.m[j] << (kBits - 1 - j);
    for (unsigned j = s; j < kBits; ++j) {
      std::uint32_t x = v[j - s] ^ (v[j - s] >> s);
      for (unsigned k = 1; k < s; ++k)
        if ((p.a >> (s - 1 - k)) & 1u) x ^= v[j - k];
      v[j] = x;
    }
  }
}

SobolSequence::SobolSequence(std::size_t dimension, std::uint64_t scramble_seed)
    : SobolSequence(dimension) {
  scrambled_ = true;
  Rng rng(substream_seed(scramble_seed, stream::scramble, 0));
  shifts_.resize(dimension);
  for (auto& s : shifts_) s = static_cast<std::uint32_t>(rng.next_u64() >> 32);
}

std::uint32_t SobolSequence::raw(std::uint64_t index, std::size_t d) const noexcept {
  std::uint64_t gray = index ^ (index >> 1);
  const std::uint32_t* v = directions_.data() + d * kBits;
  std::uint32_t x = 0;
  for (unsigned j = 0; gray && j < kBits; ++j, gray >>= 1)
    if (gray & 1u) x ^= v[j];
  return scrambled_ ? x ^ shifts_[d] : x;
}

double SobolSequence::coordinate(std::uint64_t index, std::size_t d) const noexcept {
  const double x = static_cast<double>(raw(index, d));
  return scrambled_ ? (x + 0.5) / kTwo32 : x / kTwo32;
}

double halton_coordinate(std::uint64_t index, std::size_t d) {
  if (d >= kMaxHaltonDimension)
    throw Error(ErrorCode::DimensionTooLarge, "Halton dimension exceeds " +
                                                  std::to_string(kMaxHaltonDimension));
  const std::uint64_t base = nth_prime(d);
  double f = 1.0;
  double out = 0.0;
  while (index > 0) {
    f /= static_cast<double>(base);
    out += f * static_cast<double>(index % base);
    index /= base;
  }
  return out;
}

DrawBlocks::DrawBlocks(std::size_t n_individuals, std::size_t n_draws, std::size_t dim,
                       std::vector<double> values)
    : n_individuals_(n_individuals), n_draws_(n_draws), dim_(dim), values_(std::move(values)) {
  if (values_.size() != n_individuals * n_draws * dim)
    throw Error(ErrorCode::DimensionMismatch, "draw block storage has the wrong size");
}

DrawBlocks quasi_draws(std::size_t n_individuals, std::size_t dim, std::size_t n_draws,
                       DrawScheme scheme, std::uint64_t seed) {
  if (n_draws == 0) throw Error(ErrorCode::InvalidConfig, "n_draws must be at least 1");
  std::vector<double> values(n_individuals * n_draws * dim);
  switch (scheme) {
    case DrawScheme::Sobol: {
      const SobolSequence sobol(dim, seed);
      // The first 2^bits points form a net; keep their leading bits and
      // take cell midpoints so small blocks stay symmetric.
      const std::uint64_t total = n_individuals * n_draws;
      int bits = 1;
      while (bits < 32 && (std::uint64_t{1} << bits) < total) ++bits;
      if ((std::uint64_t{1} << bits) < total)
        throw Error(ErrorCode::InvalidConfig, "too many Sobol points requested");
      const double cell = std::ldexp(1.0, -bits);
      std::size_t at = 0;
      for (std::uint64_t n = 0; n < total; ++n)
        for (std::size_t d = 0; d < dim; ++d) {
          const std::uint32_t top = sobol.raw(n, d) >> (32 - bits);
          values[at++] = inverse_normal_cdf((static_cast<double>(top) + 0.5) * cell);
        }
      break;
    }
    case DrawScheme::Halton: {
      if (dim > kMaxHaltonDimension)
        throw Error(ErrorCode::DimensionTooLarge, "Halton dimension exceeds " +
                                                      std::to_string(kMaxHaltonDimension));
      Rng rng(substream_seed(seed, stream::scramble, 1));
      std::vector<double> shift(dim);
      for (auto& s : shift) s = rng.uniform();
      std::size_t at = 0;
      for (std::uint64_t n = 1; n <= n_individuals * n_draws; ++n)
        for (std::size_t d = 0; d < dim; ++d) {
          double u = halton_coordinate(n, d) + shift[d];
          if (u >= 1.0) u -= 1.0;
          values[at++] = inverse_normal_cdf(open_unit(u));
        }
      break;
    }
    case DrawScheme::Pseudo: {
      std::size_t at = 0;
      for (std::size_t i = 0; i < n_individuals; ++i) {
        Rng rng(substream_seed(seed, stream::draws, i));
        for (std::size_t k = 0; k < n_draws * dim; ++k) values[at++] = rng.normal();
      }
      break;
    }
  }
  return DrawBlocks(n_individuals, n_draws, dim, std::move(values));
}

}  // namespace dce
