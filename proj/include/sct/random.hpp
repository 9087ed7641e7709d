#pragma once

// Counter-based random streams for the Monte Carlo engine.
//
// Every draw is a pure function of (seed, replicate index, substream tag), so a
// replicate produces the same numbers whichever worker evaluates it and in
// whatever order. The block cipher is Philox4x32-10 (Salmon et al., SC'11).

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

#include <Eigen/Dense>

#include "sct/error.hpp"

namespace sct {

class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) {
    ctr = round(ctr, key);
    for (int i = 1; i < kRounds; ++i) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
      ctr = round(ctr, key);
    }
    return ctr;
  }

 private:
  static constexpr int kRounds = 10;
  static constexpr std::uint32_t kMul0 = 0xD2511F53;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85;

  static Counter round(const Counter& c, const Key& k) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

/// Identifies one independent stream: (seed, replicate, substream).
/// Within a replicate the Wishart draw uses substream 0 and group i's normal
/// matrix uses substream i + 1.
struct StreamKey {
  std::uint64_t seed = 0;
  std::uint64_t replicate_index = 0;
  std::uint32_t substream = 0;
};

inline constexpr std::uint32_t kWishartSubstream = 0;
inline constexpr std::uint32_t group_substream(int group) { return static_cast<std::uint32_t>(group) + 1; }

/// Sequential reader over one keyed stream. Cheap to construct.
class RandomStream {
 public:
  explicit RandomStream(const StreamKey& key)
      : key_{static_cast<std::uint32_t>(key.seed), static_cast<std::uint32_t>(key.seed >> 32)},
        replicate_lo_(static_cast<std::uint32_t>(key.replicate_index)),
        replicate_hi_(static_cast<std::uint32_t>(key.replicate_index >> 32)),
        substream_(key.substream) {}

  std::uint32_t next_u32() {
    if (used_ == 4) refill();
    return buffer_[used_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double radius = std::sqrt(-2.0 * std::log(uniform()));
    const double angle = 2.0 * std::numbers::pi * uniform();
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Gamma(shape, 1) by Marsaglia-Tsang squeeze/rejection; shape < 1 uses the
  /// U^(1/shape) boost.
  double gamma(double shape) {
    if (shape < 1.0) {
      const double g = gamma(shape + 1.0);
      return g * std::pow(uniform(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x;
      double v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      const double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double chi_square(double dof) { return 2.0 * gamma(0.5 * dof); }

 private:
  void refill() {
    buffer_ = Philox4x32::generate({block_++, substream_, replicate_lo_, replicate_hi_}, key_);
    used_ = 0;
  }

  Philox4x32::Key key_;
  std::uint32_t replicate_lo_;
  std::uint32_t replicate_hi_;
  std::uint32_t substream_;
  std::uint32_t block_ = 0;
  Philox4x32::Counter buffer_{};
  int used_ = 4;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Fills `out` (already sized) with iid standard normals, column-major order.
inline void fill_normal(RandomStream& stream, Eigen::Ref<Eigen::MatrixXd> out) {
  for (Eigen::Index j = 0; j < out.cols(); ++j)
    for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, j) = stream.normal();
}

inline Eigen::MatrixXd normal_matrix(int rows, int cols, const StreamKey& key) {
  if (rows < 1 || cols < 1) throw Error(Errc::InvalidArgument, "normal_matrix needs positive dimensions");
  Eigen::MatrixXd out(rows, cols);
  RandomStream stream(key);
  fill_normal(stream, out);
  return out;
}

inline double chi_square(int dof, const StreamKey& key) {
  if (dof < 1) throw Error(Errc::InvalidArgument, "chi_square needs dof >= 1");
  RandomStream stream(key);
  return stream.chi_square(dof);
}

/// Lower-triangular Bartlett factor L with W = L L' ~ Wishart(I_m, nu):
/// L(j,j) = sqrt(chi2_{nu-j}) for 0-based j, strictly-lower entries N(0,1).
/// Diagonal entries are drawn first, then the lower triangle row by row.
inline void bartlett_factor(RandomStream& stream, int nu, Eigen::Ref<Eigen::MatrixXd> lower) {
  const Eigen::Index m = lower.rows();
  if (nu < m) throw Error(Errc::DegreesOfFreedomTooSmall, "Wishart needs nu >= m");
  lower.setZero();
  for (Eigen::Index j = 0; j < m; ++j) lower(j, j) = std::sqrt(stream.chi_square(static_cast<double>(nu - j)));
  for (Eigen::Index i = 1; i < m; ++i)
    for (Eigen::Index j = 0; j < i; ++j) lower(i, j) = stream.normal();
}

inline Eigen::MatrixXd wishart_identity(int m, int nu, const StreamKey& key) {
  if (m < 1) throw Error(Errc::InvalidArgument, "wishart_identity needs m >= 1");
  if (nu < m) throw Error(Errc::DegreesOfFreedomTooSmall, "Wishart needs nu >= m");
  Eigen::MatrixXd lower(m, m);
  RandomStream stream(key);
  bartlett_factor(stream, nu, lower);
  return lower * lower.transpose();
}

}  // namespace sct
