// Shared domain types and error hierarchy: base arms, super arms, the
// reproducible RNG used by every sampling operation, and deterministic seed
// derivation helpers.

#ifndef GPBANDITS_COMMON_HPP_
#define GPBANDITS_COMMON_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "gpbandits/stats.hpp"

namespace gpb {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Raised when a numeric routine fails to converge or produces non-finite
// values; carries enough context to identify the offending computation.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

class RoutingError : public std::runtime_error {
 public:
  explicit RoutingError(const std::string& what) : std::runtime_error(what) {}
};

class EnvironmentError : public std::runtime_error {
 public:
  explicit EnvironmentError(const std::string& what)
      : std::runtime_error(what) {}
};

class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// An atomic decision unit: an edge (or pool) identity paired with its
// context vector. Context dimension must be consistent within one
// environment.
struct BaseArm {
  int id = -1;
  Vector context;

  BaseArm() = default;
  BaseArm(int id_, Vector context_) : id(id_), context(std::move(context_)) {}
};

// Ordered list of base-arm ids with no repeats; a path in the navigation
// environment, a subset of size <= K elsewhere.
using SuperArm = std::vector<int>;

// 64-bit mix (splitmix64); used for deriving independent seeds.
std::uint64_t mix64(std::uint64_t x);

// FNV-1a over a string, for stable cross-platform seed derivation.
std::uint64_t fnv1a64(const std::string& s);

// Deterministic per-(algorithm, replicate) seed from a base seed.
std::uint64_t derive_seed(std::uint64_t base, const std::string& tag,
                          std::uint64_t index);

// Reproducible random source. std::mt19937_64 is fully specified by the
// standard and the Gaussian draw goes through erf_inv rather than
// std::normal_distribution (whose algorithm is implementation-defined), so
// streams are bit-identical across platforms given the same seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return state_(); }

  // Uniform on (0, 1), never returning an exact endpoint.
  double uniform() {
    return (static_cast<double>(state_() >> 11) + 0.5) * kInv53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via the inverse CDF.
  double gaussian() { return kSqrt2 * erf_inv(2.0 * uniform() - 1.0); }

  double gaussian(double mu, double sigma) { return mu + sigma * gaussian(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  static constexpr double kInv53 = 1.0 / 9007199254740992.0;  // 2^-53
  static constexpr double kSqrt2 = 1.4142135623730951;
  std::mt19937_64 state_;
};

}  // namespace gpb

#endif  // GPBANDITS_COMMON_HPP_
