#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace lrvf {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Multi-index over the (possibly grouped) state/action dimensions.
using MultiIndex = std::vector<int>;

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

[[noreturn]] inline void fail(const std::string& msg) {
  throw std::runtime_error(msg);
}

// A factor entry crossed the divergence guard; carries which block blew up.
class divergence_error : public std::runtime_error {
 public:
  explicit divergence_error(const std::string& what) : std::runtime_error(what) {}
};

inline std::int64_t index_product(const std::vector<int>& dims) {
  std::int64_t p = 1;
  for (int d : dims) p *= d;
  return p;
}

// Flat layout convention used everywhere: last index fastest.
inline std::int64_t flatten_index(const MultiIndex& idx, const std::vector<int>& dims) {
  std::int64_t flat = 0;
  for (std::size_t i = 0; i < dims.size(); ++i) flat = flat * dims[i] + idx[i];
  return flat;
}

inline MultiIndex unflatten_index(std::int64_t flat, const std::vector<int>& dims) {
  MultiIndex idx(dims.size());
  for (std::size_t i = dims.size(); i-- > 0;) {
    idx[i] = static_cast<int>(flat % dims[i]);
    flat /= dims[i];
  }
  return idx;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derive an independent stream seed from a base seed and a stream tag.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(base ^ splitmix64(stream));
}

// Deterministic RNG. The mt19937_64 bit stream is pinned by the standard;
// uniforms are built from raw bits so sequences are identical on every
// platform (stdlib distributions are not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // [0, 1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // (0, scale] — strictly positive draws for factor initialization.
  double uniform_positive(double scale) { return (1.0 - uniform()) * scale; }

  // [0, n)
  int uniform_int(int n) {
    return static_cast<int>(
        (static_cast<unsigned __int128>(next_u64()) * static_cast<unsigned __int128>(n)) >> 64);
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace lrvf
