#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace bmstab {

// Deterministic xoshiro256** generator. Streams are reproducible across
// platforms, unlike the std:: distributions, so every sampled quantity in
// reports stays byte-identical for a fixed seed.
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t z = seed;
    for (auto& s : state_) {
      z += 0x9e3779b97f4a7c15ull;
      uint64_t x = z;
      x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
      x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
      s = x ^ (x >> 31);
    }
  }

  // Independent child stream, used to parallelize batches per (seed, index).
  static Rng derived(uint64_t seed, uint64_t index) {
    return Rng(seed ^ (0x9e3779b97f4a7c15ull + index * 0xbf58476d1ce4e5b9ull));
  }

  uint64_t u64() {
    uint64_t* s = state_;
    const uint64_t result = rotl(s[1] * 5, 7) * 9;
    const uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
  }

  // Uniform in [0,1) with 53 random bits.
  double uniform01() { return static_cast<double>(u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  // Uniform integer in [0, n).
  uint64_t below(uint64_t n) { return u64() % n; }

  // Marsaglia polar method; consumes a variable number of uniforms but is
  // deterministic for a fixed stream.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    have_spare_ = true;
    return u * m;
  }

  Eigen::VectorXd gaussian_vector(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  Eigen::VectorXd unit_vector(int n) {
    Eigen::VectorXd v;
    double nv;
    do {
      v = gaussian_vector(n);
      nv = v.norm();
    } while (nv < 1e-12);
    return v / nv;
  }

  // Uniform in the ball of given radius around the origin.
  Eigen::VectorXd in_ball(int n, double radius) {
    Eigen::VectorXd v = unit_vector(n);
    const double r = radius * std::pow(uniform01(), 1.0 / n);
    return r * v;
  }

  // Haar-distributed orthonormal basis: QR of a Gaussian matrix with the
  // sign of R's diagonal fixed.
  Eigen::MatrixXd orthonormal_basis(int n) {
    Eigen::MatrixXd g(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) g(i, j) = normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < n; ++i)
      if (r(i, i) < 0) q.col(i) = -q.col(i);
    return q;
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  uint64_t state_[4];
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace bmstab
