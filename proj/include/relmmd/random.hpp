#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <initializer_list>
#include <random>

#include "relmmd/kernels.hpp"

namespace relmmd {

using Engine = std::mt19937_64;

/// SplitMix64 output function; a bijective 64-bit mixer.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of the sub-stream addressed by `path` below the root `seed`, e.g.
/// {gamma_index, repetition}. Distinct paths give unrelated seeds, and the
/// value depends only on (seed, path), never on scheduling.
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t p : path) h = splitmix64(h ^ splitmix64(p ^ 0x632be59bd9b4e019ULL));
  return h;
}

inline Engine make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  return Engine(stream_seed(seed, path));
}

/// `count` i.i.d. draws from N(mean, I).
inline SampleSet<double> sample_gaussian(const Eigen::VectorXd& mean, Eigen::Index count, Engine& rng) {
  std::normal_distribution<double> normal;
  SampleSet<double> s(count, mean.size());
  for (Eigen::Index i = 0; i < count; ++i)
    for (Eigen::Index k = 0; k < mean.size(); ++k) s(i, k) = mean(k) + normal(rng);
  return s;
}

/// `count` i.i.d. draws from N(mean, L L^T) for a lower-triangular factor L.
inline SampleSet<double> sample_gaussian(const Eigen::VectorXd& mean, const Eigen::MatrixXd& factor,
                                         Eigen::Index count, Engine& rng) {
  std::normal_distribution<double> normal;
  SampleSet<double> s(count, mean.size());
  Eigen::VectorXd w(mean.size());
  for (Eigen::Index i = 0; i < count; ++i) {
    for (Eigen::Index k = 0; k < w.size(); ++k) w(k) = normal(rng);
    s.row(i) = (mean + factor * w).transpose();
  }
  return s;
}

}  // namespace relmmd
