#pragma once

#include <random>

#include "armsafe/types.hpp"

namespace armsafe::test {

// Fixed-seed draws so every failure is reproducible.
class Rng {
 public:
  explicit Rng(unsigned seed = 12345) : gen_(seed) {}
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(gen_);
  }
  Vec3 vec(double lo, double hi) {
    return Vec3(uniform(lo, hi), uniform(lo, hi), uniform(lo, hi));
  }
  Mat3 spd(double lo = 0.5, double hi = 3.0) {
    Mat3 a;
    for (int i = 0; i < 9; ++i) a(i / 3, i % 3) = uniform(-1.0, 1.0);
    return a * a.transpose() + Mat3(vec(lo, hi).asDiagonal());
  }

 private:
  std::mt19937_64 gen_;
};

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

}  // namespace armsafe::test
