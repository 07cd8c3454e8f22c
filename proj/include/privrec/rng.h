// Copyright 2026 The privrec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PRIVREC_RNG_H_
#define PRIVREC_RNG_H_

#include <cstdint>
#include <random>

namespace privrec {

// SplitMix64 finalizer. Used to derive stream seeds from (seed, counter)
// pairs so that every trial of an experiment owns an independent stream.
uint64_t MixSeed(uint64_t seed, uint64_t counter);

// Seeded, splittable random source. Every randomized operation in the
// library takes one of these explicitly; there is no global generator.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), engine_(seed) {}

  // Returns an independent generator for stream `stream`. Splitting does not
  // advance this generator, so Split(i) is a pure function of (seed, i).
  Rng Split(uint64_t stream) const { return Rng(MixSeed(seed_, stream)); }

  uint64_t seed() const { return seed_; }

  uint64_t NextU64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double Uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform on the open interval (0, 1).
  double UniformOpen() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform integer in [0, bound).
  uint64_t UniformIndex(uint64_t bound);

  // Standard normal draw.
  double Normal() { return normal_(engine_); }

  bool Bernoulli(double p) { return Uniform() < p; }

  std::mt19937_64& engine() { return engine_; }

 private:
  uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace privrec

#endif  // PRIVREC_RNG_H_
