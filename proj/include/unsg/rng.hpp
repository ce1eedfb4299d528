// Copyright 2026 The UNSG Workbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Seed derivation. Every random stream in the workbench is an
// std::mt19937_64 seeded from a counter tuple, so results depend only on the
// tuple and never on thread scheduling.

#ifndef UNSG_RNG_HPP_
#define UNSG_RNG_HPP_

#include <cstdint>
#include <initializer_list>
#include <random>

namespace unsg {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x6a09e667f3bcc909ull;
  for (std::uint64_t p : parts) h = splitmix64(h ^ splitmix64(p));
  return h;
}

inline std::mt19937_64 make_stream(std::initializer_list<std::uint64_t> parts) {
  return std::mt19937_64(derive_seed(parts));
}

// Stream tags.
enum class StreamTag : std::uint64_t {
  kInitAttacker = 1,
  kInitDefender = 2,
  kSample = 3,
  kWinRate = 4,
  kDoublePool = 5,
  kFlatSample = 6,
};

inline std::uint64_t tag(StreamTag t) { return static_cast<std::uint64_t>(t); }

}  // namespace unsg

#endif  // UNSG_RNG_HPP_
