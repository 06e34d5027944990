// rescore/common.h

// Copyright 2026  The rescore Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef RESCORE_COMMON_H_
#define RESCORE_COMMON_H_

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rescore {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string &msg) : std::runtime_error(msg) {}
};

// Shape/dimension violations get their own type so callers can tell a
// malformed model apart from a bad file or bad flag.
class DimError : public Error {
 public:
  explicit DimError(const std::string &msg) : Error(msg) {}
};

namespace detail {
inline void format_parts(std::ostringstream &) {}
template <typename T, typename... Rest>
void format_parts(std::ostringstream &os, const T &head, const Rest &...rest) {
  os << head;
  format_parts(os, rest...);
}
}  // namespace detail

template <typename... Args>
std::string strcat_all(const Args &...args) {
  std::ostringstream os;
  detail::format_parts(os, args...);
  return os.str();
}

#define RESCORE_CHECK(cond, ...)                                   \
  do {                                                             \
    if (!(cond)) throw ::rescore::Error(strcat_all(__VA_ARGS__));  \
  } while (0)

uint64_t fnv1a64(std::string_view data);
uint64_t splitmix64(uint64_t x);
uint32_t crc32(const void *data, size_t n, uint32_t crc = 0);

// Deterministic RNG used everywhere. The distributions are hand-rolled on
// top of mt19937_64 so that generated datasets are identical across
// standard-library implementations, not just across runs.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next() { return gen_(); }

  // [0, 1)
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller, no cached spare so the draw count per call is fixed.
  double gaussian() {
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // [0, n)
  int uniform_int(int n) {
    return static_cast<int>(gen_() % static_cast<uint64_t>(n));
  }

  template <typename T>
  void shuffle(std::vector<T> &v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = gen_() % i;
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

std::vector<std::string> split_words(std::string_view text);
std::string join_words(const std::vector<std::string> &words);

std::string read_text_file(const std::string &path);
void write_text_file(const std::string &path, const std::string &content);

}  // namespace rescore

#endif  // RESCORE_COMMON_H_
