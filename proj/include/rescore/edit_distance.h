// rescore/edit_distance.h

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

#ifndef RESCORE_EDIT_DISTANCE_H_
#define RESCORE_EDIT_DISTANCE_H_

#include <algorithm>
#include <vector>

namespace rescore {

// Error decomposition of one alignment. "ins" counts extra hypothesis
// words, "del" missing reference words (the usual ASR convention).
struct EditCounts {
  int sub = 0;
  int ins = 0;
  int del = 0;
  int total() const { return sub + ins + del; }
};

// Word-level Levenshtein distance, unit costs. Distance only; O(min) memory.
template <typename Tok>
int edit_distance(const std::vector<Tok> &hyp, const std::vector<Tok> &ref) {
  const size_t m = hyp.size(), n = ref.size();
  std::vector<int> prev(n + 1), cur(n + 1);
  for (size_t j = 0; j <= n; ++j) prev[j] = static_cast<int>(j);
  for (size_t i = 1; i <= m; ++i) {
    cur[0] = static_cast<int>(i);
    for (size_t j = 1; j <= n; ++j) {
      int s = prev[j - 1] + (hyp[i - 1] == ref[j - 1] ? 0 : 1);
      cur[j] = std::min({s, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[n];
}

// Full DP with backtrace, for the sub/ins/del report breakdown. Ties in the
// backtrace prefer diagonal, then deletion, then insertion; the split is
// therefore deterministic while total() always equals edit_distance().
template <typename Tok>
EditCounts edit_alignment(const std::vector<Tok> &hyp,
                          const std::vector<Tok> &ref) {
  const size_t m = hyp.size(), n = ref.size();
  std::vector<int> d((m + 1) * (n + 1));
  auto at = [&](size_t i, size_t j) -> int & { return d[i * (n + 1) + j]; };
  for (size_t i = 0; i <= m; ++i) at(i, 0) = static_cast<int>(i);
  for (size_t j = 0; j <= n; ++j) at(0, j) = static_cast<int>(j);
  for (size_t i = 1; i <= m; ++i)
    for (size_t j = 1; j <= n; ++j) {
      int s = at(i - 1, j - 1) + (hyp[i - 1] == ref[j - 1] ? 0 : 1);
      at(i, j) = std::min({s, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  EditCounts c;
  size_t i = m, j = n;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        at(i, j) == at(i - 1, j - 1) + (hyp[i - 1] == ref[j - 1] ? 0 : 1)) {
      if (hyp[i - 1] != ref[j - 1]) ++c.sub;
      --i;
      --j;
    } else if (j > 0 && at(i, j) == at(i, j - 1) + 1) {
      ++c.del;
      --j;
    } else {
      ++c.ins;
      --i;
    }
  }
  return c;
}

}  // namespace rescore

#endif  // RESCORE_EDIT_DISTANCE_H_
