// rescore/attention.h

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

#ifndef RESCORE_ATTENTION_H_
#define RESCORE_ATTENTION_H_

#include <string>
#include <vector>

#include "rescore/ops.h"
#include "rescore/tensor.h"

namespace rescore {

// Where the audio context enters the language model: first LSTM layer
// input, last LSTM layer input, final affine, or first layer + final
// affine with two independent attention heads.
enum class Placement { kNone, kA1, kA2, kA3, kA1A3 };

// Trainable encoder applied to the projected audio frames before attention.
enum class EncoderKind { kNone, kCnn, kTdnn, kPylstm };

Placement placement_from_string(const std::string &s);
std::string to_string(Placement p);
EncoderKind encoder_from_string(const std::string &s);
std::string to_string(EncoderKind k);

// Fixed first-pass acoustic embeddings for one utterance, row-major T x D.
// These are inputs, never trained.
struct AudioFrames {
  int t = 0;
  int d = 0;
  std::vector<double> v;

  double at(int frame, int dim) const {
    return v[static_cast<size_t>(frame) * d + dim];
  }
};

nn::Tensor frames_tensor(const AudioFrames &frames);

// Dot-product content attention with learned query/key projections into a
// shared attention space.
struct AttentionHead {
  nn::Tensor w_q, b_q;  // query map:  hidden -> attn space
  nn::Tensor w_k, b_k;  // key map:    context -> attn space
};

struct AttendResult {
  nn::Tensor context;  // [C], convex combination of encoded rows
  nn::Tensor weights;  // [T'], nonnegative, sums to 1
};

// e_u = <phi(query), psi(o_u)>, alpha = softmax(e), c = sum_u alpha_u o_u.
AttendResult attend(const nn::Tensor &query, const nn::Tensor &encoded,
                    const AttentionHead &head);

// Per-frame projection of raw frames [T x D] into context space [T x C].
nn::Tensor project_am(const nn::Tensor &frames, const nn::Tensor &w,
                      const nn::Tensor &b);

// 3x3 conv + width-3 time max pooling; T' = ceil(T/3).
nn::Tensor encode_cnn(const nn::Tensor &x, const nn::Tensor &kernel);

// Splice offsets {-1, 0, +1, +2} (edges replicated), affine + tanh;
// length preserved.
nn::Tensor encode_tdnn(const nn::Tensor &x, const nn::Tensor &w,
                       const nn::Tensor &b);

// Two pyramidal LSTM layers; each concatenates adjacent frame pairs
// (dropping an odd tail) before its LSTM, halving time. Needs T >= 4.
nn::Tensor encode_pylstm(const nn::Tensor &x, const nn::LstmParams &l1,
                         const nn::LstmParams &l2);

// Output length contract: none -> T, cnn -> ceil(T/3), tdnn -> T,
// pylstm -> floor(floor(T/2)/2).
int encoder_output_len(EncoderKind kind, int t);

// Bundle of whichever encoder parameters the configured kind needs.
struct EncoderParams {
  EncoderKind kind = EncoderKind::kNone;
  nn::Tensor cnn_kernel;        // [3 x 3]
  nn::Tensor tdnn_w, tdnn_b;    // [4C x C], [C]
  nn::LstmParams py1, py2;      // input 2C, hidden C each
};

nn::Tensor encode_frames(const nn::Tensor &projected, const EncoderParams &p);

}  // namespace rescore

#endif  // RESCORE_ATTENTION_H_
