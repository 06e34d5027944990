// rescore/attention.cc

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

#include "rescore/attention.h"

#include "rescore/common.h"

namespace rescore {

Placement placement_from_string(const std::string &s) {
  if (s == "none") return Placement::kNone;
  if (s == "a1") return Placement::kA1;
  if (s == "a2") return Placement::kA2;
  if (s == "a3") return Placement::kA3;
  if (s == "a1a3" || s == "a1+a3") return Placement::kA1A3;
  throw Error(strcat_all("unknown attention placement '", s,
                         "' (expected none|a1|a2|a3|a1a3)"));
}

std::string to_string(Placement p) {
  switch (p) {
    case Placement::kNone: return "none";
    case Placement::kA1: return "a1";
    case Placement::kA2: return "a2";
    case Placement::kA3: return "a3";
    case Placement::kA1A3: return "a1a3";
  }
  throw Error("bad placement enum");
}

EncoderKind encoder_from_string(const std::string &s) {
  if (s == "none") return EncoderKind::kNone;
  if (s == "cnn") return EncoderKind::kCnn;
  if (s == "tdnn") return EncoderKind::kTdnn;
  if (s == "pylstm") return EncoderKind::kPylstm;
  throw Error(strcat_all("unknown encoder '", s,
                         "' (expected none|cnn|tdnn|pylstm)"));
}

std::string to_string(EncoderKind k) {
  switch (k) {
    case EncoderKind::kNone: return "none";
    case EncoderKind::kCnn: return "cnn";
    case EncoderKind::kTdnn: return "tdnn";
    case EncoderKind::kPylstm: return "pylstm";
  }
  throw Error("bad encoder enum");
}

nn::Tensor frames_tensor(const AudioFrames &frames) {
  RESCORE_CHECK(frames.t >= 1, "audio must have at least one frame");
  RESCORE_CHECK(frames.v.size() ==
                    static_cast<size_t>(frames.t) * frames.d,
                "audio frame buffer is ", frames.v.size(), " values, want ",
                frames.t, " x ", frames.d);
  return nn::Tensor::constant({frames.t, frames.d}, frames.v);
}

AttendResult attend(const nn::Tensor &query, const nn::Tensor &encoded,
                    const AttentionHead &head) {
  RESCORE_CHECK(encoded.dim(0) >= 1, "attend: no encoded frames");
  nn::Tensor q = nn::affine(query, head.w_q, head.b_q);
  nn::Tensor keys = nn::linear_rows(encoded, head.w_k, head.b_k);
  nn::Tensor alpha = nn::softmax(nn::matvec(keys, q));
  return {nn::weighted_row_sum(encoded, alpha), alpha};
}

nn::Tensor project_am(const nn::Tensor &frames, const nn::Tensor &w,
                      const nn::Tensor &b) {
  return nn::linear_rows(frames, w, b);
}

nn::Tensor encode_cnn(const nn::Tensor &x, const nn::Tensor &kernel) {
  return nn::conv_time(x, kernel);
}

nn::Tensor encode_tdnn(const nn::Tensor &x, const nn::Tensor &w,
                       const nn::Tensor &b) {
  return nn::tanh_op(nn::linear_rows(nn::splice_rows(x, {-1, 0, 1, 2}), w, b));
}

nn::Tensor encode_pylstm(const nn::Tensor &x, const nn::LstmParams &l1,
                         const nn::LstmParams &l2) {
  RESCORE_CHECK(x.dim(0) >= 4, "pyramidal encoder needs at least 4 frames, got ",
                x.dim(0));
  auto layer = [](const nn::Tensor &in, const nn::LstmParams &p) {
    const int pairs = in.dim(0) / 2;  // odd tail frame dropped
    const int hd = p.hidden_dim();
    nn::LstmState s{nn::Tensor::zeros({hd}), nn::Tensor::zeros({hd})};
    std::vector<nn::Tensor> hs;
    hs.reserve(pairs);
    for (int u = 0; u < pairs; ++u) {
      nn::Tensor pair = nn::concat(nn::row(in, 2 * u), nn::row(in, 2 * u + 1));
      s = nn::lstm_step(pair, s, p);
      hs.push_back(s.h);
    }
    return nn::stack_rows(hs);
  };
  return layer(layer(x, l1), l2);
}

int encoder_output_len(EncoderKind kind, int t) {
  switch (kind) {
    case EncoderKind::kNone: return t;
    case EncoderKind::kCnn: return (t + 2) / 3;
    case EncoderKind::kTdnn: return t;
    case EncoderKind::kPylstm: return (t / 2) / 2;
  }
  throw Error("bad encoder enum");
}

nn::Tensor encode_frames(const nn::Tensor &projected, const EncoderParams &p) {
  switch (p.kind) {
    case EncoderKind::kNone: return projected;
    case EncoderKind::kCnn: return encode_cnn(projected, p.cnn_kernel);
    case EncoderKind::kTdnn: return encode_tdnn(projected, p.tdnn_w, p.tdnn_b);
    case EncoderKind::kPylstm: return encode_pylstm(projected, p.py1, p.py2);
  }
  throw Error("bad encoder enum");
}

}  // namespace rescore
