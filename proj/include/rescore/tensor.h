// rescore/tensor.h

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

#ifndef RESCORE_TENSOR_H_
#define RESCORE_TENSOR_H_

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "rescore/common.h"

namespace rescore {
namespace nn {

using Shape = std::vector<int>;

std::string shape_str(const Shape &s);

// Dense double-precision tensor. Value semantics are handle semantics:
// copying a Tensor aliases the same storage, which is what parameter
// sharing and the tape both rely on.
struct TensorImpl {
  Shape shape;
  std::vector<double> v;  // row-major values
  std::vector<double> g;  // gradient, same length as v while tracked
  bool tracked = false;
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(const Shape &shape);
  static Tensor constant(const Shape &shape, std::vector<double> values);
  static Tensor scalar(double value);
  // A parameter is permanently tracked and keeps a persistent gradient
  // buffer that accumulates until zero_grad().
  static Tensor param(const Shape &shape, std::vector<double> values);

  bool defined() const { return impl_ != nullptr; }
  const Shape &shape() const { return impl_->shape; }
  int dim(int i) const { return impl_->shape[i]; }
  int numel() const { return static_cast<int>(impl_->v.size()); }
  bool tracked() const { return impl_ && impl_->tracked; }

  double item() const;

  std::vector<double> &values() { return impl_->v; }
  const std::vector<double> &values() const { return impl_->v; }
  std::vector<double> &grad() { return impl_->g; }
  const std::vector<double> &grad() const { return impl_->g; }

  void zero_grad();

  const std::shared_ptr<TensorImpl> &impl() const { return impl_; }

 private:
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<TensorImpl> impl_;
};

// Dynamic (define-by-run) tape. Forward ops append one backward closure per
// recorded node; backward() replays them in exact reverse order. The tape
// owns nothing but the closures: clearing it drops all intermediate
// tensors while parameters, held by the model, persist.
class Tape {
 public:
  Tape() = default;
  ~Tape();

  Tape(const Tape &) = delete;
  Tape &operator=(const Tape &) = delete;

  void record(std::function<void()> backward_fn);
  size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  // Seeds d(loss)/d(loss) = 1 and runs the chain rule in reverse.
  // Gradients accumulate; callers zero parameter grads between steps.
  void backward(const Tensor &loss);

  static Tape *active();

 private:
  std::vector<std::function<void()>> nodes_;
};

// RAII activation; ops record onto the innermost active tape of this thread.
class TapeScope {
 public:
  explicit TapeScope(Tape &tape);
  ~TapeScope();
  TapeScope(const TapeScope &) = delete;
  TapeScope &operator=(const TapeScope &) = delete;

 private:
  Tape *prev_;
};

}  // namespace nn
}  // namespace rescore

#endif  // RESCORE_TENSOR_H_
