// Copyright 2026 The BNO Authors.
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

#ifndef BNO_TENSOR_HPP_
#define BNO_TENSOR_HPP_

#include "bno/error.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace bno {

using Index = Eigen::Index;

/// Dense (space, time, channel) array; channel is the fastest axis.
template <class T>
class Tensor3 {
 public:
  using value_type = T;

  Tensor3() = default;
  Tensor3(Index n_space, Index n_time, Index n_chan, T fill = T(0))
      : n_space_(n_space), n_time_(n_time), n_chan_(n_chan),
        data_(static_cast<size_t>(n_space * n_time * n_chan), fill) {}

  Index n_space() const { return n_space_; }
  Index n_time() const { return n_time_; }
  Index n_chan() const { return n_chan_; }
  Index size() const { return static_cast<Index>(data_.size()); }

  T& operator()(Index s, Index t, Index c) {
    return data_[static_cast<size_t>((s * n_time_ + t) * n_chan_ + c)];
  }
  const T& operator()(Index s, Index t, Index c) const {
    return data_[static_cast<size_t>((s * n_time_ + t) * n_chan_ + c)];
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

  bool same_shape(const Tensor3& o) const {
    return n_space_ == o.n_space_ && n_time_ == o.n_time_ && n_chan_ == o.n_chan_;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](T v) { return std::isfinite(v); });
  }

  T max_abs() const {
    T m = T(0);
    for (T v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  template <class U>
  Tensor3<U> cast() const {
    Tensor3<U> out(n_space_, n_time_, n_chan_);
    std::transform(data_.begin(), data_.end(), out.values().begin(),
                   [](T v) { return static_cast<U>(v); });
    return out;
  }

  std::string shape_string() const {
    return "(" + std::to_string(n_space_) + "," + std::to_string(n_time_) + "," +
           std::to_string(n_chan_) + ")";
  }

  friend bool operator==(const Tensor3& a, const Tensor3& b) {
    return a.same_shape(b) && a.data_ == b.data_;
  }

 private:
  Index n_space_ = 0;
  Index n_time_ = 0;
  Index n_chan_ = 0;
  std::vector<T> data_;
};

template <class T>
void require_same_shape(const Tensor3<T>& a, const Tensor3<T>& b,
                        const char* where) {
  if (!a.same_shape(b)) {
    throw Error(ErrorKind::ShapeMismatch, std::string(where) + ": " +
                                              a.shape_string() + " vs " +
                                              b.shape_string());
  }
}

}  // namespace bno

#endif  // BNO_TENSOR_HPP_
