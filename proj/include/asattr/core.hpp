// Copyright 2026 The asattr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace asattr {

inline constexpr const char* kVersion = "0.3.0";

/// Broad error classes. The CLI maps kUsage to exit code 2 and everything
/// else to exit code 1.
enum class ErrorKind {
  kUsage,       // bad arguments or preconditions a caller controls
  kData,        // malformed or empty input data
  kDegenerate,  // a quantity that must be nonzero is (numerically) zero
  kInfeasible,  // request exceeds a hard computational guard
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void Fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void Require(bool condition, const std::string& what) {
  if (!condition) Fail(ErrorKind::kUsage, what);
}

// Dense row-major matrix of doubles: one row per agent, one column per
// feature dimension.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    Require(data_.size() == rows_ * cols_,
            "FeatureMatrix: data size does not match rows*cols");
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double>& values() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  // Matrix whose every row equals `row`.
  static FeatureMatrix Broadcast(std::size_t rows,
                                 std::span<const double> row) {
    FeatureMatrix m(rows, row.size());
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy(row.begin(), row.end(), m.row(r).begin());
    }
    return m;
  }

  // Rows selected by `indices`, in that order.
  FeatureMatrix SelectRows(std::span<const std::size_t> indices) const {
    FeatureMatrix m(indices.size(), cols_);
    for (std::size_t k = 0; k < indices.size(); ++k) {
      Require(indices[k] < rows_, "SelectRows: index out of range");
      auto src = row(indices[k]);
      std::copy(src.begin(), src.end(), m.row(k).begin());
    }
    return m;
  }

  bool AllFinite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Pairwise (cascade) summation with a fixed split pattern. The result depends
// only on the input order, never on how work was scheduled.
inline double PairwiseSum(std::span<const double> v) {
  constexpr std::size_t kLeaf = 16;
  if (v.size() <= kLeaf) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return PairwiseSum(v.first(half)) + PairwiseSum(v.subspan(half));
}

inline double PairwiseSum(const std::vector<double>& v) {
  return PairwiseSum(std::span<const double>(v));
}

// Sum of `fn(i)` over i in [0, n) with the same fixed split as PairwiseSum,
// without materialising the terms.
template <typename Fn>
double PairwiseSumOf(std::size_t begin, std::size_t end, const Fn& fn) {
  constexpr std::size_t kLeaf = 16;
  if (end - begin <= kLeaf) {
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) s += fn(i);
    return s;
  }
  const std::size_t mid = begin + (end - begin) / 2;
  return PairwiseSumOf(begin, mid, fn) + PairwiseSumOf(mid, end, fn);
}

inline std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed for the `counter`-th independent stream under `root`. Used so that
// per-sample randomness does not depend on which thread draws it.
inline std::uint64_t DeriveSeed(std::uint64_t root, std::uint64_t counter) {
  return SplitMix64(SplitMix64(root) ^ SplitMix64(counter + 0x632be59bd9b4e019ULL));
}

// Runs fn(i) for i in [0, n) on up to `threads` workers using a static block
// partition. Callers must write results to per-index slots; no reduction
// happens here, so output is independent of the thread count.
inline void ParallelFor(std::size_t n, unsigned threads,
                        const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(threads, n);
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      const std::size_t lo = n * w / workers;
      const std::size_t hi = n * (w + 1) / workers;
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  pool.clear();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace asattr
