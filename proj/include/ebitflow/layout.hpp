#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ebitflow/errors.hpp"

namespace ebitflow {

using Index = Eigen::Index;

// Ordered set of labeled subsystems. The first label is the most significant
// tensor factor: a basis index decomposes big endian, flat = sum_k d_k * stride_k
// with stride_k the product of the dimensions after position k.
//
// At most 6 subsystems, each of dimension >= 2, labels distinct and nonempty.
class SubsystemLayout {
 public:
  static constexpr Index kMaxSubsystems = 6;

  SubsystemLayout(std::vector<std::string> labels, std::vector<Index> dims)
      : labels_(std::move(labels)), dims_(std::move(dims)) {
    if (labels_.empty() || labels_.size() != dims_.size()) {
      throw DimensionMismatch("layout needs one dimension per label");
    }
    if (static_cast<Index>(labels_.size()) > kMaxSubsystems) {
      throw DimensionMismatch("layout capped at 6 subsystems");
    }
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (labels_[i].empty()) throw UnknownLabel("empty label");
      if (dims_[i] < 2) throw DimensionMismatch("subsystem dimension must be >= 2");
      for (std::size_t j = i + 1; j < labels_.size(); ++j) {
        if (labels_[i] == labels_[j]) {
          throw UnknownLabel("duplicate label: " + labels_[i]);
        }
      }
    }
    strides_.assign(labels_.size(), 1);
    for (std::size_t k = labels_.size(); k-- > 1;) {
      strides_[k - 1] = strides_[k] * dims_[k];
    }
  }

  // All subsystems are qubits.
  static SubsystemLayout qubits(std::vector<std::string> labels) {
    std::vector<Index> dims(labels.size(), 2);
    return SubsystemLayout(std::move(labels), std::move(dims));
  }

  Index size() const { return static_cast<Index>(labels_.size()); }

  Index total_dim() const { return strides_.front() * dims_.front(); }

  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<Index>& dims() const { return dims_; }

  bool has(const std::string& label) const {
    return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
  }

  Index position(const std::string& label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) throw UnknownLabel("unknown label: " + label);
    return static_cast<Index>(it - labels_.begin());
  }

  Index dim(const std::string& label) const { return dims_[position(label)]; }

  Index stride(Index pos) const { return strides_[pos]; }

  // Big-endian digit decomposition of a flat basis index.
  std::vector<Index> unpack(Index flat) const {
    std::vector<Index> digits(labels_.size());
    for (std::size_t k = 0; k < labels_.size(); ++k) {
      digits[k] = flat / strides_[k];
      flat %= strides_[k];
    }
    return digits;
  }

  Index pack(const std::vector<Index>& digits) const {
    if (digits.size() != labels_.size()) {
      throw DimensionMismatch("digit count does not match layout");
    }
    Index flat = 0;
    for (std::size_t k = 0; k < digits.size(); ++k) {
      if (digits[k] < 0 || digits[k] >= dims_[k]) {
        throw DimensionMismatch("digit out of range");
      }
      flat += digits[k] * strides_[k];
    }
    return flat;
  }

  // Subset of labels reordered to match this layout. Throws on unknown or
  // duplicate entries.
  std::vector<std::string> canonical_subset(
      const std::vector<std::string>& subset) const {
    std::vector<bool> seen(labels_.size(), false);
    for (const auto& l : subset) {
      Index p = position(l);
      if (seen[p]) throw UnknownLabel("label listed twice: " + l);
      seen[p] = true;
    }
    std::vector<std::string> out;
    for (std::size_t k = 0; k < labels_.size(); ++k) {
      if (seen[k]) out.push_back(labels_[k]);
    }
    return out;
  }

  std::vector<std::string> complement(
      const std::vector<std::string>& subset) const {
    std::vector<bool> seen(labels_.size(), false);
    for (const auto& l : subset) seen[position(l)] = true;
    std::vector<std::string> out;
    for (std::size_t k = 0; k < labels_.size(); ++k) {
      if (!seen[k]) out.push_back(labels_[k]);
    }
    return out;
  }

  // Layout restricted to a label subset, keeping this layout's order.
  SubsystemLayout sublayout(const std::vector<std::string>& subset) const {
    auto canon = canonical_subset(subset);
    if (canon.empty()) throw DimensionMismatch("empty sublayout");
    std::vector<Index> d;
    d.reserve(canon.size());
    for (const auto& l : canon) d.push_back(dim(l));
    return SubsystemLayout(canon, d);
  }

  // Same labels in a new order.
  SubsystemLayout permuted(const std::vector<std::string>& new_order) const {
    if (new_order.size() != labels_.size()) {
      throw InvalidPermutation("permutation must list every label once");
    }
    auto canon = canonical_subset(new_order);  // throws on unknown/duplicate
    (void)canon;
    std::vector<Index> d;
    d.reserve(new_order.size());
    for (const auto& l : new_order) d.push_back(dim(l));
    return SubsystemLayout(new_order, d);
  }

  // Appends one subsystem as the least significant factor.
  SubsystemLayout extended(const std::string& label, Index dim) const {
    auto ls = labels_;
    auto ds = dims_;
    ls.push_back(label);
    ds.push_back(dim);
    return SubsystemLayout(std::move(ls), std::move(ds));
  }

  bool operator==(const SubsystemLayout& o) const {
    return labels_ == o.labels_ && dims_ == o.dims_;
  }
  bool operator!=(const SubsystemLayout& o) const { return !(*this == o); }

 private:
  std::vector<std::string> labels_;
  std::vector<Index> dims_;
  std::vector<Index> strides_;
};

// Two disjoint nonempty label sets. A bipartition is validated against a
// concrete layout at the point of use; both sides are then reordered to the
// layout's own order.
class Bipartition {
 public:
  Bipartition(std::vector<std::string> left, std::vector<std::string> right)
      : left_(std::move(left)), right_(std::move(right)) {
    if (left_.empty() || right_.empty()) {
      throw InvalidBipartition("both sides of a cut must be nonempty");
    }
    for (const auto& l : left_) {
      if (std::find(right_.begin(), right_.end(), l) != right_.end()) {
        throw InvalidBipartition("label on both sides of the cut: " + l);
      }
    }
  }

  // Cut with the given left side, right side the layout complement.
  static Bipartition split(const SubsystemLayout& layout,
                           std::vector<std::string> left) {
    auto right = layout.complement(left);
    return Bipartition(layout.canonical_subset(left), std::move(right));
  }

  const std::vector<std::string>& left() const { return left_; }
  const std::vector<std::string>& right() const { return right_; }

  void validate(const SubsystemLayout& layout) const {
    if (static_cast<Index>(left_.size() + right_.size()) != layout.size()) {
      throw InvalidBipartition("cut does not cover the layout");
    }
    for (const auto& l : left_) layout.position(l);
    for (const auto& l : right_) layout.position(l);
    // disjointness holds by construction, cover follows from the size check
  }

  Index left_dim(const SubsystemLayout& layout) const {
    Index d = 1;
    for (const auto& l : left_) d *= layout.dim(l);
    return d;
  }

  Index right_dim(const SubsystemLayout& layout) const {
    Index d = 1;
    for (const auto& l : right_) d *= layout.dim(l);
    return d;
  }

  bool operator==(const Bipartition& o) const {
    return left_ == o.left_ && right_ == o.right_;
  }

 private:
  std::vector<std::string> left_;
  std::vector<std::string> right_;
};

}  // namespace ebitflow
