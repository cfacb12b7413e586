// SPDX-License-Identifier: Apache-2.0
#ifndef FAP_PARTITION_HPP
#define FAP_PARTITION_HPP

#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace fap {

/// Split of N_t streams into S groups of N_s. Stream j = s*N_s + i (group s,
/// local index i) is carried by subchannel ell[j]. Indices are zero-based.
class StreamPartition {
 public:
  /// Single stream on a single subchannel.
  StreamPartition() : ell_{0}, group_size_(1) {}

  StreamPartition(std::vector<int> ell, int group_size) : ell_(std::move(ell)), group_size_(group_size) {
    const int n = static_cast<int>(ell_.size());
    if (group_size_ < 1 || n == 0 || n % group_size_ != 0)
      throw std::invalid_argument("group size " + std::to_string(group_size_) + " does not divide N_t = " +
                                  std::to_string(n));
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    for (int v : ell_) {
      if (v < 0 || v >= n || seen[static_cast<std::size_t>(v)])
        throw std::invalid_argument("ell is not a permutation of 0..N_t-1");
      seen[static_cast<std::size_t>(v)] = true;
    }
  }

  static StreamPartition identity(int n_t, int group_size) {
    std::vector<int> ell(static_cast<std::size_t>(n_t));
    std::iota(ell.begin(), ell.end(), 0);
    return StreamPartition(std::move(ell), group_size);
  }

  int n_t() const { return static_cast<int>(ell_.size()); }
  int group_size() const { return group_size_; }
  int group_count() const { return n_t() / group_size_; }
  const std::vector<int>& ell() const { return ell_; }

  /// Subchannel index of local stream i in group s.
  int index(int s, int i) const { return ell_[static_cast<std::size_t>(s * group_size_ + i)]; }

  std::vector<int> group_indices(int s) const {
    return {ell_.begin() + s * group_size_, ell_.begin() + (s + 1) * group_size_};
  }

  bool operator==(const StreamPartition&) const = default;

 private:
  std::vector<int> ell_;
  int group_size_;
};

}  // namespace fap

#endif  // FAP_PARTITION_HPP
