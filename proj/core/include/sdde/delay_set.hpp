#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>

namespace sdde {

/// Subset J of K = {0, ..., k-1} (zero-based delay indices). Printed
/// one-based, e.g. "{1,2}" or "{}".
class DelaySet {
 public:
  static constexpr int kMaxDelays = 32;

  DelaySet() = default;
  DelaySet(int k, std::uint32_t mask);

  static DelaySet none(int k) { return DelaySet(k, 0u); }
  static DelaySet all(int k);
  static DelaySet of(int k, std::initializer_list<int> indices);

  int k() const noexcept { return k_; }
  std::uint32_t mask() const noexcept { return mask_; }
  bool contains(int index) const noexcept { return (mask_ >> index) & 1u; }
  bool is_full() const noexcept;
  bool is_empty() const noexcept { return mask_ == 0u; }
  int size() const noexcept;

  DelaySet with(int index) const;
  DelaySet complement() const;

  std::string to_string() const;
  /// Parses "{1,2}" / "{}" (one-based).
  static DelaySet parse(int k, const std::string& text);

  friend bool operator==(const DelaySet& a, const DelaySet& b) noexcept {
    return a.k_ == b.k_ && a.mask_ == b.mask_;
  }
  friend bool operator<(const DelaySet& a, const DelaySet& b) noexcept {
    return a.k_ != b.k_ ? a.k_ < b.k_ : a.mask_ < b.mask_;
  }

 private:
  int k_ = 0;
  std::uint32_t mask_ = 0;
};

}  // namespace sdde
