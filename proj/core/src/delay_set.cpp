#include "sdde/delay_set.hpp"

#include <bit>
#include <cctype>

#include "sdde/error.hpp"

namespace sdde {

DelaySet::DelaySet(int k, std::uint32_t mask) : k_(k), mask_(mask) {
  if (k < 0 || k > kMaxDelays) throw Error(ErrorCode::invalid_argument, "delay count out of range");
  if (k < kMaxDelays && (mask >> k) != 0u) {
    throw Error(ErrorCode::invalid_argument, "delay set contains indices >= k");
  }
}

DelaySet DelaySet::all(int k) {
  return DelaySet(k, k == kMaxDelays ? ~0u : ((1u << k) - 1u));
}

DelaySet DelaySet::of(int k, std::initializer_list<int> indices) {
  DelaySet s = none(k);
  for (int i : indices) s = s.with(i);
  return s;
}

bool DelaySet::is_full() const noexcept { return *this == all(k_); }

int DelaySet::size() const noexcept { return std::popcount(mask_); }

DelaySet DelaySet::with(int index) const {
  if (index < 0 || index >= k_) throw Error(ErrorCode::domain, "delay index out of range");
  return DelaySet(k_, mask_ | (1u << index));
}

DelaySet DelaySet::complement() const { return DelaySet(k_, all(k_).mask_ & ~mask_); }

std::string DelaySet::to_string() const {
  std::string out = "{";
  bool first = true;
  for (int i = 0; i < k_; ++i) {
    if (!contains(i)) continue;
    if (!first) out += ',';
    out += std::to_string(i + 1);
    first = false;
  }
  return out + "}";
}

DelaySet DelaySet::parse(int k, const std::string& text) {
  DelaySet s = none(k);
  std::size_t i = 0;
  auto skip = [&] {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  };
  skip();
  if (i >= text.size() || text[i] != '{') throw Error(ErrorCode::config, "delay set must start with '{'");
  ++i;
  skip();
  while (i < text.size() && text[i] != '}') {
    std::size_t used = 0;
    int one_based = 0;
    try {
      one_based = std::stoi(text.substr(i), &used);
    } catch (const std::exception&) {
      throw Error(ErrorCode::config, "bad delay set '" + text + "'");
    }
    s = s.with(one_based - 1);
    i += used;
    skip();
    if (i < text.size() && text[i] == ',') ++i;
    skip();
  }
  if (i >= text.size()) throw Error(ErrorCode::config, "delay set missing '}'");
  return s;
}

}  // namespace sdde
