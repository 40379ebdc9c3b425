#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "g4attn/common.hpp"
#include "g4attn/dna.hpp"

namespace g4attn {

// L x 4 one-hot encoding, channel order (A, T, C, G); N is the zero row.
struct OneHotMatrix {
  size_t length = 0;
  std::vector<double> data;  // row-major, 4 channels per row

  double at(size_t row, size_t channel) const { return data[row * 4 + channel]; }
  double& at(size_t row, size_t channel) { return data[row * 4 + channel]; }
};

inline int one_hot_channel(char base) {
  switch (base) {
    case 'A': return 0;
    case 'T': return 1;
    case 'C': return 2;
    case 'G': return 3;
    default: return -1;  // N
  }
}

// Fits `bases` into a window of exactly `target_length` rows. Short inputs
// are centered between zero rows (odd slack leaves the extra row on the
// right); long inputs are trimmed symmetrically (odd excess trims one more
// base from the right).
inline OneHotMatrix encode_one_hot(std::string_view bases, size_t target_length) {
  if (target_length == 0) throw ContractError("encode_one_hot: target_length must be positive");
  std::string norm;
  norm.reserve(bases.size());
  for (const char c : bases) {
    char b;
    if (!normalize_base(c, b))
      throw DataError(std::string("encode_one_hot: invalid base character '") + c + "'");
    norm.push_back(b);
  }

  size_t src_offset = 0;
  size_t copy_len = norm.size();
  size_t dst_offset = 0;
  if (copy_len > target_length) {
    const size_t excess = copy_len - target_length;
    src_offset = excess / 2;
    copy_len = target_length;
  } else {
    dst_offset = (target_length - copy_len) / 2;
  }

  OneHotMatrix m;
  m.length = target_length;
  m.data.assign(target_length * 4, 0.0);
  for (size_t i = 0; i < copy_len; ++i) {
    const int ch = one_hot_channel(norm[src_offset + i]);
    if (ch >= 0) m.at(dst_offset + i, static_cast<size_t>(ch)) = 1.0;
  }
  return m;
}

}  // namespace g4attn
