#pragma once

#include <array>

namespace alle::detail {

struct IrisRow {
  std::array<double, 4> features;
  int label;
};

extern const std::array<IrisRow, 150> kIrisTable;

}  // namespace alle::detail
