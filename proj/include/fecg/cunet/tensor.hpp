#pragma once

// Split real/imaginary tensors and the flat parameter store shared by every
// layer of the network.

#include <cstddef>
#include <string>
#include <vector>

#include "fecg/core.hpp"

namespace fecg::cunet {

/// (channels, F, T) grid stored as two planes-major real arrays.
struct ComplexTensor {
  int C = 0, H = 0, W = 0;
  std::vector<double> re, im;

  ComplexTensor() = default;
  ComplexTensor(int c, int h, int w)
      : C(c), H(h), W(w), re(static_cast<std::size_t>(c) * h * w, 0.0), im(static_cast<std::size_t>(c) * h * w, 0.0) {}

  [[nodiscard]] std::size_t plane() const { return static_cast<std::size_t>(H) * static_cast<std::size_t>(W); }
  [[nodiscard]] std::size_t size() const { return re.size(); }
  [[nodiscard]] std::size_t index(int c, int h, int w) const {
    return (static_cast<std::size_t>(c) * static_cast<std::size_t>(H) + static_cast<std::size_t>(h)) *
               static_cast<std::size_t>(W) +
           static_cast<std::size_t>(w);
  }
  [[nodiscard]] bool same_shape(const ComplexTensor& o) const { return C == o.C && H == o.H && W == o.W; }

  void validate() const {
    if (re.size() != im.size()) throw StructuralError("complex tensor parts differ in size");
    if (re.size() != static_cast<std::size_t>(C) * plane()) throw StructuralError("complex tensor size mismatch");
  }
};

struct ParamBlock {
  std::string name;
  std::vector<int> shape;
  std::size_t offset = 0;
  std::size_t count = 0;
};

/// All learnables in one contiguous vector.
struct ParamStore {
  std::vector<double> values;
  std::vector<ParamBlock> blocks;

  std::size_t add(const std::string& name, std::vector<int> shape, double fill = 0.0) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    ParamBlock b{name, std::move(shape), values.size(), n};
    values.resize(values.size() + n, fill);
    blocks.push_back(std::move(b));
    return blocks.back().offset;
  }
  [[nodiscard]] std::size_t size() const { return values.size(); }
  double* at(std::size_t offset) { return values.data() + offset; }
  [[nodiscard]] const double* at(std::size_t offset) const { return values.data() + offset; }
};

}  // namespace fecg::cunet
