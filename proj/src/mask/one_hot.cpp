// Copyright 2026 The HistoSynth Authors. All Rights Reserved.
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
#include "histosynth/mask/one_hot.h"

#include <stdexcept>
#include <string>

namespace histosynth::mask {

nn::Tensor<float> one_hot_encode(const core::LabelGrid& mask, int n_labels) {
  if (n_labels <= 0) throw std::invalid_argument("n_labels must be positive");
  nn::Tensor<float> out(n_labels, mask.height(), mask.width());
  const std::size_t plane = out.plane();
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const int c = static_cast<int>(mask.labels()[i]);
    if (c >= n_labels) {
      throw std::invalid_argument("label index " + std::to_string(c) + " is not below n_labels=" +
                                  std::to_string(n_labels));
    }
    out.data[static_cast<std::size_t>(c) * plane + i] = 1.0f;
  }
  return out;
}

core::LabelGrid one_hot_decode(const nn::Tensor<float>& stack, core::Resolution tag) {
  if (stack.channels > core::kNumLabels) {
    throw std::invalid_argument("stack has more channels than there are labels");
  }
  core::LabelGrid out(stack.width, stack.height, core::ClassId::kOther, tag);
  const std::size_t plane = stack.plane();
  for (std::size_t i = 0; i < plane; ++i) {
    int hot = -1;
    for (int c = 0; c < stack.channels; ++c) {
      const float v = stack.data[static_cast<std::size_t>(c) * plane + i];
      if (v == 1.0f) {
        if (hot >= 0) throw std::invalid_argument("pixel has more than one active channel");
        hot = c;
      } else if (v != 0.0f) {
        throw std::invalid_argument("one-hot entries must be 0 or 1");
      }
    }
    if (hot < 0) throw std::invalid_argument("pixel has no active channel");
    out.labels()[i] = static_cast<core::ClassId>(hot);
  }
  return out;
}

}  // namespace histosynth::mask
