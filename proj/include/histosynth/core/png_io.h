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
#pragma once

#include <filesystem>

#include "histosynth/core/label_grid.h"

namespace histosynth::core {

/// 8-bit RGB PNG. Grayscale and alpha inputs are converted on read.
RgbImage ReadRgbPng(const std::filesystem::path& path);
void WriteRgbPng(const std::filesystem::path& path, const RgbImage& image);

/// Single-channel indexed PNG whose palette index is the ClassId value.
/// Plain 8-bit grayscale files holding indices 0..6 are accepted on read.
/// The resolution tag is inferred from the labels present.
LabelGrid ReadMaskPng(const std::filesystem::path& path);
void WriteMaskPng(const std::filesystem::path& path, const LabelGrid& mask);

/// Display colour of each palette entry.
std::array<std::uint8_t, 3> PaletteColor(ClassId id);

}  // namespace histosynth::core
