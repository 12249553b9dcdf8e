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
#include "histosynth/gan/model.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "histosynth/mask/one_hot.h"

namespace histosynth::gan {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are written in native little-endian order");

constexpr char kMagic[8] = {'H', 'S', 'G', 'A', 'N', 'C', 'K', 'P'};

template <typename Int>
void AppendInt(std::string& out, Int v) {
  char buf[sizeof(Int)];
  std::memcpy(buf, &v, sizeof(Int));
  out.append(buf, sizeof(Int));
}

template <typename Int>
Int ReadInt(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(Int) > in.size()) throw std::runtime_error("checkpoint truncated");
  Int v;
  std::memcpy(&v, in.data() + pos, sizeof(Int));
  pos += sizeof(Int);
  return v;
}

void AppendFloats(std::string& out, const std::vector<float>& v) {
  out.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(float));
}

void ReadFloats(const std::string& in, std::size_t& pos, std::vector<float>& v) {
  const std::size_t bytes = v.size() * sizeof(float);
  if (pos + bytes > in.size()) throw std::runtime_error("checkpoint truncated");
  std::memcpy(v.data(), in.data() + pos, bytes);
  pos += bytes;
}

nlohmann::json TensorTable(const nn::ParameterList<float>& params) {
  nlohmann::json table = nlohmann::json::array();
  for (const auto* p : params) table.push_back({{"name", p->name}, {"shape", p->shape}});
  return table;
}

}  // namespace

GanModel::GanModel(const GeneratorConfig& g, const DiscriminatorConfig& d, const TrainConfig& train)
    : g_config_(g), d_config_(d), train_config_(train) {
  train.Validate();
  generator_ = std::make_unique<Generator<float>>(g);
  discriminator_ =
      std::make_unique<MultiscaleDiscriminator<float>>(g.input_labels + g.output_channels, d);
  std::mt19937_64 rng(train.seed);
  nn::InitNormal(generator_->Parameters(), train.init_std, rng);
  nn::InitNormal(discriminator_->Parameters(), train.init_std, rng);
  const nn::AdamOptions adam{train.beta1, train.beta2, 1e-8};
  g_opt_ = std::make_unique<nn::Adam<float>>(generator_->Parameters(), adam);
  d_opt_ = std::make_unique<nn::Adam<float>>(discriminator_->Parameters(), adam);
}

nn::Tensor<float> generate(const GanModel& model, const nn::Tensor<float>& label_stack) {
  return model.generator().Infer(label_stack);
}

DiscriminatorOutput<float> discriminate(const GanModel& model, const nn::Tensor<float>& label_stack,
                                        const nn::Tensor<float>& image) {
  if (label_stack.height != image.height || label_stack.width != image.width) {
    throw std::invalid_argument("label stack and image differ in size");
  }
  if (image.channels != model.generator_config().output_channels ||
      label_stack.channels != model.generator_config().input_labels) {
    throw std::invalid_argument("unexpected channel count for discriminate()");
  }
  return model.discriminator().Infer(nn::Concat(label_stack, image));
}

nn::Tensor<float> ToModelSpace(const core::RgbImage& image) {
  nn::Tensor<float> t(3, image.height(), image.width());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < 3; ++c) t.at(c, y, x) = image.at(x, y, c) / 127.5f - 1.0f;
    }
  }
  return t;
}

core::RgbImage ToRgbImage(const nn::Tensor<float>& image) {
  if (image.channels != 3) throw std::invalid_argument("expected a 3-channel tensor");
  core::RgbImage out(image.width, image.height);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      std::array<std::uint8_t, 3> rgb{};
      for (int c = 0; c < 3; ++c) {
        const float v = std::lround((image.at(c, y, x) + 1.0f) * 127.5f);
        rgb[static_cast<std::size_t>(c)] = static_cast<std::uint8_t>(std::clamp(v, 0.0f, 255.0f));
      }
      out.set(x, y, rgb);
    }
  }
  return out;
}

core::RgbImage SynthesizeImage(const GanModel& model, const core::LabelGrid& mask) {
  return ToRgbImage(generate(model, mask::one_hot_encode(mask, model.generator_config().input_labels)));
}

std::string SerializeCheckpoint(GanModel& model) {
  const auto g_params = model.GeneratorParameters();
  const auto d_params = model.DiscriminatorParameters();
  nlohmann::json header;
  header["generator"] = model.generator_config();
  header["discriminator"] = model.discriminator_config();
  header["train"] = model.train_config();
  header["epoch"] = model.epoch;
  header["step_in_epoch"] = model.step_in_epoch;
  header["global_step"] = model.global_step;
  header["g_adam_step"] = model.generator_optimizer().step();
  header["d_adam_step"] = model.discriminator_optimizer().step();
  header["generator_tensors"] = TensorTable(g_params);
  header["discriminator_tensors"] = TensorTable(d_params);
  const std::string text = header.dump();

  std::string out(kMagic, sizeof(kMagic));
  AppendInt<std::uint32_t>(out, kCheckpointVersion);
  AppendInt<std::uint64_t>(out, text.size());
  out += text;
  for (const auto* p : g_params) AppendFloats(out, p->value);
  for (const auto* p : d_params) AppendFloats(out, p->value);
  for (auto* opt : {&model.generator_optimizer(), &model.discriminator_optimizer()}) {
    for (const auto& m : opt->first_moments()) AppendFloats(out, m);
    for (const auto& v : opt->second_moments()) AppendFloats(out, v);
  }
  return out;
}

namespace {

nlohmann::json ParseHeader(const std::string& bytes, std::size_t& pos) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("not a GAN checkpoint (bad magic)");
  }
  pos = sizeof(kMagic);
  const auto version = ReadInt<std::uint32_t>(bytes, pos);
  if (version != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  const auto len = ReadInt<std::uint64_t>(bytes, pos);
  if (pos + len > bytes.size()) throw std::runtime_error("checkpoint truncated");
  nlohmann::json header = nlohmann::json::parse(bytes.substr(pos, len));
  pos += len;
  return header;
}

void LoadBody(GanModel& model, const nlohmann::json& header, const std::string& bytes,
              std::size_t pos) {
  const auto g_params = model.GeneratorParameters();
  const auto d_params = model.DiscriminatorParameters();
  if (header.at("generator_tensors") != TensorTable(g_params) ||
      header.at("discriminator_tensors") != TensorTable(d_params)) {
    throw std::runtime_error("checkpoint tensor table does not match the model architecture");
  }
  for (auto* p : g_params) ReadFloats(bytes, pos, p->value);
  for (auto* p : d_params) ReadFloats(bytes, pos, p->value);
  for (auto* opt : {&model.generator_optimizer(), &model.discriminator_optimizer()}) {
    for (auto& m : opt->first_moments()) ReadFloats(bytes, pos, m);
    for (auto& v : opt->second_moments()) ReadFloats(bytes, pos, v);
  }
  if (pos != bytes.size()) throw std::runtime_error("trailing bytes in checkpoint");
  model.epoch = header.at("epoch").get<int>();
  model.step_in_epoch = header.at("step_in_epoch").get<int>();
  model.global_step = header.at("global_step").get<std::int64_t>();
  model.generator_optimizer().set_step(header.at("g_adam_step").get<std::int64_t>());
  model.discriminator_optimizer().set_step(header.at("d_adam_step").get<std::int64_t>());
  for (auto* p : g_params) p->ZeroGrad();
  for (auto* p : d_params) p->ZeroGrad();
}

}  // namespace

std::unique_ptr<GanModel> DeserializeCheckpoint(const std::string& bytes) {
  std::size_t pos = 0;
  const nlohmann::json header = ParseHeader(bytes, pos);
  auto model = std::make_unique<GanModel>(header.at("generator").get<GeneratorConfig>(),
                                          header.at("discriminator").get<DiscriminatorConfig>(),
                                          header.at("train").get<TrainConfig>());
  LoadBody(*model, header, bytes, pos);
  return model;
}

void RestoreCheckpoint(GanModel& model, const std::string& bytes) {
  std::size_t pos = 0;
  const nlohmann::json header = ParseHeader(bytes, pos);
  LoadBody(model, header, bytes, pos);
}

void SaveCheckpoint(GanModel& model, const std::filesystem::path& path) {
  const std::string bytes = SerializeCheckpoint(model);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  std::filesystem::rename(tmp, path);
}

std::unique_ptr<GanModel> LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return DeserializeCheckpoint(buffer.str());
}

}  // namespace histosynth::gan
