// Copyright 2026 The BNO Authors.
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

// BNO1 checkpoint files.
//
//   "BNO1" | u16 version | u32 metadata length | metadata (UTF-8 JSON)
//   then, until end of file, one blob per tensor:
//   u32 name length | name | u8 dtype (1 = f32, 2 = f64) | u8 rank |
//   rank x u64 dims | little-endian IEEE-754 payload
//
// Integers are little endian. The metadata describes the architecture, the
// window spec, normalization statistics, seed and training resolution.

#ifndef BNO_CHECKPOINT_HPP_
#define BNO_CHECKPOINT_HPP_

#include "bno/model.hpp"

#include <filesystem>
#include <variant>

namespace bno::model {

inline constexpr std::uint16_t kCheckpointVersion = 1;

using AnyModel = std::variant<BnoModel, CnnBaseline>;

void save_checkpoint(const BnoModel& model, const std::filesystem::path& path);
void save_checkpoint(const CnnBaseline& model, const std::filesystem::path& path);

AnyModel load_any_checkpoint(const std::filesystem::path& path);
/// Throws InvalidArgument when the file holds the other model kind.
BnoModel load_checkpoint(const std::filesystem::path& path);
CnnBaseline load_cnn_checkpoint(const std::filesystem::path& path);

}  // namespace bno::model

#endif  // BNO_CHECKPOINT_HPP_
