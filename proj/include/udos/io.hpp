/* Copyright 2026 The UDOS Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "udos/tensor.hpp"

namespace udos::io {

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// 64-bit FNV-1a, rendered as 16 lowercase hex digits by fnv1a_hex.
std::uint64_t fnv1a(std::string_view bytes);
std::string fnv1a_hex(std::string_view bytes);

/// Binary PPM (P6, maxval 255). Values are rounded and clamped to [0, 255].
std::string encode_ppm(const Image& image);
Image decode_ppm(std::string_view bytes, const std::string& origin = "<memory>");

/// Shortest round-trip decimal form of a double.
std::string format_double(double value);

/// Lowercase, spaces replaced by underscores; used for per-class directories.
std::string slug(std::string_view name);

}  // namespace udos::io
