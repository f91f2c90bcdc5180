/*
 * budasim : blip-up/down 3D-EPI simulation and reconstruction
 *
 * Copyright 2026 the budasim developers
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <string>

#include "buda/types.hpp"

namespace buda {

// Volumes are stored as a sidecar text header plus a raw little-endian data
// file: <stem>.hdr + <stem>.c64 for complex sets (interleaved real/imag
// doubles, x-fastest order) and <stem>.hdr + <stem>.f64 for real maps.

void write_volume(const VolumeSet& v, const std::string& stem);
VolumeSet read_volume(const std::string& stem);

void write_real_map(const RealMap& m, const std::string& stem);
RealMap read_real_map(const std::string& stem);

/// Central-z magnitude slice as a binary PGM (P5), max-normalized to 255.
void write_pgm_slice(const VolumeSet& v, int coil, int shot, int echo, const std::string& path);
void write_pgm_slice(const RealMap& m, const std::string& path);

bool file_exists(const std::string& path);
void ensure_directory(const std::string& dir);

} // namespace buda
