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

#include <stdexcept>
#include <string>

namespace buda {

/// Bad configuration or invalid parameters (CLI exit code 2).
struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Required input file or directory is absent (CLI exit code 3).
struct missing_input_error : std::runtime_error {
    explicit missing_input_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Inconsistent, corrupt, or unsupported data (CLI exit code 4).
struct data_error : std::runtime_error {
    explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Filesystem failure while reading or writing (fatal).
struct io_error : std::runtime_error {
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace buda
