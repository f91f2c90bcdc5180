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

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "buda/types.hpp"

namespace buda {

/// Acquisition parameters. tr_ms, flip_deg and fov_mm are carried as metadata
/// only; the encoding model uses dims, the acceleration factors and the
/// phase-encode bandwidth.
struct Protocol {
    GridDims dims;
    std::array<double, 3> fov_mm{0.0, 0.0, 0.0};
    double tr_ms = 0.0;
    double flip_deg = 0.0;
    std::vector<double> te_ms;
    int r_inplane = 1;
    int r_z = 1;
    int n_shots = 2;
    int caipi_z_shift = 0;
    double bw_pe_hz_per_px = 0.0;

    int n_echoes() const { return static_cast<int>(te_ms.size()); }

    /// Effective acceleration r_inplane*r_z/n_shots as a reduced fraction.
    std::pair<long, long> r_effective_rational() const;
    double r_effective() const;
    std::string r_effective_string() const;

    void validate() const; // throws config_error
};

/// Per-shot sampling masks, blip polarities, CAIPI offsets and the shared
/// per-ky-line acquisition timing. Immutable after generation.
struct ShotPlan {
    GridDims dims;
    int n_shots = 0;
    int r_inplane = 1;
    int r_z = 1;
    int caipi_z_shift = 0;
    double t_line_s = 0.0; // seconds between successive ky lines
    int ky_center = 0;     // floor(n_pe/2), the echo-time line

    std::vector<int> polarity;  // +1 blip-up, -1 blip-down, acquisition order
    std::vector<int> ky_offset; // in [0, r_inplane)
    std::vector<int> kz_base;   // in [0, r_z)
    // mask[t][ky*nz + kz], shared by all echoes
    std::vector<std::vector<std::uint8_t>> mask;

    bool acquired(int shot, int ky, int kz) const {
        return mask[static_cast<std::size_t>(shot)]
                   [static_cast<std::size_t>(ky) * dims.nz + kz] != 0;
    }

    /// ky values with at least one acquired kz, ascending.
    std::vector<int> acquired_ky_lines(int shot) const;

    Index samples_per_shot(int shot) const; // per echo, summed over (ky,kz)

    /// Relative acquisition time of a ky line: (ky - ky_center) * t_line.
    double line_time(int ky) const;

    ShotPlan subset(const std::vector<int>& shot_indices) const;
    std::vector<int> shots_with_polarity(int pol) const;

    /// Masks as a (1, n_pe, n_z) volume set with one block per (shot, echo),
    /// for inspection and export.
    VolumeSet mask_volume(int n_echoes) const;
};

/// Build the blip-up/down CAIPI plan. Shots alternate polarity in acquisition
/// order (first shot blip-up); each polarity group tiles ky round-robin; the
/// CAIPI kz offset advances by caipi_z_shift per acquired ky line on top of a
/// per-shot staggered kz base. Requires n_pe % r_inplane == 0 and
/// n_z % r_z == 0.
ShotPlan generate_shot_plan(const Protocol& p);

} // namespace buda
