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

#include "buda/types.hpp"

namespace buda {

struct FieldEstimateOptions {
    double search_max_vox = 8.0;
    double step_vox = 0.25;
    double smoothing_sigma_vox = 2.0;
};

struct FieldEstimate {
    RealMap df_hz;
    RealMap displacement_vox;
    double smoothing_sigma_vox = 0.0;
};

/// Displacement-search field estimator (TOPUP stand-in). Per voxel, a
/// brute-force search over d in [-search_max, search_max] aligns the blip-up
/// magnitude unwarped by d with the blip-down magnitude unwarped by -d over a
/// 5-voxel PE window (linear interpolation); ties break toward smaller |d|
/// and flat windows return 0. The winning map is Gaussian-smoothed, then
/// df_hz = displacement * bw exactly. Uses the first (coil,shot,echo) block
/// of each input.
FieldEstimate estimate_field(const VolumeSet& up, const VolumeSet& down, double bw_pe_hz_per_px,
                             const FieldEstimateOptions& opt = {});

RealMap field_to_hz(const RealMap& displacement_vox, double bw_pe_hz_per_px);

/// Global PE-axis shift of img relative to ref in voxels, by phase
/// correlation along ky. Exact for circular shifts, used to measure the
/// distortion displacement.
double estimate_pe_shift(const VolumeSet& img, const VolumeSet& ref);

/// Separable Gaussian smoothing with edge renormalization, sigma in voxels.
RealMap gaussian_smooth(const RealMap& m, double sigma_vox);

} // namespace buda
