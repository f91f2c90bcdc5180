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
#include <vector>

#include "buda/types.hpp"

namespace buda {

/// Ground-truth digital object: proton density, T2*, off-resonance field,
/// initial phase and tissue support. Outside the support t2star_ms is 0 and
/// all signal models return 0.
struct Phantom {
    GridDims dims;
    RealMap pd;        // arbitrary units, >= 0
    RealMap t2star_ms; // in [1, 300] inside support
    RealMap df_hz;     // off-resonance
    RealMap phi0;      // radians
    std::vector<std::uint8_t> support;

    struct Compartment {
        double cx, cy, cz;
        double ax, ay, az;
        double pd;
        double t2star_ms;
    };
    std::vector<Compartment> compartments; // generation metadata, outermost first
    std::array<double, 3> blob_center{-1.0, -1.0, -1.0};
};

enum class PhantomPreset { ellipsoids, uniform };

struct PhantomOptions {
    double df_poly_hz = 8.0;  // peak of the polynomial background field
    double df_blob_hz = 40.0; // peak of the Gaussian susceptibility blob
    double blob_sigma_frac = 0.18; // blob width as a fraction of min(dims)
    double phi0_amp_rad = 0.3;
    // smooth intra-compartment PD modulation (ellipsoids preset); the
    // displacement-search field estimator needs image texture to lock onto
    double pd_texture = 0.20;
    double uniform_t2star_ms = 60.0; // uniform preset tissue value
    int pe_margin_vox = 4; // zero margin along y so circular PE shifts stay off tissue
};

/// Deterministic in (dims, seed, preset, options). The ellipsoids preset needs
/// dims >= 8 on every axis.
Phantom make_phantom(GridDims dims, std::uint64_t seed, PhantomPreset preset,
                     const PhantomOptions& opt = {});

/// Smooth synthetic sensitivities, unit sum-of-squares at every voxel.
CoilSet make_coils(GridDims dims, int n_coils, std::uint64_t seed);

/// Per-echo complex images:
/// I_n = pd * exp(-te_n/t2star) * exp(i*(phi0 + 2*pi*df_hz*te_n*1e-3)).
/// Output is a (1 coil, 1 shot, n_echoes) image-space set.
VolumeSet echo_images(const Phantom& ph, const std::vector<double>& te_ms);

/// Random low-order polynomial phase maps, one per shot, each scaled to
/// max |phase| = amplitude_rad. Shot 0 is the zero reference map.
std::vector<RealMap> shot_phase_errors(GridDims dims, int n_shots, double amplitude_rad,
                                       std::uint64_t seed);

} // namespace buda
