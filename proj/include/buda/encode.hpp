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

#include <cstdint>
#include <string>
#include <vector>

#include "buda/phantom.hpp"
#include "buda/protocol.hpp"
#include "buda/types.hpp"

namespace buda {

/// Everything the multi-shot encoding operator needs: sampling plan, coil
/// maps, and the off-resonance field it models (ground truth in simulation,
/// estimated in reconstruction).
struct EncodingContext {
    ShotPlan plan;
    CoilSet coils;
    RealMap field_hz;

    EncodingContext(ShotPlan p, CoilSet c, RealMap f);
    EncodingContext restrict_shots(const std::vector<int>& shot_indices) const;
    GridDims dims() const { return plan.dims; }
};

/// Pull out the given shot blocks of a (C, S, N) set, preserving order.
VolumeSet select_shots(const VolumeSet& v, const std::vector<int>& shot_indices);

/// Forward model: per shot t, echo n, coil c and acquired ky line,
/// sample(k) = DFT3{ C_c * I_{t,n} * exp(i * s_t * 2*pi * field * tau(ky)) } on the
/// masked (ky, kz) locations; everything unacquired is exactly zero.
/// images: (1, S, N) image space. Returns (C, S, N) k-space.
VolumeSet encode_forward(const EncodingContext& ctx, const VolumeSet& images);

/// Exact adjoint under the standard complex inner product.
/// kspace: (C, S, N). Returns (1, S, N) image space.
VolumeSet encode_adjoint(const EncodingContext& ctx, const VolumeSet& kspace);

struct AcquisitionOptions {
    double noise_sigma = 0.0; // std dev per real channel, acquired samples only
    std::uint64_t noise_seed = 0;
    bool realistic_decay = false; // extra exp(-tau(ky)/T2*) during the train
};

/// Scanner stand-in: builds per-shot echo images (with optional shot phase
/// errors), applies the ground-truth-field forward model and adds complex
/// Gaussian noise on acquired samples.
VolumeSet simulate_acquisition(const Phantom& ph, const CoilSet& coils, const ShotPlan& plan,
                               const std::vector<double>& te_ms,
                               const std::vector<RealMap>& shot_phases,
                               const AcquisitionOptions& opt = {});

struct CgOptions {
    int max_iter = 50;
    double tol = 1e-6; // relative residual of the normal equations
};

struct CgResult {
    VolumeSet image;                   // (1, 1, N) image space
    std::vector<int> iterations;       // per echo
    std::vector<double> rel_residual;  // per echo, final
    bool converged = true;
    bool diverged_warning = false;
};

/// Conjugate gradients on A^H A x = A^H d with one shared image per echo over
/// the shots present in ctx. With a zero field this is classic SENSE; the
/// caller restricts ctx (and d) to one polarity group or a single shot.
CgResult cg_sense(const EncodingContext& ctx, const VolumeSet& d, const CgOptions& opt = {});

/// Joint least squares over all shots with polarity-signed field phases and a
/// single shared image per echo.
CgResult hybrid_space_sense(const EncodingContext& ctx, const VolumeSet& d,
                            const CgOptions& opt = {});

/// TOPUP-style baseline: unwarp the blip-up and blip-down magnitudes along PE
/// by -/+ field/bw voxels (circular linear interpolation) and average.
/// Inputs and output are (1, 1, N) sets; the output holds real magnitudes.
VolumeSet unwarp_and_average(const VolumeSet& up, const VolumeSet& down, const RealMap& field_hz,
                             double bw_pe_hz_per_px);

} // namespace buda
