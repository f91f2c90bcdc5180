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

#include <Eigen/Core>
#include <vector>

#include "buda/encode.hpp"
#include "buda/fft.hpp"
#include "buda/types.hpp"

namespace buda {

struct HankelSpec;
struct RankPolicy;

/// Naive single-threaded reference implementations. They share no code with
/// the production kernels: plain loops, direct formulas, full decompositions.
/// The unit and acceptance suites use them as independent oracles and the
/// bench tool compares them against the OpenMP kernels.
namespace serial {

/// Direct O(N^2) centered orthonormal DFT of one block. Small sizes only.
void dft3_centered_naive(const Cplx* in, Cplx* out, GridDims dims, FftDirection dir);

/// Triple-loop block-Hankel lift: row per window origin (x-fastest), column
/// per (offset, shot, echo) with the m^3 offsets fastest, then shots, then echoes.
Eigen::MatrixXcd hankel_lift_naive(const VolumeSet& ksp, const HankelSpec& spec);

/// Multiplicity-normalized adjoint of hankel_lift_naive.
VolumeSet hankel_unlift_naive(const Eigen::MatrixXcd& m, const HankelSpec& spec);

/// Best rank-k (or thresholded) approximation through a full Jacobi SVD.
Eigen::MatrixXcd rank_project_naive(const Eigen::MatrixXcd& m, const RankPolicy& policy);

/// Direct per-window evaluation of mean local SSIM, Gaussian window 11,
/// sigma 1.5, K1 = 0.01, K2 = 0.03, slicewise over z and averaged.
/// Inputs are already normalized magnitude slabs.
double ssim_direct(const std::vector<double>& x, const std::vector<double>& ref, GridDims dims);

/// Per-line-definition encoding operator: for every acquired ky line,
/// modulate the coil image by the field phase of that line, run a full
/// centered 3D DFT and sample the masked locations. One thread, one FFT per
/// (coil, line). The production operator groups work per ky line in hybrid
/// space and must match these to 1e-12.
VolumeSet encode_forward_naive(const EncodingContext& ctx, const VolumeSet& images);
VolumeSet encode_adjoint_naive(const EncodingContext& ctx, const VolumeSet& kspace);

} // namespace serial
} // namespace buda
