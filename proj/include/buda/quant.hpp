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

#include "buda/types.hpp"

namespace buda {

/// Decay-curve dictionary over the protocol's echo times: T2* 1..125 ms in
/// 1 ms steps then 126..300 ms in 3 ms steps (184 atoms), every atom
/// normalized to unit Euclidean norm.
struct T2starDictionary {
    std::vector<double> te_ms;
    std::vector<double> t2star_grid_ms;
    std::vector<double> atoms;    // atom-major, n_te values each, unit norm
    std::vector<double> raw_norm; // norm of exp(-te/t2star) before normalization

    int n_atoms() const { return static_cast<int>(t2star_grid_ms.size()); }
    int n_te() const { return static_cast<int>(te_ms.size()); }
    const double* atom(int k) const { return atoms.data() + std::size_t(k) * n_te(); }
};

T2starDictionary make_t2star_dictionary(const std::vector<double>& te_ms);

struct VarproResult {
    RealMap t2star_ms;
    RealMap pd;
    long flagged_zero_signal = 0; // in-support voxels with no signal, set to 0
};

/// Dictionary matching on echo magnitudes: per supported voxel pick the atom
/// with the largest correlation (ties toward smaller T2*) and recover the
/// amplitude by projection onto the raw decay curve.
/// echoes: (1, 1, N) set, N == dictionary echo count.
VarproResult fit_t2star_varpro(const VolumeSet& echoes, const T2starDictionary& dict,
                               const std::vector<std::uint8_t>& support);

/// Independent log-linear oracle: least-squares line through (te, ln|S|),
/// T2* = -1/slope clamped to [1, 300] ms. Voxels with non-positive magnitude
/// are excluded (left 0).
RealMap fit_t2star_loglin(const VolumeSet& echoes, const std::vector<double>& te_ms,
                          const std::vector<std::uint8_t>& support);

/// 100 * ||x - ref|| / ||ref|| over the mask, on magnitudes. Empty mask = all.
double rmse_percent(const VolumeSet& x, const VolumeSet& ref,
                    const std::vector<std::uint8_t>& mask = {});

/// Mean local SSIM: both magnitudes normalized by max|ref|, Gaussian window
/// 11 with sigma 1.5, K1 = 0.01, K2 = 0.03, computed per z slice over the
/// valid region and averaged.
double ssim(const VolumeSet& x, const VolumeSet& ref);

/// Inclusive voxel box.
struct Roi {
    std::string label;
    int x0, y0, z0, x1, y1, z1;
};
using RoiSet = std::vector<Roi>;

/// One ROI per line: label x0 y0 z0 x1 y1 z1. Boxes must lie within dims.
RoiSet parse_rois(const std::string& path, GridDims dims);

double roi_mean(const RealMap& m, const Roi& roi);

/// mean/std of magnitudes inside the box; +inf when the std is zero.
double local_snr(const VolumeSet& img, const Roi& roi);

struct BlandAltman {
    double bias;
    double loa_low;
    double loa_high;
};

/// Differences a_i - b_i: bias = mean, limits = bias +/- 1.96 * unbiased std.
BlandAltman bland_altman(const std::vector<double>& a, const std::vector<double>& b);

} // namespace buda
