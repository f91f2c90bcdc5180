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
#include "buda/fieldmap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "buda/fft.hpp"
#include "buda/parallel.hpp"

namespace buda {

namespace {

constexpr double kTwoPi = 6.28318530717958647692528676656;

// Edge-clamped linear interpolation along the PE axis of one x-z column.
inline double sample_pe(const std::vector<double>& mag, GridDims d, int x, double y, int z) {
    const double yc = std::clamp(y, 0.0, double(d.ny - 1));
    const int y0 = static_cast<int>(yc);
    const int y1 = std::min(y0 + 1, d.ny - 1);
    const double f = yc - y0;
    const auto at = [&](int yy) {
        return mag[static_cast<std::size_t>(x) + std::size_t(d.nx) * (std::size_t(yy) + std::size_t(d.ny) * z)];
    };
    return (1.0 - f) * at(y0) + f * at(y1);
}

std::vector<double> magnitude_block(const VolumeSet& v) {
    std::vector<double> mag(static_cast<std::size_t>(v.volume_len()));
    const Cplx* blk = v.block(0, 0, 0);
    for (Index i = 0; i < v.volume_len(); ++i)
        mag[static_cast<std::size_t>(i)] = std::abs(blk[i]);
    return mag;
}

} // namespace

RealMap gaussian_smooth(const RealMap& m, double sigma_vox) {
    if (sigma_vox <= 0.0) return m;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma_vox)));
    std::vector<double> w(static_cast<std::size_t>(radius) + 1);
    for (int k = 0; k <= radius; ++k)
        w[static_cast<std::size_t>(k)] = std::exp(-0.5 * k * k / (sigma_vox * sigma_vox));

    const GridDims d = m.dims;
    RealMap cur = m;
    for (int axis = 0; axis < 3; ++axis) {
        RealMap next = RealMap::zeros(d, m.unit);
        const int n_axis = axis == 0 ? d.nx : axis == 1 ? d.ny : d.nz;
        parallel_for(d.voxels(), [&](Index i) {
            const int x = static_cast<int>(i % d.nx);
            const int y = static_cast<int>((i / d.nx) % d.ny);
            const int z = static_cast<int>(i / (Index(d.nx) * d.ny));
            const int pos = axis == 0 ? x : axis == 1 ? y : z;
            double acc = 0.0, wsum = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                const int p = pos + k;
                if (p < 0 || p >= n_axis) continue; // renormalize at edges
                const double wk = w[static_cast<std::size_t>(std::abs(k))];
                const double v = axis == 0   ? cur.at(p, y, z)
                                 : axis == 1 ? cur.at(x, p, z)
                                             : cur.at(x, y, p);
                acc += wk * v;
                wsum += wk;
            }
            next.values[static_cast<std::size_t>(i)] = acc / wsum;
        });
        cur = std::move(next);
    }
    return cur;
}

FieldEstimate estimate_field(const VolumeSet& up, const VolumeSet& down, double bw_pe_hz_per_px,
                             const FieldEstimateOptions& opt) {
    up.validate();
    down.validate();
    if (!(up.dims == down.dims)) throw data_error("estimate_field: dims disagree");
    if (opt.step_vox <= 0.0 || opt.search_max_vox < opt.step_vox)
        throw config_error("estimate_field: need search_max_vox >= step_vox > 0");
    if (bw_pe_hz_per_px <= 0.0) throw config_error("estimate_field: bandwidth must be positive");

    const GridDims d = up.dims;
    const std::vector<double> up_mag = magnitude_block(up);
    const std::vector<double> down_mag = magnitude_block(down);

    // Candidates ordered by |d| so that equal costs keep the smaller shift.
    std::vector<double> candidates{0.0};
    for (int k = 1; k * opt.step_vox <= opt.search_max_vox + 1e-12; ++k) {
        candidates.push_back(k * opt.step_vox);
        candidates.push_back(-k * opt.step_vox);
    }

    RealMap disp = RealMap::zeros(d, "vox");
    parallel_for(d.voxels(), [&](Index i) {
        const int x = static_cast<int>(i % d.nx);
        const int y = static_cast<int>((i / d.nx) % d.ny);
        const int z = static_cast<int>(i / (Index(d.nx) * d.ny));
        double best = 0.0;
        double best_cost = std::numeric_limits<double>::infinity();
        for (double cand : candidates) {
            double cost = 0.0;
            for (int w = -2; w <= 2; ++w) {
                const double a = sample_pe(up_mag, d, x, y + cand + w, z);
                const double b = sample_pe(down_mag, d, x, y - cand + w, z);
                cost += (a - b) * (a - b);
            }
            if (cost < best_cost) {
                best_cost = cost;
                best = cand;
            }
        }
        disp.values[static_cast<std::size_t>(i)] = best;
    });

    FieldEstimate est;
    est.smoothing_sigma_vox = opt.smoothing_sigma_vox;
    est.displacement_vox = gaussian_smooth(disp, opt.smoothing_sigma_vox);
    est.df_hz = field_to_hz(est.displacement_vox, bw_pe_hz_per_px);
    return est;
}

RealMap field_to_hz(const RealMap& displacement_vox, double bw_pe_hz_per_px) {
    RealMap out = displacement_vox;
    out.unit = "Hz";
    for (double& v : out.values) v *= bw_pe_hz_per_px;
    return out;
}

double estimate_pe_shift(const VolumeSet& img, const VolumeSet& ref) {
    img.validate();
    ref.validate();
    if (!(img.dims == ref.dims)) throw data_error("estimate_pe_shift: dims disagree");

    const GridDims d = img.dims;
    std::vector<Cplx> ka(static_cast<std::size_t>(d.voxels()));
    std::vector<Cplx> kb(ka.size());
    fft3_centered_block(img.block(0, 0, 0), ka.data(), d, FftDirection::forward);
    fft3_centered_block(ref.block(0, 0, 0), kb.data(), d, FftDirection::forward);

    // Cross-power collapsed onto ky; adjacent-line phase differences give the
    // shift without unwrapping. Exact for circular PE shifts.
    std::vector<Cplx> s(static_cast<std::size_t>(d.ny), Cplx(0.0, 0.0));
    for (int kz = 0; kz < d.nz; ++kz)
        for (int ky = 0; ky < d.ny; ++ky)
            for (int kx = 0; kx < d.nx; ++kx) {
                const std::size_t idx = static_cast<std::size_t>(
                    kx + Index(d.nx) * (Index(ky) + Index(d.ny) * kz));
                s[static_cast<std::size_t>(ky)] += ka[idx] * std::conj(kb[idx]);
            }
    Cplx c(0.0, 0.0);
    for (int ky = 0; ky + 1 < d.ny; ++ky)
        c += s[static_cast<std::size_t>(ky + 1)] * std::conj(s[static_cast<std::size_t>(ky)]);
    // with the exp(+i) forward kernel, g(y) = f(y - delta) puts +delta on the slope
    return std::arg(c) * d.ny / kTwoPi;
}

} // namespace buda
