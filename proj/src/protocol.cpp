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
#include "buda/protocol.hpp"

#include <numeric>
#include <sstream>
#include <stdexcept>

namespace buda {

std::pair<long, long> Protocol::r_effective_rational() const {
    long num = static_cast<long>(r_inplane) * r_z;
    long den = n_shots;
    const long g = std::gcd(num, den);
    return {num / g, den / g};
}

double Protocol::r_effective() const {
    const auto [num, den] = r_effective_rational();
    return static_cast<double>(num) / static_cast<double>(den);
}

std::string Protocol::r_effective_string() const {
    const auto [num, den] = r_effective_rational();
    std::ostringstream ss;
    ss << num;
    if (den != 1) ss << '/' << den;
    return ss.str();
}

void Protocol::validate() const {
    try {
        dims.validate();
    } catch (const data_error& e) {
        throw config_error(e.what());
    }
    if (te_ms.empty()) throw config_error("protocol: te_ms must list at least one echo time");
    for (std::size_t i = 0; i < te_ms.size(); ++i) {
        if (te_ms[i] <= 0.0) throw config_error("protocol: te_ms entries must be positive");
        if (i > 0 && te_ms[i] <= te_ms[i - 1])
            throw config_error("protocol: te_ms must be strictly increasing");
    }
    if (r_inplane < 1 || r_z < 1) throw config_error("protocol: r_inplane and r_z must be >= 1");
    if (n_shots < 2 || n_shots % 2 != 0)
        throw config_error("protocol: n_shots must be even and positive");
    if (caipi_z_shift < 0 || caipi_z_shift >= r_z)
        throw config_error("protocol: caipi_z_shift must lie in [0, r_z)");
    if (bw_pe_hz_per_px <= 0.0) throw config_error("protocol: bw_pe_hz_per_px must be positive");
}

std::vector<int> ShotPlan::acquired_ky_lines(int shot) const {
    std::vector<int> lines;
    for (int ky = 0; ky < dims.ny; ++ky) {
        for (int kz = 0; kz < dims.nz; ++kz) {
            if (acquired(shot, ky, kz)) {
                lines.push_back(ky);
                break;
            }
        }
    }
    return lines;
}

Index ShotPlan::samples_per_shot(int shot) const {
    Index count = 0;
    for (std::uint8_t b : mask[static_cast<std::size_t>(shot)]) count += (b != 0);
    return count;
}

double ShotPlan::line_time(int ky) const {
    if (ky < 0 || ky >= dims.ny) throw std::out_of_range("line_time: ky outside [0, n_pe)");
    return (ky - ky_center) * t_line_s;
}

ShotPlan ShotPlan::subset(const std::vector<int>& shot_indices) const {
    ShotPlan out = *this;
    out.n_shots = static_cast<int>(shot_indices.size());
    out.polarity.clear();
    out.ky_offset.clear();
    out.kz_base.clear();
    out.mask.clear();
    for (int t : shot_indices) {
        if (t < 0 || t >= n_shots) throw data_error("shot subset index out of range");
        out.polarity.push_back(polarity[static_cast<std::size_t>(t)]);
        out.ky_offset.push_back(ky_offset[static_cast<std::size_t>(t)]);
        out.kz_base.push_back(kz_base[static_cast<std::size_t>(t)]);
        out.mask.push_back(mask[static_cast<std::size_t>(t)]);
    }
    return out;
}

std::vector<int> ShotPlan::shots_with_polarity(int pol) const {
    std::vector<int> out;
    for (int t = 0; t < n_shots; ++t)
        if (polarity[static_cast<std::size_t>(t)] == pol) out.push_back(t);
    return out;
}

VolumeSet ShotPlan::mask_volume(int n_echoes) const {
    VolumeSet v = VolumeSet::zeros({1, dims.ny, dims.nz}, 1, n_shots, n_echoes, Space::kspace);
    for (int n = 0; n < n_echoes; ++n)
        for (int t = 0; t < n_shots; ++t)
            for (int ky = 0; ky < dims.ny; ++ky)
                for (int kz = 0; kz < dims.nz; ++kz)
                    if (acquired(t, ky, kz)) v.at(0, ky, kz, 0, t, n) = Cplx(1.0, 0.0);
    return v;
}

ShotPlan generate_shot_plan(const Protocol& p) {
    p.validate();
    if (p.dims.ny % p.r_inplane != 0)
        throw config_error("generate_shot_plan: n_pe must be divisible by r_inplane");
    if (p.dims.nz % p.r_z != 0)
        throw config_error("generate_shot_plan: n_z must be divisible by r_z");

    ShotPlan plan;
    plan.dims = p.dims;
    plan.n_shots = p.n_shots;
    plan.r_inplane = p.r_inplane;
    plan.r_z = p.r_z;
    plan.caipi_z_shift = p.caipi_z_shift;
    plan.t_line_s = 1.0 / (p.dims.ny * p.bw_pe_hz_per_px);
    plan.ky_center = p.dims.ny / 2;

    const int group_size = p.n_shots / 2;
    const int stride = p.r_inplane / group_size; // floor; 0 collapses offsets
    for (int t = 0; t < p.n_shots; ++t) {
        plan.polarity.push_back(t % 2 == 0 ? +1 : -1);
        const int within_group = t / 2;
        plan.ky_offset.push_back((within_group * stride) % p.r_inplane);
        plan.kz_base.push_back(t % p.r_z);
    }

    for (int t = 0; t < p.n_shots; ++t) {
        std::vector<std::uint8_t> m(static_cast<std::size_t>(p.dims.ny) * p.dims.nz, 0);
        int line_index = 0; // j-th acquired ky line within the shot
        for (int ky = plan.ky_offset[static_cast<std::size_t>(t)]; ky < p.dims.ny;
             ky += p.r_inplane) {
            const int kz_class =
                (line_index * p.caipi_z_shift + plan.kz_base[static_cast<std::size_t>(t)]) % p.r_z;
            for (int kz = kz_class; kz < p.dims.nz; kz += p.r_z)
                m[static_cast<std::size_t>(ky) * p.dims.nz + kz] = 1;
            ++line_index;
        }
        plan.mask.push_back(std::move(m));
    }
    return plan;
}

} // namespace buda
