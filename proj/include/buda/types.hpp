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

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "buda/errors.hpp"

namespace buda {

using Cplx = std::complex<double>;
using Index = std::int64_t;

/// Grid size: x = frequency encode, y = phase encode, z = partitions.
struct GridDims {
    int nx = 0;
    int ny = 0;
    int nz = 0;

    Index voxels() const { return Index(nx) * ny * nz; }
    bool operator==(const GridDims&) const = default;

    void validate() const {
        if (nx < 1 || ny < 1 || nz < 1)
            throw data_error("invalid dims: all grid dimensions must be >= 1");
    }
};

enum class Space { image, kspace };

inline const char* to_string(Space s) { return s == Space::image ? "image" : "kspace"; }

/// Complex multi-dimensional sample set. Canonical flat order is x-fastest,
/// then y, z, coil, shot, echo. Data is stored in 64-bit complex precision.
struct VolumeSet {
    GridDims dims;
    int n_coils = 1;
    int n_shots = 1;
    int n_echoes = 1;
    Space space = Space::image;
    std::vector<Cplx> data;

    static VolumeSet zeros(GridDims d, int nc, int nt, int ne, Space sp) {
        VolumeSet v;
        v.dims = d;
        v.n_coils = nc;
        v.n_shots = nt;
        v.n_echoes = ne;
        v.space = sp;
        v.validate_shape();
        v.data.assign(static_cast<std::size_t>(v.total()), Cplx(0.0, 0.0));
        return v;
    }

    Index volume_len() const { return dims.voxels(); }
    Index block_count() const { return Index(n_coils) * n_shots * n_echoes; }
    Index total() const { return volume_len() * block_count(); }

    Index index(int x, int y, int z, int c, int t, int n) const {
        return Index(x) +
               Index(dims.nx) *
                   (Index(y) +
                    Index(dims.ny) *
                        (Index(z) +
                         Index(dims.nz) *
                             (Index(c) + Index(n_coils) * (Index(t) + Index(n_shots) * Index(n)))));
    }

    Index block_index(int c, int t, int n) const {
        return Index(c) + Index(n_coils) * (Index(t) + Index(n_shots) * Index(n));
    }

    Cplx* block(int c, int t, int n) { return data.data() + block_index(c, t, n) * volume_len(); }
    const Cplx* block(int c, int t, int n) const {
        return data.data() + block_index(c, t, n) * volume_len();
    }

    Cplx& at(int x, int y, int z, int c = 0, int t = 0, int n = 0) {
        return data[static_cast<std::size_t>(index(x, y, z, c, t, n))];
    }
    const Cplx& at(int x, int y, int z, int c = 0, int t = 0, int n = 0) const {
        return data[static_cast<std::size_t>(index(x, y, z, c, t, n))];
    }

    void validate_shape() const {
        dims.validate();
        if (n_coils < 1 || n_shots < 1 || n_echoes < 1)
            throw data_error("invalid volume: coil/shot/echo counts must be >= 1");
    }

    /// Throws if the payload size disagrees with the declared shape.
    void validate() const {
        validate_shape();
        if (Index(data.size()) != total())
            throw data_error("corrupt volume: sample count does not match declared shape");
    }
};

/// Real scalar map over a grid with a mandatory unit tag
/// ("Hz" for field maps, "ms" for T2*, "au" for PD and magnitudes).
struct RealMap {
    GridDims dims;
    std::string unit;
    std::vector<double> values;

    static RealMap zeros(GridDims d, std::string unit_tag) {
        d.validate();
        RealMap m;
        m.dims = d;
        m.unit = std::move(unit_tag);
        m.values.assign(static_cast<std::size_t>(d.voxels()), 0.0);
        return m;
    }

    Index index(int x, int y, int z) const {
        return Index(x) + Index(dims.nx) * (Index(y) + Index(dims.ny) * Index(z));
    }
    double& at(int x, int y, int z) { return values[static_cast<std::size_t>(index(x, y, z))]; }
    double at(int x, int y, int z) const {
        return values[static_cast<std::size_t>(index(x, y, z))];
    }

    void validate() const;
};

/// Smooth complex sensitivity maps, one volume per coil, sum-of-squares
/// magnitude 1 at every voxel.
struct CoilSet {
    GridDims dims;
    int n_coils = 0;
    std::vector<Cplx> maps; // coil-major blocks, x-fastest within a block

    Cplx* coil(int c) { return maps.data() + Index(c) * dims.voxels(); }
    const Cplx* coil(int c) const { return maps.data() + Index(c) * dims.voxels(); }
};

// Fixed-order reductions shared by the solvers. Serial on purpose: results
// must not depend on the parallel schedule.
double norm2(const std::vector<Cplx>& v);
double norm2(const VolumeSet& v);
Cplx dot(const std::vector<Cplx>& a, const std::vector<Cplx>& b);
Cplx dot(const VolumeSet& a, const VolumeSet& b);

} // namespace buda
