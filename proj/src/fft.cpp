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
#include "buda/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include "buda/parallel.hpp"

namespace buda {

namespace {

// Plan creation is not thread safe; fftw_execute_dft on distinct buffers is.
// Plans are created with FFTW_ESTIMATE (deterministic algorithm choice) and
// FFTW_UNALIGNED so they run on any heap buffer.
class PlanCache {
public:
    fftw_plan get(GridDims d, int sign) {
        const auto key = std::make_tuple(d.nx, d.ny, d.nz, sign);
        std::lock_guard<std::mutex> lock(mu_);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::vector<Cplx> a(static_cast<std::size_t>(d.voxels()));
        std::vector<Cplx> b(a.size());
        // FFTW is row-major with the last dimension contiguous; our x is
        // fastest, so the FFTW dims are (nz, ny, nx).
        fftw_plan p = fftw_plan_dft_3d(d.nz, d.ny, d.nx, reinterpret_cast<fftw_complex*>(a.data()),
                                       reinterpret_cast<fftw_complex*>(b.data()), sign,
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!p) throw data_error("FFTW plan creation failed");
        plans_[key] = p;
        return p;
    }

private:
    std::mutex mu_;
    std::map<std::tuple<int, int, int, int>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
    static PlanCache cache;
    return cache;
}

// pre map: src = (dst + floor(N/2)) mod N, post map: src = (dst + N - floor(N/2)) mod N.
// Applying pre before the raw DFT and post after realizes the centered
// convention with DC at floor(N/2).
inline int wrap(int i, int n) { return i >= n ? i - n : i; }

} // namespace

void fft3_centered_block(const Cplx* in, Cplx* out, GridDims d, FftDirection dir) {
    const int nx = d.nx, ny = d.ny, nz = d.nz;
    const int cx = nx / 2, cy = ny / 2, cz = nz / 2;
    const std::size_t n = static_cast<std::size_t>(d.voxels());
    std::vector<Cplx> a(n), b(n);

    for (int z = 0; z < nz; ++z) {
        const int sz = wrap(z + cz, nz);
        for (int y = 0; y < ny; ++y) {
            const int sy = wrap(y + cy, ny);
            const Cplx* src = in + (std::size_t(sy) + std::size_t(ny) * sz) * nx;
            Cplx* dst = a.data() + (std::size_t(y) + std::size_t(ny) * z) * nx;
            for (int x = 0; x < nx; ++x) dst[x] = src[wrap(x + cx, nx)];
        }
    }

    // Forward kernel is exp(+i*2*pi*k.r/N) so that a positive off-resonance
    // under a blip-up train displaces content toward +PE.
    const int sign = dir == FftDirection::forward ? FFTW_BACKWARD : FFTW_FORWARD;
    fftw_plan plan = plan_cache().get(d, sign);
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(a.data()),
                     reinterpret_cast<fftw_complex*>(b.data()));

    const double scale = 1.0 / std::sqrt(static_cast<double>(d.voxels()));
    for (int z = 0; z < nz; ++z) {
        const int sz = wrap(z + nz - cz, nz);
        for (int y = 0; y < ny; ++y) {
            const int sy = wrap(y + ny - cy, ny);
            const Cplx* src = b.data() + (std::size_t(sy) + std::size_t(ny) * sz) * nx;
            Cplx* dst = out + (std::size_t(y) + std::size_t(ny) * z) * nx;
            for (int x = 0; x < nx; ++x) dst[x] = src[wrap(x + nx - cx, nx)] * scale;
        }
    }
}

VolumeSet fft3_centered(const VolumeSet& v, FftDirection dir) {
    v.validate();
    if (dir == FftDirection::forward && v.space != Space::image)
        throw data_error("fft3_centered forward expects an image-space input");
    if (dir == FftDirection::inverse && v.space != Space::kspace)
        throw data_error("fft3_centered inverse expects a k-space input");

    VolumeSet out = v;
    out.space = dir == FftDirection::forward ? Space::kspace : Space::image;
    const Index blocks = v.block_count();
    const Index len = v.volume_len();
    parallel_for(blocks, [&](Index b) {
        fft3_centered_block(v.data.data() + b * len, out.data.data() + b * len, v.dims, dir);
    });
    return out;
}

} // namespace buda
