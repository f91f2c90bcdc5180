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

// Compares the OpenMP kernels against the serial reference implementations:
// wall time, speedup, and the maximum deviation between both results.

#include <chrono>
#include <cmath>
#include <cstdio>

#include "buda/encode.hpp"
#include "buda/fft.hpp"
#include "buda/parallel.hpp"
#include "buda/phantom.hpp"
#include "buda/quant.hpp"
#include "buda/rng.hpp"
#include "buda/serial_ref.hpp"
#include "buda/slr.hpp"

using namespace buda;

namespace {

double now_ms() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

template <typename F>
double timed(F&& f, int reps = 3) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const double t0 = now_ms();
        f();
        best = std::min(best, now_ms() - t0);
    }
    return best;
}

void report(const char* name, double serial_ms, double parallel_ms, double max_dev) {
    std::printf("%-28s serial %8.2f ms   openmp %8.2f ms   speedup %5.2fx   max|diff| %.2e\n",
                name, serial_ms, parallel_ms, serial_ms / parallel_ms, max_dev);
}

VolumeSet random_volume(GridDims d, int nc, int nt, int ne, Space sp, std::uint64_t seed) {
    VolumeSet v = VolumeSet::zeros(d, nc, nt, ne, sp);
    Rng rng(seed);
    for (Cplx& c : v.data) c = Cplx(rng.normal(), rng.normal());
    return v;
}

} // namespace

int main(int argc, char** argv) {
    const int threads = argc > 1 ? std::atoi(argv[1]) : 0;
    set_threads(threads);
    std::printf("bench with %d worker thread(s)\n\n", thread_count());

    // fft batch: naive direct DFT vs FFTW-backed OpenMP batch (small grid so
    // the O(N^2) reference stays feasible)
    {
        const GridDims d{12, 12, 8};
        const VolumeSet v = random_volume(d, 4, 4, 2, Space::image, 1);
        VolumeSet out_ser = VolumeSet::zeros(d, 4, 4, 2, Space::kspace);
        const double t_ser = timed([&] {
            for (Index b = 0; b < v.block_count(); ++b)
                serial::dft3_centered_naive(v.data.data() + b * v.volume_len(),
                                            out_ser.data.data() + b * v.volume_len(), d,
                                            FftDirection::forward);
        }, 1);
        VolumeSet out_par;
        const double t_par = timed([&] { out_par = fft3_centered(v, FftDirection::forward); });
        double dev = 0.0;
        for (std::size_t i = 0; i < out_par.data.size(); ++i)
            dev = std::max(dev, std::abs(out_par.data[i] - out_ser.data[i]));
        report("fft3_centered (12x12x8 x32)", t_ser, t_par, dev);
    }

    // hankel lift/unlift: triple-loop reference vs OpenMP kernels
    {
        const GridDims d{24, 24, 12};
        HankelSpec spec;
        spec.kernel = 3;
        spec.mode = HankelSpec::Mode::shots_and_echoes;
        spec.dims = d;
        spec.n_shots = 4;
        spec.n_echoes = 3;
        const VolumeSet v = random_volume(d, 1, 4, 3, Space::kspace, 2);

        Eigen::MatrixXcd lift_ser, lift_par;
        const double t_ser = timed([&] { lift_ser = serial::hankel_lift_naive(v, spec); });
        const double t_par = timed([&] { lift_par = hankel_lift(v, spec); });
        const double dev = (lift_ser - lift_par).cwiseAbs().maxCoeff();
        report("hankel_lift (24x24x12 4x3)", t_ser, t_par, dev);

        VolumeSet un_ser, un_par;
        const double tu_ser = timed([&] { un_ser = serial::hankel_unlift_naive(lift_par, spec); });
        const double tu_par = timed([&] { un_par = hankel_unlift(lift_par, spec); });
        double udev = 0.0;
        for (std::size_t i = 0; i < un_par.data.size(); ++i)
            udev = std::max(udev, std::abs(un_par.data[i] - un_ser.data[i]));
        report("hankel_unlift", tu_ser, tu_par, udev);
    }

    // encoding operator: hybrid-space OpenMP kernels vs the serial
    // one-DFT-per-line reference
    {
        const GridDims d{48, 48, 16};
        Protocol p;
        p.dims = d;
        p.te_ms = {36.0};
        p.r_inplane = 4;
        p.r_z = 2;
        p.n_shots = 4;
        p.caipi_z_shift = 1;
        p.bw_pe_hz_per_px = 16.85;
        const ShotPlan plan = generate_shot_plan(p);
        const CoilSet coils = make_coils(d, 8, 3);
        Phantom ph = make_phantom(d, 4, PhantomPreset::ellipsoids, {});
        const EncodingContext ctx(plan, coils, ph.df_hz);
        const VolumeSet imgs = random_volume(d, 1, 4, 1, Space::image, 5);

        VolumeSet y_ser, y_par;
        const double t_ser = timed([&] { y_ser = serial::encode_forward_naive(ctx, imgs); });
        const double t_par = timed([&] { y_par = encode_forward(ctx, imgs); });
        double dev = 0.0;
        for (std::size_t i = 0; i < y_par.data.size(); ++i)
            dev = std::max(dev, std::abs(y_par.data[i] - y_ser.data[i]));
        report("encode_forward (48x48x16)", t_ser, t_par, dev);

        VolumeSet a_ser, a_par;
        const double ta_ser = timed([&] { a_ser = serial::encode_adjoint_naive(ctx, y_par); });
        const double ta_par = timed([&] { a_par = encode_adjoint(ctx, y_par); });
        double adev = 0.0;
        for (std::size_t i = 0; i < a_par.data.size(); ++i)
            adev = std::max(adev, std::abs(a_par.data[i] - a_ser.data[i]));
        report("encode_adjoint (48x48x16)", ta_ser, ta_par, adev);
    }

    // varpro fit: one thread vs all threads (identical code path, disjoint writes)
    {
        const GridDims d{48, 48, 16};
        Phantom ph = make_phantom(d, 7, PhantomPreset::ellipsoids, {});
        const std::vector<double> te{18.0, 43.17, 68.34};
        const VolumeSet echoes = echo_images(ph, te);
        const T2starDictionary dict = make_t2star_dictionary(te);

        VarproResult r_ser, r_par;
        set_threads(1);
        const double t_ser = timed([&] { r_ser = fit_t2star_varpro(echoes, dict, ph.support); });
        set_threads(threads);
        const double t_par = timed([&] { r_par = fit_t2star_varpro(echoes, dict, ph.support); });
        double dev = 0.0;
        for (std::size_t i = 0; i < r_par.t2star_ms.values.size(); ++i)
            dev = std::max(dev,
                           std::abs(r_par.t2star_ms.values[i] - r_ser.t2star_ms.values[i]));
        report("fit_t2star_varpro", t_ser, t_par, dev);
    }

    return 0;
}
