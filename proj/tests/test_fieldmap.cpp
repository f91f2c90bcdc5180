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
#include <doctest.h>

#include <cmath>

#include "buda/encode.hpp"
#include "buda/fft.hpp"
#include "buda/fieldmap.hpp"

using namespace buda;

namespace {

// structured test image: offset Gaussian bumps so the PE profile has texture
VolumeSet bump_image(GridDims d, double shift_vox) {
    VolumeSet v = VolumeSet::zeros(d, 1, 1, 1, Space::image);
    for (int z = 0; z < d.nz; ++z)
        for (int y = 0; y < d.ny; ++y)
            for (int x = 0; x < d.nx; ++x) {
                double val = 0.0;
                for (const auto& [cy, w] : {std::pair{10.0, 1.0}, {18.0, 0.6}, {24.0, 0.8}}) {
                    const double dy = y - shift_vox - cy;
                    val += w * std::exp(-0.10 * dy * dy) *
                           std::exp(-0.05 * (x - d.nx / 2.0) * (x - d.nx / 2.0));
                }
                v.at(x, y, z) = val;
            }
    return v;
}

} // namespace

TEST_CASE("identical images give zero displacement everywhere") {
    const GridDims d{8, 32, 4};
    const VolumeSet img = bump_image(d, 0.0);
    const FieldEstimate est = estimate_field(img, img, 16.85, {});
    for (double v : est.displacement_vox.values) CHECK(v == 0.0);
    for (double v : est.df_hz.values) CHECK(v == 0.0);
}

TEST_CASE("constant +/-3 voxel pair is recovered as displacement 3 inside support") {
    const GridDims d{8, 32, 4};
    const VolumeSet up = bump_image(d, 3.0);
    const VolumeSet down = bump_image(d, -3.0);
    FieldEstimateOptions opt;
    opt.search_max_vox = 6.0;
    const FieldEstimate est = estimate_field(up, down, 16.85, opt);
    // check where the image has signal (the bump band)
    for (int z = 0; z < d.nz; ++z)
        for (int y = 8; y <= 28; ++y)
            for (int x = 2; x < d.nx - 2; ++x)
                CHECK(est.displacement_vox.at(x, y, z) == doctest::Approx(3.0).epsilon(0.1));
}

TEST_CASE("swapping up and down negates the displacement") {
    const GridDims d{8, 32, 4};
    const VolumeSet up = bump_image(d, 2.0);
    const VolumeSet down = bump_image(d, -2.0);
    FieldEstimateOptions opt;
    opt.smoothing_sigma_vox = 0.0; // raw search output
    const FieldEstimate fwd = estimate_field(up, down, 10.0, opt);
    const FieldEstimate swp = estimate_field(down, up, 10.0, opt);
    for (std::size_t i = 0; i < fwd.displacement_vox.values.size(); ++i) {
        const double a = fwd.displacement_vox.values[i];
        const double b = swp.displacement_vox.values[i];
        if (a != 0.0 || b != 0.0) CHECK(a == doctest::Approx(-b).epsilon(1e-12));
    }
}

TEST_CASE("field_to_hz: Table-1 bandwidth arithmetic and linearity") {
    RealMap disp = RealMap::zeros({2, 2, 2}, "vox");
    disp.values = {3.0, 0.0, -1.5, 2.0, 0.25, 1.0, -3.0, 0.5};
    const RealMap hz = field_to_hz(disp, 16.85);
    CHECK(hz.unit == "Hz");
    CHECK(hz.values[0] == doctest::Approx(50.55).epsilon(1e-12));
    CHECK(hz.values[1] == 0.0);
    for (std::size_t i = 0; i < disp.values.size(); ++i)
        CHECK(hz.values[i] == doctest::Approx(disp.values[i] * 16.85).epsilon(1e-12));
}

TEST_CASE("estimator is exact for integer shifts of a structured image") {
    const GridDims d{8, 32, 4};
    for (double shift : {1.0, 2.0, 4.0}) {
        const VolumeSet up = bump_image(d, shift);
        const VolumeSet down = bump_image(d, -shift);
        FieldEstimateOptions opt;
        opt.smoothing_sigma_vox = 0.0;
        opt.step_vox = 0.25;
        const FieldEstimate est = estimate_field(up, down, 10.0, opt);
        // error below one search step inside the textured band
        for (int z = 0; z < d.nz; ++z)
            for (int y = 10; y <= 26; ++y)
                for (int x = 2; x < d.nx - 2; ++x)
                    CHECK(std::abs(est.displacement_vox.at(x, y, z) - shift) <= 0.25 + 1e-9);
    }
}

TEST_CASE("end-to-end: simulated smooth 40 Hz field is recovered under 0.5 voxel MAE") {
    const GridDims d{32, 32, 16};
    Protocol p;
    p.dims = d;
    p.te_ms = {36.0};
    p.r_inplane = 1;
    p.r_z = 1;
    p.n_shots = 2;
    p.caipi_z_shift = 0;
    p.bw_pe_hz_per_px = 16.85;
    const ShotPlan plan = generate_shot_plan(p);
    const CoilSet coils = make_coils(d, 4, 3);
    PhantomOptions opt;
    opt.df_poly_hz = 40.0;
    opt.df_blob_hz = 0.0;
    Phantom ph = make_phantom(d, 1, PhantomPreset::ellipsoids, opt);

    const VolumeSet data = simulate_acquisition(ph, coils, plan, p.te_ms, {}, {});
    const EncodingContext zero_ctx(plan, coils, RealMap::zeros(d, "Hz"));
    const auto up_idx = plan.shots_with_polarity(+1);
    const auto down_idx = plan.shots_with_polarity(-1);
    const VolumeSet up =
        cg_sense(zero_ctx.restrict_shots(up_idx), select_shots(data, up_idx), {}).image;
    const VolumeSet down =
        cg_sense(zero_ctx.restrict_shots(down_idx), select_shots(data, down_idx), {}).image;

    const FieldEstimate est = estimate_field(up, down, p.bw_pe_hz_per_px, {});
    double abs_err = 0.0;
    long count = 0;
    for (Index i = 0; i < d.voxels(); ++i)
        if (ph.support[static_cast<std::size_t>(i)]) {
            abs_err += std::abs(est.df_hz.values[static_cast<std::size_t>(i)] -
                                ph.df_hz.values[static_cast<std::size_t>(i)]);
            ++count;
        }
    const double mae_vox = abs_err / count / p.bw_pe_hz_per_px;
    CHECK(mae_vox < 0.5);
}

TEST_CASE("phase correlation measures fractional circular shifts exactly") {
    const GridDims d{8, 32, 4};
    const VolumeSet ref = bump_image(d, 0.0);
    // build a fractional circular shift through the spectral ramp
    const VolumeSet k = fft3_centered(ref, FftDirection::forward);
    for (double delta : {1.0, -2.0, 2.5, -0.75}) {
        VolumeSet shifted_k = k;
        for (int kz = 0; kz < d.nz; ++kz)
            for (int ky = 0; ky < d.ny; ++ky)
                for (int kx = 0; kx < d.nx; ++kx) {
                    const double ang =
                        2.0 * 3.14159265358979323846 * (ky - d.ny / 2) * delta / d.ny;
                    shifted_k.at(kx, ky, kz) *= Cplx(std::cos(ang), std::sin(ang));
                }
        const VolumeSet shifted = fft3_centered(shifted_k, FftDirection::inverse);
        CHECK(estimate_pe_shift(shifted, ref) == doctest::Approx(delta).epsilon(1e-9));
    }
}

TEST_CASE("gaussian smoothing preserves constants and sigma 0 is the identity") {
    RealMap m = RealMap::zeros({6, 6, 4}, "vox");
    for (double& v : m.values) v = 2.5;
    const RealMap s = gaussian_smooth(m, 1.5);
    for (double v : s.values) CHECK(v == doctest::Approx(2.5).epsilon(1e-12));
    const RealMap same = gaussian_smooth(m, 0.0);
    CHECK(same.values == m.values);
}

TEST_CASE("estimate_field validates its options") {
    const VolumeSet img = bump_image({8, 32, 4}, 0.0);
    FieldEstimateOptions bad;
    bad.step_vox = 0.0;
    CHECK_THROWS_AS((void)estimate_field(img, img, 16.85, bad), config_error);
    bad.step_vox = 2.0;
    bad.search_max_vox = 1.0;
    CHECK_THROWS_AS((void)estimate_field(img, img, 16.85, bad), config_error);
}
