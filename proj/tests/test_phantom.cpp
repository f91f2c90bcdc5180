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

#include "buda/phantom.hpp"

using namespace buda;

TEST_CASE("uniform preset with zero field options gives df == 0 and phi0 == 0") {
    PhantomOptions opt;
    opt.df_poly_hz = 0.0;
    opt.df_blob_hz = 0.0;
    const Phantom ph = make_phantom({16, 16, 8}, 3, PhantomPreset::uniform, opt);
    for (double v : ph.df_hz.values) CHECK(v == 0.0);
    for (double v : ph.phi0.values) CHECK(v == 0.0);
}

TEST_CASE("phantom generation is deterministic in the seed") {
    const Phantom a = make_phantom({24, 24, 12}, 77, PhantomPreset::ellipsoids, {});
    const Phantom b = make_phantom({24, 24, 12}, 77, PhantomPreset::ellipsoids, {});
    CHECK(a.pd.values == b.pd.values);
    CHECK(a.t2star_ms.values == b.t2star_ms.values);
    CHECK(a.df_hz.values == b.df_hz.values);
    CHECK(a.phi0.values == b.phi0.values);
    CHECK(a.support == b.support);

    const Phantom c = make_phantom({24, 24, 12}, 78, PhantomPreset::ellipsoids, {});
    CHECK(a.pd.values != c.pd.values);
}

TEST_CASE("a 50 Hz blob with no background peaks at exactly 50 Hz at the blob center") {
    PhantomOptions opt;
    opt.df_poly_hz = 0.0;
    opt.df_blob_hz = 50.0;
    const Phantom ph = make_phantom({32, 32, 16}, 5, PhantomPreset::ellipsoids, opt);
    double mx = 0.0;
    for (double v : ph.df_hz.values) mx = std::max(mx, std::abs(v));
    CHECK(mx == doctest::Approx(50.0).epsilon(1e-12));
    const int bx = static_cast<int>(ph.blob_center[0]);
    const int by = static_cast<int>(ph.blob_center[1]);
    const int bz = static_cast<int>(ph.blob_center[2]);
    CHECK(ph.df_hz.at(bx, by, bz) == doctest::Approx(50.0).epsilon(1e-12));
}

TEST_CASE("field is smooth away from the blob: bounded discrete Laplacian") {
    PhantomOptions opt;
    opt.df_poly_hz = 8.0;
    opt.df_blob_hz = 40.0;
    const Phantom ph = make_phantom({32, 32, 16}, 11, PhantomPreset::ellipsoids, opt);
    const GridDims d = ph.dims;
    const double sigma = opt.blob_sigma_frac * 16;
    for (int z = 1; z < d.nz - 1; ++z)
        for (int y = 1; y < d.ny - 1; ++y)
            for (int x = 1; x < d.nx - 1; ++x) {
                const double r2 = (x - ph.blob_center[0]) * (x - ph.blob_center[0]) +
                                  (y - ph.blob_center[1]) * (y - ph.blob_center[1]) +
                                  (z - ph.blob_center[2]) * (z - ph.blob_center[2]);
                if (r2 < 9.0 * sigma * sigma) continue; // inside the blob region
                const double lap = ph.df_hz.at(x + 1, y, z) + ph.df_hz.at(x - 1, y, z) +
                                   ph.df_hz.at(x, y + 1, z) + ph.df_hz.at(x, y - 1, z) +
                                   ph.df_hz.at(x, y, z + 1) + ph.df_hz.at(x, y, z - 1) -
                                   6.0 * ph.df_hz.at(x, y, z);
                CHECK(std::abs(lap) < 1.0);
            }
}

TEST_CASE("phantom keeps a 3-voxel zero margin along PE and T2* in range") {
    const Phantom ph = make_phantom({48, 48, 16}, 21, PhantomPreset::ellipsoids, {});
    for (int z = 0; z < 16; ++z)
        for (int y : {0, 1, 2, 45, 46, 47})
            for (int x = 0; x < 48; ++x) CHECK(!ph.support[static_cast<std::size_t>(
                ph.pd.index(x, y, z))]);
    for (Index i = 0; i < ph.dims.voxels(); ++i)
        if (ph.support[static_cast<std::size_t>(i)]) {
            CHECK(ph.t2star_ms.values[static_cast<std::size_t>(i)] >= 1.0);
            CHECK(ph.t2star_ms.values[static_cast<std::size_t>(i)] <= 300.0);
            CHECK(ph.pd.values[static_cast<std::size_t>(i)] > 0.0);
        }
}

TEST_CASE("single coil normalizes to unit magnitude everywhere") {
    const CoilSet coils = make_coils({12, 12, 8}, 1, 5);
    for (const Cplx& c : coils.maps) CHECK(std::abs(c) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("coil sum-of-squares is 1 at every voxel") {
    const CoilSet coils = make_coils({16, 14, 10}, 6, 9);
    for (Index i = 0; i < coils.dims.voxels(); ++i) {
        double sos = 0.0;
        for (int c = 0; c < coils.n_coils; ++c) sos += std::norm(coils.coil(c)[i]);
        CHECK(std::abs(sos - 1.0) < 1e-10);
    }
}

TEST_CASE("coil magnitudes are smooth: neighbor difference below 0.05 at 32^3, 8 coils") {
    const GridDims d{32, 32, 32};
    const CoilSet coils = make_coils(d, 8, 13);
    for (int c = 0; c < 8; ++c) {
        const Cplx* map = coils.coil(c);
        for (int z = 0; z < d.nz; ++z)
            for (int y = 0; y < d.ny; ++y)
                for (int x = 0; x < d.nx; ++x) {
                    const double m0 = std::abs(map[Index(x) + 32 * (Index(y) + 32 * Index(z))]);
                    if (x + 1 < d.nx)
                        CHECK(std::abs(m0 - std::abs(map[Index(x + 1) +
                                                         32 * (Index(y) + 32 * Index(z))])) <
                              0.05);
                    if (y + 1 < d.ny)
                        CHECK(std::abs(m0 - std::abs(map[Index(x) +
                                                         32 * (Index(y + 1) + 32 * Index(z))])) <
                              0.05);
                    if (z + 1 < d.nz)
                        CHECK(std::abs(m0 - std::abs(map[Index(x) +
                                                         32 * (Index(y) + 32 * Index(z + 1))])) <
                              0.05);
                }
    }
}

TEST_CASE("echo magnitudes follow exp(-te/t2star) exactly") {
    PhantomOptions opt;
    opt.df_poly_hz = 0.0;
    opt.df_blob_hz = 0.0;
    Phantom ph = make_phantom({16, 16, 8}, 2, PhantomPreset::uniform, opt);
    // force pd = 1 and t2star = 60 to check the analytic values
    for (Index i = 0; i < ph.dims.voxels(); ++i)
        if (ph.support[static_cast<std::size_t>(i)]) {
            ph.pd.values[static_cast<std::size_t>(i)] = 1.0;
            ph.t2star_ms.values[static_cast<std::size_t>(i)] = 60.0;
        }

    const std::vector<double> te{18.0, 43.17, 68.34};
    const VolumeSet echoes = echo_images(ph, te);
    const double expect[3] = {std::exp(-18.0 / 60.0), std::exp(-43.17 / 60.0),
                              std::exp(-68.34 / 60.0)};
    // values printed for the Table-3 echo times: ~0.7408, 0.4870, 0.3201
    CHECK(expect[0] == doctest::Approx(0.7408).epsilon(3e-4));
    CHECK(expect[1] == doctest::Approx(0.4870).epsilon(3e-4));
    CHECK(expect[2] == doctest::Approx(0.3203).epsilon(1e-3));
    for (Index i = 0; i < ph.dims.voxels(); ++i) {
        if (!ph.support[static_cast<std::size_t>(i)]) continue;
        for (int n = 0; n < 3; ++n)
            CHECK(std::abs(echoes.data[static_cast<std::size_t>(i + ph.dims.voxels() * n)]) ==
                  doctest::Approx(expect[n]).epsilon(1e-12));
    }

    // decay at te == t2star is exp(-1)
    const VolumeSet one = echo_images(ph, {60.0});
    for (Index i = 0; i < ph.dims.voxels(); ++i)
        if (ph.support[static_cast<std::size_t>(i)])
            CHECK(std::abs(one.data[static_cast<std::size_t>(i)]) ==
                  doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("echo magnitude is monotonically non-increasing in TE") {
    const Phantom ph = make_phantom({24, 24, 12}, 31, PhantomPreset::ellipsoids, {});
    const std::vector<double> te{5.0, 15.0, 30.0, 60.0, 90.0};
    const VolumeSet echoes = echo_images(ph, te);
    const Index nvox = ph.dims.voxels();
    for (Index i = 0; i < nvox; ++i)
        for (std::size_t n = 1; n < te.size(); ++n)
            CHECK(std::abs(echoes.data[static_cast<std::size_t>(i + nvox * Index(n))]) <=
                  std::abs(echoes.data[static_cast<std::size_t>(i + nvox * Index(n - 1))]) +
                      1e-15);
}

TEST_CASE("echo phase carries phi0 plus the off-resonance ramp") {
    PhantomOptions opt;
    opt.df_poly_hz = 0.0;
    opt.df_blob_hz = 0.0;
    Phantom ph = make_phantom({12, 12, 8}, 2, PhantomPreset::uniform, opt);
    for (Index i = 0; i < ph.dims.voxels(); ++i) ph.df_hz.values[static_cast<std::size_t>(i)] = 10.0;
    const VolumeSet echoes = echo_images(ph, {25.0});
    const double expect_phase = 2.0 * 3.14159265358979323846 * 10.0 * 25.0e-3;
    for (Index i = 0; i < ph.dims.voxels(); ++i)
        if (ph.support[static_cast<std::size_t>(i)]) {
            const Cplx v = echoes.data[static_cast<std::size_t>(i)];
            CHECK(std::remainder(std::arg(v) - expect_phase, 2.0 * 3.14159265358979323846) ==
                  doctest::Approx(0.0).epsilon(1e-9));
        }
}

TEST_CASE("shot phase errors: zero amplitude, zero reference shot, exact amplitude") {
    const GridDims d{16, 16, 8};
    const auto zero = shot_phase_errors(d, 4, 0.0, 9);
    for (const RealMap& m : zero)
        for (double v : m.values) CHECK(v == 0.0);

    const auto maps = shot_phase_errors(d, 4, 0.5, 9);
    REQUIRE(maps.size() == 4);
    for (double v : maps[0].values) CHECK(v == 0.0);

    double mx = 0.0;
    for (std::size_t t = 1; t < maps.size(); ++t) {
        double shot_max = 0.0;
        for (double v : maps[t].values) shot_max = std::max(shot_max, std::abs(v));
        CHECK(shot_max == doctest::Approx(0.5).epsilon(1e-12));
        mx = std::max(mx, shot_max);
    }
    CHECK(mx == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("ellipsoids preset rejects tiny grids") {
    CHECK_THROWS_AS((void)make_phantom({6, 16, 8}, 1, PhantomPreset::ellipsoids, {}),
                    config_error);
}
