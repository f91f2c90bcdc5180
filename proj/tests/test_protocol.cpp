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

#include <set>

#include "buda/protocol.hpp"

using namespace buda;

namespace {

Protocol table1_like() {
    // 4-shot, R_inplane 4, R_z 2, CAIPI z-shift 1, BW_y 16.85 Hz/px
    Protocol p;
    p.dims = {128, 128, 128};
    p.fov_mm = {224.0, 224.0, 128.0};
    p.tr_ms = 72.0;
    p.flip_deg = 16.0;
    p.te_ms = {36.0};
    p.r_inplane = 4;
    p.r_z = 2;
    p.n_shots = 4;
    p.caipi_z_shift = 1;
    p.bw_pe_hz_per_px = 16.85;
    return p;
}

} // namespace

TEST_CASE("4-shot CAIPI plan: 2048 samples per shot per echo, r_eff = 2") {
    const Protocol p = table1_like();
    const ShotPlan plan = generate_shot_plan(p);
    REQUIRE(plan.n_shots == 4);
    for (int t = 0; t < 4; ++t) CHECK(plan.samples_per_shot(t) == 32 * 64);
    CHECK(p.r_effective() == doctest::Approx(2.0));
    CHECK(p.r_effective_string() == "2");
}

TEST_CASE("no acceleration gives fully true masks") {
    Protocol p = table1_like();
    p.dims = {16, 16, 8};
    p.r_inplane = 1;
    p.r_z = 1;
    p.n_shots = 2;
    p.caipi_z_shift = 0;
    const ShotPlan plan = generate_shot_plan(p);
    for (int t = 0; t < 2; ++t)
        CHECK(plan.samples_per_shot(t) == Index(16) * 8);
}

TEST_CASE("polarity alternates in acquisition order, first shot blip-up") {
    const ShotPlan plan = generate_shot_plan(table1_like());
    CHECK(plan.polarity == std::vector<int>{+1, -1, +1, -1});
}

TEST_CASE("8-shot plan covers every (ky,kz) in union; each polarity covers every ky column") {
    Protocol p = table1_like();
    p.dims = {16, 16, 8};
    p.r_inplane = 4;
    p.r_z = 2;
    p.n_shots = 8;
    p.caipi_z_shift = 1;
    const ShotPlan plan = generate_shot_plan(p);

    for (int ky = 0; ky < 16; ++ky)
        for (int kz = 0; kz < 8; ++kz) {
            bool any = false;
            for (int t = 0; t < 8; ++t) any = any || plan.acquired(t, ky, kz);
            CHECK(any);
        }

    // each polarity group alone hits every ky column somewhere
    for (int pol : {+1, -1})
        for (int ky = 0; ky < 16; ++ky) {
            bool hit = false;
            for (int t : plan.shots_with_polarity(pol))
                for (int kz = 0; kz < 8; ++kz) hit = hit || plan.acquired(t, ky, kz);
            CHECK(hit);
        }

    // the polarity group's combined sampling density matches
    // r_inplane*r_z/(n_shots/2) = 2
    for (int pol : {+1, -1}) {
        Index count = 0;
        for (int t : plan.shots_with_polarity(pol)) count += plan.samples_per_shot(t);
        CHECK(count == Index(16) * 8 / 2);
    }
}

TEST_CASE("same-polarity shots never share a (ky,kz) sample in the CAIPI plan") {
    const ShotPlan plan = generate_shot_plan(table1_like());
    for (int pol : {+1, -1}) {
        const auto group = plan.shots_with_polarity(pol);
        for (int ky = 0; ky < plan.dims.ny; ++ky)
            for (int kz = 0; kz < plan.dims.nz; ++kz) {
                int owners = 0;
                for (int t : group) owners += plan.acquired(t, ky, kz);
                CHECK(owners <= 1);
            }
    }
}

TEST_CASE("union coverage equals the effective acceleration when dims divide") {
    const Protocol p = table1_like();
    const ShotPlan plan = generate_shot_plan(p);
    Index covered = 0;
    for (int ky = 0; ky < p.dims.ny; ++ky)
        for (int kz = 0; kz < p.dims.nz; ++kz) {
            bool any = false;
            for (int t = 0; t < plan.n_shots; ++t) any = any || plan.acquired(t, ky, kz);
            covered += any;
        }
    // distinct (ky,kz) samples = total / r_eff when no same-polarity overlap
    CHECK(covered == Index(p.dims.ny) * p.dims.nz / 2);
}

TEST_CASE("line timing: center zero, Table-1 bandwidth, symmetry, linearity") {
    const ShotPlan plan = generate_shot_plan(table1_like());
    CHECK(plan.line_time(plan.ky_center) == 0.0);
    // t_line = 1/(128 * 16.85) ~= 4.637e-4 s
    CHECK(plan.t_line_s == doctest::Approx(4.637e-4).epsilon(1e-3));
    CHECK(plan.line_time(plan.ky_center + 2) == doctest::Approx(2.0 * plan.t_line_s));
    for (int d = 1; d < 30; ++d)
        CHECK(plan.line_time(plan.ky_center + d) ==
              doctest::Approx(-plan.line_time(plan.ky_center - d)));
    CHECK_THROWS_AS((void)plan.line_time(-1), std::out_of_range);
    CHECK_THROWS_AS((void)plan.line_time(128), std::out_of_range);
}

TEST_CASE("timing is identical across shots (delayed echo trains)") {
    const ShotPlan plan = generate_shot_plan(table1_like());
    // line_time takes no shot argument by design; acquired lines of different
    // shots sample the same tau ramp
    const auto lines0 = plan.acquired_ky_lines(0);
    const auto lines2 = plan.acquired_ky_lines(2);
    REQUIRE(lines0.size() == lines2.size());
    for (std::size_t i = 0; i < lines0.size(); ++i)
        CHECK(plan.line_time(lines2[i]) - plan.line_time(lines0[i]) ==
              doctest::Approx((lines2[i] - lines0[i]) * plan.t_line_s));
}

TEST_CASE("configuration errors") {
    Protocol p = table1_like();
    p.dims = {100, 100, 100};
    p.r_inplane = 3; // 100 % 3 != 0
    CHECK_THROWS_AS((void)generate_shot_plan(p), config_error);

    p = table1_like();
    p.caipi_z_shift = 2; // >= r_z
    CHECK_THROWS_AS((void)generate_shot_plan(p), config_error);

    p = table1_like();
    p.n_shots = 3; // odd
    CHECK_THROWS_AS(p.validate(), config_error);

    p = table1_like();
    p.te_ms = {36.0, 36.0}; // not strictly increasing
    CHECK_THROWS_AS(p.validate(), config_error);
}

TEST_CASE("mask volume export shape") {
    Protocol p = table1_like();
    p.dims = {16, 16, 8};
    const ShotPlan plan = generate_shot_plan(p);
    const VolumeSet masks = plan.mask_volume(3);
    CHECK(masks.dims.nx == 1);
    CHECK(masks.dims.ny == 16);
    CHECK(masks.dims.nz == 8);
    CHECK(masks.n_shots == 4);
    CHECK(masks.n_echoes == 3);
    Index nonzero = 0;
    for (const Cplx& c : masks.data) nonzero += c.real() != 0.0;
    CHECK(nonzero == 3 * (plan.samples_per_shot(0) + plan.samples_per_shot(1) +
                          plan.samples_per_shot(2) + plan.samples_per_shot(3)));
}
