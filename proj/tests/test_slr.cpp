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
#include <fstream>

#include "buda/rng.hpp"
#include "buda/serial_ref.hpp"
#include "buda/slr.hpp"

using namespace buda;

namespace {

VolumeSet random_kspace_set(GridDims d, int shots, int echoes, std::uint64_t seed) {
    VolumeSet v = VolumeSet::zeros(d, 1, shots, echoes, Space::kspace);
    Rng rng(seed);
    for (Cplx& c : v.data) c = Cplx(rng.normal(), rng.normal());
    return v;
}

HankelSpec spec_for(GridDims d, int m, int shots, int echoes, HankelSpec::Mode mode) {
    HankelSpec s;
    s.kernel = m;
    s.mode = mode;
    s.dims = d;
    s.n_shots = shots;
    s.n_echoes = echoes;
    return s;
}

} // namespace

TEST_CASE("lifted matrix shape follows the size formula with the shot factor") {
    const HankelSpec shots = spec_for({12, 12, 12}, 3, 2, 1, HankelSpec::Mode::shots);
    CHECK(shots.rows() == 1000);
    CHECK(shots.cols() == 54);

    const HankelSpec joint = spec_for({12, 12, 12}, 3, 2, 3, HankelSpec::Mode::shots_and_echoes);
    CHECK(joint.rows() == 1000);
    CHECK(joint.cols() == 162);

    const HankelSpec rect = spec_for({10, 8, 6}, 3, 4, 2, HankelSpec::Mode::shots_and_echoes);
    CHECK(rect.rows() == Index(8) * 6 * 4);
    CHECK(rect.cols() == 27 * 4 * 2);
}

TEST_CASE("hankel_lift matches the triple-loop oracle entrywise") {
    const GridDims d{6, 6, 6};
    const HankelSpec spec = spec_for(d, 3, 2, 3, HankelSpec::Mode::shots_and_echoes);
    const VolumeSet v = random_kspace_set(d, 2, 3, 99);
    const Eigen::MatrixXcd fast = hankel_lift(v, spec);
    const Eigen::MatrixXcd naive = serial::hankel_lift_naive(v, spec);
    REQUIRE(fast.rows() == naive.rows());
    REQUIRE(fast.cols() == naive.cols());
    CHECK((fast - naive).cwiseAbs().maxCoeff() == 0.0);

    // spot-check the layout: row j is origin j (x-fastest), column is
    // offset + m^3*(shot + S*echo)
    const int rx = 4, ry = 4;
    const int ox = 3, oy = 2, oz = 1;
    const Index row = ox + rx * (oy + ry * oz);
    for (int t = 0; t < 2; ++t)
        for (int n = 0; n < 3; ++n)
            for (int dz = 0; dz < 3; ++dz)
                for (int dy2 = 0; dy2 < 3; ++dy2)
                    for (int dx = 0; dx < 3; ++dx) {
                        const Index col = dx + 3 * (dy2 + 3 * dz) + 27 * (t + 2 * n);
                        CHECK(fast(row, col) == v.at(ox + dx, oy + dy2, oz + dz, 0, t, n));
                    }
}

TEST_CASE("unlift(lift(x)) == x to 1e-14 and matches the naive unlift") {
    const GridDims d{8, 7, 6};
    const HankelSpec spec = spec_for(d, 3, 3, 2, HankelSpec::Mode::shots_and_echoes);
    const VolumeSet v = random_kspace_set(d, 3, 2, 7);
    const Eigen::MatrixXcd lifted = hankel_lift(v, spec);
    const VolumeSet back = hankel_unlift(lifted, spec);
    for (std::size_t i = 0; i < v.data.size(); ++i)
        CHECK(std::abs(back.data[i] - v.data[i]) < 1e-14);

    const VolumeSet naive = serial::hankel_unlift_naive(lifted, spec);
    for (std::size_t i = 0; i < v.data.size(); ++i)
        CHECK(std::abs(back.data[i] - naive.data[i]) < 1e-15);
}

TEST_CASE("multiplicity counted by lifting a one-hot volume") {
    const GridDims d{6, 6, 6};
    const HankelSpec spec = spec_for(d, 3, 1, 1, HankelSpec::Mode::shots);

    // corner sample belongs to exactly one window; an interior sample (>= m-1
    // from every face) to 3 windows per axis = 27
    VolumeSet corner = VolumeSet::zeros(d, 1, 1, 1, Space::kspace);
    corner.at(0, 0, 0) = 1.0;
    CHECK((hankel_lift(corner, spec).cwiseAbs().array() > 0.0).count() == 1);

    VolumeSet interior = VolumeSet::zeros(d, 1, 1, 1, Space::kspace);
    interior.at(3, 3, 3) = 1.0;
    CHECK((hankel_lift(interior, spec).cwiseAbs().array() > 0.0).count() == 27);

    // 1D-equivalent count along one axis: edge-adjacent position has 2,
    // interior 3
    VolumeSet edge = VolumeSet::zeros(d, 1, 1, 1, Space::kspace);
    edge.at(1, 0, 0) = 1.0;
    CHECK((hankel_lift(edge, spec).cwiseAbs().array() > 0.0).count() == 2);
}

TEST_CASE("zero matrix unlifts to the zero volume") {
    const HankelSpec spec = spec_for({6, 6, 6}, 3, 2, 1, HankelSpec::Mode::shots);
    const VolumeSet z =
        hankel_unlift(Eigen::MatrixXcd::Zero(spec.rows(), spec.cols()), spec);
    for (const Cplx& c : z.data) CHECK(c == Cplx(0.0, 0.0));
}

TEST_CASE("unnormalized unlift is the exact adjoint of lift") {
    const GridDims d{6, 5, 5};
    const HankelSpec spec = spec_for(d, 3, 2, 2, HankelSpec::Mode::shots_and_echoes);
    const VolumeSet x = random_kspace_set(d, 2, 2, 3);
    Rng rng(4);
    Eigen::MatrixXcd m(spec.rows(), spec.cols());
    for (Index j = 0; j < m.cols(); ++j)
        for (Index i = 0; i < m.rows(); ++i) m(i, j) = Cplx(rng.normal(), rng.normal());

    const Eigen::MatrixXcd lx = hankel_lift(x, spec);
    Cplx lhs(0.0, 0.0);
    for (Index j = 0; j < m.cols(); ++j)
        for (Index i = 0; i < m.rows(); ++i) lhs += std::conj(lx(i, j)) * m(i, j);
    const VolumeSet adj = hankel_unlift_unnormalized(m, spec);
    const Cplx rhs = dot(x, adj);
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::abs(lhs));
}

TEST_CASE("kernel larger than a dimension is rejected") {
    CHECK_THROWS_AS((void)spec_for({6, 6, 2}, 3, 2, 1, HankelSpec::Mode::shots).validate(),
                    config_error);
    CHECK_THROWS_AS((void)spec_for({6, 6, 6}, 4, 2, 1, HankelSpec::Mode::shots).validate(),
                    config_error);
}

TEST_CASE("rank_project leaves a rank-1 matrix unchanged under fixed_rank 1") {
    Rng rng(10);
    Eigen::VectorXcd u(30), v(12);
    for (Index i = 0; i < u.size(); ++i) u(i) = Cplx(rng.normal(), rng.normal());
    for (Index i = 0; i < v.size(); ++i) v(i) = Cplx(rng.normal(), rng.normal());
    const Eigen::MatrixXcd m = u * v.adjoint();
    RankPolicy policy{RankPolicy::Mode::fixed_rank, 1.0};
    const Eigen::MatrixXcd p = rank_project(m, policy);
    CHECK((p - m).norm() / m.norm() < 1e-12);
}

TEST_CASE("rank_project matches the full-SVD oracle (Eckart-Young)") {
    Rng rng(20);
    Eigen::MatrixXcd m(20, 10);
    for (Index j = 0; j < m.cols(); ++j)
        for (Index i = 0; i < m.rows(); ++i) m(i, j) = Cplx(rng.normal(), rng.normal());
    RankPolicy policy{RankPolicy::Mode::fixed_rank, 3.0};
    const Eigen::MatrixXcd fast = rank_project(m, policy);
    const Eigen::MatrixXcd oracle = serial::rank_project_naive(m, policy);
    CHECK((fast - oracle).norm() / oracle.norm() < 1e-10);
}

TEST_CASE("gram path agrees with the dense SVD path on tall matrices") {
    Rng rng(30);
    Eigen::MatrixXcd m(400, 24);
    for (Index j = 0; j < m.cols(); ++j)
        for (Index i = 0; i < m.rows(); ++i) m(i, j) = Cplx(rng.normal(), rng.normal());
    for (const RankPolicy policy :
         {RankPolicy{RankPolicy::Mode::fixed_rank, 5.0},
          RankPolicy{RankPolicy::Mode::energy_fraction, 0.9},
          RankPolicy{RankPolicy::Mode::relative_sigma, 0.4}}) {
        const RankProjection tall = rank_project_info(m, policy); // rows >= 4*cols: gram path
        const Eigen::MatrixXcd oracle = serial::rank_project_naive(m, policy);
        CHECK((tall.matrix - oracle).norm() / oracle.norm() < 1e-8);
    }
}

TEST_CASE("rank_project is idempotent and non-expansive") {
    Rng rng(40);
    Eigen::MatrixXcd m(25, 15);
    for (Index j = 0; j < m.cols(); ++j)
        for (Index i = 0; i < m.rows(); ++i) m(i, j) = Cplx(rng.normal(), rng.normal());
    for (const RankPolicy policy : {RankPolicy{RankPolicy::Mode::fixed_rank, 4.0},
                                    RankPolicy{RankPolicy::Mode::relative_sigma, 0.5}}) {
        const Eigen::MatrixXcd once = rank_project(m, policy);
        const Eigen::MatrixXcd twice = rank_project(once, policy);
        CHECK((twice - once).norm() <= 1e-10 * std::max(1.0, once.norm()));
        CHECK(once.norm() <= m.norm() + 1e-12);
    }
    // energy_fraction is idempotent on decaying spectra (the prefix that
    // reaches eta of the truncated energy stays the same)
    Eigen::MatrixXcd diag = Eigen::MatrixXcd::Zero(6, 4);
    diag(0, 0) = 8.0;
    diag(1, 1) = 2.0;
    diag(2, 2) = 1.0;
    diag(3, 3) = 0.5;
    const RankPolicy energy{RankPolicy::Mode::energy_fraction, 0.9};
    const Eigen::MatrixXcd once = rank_project(diag, energy);
    const Eigen::MatrixXcd twice = rank_project(once, energy);
    CHECK((twice - once).norm() <= 1e-10);
    CHECK(once.norm() <= diag.norm() + 1e-12);
}

TEST_CASE("energy_fraction keeps the smallest prefix reaching the energy target") {
    // diagonal 3,2,1: energies 9,4,1 of 14; eta=0.6 needs {3} (9/14 ~ 0.64)
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(5, 3);
    m(0, 0) = 3.0;
    m(1, 1) = 2.0;
    m(2, 2) = 1.0;
    CHECK(rank_project_info(m, {RankPolicy::Mode::energy_fraction, 0.6}).retained_rank == 1);
    CHECK(rank_project_info(m, {RankPolicy::Mode::energy_fraction, 0.65}).retained_rank == 2);
    CHECK(rank_project_info(m, {RankPolicy::Mode::energy_fraction, 0.99}).retained_rank == 3);
    CHECK(rank_project_info(m, {RankPolicy::Mode::relative_sigma, 0.5}).retained_rank == 2);
    CHECK(rank_project_info(m, {RankPolicy::Mode::fixed_rank, 99.0}).retained_rank == 3);
}

namespace {

struct SmokeSetup {
    Protocol p;
    ShotPlan plan;
    CoilSet coils;
    Phantom ph;
    VolumeSet data;
    VolumeSet truth;

    SmokeSetup(int r_in, int r_z, int shots, int z_shift, int coils_n, std::uint64_t seed,
               std::vector<double> te = {36.0}, PhantomOptions opt = {})
        : p{} {
        const GridDims d{16, 16, 8};
        p.dims = d;
        p.te_ms = std::move(te);
        p.r_inplane = r_in;
        p.r_z = r_z;
        p.n_shots = shots;
        p.caipi_z_shift = z_shift;
        p.bw_pe_hz_per_px = 16.85;
        plan = generate_shot_plan(p);
        coils = make_coils(d, coils_n, seed + 1);
        ph = make_phantom(d, seed, PhantomPreset::ellipsoids, opt);
        data = simulate_acquisition(ph, coils, plan, p.te_ms, {}, {});
        truth = echo_images(ph, p.te_ms);
    }
};

} // namespace

TEST_CASE("noiseless full sampling with identity projection recovers the truth to 1e-6") {
    // mild field so the consistent system is well conditioned at 16^3
    PhantomOptions mild;
    mild.df_poly_hz = 6.0;
    mild.df_blob_hz = 8.0;
    SmokeSetup s(1, 1, 2, 0, 4, 50, {36.0}, mild);
    HankelSpec spec;
    spec.kernel = 3;
    RankPolicy policy{RankPolicy::Mode::fixed_rank, 1e9}; // projection is the identity
    IhtConfig iht;
    iht.max_iter = 300;
    iht.rel_change_tol = 1e-9;
    const EncodingContext ctx(s.plan, s.coils, s.ph.df_hz);
    const BudaResult res = buda_reconstruct(ctx, s.data, spec, policy, iht);

    double err = 0.0;
    for (std::size_t i = 0; i < s.truth.data.size(); ++i) {
        const double mag = std::abs(res.combined.data[i]) - std::abs(s.truth.data[i]);
        err += mag * mag;
    }
    CHECK(std::sqrt(err) / norm2(s.truth) < 1e-6);
    CHECK(res.final_data_residual <= res.zero_init_residual);
}

TEST_CASE("zero data stops after one iteration with zero images") {
    SmokeSetup s(4, 2, 4, 1, 4, 51);
    const VolumeSet zero = VolumeSet::zeros({16, 16, 8}, 4, 4, 1, Space::kspace);
    HankelSpec spec;
    spec.kernel = 3;
    RankPolicy policy{RankPolicy::Mode::fixed_rank, 20.0};
    IhtConfig iht;
    const EncodingContext ctx(s.plan, s.coils, s.ph.df_hz);
    const BudaResult res = buda_reconstruct(ctx, zero, spec, policy, iht);
    CHECK(res.iterations == 1);
    CHECK(res.converged);
    for (const Cplx& c : res.shot_images.data) CHECK(std::abs(c) == 0.0);
    for (const Cplx& c : res.combined.data) CHECK(std::abs(c) == 0.0);
}

TEST_CASE("joint reconstruction of single-echo data is bit-compatible with shots mode") {
    SmokeSetup s(4, 2, 4, 1, 6, 52);
    HankelSpec spec;
    spec.kernel = 3;
    RankPolicy policy{RankPolicy::Mode::fixed_rank, 30.0};
    IhtConfig iht;
    iht.max_iter = 12;
    const EncodingContext ctx(s.plan, s.coils, s.ph.df_hz);
    const BudaResult a = buda_reconstruct(ctx, s.data, spec, policy, iht);
    const BudaResult b = buda_joint_reconstruct(ctx, s.data, spec, policy, iht);
    REQUIRE(a.shot_images.data.size() == b.shot_images.data.size());
    CHECK(a.shot_images.data == b.shot_images.data);
    CHECK(a.combined.data == b.combined.data);
    CHECK(a.iterations == b.iterations);
}

TEST_CASE("solver stops by the relative-change rule and logs every iteration") {
    SmokeSetup s(4, 1, 2, 0, 6, 53);
    HankelSpec spec;
    spec.kernel = 3;
    RankPolicy policy{RankPolicy::Mode::fixed_rank, 27.0};
    IhtConfig iht;
    iht.max_iter = 100;
    const EncodingContext ctx(s.plan, s.coils, s.ph.df_hz);
    const BudaResult res = buda_reconstruct(ctx, s.data, spec, policy, iht);
    CHECK((res.stop_reason == "rel_change" || res.stop_reason == "max_iter"));
    CHECK(res.log.size() == static_cast<std::size_t>(res.iterations));
    if (res.converged) CHECK(res.log.back().rel_change < iht.rel_change_tol);
    CHECK(res.final_data_residual <= res.zero_init_residual);
    for (const IhtIteration& it : res.log) CHECK(it.retained_rank == 27);
}

TEST_CASE("iteration log round-trips through the CSV writer") {
    std::vector<IhtIteration> log{{1, 10.5, 0.9, 27}, {2, 3.25, 0.01, 27}};
    const std::string path = "/tmp/budasim_tests_iters.csv";
    write_iteration_log(path, log);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "iteration,data_residual,rel_change,retained_rank");
    std::getline(in, line);
    CHECK(line.substr(0, 2) == "1,");
    std::getline(in, line);
    CHECK(line.substr(0, 2) == "2,");
}

TEST_CASE("shots mode rejects multi-echo data") {
    SmokeSetup s(4, 2, 4, 1, 4, 54, {18.0, 43.17});
    HankelSpec spec;
    spec.kernel = 3;
    RankPolicy policy{RankPolicy::Mode::fixed_rank, 20.0};
    const EncodingContext ctx(s.plan, s.coils, s.ph.df_hz);
    CHECK_THROWS_AS((void)buda_reconstruct(ctx, s.data, spec, policy, IhtConfig{}), data_error);
}
