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
#include "buda/slr.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "buda/fft.hpp"
#include "buda/parallel.hpp"
#include "buda/rng.hpp"

namespace buda {

void HankelSpec::validate() const {
    dims.validate();
    if (kernel < 1 || kernel % 2 == 0) throw config_error("hankel: kernel must be odd and >= 1");
    if (kernel > dims.nx || kernel > dims.ny || kernel > dims.nz)
        throw config_error("hankel: kernel exceeds a grid dimension");
    if (n_shots < 1) throw config_error("hankel: n_shots must be >= 1");
    if (mode == Mode::shots) {
        if (n_echoes != 1) throw config_error("hankel: shots mode lifts a single echo");
    } else if (n_echoes < 1) {
        throw config_error("hankel: n_echoes must be >= 1");
    }
}

void RankPolicy::validate() const {
    switch (mode) {
        case Mode::fixed_rank:
            if (value < 1.0) throw config_error("rank policy: fixed rank must be >= 1");
            break;
        case Mode::energy_fraction:
        case Mode::relative_sigma:
            if (value <= 0.0 || value >= 1.0)
                throw config_error("rank policy: fraction must lie in (0, 1)");
            break;
    }
}

int RankPolicy::retained(const std::vector<double>& sigma) const {
    const int n = static_cast<int>(sigma.size());
    switch (mode) {
        case Mode::fixed_rank:
            return std::min(n, static_cast<int>(std::llround(value)));
        case Mode::energy_fraction: {
            double total = 0.0;
            for (double s : sigma) total += s * s;
            if (total <= 0.0) return 0;
            double acc = 0.0;
            for (int i = 0; i < n; ++i) {
                acc += sigma[static_cast<std::size_t>(i)] * sigma[static_cast<std::size_t>(i)];
                if (acc >= value * total) return i + 1;
            }
            return n;
        }
        case Mode::relative_sigma: {
            if (sigma.empty() || sigma[0] <= 0.0) return 0;
            int r = 0;
            while (r < n && sigma[static_cast<std::size_t>(r)] >= value * sigma[0]) ++r;
            return r;
        }
    }
    return 0;
}

namespace {

void check_lift_input(const VolumeSet& ksp, const HankelSpec& spec) {
    spec.validate();
    ksp.validate();
    if (!(ksp.dims == spec.dims) || ksp.n_coils != 1 || ksp.n_shots != spec.n_shots ||
        ksp.n_echoes != spec.lifted_echoes())
        throw data_error("hankel lift: volume shape does not match the spec");
}

struct WindowRange {
    int lo, hi; // valid origins for one output coordinate
};

inline WindowRange origin_range(int coord, int n, int m) {
    return {std::max(0, coord - m + 1), std::min(coord, n - m)};
}

} // namespace

Eigen::MatrixXcd hankel_lift(const VolumeSet& ksp, const HankelSpec& spec) {
    check_lift_input(ksp, spec);
    const int m = spec.kernel;
    const GridDims d = spec.dims;
    const int rx = d.nx - m + 1, ry = d.ny - m + 1;
    const int n_echoes = spec.lifted_echoes();
    const Index m3 = Index(m) * m * m;

    Eigen::MatrixXcd out(spec.rows(), spec.cols());
    parallel_for(spec.rows(), [&](Index row) {
        const int ox = static_cast<int>(row % rx);
        const int oy = static_cast<int>((row / rx) % ry);
        const int oz = static_cast<int>(row / (Index(rx) * ry));
        for (int n = 0; n < n_echoes; ++n)
            for (int t = 0; t < spec.n_shots; ++t) {
                const Cplx* blk = ksp.block(0, t, n);
                Index col = m3 * (Index(t) + Index(spec.n_shots) * n);
                for (int dz = 0; dz < m; ++dz)
                    for (int dy = 0; dy < m; ++dy) {
                        const Cplx* src = blk + Index(ox) +
                                          Index(d.nx) * (Index(oy + dy) +
                                                         Index(d.ny) * Index(oz + dz));
                        for (int dx = 0; dx < m; ++dx) out(row, col++) = src[dx];
                    }
            }
    });
    return out;
}

namespace {

VolumeSet unlift_impl(const Eigen::MatrixXcd& mat, const HankelSpec& spec, bool normalize) {
    spec.validate();
    if (mat.rows() != spec.rows() || mat.cols() != spec.cols())
        throw data_error("hankel unlift: matrix shape does not match the spec");

    const int m = spec.kernel;
    const GridDims d = spec.dims;
    const int rx = d.nx - m + 1, ry = d.ny - m + 1;
    const int n_echoes = spec.lifted_echoes();
    const Index m3 = Index(m) * m * m;

    VolumeSet out = VolumeSet::zeros(d, 1, spec.n_shots, n_echoes, Space::kspace);
    parallel_for(d.voxels(), [&](Index vox) {
        const int x = static_cast<int>(vox % d.nx);
        const int y = static_cast<int>((vox / d.nx) % d.ny);
        const int z = static_cast<int>(vox / (Index(d.nx) * d.ny));
        const WindowRange wx = origin_range(x, d.nx, m);
        const WindowRange wy = origin_range(y, d.ny, m);
        const WindowRange wz = origin_range(z, d.nz, m);
        const long mult = long(wx.hi - wx.lo + 1) * (wy.hi - wy.lo + 1) * (wz.hi - wz.lo + 1);
        for (int n = 0; n < n_echoes; ++n)
            for (int t = 0; t < spec.n_shots; ++t) {
                Cplx sum(0.0, 0.0);
                for (int oz = wz.lo; oz <= wz.hi; ++oz)
                    for (int oy = wy.lo; oy <= wy.hi; ++oy)
                        for (int ox = wx.lo; ox <= wx.hi; ++ox) {
                            const Index row =
                                Index(ox) + Index(rx) * (Index(oy) + Index(ry) * Index(oz));
                            const Index col = Index(x - ox) + Index(m) * (Index(y - oy) +
                                                                          Index(m) * (z - oz)) +
                                              m3 * (Index(t) + Index(spec.n_shots) * n);
                            sum += mat(row, col);
                        }
                out.block(0, t, n)[vox] = normalize ? sum / double(mult) : sum;
            }
    });
    return out;
}

} // namespace

VolumeSet hankel_unlift(const Eigen::MatrixXcd& mat, const HankelSpec& spec) {
    return unlift_impl(mat, spec, true);
}

VolumeSet hankel_unlift_unnormalized(const Eigen::MatrixXcd& mat, const HankelSpec& spec) {
    return unlift_impl(mat, spec, false);
}

namespace {

constexpr int kGramColBlock = 64;
constexpr int kRowBlock = 2048;

// Y^H Y with a fixed block partition so the result is bitwise independent of
// the thread count. Eigen itself runs sequentially (EIGEN_DONT_PARALLELIZE).
Eigen::MatrixXcd gram_blocked(const Eigen::MatrixXcd& y) {
    const Index cols = y.cols();
    const Index nb = (cols + kGramColBlock - 1) / kGramColBlock;
    std::vector<std::pair<int, int>> pairs;
    for (int bi = 0; bi < nb; ++bi)
        for (int bj = bi; bj < nb; ++bj) pairs.emplace_back(bi, bj);

    Eigen::MatrixXcd g(cols, cols);
    parallel_for(Index(pairs.size()), [&](Index k) {
        const auto [bi, bj] = pairs[static_cast<std::size_t>(k)];
        const Index i0 = Index(bi) * kGramColBlock, j0 = Index(bj) * kGramColBlock;
        const Index iw = std::min<Index>(kGramColBlock, cols - i0);
        const Index jw = std::min<Index>(kGramColBlock, cols - j0);
        g.block(i0, j0, iw, jw).noalias() = y.middleCols(i0, iw).adjoint() * y.middleCols(j0, jw);
    });
    for (Index bi = 0; bi < nb; ++bi)
        for (Index bj = bi + 1; bj < nb; ++bj) {
            const Index i0 = bi * kGramColBlock, j0 = bj * kGramColBlock;
            const Index iw = std::min<Index>(kGramColBlock, cols - i0);
            const Index jw = std::min<Index>(kGramColBlock, cols - j0);
            g.block(j0, i0, jw, iw) = g.block(i0, j0, iw, jw).adjoint();
        }
    return g;
}

// Y * V over fixed row blocks, deterministic for any thread count.
Eigen::MatrixXcd times_blocked(const Eigen::MatrixXcd& y, const Eigen::MatrixXcd& v) {
    Eigen::MatrixXcd w(y.rows(), v.cols());
    const Index nb = (y.rows() + kRowBlock - 1) / kRowBlock;
    parallel_for(nb, [&](Index b) {
        const Index r0 = b * kRowBlock;
        const Index rw = std::min<Index>(kRowBlock, y.rows() - r0);
        w.middleRows(r0, rw).noalias() = y.middleRows(r0, rw) * v;
    });
    return w;
}

RankProjection rank_project_gram(const Eigen::MatrixXcd& m, const RankPolicy& policy) {
    const Eigen::MatrixXcd g = gram_blocked(m);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(g);
    if (eig.info() != Eigen::Success)
        throw data_error("rank_project: eigendecomposition of the Gram matrix failed");

    const Index n = g.cols();
    std::vector<double> sigma(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i)
        sigma[static_cast<std::size_t>(i)] = std::sqrt(std::max(0.0, eig.eigenvalues()(n - 1 - i)));
    const int r = policy.retained(sigma);

    RankProjection out;
    out.retained_rank = r;
    if (r == 0) {
        out.matrix = Eigen::MatrixXcd::Zero(m.rows(), m.cols());
        return out;
    }
    if (r == n) {
        out.matrix = m;
        return out;
    }
    Eigen::MatrixXcd vr(n, r);
    for (int i = 0; i < r; ++i) vr.col(i) = eig.eigenvectors().col(n - 1 - i);
    const Eigen::MatrixXcd w = times_blocked(m, vr);
    out.matrix = times_blocked(w, vr.adjoint());
    return out;
}

RankProjection rank_project_dense(const Eigen::MatrixXcd& m, const RankPolicy& policy) {
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Index n = svd.singularValues().size();
    std::vector<double> sigma(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) sigma[static_cast<std::size_t>(i)] = svd.singularValues()(i);
    const int r = policy.retained(sigma);

    RankProjection out;
    out.retained_rank = r;
    if (r == 0) {
        out.matrix = Eigen::MatrixXcd::Zero(m.rows(), m.cols());
        return out;
    }
    out.matrix = svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal() *
                 svd.matrixV().leftCols(r).adjoint();
    return out;
}

} // namespace

RankProjection rank_project_info(const Eigen::MatrixXcd& m, const RankPolicy& policy) {
    policy.validate();
    if (!m.allFinite()) throw data_error("rank_project: matrix has non-finite entries");
    if (m.rows() >= 4 * m.cols() && m.cols() > 1) return rank_project_gram(m, policy);
    return rank_project_dense(m, policy);
}

Eigen::MatrixXcd rank_project(const Eigen::MatrixXcd& m, const RankPolicy& policy) {
    return rank_project_info(m, policy).matrix;
}

namespace {

VolumeSet fft_blocks(const VolumeSet& v, FftDirection dir) { return fft3_centered(v, dir); }

double residual_norm(const EncodingContext& ctx, const VolumeSet& y, const VolumeSet& d) {
    const VolumeSet imgs = fft_blocks(y, FftDirection::inverse);
    const VolumeSet ay = encode_forward(ctx, imgs);
    double s = 0.0;
    for (std::size_t i = 0; i < ay.data.size(); ++i) s += std::norm(ay.data[i] - d.data[i]);
    return std::sqrt(s);
}

double power_iteration_lipschitz(const EncodingContext& ctx, int n_echoes, int iters) {
    VolumeSet v = VolumeSet::zeros(ctx.dims(), 1, ctx.plan.n_shots, n_echoes, Space::kspace);
    Rng rng(0x5bd1e995u);
    for (Cplx& c : v.data) c = Cplx(rng.normal(), rng.normal());
    double nv = norm2(v);
    if (nv == 0.0) return 1.0;
    for (Cplx& c : v.data) c /= nv;

    double lam = 1.0;
    for (int it = 0; it < iters; ++it) {
        VolumeSet imgs = fft_blocks(v, FftDirection::inverse);
        VolumeSet ay = encode_forward(ctx, imgs);
        VolumeSet adj = encode_adjoint(ctx, ay);
        VolumeSet w = fft_blocks(adj, FftDirection::forward);
        lam = norm2(w);
        if (lam <= 0.0) return 1.0;
        for (std::size_t i = 0; i < v.data.size(); ++i) v.data[i] = w.data[i] / lam;
    }
    return lam;
}

BudaResult iht_solve(const EncodingContext& ctx, const VolumeSet& d, HankelSpec spec,
                     const RankPolicy& policy, const IhtConfig& iht) {
    d.validate();
    policy.validate();
    if (iht.rel_change_tol <= 0.0) throw config_error("iht: rel_change_tol must be positive");
    if (!(d.dims == ctx.dims()) || d.n_coils != ctx.coils.n_coils ||
        d.n_shots != ctx.plan.n_shots)
        throw data_error("buda_reconstruct: data does not match the encoding context");

    spec.dims = ctx.dims();
    spec.n_shots = ctx.plan.n_shots;
    spec.n_echoes = spec.mode == HankelSpec::Mode::shots ? 1 : d.n_echoes;
    if (spec.mode == HankelSpec::Mode::shots && d.n_echoes != 1)
        throw data_error("buda_reconstruct: shots mode expects single-echo data");
    spec.validate();

    BudaResult result;
    result.zero_init_residual = norm2(d);

    double mu = iht.mu;
    if (iht.step == IhtConfig::Step::auto_lipschitz) {
        const double lip = power_iteration_lipschitz(ctx, d.n_echoes, iht.power_iters);
        mu = 0.99 / std::max(lip, 1e-12);
    } else if (mu <= 0.0) {
        throw config_error("iht: fixed step requires mu > 0");
    }
    result.step_size = mu;

    VolumeSet y = VolumeSet::zeros(ctx.dims(), 1, ctx.plan.n_shots, d.n_echoes, Space::kspace);
    bool converged = false;
    int iter = 0;
    while (iter < iht.max_iter) {
        ++iter;
        const VolumeSet imgs = fft_blocks(y, FftDirection::inverse);
        VolumeSet r = encode_forward(ctx, imgs);
        for (std::size_t i = 0; i < r.data.size(); ++i) r.data[i] -= d.data[i];
        const double data_res = norm2(r);
        const VolumeSet g_img = encode_adjoint(ctx, r);
        const VolumeSet g = fft_blocks(g_img, FftDirection::forward);

        VolumeSet z = y;
        for (std::size_t i = 0; i < z.data.size(); ++i) z.data[i] -= mu * g.data[i];

        const Eigen::MatrixXcd lifted = hankel_lift(z, spec);
        const RankProjection proj = rank_project_info(lifted, policy);
        VolumeSet y_new = hankel_unlift(proj.matrix, spec);

        double diff2 = 0.0;
        for (std::size_t i = 0; i < y.data.size(); ++i) diff2 += std::norm(y_new.data[i] - y.data[i]);
        const double prev_norm = norm2(y);
        const double new_norm = norm2(y_new);
        if (!std::isfinite(new_norm)) {
            std::ostringstream msg;
            msg << "iht: non-finite iterate at iteration " << iter << " (step " << mu
                << ", data residual " << data_res << ")";
            throw data_error(msg.str());
        }
        double rel;
        if (prev_norm > 0.0)
            rel = std::sqrt(diff2) / prev_norm;
        else
            rel = new_norm > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;

        result.log.push_back({iter, data_res, rel, proj.retained_rank});
        y = std::move(y_new);
        if (rel < iht.rel_change_tol) {
            converged = true;
            break;
        }
    }

    result.converged = converged;
    result.iterations = iter;
    result.stop_reason = converged ? "rel_change" : "max_iter";
    result.final_data_residual = residual_norm(ctx, y, d);

    result.shot_images = fft_blocks(y, FftDirection::inverse);
    result.combined = VolumeSet::zeros(ctx.dims(), 1, 1, d.n_echoes, Space::image);
    const Index nvox = ctx.dims().voxels();
    for (int n = 0; n < d.n_echoes; ++n) {
        Cplx* dst = result.combined.block(0, 0, n);
        for (int t = 0; t < ctx.plan.n_shots; ++t) {
            const Cplx* src = result.shot_images.block(0, t, n);
            for (Index i = 0; i < nvox; ++i) dst[i] += std::abs(src[i]);
        }
        for (Index i = 0; i < nvox; ++i) dst[i] /= double(ctx.plan.n_shots);
    }
    return result;
}

} // namespace

BudaResult buda_reconstruct(const EncodingContext& ctx, const VolumeSet& d, const HankelSpec& spec,
                            const RankPolicy& policy, const IhtConfig& iht) {
    HankelSpec s = spec;
    s.mode = HankelSpec::Mode::shots;
    return iht_solve(ctx, d, s, policy, iht);
}

BudaResult buda_joint_reconstruct(const EncodingContext& ctx, const VolumeSet& d,
                                  const HankelSpec& spec, const RankPolicy& policy,
                                  const IhtConfig& iht) {
    HankelSpec s = spec;
    s.mode = HankelSpec::Mode::shots_and_echoes;
    return iht_solve(ctx, d, s, policy, iht);
}

void write_iteration_log(const std::string& path, const std::vector<IhtIteration>& log) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw io_error("cannot open " + path + " for writing");
    out << "iteration,data_residual,rel_change,retained_rank\n";
    for (const auto& it : log)
        out << it.iter << ',' << it.data_residual << ',' << it.rel_change << ','
            << it.retained_rank << '\n';
}

} // namespace buda
