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
#include "buda/serial_ref.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

#include "buda/slr.hpp"

namespace buda::serial {

namespace {
constexpr double kTwoPi = 6.28318530717958647692528676656;
}

void dft3_centered_naive(const Cplx* in, Cplx* out, GridDims d, FftDirection dir) {
    const double sign = dir == FftDirection::forward ? 1.0 : -1.0;
    const int cx = d.nx / 2, cy = d.ny / 2, cz = d.nz / 2;
    const double scale = 1.0 / std::sqrt(static_cast<double>(d.voxels()));

    // K(k) = scale * sum_r f(r) * exp(sign*i*2*pi*sum_axis (r-c)(k-c)/n)
    auto table = [&](int n, int c) {
        std::vector<Cplx> t(static_cast<std::size_t>(n) * n);
        for (int k = 0; k < n; ++k)
            for (int r = 0; r < n; ++r) {
                const double ang = sign * kTwoPi * double(r - c) * double(k - c) / n;
                t[static_cast<std::size_t>(r + n * k)] = Cplx(std::cos(ang), std::sin(ang));
            }
        return t;
    };
    const auto tx = table(d.nx, cx);
    const auto ty = table(d.ny, cy);
    const auto tz = table(d.nz, cz);

    for (int kz = 0; kz < d.nz; ++kz)
        for (int ky = 0; ky < d.ny; ++ky)
            for (int kx = 0; kx < d.nx; ++kx) {
                Cplx acc(0.0, 0.0);
                for (int z = 0; z < d.nz; ++z)
                    for (int y = 0; y < d.ny; ++y)
                        for (int x = 0; x < d.nx; ++x)
                            acc += in[Index(x) + Index(d.nx) * (Index(y) + Index(d.ny) * z)] *
                                   tx[static_cast<std::size_t>(x + d.nx * kx)] *
                                   ty[static_cast<std::size_t>(y + d.ny * ky)] *
                                   tz[static_cast<std::size_t>(z + d.nz * kz)];
                out[Index(kx) + Index(d.nx) * (Index(ky) + Index(d.ny) * kz)] = acc * scale;
            }
}

Eigen::MatrixXcd hankel_lift_naive(const VolumeSet& ksp, const HankelSpec& spec) {
    const int m = spec.kernel;
    const GridDims d = spec.dims;
    const int rx = d.nx - m + 1, ry = d.ny - m + 1, rz = d.nz - m + 1;
    const int n_echoes = spec.lifted_echoes();

    Eigen::MatrixXcd out(spec.rows(), spec.cols());
    for (int oz = 0; oz < rz; ++oz)
        for (int oy = 0; oy < ry; ++oy)
            for (int ox = 0; ox < rx; ++ox) {
                // origins enumerated x-fastest, matching row = ox + rx*(oy + ry*oz)
                const Index r = Index(ox) + Index(rx) * (Index(oy) + Index(ry) * oz);
                Index col = 0;
                for (int n = 0; n < n_echoes; ++n)
                    for (int t = 0; t < spec.n_shots; ++t)
                        for (int dz = 0; dz < m; ++dz)
                            for (int dy = 0; dy < m; ++dy)
                                for (int dx = 0; dx < m; ++dx)
                                    out(r, col++) = ksp.at(ox + dx, oy + dy, oz + dz, 0, t, n);
            }
    return out;
}

VolumeSet hankel_unlift_naive(const Eigen::MatrixXcd& mat, const HankelSpec& spec) {
    const int m = spec.kernel;
    const GridDims d = spec.dims;
    const int rx = d.nx - m + 1, ry = d.ny - m + 1, rz = d.nz - m + 1;
    const int n_echoes = spec.lifted_echoes();

    VolumeSet sums = VolumeSet::zeros(d, 1, spec.n_shots, n_echoes, Space::kspace);
    std::vector<long> counts(static_cast<std::size_t>(d.voxels()), 0);

    for (int oz = 0; oz < rz; ++oz)
        for (int oy = 0; oy < ry; ++oy)
            for (int ox = 0; ox < rx; ++ox) {
                const Index row = Index(ox) + Index(rx) * (Index(oy) + Index(ry) * oz);
                Index col = 0;
                for (int n = 0; n < n_echoes; ++n)
                    for (int t = 0; t < spec.n_shots; ++t)
                        for (int dz = 0; dz < m; ++dz)
                            for (int dy = 0; dy < m; ++dy)
                                for (int dx = 0; dx < m; ++dx) {
                                    sums.at(ox + dx, oy + dy, oz + dz, 0, t, n) += mat(row, col++);
                                    if (n == 0 && t == 0)
                                        ++counts[static_cast<std::size_t>(
                                            sums.index(ox + dx, oy + dy, oz + dz, 0, 0, 0))];
                                }
            }

    for (int n = 0; n < n_echoes; ++n)
        for (int t = 0; t < spec.n_shots; ++t) {
            Cplx* blk = sums.block(0, t, n);
            for (Index i = 0; i < d.voxels(); ++i)
                blk[i] /= double(counts[static_cast<std::size_t>(i)]);
        }
    return sums;
}

Eigen::MatrixXcd rank_project_naive(const Eigen::MatrixXcd& mat, const RankPolicy& policy) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(mat, Eigen::ComputeThinU | Eigen::ComputeThinV);
    std::vector<double> sigma(static_cast<std::size_t>(svd.singularValues().size()));
    for (Index i = 0; i < svd.singularValues().size(); ++i)
        sigma[static_cast<std::size_t>(i)] = svd.singularValues()(i);
    const int r = policy.retained(sigma);
    if (r == 0) return Eigen::MatrixXcd::Zero(mat.rows(), mat.cols());
    return svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal() *
           svd.matrixV().leftCols(r).adjoint();
}

double ssim_direct(const std::vector<double>& x, const std::vector<double>& ref, GridDims d) {
    const int win = 11;
    const int half = win / 2;
    const double sigma = 1.5;
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;

    std::vector<double> w(static_cast<std::size_t>(win) * win);
    double wsum = 0.0;
    for (int j = 0; j < win; ++j)
        for (int i = 0; i < win; ++i) {
            const double v =
                std::exp(-((i - half) * (i - half) + (j - half) * (j - half)) / (2 * sigma * sigma));
            w[static_cast<std::size_t>(i + win * j)] = v;
            wsum += v;
        }
    for (double& v : w) v /= wsum;

    double slice_acc = 0.0;
    for (int z = 0; z < d.nz; ++z) {
        double acc = 0.0;
        long count = 0;
        for (int cy = half; cy < d.ny - half; ++cy)
            for (int cx = half; cx < d.nx - half; ++cx) {
                double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
                for (int j = 0; j < win; ++j)
                    for (int i = 0; i < win; ++i) {
                        const std::size_t idx = static_cast<std::size_t>(
                            (cx + i - half) + Index(d.nx) * ((cy + j - half) + Index(d.ny) * z));
                        const double wv = w[static_cast<std::size_t>(i + win * j)];
                        mx += wv * x[idx];
                        my += wv * ref[idx];
                        sxx += wv * x[idx] * x[idx];
                        syy += wv * ref[idx] * ref[idx];
                        sxy += wv * x[idx] * ref[idx];
                    }
                const double vx = sxx - mx * mx;
                const double vy = syy - my * my;
                const double cxy = sxy - mx * my;
                acc += ((2 * mx * my + c1) * (2 * cxy + c2)) /
                       ((mx * mx + my * my + c1) * (vx + vy + c2));
                ++count;
            }
        slice_acc += acc / count;
    }
    return slice_acc / d.nz;
}

VolumeSet encode_forward_naive(const EncodingContext& ctx, const VolumeSet& images) {
    const GridDims dims = ctx.dims();
    const Index nvox = dims.voxels();
    const int n_coils = ctx.coils.n_coils;
    VolumeSet out = VolumeSet::zeros(dims, n_coils, ctx.plan.n_shots, images.n_echoes,
                                     Space::kspace);
    std::vector<Cplx> modulated(static_cast<std::size_t>(nvox));
    std::vector<Cplx> coilvol(modulated.size());
    std::vector<Cplx> ksp(modulated.size());
    for (int n = 0; n < images.n_echoes; ++n)
        for (int t = 0; t < ctx.plan.n_shots; ++t) {
            const int pol = ctx.plan.polarity[static_cast<std::size_t>(t)];
            const Cplx* img = images.block(0, t, n);
            for (int ky : ctx.plan.acquired_ky_lines(t)) {
                const double tau = ctx.plan.line_time(ky);
                for (Index i = 0; i < nvox; ++i) {
                    const double ang =
                        pol * kTwoPi * ctx.field_hz.values[static_cast<std::size_t>(i)] * tau;
                    modulated[static_cast<std::size_t>(i)] =
                        img[i] * Cplx(std::cos(ang), std::sin(ang));
                }
                for (int c = 0; c < n_coils; ++c) {
                    const Cplx* coil = ctx.coils.coil(c);
                    for (Index i = 0; i < nvox; ++i)
                        coilvol[static_cast<std::size_t>(i)] =
                            coil[i] * modulated[static_cast<std::size_t>(i)];
                    fft3_centered_block(coilvol.data(), ksp.data(), dims, FftDirection::forward);
                    Cplx* dst = out.block(c, t, n);
                    for (int kz = 0; kz < dims.nz; ++kz) {
                        if (!ctx.plan.acquired(t, ky, kz)) continue;
                        const Index row = Index(dims.nx) * (Index(ky) + Index(dims.ny) * kz);
                        std::copy_n(ksp.data() + row, dims.nx, dst + row);
                    }
                }
            }
        }
    return out;
}

VolumeSet encode_adjoint_naive(const EncodingContext& ctx, const VolumeSet& kspace) {
    const GridDims dims = ctx.dims();
    const Index nvox = dims.voxels();
    const int n_coils = ctx.coils.n_coils;
    VolumeSet out = VolumeSet::zeros(dims, 1, kspace.n_shots, kspace.n_echoes, Space::image);
    std::vector<Cplx> zfill(static_cast<std::size_t>(nvox));
    std::vector<Cplx> img(zfill.size());
    for (int n = 0; n < kspace.n_echoes; ++n)
        for (int t = 0; t < kspace.n_shots; ++t) {
            const int pol = ctx.plan.polarity[static_cast<std::size_t>(t)];
            Cplx* acc = out.block(0, t, n);
            for (int ky : ctx.plan.acquired_ky_lines(t)) {
                const double tau = ctx.plan.line_time(ky);
                for (int c = 0; c < n_coils; ++c) {
                    std::fill(zfill.begin(), zfill.end(), Cplx(0.0, 0.0));
                    const Cplx* src = kspace.block(c, t, n);
                    for (int kz = 0; kz < dims.nz; ++kz) {
                        if (!ctx.plan.acquired(t, ky, kz)) continue;
                        const Index row = Index(dims.nx) * (Index(ky) + Index(dims.ny) * kz);
                        std::copy_n(src + row, dims.nx, zfill.data() + row);
                    }
                    fft3_centered_block(zfill.data(), img.data(), dims, FftDirection::inverse);
                    const Cplx* coil = ctx.coils.coil(c);
                    for (Index i = 0; i < nvox; ++i) {
                        const double ang =
                            -pol * kTwoPi * ctx.field_hz.values[static_cast<std::size_t>(i)] * tau;
                        acc[i] += std::conj(coil[i]) * Cplx(std::cos(ang), std::sin(ang)) *
                                  img[static_cast<std::size_t>(i)];
                    }
                }
            }
        }
    return out;
}

} // namespace buda::serial
