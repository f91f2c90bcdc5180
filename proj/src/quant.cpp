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
#include "buda/quant.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "buda/parallel.hpp"

namespace buda {

T2starDictionary make_t2star_dictionary(const std::vector<double>& te_ms) {
    if (te_ms.size() < 2)
        throw config_error("t2star dictionary: need at least two echo times");

    T2starDictionary dict;
    dict.te_ms = te_ms;
    for (int t2 = 1; t2 <= 125; ++t2) dict.t2star_grid_ms.push_back(t2);
    for (int t2 = 126; t2 <= 300; t2 += 3) dict.t2star_grid_ms.push_back(t2);

    const int n_te = dict.n_te();
    dict.atoms.resize(dict.t2star_grid_ms.size() * static_cast<std::size_t>(n_te));
    dict.raw_norm.resize(dict.t2star_grid_ms.size());
    for (int k = 0; k < dict.n_atoms(); ++k) {
        double* atom = dict.atoms.data() + std::size_t(k) * n_te;
        double norm = 0.0;
        for (int n = 0; n < n_te; ++n) {
            atom[n] = std::exp(-te_ms[static_cast<std::size_t>(n)] /
                               dict.t2star_grid_ms[static_cast<std::size_t>(k)]);
            norm += atom[n] * atom[n];
        }
        norm = std::sqrt(norm);
        dict.raw_norm[static_cast<std::size_t>(k)] = norm;
        for (int n = 0; n < n_te; ++n) atom[n] /= norm;
    }
    return dict;
}

VarproResult fit_t2star_varpro(const VolumeSet& echoes, const T2starDictionary& dict,
                               const std::vector<std::uint8_t>& support) {
    echoes.validate();
    if (echoes.n_echoes != dict.n_te())
        throw data_error("varpro: echo count does not match the dictionary");
    if (echoes.n_echoes < 2 || echoes.n_echoes > 64)
        throw data_error("varpro: echo count must lie in [2, 64]");
    const Index nvox = echoes.volume_len();
    if (Index(support.size()) != nvox) throw data_error("varpro: support size mismatch");

    VarproResult result;
    result.t2star_ms = RealMap::zeros(echoes.dims, "ms");
    result.pd = RealMap::zeros(echoes.dims, "au");
    std::vector<std::uint8_t> flagged(static_cast<std::size_t>(nvox), 0);

    const int n_te = dict.n_te();
    parallel_for(nvox, [&](Index i) {
        if (!support[static_cast<std::size_t>(i)]) return;
        double sig[64];
        double total = 0.0;
        for (int n = 0; n < n_te; ++n) {
            sig[n] = std::abs(echoes.data[static_cast<std::size_t>(i + nvox * n)]);
            total += sig[n];
        }
        if (total <= 0.0) {
            flagged[static_cast<std::size_t>(i)] = 1;
            return;
        }
        int best = 0;
        double best_score = -1.0;
        for (int k = 0; k < dict.n_atoms(); ++k) {
            const double* atom = dict.atom(k);
            double score = 0.0;
            for (int n = 0; n < n_te; ++n) score += sig[n] * atom[n];
            if (score > best_score) { // strict: ties keep the smaller T2*
                best_score = score;
                best = k;
            }
        }
        result.t2star_ms.values[static_cast<std::size_t>(i)] =
            dict.t2star_grid_ms[static_cast<std::size_t>(best)];
        result.pd.values[static_cast<std::size_t>(i)] =
            best_score / dict.raw_norm[static_cast<std::size_t>(best)];
    });

    for (std::uint8_t f : flagged) result.flagged_zero_signal += f;
    return result;
}

RealMap fit_t2star_loglin(const VolumeSet& echoes, const std::vector<double>& te_ms,
                          const std::vector<std::uint8_t>& support) {
    echoes.validate();
    if (static_cast<int>(te_ms.size()) != echoes.n_echoes)
        throw data_error("loglin: echo count does not match te list");
    if (echoes.n_echoes < 2 || echoes.n_echoes > 64)
        throw data_error("loglin: echo count must lie in [2, 64]");
    const Index nvox = echoes.volume_len();
    if (Index(support.size()) != nvox) throw data_error("loglin: support size mismatch");

    const int n_te = echoes.n_echoes;
    double te_mean = 0.0;
    for (double te : te_ms) te_mean += te;
    te_mean /= n_te;
    double te_var = 0.0;
    for (double te : te_ms) te_var += (te - te_mean) * (te - te_mean);

    RealMap out = RealMap::zeros(echoes.dims, "ms");
    parallel_for(nvox, [&](Index i) {
        if (!support[static_cast<std::size_t>(i)]) return;
        double logs[64];
        for (int n = 0; n < n_te; ++n) {
            const double mag = std::abs(echoes.data[static_cast<std::size_t>(i + nvox * n)]);
            if (mag <= 0.0) return; // excluded voxel
            logs[n] = std::log(mag);
        }
        double log_mean = 0.0;
        for (int n = 0; n < n_te; ++n) log_mean += logs[n];
        log_mean /= n_te;
        double cov = 0.0;
        for (int n = 0; n < n_te; ++n)
            cov += (te_ms[static_cast<std::size_t>(n)] - te_mean) * (logs[n] - log_mean);
        const double slope = cov / te_var;
        double t2 = slope < 0.0 ? -1.0 / slope : 300.0;
        out.values[static_cast<std::size_t>(i)] = std::clamp(t2, 1.0, 300.0);
    });
    return out;
}

double rmse_percent(const VolumeSet& x, const VolumeSet& ref,
                    const std::vector<std::uint8_t>& mask) {
    x.validate();
    ref.validate();
    if (x.data.size() != ref.data.size()) throw data_error("rmse: shapes disagree");
    const Index nvox = ref.volume_len();
    if (!mask.empty() && Index(mask.size()) != nvox)
        throw data_error("rmse: mask size must equal the voxel count");

    double num = 0.0, den = 0.0;
    for (Index b = 0; b < ref.block_count(); ++b)
        for (Index i = 0; i < nvox; ++i) {
            if (!mask.empty() && !mask[static_cast<std::size_t>(i)]) continue;
            const std::size_t idx = static_cast<std::size_t>(b * nvox + i);
            const double mx = std::abs(x.data[idx]);
            const double mr = std::abs(ref.data[idx]);
            num += (mx - mr) * (mx - mr);
            den += mr * mr;
        }
    if (den <= 0.0) throw data_error("rmse: reference is zero over the mask");
    return 100.0 * std::sqrt(num / den);
}

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimC1 = 0.01 * 0.01;
constexpr double kSsimC2 = 0.03 * 0.03;

std::vector<double> ssim_weights() {
    std::vector<double> w(kSsimWindow * kSsimWindow);
    double sum = 0.0;
    for (int j = 0; j < kSsimWindow; ++j)
        for (int i = 0; i < kSsimWindow; ++i) {
            const double dx = i - kSsimWindow / 2, dy = j - kSsimWindow / 2;
            w[static_cast<std::size_t>(i + kSsimWindow * j)] =
                std::exp(-(dx * dx + dy * dy) / (2.0 * kSsimSigma * kSsimSigma));
            sum += w[static_cast<std::size_t>(i + kSsimWindow * j)];
        }
    for (double& v : w) v /= sum;
    return w;
}

} // namespace

double ssim(const VolumeSet& x, const VolumeSet& ref) {
    x.validate();
    ref.validate();
    if (!(x.dims == ref.dims) || x.block_count() != ref.block_count())
        throw data_error("ssim: shapes disagree");
    const GridDims d = x.dims;
    if (d.nx < kSsimWindow || d.ny < kSsimWindow)
        throw config_error("ssim: slice smaller than the 11x11 window");

    double ref_max = 0.0;
    for (const Cplx& v : ref.data) ref_max = std::max(ref_max, std::abs(v));
    if (ref_max <= 0.0) throw data_error("ssim: reference is identically zero");

    const std::vector<double> w = ssim_weights();
    const int half = kSsimWindow / 2;
    const Index n_slices = Index(d.nz) * x.block_count();

    std::vector<double> slice_mean(static_cast<std::size_t>(n_slices), 0.0);
    parallel_for(n_slices, [&](Index s) {
        const Index b = s / d.nz;
        const int z = static_cast<int>(s % d.nz);
        const Cplx* xs = x.data.data() + b * x.volume_len();
        const Cplx* rs = ref.data.data() + b * ref.volume_len();
        const auto pix = [&](const Cplx* base, int xx, int yy) {
            return std::abs(base[Index(xx) + Index(d.nx) * (Index(yy) + Index(d.ny) * z)]) /
                   ref_max;
        };
        double acc = 0.0;
        long count = 0;
        for (int cy = half; cy < d.ny - half; ++cy)
            for (int cx = half; cx < d.nx - half; ++cx) {
                double mx = 0.0, my = 0.0;
                for (int j = 0; j < kSsimWindow; ++j)
                    for (int i = 0; i < kSsimWindow; ++i) {
                        const double wv = w[static_cast<std::size_t>(i + kSsimWindow * j)];
                        mx += wv * pix(xs, cx + i - half, cy + j - half);
                        my += wv * pix(rs, cx + i - half, cy + j - half);
                    }
                double vx = 0.0, vy = 0.0, cxy = 0.0;
                for (int j = 0; j < kSsimWindow; ++j)
                    for (int i = 0; i < kSsimWindow; ++i) {
                        const double wv = w[static_cast<std::size_t>(i + kSsimWindow * j)];
                        const double a = pix(xs, cx + i - half, cy + j - half) - mx;
                        const double b2 = pix(rs, cx + i - half, cy + j - half) - my;
                        vx += wv * a * a;
                        vy += wv * b2 * b2;
                        cxy += wv * a * b2;
                    }
                const double val = ((2.0 * mx * my + kSsimC1) * (2.0 * cxy + kSsimC2)) /
                                   ((mx * mx + my * my + kSsimC1) * (vx + vy + kSsimC2));
                acc += val;
                ++count;
            }
        slice_mean[static_cast<std::size_t>(s)] = acc / count;
    });

    double total = 0.0;
    for (double v : slice_mean) total += v;
    return total / double(n_slices);
}

RoiSet parse_rois(const std::string& path, GridDims dims) {
    std::ifstream in(path);
    if (!in) throw missing_input_error("cannot open ROI config " + path);
    RoiSet rois;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        Roi r;
        if (!(ss >> r.label >> r.x0 >> r.y0 >> r.z0 >> r.x1 >> r.y1 >> r.z1))
            throw config_error("malformed ROI line: " + line);
        if (r.x0 > r.x1 || r.y0 > r.y1 || r.z0 > r.z1 || r.x0 < 0 || r.y0 < 0 || r.z0 < 0 ||
            r.x1 >= dims.nx || r.y1 >= dims.ny || r.z1 >= dims.nz)
            throw config_error("ROI '" + r.label + "' lies outside the grid");
        rois.push_back(r);
    }
    if (rois.empty()) throw config_error("ROI config " + path + " lists no regions");
    return rois;
}

double roi_mean(const RealMap& m, const Roi& roi) {
    double acc = 0.0;
    long count = 0;
    for (int z = roi.z0; z <= roi.z1; ++z)
        for (int y = roi.y0; y <= roi.y1; ++y)
            for (int x = roi.x0; x <= roi.x1; ++x) {
                acc += m.at(x, y, z);
                ++count;
            }
    return acc / count;
}

double local_snr(const VolumeSet& img, const Roi& roi) {
    double acc = 0.0;
    long count = 0;
    for (int z = roi.z0; z <= roi.z1; ++z)
        for (int y = roi.y0; y <= roi.y1; ++y)
            for (int x = roi.x0; x <= roi.x1; ++x) {
                acc += std::abs(img.at(x, y, z));
                ++count;
            }
    const double mean = acc / count;
    double var = 0.0;
    for (int z = roi.z0; z <= roi.z1; ++z)
        for (int y = roi.y0; y <= roi.y1; ++y)
            for (int x = roi.x0; x <= roi.x1; ++x) {
                const double dev = std::abs(img.at(x, y, z)) - mean;
                var += dev * dev;
            }
    if (count < 2 || var <= 0.0) return std::numeric_limits<double>::infinity();
    const double sd = std::sqrt(var / (count - 1));
    return mean / sd;
}

BlandAltman bland_altman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw data_error("bland_altman: lists differ in length");
    if (a.size() < 2) throw data_error("bland_altman: need at least two pairs");
    const std::size_t n = a.size();
    double bias = 0.0;
    for (std::size_t i = 0; i < n; ++i) bias += a[i] - b[i];
    bias /= double(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dev = (a[i] - b[i]) - bias;
        var += dev * dev;
    }
    const double sd = std::sqrt(var / double(n - 1));
    return {bias, bias - 1.96 * sd, bias + 1.96 * sd};
}

} // namespace buda
