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
#include "buda/phantom.hpp"

#include <algorithm>
#include <cmath>

#include "buda/parallel.hpp"
#include "buda/rng.hpp"

namespace buda {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Poly2 {
    // c0 + c1*x + c2*y + c3*z + c4*x^2 + c5*y^2 + c6*z^2 + c7*xy + c8*xz + c9*yz
    std::array<double, 10> c{};

    double eval(double x, double y, double z) const {
        return c[0] + c[1] * x + c[2] * y + c[3] * z + c[4] * x * x + c[5] * y * y +
               c[6] * z * z + c[7] * x * y + c[8] * x * z + c[9] * y * z;
    }

    static Poly2 random(Rng& rng, bool with_constant) {
        Poly2 p;
        for (std::size_t i = with_constant ? 0 : 1; i < p.c.size(); ++i)
            p.c[i] = rng.uniform(-1.0, 1.0);
        return p;
    }
};

// Normalized coordinates in [-1, 1] per axis.
inline double ncoord(int i, int n) { return n > 1 ? 2.0 * i / (n - 1) - 1.0 : 0.0; }

bool inside_ellipsoid(const Phantom::Compartment& e, int x, int y, int z) {
    const double dx = (x - e.cx) / e.ax;
    const double dy = (y - e.cy) / e.ay;
    const double dz = (z - e.cz) / e.az;
    return dx * dx + dy * dy + dz * dz <= 1.0;
}

} // namespace

Phantom make_phantom(GridDims dims, std::uint64_t seed, PhantomPreset preset,
                     const PhantomOptions& opt) {
    dims.validate();
    if (preset == PhantomPreset::ellipsoids && (dims.nx < 8 || dims.ny < 8 || dims.nz < 8))
        throw config_error("make_phantom: ellipsoids preset needs dims >= 8 on every axis");

    Rng rng(seed);
    Phantom ph;
    ph.dims = dims;
    ph.pd = RealMap::zeros(dims, "au");
    ph.t2star_ms = RealMap::zeros(dims, "ms");
    ph.df_hz = RealMap::zeros(dims, "Hz");
    ph.phi0 = RealMap::zeros(dims, "rad");
    ph.support.assign(static_cast<std::size_t>(dims.voxels()), 0);

    const double cx = (dims.nx - 1) / 2.0;
    const double cy = (dims.ny - 1) / 2.0;
    const double cz = (dims.nz - 1) / 2.0;
    const double outer_ax = dims.nx / 2.0 - 3.0;
    const double outer_ay = dims.ny / 2.0 - opt.pe_margin_vox;
    const double outer_az = std::max(2.0, dims.nz / 2.0 - 2.0);

    if (preset == PhantomPreset::uniform) {
        ph.compartments.push_back(
            {cx, cy, cz, outer_ax, outer_ay, outer_az, 1.0, opt.uniform_t2star_ms});
    } else {
        const int n_comp = 3 + static_cast<int>(rng.uniform_int(4)); // 3..6
        const double t2_palette[4] = {40.0, 55.0, 70.0, 90.0};
        const std::uint64_t t2_rot = rng.uniform_int(4);
        double ax = outer_ax, ay = outer_ay, az = outer_az;
        double ox = cx, oy = cy, oz = cz;
        for (int k = 0; k < n_comp; ++k) {
            Phantom::Compartment comp;
            comp.cx = ox;
            comp.cy = oy;
            comp.cz = oz;
            comp.ax = ax;
            comp.ay = ay;
            comp.az = az;
            comp.pd = k == 0 ? 0.8 : rng.uniform(0.55, 1.0);
            comp.t2star_ms = t2_palette[(k + t2_rot) % 4];
            ph.compartments.push_back(comp);
            // next compartment nests strictly inside the current one
            const double shrink = rng.uniform(0.55, 0.72);
            const double nax = ax * shrink, nay = ay * shrink, naz = az * shrink;
            ox += rng.uniform(-0.15, 0.15) * (ax - nax);
            oy += rng.uniform(-0.15, 0.15) * (ay - nay);
            oz += rng.uniform(-0.15, 0.15) * (az - naz);
            ax = nax;
            ay = nay;
            az = naz;
        }
    }

    // smooth PD texture: low-frequency cosine mix, deterministic in the seed
    struct TexWave {
        double fx, fy, fz, phase;
    };
    std::vector<TexWave> waves;
    const bool textured = preset == PhantomPreset::ellipsoids && opt.pd_texture > 0.0;
    for (int w = 0; w < 4; ++w)
        waves.push_back({rng.uniform(1.5, 4.0), rng.uniform(2.0, 4.5), rng.uniform(1.0, 2.5),
                         rng.uniform(0.0, 2.0 * kPi)});
    auto texture = [&](int x, int y, int z) {
        if (!textured) return 1.0;
        double g = 0.0;
        for (const TexWave& w : waves)
            g += std::cos(kPi * (w.fx * ncoord(x, dims.nx) + w.fy * ncoord(y, dims.ny) +
                                 w.fz * ncoord(z, dims.nz)) +
                          w.phase);
        return 1.0 + opt.pd_texture * g / 4.0;
    };

    for (int z = 0; z < dims.nz; ++z)
        for (int y = 0; y < dims.ny; ++y)
            for (int x = 0; x < dims.nx; ++x) {
                double pd = 0.0, t2 = 0.0;
                bool inside = false;
                for (const auto& comp : ph.compartments)
                    if (inside_ellipsoid(comp, x, y, z)) {
                        inside = true;
                        pd = comp.pd;
                        t2 = comp.t2star_ms; // innermost hit wins
                    }
                if (inside) {
                    ph.support[static_cast<std::size_t>(ph.pd.index(x, y, z))] = 1;
                    ph.pd.at(x, y, z) = pd * texture(x, y, z);
                    ph.t2star_ms.at(x, y, z) = t2;
                }
            }

    // Off-resonance: normalized second-order background plus one Gaussian
    // blob whose center is snapped to a voxel so the configured peak is
    // attained exactly there.
    const Poly2 field_poly = Poly2::random(rng, false);
    double poly_max = 0.0;
    for (int z = 0; z < dims.nz; ++z)
        for (int y = 0; y < dims.ny; ++y)
            for (int x = 0; x < dims.nx; ++x)
                poly_max = std::max(poly_max, std::abs(field_poly.eval(ncoord(x, dims.nx),
                                                                       ncoord(y, dims.ny),
                                                                       ncoord(z, dims.nz))));
    const double bx = std::round(cx + rng.uniform(-0.25, 0.25) * outer_ax);
    const double by = std::round(cy + rng.uniform(-0.25, 0.25) * outer_ay);
    const double bz = std::round(cz + rng.uniform(-0.25, 0.25) * outer_az);
    ph.blob_center = {bx, by, bz};
    const double sigma = opt.blob_sigma_frac * std::min({dims.nx, dims.ny, dims.nz});

    const Poly2 phi_poly = Poly2::random(rng, true);
    double phi_max = 0.0;
    if (preset == PhantomPreset::ellipsoids)
        for (int z = 0; z < dims.nz; ++z)
            for (int y = 0; y < dims.ny; ++y)
                for (int x = 0; x < dims.nx; ++x)
                    phi_max = std::max(phi_max, std::abs(phi_poly.eval(ncoord(x, dims.nx),
                                                                       ncoord(y, dims.ny),
                                                                       ncoord(z, dims.nz))));

    for (int z = 0; z < dims.nz; ++z)
        for (int y = 0; y < dims.ny; ++y)
            for (int x = 0; x < dims.nx; ++x) {
                double df = 0.0;
                if (opt.df_poly_hz != 0.0 && poly_max > 0.0)
                    df += opt.df_poly_hz *
                          field_poly.eval(ncoord(x, dims.nx), ncoord(y, dims.ny),
                                          ncoord(z, dims.nz)) /
                          poly_max;
                if (opt.df_blob_hz != 0.0) {
                    const double d2 = (x - bx) * (x - bx) + (y - by) * (y - by) +
                                      (z - bz) * (z - bz);
                    df += opt.df_blob_hz * std::exp(-d2 / (2.0 * sigma * sigma));
                }
                ph.df_hz.at(x, y, z) = df;
                if (preset == PhantomPreset::ellipsoids && phi_max > 0.0)
                    ph.phi0.at(x, y, z) = opt.phi0_amp_rad *
                                          phi_poly.eval(ncoord(x, dims.nx), ncoord(y, dims.ny),
                                                        ncoord(z, dims.nz)) /
                                          phi_max;
            }

    return ph;
}

CoilSet make_coils(GridDims dims, int n_coils, std::uint64_t seed) {
    dims.validate();
    if (n_coils < 1) throw config_error("make_coils: n_coils must be >= 1");

    Rng rng(seed);
    CoilSet coils;
    coils.dims = dims;
    coils.n_coils = n_coils;
    coils.maps.assign(static_cast<std::size_t>(dims.voxels()) * n_coils, Cplx(0.0, 0.0));

    const double cx = (dims.nx - 1) / 2.0;
    const double cy = (dims.ny - 1) / 2.0;
    const double cz = (dims.nz - 1) / 2.0;
    const double ring_x = 0.55 * dims.nx;
    const double ring_y = 0.55 * dims.ny;
    // lobe width keeps the normalized magnitude ramp under the 0.05
    // neighbor-difference bound; the phase carries most of the encoding power
    const double sigma = 0.45 * std::max(dims.nx, dims.ny);
    const double phase_start = rng.uniform(0.0, 2.0 * kPi);

    struct Lobe {
        double x, y, z;
        Poly2 phase;
    };
    std::vector<Lobe> lobes;
    for (int c = 0; c < n_coils; ++c) {
        const double theta = phase_start + 2.0 * kPi * c / n_coils;
        Lobe lobe;
        lobe.x = cx + ring_x * std::cos(theta);
        lobe.y = cy + ring_y * std::sin(theta);
        lobe.z = cz + (c % 2 == 0 ? 0.25 : -0.25) * dims.nz;
        Poly2 p;
        p.c[0] = rng.uniform(-kPi, kPi);
        for (int i = 1; i <= 3; ++i) p.c[static_cast<std::size_t>(i)] = rng.uniform(-3.0, 3.0);
        for (int i = 4; i <= 9; ++i) p.c[static_cast<std::size_t>(i)] = rng.uniform(-1.5, 1.5);
        lobe.phase = p;
        lobes.push_back(lobe);
    }

    for (int z = 0; z < dims.nz; ++z)
        for (int y = 0; y < dims.ny; ++y)
            for (int x = 0; x < dims.nx; ++x) {
                const Index vox =
                    Index(x) + Index(dims.nx) * (Index(y) + Index(dims.ny) * Index(z));
                double sos = 0.0;
                for (int c = 0; c < n_coils; ++c) {
                    const Lobe& l = lobes[static_cast<std::size_t>(c)];
                    const double d2 = (x - l.x) * (x - l.x) + (y - l.y) * (y - l.y) +
                                      (z - l.z) * (z - l.z);
                    const double mag = std::exp(-d2 / (2.0 * sigma * sigma));
                    const double phase =
                        l.phase.eval(ncoord(x, dims.nx), ncoord(y, dims.ny), ncoord(z, dims.nz));
                    coils.maps[static_cast<std::size_t>(Index(c) * dims.voxels() + vox)] =
                        Cplx(mag * std::cos(phase), mag * std::sin(phase));
                    sos += mag * mag;
                }
                const double inv = 1.0 / std::sqrt(sos);
                for (int c = 0; c < n_coils; ++c)
                    coils.maps[static_cast<std::size_t>(Index(c) * dims.voxels() + vox)] *= inv;
            }

    return coils;
}

VolumeSet echo_images(const Phantom& ph, const std::vector<double>& te_ms) {
    if (te_ms.empty()) throw config_error("echo_images: te list must be nonempty");
    for (double te : te_ms)
        if (te < 0.0) throw config_error("echo_images: te values must be nonnegative");

    const int n_echoes = static_cast<int>(te_ms.size());
    VolumeSet out = VolumeSet::zeros(ph.dims, 1, 1, n_echoes, Space::image);
    const Index nvox = ph.dims.voxels();
    parallel_for(nvox, [&](Index i) {
        if (!ph.support[static_cast<std::size_t>(i)]) return;
        const double pd = ph.pd.values[static_cast<std::size_t>(i)];
        const double t2 = ph.t2star_ms.values[static_cast<std::size_t>(i)];
        const double df = ph.df_hz.values[static_cast<std::size_t>(i)];
        const double p0 = ph.phi0.values[static_cast<std::size_t>(i)];
        for (int n = 0; n < n_echoes; ++n) {
            const double te = te_ms[static_cast<std::size_t>(n)];
            const double mag = pd * std::exp(-te / t2);
            const double phase = p0 + 2.0 * kPi * df * te * 1e-3;
            out.data[static_cast<std::size_t>(i + nvox * n)] =
                Cplx(mag * std::cos(phase), mag * std::sin(phase));
        }
    });
    return out;
}

std::vector<RealMap> shot_phase_errors(GridDims dims, int n_shots, double amplitude_rad,
                                       std::uint64_t seed) {
    dims.validate();
    if (n_shots < 1) throw config_error("shot_phase_errors: n_shots must be >= 1");
    if (amplitude_rad < 0.0)
        throw config_error("shot_phase_errors: amplitude must be nonnegative");

    Rng rng(seed);
    std::vector<RealMap> maps;
    maps.reserve(static_cast<std::size_t>(n_shots));
    for (int t = 0; t < n_shots; ++t) {
        RealMap m = RealMap::zeros(dims, "rad");
        if (t > 0 && amplitude_rad > 0.0) {
            // constant and linear terms dominate (bulk phase and motion-like
            // ramps); second-order terms enter at a quarter weight
            Poly2 p = Poly2::random(rng, true);
            for (std::size_t k = 4; k < p.c.size(); ++k) p.c[k] *= 0.25;
            double mx = 0.0;
            for (int z = 0; z < dims.nz; ++z)
                for (int y = 0; y < dims.ny; ++y)
                    for (int x = 0; x < dims.nx; ++x) {
                        const double v =
                            p.eval(ncoord(x, dims.nx), ncoord(y, dims.ny), ncoord(z, dims.nz));
                        m.at(x, y, z) = v;
                        mx = std::max(mx, std::abs(v));
                    }
            if (mx > 0.0) {
                const double scale = amplitude_rad / mx;
                for (double& v : m.values) v *= scale;
            }
        } else if (t > 0) {
            // draw and discard so shot maps do not shift when amplitude changes
            (void)Poly2::random(rng, true);
        }
        maps.push_back(std::move(m));
    }
    return maps;
}

} // namespace buda
