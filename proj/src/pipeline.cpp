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
#include "buda/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "buda/io.hpp"
#include "buda/quant.hpp"

namespace buda {

namespace {

const char* kKnownMethods[] = {"sense-up", "sense-down", "topup-avg",
                               "hybrid-sense", "buda", "buda-joint"};

bool is_known_method(const std::string& m) {
    for (const char* k : kKnownMethods)
        if (m == k) return true;
    return false;
}

std::string join(const std::string& dir, const std::string& name) { return dir + "/" + name; }

std::vector<std::uint8_t> read_support(const std::string& dir) {
    const RealMap m = read_real_map(join(dir, "support"));
    std::vector<std::uint8_t> s(m.values.size());
    for (std::size_t i = 0; i < m.values.size(); ++i) s[i] = m.values[i] > 0.5 ? 1 : 0;
    return s;
}

RealMap support_to_map(const std::vector<std::uint8_t>& support, GridDims dims) {
    RealMap m = RealMap::zeros(dims, "bool");
    for (std::size_t i = 0; i < support.size(); ++i) m.values[i] = support[i] ? 1.0 : 0.0;
    return m;
}

VolumeSet coils_to_volume(const CoilSet& coils) {
    VolumeSet v = VolumeSet::zeros(coils.dims, coils.n_coils, 1, 1, Space::image);
    std::copy(coils.maps.begin(), coils.maps.end(), v.data.begin());
    return v;
}

CoilSet volume_to_coils(const VolumeSet& v) {
    CoilSet c;
    c.dims = v.dims;
    c.n_coils = v.n_coils;
    c.maps.assign(v.data.begin(), v.data.end());
    return c;
}

double resolve_noise_sigma(const RunConfig& rc, const Phantom& ph, const VolumeSet& echoes) {
    if (rc.noise_sigma > 0.0 || rc.noise_snr <= 0.0) return rc.noise_sigma;
    // SNR is defined against the mean first-echo magnitude over the support.
    double acc = 0.0;
    long count = 0;
    const Cplx* first = echoes.block(0, 0, 0);
    for (Index i = 0; i < echoes.volume_len(); ++i)
        if (ph.support[static_cast<std::size_t>(i)]) {
            acc += std::abs(first[i]);
            ++count;
        }
    if (count == 0) throw data_error("noise_snr: phantom has empty support");
    return acc / count / rc.noise_snr;
}

VolumeSet slice_echo(const VolumeSet& v, int echo) {
    VolumeSet out = VolumeSet::zeros(v.dims, v.n_coils, v.n_shots, 1, v.space);
    for (int t = 0; t < v.n_shots; ++t)
        for (int c = 0; c < v.n_coils; ++c)
            std::copy_n(v.block(c, t, echo), v.volume_len(), out.block(c, t, 0));
    return out;
}

struct Seeds {
    std::uint64_t phantom, coils, phases, noise;
};

Seeds derive_seeds(std::uint64_t seed) { return {seed, seed + 101, seed + 202, seed + 303}; }

Phantom phantom_from_maps(const std::string& dir) {
    Phantom ph;
    ph.pd = read_real_map(join(dir, "pd"));
    ph.t2star_ms = read_real_map(join(dir, "t2star"));
    ph.df_hz = read_real_map(join(dir, "df"));
    ph.phi0 = read_real_map(join(dir, "phi0"));
    ph.dims = ph.pd.dims;
    ph.support = read_support(dir);
    return ph;
}

FieldEstimate estimate_field_from_data(const RunConfig& rc, const EncodingContext& zero_ctx,
                                       const VolumeSet& d, const std::string& out_dir) {
    // Interim distorted SENSE recons per polarity group (first echo only),
    // then the displacement search.
    const std::vector<int> up = zero_ctx.plan.shots_with_polarity(+1);
    const std::vector<int> down = zero_ctx.plan.shots_with_polarity(-1);
    if (up.empty() || down.empty())
        throw data_error("field estimation needs both blip-up and blip-down shots");
    const VolumeSet d0 = slice_echo(d, 0);
    const CgResult up_res = cg_sense(zero_ctx.restrict_shots(up), select_shots(d0, up), rc.sense);
    const CgResult down_res =
        cg_sense(zero_ctx.restrict_shots(down), select_shots(d0, down), rc.sense);
    const FieldEstimate est =
        estimate_field(up_res.image, down_res.image, rc.protocol.bw_pe_hz_per_px, rc.fieldmap);
    write_volume(up_res.image, join(out_dir, "interim_up"));
    write_volume(down_res.image, join(out_dir, "interim_down"));
    write_real_map(est.df_hz, join(out_dir, "field_est"));
    write_real_map(est.displacement_vox, join(out_dir, "displacement_est"));
    return est;
}

} // namespace

void RunConfig::validate() const {
    protocol.validate();
    if (n_coils < 1) throw config_error("phantom.n_coils must be >= 1");
    if (noise_sigma < 0.0) throw config_error("noise_sigma must be nonnegative");
    if (noise_snr < 0.0) throw config_error("noise_snr must be nonnegative");
    if (shot_phase_amplitude_rad < 0.0)
        throw config_error("shot_phase_amplitude_rad must be nonnegative");
    if (field_source != "ground-truth" && field_source != "estimated")
        throw config_error("field_source must be 'ground-truth' or 'estimated'");
    if (methods.empty()) throw config_error("methods lists no reconstruction method");
    for (const std::string& m : methods) {
        if (!is_known_method(m)) throw config_error("unknown recon method '" + m + "'");
        if ((m == "buda" || m == "buda-joint") && !has_rank)
            throw config_error("method '" + m + "' requires rank.policy and rank.value");
    }
    if (has_rank) rank.validate();
    if (hankel_kernel < 1 || hankel_kernel % 2 == 0)
        throw config_error("hankel.kernel must be odd and >= 1");
}

Protocol protocol_from_config(const Config& cfg) {
    Protocol p;
    const auto dims = cfg.get_doubles("protocol.dims");
    if (dims.size() != 3) throw config_error("protocol.dims must list three integers");
    p.dims = {static_cast<int>(dims[0]), static_cast<int>(dims[1]), static_cast<int>(dims[2])};
    if (cfg.has("protocol.fov_mm")) {
        const auto fov = cfg.get_doubles("protocol.fov_mm");
        if (fov.size() != 3) throw config_error("protocol.fov_mm must list three values");
        p.fov_mm = {fov[0], fov[1], fov[2]};
    }
    p.tr_ms = cfg.get_double("protocol.tr_ms", 0.0);
    p.flip_deg = cfg.get_double("protocol.flip_deg", 0.0);
    p.te_ms = cfg.get_doubles("protocol.te_ms");
    p.r_inplane = cfg.get_int("protocol.r_inplane");
    p.r_z = cfg.get_int("protocol.r_z");
    p.n_shots = cfg.get_int("protocol.n_shots");
    p.caipi_z_shift = cfg.get_int("protocol.caipi_z_shift", 0);
    p.bw_pe_hz_per_px = cfg.get_double("protocol.bw_pe_hz_per_px");
    p.validate();
    return p;
}

RunConfig load_run_config(const Config& cfg) {
    RunConfig rc;
    rc.protocol = protocol_from_config(cfg);

    const std::string preset = cfg.get_string("phantom.preset", "ellipsoids");
    if (preset == "ellipsoids")
        rc.preset = PhantomPreset::ellipsoids;
    else if (preset == "uniform")
        rc.preset = PhantomPreset::uniform;
    else
        throw config_error("phantom.preset must be 'ellipsoids' or 'uniform'");
    rc.phantom.df_poly_hz = cfg.get_double("phantom.df_poly_hz", rc.phantom.df_poly_hz);
    rc.phantom.df_blob_hz = cfg.get_double("phantom.df_blob_hz", rc.phantom.df_blob_hz);
    rc.phantom.phi0_amp_rad = cfg.get_double("phantom.phi0_amp_rad", rc.phantom.phi0_amp_rad);
    rc.n_coils = cfg.get_int("phantom.n_coils", rc.n_coils);

    rc.noise_sigma = cfg.get_double("noise_sigma", 0.0);
    rc.noise_snr = cfg.get_double("noise_snr", 0.0);
    rc.shot_phase_amplitude_rad = cfg.get_double("shot_phase_amplitude_rad", 0.0);
    rc.realistic_decay = cfg.get_bool("realistic_decay", false);
    if (cfg.has("methods"))
        rc.methods = cfg.get_strings("methods");
    else if (cfg.has("method"))
        rc.methods = cfg.get_strings("method");
    rc.field_source = cfg.get_string("field_source", "ground-truth");
    rc.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));

    rc.hankel_kernel = cfg.get_int("hankel.kernel", 3);
    if (cfg.has("rank.policy")) {
        rc.has_rank = true;
        const std::string policy = cfg.get_string("rank.policy");
        if (policy == "fixed_rank")
            rc.rank.mode = RankPolicy::Mode::fixed_rank;
        else if (policy == "energy_fraction")
            rc.rank.mode = RankPolicy::Mode::energy_fraction;
        else if (policy == "relative_sigma")
            rc.rank.mode = RankPolicy::Mode::relative_sigma;
        else
            throw config_error("rank.policy must be fixed_rank, energy_fraction or relative_sigma");
        rc.rank.value = cfg.get_double("rank.value");
    }
    rc.iht.max_iter = cfg.get_int("iht.max_iter", rc.iht.max_iter);
    rc.iht.rel_change_tol = cfg.get_double("iht.rel_change_tol", rc.iht.rel_change_tol);
    const std::string step = cfg.get_string("iht.step", "auto");
    if (step == "auto")
        rc.iht.step = IhtConfig::Step::auto_lipschitz;
    else if (step == "fixed")
        rc.iht.step = IhtConfig::Step::fixed;
    else
        throw config_error("iht.step must be 'auto' or 'fixed'");
    rc.iht.mu = cfg.get_double("iht.mu", 0.0);
    rc.iht.power_iters = cfg.get_int("iht.power_iters", rc.iht.power_iters);

    rc.fieldmap.search_max_vox = cfg.get_double("fieldmap.search_max_vox", 8.0);
    rc.fieldmap.step_vox = cfg.get_double("fieldmap.step_vox", 0.25);
    rc.fieldmap.smoothing_sigma_vox = cfg.get_double("fieldmap.smoothing_sigma_vox", 2.0);

    rc.sense.max_iter = cfg.get_int("sense.max_iter", rc.sense.max_iter);
    rc.sense.tol = cfg.get_double("sense.tol", rc.sense.tol);

    rc.validate();
    return rc;
}

void write_default_rois(const Phantom& ph, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw io_error("cannot open " + path + " for writing");
    const GridDims d = ph.dims;
    int label = 0;
    auto emit = [&](double cx, double cy, double cz, int half) {
        const int x = std::clamp(static_cast<int>(std::lround(cx)), half, d.nx - 1 - half);
        const int y = std::clamp(static_cast<int>(std::lround(cy)), half, d.ny - 1 - half);
        const int z = std::clamp(static_cast<int>(std::lround(cz)), half, d.nz - 1 - half);
        out << "roi" << label++ << ' ' << x - half << ' ' << y - half << ' ' << z - half << ' '
            << x + half << ' ' << y + half << ' ' << z + half << '\n';
    };
    for (const auto& comp : ph.compartments) {
        const int half = std::max(
            1, std::min(2, static_cast<int>(std::min({comp.ax, comp.ay, comp.az}) / 3.0)));
        emit(comp.cx, comp.cy, comp.cz, half);
    }
    if (!ph.compartments.empty()) {
        const auto& outer = ph.compartments.front();
        emit(outer.cx + 0.55 * outer.ax, outer.cy, outer.cz, 1);
        emit(outer.cx - 0.55 * outer.ax, outer.cy, outer.cz, 1);
        emit(outer.cx, outer.cy + 0.55 * outer.ay, outer.cz, 1);
        emit(outer.cx, outer.cy - 0.55 * outer.ay, outer.cz, 1);
    }
}

void cmd_simulate(const RunConfig& rc, const std::string& out_dir, bool verify) {
    rc.validate();
    ensure_directory(out_dir);
    const Seeds seeds = derive_seeds(rc.seed);

    const ShotPlan plan = generate_shot_plan(rc.protocol);
    const Phantom ph = make_phantom(rc.protocol.dims, seeds.phantom, rc.preset, rc.phantom);
    const CoilSet coils = make_coils(rc.protocol.dims, rc.n_coils, seeds.coils);
    const std::vector<RealMap> phases = shot_phase_errors(
        rc.protocol.dims, rc.protocol.n_shots, rc.shot_phase_amplitude_rad, seeds.phases);
    const VolumeSet truth = echo_images(ph, rc.protocol.te_ms);

    AcquisitionOptions acq;
    acq.noise_sigma = resolve_noise_sigma(rc, ph, truth);
    acq.noise_seed = seeds.noise;
    acq.realistic_decay = rc.realistic_decay;
    const VolumeSet d = simulate_acquisition(ph, coils, plan, rc.protocol.te_ms, phases, acq);

    write_real_map(ph.pd, join(out_dir, "pd"));
    write_real_map(ph.t2star_ms, join(out_dir, "t2star"));
    write_real_map(ph.df_hz, join(out_dir, "df"));
    write_real_map(ph.phi0, join(out_dir, "phi0"));
    write_real_map(support_to_map(ph.support, ph.dims), join(out_dir, "support"));
    write_volume(coils_to_volume(coils), join(out_dir, "coils"));
    write_volume(plan.mask_volume(rc.protocol.n_echoes()), join(out_dir, "masks"));
    write_volume(truth, join(out_dir, "truth_echoes"));
    write_volume(d, join(out_dir, "kspace"));
    write_default_rois(ph, join(out_dir, "rois.txt"));

    std::ofstream manifest(join(out_dir, "manifest.txt"), std::ios::trunc);
    if (!manifest) throw io_error("cannot write manifest in " + out_dir);
    manifest << "r_effective = " << rc.protocol.r_effective_string() << '\n'
             << "noise_sigma = " << acq.noise_sigma << '\n'
             << "seed = " << rc.seed << '\n';
    for (const char* name :
         {"pd", "t2star", "df", "phi0", "support", "coils", "truth_echoes", "kspace"})
        manifest << "volume " << name << " file=" << name << '\n';
    for (int n = 0; n < rc.protocol.n_echoes(); ++n)
        for (int t = 0; t < rc.protocol.n_shots; ++t)
            manifest << "mask_plane shot=" << t << " echo=" << n << " file=masks index="
                     << t + rc.protocol.n_shots * n << '\n';

    if (verify) {
        // Re-read what was written and check d == forward model exactly.
        const VolumeSet d_disk = read_volume(join(out_dir, "kspace"));
        AcquisitionOptions clean = acq;
        clean.noise_sigma = 0.0;
        const VolumeSet expect =
            simulate_acquisition(ph, coils, plan, rc.protocol.te_ms, phases, clean);
        if (acq.noise_sigma > 0.0) {
            std::ofstream(join(out_dir, "verify.txt")) << "skipped (noise_sigma > 0)\n";
        } else {
            if (d_disk.data != expect.data)
                throw data_error("verify: acquired k-space deviates from the forward model");
            std::ofstream(join(out_dir, "verify.txt")) << "ok\n";
        }
    }
}

void cmd_estimate_field(const RunConfig& rc, const std::string& data_dir,
                        const std::string& out_dir) {
    rc.validate();
    ensure_directory(out_dir);
    if (!file_exists(join(data_dir, "kspace.hdr")))
        throw missing_input_error("no kspace volume under " + data_dir);
    const VolumeSet d = read_volume(join(data_dir, "kspace"));
    const CoilSet coils = volume_to_coils(read_volume(join(data_dir, "coils")));
    const ShotPlan plan = generate_shot_plan(rc.protocol);
    const EncodingContext zero_ctx(plan, coils, RealMap::zeros(plan.dims, "Hz"));
    estimate_field_from_data(rc, zero_ctx, d, out_dir);
}

void cmd_recon(const RunConfig& rc, const std::string& data_dir, const std::string& out_dir) {
    rc.validate();
    ensure_directory(out_dir);
    for (const char* req : {"kspace", "coils"})
        if (!file_exists(join(data_dir, std::string(req) + ".hdr")))
            throw missing_input_error("missing input '" + std::string(req) + "' under " +
                                      data_dir);

    const VolumeSet d = read_volume(join(data_dir, "kspace"));
    const CoilSet coils = volume_to_coils(read_volume(join(data_dir, "coils")));
    const ShotPlan plan = generate_shot_plan(rc.protocol);
    if (!(plan.dims == d.dims) || d.n_shots != plan.n_shots)
        throw data_error("recon: data shape disagrees with the protocol");

    const RealMap zero_field = RealMap::zeros(plan.dims, "Hz");
    const EncodingContext zero_ctx(plan, coils, zero_field);

    RealMap field = zero_field;
    if (rc.field_source == "ground-truth") {
        if (!file_exists(join(data_dir, "df.hdr")))
            throw missing_input_error("field_source=ground-truth needs df under " + data_dir);
        field = read_real_map(join(data_dir, "df"));
    } else {
        field = estimate_field_from_data(rc, zero_ctx, d, out_dir).df_hz;
    }
    const EncodingContext ctx(plan, coils, field);

    const std::vector<int> up = plan.shots_with_polarity(+1);
    const std::vector<int> down = plan.shots_with_polarity(-1);

    std::ofstream manifest(join(out_dir, "manifest.txt"), std::ios::trunc);
    for (const std::string& method : rc.methods) {
        VolumeSet recon;
        if (method == "sense-up" || method == "sense-down") {
            const auto& group = method == "sense-up" ? up : down;
            if (group.empty()) throw data_error(method + ": the polarity group is empty");
            recon = cg_sense(zero_ctx.restrict_shots(group), select_shots(d, group), rc.sense)
                        .image;
        } else if (method == "topup-avg") {
            if (up.empty() || down.empty()) throw data_error("topup-avg: needs both polarities");
            const VolumeSet up_img =
                cg_sense(zero_ctx.restrict_shots(up), select_shots(d, up), rc.sense).image;
            const VolumeSet down_img =
                cg_sense(zero_ctx.restrict_shots(down), select_shots(d, down), rc.sense).image;
            recon = unwarp_and_average(up_img, down_img, field, rc.protocol.bw_pe_hz_per_px);
        } else if (method == "hybrid-sense") {
            recon = hybrid_space_sense(ctx, d, rc.sense).image;
        } else if (method == "buda") {
            HankelSpec spec;
            spec.kernel = rc.hankel_kernel;
            recon = VolumeSet::zeros(plan.dims, 1, 1, d.n_echoes, Space::image);
            for (int n = 0; n < d.n_echoes; ++n) {
                const BudaResult res =
                    buda_reconstruct(ctx, slice_echo(d, n), spec, rc.rank, rc.iht);
                std::copy_n(res.combined.block(0, 0, 0), d.volume_len(), recon.block(0, 0, n));
                write_iteration_log(
                    join(out_dir, "iterations_buda_echo" + std::to_string(n) + ".csv"), res.log);
            }
        } else if (method == "buda-joint") {
            HankelSpec spec;
            spec.kernel = rc.hankel_kernel;
            const BudaResult res = buda_joint_reconstruct(ctx, d, spec, rc.rank, rc.iht);
            recon = res.combined;
            write_iteration_log(join(out_dir, "iterations_buda-joint.csv"), res.log);
        } else {
            throw config_error("unknown recon method '" + method + "'");
        }
        write_volume(recon, join(out_dir, "recon_" + method));
        manifest << "recon method=" << method << " file=recon_" << method << '\n';
    }
}

void cmd_map_t2star(const RunConfig& rc, const std::string& recon_dir,
                    const std::string& support_dir, const std::string& out_dir) {
    rc.validate();
    ensure_directory(out_dir);
    if (rc.protocol.n_echoes() < 2)
        throw config_error("map-t2star needs a multi-echo protocol (te_ms)");
    const T2starDictionary dict = make_t2star_dictionary(rc.protocol.te_ms);

    bool any = false;
    for (const std::string& method : rc.methods) {
        const std::string stem = join(recon_dir, "recon_" + method);
        if (!file_exists(stem + ".hdr")) continue;
        any = true;
        const VolumeSet recon = read_volume(stem);
        std::vector<std::uint8_t> support;
        if (file_exists(join(support_dir, "support.hdr"))) {
            support = read_support(support_dir);
        } else {
            // fall back to a magnitude threshold on the first echo
            support.assign(static_cast<std::size_t>(recon.volume_len()), 0);
            double mx = 0.0;
            const Cplx* first = recon.block(0, 0, 0);
            for (Index i = 0; i < recon.volume_len(); ++i)
                mx = std::max(mx, std::abs(first[i]));
            for (Index i = 0; i < recon.volume_len(); ++i)
                support[static_cast<std::size_t>(i)] = std::abs(first[i]) > 0.05 * mx ? 1 : 0;
        }
        const VarproResult fit = fit_t2star_varpro(recon, dict, support);
        write_real_map(fit.t2star_ms, join(out_dir, "t2star_" + method));
        write_real_map(fit.pd, join(out_dir, "pd_" + method));
        if (fit.flagged_zero_signal > 0)
            std::ofstream(join(out_dir, "t2star_" + method + "_flags.txt"))
                << "zero_signal_voxels = " << fit.flagged_zero_signal << '\n';
    }
    if (!any) throw missing_input_error("map-t2star: no recon volumes under " + recon_dir);
}

void cmd_evaluate(const RunConfig& rc, const std::string& recon_dir, const std::string& truth_dir,
                  const std::string& roi_path, const std::string& out_dir) {
    rc.validate();
    ensure_directory(out_dir);
    ensure_directory(join(out_dir, "slices"));
    if (!file_exists(join(truth_dir, "truth_echoes.hdr")))
        throw missing_input_error("no truth_echoes under " + truth_dir);

    const VolumeSet truth = read_volume(join(truth_dir, "truth_echoes"));
    const std::vector<std::uint8_t> support = read_support(truth_dir);
    const RoiSet rois = parse_rois(roi_path, truth.dims);

    std::ofstream metrics(join(out_dir, "metrics.csv"), std::ios::trunc);
    metrics << "method,echo,rmse_percent,ssim\n";
    std::ofstream summary(join(out_dir, "summary.txt"), std::ios::trunc);

    std::vector<std::pair<std::string, VolumeSet>> recons;
    for (const std::string& method : rc.methods) {
        const std::string stem = join(recon_dir, "recon_" + method);
        if (!file_exists(stem + ".hdr")) continue;
        recons.emplace_back(method, read_volume(stem));
    }
    if (recons.empty()) throw missing_input_error("evaluate: no recon volumes under " + recon_dir);

    for (int n = 0; n < truth.n_echoes; ++n) {
        const VolumeSet truth_n = slice_echo(truth, n);
        write_pgm_slice(truth_n, 0, 0, 0,
                        join(out_dir, "slices/truth_echo" + std::to_string(n) + ".pgm"));
    }

    for (const auto& [method, recon] : recons) {
        if (!(recon.dims == truth.dims) || recon.n_echoes != truth.n_echoes)
            throw data_error("evaluate: recon_" + method + " shape disagrees with the truth");
        for (int n = 0; n < truth.n_echoes; ++n) {
            const VolumeSet rn = slice_echo(recon, n);
            const VolumeSet tn = slice_echo(truth, n);
            const double rm = rmse_percent(rn, tn, support);
            const double ss = ssim(rn, tn);
            metrics << method << ',' << n << ',' << rm << ',' << ss << '\n';
            summary << "method " << method << " echo " << n << ": rmse " << rm << "% ssim " << ss
                    << '\n';
            write_pgm_slice(
                rn, 0, 0, 0,
                join(out_dir, "slices/" + method + "_echo" + std::to_string(n) + ".pgm"));
            // difference map |recon - truth|, max-normalized by the PGM writer
            VolumeSet diff = rn;
            for (std::size_t i = 0; i < diff.data.size(); ++i)
                diff.data[i] = Cplx(std::abs(std::abs(rn.data[i]) - std::abs(tn.data[i])), 0.0);
            write_pgm_slice(
                diff, 0, 0, 0,
                join(out_dir, "slices/diff_" + method + "_echo" + std::to_string(n) + ".pgm"));
        }
    }

    // Local SNR per ROI on the first echo of each recon.
    std::ofstream snr_csv(join(out_dir, "rois_snr.csv"), std::ios::trunc);
    snr_csv << "roi";
    for (const auto& [method, recon] : recons) snr_csv << ',' << method;
    snr_csv << '\n';
    for (const Roi& roi : rois) {
        snr_csv << roi.label;
        for (const auto& [method, recon] : recons) {
            const double snr = local_snr(slice_echo(recon, 0), roi);
            if (std::isinf(snr))
                snr_csv << ",inf";
            else
                snr_csv << ',' << snr;
        }
        snr_csv << '\n';
    }

    // T2* agreement: every map produced by map-t2star plus the noise-free
    // six-echo GRE reference arm and the ground truth.
    std::vector<std::pair<std::string, RealMap>> t2maps;
    if (file_exists(join(truth_dir, "pd.hdr"))) {
        const Phantom ph = phantom_from_maps(truth_dir);
        const std::vector<double> gre_te{6.0, 18.0, 30.0, 43.17, 55.0, 68.34};
        const VolumeSet gre = echo_images(ph, gre_te);
        const T2starDictionary gre_dict = make_t2star_dictionary(gre_te);
        t2maps.emplace_back("gre-ref", fit_t2star_varpro(gre, gre_dict, ph.support).t2star_ms);
        t2maps.emplace_back("truth", ph.t2star_ms);
    }
    for (const std::string& method : rc.methods) {
        const std::string stem = join(recon_dir, "t2star_" + method);
        if (file_exists(stem + ".hdr")) t2maps.emplace_back(method, read_real_map(stem));
    }

    if (!t2maps.empty()) {
        std::ofstream roi_csv(join(out_dir, "rois_t2star.csv"), std::ios::trunc);
        roi_csv << "roi";
        for (const auto& [name, map] : t2maps) roi_csv << ',' << name;
        roi_csv << '\n';
        for (const Roi& roi : rois) {
            roi_csv << roi.label;
            for (const auto& [name, map] : t2maps) roi_csv << ',' << roi_mean(map, roi);
            roi_csv << '\n';
        }

        std::ofstream ba_csv(join(out_dir, "bland_altman.csv"), std::ios::trunc);
        ba_csv << "a,b,bias,loa_low,loa_high\n";
        for (std::size_t i = 0; i < t2maps.size(); ++i)
            for (std::size_t j = i + 1; j < t2maps.size(); ++j) {
                std::vector<double> a, b;
                for (const Roi& roi : rois) {
                    a.push_back(roi_mean(t2maps[i].second, roi));
                    b.push_back(roi_mean(t2maps[j].second, roi));
                }
                const BlandAltman ba = bland_altman(a, b);
                ba_csv << t2maps[i].first << ',' << t2maps[j].first << ',' << ba.bias << ','
                       << ba.loa_low << ',' << ba.loa_high << '\n';
                summary << "bland-altman " << t2maps[i].first << " vs " << t2maps[j].first
                        << ": bias " << ba.bias << " loa [" << ba.loa_low << ", " << ba.loa_high
                        << "]\n";
            }
    }
}

std::string cmd_pipeline(const RunConfig& rc, const std::string& out_dir) {
    ensure_directory(out_dir);
    const std::string data_dir = join(out_dir, "data");
    const std::string recon_dir = join(out_dir, "recon");
    const std::string eval_dir = join(out_dir, "eval");
    cmd_simulate(rc, data_dir, false);
    cmd_recon(rc, data_dir, recon_dir);
    if (rc.protocol.n_echoes() >= 2) cmd_map_t2star(rc, recon_dir, data_dir, recon_dir);
    cmd_evaluate(rc, recon_dir, data_dir, join(data_dir, "rois.txt"), eval_dir);
    return data_dir;
}

} // namespace buda
