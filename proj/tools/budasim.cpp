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
#include <CLI11.hpp>

#include <cstdio>
#include <exception>

#include "buda/errors.hpp"
#include "buda/parallel.hpp"
#include "buda/pipeline.hpp"

namespace {

struct GlobalArgs {
    std::string config;
    std::string out = "out";
    int seed = -1; // overrides the config when >= 0
    int threads = 0;
};

buda::RunConfig load(const GlobalArgs& g) {
    buda::Config cfg = buda::Config::parse_file(g.config);
    buda::RunConfig rc = buda::load_run_config(cfg);
    if (g.seed >= 0) rc.seed = static_cast<std::uint64_t>(g.seed);
    buda::set_threads(g.threads);
    return rc;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"blip-up/down 3D-EPI simulation, reconstruction and T2* mapping"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the subcommand

    GlobalArgs g;
    app.add_option("--config", g.config, "run config file")->required();
    app.add_option("--out", g.out, "output directory");
    app.add_option("--seed", g.seed, "override the config seed");
    app.add_option("--threads", g.threads, "worker threads (0 = auto)");

    bool verify = false;
    std::string data_dir, recon_dir, truth_dir, roi_path, support_dir;

    auto* sim = app.add_subcommand("simulate", "write phantom, coils, plan and k-space data");
    sim->add_flag("--verify", verify, "re-read outputs and check d against the forward model");

    auto* field = app.add_subcommand("estimate-field", "polarity-group SENSE + displacement search");
    field->add_option("--data", data_dir, "simulate output directory")->required();

    auto* rec = app.add_subcommand("recon", "reconstruct with the configured methods");
    rec->add_option("--data", data_dir, "simulate output directory")->required();

    auto* map = app.add_subcommand("map-t2star", "VARPRO dictionary T2* fit of recon volumes");
    map->add_option("--recon", recon_dir, "recon output directory")->required();
    map->add_option("--support", support_dir, "directory holding the support map");

    auto* eval = app.add_subcommand("evaluate", "RMSE/SSIM/SNR metrics, ROI T2*, Bland-Altman");
    eval->add_option("--recon", recon_dir, "recon output directory")->required();
    eval->add_option("--truth", truth_dir, "simulate output directory")->required();
    eval->add_option("--rois", roi_path, "ROI config (label x0 y0 z0 x1 y1 z1 per line)");

    auto* pipe = app.add_subcommand("pipeline", "simulate, recon, map and evaluate in one run");

    CLI11_PARSE(app, argc, argv);

    try {
        const buda::RunConfig rc = load(g);
        if (sim->parsed()) {
            buda::cmd_simulate(rc, g.out, verify);
        } else if (field->parsed()) {
            buda::cmd_estimate_field(rc, data_dir, g.out);
        } else if (rec->parsed()) {
            buda::cmd_recon(rc, data_dir, g.out);
        } else if (map->parsed()) {
            buda::cmd_map_t2star(rc, recon_dir, support_dir.empty() ? recon_dir : support_dir,
                                 g.out);
        } else if (eval->parsed()) {
            if (roi_path.empty()) roi_path = truth_dir + "/rois.txt";
            buda::cmd_evaluate(rc, recon_dir, truth_dir, roi_path, g.out);
        } else if (pipe->parsed()) {
            buda::cmd_pipeline(rc, g.out);
        }
    } catch (const buda::config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const buda::missing_input_error& e) {
        std::fprintf(stderr, "missing input: %s\n", e.what());
        return 3;
    } catch (const buda::data_error& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
