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
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "buda/config.hpp"
#include "buda/encode.hpp"
#include "buda/fieldmap.hpp"
#include "buda/phantom.hpp"
#include "buda/protocol.hpp"
#include "buda/slr.hpp"

namespace buda {

/// One run of the pipeline: protocol, phantom, noise, method list and solver
/// settings. Built from the structured text config.
struct RunConfig {
    Protocol protocol;
    PhantomPreset preset = PhantomPreset::ellipsoids;
    PhantomOptions phantom;
    int n_coils = 8;

    double noise_sigma = 0.0;
    double noise_snr = 0.0; // used when > 0 and noise_sigma == 0
    double shot_phase_amplitude_rad = 0.0;
    bool realistic_decay = false;

    std::vector<std::string> methods{"buda"};
    std::string field_source = "ground-truth"; // or "estimated"

    int hankel_kernel = 3;
    RankPolicy rank;
    bool has_rank = false;
    IhtConfig iht;
    FieldEstimateOptions fieldmap;
    CgOptions sense;

    std::uint64_t seed = 1;

    void validate() const; // throws config_error, names the offending key
};

Protocol protocol_from_config(const Config& cfg);
RunConfig load_run_config(const Config& cfg);

// Stage commands. Each writes its outputs plus a manifest under out_dir and
// throws config_error / missing_input_error / data_error on failure; the CLI
// maps those to exit codes 2 / 3 / 4.
void cmd_simulate(const RunConfig& rc, const std::string& out_dir, bool verify = false);
void cmd_estimate_field(const RunConfig& rc, const std::string& data_dir,
                        const std::string& out_dir);
void cmd_recon(const RunConfig& rc, const std::string& data_dir, const std::string& out_dir);
void cmd_map_t2star(const RunConfig& rc, const std::string& recon_dir,
                    const std::string& support_dir, const std::string& out_dir);
void cmd_evaluate(const RunConfig& rc, const std::string& recon_dir, const std::string& truth_dir,
                  const std::string& roi_path, const std::string& out_dir);

/// simulate -> (estimate-field) -> recon -> map-t2star -> evaluate under
/// out_dir/{data,recon,eval}. Returns the data directory used.
std::string cmd_pipeline(const RunConfig& rc, const std::string& out_dir);

/// ROI boxes derived from the phantom layout (compartment centers plus
/// peripheral samples of the outer shell), written in the ROI config format.
void write_default_rois(const Phantom& ph, const std::string& path);

} // namespace buda
