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

#include <Eigen/Core>
#include <string>
#include <vector>

#include "buda/encode.hpp"
#include "buda/types.hpp"

namespace buda {

/// Block-Hankel lift geometry. Rows enumerate the sliding kernel^3 window
/// origins; columns stack the flattened window per shot (mode shots) or per
/// shot and echo (mode shots_and_echoes).
struct HankelSpec {
    enum class Mode { shots, shots_and_echoes };

    int kernel = 3; // odd, <= every grid dimension
    Mode mode = Mode::shots;
    GridDims dims;
    int n_shots = 1;
    int n_echoes = 1;

    Index rows() const {
        return Index(dims.nx - kernel + 1) * (dims.ny - kernel + 1) * (dims.nz - kernel + 1);
    }
    Index cols() const {
        const Index m3 = Index(kernel) * kernel * kernel;
        return mode == Mode::shots ? m3 * n_shots : m3 * n_shots * n_echoes;
    }
    int lifted_echoes() const { return mode == Mode::shots ? 1 : n_echoes; }

    void validate() const;
};

/// Singular-value truncation rule: keep the top k values (fixed_rank), the
/// smallest prefix holding an eta fraction of squared energy
/// (energy_fraction), or every value >= tau * sigma_1 (relative_sigma).
struct RankPolicy {
    enum class Mode { fixed_rank, energy_fraction, relative_sigma };
    Mode mode = Mode::fixed_rank;
    double value = 1.0;

    void validate() const;
    int retained(const std::vector<double>& sigma_desc) const;
};

struct IhtConfig {
    enum class Step { auto_lipschitz, fixed };
    int max_iter = 100;
    double rel_change_tol = 1e-3; // 0.1 percent between consecutive iterates
    Step step = Step::auto_lipschitz;
    double mu = 0.0;      // used when step == fixed
    int power_iters = 20; // Lipschitz estimate for the auto step
};

/// ksp: (1, S, N) k-space with N == 1 for mode shots. Row j is window origin j
/// (x-fastest); column is offset + m^3*(shot + S*echo) with offsets x-fastest.
Eigen::MatrixXcd hankel_lift(const VolumeSet& ksp, const HankelSpec& spec);

/// Multiplicity-normalized adjoint, so hankel_unlift(hankel_lift(x)) == x.
VolumeSet hankel_unlift(const Eigen::MatrixXcd& m, const HankelSpec& spec);

/// Plain adjoint that sums without dividing by multiplicity; satisfies
/// <lift(x), M> == <x, unlift_unnormalized(M)>.
VolumeSet hankel_unlift_unnormalized(const Eigen::MatrixXcd& m, const HankelSpec& spec);

struct RankProjection {
    Eigen::MatrixXcd matrix;
    int retained_rank = 0;
};

/// Project onto the truncation set given by the policy. Uses a full SVD on
/// small matrices and an exact Gram-matrix eigendecomposition on tall ones;
/// both agree with the full SVD to well below 1e-8.
Eigen::MatrixXcd rank_project(const Eigen::MatrixXcd& m, const RankPolicy& policy);
RankProjection rank_project_info(const Eigen::MatrixXcd& m, const RankPolicy& policy);

struct IhtIteration {
    int iter;
    double data_residual;
    double rel_change;
    int retained_rank;
};

struct BudaResult {
    VolumeSet shot_images; // (1, S, N) image space
    VolumeSet combined;    // (1, 1, N), voxelwise mean of per-shot magnitudes
    std::vector<IhtIteration> log;
    bool converged = false;
    int iterations = 0;
    std::string stop_reason;       // "rel_change" or "max_iter"
    double step_size = 0.0;
    double zero_init_residual = 0.0; // data term at the zero initializer
    double final_data_residual = 0.0;
};

/// Iterative hard thresholding for the single-echo shot-stacked model:
/// minimize the per-shot data term subject to a rank constraint on the
/// block-Hankel lift across shots. d: (C, S, 1).
BudaResult buda_reconstruct(const EncodingContext& ctx, const VolumeSet& d, const HankelSpec& spec,
                            const RankPolicy& policy, const IhtConfig& iht);

/// Joint variant: one lift across shots and echoes, all echoes updated each
/// iteration. With a single echo this is bit-identical to buda_reconstruct.
BudaResult buda_joint_reconstruct(const EncodingContext& ctx, const VolumeSet& d,
                                  const HankelSpec& spec, const RankPolicy& policy,
                                  const IhtConfig& iht);

void write_iteration_log(const std::string& path, const std::vector<IhtIteration>& log);

} // namespace buda
