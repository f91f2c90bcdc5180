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

#include "buda/types.hpp"

namespace buda {

enum class FftDirection { forward, inverse };

/// Centered orthonormal 3D DFT applied independently to every
/// (coil, shot, echo) block. DC sits at index floor(N/2) on each axis, the
/// scale is 1/sqrt(N) per direction, and the forward kernel is
/// exp(+i*2*pi*k.r/N); forward/inverse are exact inverses and energy is
/// preserved. Forward requires an image-space input and yields k-space;
/// inverse is the reverse.
VolumeSet fft3_centered(const VolumeSet& v, FftDirection dir);

/// Same transform on one contiguous nx*ny*nz block, no space-tag checks.
void fft3_centered_block(const Cplx* in, Cplx* out, GridDims dims, FftDirection dir);

} // namespace buda
