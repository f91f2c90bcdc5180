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
#include "buda/types.hpp"

#include <cmath>

namespace buda {

void RealMap::validate() const {
    dims.validate();
    if (unit.empty()) throw data_error("real map is missing its unit tag");
    if (Index(values.size()) != dims.voxels())
        throw data_error("corrupt real map: value count does not match dims");
    for (double v : values)
        if (!std::isfinite(v)) throw data_error("real map contains non-finite values");
}

double norm2(const std::vector<Cplx>& v) {
    double s = 0.0;
    for (const Cplx& x : v) s += std::norm(x);
    return std::sqrt(s);
}

double norm2(const VolumeSet& v) { return norm2(v.data); }

Cplx dot(const std::vector<Cplx>& a, const std::vector<Cplx>& b) {
    if (a.size() != b.size()) throw data_error("dot: size mismatch");
    Cplx s(0.0, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

Cplx dot(const VolumeSet& a, const VolumeSet& b) { return dot(a.data, b.data); }

} // namespace buda
