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
#include "buda/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "volume files are little-endian; big-endian hosts are unsupported");

namespace buda {

namespace {

struct Header {
    std::map<std::string, std::string> kv;

    const std::string& require(const std::string& key) const {
        auto it = kv.find(key);
        if (it == kv.end()) throw data_error("volume header is missing key '" + key + "'");
        return it->second;
    }
};

Header read_header(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw missing_input_error("cannot open header " + path);
    Header h;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw data_error("malformed header line in " + path);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        h.kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return h;
}

GridDims parse_dims(const std::string& s) {
    std::istringstream ss(s);
    GridDims d;
    if (!(ss >> d.nx >> d.ny >> d.nz)) throw data_error("malformed dims in volume header");
    return d;
}

void write_raw(const std::string& path, const char* bytes, std::size_t count) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open " + path + " for writing");
    out.write(bytes, static_cast<std::streamsize>(count));
    if (!out) throw io_error("write failed for " + path);
}

void read_raw(const std::string& path, char* bytes, std::size_t count) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw missing_input_error("cannot open data file " + path);
    in.seekg(0, std::ios::end);
    const auto size = static_cast<std::size_t>(in.tellg());
    if (size != count)
        throw data_error("corrupt volume: " + path + " holds " + std::to_string(size) +
                         " bytes, expected " + std::to_string(count));
    in.seekg(0);
    in.read(bytes, static_cast<std::streamsize>(count));
    if (!in) throw io_error("read failed for " + path);
}

} // namespace

void write_volume(const VolumeSet& v, const std::string& stem) {
    v.validate();
    std::ostringstream hdr;
    hdr << "format = budavol1\n"
        << "dtype = c64le\n"
        << "order = x-fastest\n"
        << "dims = " << v.dims.nx << ' ' << v.dims.ny << ' ' << v.dims.nz << '\n'
        << "coils = " << v.n_coils << '\n'
        << "shots = " << v.n_shots << '\n'
        << "echoes = " << v.n_echoes << '\n'
        << "space = " << to_string(v.space) << '\n';
    const std::string text = hdr.str();
    write_raw(stem + ".hdr", text.data(), text.size());
    write_raw(stem + ".c64", reinterpret_cast<const char*>(v.data.data()),
              v.data.size() * sizeof(Cplx));
}

VolumeSet read_volume(const std::string& stem) {
    const Header h = read_header(stem + ".hdr");
    const std::string dtype = h.require("dtype");
    if (dtype != "c64le") throw data_error("unsupported dtype '" + dtype + "' for complex volume");
    if (h.require("order") != "x-fastest")
        throw data_error("unsupported sample order '" + h.require("order") + "'");
    VolumeSet v;
    v.dims = parse_dims(h.require("dims"));
    v.n_coils = std::stoi(h.require("coils"));
    v.n_shots = std::stoi(h.require("shots"));
    v.n_echoes = std::stoi(h.require("echoes"));
    const std::string space = h.require("space");
    if (space == "image")
        v.space = Space::image;
    else if (space == "kspace")
        v.space = Space::kspace;
    else
        throw data_error("unknown space tag '" + space + "'");
    v.validate_shape();
    v.data.resize(static_cast<std::size_t>(v.total()));
    read_raw(stem + ".c64", reinterpret_cast<char*>(v.data.data()), v.data.size() * sizeof(Cplx));
    return v;
}

void write_real_map(const RealMap& m, const std::string& stem) {
    m.validate();
    std::ostringstream hdr;
    hdr << "format = budavol1\n"
        << "dtype = f64le\n"
        << "order = x-fastest\n"
        << "dims = " << m.dims.nx << ' ' << m.dims.ny << ' ' << m.dims.nz << '\n'
        << "unit = " << m.unit << '\n';
    const std::string text = hdr.str();
    write_raw(stem + ".hdr", text.data(), text.size());
    write_raw(stem + ".f64", reinterpret_cast<const char*>(m.values.data()),
              m.values.size() * sizeof(double));
}

RealMap read_real_map(const std::string& stem) {
    const Header h = read_header(stem + ".hdr");
    const std::string dtype = h.require("dtype");
    if (dtype != "f64le") throw data_error("unsupported dtype '" + dtype + "' for real map");
    RealMap m;
    m.dims = parse_dims(h.require("dims"));
    m.dims.validate();
    m.unit = h.require("unit");
    m.values.resize(static_cast<std::size_t>(m.dims.voxels()));
    read_raw(stem + ".f64", reinterpret_cast<char*>(m.values.data()),
             m.values.size() * sizeof(double));
    m.validate();
    return m;
}

namespace {

void write_pgm(const std::vector<double>& mag, int nx, int ny, const std::string& path) {
    double mx = 0.0;
    for (double v : mag) mx = std::max(mx, v);
    std::ostringstream out;
    out << "P5\n" << nx << ' ' << ny << "\n255\n";
    std::string payload = out.str();
    payload.reserve(payload.size() + mag.size());
    for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) {
            const double v = mag[static_cast<std::size_t>(x) + std::size_t(nx) * y];
            const int px = mx > 0.0 ? static_cast<int>(std::lround(255.0 * v / mx)) : 0;
            payload.push_back(static_cast<char>(std::clamp(px, 0, 255)));
        }
    write_raw(path, payload.data(), payload.size());
}

} // namespace

void write_pgm_slice(const VolumeSet& v, int coil, int shot, int echo, const std::string& path) {
    const int z = v.dims.nz / 2;
    std::vector<double> mag(static_cast<std::size_t>(v.dims.nx) * v.dims.ny);
    for (int y = 0; y < v.dims.ny; ++y)
        for (int x = 0; x < v.dims.nx; ++x)
            mag[static_cast<std::size_t>(x) + std::size_t(v.dims.nx) * y] =
                std::abs(v.at(x, y, z, coil, shot, echo));
    write_pgm(mag, v.dims.nx, v.dims.ny, path);
}

void write_pgm_slice(const RealMap& m, const std::string& path) {
    const int z = m.dims.nz / 2;
    std::vector<double> mag(static_cast<std::size_t>(m.dims.nx) * m.dims.ny);
    for (int y = 0; y < m.dims.ny; ++y)
        for (int x = 0; x < m.dims.nx; ++x)
            mag[static_cast<std::size_t>(x) + std::size_t(m.dims.nx) * y] =
                std::abs(m.at(x, y, z));
    write_pgm(mag, m.dims.nx, m.dims.ny, path);
}

bool file_exists(const std::string& path) { return std::filesystem::exists(path); }

void ensure_directory(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw io_error("cannot create directory " + dir + ": " + ec.message());
}

} // namespace buda
