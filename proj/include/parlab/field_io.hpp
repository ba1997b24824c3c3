#pragma once

// Field import/export. Binary and text carry the same header
// (d, n per axis, k, n_t, box, t_end, dt) followed by row-major values in
// [level][node][component] order with node = i + n0*j. CSV exports one time
// slice for plotting.

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "parlab/field.hpp"

namespace parlab {

inline constexpr char kFieldMagic[9] = "PARLABF1";

inline void write_field_binary(const std::string& path, const SpaceTimeField& u) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_field_binary: cannot open " + path);
  f.write(kFieldMagic, 8);
  const Grid& g = u.grid();
  auto w32 = [&](int32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); };
  auto w64 = [&](double v) { f.write(reinterpret_cast<const char*>(&v), 8); };
  w32(g.dim);
  w32(g.n[0]);
  w32(g.n[1]);
  w32(u.components());
  w32(g.num_levels());
  w64(g.lo[0]);
  w64(g.hi[0]);
  w64(g.lo[1]);
  w64(g.hi[1]);
  w64(g.t_end);
  w64(g.dt);
  f.write(reinterpret_cast<const char*>(u.data().data()),
          static_cast<std::streamsize>(u.data().size() * sizeof(double)));
  if (!f) throw std::runtime_error("write_field_binary: write failed for " + path);
}

inline SpaceTimeField read_field_binary(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_field_binary: cannot open " + path);
  char magic[9] = {0};
  f.read(magic, 8);
  if (std::string(magic) != kFieldMagic) throw std::runtime_error("read_field_binary: bad magic");
  auto r32 = [&]() {
    int32_t v;
    f.read(reinterpret_cast<char*>(&v), 4);
    return v;
  };
  auto r64 = [&]() {
    double v;
    f.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  int dim = r32(), n0 = r32(), n1 = r32(), k = r32(), nt = r32();
  double lo0 = r64(), hi0 = r64(), lo1 = r64(), hi1 = r64(), t_end = r64(), dt = r64();
  (void)t_end;
  Grid g = dim == 1 ? make_grid_1d(lo0, hi0, n0, (nt - 1) * dt, dt)
                    : make_grid_2d(lo0, hi0, n0, lo1, hi1, n1, (nt - 1) * dt, dt);
  std::vector<double> vals(static_cast<size_t>(nt) * g.num_nodes() * k);
  f.read(reinterpret_cast<char*>(vals.data()), static_cast<std::streamsize>(vals.size() * sizeof(double)));
  if (!f) throw std::runtime_error("read_field_binary: truncated file " + path);
  return SpaceTimeField(g, k, std::move(vals));
}

inline void write_field_text(const std::string& path, const SpaceTimeField& u) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_field_text: cannot open " + path);
  const Grid& g = u.grid();
  f << kFieldMagic << "\n";
  f << g.dim << " " << g.n[0] << " " << g.n[1] << " " << u.components() << " " << g.num_levels()
    << "\n";
  f << std::setprecision(17) << g.lo[0] << " " << g.hi[0] << " " << g.lo[1] << " " << g.hi[1] << " "
    << g.t_end << " " << g.dt << "\n";
  for (double v : u.data()) f << v << "\n";
}

inline SpaceTimeField read_field_text(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("read_field_text: cannot open " + path);
  std::string magic;
  f >> magic;
  if (magic != kFieldMagic) throw std::runtime_error("read_field_text: bad magic");
  int dim, n0, n1, k, nt;
  double lo0, hi0, lo1, hi1, t_end, dt;
  f >> dim >> n0 >> n1 >> k >> nt >> lo0 >> hi0 >> lo1 >> hi1 >> t_end >> dt;
  (void)t_end;
  Grid g = dim == 1 ? make_grid_1d(lo0, hi0, n0, (nt - 1) * dt, dt)
                    : make_grid_2d(lo0, hi0, n0, lo1, hi1, n1, (nt - 1) * dt, dt);
  std::vector<double> vals(static_cast<size_t>(nt) * g.num_nodes() * k);
  for (double& v : vals) f >> v;
  if (!f) throw std::runtime_error("read_field_text: truncated file " + path);
  return SpaceTimeField(g, k, std::move(vals));
}

// One time slice as CSV: x[,y],u_0[,u_1,...].
inline void export_slice_csv(const std::string& path, const SpaceTimeField& u, int level) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("export_slice_csv: cannot open " + path);
  const Grid& g = u.grid();
  f << std::setprecision(17);
  f << (g.dim == 1 ? "x" : "x,y");
  for (int c = 0; c < u.components(); ++c) f << ",u_" << c;
  f << "\n";
  for (int node = 0; node < g.num_nodes(); ++node) {
    SpaceVec x = g.node_coord(node);
    f << x[0];
    if (g.dim == 2) f << "," << x[1];
    for (int c = 0; c < u.components(); ++c) f << "," << u.value(level, node, c);
    f << "\n";
  }
}

}  // namespace parlab
