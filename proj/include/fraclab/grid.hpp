#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fraclab/errors.hpp"

namespace fraclab {

enum class TailKind : std::uint32_t {
  kConstant = 0,    // u = c outside the sampled box
  kConstantPm1 = 1, // u -> -1/+1 below/above the box along a monotone axis
  kPeriodic = 2,    // the sampled box is one period per axis
};

struct TailModel {
  TailKind kind = TailKind::kConstant;
  double constant = 0.0; // for kConstant
  int monotone_axis = 0; // for kConstantPm1

  static TailModel Constant(double c) {
    return TailModel{TailKind::kConstant, c, 0};
  }
  static TailModel ConstantPm1(int axis) {
    return TailModel{TailKind::kConstantPm1, 0.0, axis};
  }
  static TailModel Periodic() { return TailModel{TailKind::kPeriodic, 0.0, 0}; }
};

/// Real-valued function sampled on a uniform n-dimensional grid (n in
/// {1,2,3}) with an explicit far-field tail model. Values are row-major with
/// the last axis fastest.
class GridFunction {
 public:
  GridFunction() = default;
  GridFunction(int dim, std::array<int, 3> shape, double spacing,
               std::array<double, 3> origin, TailModel tail)
      : dim_(dim), shape_(shape), spacing_(spacing), origin_(origin),
        tail_(tail) {
    if (dim < 1 || dim > 3) throw DomainError("GridFunction: dim must be 1-3");
    if (spacing <= 0.0) throw DomainError("GridFunction: spacing must be > 0");
    std::size_t n = 1;
    for (int d = 0; d < 3; ++d) {
      if (d >= dim) shape_[d] = 1;
      if (shape_[d] < 1) throw DomainError("GridFunction: empty axis");
      n *= static_cast<std::size_t>(shape_[d]);
    }
    values_.assign(n, 0.0);
  }

  static GridFunction line(int n_points, double x0, double h, TailModel tail) {
    return GridFunction(1, {n_points, 1, 1}, h, {x0, 0.0, 0.0}, tail);
  }

  int dim() const { return dim_; }
  double spacing() const { return spacing_; }
  const std::array<int, 3>& shape() const { return shape_; }
  const std::array<double, 3>& origin() const { return origin_; }
  const TailModel& tail() const { return tail_; }
  TailModel& tail() { return tail_; }
  std::size_t size() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  std::size_t index(int i, int j = 0, int k = 0) const {
    return (static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k;
  }
  double& at(int i, int j = 0, int k = 0) { return values_[index(i, j, k)]; }
  double at(int i, int j = 0, int k = 0) const {
    return values_[index(i, j, k)];
  }

  double coord(int axis, int i) const { return origin_[axis] + i * spacing_; }
  std::array<double, 3> point(int i, int j = 0, int k = 0) const {
    return {coord(0, i), dim_ > 1 ? coord(1, j) : 0.0,
            dim_ > 2 ? coord(2, k) : 0.0};
  }
  double axis_min(int axis) const { return origin_[axis]; }
  double axis_max(int axis) const {
    return origin_[axis] + (shape_[axis] - 1) * spacing_;
  }

  bool inside(const std::array<double, 3>& p, double eps = 1e-9) const {
    for (int d = 0; d < dim_; ++d)
      if (p[d] < axis_min(d) - eps * spacing_ ||
          p[d] > axis_max(d) + eps * spacing_)
        return false;
    return true;
  }

  /// Value anywhere: multilinear interpolation inside the box, tail model
  /// outside. For kConstantPm1, points beyond the monotone-axis faces take
  /// the pure-phase values -1/+1; points outside only laterally are clamped
  /// to the nearest box face.
  double eval(std::array<double, 3> p) const {
    if (tail_.kind == TailKind::kPeriodic) {
      for (int d = 0; d < dim_; ++d) {
        const double period = shape_[d] * spacing_;
        p[d] = p[d] - period * std::floor((p[d] - origin_[d]) / period);
        // wrapped coordinate lies in [origin, origin + period)
      }
      return interp_periodic(p);
    }
    if (!inside(p)) {
      if (tail_.kind == TailKind::kConstant) return tail_.constant;
      const int m = tail_.monotone_axis;
      if (p[m] > axis_max(m) + 1e-12) return 1.0;
      if (p[m] < axis_min(m) - 1e-12) return -1.0;
      for (int d = 0; d < dim_; ++d)
        p[d] = std::clamp(p[d], axis_min(d), axis_max(d));
    }
    return interp_clamped(p);
  }

  /// Max boundary mismatch |u(face) -/+ 1| for a kConstantPm1 tail.
  double tail_mismatch() const {
    if (tail_.kind != TailKind::kConstantPm1) return 0.0;
    const int m = tail_.monotone_axis;
    double worst = 0.0;
    for_each_index([&](int i, int j, int k) {
      const std::array<int, 3> idx = {i, j, k};
      if (idx[m] == 0) worst = std::max(worst, std::abs(at(i, j, k) + 1.0));
      if (idx[m] == shape_[m] - 1)
        worst = std::max(worst, std::abs(at(i, j, k) - 1.0));
    });
    return worst;
  }

  template <class F>
  void for_each_index(F&& f) const {
    for (int i = 0; i < shape_[0]; ++i)
      for (int j = 0; j < shape_[1]; ++j)
        for (int k = 0; k < shape_[2]; ++k) f(i, j, k);
  }

  // ---- snapshot IO ------------------------------------------------------

  void save_binary(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw NumericalError("save_binary: cannot open " + path);
    const char magic[4] = {'F', 'R', 'G', 'S'};
    out.write(magic, 4);
    write_u32(out, 1); // format version
    write_u32(out, static_cast<std::uint32_t>(dim_));
    for (int d = 0; d < 3; ++d)
      write_u32(out, static_cast<std::uint32_t>(shape_[d]));
    write_f64(out, spacing_);
    for (int d = 0; d < 3; ++d) write_f64(out, origin_[d]);
    write_u32(out, static_cast<std::uint32_t>(tail_.kind));
    write_f64(out, tail_.constant);
    write_u32(out, static_cast<std::uint32_t>(tail_.monotone_axis));
    out.write(reinterpret_cast<const char*>(values_.data()),
              static_cast<std::streamsize>(values_.size() * sizeof(double)));
    if (!out) throw NumericalError("save_binary: write failed for " + path);
  }

  static GridFunction load_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NumericalError("load_binary: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (std::memcmp(magic, "FRGS", 4) != 0)
      throw ContractError("load_binary: bad magic in " + path);
    if (read_u32(in) != 1) throw ContractError("load_binary: bad version");
    GridFunction g;
    g.dim_ = static_cast<int>(read_u32(in));
    for (int d = 0; d < 3; ++d) g.shape_[d] = static_cast<int>(read_u32(in));
    g.spacing_ = read_f64(in);
    for (int d = 0; d < 3; ++d) g.origin_[d] = read_f64(in);
    g.tail_.kind = static_cast<TailKind>(read_u32(in));
    g.tail_.constant = read_f64(in);
    g.tail_.monotone_axis = static_cast<int>(read_u32(in));
    std::size_t n = 1;
    for (int d = 0; d < 3; ++d) n *= static_cast<std::size_t>(g.shape_[d]);
    g.values_.resize(n);
    in.read(reinterpret_cast<char*>(g.values_.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw NumericalError("load_binary: truncated file " + path);
    return g;
  }

  void save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw NumericalError("save_csv: cannot open " + path);
    out << "# dim=" << dim_ << " shape=" << shape_[0] << "," << shape_[1]
        << "," << shape_[2] << " spacing=" << fmt(spacing_) << " origin="
        << fmt(origin_[0]) << "," << fmt(origin_[1]) << "," << fmt(origin_[2])
        << " tail=" << static_cast<int>(tail_.kind) << ","
        << fmt(tail_.constant) << "," << tail_.monotone_axis << "\n";
    for (int i = 0; i < shape_[0]; ++i)
      for (int j = 0; j < shape_[1]; ++j)
        for (int k = 0; k < shape_[2]; ++k) {
          const auto p = point(i, j, k);
          out << fmt(p[0]);
          if (dim_ > 1) out << "," << fmt(p[1]);
          if (dim_ > 2) out << "," << fmt(p[2]);
          out << "," << fmt(at(i, j, k)) << "\n";
        }
  }

 private:
  static std::string fmt(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
  }
  static void write_u32(std::ofstream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  static void write_f64(std::ofstream& out, double v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  static std::uint32_t read_u32(std::ifstream& in) {
    std::uint32_t v;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
  }
  static double read_f64(std::ifstream& in) {
    double v;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
  }

  double interp_clamped(const std::array<double, 3>& p) const {
    std::array<int, 3> i0 = {0, 0, 0};
    std::array<double, 3> w = {0.0, 0.0, 0.0};
    for (int d = 0; d < dim_; ++d) {
      double t = (p[d] - origin_[d]) / spacing_;
      t = std::clamp(t, 0.0, static_cast<double>(shape_[d] - 1));
      i0[d] = std::min(static_cast<int>(t), shape_[d] - 2 >= 0 ? shape_[d] - 2
                                                               : 0);
      w[d] = t - i0[d];
    }
    return multilinear(i0, w, [this](int i, int j, int k) {
      return at(i, j, k);
    });
  }

  double interp_periodic(const std::array<double, 3>& p) const {
    std::array<int, 3> i0 = {0, 0, 0};
    std::array<double, 3> w = {0.0, 0.0, 0.0};
    for (int d = 0; d < dim_; ++d) {
      const double t = (p[d] - origin_[d]) / spacing_;
      i0[d] = static_cast<int>(std::floor(t));
      w[d] = t - i0[d];
    }
    return multilinear(i0, w, [this](int i, int j, int k) {
      return at(((i % shape_[0]) + shape_[0]) % shape_[0],
                dim_ > 1 ? ((j % shape_[1]) + shape_[1]) % shape_[1] : 0,
                dim_ > 2 ? ((k % shape_[2]) + shape_[2]) % shape_[2] : 0);
    });
  }

  template <class Get>
  double multilinear(const std::array<int, 3>& i0,
                     const std::array<double, 3>& w, Get&& get) const {
    double acc = 0.0;
    const int nb = 1 << dim_;
    for (int b = 0; b < nb; ++b) {
      double ww = 1.0;
      std::array<int, 3> idx = i0;
      for (int d = 0; d < dim_; ++d) {
        const bool hi = (b >> d) & 1;
        ww *= hi ? w[d] : 1.0 - w[d];
        idx[d] += hi ? 1 : 0;
      }
      if (ww != 0.0) acc += ww * get(idx[0], idx[1], idx[2]);
    }
    return acc;
  }

  int dim_ = 1;
  std::array<int, 3> shape_ = {1, 1, 1};
  double spacing_ = 1.0;
  std::array<double, 3> origin_ = {0.0, 0.0, 0.0};
  TailModel tail_;
  std::vector<double> values_;
};

}  // namespace fraclab
