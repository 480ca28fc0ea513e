#include "abpinn/spectral/grid.hpp"

#include <algorithm>
#include <cmath>

#include "abpinn/error.hpp"
#include "abpinn/io/csv.hpp"

namespace abpinn::spectral {

double ReferenceGrid::interpolate(double t, double x) const {
  const Eigen::Index nt = times.size(), nx = xs.size();
  if (nt == 0 || nx == 0) throw StateError("reference grid is empty");
  const double period = 2.0;
  double s = (x - xs[0]) / period;
  s = (s - std::floor(s)) * static_cast<double>(nx);
  Eigen::Index i0 = static_cast<Eigen::Index>(std::floor(s));
  double wx = s - static_cast<double>(i0);
  i0 = std::clamp<Eigen::Index>(i0, 0, nx - 1);
  const Eigen::Index i1 = (i0 + 1) % nx;

  Eigen::Index j0 = 0;
  double wt = 0.0;
  if (nt > 1) {
    const double tc = std::clamp(t, times[0], times[nt - 1]);
    j0 = static_cast<Eigen::Index>(std::upper_bound(times.data(), times.data() + nt, tc) - times.data()) - 1;
    j0 = std::clamp<Eigen::Index>(j0, 0, nt - 2);
    wt = (tc - times[j0]) / (times[j0 + 1] - times[j0]);
  }
  const Eigen::Index j1 = nt > 1 ? j0 + 1 : j0;
  const double a = (1 - wx) * values(j0, i0) + wx * values(j0, i1);
  const double b = (1 - wx) * values(j1, i0) + wx * values(j1, i1);
  return (1 - wt) * a + wt * b;
}

void write_grid_csv(const ReferenceGrid& grid, const std::filesystem::path& path) {
  const std::vector<std::string> header{"t", "x", "u"};
  io::CsvWriter out(path, header);
  for (Eigen::Index j = 0; j < grid.times.size(); ++j) {
    for (Eigen::Index i = 0; i < grid.xs.size(); ++i) {
      const double row[3] = {grid.times[j], grid.xs[i], grid.values(j, i)};
      out.row(row);
    }
  }
  out.close();
}

ReferenceGrid read_grid_csv(const std::filesystem::path& path) {
  const auto table = io::read_csv(path, std::vector<std::string>{"t", "x", "u"});
  const auto t = table.numeric_column("t");
  const auto x = table.numeric_column("x");
  const auto u = table.numeric_column("u");
  if (t.empty()) throw IoError(path.string() + ": no data rows");
  std::size_t nx = 0;
  while (nx < t.size() && t[nx] == t[0]) ++nx;
  if (t.size() % nx != 0) throw IoError(path.string() + ": grid is not rectilinear");
  const std::size_t nt = t.size() / nx;

  ReferenceGrid g;
  g.times.resize(static_cast<Eigen::Index>(nt));
  g.xs.resize(static_cast<Eigen::Index>(nx));
  g.values.resize(static_cast<Eigen::Index>(nt), static_cast<Eigen::Index>(nx));
  for (std::size_t j = 0; j < nt; ++j) {
    g.times[static_cast<Eigen::Index>(j)] = t[j * nx];
    if (j > 0 && !(t[j * nx] > t[(j - 1) * nx])) throw IoError(path.string() + ": times not increasing");
    for (std::size_t i = 0; i < nx; ++i) {
      const std::size_t r = j * nx + i;
      if (t[r] != t[j * nx]) throw IoError(path.string() + ": grid is not rectilinear at row " + std::to_string(r + 2));
      if (j == 0) {
        g.xs[static_cast<Eigen::Index>(i)] = x[r];
      } else if (x[r] != x[i]) {
        throw IoError(path.string() + ": x nodes differ between times at row " + std::to_string(r + 2));
      }
      g.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = u[r];
    }
  }
  const double dx = 2.0 / static_cast<double>(nx);
  for (std::size_t i = 0; i < nx; ++i) {
    if (std::abs(g.xs[static_cast<Eigen::Index>(i)] - (-1.0 + dx * static_cast<double>(i))) > 1e-9) {
      throw IoError(path.string() + ": x nodes are not uniform on [-1, 1)");
    }
  }
  return g;
}

}  // namespace abpinn::spectral
