#include "hawkon/intensity_field.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "hawkon/errors.hpp"
#include "hawkon/util.hpp"

namespace hawkon {

double IntensityField::at_cell(double t, int cell) const {
  if (knots == 0) throw InvalidState("empty intensity field");
  double pos = std::min(std::max(t, 0.0), horizon()) / dt;
  int k = std::min(knots - 2, static_cast<int>(pos));
  if (knots == 1) return values(0, cell);
  double w = pos - k;
  return (1.0 - w) * values(k, cell) + w * values(k + 1, cell);
}

double IntensityField::sup_cell(double a, double b, int cell) const {
  a = std::max(a, 0.0);
  b = std::min(b, horizon());
  if (b < a) return 0.0;
  double m = std::max(at_cell(a, cell), at_cell(b, cell));
  int k0 = static_cast<int>(std::ceil(a / dt));
  int k1 = static_cast<int>(std::floor(b / dt));
  for (int k = k0; k <= k1; ++k) m = std::max(m, values(k, cell));
  return m;
}

double IntensityField::l2_at(double t) const {
  double s = 0;
  for (int c = 0; c < cells(); ++c) {
    double v = at_cell(t, c);
    s += v * v;
  }
  return std::sqrt(s / cells());
}

void IntensityField::write_csv(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot open '" + path + "' for writing");
  out << "t,x,lambda\n";
  for (int k = 0; k < knots; ++k)
    for (int c = 0; c < cells(); ++c)
      out << format_double(k * dt) << "," << format_double(xs[static_cast<std::size_t>(c)]) << ","
          << format_double(values(k, c)) << "\n";
  if (!out) throw InvalidArgument("write failed for '" + path + "'");
}

void IntensityField::write_sidecar(const std::string& path) const {
  nlohmann::json j = meta;
  j["dt"] = dt;
  j["knots"] = knots;
  j["cells"] = cells();
  j["T"] = horizon();
  j["sup"] = sup();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
}

}  // namespace hawkon
