#pragma once

#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "recip/nn/param_vector.hpp"

namespace recip::nn {

// Text checkpoint:
//
//   recip-params 1
//   segments <n>
//   <name> <rows> <cols>        (n lines, in layout order)
//   values <count>
//   <value>                     (count lines, column-major per segment)
//
// Values are written with max_digits10 so a save/load round trip is exact.
template <class Scalar>
void save_params(std::ostream& out, const ParamVector<Scalar>& params) {
  out << "recip-params 1\n";
  out << "segments " << params.layout().size() << '\n';
  for (const auto& s : params.layout()) out << s.name << ' ' << s.rows << ' ' << s.cols << '\n';
  out << "values " << params.size() << '\n';
  out << std::setprecision(std::numeric_limits<Scalar>::max_digits10);
  for (Eigen::Index i = 0; i < params.size(); ++i) out << params.values()[i] << '\n';
}

// Loads into a network-owned ParamVector; the header must match its layout.
template <class Scalar>
void load_params(std::istream& in, ParamVector<Scalar>& params) {
  std::string tag;
  int version = 0;
  if (!(in >> tag >> version) || tag != "recip-params" || version != 1)
    throw ConfigError("load_params: not a recip-params v1 checkpoint");
  std::size_t count = 0;
  if (!(in >> tag >> count) || tag != "segments") throw ConfigError("load_params: missing segment table");
  if (count != params.layout().size())
    throw ConfigError("load_params: checkpoint has " + std::to_string(count) + " segments, network has " +
                      std::to_string(params.layout().size()));
  for (const auto& s : params.layout()) {
    std::string name;
    Eigen::Index rows = 0, cols = 0;
    if (!(in >> name >> rows >> cols)) throw ConfigError("load_params: truncated segment table");
    if (name != s.name || rows != s.rows || cols != s.cols)
      throw ConfigError("load_params: segment '" + name + "' does not match network segment '" + s.name + "'");
  }
  Eigen::Index n = 0;
  if (!(in >> tag >> n) || tag != "values" || n != params.size()) throw ConfigError("load_params: value count mismatch");
  Vector<Scalar> values(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::string token;
    if (!(in >> token)) throw ConfigError("load_params: truncated values");
    values[i] = static_cast<Scalar>(std::stod(token));
  }
  if (!values.allFinite()) throw ConfigError("load_params: non-finite parameter in checkpoint");
  params.values() = std::move(values);
}

}  // namespace recip::nn
