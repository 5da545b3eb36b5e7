#pragma once

#include <array>
#include <cmath>
#include <ostream>
#include <string>
#include <string_view>

namespace recip::harness {

// One episode of one run. Fields that do not apply to the environment or
// agent kind are 0.
struct MetricsRow {
  std::string run_id;
  unsigned long long seed = 0;
  int episode = 0;
  std::array<double, 2> ext_return{};
  std::array<double, 2> int_return{};
  std::array<double, 2> coop_rate{};
  std::array<double, 2> own_coin_frac{};
  std::array<double, 2> coins{};
  std::array<double, 2> mean_abs_balance{};

  bool finite() const {
    for (const auto* a : {&ext_return, &int_return, &coop_rate, &own_coin_frac, &coins, &mean_abs_balance})
      for (double v : *a)
        if (!std::isfinite(v)) return false;
    return true;
  }
};

inline constexpr std::array<std::string_view, 12> kMetricNames{
    "ext_return_1",    "ext_return_2",    "int_return_1", "int_return_2", "coop_rate_1",        "coop_rate_2",
    "own_coin_frac_1", "own_coin_frac_2", "coins_1",      "coins_2",      "mean_abs_balance_1", "mean_abs_balance_2"};

inline std::array<double, 12> metric_values(const MetricsRow& r) {
  return {r.ext_return[0],    r.ext_return[1],    r.int_return[0], r.int_return[1], r.coop_rate[0],
          r.coop_rate[1],     r.own_coin_frac[0], r.own_coin_frac[1], r.coins[0],   r.coins[1],
          r.mean_abs_balance[0], r.mean_abs_balance[1]};
}

inline void write_metrics_header(std::ostream& out) {
  out << "run_id,seed,episode";
  for (auto n : kMetricNames) out << ',' << n;
  out << '\n';
}

// Values are written with 17 significant digits so summaries can be
// recomputed exactly from the files.
inline void write_metrics_row(std::ostream& out, const MetricsRow& r) {
  const auto old = out.precision(17);
  out << r.run_id << ',' << r.seed << ',' << r.episode;
  for (double v : metric_values(r)) out << ',' << v;
  out << '\n';
  out.precision(old);
}

}  // namespace recip::harness
