// Regenerates the synthetic fixtures under data/. The transcribed tables
// (table3.csv, table5.csv) are maintained by hand and not touched here.
//
//   make_fixtures <data-dir>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "stochdyn/blowfly.hpp"
#include "stochdyn/error.hpp"
#include "stochdyn/raintravel.hpp"
#include "stochdyn/region_io.hpp"
#include "stochdyn/scenarios.hpp"
#include "stochdyn/trajectory.hpp"

namespace fs = std::filesystem;
using namespace stochdyn;

namespace {

std::ofstream open(const fs::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error(ErrorCode::io, "cannot write " + p.string());
  return f;
}

void write_spec(const fs::path& p, const Eigen::Matrix<double, 5, 1>& beta, const std::string& region) {
  auto f = open(p);
  f << "{\n  \"variant\": \"polynomial-shore\",\n  \"beta\": [";
  for (int k = 0; k < 5; ++k) f << (k ? ", " : "") << format_double(beta(k));
  f << "],\n  \"C\": " << format_double(scenarios::kSealShoreC) << ",\n  \"region_file\": \"" << region << "\"\n}\n";
}

// Seeded curve: the published fit plus a late-afternoon bump and small
// fluctuations; unseeded: the natural level plus fluctuations. Two decimals,
// as if read off a graph.
RainCurve reconstructed_rain() {
  RngStream rng(1974, 4);
  Eigen::VectorXd hours(29);
  for (Eigen::Index i = 0; i < hours.size(); ++i) hours(i) = 2.0 + static_cast<double>(i);
  const RainModelParams p = scenarios::published_rain_params();
  RainCurve c{hours, rain_regression(hours, p, true), Eigen::VectorXd::Constant(hours.size(), p.alpha)};
  for (Eigen::Index i = 0; i < hours.size(); ++i) {
    const double bump = 1.1 * std::exp(-0.5 * std::pow((hours(i) - 18.0) / 1.8, 2));
    c.seeded(i) = std::round(100.0 * (c.seeded(i) + bump + 0.15 * rng.normal())) / 100.0;
    c.unseeded(i) = std::round(100.0 * (c.unseeded(i) + 0.06 * rng.normal())) / 100.0;
    if (c.seeded(i) <= 0.0) c.seeded(i) = 0.0;
    if (c.unseeded(i) <= 0.0) c.unseeded(i) = 0.0;
  }
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixtures <data-dir>\n";
    return 2;
  }
  const fs::path dir = argv[1];
  try {
    fs::create_directories(dir);
    {
      auto f = open(dir / "molokai.csv");
      write_region(f, scenarios::island_outline());
    }
    {
      auto f = open(dir / "penguin_bank.csv");
      write_region(f, scenarios::bank_outline());
    }
    write_spec(dir / "seal_potential.json", scenarios::published_seal_beta(), "molokai.csv");
    write_spec(dir / "seal_attracting.json", scenarios::attracting_seal_beta(), "molokai.csv");
    {
      RngStream rng(2004, 1);
      auto f = open(dir / "seal_synthetic.csv");
      write_trajectory(f, scenarios::seal_track_with_labels(rng));
    }
    {
      const scenarios::ElkScenario s;
      RngStream rng(1993, 2);
      auto f = open(dir / "elk_synthetic.csv");
      write_trajectory(f, scenarios::simulate_elk(s, rng));
      auto g = open(dir / "atv_synthetic.csv");
      write_trajectory(g, scenarios::atv_track(s));
    }
    {
      RngStream rng(1957, 3);
      const BlowflyModel m = scenarios::reference_blowfly_model();
      auto f = open(dir / "blowfly_synthetic.csv");
      write_blowfly_series(f, simulate_blowfly(m, scenarios::reference_emergence(400), &rng));
    }
    {
      auto f = open(dir / "fig4_reconstructed.csv");
      write_rain_curve(f, reconstructed_rain());
    }
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }
  return 0;
}
