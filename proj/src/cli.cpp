#include "stochdyn/cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <ctime>
#include <fstream>
#include <iterator>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "stochdyn/blowfly.hpp"
#include "stochdyn/cluster.hpp"
#include "stochdyn/csv.hpp"
#include "stochdyn/diagnostics.hpp"
#include "stochdyn/error.hpp"
#include "stochdyn/inference.hpp"
#include "stochdyn/parallel.hpp"
#include "stochdyn/potential.hpp"
#include "stochdyn/raintravel.hpp"
#include "stochdyn/region_io.hpp"
#include "stochdyn/sardine.hpp"
#include "stochdyn/sde.hpp"
#include "stochdyn/trajectory.hpp"

#ifndef STOCHDYN_VERSION
#define STOCHDYN_VERSION "dev"
#endif

namespace stochdyn::cli {

using json = nlohmann::json;

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 14];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

namespace {

// Options shared by every subcommand.
struct Common {
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  int workers = 1;
  std::string out_path;
  std::string manifest_path;
  std::string config_path;
};

struct Context {
  std::ostream& out;
  std::ostream& err;
  const Clock& clock;
  std::vector<std::string> argv;
  std::string subcommand;
  Common common;
  std::map<std::string, std::string> inputs;
  std::map<std::string, std::string> outputs;
  json extra = json::object();

  const std::string& input(const std::string& path) {
    inputs[path] = file_hash(path);
    return path;
  }

  // A potential spec and the polygon file it points to.
  const std::string& potential_input(const std::string& path) {
    input(path);
    std::ifstream in(path);
    const json j = json::parse(in, nullptr, false);
    if (j.is_object() && j.contains("region_file") && j["region_file"].is_string()) {
      const auto region = std::filesystem::path(path).parent_path() / j["region_file"].get<std::string>();
      if (std::filesystem::exists(region)) input(region.string());
    }
    return path;
  }

  std::uint64_t seed() const {
    if (!common.seed_opt || common.seed_opt->count() == 0)
      throw Error(ErrorCode::usage, subcommand + " is stochastic and needs --seed");
    return common.seed;
  }

  // Primary output: the --out file, or standard output.
  void emit(const std::string& text) {
    if (common.out_path.empty()) {
      out << text;
      return;
    }
    write_file(common.out_path, text);
  }

  void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::io, "cannot write " + path);
    f << text;
    f.close();
    if (!f) throw Error(ErrorCode::io, "failed writing " + path);
    outputs[path] = file_hash(path);
  }
};

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v(i)));
  return a;
}

Eigen::VectorXd parse_vector(const std::string& text, const std::string& what, Eigen::Index expected = -1) {
  std::vector<double> v;
  try {
    v = parse_real_list(text);
  } catch (const Error& e) {
    throw Error(ErrorCode::usage, what + ": " + e.what());
  }
  if (expected >= 0 && static_cast<Eigen::Index>(v.size()) != expected)
    throw Error(ErrorCode::usage, what + " needs " + std::to_string(expected) + " comma-separated numbers");
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Rect parse_window(const std::string& text) {
  const Eigen::VectorXd w = parse_vector(text, "--window", 4);
  return {w(0), w(1), w(2), w(3)};
}

std::pair<int, int> parse_ages(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw Error(ErrorCode::usage, "--ages expects lo:hi");
  try {
    return {std::stoi(text.substr(0, colon)), std::stoi(text.substr(colon + 1))};
  } catch (const std::exception&) {
    throw Error(ErrorCode::usage, "--ages expects lo:hi");
  }
}

using Handler = std::function<void(Context&)>;

CLI::App* subcommand(CLI::App& root, const std::string& name, const std::string& help, Common& common) {
  CLI::App* app = root.add_subcommand(name, help);
  common.seed_opt = nullptr;
  app->add_option("--workers", common.workers, "worker threads for replicate-level work")
      ->check(CLI::PositiveNumber);
  app->add_option("--out", common.out_path, "output file (default: standard output)");
  app->add_option("--manifest", common.manifest_path, "manifest path (default: <out>.manifest.json)");
  app->add_option("--config", common.config_path, "JSON file of option values; flags win");
  return app;
}

CLI::Option* seed_option(CLI::App* app, Common& common) {
  return app->add_option("--seed", common.seed, "master seed");
}

// ---------------------------------------------------------------------------

Handler add_simulate(CLI::App& root, Common& common) {
  struct Opt {
    std::string model = "ou";
    double alpha = 1.0, sigma = 1.0, friction = 1.0, t0 = 0.0, dt = 0.01;
    long steps = 100;
    int replicates = 1, max_attempts = 100;
    std::string attractor = "0,0", r0 = "0,0", v0, potential, region;
    std::vector<std::string> exclude;
  };
  auto o = std::make_shared<Opt>();
  CLI::App* app = subcommand(root, "simulate", "Euler scheme for OU, gradient or Langevin dynamics", common);
  app->add_option("--model", o->model, "ou | potential | langevin")
      ->check(CLI::IsMember({"ou", "potential", "langevin"}));
  app->add_option("--alpha", o->alpha, "OU attraction rate");
  app->add_option("--attractor", o->attractor, "OU attractor, x[,y]");
  app->add_option("--sigma", o->sigma, "diffusion coefficient");
  app->add_option("--potential", o->potential, "potential spec JSON (potential/langevin)");
  app->add_option("--friction", o->friction, "Langevin friction");
  app->add_option("--r0", o->r0, "initial position, x[,y]");
  app->add_option("--v0", o->v0, "initial Langevin velocity, vx,vy");
  app->add_option("--t0", o->t0, "start time");
  app->add_option("--dt", o->dt, "time step")->check(CLI::PositiveNumber);
  app->add_option("--steps", o->steps, "number of steps")->check(CLI::PositiveNumber);
  app->add_option("--region", o->region, "polygon CSV to stay inside");
  app->add_option("--exclude", o->exclude, "polygon CSV to stay out of (repeatable)");
  app->add_option("--max-attempts", o->max_attempts, "redraws before holding position")->check(CLI::PositiveNumber);
  app->add_option("--replicates", o->replicates, "independent paths")->check(CLI::PositiveNumber);
  seed_option(app, common);
  return [o](Context& ctx) {
    const std::uint64_t seed = ctx.seed();
    const Eigen::VectorXd r0 = parse_vector(o->r0, "--r0");
    const Eigen::VectorXd grid = uniform_grid(o->t0, o->dt, o->steps);
    std::optional<ConstraintPolicy> constraint;
    if (!o->region.empty()) {
      ConstraintPolicy c{load_region(ctx.input(o->region))};
      for (const auto& e : o->exclude) c.excluded.push_back(load_region(ctx.input(e)));
      c.max_attempts = o->max_attempts;
      constraint = std::move(c);
    } else if (!o->exclude.empty()) {
      throw Error(ErrorCode::usage, "--exclude needs --region");
    }
    std::optional<PotentialSpec> potential;
    if (o->model != "ou") {
      if (o->potential.empty()) throw Error(ErrorCode::usage, "--model " + o->model + " needs --potential");
      potential = load_potential_spec(ctx.potential_input(o->potential));
    }
    if (o->model == "langevin" && constraint) throw Error(ErrorCode::usage, "langevin runs are unconstrained");

    DriftField drift;
    if (o->model == "ou") {
      const Eigen::VectorXd a = parse_vector(o->attractor, "--attractor", r0.size());
      drift = ou_drift(OUParams{o->alpha, a, o->sigma});
    } else if (o->model == "potential") {
      drift = gradient_system_drift(*potential);
    }

    const auto reps = static_cast<std::size_t>(o->replicates);
    std::vector<std::optional<Trajectory>> paths(reps);
    std::vector<SimulationStats> stats(reps);
    parallel_for(reps, ctx.common.workers, [&](std::size_t r) {
      RngStream rng = derive_rng(seed, r);
      if (o->model == "langevin") {
        LangevinState s{r0, o->v0.empty() ? Eigen::VectorXd::Zero(r0.size()) : parse_vector(o->v0, "--v0", r0.size()),
                        o->friction};
        paths[r] = simulate_langevin(s, *potential, o->sigma, grid, rng);
      } else {
        paths[r] = simulate_sde(r0, grid, drift, o->sigma, rng, constraint, &stats[r]);
      }
    });
    std::vector<Trajectory> out;
    long rejections = 0, fallbacks = 0;
    for (std::size_t r = 0; r < reps; ++r) {
      out.push_back(*paths[r]);
      rejections += stats[r].rejections;
      fallbacks += stats[r].fallbacks;
    }
    ctx.extra["rejections"] = rejections;
    ctx.extra["fallbacks"] = fallbacks;
    std::ostringstream s;
    if (reps == 1)
      write_trajectory(s, out.front());
    else
      write_trajectory_batch(s, out);
    ctx.emit(s.str());
  };
}

Handler add_fit_potential(CLI::App& root, Common& common) {
  struct Opt {
    std::string track, potential, region;
    double shore_c = 0.0;
    bool lc_filter = false;
  };
  auto o = std::make_shared<Opt>();
  CLI::App* app = subcommand(root, "fit-potential", "least-squares fit of the polynomial-shore potential", common);
  app->add_option("--track", o->track, "trajectory CSV (t,x,y[,lc])")->required();
  app->add_option("--potential", o->potential, "spec JSON supplying the shore polygon and C");
  app->add_option("--region", o->region, "shore polygon CSV (instead of --potential)");
  app->add_option("--C", o->shore_c, "shore coefficient (with --region)");
  app->add_flag("--lc-filter", o->lc_filter, "keep only location classes 1, 2, 3");
  return [o](Context& ctx) {
    std::optional<Region> shore;
    double c = o->shore_c;
    if (!o->potential.empty()) {
      const PotentialSpec spec = load_potential_spec(ctx.potential_input(o->potential));
      if (!spec.is_polynomial_shore()) throw Error(ErrorCode::usage, "--potential must be a polynomial-shore spec");
      shore = spec.polynomial_shore().shore;
      c = spec.polynomial_shore().shore_coefficient;
    } else if (!o->region.empty()) {
      shore = load_region(ctx.input(o->region));
    } else {
      throw Error(ErrorCode::usage, "fit-potential needs --potential or --region");
    }
    const Trajectory track = load_trajectory(
        ctx.input(o->track), o->lc_filter ? std::optional<QualityFilter>(high_quality_location_classes()) : std::nullopt);
    const PotentialFit fit = fit_potential_ls(track, *shore, c);
    json j{{"beta", vector_json(fit.beta)}, {"C", c}, {"sigma", number(fit.sigma)},
           {"rss", number(fit.rss)}, {"n", fit.n}};
    ctx.emit(dump(j));
  };
}

Handler add_fit_field(CLI::App& root, Common& common) {
  struct Opt {
    std::vector<std::string> tracks;
    std::string origin = "0,0";
    double cell = 1.0, bandwidth = 1.0, min_support = kMinCellSupport;
    int nx = 10, ny = 10;
  };
  auto o = std::make_shared<Opt>();
  CLI::App* app = subcommand(root, "fit-field", "kernel estimate of the drift field on a grid", common);
  app->add_option("--track", o->tracks, "trajectory CSV (repeatable)")->required();
  app->add_option("--origin", o->origin, "grid lower-left corner x,y");
  app->add_option("--cell", o->cell, "cell side")->check(CLI::PositiveNumber);
  app->add_option("--nx", o->nx, "cells along x")->check(CLI::PositiveNumber);
  app->add_option("--ny", o->ny, "cells along y")->check(CLI::PositiveNumber);
  app->add_option("--bandwidth", o->bandwidth, "Gaussian kernel bandwidth")->check(CLI::PositiveNumber);
  app->add_option("--min-support", o->min_support, "kernel weight below which a cell is empty");
  return [o](Context& ctx) {
    std::vector<Trajectory> trajs;
    for (const auto& p : o->tracks) trajs.push_back(load_trajectory(ctx.input(p)));
    const Eigen::VectorXd origin = parse_vector(o->origin, "--origin", 2);
    GridSpec grid{Point(origin(0), origin(1)), o->cell, o->nx, o->ny};
    const DriftFieldEstimate f = estimate_drift_field(trajs, grid, o->bandwidth, o->min_support);
    std::ostringstream s;
    s << "i,j,x,y,vx,vy,weight,supported\n";
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i) {
        const Eigen::Index k = static_cast<Eigen::Index>(j) * grid.nx + i;
        s << i << ',' << j << ',' << format_double(f.centers(0, k)) << ',' << format_double(f.centers(1, k)) << ',';
        if (f.supported(k))
          s << format_double(f.velocity(0, k)) << ',' << format_double(f.velocity(1, k));
        else
          s << ',';
        s << ',' << format_double(f.weight(k)) << ',' << (f.supported(k) ? 1 : 0) << '\n';
      }
    ctx.emit(s.str());
  };
}

Handler add_fit_lagged(CLI::App& root, Common& common) {
  struct Opt {
    std::string subject, covariate, tau = "0", bins = "0,0.5,1,1.5,2,3,5";
    double minutes_per_unit = 60.0, quantile = 0.95;
    int null_replicates = 199;
  };
  auto o = std::make_shared<Opt>();
  CLI::App* app = subcommand(root, "fit-lagged", "distance-binned lagged effect of a moving covariate", common);
  app->add_option("--subject", o->subject, "subject trajectory CSV")->required();
  app->add_option("--covariate", o->covariate, "covariate trajectory CSV")->required();
  app->add_option("--tau", o->tau, "lags in minutes, comma-separated");
  app->add_option("--minutes-per-unit", o->minutes_per_unit, "minutes per time unit of the tracks")
      ->check(CLI::PositiveNumber);
  app->add_option("--bins", o->bins, "distance bin edges, comma-separated");
  app->add_option("--null-replicates", o->null_replicates, "circular-shift refits")->check(CLI::PositiveNumber);
  app->add_option("--quantile", o->quantile, "null quantile")->check(CLI::Range(0.0, 1.0));
  seed_option(app, common);
  return [o](Context& ctx) {
    const std::uint64_t seed = ctx.seed();
    const Trajectory subject = load_trajectory(ctx.input(o->subject));
    const Trajectory covariate = load_trajectory(ctx.input(o->covariate));
    const Eigen::VectorXd taus = parse_vector(o->tau, "--tau");
    const Eigen::VectorXd edges = parse_vector(o->bins, "--bins");
    LaggedEffectOptions opt{o->null_replicates, o->quantile, ctx.common.workers};
    std::ostringstream s;
    s << "tau,bin_lo,bin_hi,count,nu_abs,null95,empty\n";
    for (Eigen::Index k = 0; k < taus.size(); ++k) {
      RngStream rng = derive_rng(seed, static_cast<std::uint64_t>(k));
      const LaggedEffectCurve c =
          fit_lagged_effect(subject, covariate, taus(k) / o->minutes_per_unit, edges, rng, opt);
      for (Eigen::Index b = 0; b < c.bins(); ++b) {
        s << format_double(taus(k)) << ',' << format_double(edges(b)) << ',' << format_double(edges(b + 1)) << ','
          << c.counts(b) << ',';
        if (!c.empty(b)) s << format_double(c.nu_norm(b));
        s << ',';
        if (std::isfinite(c.null_level(b))) s << format_double(c.null_level(b));
        s << ',' << (c.empty(b) ? 1 : 0) << '\n';
      }
    }
    ctx.emit(s.str());
  };
}

json model_json(const BlowflyModel& m) {
  return json{{"alpha", vector_json(m.alpha)}, {"beta", m.beta}, {"gamma", m.gamma}, {"sigma_f", number(m.sigma_f)}};
}

json blowfly_fit_json(const BlowflyFit& f) {
  json j = model_json(f.model);
  j["age_classes"] = f.model.age_classes();
  j["objective"] = number(f.objective);
  j["terms"] = f.terms;
  j["start_index"] = f.start_index;
  j["iterations"] = f.iterations;
  j["converged"] = f.converged;
  j["clamp_events"] = f.clamp_events;
  return j;
}

BlowflyModel model_from_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path);
  json j;
  try {
    in >> j;
    BlowflyModel m;
    const auto alpha = j.at("alpha").get<std::vector<double>>();
    m.alpha = Eigen::Map<const Eigen::VectorXd>(alpha.data(), static_cast<Eigen::Index>(alpha.size()));
    m.beta = j.at("beta").get<double>();
    m.gamma = j.at("gamma").get<double>();
    m.sigma_f = j.value("sigma_f", 0.0);
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, path + ": " + e.what());
  }
}

Handler add_fit_blowfly(CLI::App& root, Common& common) {
  struct Opt {
    std::string series;
    int age_classes = kDefaultAgeClasses;
    double density_bound = 0.0;
    int max_iterations = 400;
  };
  auto o = std::make_shared<Opt>();
  CLI::App* app = subcommand(root, "fit-blowfly", "weighted least-squares fit of the age-structured model", common);
  app->add_option("--series", o->series, "CSV t,N,E")->required();
  app->add_option("--age-classes", o->age_classes, "number of adult age classes")->check(CLI::Range(2, 1000));
  app->add_option("--density-bound", o->density_bound, "upper bound for beta and gamma (default 1/max N)");
  app->add_option("--max-iterations", o->max_iterations, "iterations per start")->check(CLI::PositiveNumber);
  return [o](Context& ctx) {
    const BlowflySeries series = load_blowfly_series(ctx.input(o->series));
    BlowflyFitOptions opt{o->age_classes, o->density_bound, o->max_iterations};
    ctx.emit(dump(blowfly_fit_json(fit_blowfly(series, opt))));
  };
}

Handler add_synth_blowfly(CLI::App& root, Common& common) {
  struct Opt {
    std::string series, fit, mode = "binomial";
    int replicates = 100;
  };
  auto o = std::make_shared<Opt>();
  CLI::App* app = subcommand(root, "synth-blowfly", "synthetic death series driven by observed E and N", common);
  app->add_option("--series", o->series, "CSV t,N,E")->required();
  app->add_option("--fit", o->fit, "model JSON as written by fit-blowfly")->required();
  app->add_option("--mode", o->mode, "binomial | normal")->check(CLI::IsMember({"binomial", "normal"}));
  app->add_option("--replicates", o->replicates, "number of synthetic series")->check(CLI::PositiveNumber);
  seed_option(app, common);
  return [o](Context& ctx) {
    const std::uint64_t seed = ctx.seed();
    const BlowflySeries series = load_blowfly_series(ctx.input(o->series));
    const BlowflyModel model = model_from_json(ctx.input(o->fit));
    const DeathNoise mode = o->mode == "normal" ? DeathNoise::normal : DeathNoise::binomial;
    const auto reps = static_cast<std::size_t>(o->replicates);
    std::vector<SynthesizedDeaths> out(reps);
    parallel_for(reps, ctx.common.workers, [&](std::size_t r) {
      RngStream rng = derive_rng(seed, r);
      out[r] = synthesize_deaths(model, series.emerging, series.adults, mode, rng);
    });
    long clamped = 0;
    std::ostringstream s;
    s << "rep,t,D\n";
    for (std::size_t r = 0; r < reps; ++r) {
      clamped += out[r].clamped;
      for (Eigen::Index t = 1; t < series.size(); ++t) s << r << ',' << t << ',' << format_double(out[r].deaths(t)) << '\n';
    }
    ctx.extra["clamped"] = clamped;
    ctx.emit(s.str());
  };
}

// Actual series for compare-synth: a named column, or D derived from N and E.
Eigen::VectorXd actual_series(const std::string& path, const std::string& column, std::vector<double>& times) {
  const CsvTable table = read_csv_file(path);
  const int ct = table.column("t");
  const int cv = table.column(column);
  if (ct < 0) throw Error(ErrorCode::parse, path + ": missing t column");
  if (cv < 0) {
    if (column != "D" || table.column("N") < 0 || table.column("E") < 0)
      throw Error(ErrorCode::parse, path + ": missing column " + column);
    const BlowflySeries s = load_blowfly_series(path);
    const Eigen::VectorXd d = s.deaths();
    for (const auto& row : table.rows) times.push_back(parse_real(row.fields[static_cast<std::size_t>(ct)], path, row.line));
    times.erase(times.begin());
    return d.tail(d.size() - 1);
  }
  std::vector<double> v;
  for (const auto& row : table.rows) {
    times.push_back(parse_real(row.fields.at(static_cast<std::size_t>(ct)), path, row.line));
    v.push_back(parse_real(row.fields.at(static_cast<std::size_t>(cv)), path, row.line));
  }
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Handler add_compare_synth(CLI::App& root, Common& common) {
  struct Opt {
    std::string actual, synthetic, column = "D";
  };
  auto o = std::make_shared<Opt>();
  CLI::App* app = subcommand(root, "compare-synth", "compare an actual series with a synthetic ensemble", common);
  app->add_option("--actual", o->actual, "CSV with t and the value column (or t,N,E)")->required();
  app->add_option("--synthetic", o->synthetic, "long CSV rep,t,<column>")->required();
  app->add_option("--column", o->column, "value column name");
  return [o](Context& ctx) {
    std::vector<double> times;
    const Eigen::VectorXd actual = actual_series(ctx.input(o->actual), o->column, times);
    const CsvTable syn = read_csv_file(ctx.input(o->synthetic));
    const int cr = syn.column("rep"), ct = syn.column("t"), cv = syn.column(o->column);
    if (cr < 0 || ct < 0 || cv < 0) throw Error(ErrorCode::parse, o->synthetic + ": header must have rep,t," + o->column);
    std::map<long, std::map<double, double>> reps;
    for (const auto& row : syn.rows) {
      const auto rep = static_cast<long>(parse_real(row.fields.at(static_cast<std::size_t>(cr)), o->synthetic, row.line));
      reps[rep][parse_real(row.fields.at(static_cast<std::size_t>(ct)), o->synthetic, row.line)] =
          parse_real(row.fields.at(static_cast<std::size_t>(cv)), o->synthetic, row.line);
    }
    std::vector<Eigen::VectorXd> ensemble;
    for (const auto& [rep, series] : reps) {
      Eigen::VectorXd v(actual.size());
      for (std::size_t i = 0; i < times.size(); ++i) {
        const auto it = series.find(times[i]);
        if (it == series.end())
          throw Error(ErrorCode::data, "synthetic replicate " + std::to_string(rep) + " lacks t = " + format_double(times[i]));
        v(static_cast<Eigen::Index>(i)) = it->second;
      }
      ensemble.push_back(std::move(v));
    }
    const SyntheticComparison c = compare_synthetic(actual, ensemble);
    json j{{"rms", vector_json(c.rms)},
           {"correlation", vector_json(c.correlation)},
           {"variance_ratio", vector_json(c.variance_ratio)},
           {"variance_rank", c.variance_rank},
           {"ensemble_size", c.ensemble_size}};
    ctx.emit(dump(j));
  };
}

json sardine_json(const SardineFit& f) {
  return json{{"ages", {f.age_lo, f.age_hi}}, {"p_star", vector_json(f.p_star)}, {"r", vector_json(f.r)},
              {"seasons", f.seasons}, {"rss", f.rss}, {"observations", f.observations}};
}

Handler add_fit_sardine(CLI::App& root, Common& common) {
  struct Opt {
    std::string table, ages = "3:6";
  };
  auto o = std::make_shared<Opt>();
  CLI::App* app = subcommand(root, "fit-sardine", "separable survival fit on log catch ratios", common);
  app->add_option("--table", o->table, "catch matrix CSV, ages by seasons")->required();
  app->add_option("--ages", o->ages, "age window lo:hi");
  return [o](Context& ctx) {
    const auto [lo, hi] = parse_ages(o->ages);
    const SardineTable table = load_sardine_table(ctx.input(o->table));
    ctx.emit(dump(sardine_json(fit_sardine(table, lo, hi))));
  };
}

Handler add_predict_sardine(CLI::App& root, Common& common) {
  struct Opt {
    std::string table, ages = "3:6";
  };
  auto o = std::make_shared<Opt>();
  CLI::App* app = subcommand(root, "predict-sardine", "one-step-ahead expected catches", common);
  app->add_option("--table", o->table, "catch matrix CSV, ages by seasons")->required();
  app->add_option("--ages", o->ages, "age window lo:hi");
  return [o](Context& ctx) {
    const auto [lo, hi] = parse_ages(o->ages);
    const SardineTable table = load_sardine_table(ctx.input(o->table));
    std::ostringstream s;
    write_labelled_matrix(s, predict_sardine(table, fit_sardine(table, lo, hi)).to_matrix());
    ctx.emit(s.str());
  };
}

Handler add_fit_rain(CLI::App& root, Common& common) {
  struct Opt {
    std::string curve, emit_fit;
    double n_seeded = 53.0, n_unseeded = 38.0;
  };
  auto o = std::make_shared<Opt>();
  CLI::App* app = subcommand(root, "fit-rain", "travel-time regression fit to smoothed rain curves", common);
  app->add_option("--curve", o->curve, "CSV t,y_seeded,y_unseeded")->required();
  app->add_option("--emit-fit", o->emit_fit, "write t,y_seeded,fitted,synthetic to this CSV");
  app->add_option("--n-seeded", o->n_seeded, "seeded days (weight)")->check(CLI::PositiveNumber);
  app->add_option("--n-unseeded", o->n_unseeded, "unseeded days (weight)")->check(CLI::PositiveNumber);
  return [o](Context& ctx) {
    RainCurve curve = load_rain_curve(ctx.input(o->curve));
    curve.n_seeded = o->n_seeded;
    curve.n_unseeded = o->n_unseeded;
    const RainFit f = fit_rain(curve);
    const auto [lo, hi] = travel_time_ci(f);
    json j{{"mu", f.mu},
           {"s", f.params.law.shape},
           {"alpha", f.params.alpha},
           {"beta", f.params.beta},
           {"theta", f.params.law.theta},
           {"se_mu", number(f.se(0))},
           {"se_s", number(f.se(1))},
           {"se_alpha", number(f.se(2))},
           {"se_beta", number(f.se(3))},
           {"ci", {number(lo), number(hi)}},
           {"objective", f.objective},
           {"shape_at_boundary", f.shape_at_boundary}};
    if (!o->emit_fit.empty()) {
      const Eigen::VectorXd fitted = rain_regression(curve.t, f.params, true);
      const Eigen::VectorXd synth = synthesize_rain(f.params, curve.t, curve.unseeded);
      std::ostringstream s;
      s << "t,y_seeded,fitted,synthetic\n";
      for (Eigen::Index i = 0; i < curve.t.size(); ++i)
        s << format_double(curve.t(i)) << ',' << format_double(curve.seeded(i)) << ',' << format_double(fitted(i))
          << ',' << format_double(synth(i)) << '\n';
      ctx.write_file(o->emit_fit, s.str());
    }
    ctx.emit(dump(j));
  };
}

Handler add_cluster_plate(CLI::App& root, Common& common) {
  struct Opt {
    double lambda = 0.0, m = 0.0, rho = 0.0, lambda2 = 0.0, m2 = 0.0, rho2 = 0.0, cap = 1e7;
    bool fixed = false, two_stage = false;
    std::string window = "0,0,1,1";
  };
  auto o = std::make_shared<Opt>();
  CLI::App* app = subcommand(root, "cluster-plate", "simulate a Neyman-Scott synthetic plate", common);
  app->add_option("--lambda", o->lambda, "parent intensity per unit area")->required();
  app->add_option("--m", o->m, "mean offspring per parent")->required();
  app->add_option("--rho", o->rho, "Gaussian displacement scale")->required();
  app->add_flag("--fixed-offspring", o->fixed, "exactly m offspring per parent");
  app->add_flag("--two-stage", o->two_stage, "cluster the cluster centres");
  app->add_option("--lambda2", o->lambda2, "super-centre intensity");
  app->add_option("--m2", o->m2, "mean centres per super-centre");
  app->add_option("--rho2", o->rho2, "centre displacement scale");
  app->add_option("--window", o->window, "x0,y0,x1,y1");
  app->add_option("--cap", o->cap, "largest allowed expected point count");
  seed_option(app, common);
  return [o](Context& ctx) {
    ClusterProcessParams p;
    p.lambda = o->lambda;
    p.m = o->m;
    p.rho = o->rho;
    p.fixed_offspring = o->fixed;
    p.window = parse_window(o->window);
    p.max_expected_points = o->cap;
    if (o->two_stage) p.second_stage = SecondStage{o->lambda2, o->m2, o->rho2};
    RngStream rng = derive_rng(ctx.seed(), 0);
    const Eigen::MatrixX2d pts = simulate_cluster_plate(p, rng);
    std::ostringstream s;
    s << "x,y\n";
    for (Eigen::Index i = 0; i < pts.rows(); ++i) s << format_double(pts(i, 0)) << ',' << format_double(pts(i, 1)) << '\n';
    ctx.emit(s.str());
  };
}

Handler add_clumpiness(CLI::App& root, Common& common) {
  struct Opt {
    std::string points, window = "0,0,1,1";
    double quadrat = 0.1;
  };
  auto o = std::make_shared<Opt>();
  CLI::App* app = subcommand(root, "clumpiness", "quadrat variance-to-mean index", common);
  app->add_option("--points", o->points, "CSV x,y")->required();
  app->add_option("--window", o->window, "x0,y0,x1,y1");
  app->add_option("--quadrat", o->quadrat, "quadrat side")->check(CLI::PositiveNumber);
  return [o](Context& ctx) {
    const CsvTable t = read_csv_file(ctx.input(o->points));
    const int cx = t.column("x"), cy = t.column("y");
    if (cx < 0 || cy < 0) throw Error(ErrorCode::parse, o->points + ": header must have x,y");
    Eigen::MatrixX2d pts(static_cast<Eigen::Index>(t.rows.size()), 2);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      const auto& row = t.rows[i];
      pts(static_cast<Eigen::Index>(i), 0) = parse_real(row.fields.at(static_cast<std::size_t>(cx)), o->points, row.line);
      pts(static_cast<Eigen::Index>(i), 1) = parse_real(row.fields.at(static_cast<std::size_t>(cy)), o->points, row.line);
    }
    const Rect w = parse_window(o->window);
    const Eigen::VectorXd counts = quadrat_counts(pts, w, o->quadrat);
    json j{{"index", clumpiness_index(pts, w, o->quadrat)},
           {"quadrats", counts.size()},
           {"points_counted", counts.sum()}};
    ctx.emit(dump(j));
  };
}

Handler add_diagnose_wedge(CLI::App& root, Common& common) {
  struct Opt {
    std::string x, y;
  };
  auto o = std::make_shared<Opt>();
  CLI::App* app = subcommand(root, "diagnose-wedge", "wedge data for two labelled tables", common);
  app->add_option("--x", o->x, "first table CSV")->required();
  app->add_option("--y", o->y, "second table CSV")->required();
  return [o](Context& ctx) {
    const WedgeData w = wedge_data(read_labelled_matrix(ctx.input(o->x)), read_labelled_matrix(ctx.input(o->y)));
    ctx.extra["spearman_mean_absdiff"] = number(spearman(w.mean, w.absdiff));
    std::ostringstream s;
    write_wedge_csv(s, w);
    ctx.emit(s.str());
  };
}

Handler add_potential_eval(CLI::App& root, Common& common) {
  struct Opt {
    std::string potential, points;
    std::vector<std::string> at;
  };
  auto o = std::make_shared<Opt>();
  CLI::App* app = subcommand(root, "potential-eval", "potential and gradient at query points", common);
  app->add_option("--potential", o->potential, "potential spec JSON")->required();
  app->add_option("--at", o->at, "query point x,y (repeatable)");
  app->add_option("--points", o->points, "CSV x,y of query points");
  return [o](Context& ctx) {
    const PotentialSpec spec = load_potential_spec(ctx.potential_input(o->potential));
    std::vector<Point> qs;
    for (const auto& a : o->at) {
      const Eigen::VectorXd v = parse_vector(a, "--at", 2);
      qs.emplace_back(v(0), v(1));
    }
    if (!o->points.empty()) {
      const CsvTable t = read_csv_file(ctx.input(o->points));
      const int cx = t.column("x"), cy = t.column("y");
      if (cx < 0 || cy < 0) throw Error(ErrorCode::parse, o->points + ": header must have x,y");
      for (const auto& row : t.rows)
        qs.emplace_back(parse_real(row.fields.at(static_cast<std::size_t>(cx)), o->points, row.line),
                        parse_real(row.fields.at(static_cast<std::size_t>(cy)), o->points, row.line));
    }
    if (qs.empty()) throw Error(ErrorCode::usage, "potential-eval needs --at or --points");
    std::ostringstream s;
    s << "x,y,H,gx,gy\n";
    for (const auto& q : qs) {
      const double h = eval_potential(spec, q);
      const Eigen::Vector2d g = grad_potential(spec, q);
      s << format_double(q.x()) << ',' << format_double(q.y()) << ',' << format_double(h) << ','
        << format_double(g.x()) << ',' << format_double(g.y()) << '\n';
    }
    ctx.emit(s.str());
  };
}

// ---------------------------------------------------------------------------

bool has_option(const std::vector<std::string>& args, const std::string& name) {
  for (const auto& a : args)
    if (a == name || a.rfind(name + "=", 0) == 0) return true;
  return false;
}

std::string config_scalar(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

// Appends options from a JSON config file that the command line leaves unset.
std::vector<std::string> merge_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, path + ": " + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::parse, path + ": config must be a JSON object");
  std::vector<std::string> merged;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      ++i;
      continue;
    }
    if (args[i].rfind("--config=", 0) == 0) continue;
    merged.push_back(args[i]);
  }
  for (const auto& [key, value] : j.items()) {
    const std::string name = "--" + key;
    if (has_option(merged, name)) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) merged.push_back(name);
    } else if (value.is_array()) {
      bool numeric = !value.empty();
      for (const auto& e : value) numeric = numeric && e.is_number();
      if (numeric) {
        std::string joined;
        for (const auto& e : value) joined += (joined.empty() ? "" : ",") + e.dump();
        merged.push_back(name);
        merged.push_back(joined);
      } else {
        for (const auto& e : value) {
          merged.push_back(name);
          merged.push_back(config_scalar(e));
        }
      }
    } else {
      merged.push_back(name);
      merged.push_back(config_scalar(value));
    }
  }
  return merged;
}

void write_manifest(Context& ctx) {
  std::string path = ctx.common.manifest_path;
  if (path.empty()) {
    if (ctx.common.out_path.empty()) return;
    path = ctx.common.out_path + ".manifest.json";
  }
  json j{{"version", STOCHDYN_VERSION},
         {"subcommand", ctx.subcommand},
         {"argv", ctx.argv},
         {"seed", ctx.common.seed_opt && ctx.common.seed_opt->count() ? json(ctx.common.seed) : json(nullptr)},
         {"workers", ctx.common.workers},
         {"inputs", ctx.inputs},
         {"outputs", ctx.outputs},
         {"details", ctx.extra},
         {"timestamp", ctx.clock()}};
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::io, "cannot write " + path);
  f << dump(j);
}

void report(std::ostream& err, ErrorCode code, const std::string& message, const json* best = nullptr) {
  json j{{"error", std::string(to_string(code))}, {"message", message}};
  if (best) j["best"] = *best;
  err << j.dump() << '\n';
}

int replay(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const Clock& clock) {
  CLI::App app{"re-run a recorded invocation", "stochdyn replay"};
  std::string manifest, out_override;
  bool skip_check = false;
  app.add_option("--manifest", manifest, "manifest JSON")->required();
  app.add_option("--out", out_override, "write the primary output here instead");
  app.add_flag("--no-input-check", skip_check, "do not verify input hashes");
  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    report(err, ErrorCode::usage, e.what());
    return 2;
  }
  json j;
  try {
    std::ifstream in(manifest);
    if (!in) throw Error(ErrorCode::io, "cannot open " + manifest);
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw Error(ErrorCode::parse, manifest + ": " + e.what());
    }
    if (!skip_check)
      for (const auto& [path, hash] : j.at("inputs").items())
        if (file_hash(path) != hash.get<std::string>())
          throw Error(ErrorCode::data, "input " + path + " changed since the manifest was written");
  } catch (const Error& e) {
    report(err, e.code(), e.what());
    return 1;
  } catch (const json::exception& e) {
    report(err, ErrorCode::parse, manifest + ": " + e.what());
    return 1;
  }
  auto argv = j.at("argv").get<std::vector<std::string>>();
  if (!out_override.empty()) {
    std::vector<std::string> edited;
    for (std::size_t i = 0; i < argv.size(); ++i) {
      if (argv[i] == "--out" || argv[i] == "--manifest") {
        ++i;
        continue;
      }
      if (argv[i].rfind("--out=", 0) == 0 || argv[i].rfind("--manifest=", 0) == 0) continue;
      edited.push_back(argv[i]);
    }
    edited.push_back("--out");
    edited.push_back(out_override);
    argv = std::move(edited);
  }
  return run(argv, out, err, clock);
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err, const Clock& clock) {
  std::vector<std::string> args = raw_args;
  if (args.size() >= 2 && args[0] == "potential" && args[1] == "eval") {
    args.erase(args.begin());
    args[0] = "potential-eval";
  }
  if (!args.empty() && args[0] == "replay")
    return replay(std::vector<std::string>(args.begin() + 1, args.end()), out, err, clock);

  CLI::App root{"stochastic-process modelling toolkit", "stochdyn"};
  root.set_version_flag("--version", STOCHDYN_VERSION);
  root.require_subcommand(1);
  Common common;
  std::map<std::string, std::pair<Handler, CLI::Option*>> handlers;
  auto reg = [&](Handler (*add)(CLI::App&, Common&)) {
    const std::size_t before = root.get_subcommands({}).size();
    Handler h = add(root, common);
    CLI::App* app = root.get_subcommands({})[before];
    handlers[app->get_name()] = {std::move(h), common.seed_opt};
    for (CLI::Option* opt : app->get_options())
      if (opt->check_lname("seed")) handlers[app->get_name()].second = opt;
  };
  reg(add_simulate);
  reg(add_fit_potential);
  reg(add_fit_field);
  reg(add_fit_lagged);
  reg(add_fit_blowfly);
  reg(add_synth_blowfly);
  reg(add_compare_synth);
  reg(add_fit_sardine);
  reg(add_predict_sardine);
  reg(add_fit_rain);
  reg(add_cluster_plate);
  reg(add_clumpiness);
  reg(add_diagnose_wedge);
  reg(add_potential_eval);
  root.footer("Also: replay --manifest FILE [--out FILE]; 'potential eval' is an alias of potential-eval.");

  try {
    args = merge_config(std::move(args));
  } catch (const Error& e) {
    report(err, e.code(), e.what());
    return e.code() == ErrorCode::usage ? 2 : 1;
  }

  try {
    root.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return root.exit(e, out, err);
    report(err, ErrorCode::usage, e.what());
    return 2;
  }

  CLI::App* chosen = root.get_subcommands().front();
  auto& [handler, seed_opt] = handlers.at(chosen->get_name());
  common.seed_opt = seed_opt;
  Context ctx{out, err, clock, args, chosen->get_name(), common, {}, {}, json::object()};
  try {
    handler(ctx);
    write_manifest(ctx);
    return 0;
  } catch (const BlowflyFitError& e) {
    const json best = blowfly_fit_json(e.best());
    report(err, e.code(), e.what(), &best);
    return 1;
  } catch (const Error& e) {
    report(err, e.code(), e.what());
    return e.code() == ErrorCode::usage ? 2 : 1;
  } catch (const std::exception& e) {
    report(err, ErrorCode::evaluation, e.what());
    return 1;
  }
}

}  // namespace stochdyn::cli
