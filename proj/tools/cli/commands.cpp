#include "commands.hpp"

#include <fmt/core.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include "esbmix/analytics.hpp"
#include "esbmix/numerics.hpp"
#include "esbmix/parallel.hpp"
#include "io.hpp"
#include "verify.hpp"

namespace esbmix::cli {

namespace {

namespace fs = std::filesystem;

std::uint64_t resolve_seed(const RunOptions& o, const std::optional<std::uint64_t>& config_seed) {
  return o.seed.value_or(config_seed.value_or(kDefaultSeed));
}

// Runs fn(rng_i, i) for i < count with Rng::stream(seed, i), so the results
// do not depend on how many threads share the work.
template <class R, class Fn>
std::vector<R> per_item(std::size_t count, unsigned threads, std::uint64_t seed, Fn fn) {
  auto chunks = run_chunked<std::vector<R>>(count, threads, seed, [&](Rng&, std::size_t begin, std::size_t end) {
    std::vector<R> out;
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng = Rng::stream(seed, i);
      out.push_back(fn(rng, i));
    }
    return out;
  });
  std::vector<R> out;
  for (auto& c : chunks) std::move(c.begin(), c.end(), std::back_inserter(out));
  return out;
}

void prepare_output_dir(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw std::runtime_error(fmt::format("cannot create output directory '{}': {}", out.string(), ec.message()));
}

json base_manifest(const std::string& command, const json& config, std::uint64_t seed, unsigned threads) {
  json m;
  m["command"] = command;
  m["config"] = config;
  m["seed"] = seed;
  m["threads"] = threads;
  return m;
}

void save_manifest(const fs::path& path, const json& manifest) { write_text_file(path, manifest.dump(2) + "\n"); }

// --- fit helpers -----------------------------------------------------------------------

std::vector<double> column_mean(const DataTable& t) {
  std::vector<double> mean(t.columns, 0.0);
  for (const auto& r : t.rows) {
    for (std::size_t c = 0; c < t.columns; ++c) mean[c] += r[c];
  }
  for (double& m : mean) m /= static_cast<double>(t.rows.size());
  return mean;
}

std::vector<double> axis(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

std::pair<std::vector<double>, std::vector<double>> grid_bounds(const DataTable& t, const GridSpec& g) {
  std::vector<double> lo(t.columns), hi(t.columns);
  for (std::size_t c = 0; c < t.columns; ++c) {
    double mn = t.rows[0][c], mx = t.rows[0][c];
    for (const auto& r : t.rows) {
      mn = std::min(mn, r[c]);
      mx = std::max(mx, r[c]);
    }
    const double pad = mx > mn ? 0.25 * (mx - mn) : 1.0;
    lo[c] = mn - pad;
    hi[c] = mx + pad;
  }
  auto apply = [&](const std::optional<std::vector<double>>& given, std::vector<double>& target, const char* key) {
    if (!given) return;
    if (given->size() != t.columns) {
      throw ConfigError(fmt::format("$.grid.{}: expected {} value(s) for {}-dimensional data", key, t.columns,
                                    t.columns));
    }
    target = *given;
  };
  apply(g.lower, lo, "lower");
  apply(g.upper, hi, "upper");
  for (std::size_t c = 0; c < t.columns; ++c) {
    if (!(lo[c] < hi[c])) throw ConfigError("$.grid: lower must be below upper on every axis");
  }
  return {lo, hi};
}

std::vector<std::size_t> grid_points(const DataTable& t, const GridSpec& g) {
  if (g.points.empty()) return std::vector<std::size_t>(t.columns, t.columns == 1 ? 401 : 81);
  if (g.points.size() == 1) return std::vector<std::size_t>(t.columns, g.points[0]);
  if (g.points.size() != t.columns) throw ConfigError("$.grid.points: one count per data column expected");
  return g.points;
}

struct FitContext {
  const json& config;
  const FitFileConfig& file;
  const RunOptions& options;
  const DataTable& table;
  std::string data_path;
  std::uint64_t seed;
};

template <class Kernel>
struct KernelTraits;

template <>
struct KernelTraits<NormalGammaKernel> {
  static std::vector<double> points(const DataTable& t) {
    std::vector<double> out;
    for (const auto& r : t.rows) out.push_back(r[0]);
    return out;
  }
  static NormalGammaKernel make(const KernelSpec& s, const DataTable& t) {
    NormalGammaKernel k;
    const auto mu = s.mu0.value_or(column_mean(t));
    if (mu.size() != 1) throw ConfigError("$.kernel.mu0: expected one value for univariate data");
    k.mu0 = mu[0];
    k.lambda = s.lambda;
    k.a = s.a;
    k.b = s.b;
    return k;
  }
  static std::vector<double> grid(const std::vector<double>& lo, const std::vector<double>& hi,
                                  const std::vector<std::size_t>& n) {
    return axis(lo[0], hi[0], n[0]);
  }
  static std::vector<std::string> header() { return {"y", "eap_density", "map_density"}; }
  static std::vector<std::string> cells(const double& y) { return {format_number(y)}; }
};

template <>
struct KernelTraits<NormalInvWishartKernel> {
  static std::vector<Eigen::Vector2d> points(const DataTable& t) {
    std::vector<Eigen::Vector2d> out;
    for (const auto& r : t.rows) out.emplace_back(r[0], r[1]);
    return out;
  }
  static NormalInvWishartKernel make(const KernelSpec& s, const DataTable& t) {
    NormalInvWishartKernel k;
    const auto mu = s.mu0.value_or(column_mean(t));
    if (mu.size() != 2) throw ConfigError("$.kernel.mu0: expected two values for bivariate data");
    k.mu0 = Eigen::Vector2d(mu[0], mu[1]);
    k.lambda = s.lambda;
    k.psi << s.psi[0], s.psi[1], s.psi[2], s.psi[3];
    k.nu = s.nu;
    return k;
  }
  static std::vector<Eigen::Vector2d> grid(const std::vector<double>& lo, const std::vector<double>& hi,
                                           const std::vector<std::size_t>& n) {
    const auto xs = axis(lo[0], hi[0], n[0]);
    const auto ys = axis(lo[1], hi[1], n[1]);
    std::vector<Eigen::Vector2d> out;
    for (double y : ys) {
      for (double x : xs) out.emplace_back(x, y);
    }
    return out;
  }
  static std::vector<std::string> header() { return {"y1", "y2", "eap_density", "map_density"}; }
  static std::vector<std::string> cells(const Eigen::Vector2d& y) {
    return {format_number(y(0)), format_number(y(1))};
  }
};

template <class Kernel>
int run_fit(const FitContext& ctx) {
  using Traits = KernelTraits<Kernel>;
  const auto started = std::chrono::steady_clock::now();
  const auto data = Traits::points(ctx.table);
  const Kernel kernel = Traits::make(ctx.file.kernel, ctx.table);
  try {
    kernel.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("$.kernel: {}", e.what()));
  }
  const auto [lo, hi] = grid_bounds(ctx.table, ctx.file.grid);
  const auto grid = Traits::grid(lo, hi, grid_points(ctx.table, ctx.file.grid));

  FitConfig config;
  config.prior = ctx.file.prior.prior;
  config.schedule = ctx.file.schedule;
  config.seed = ctx.seed;
  config.chains = ctx.file.chains;
  config.threads = ctx.options.threads;
  config.min_sticks = ctx.file.min_sticks;
  config.check_invariants = ctx.file.check_invariants;
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  const bool random_rho = std::holds_alternative<RandomRho>(config.prior);
  const bool multi_chain = config.chains > 1;
  prepare_output_dir(ctx.options.out);

  std::vector<std::string> trace_header{"sweep", "k_n", "rho", "log_score"};
  if (multi_chain) trace_header.insert(trace_header.begin(), "chain");
  CsvWriter trace(trace_header);
  auto hook = [&](const TraceRecord& r) {
    std::vector<std::string> cells{std::to_string(r.sweep + 1), std::to_string(r.k_n),
                                   r.rho ? format_number(*r.rho) : "NA", format_number(r.log_score)};
    if (multi_chain) cells.insert(cells.begin(), std::to_string(r.chain + 1));
    trace.row(cells);
  };
  spdlog::info("fit: {} observations, prior {}, kernel {}, {} sweeps x {} chain(s)", data.size(),
               describe(config.prior), kernel.describe(), config.schedule.iterations, config.chains);
  const auto result = run_sampler<Kernel>(data, kernel, config, hook);
  const std::span<const GibbsState<Kernel>> samples(result.samples);

  const auto eap = eap_density<Kernel>(samples, kernel, grid);
  const std::size_t map_index = map_select<Kernel>(samples);
  const auto& map_state = samples[map_index];
  const auto map = sample_density<Kernel>(map_state, kernel, grid);
  CsvWriter density(Traits::header());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    auto cells = Traits::cells(grid[g]);
    cells.push_back(format_number(eap[g]));
    cells.push_back(format_number(map[g]));
    density.row(cells);
  }

  const auto kn = posterior_kn<Kernel>(samples);
  CsvWriter kn_csv({"k", "probability"});
  for (const auto& [k, p] : kn.pmf) kn_csv.row({std::to_string(k), format_number(p)});

  const auto labels = cluster_assign<Kernel>(map_state, data, kernel);
  CsvWriter clusters({"row", "label"});
  for (std::size_t k = 0; k < labels.size(); ++k) clusters.row({std::to_string(k + 1), std::to_string(labels[k])});

  std::size_t violations = 0;
  for (const auto& s : samples) violations += check_state(s, data.size()).empty() ? 0 : 1;

  const fs::path& out = ctx.options.out;
  density.save(out / "density.csv");
  kn_csv.save(out / "kn_posterior.csv");
  clusters.save(out / "clusters.csv");
  trace.save(out / "trace.csv");
  json outputs = json::array({"density.csv", "kn_posterior.csv", "clusters.csv", "trace.csv"});

  if (random_rho) {
    const auto& rr = std::get<RandomRho>(config.prior);
    const std::size_t bins = ctx.file.rho_bins;
    std::vector<std::size_t> counts(bins, 0);
    for (const auto& s : samples) {
      const double pos = (*s.rho - rr.lower) / (rr.upper - rr.lower) * static_cast<double>(bins);
      counts[std::min(bins - 1, static_cast<std::size_t>(std::max(0.0, pos)))] += 1;
    }
    CsvWriter hist({"bin_lower", "bin_upper", "count", "density"});
    const double width = (rr.upper - rr.lower) / static_cast<double>(bins);
    for (std::size_t b = 0; b < bins; ++b) {
      const double density_value =
          static_cast<double>(counts[b]) / (static_cast<double>(samples.size()) * width);
      hist.row({format_number(rr.lower + width * static_cast<double>(b)),
                format_number(rr.lower + width * static_cast<double>(b + 1)), std::to_string(counts[b]),
                format_number(density_value)});
    }
    hist.save(out / "rho_histogram.csv");
    outputs.push_back("rho_histogram.csv");
  }

  json manifest = base_manifest("fit", ctx.config, ctx.seed, ctx.options.threads);
  manifest["data"] = {{"path", ctx.data_path}, {"rows", data.size()}, {"dimension", ctx.table.columns}};
  manifest["prior"] = describe(config.prior);
  manifest["kernel"] = kernel.describe();
  manifest["chains"] = config.chains;
  manifest["schedule"] = {{"iterations", config.schedule.iterations},
                          {"burn_in", config.schedule.burn_in},
                          {"thin", config.schedule.thin},
                          {"retained_per_chain", config.schedule.retained()}};
  manifest["map_sample_index"] = map_index;
  manifest["diagnostics"] = {{"sweeps", result.diagnostics.sweeps},
                             {"infeasible_length_updates", result.diagnostics.infeasible_length_updates},
                             {"stalled_tied_value_moves", result.diagnostics.stalled_cluster_moves}};
  manifest["invariant_checks"] = {{"per_sweep_checks", config.check_invariants},
                                  {"retained_samples_checked", samples.size()},
                                  {"violations", violations},
                                  {"passed", violations == 0}};
  manifest["runtime_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  outputs.push_back("manifest.json");
  manifest["outputs"] = outputs;
  save_manifest(out / "manifest.json", manifest);
  spdlog::info("fit: wrote {} files to {}", outputs.size(), out.string());
  return violations == 0 ? 0 : 1;
}

}  // namespace

// --- prior analytics ----------------------------------------------------------------------

int cmd_prior_kn(const json& config, const RunOptions& o) {
  const auto cfg = parse_prior_kn(config);
  const auto seed = resolve_seed(o, cfg.seed);
  std::vector<LengthProcessSpec> specs;
  for (std::size_t i = 0; i < cfg.priors.size(); ++i) {
    specs.push_back(require_fixed(cfg.priors[i], fmt::format("$.priors[{}]", i)));
  }
  prepare_output_dir(o.out);
  const auto pmfs = per_item<KnSummary>(specs.size(), o.threads, seed, [&](Rng& rng, std::size_t i) {
    spdlog::info("prior-kn: {} (n={}, {} replicates)", cfg.priors[i].label, cfg.n, cfg.replicates);
    return sample_kn(specs[i], cfg.n, cfg.replicates, rng);
  });
  std::set<std::size_t> support;
  for (const auto& p : pmfs) {
    for (const auto& [k, f] : p.pmf) support.insert(k);
  }
  std::vector<std::string> header{"k"};
  for (const auto& p : cfg.priors) header.push_back(p.label);
  CsvWriter csv(header);
  for (std::size_t k : support) {
    std::vector<std::string> cells{std::to_string(k)};
    for (const auto& p : pmfs) {
      const auto it = p.pmf.find(k);
      cells.push_back(format_number(it == p.pmf.end() ? 0.0 : it->second));
    }
    csv.row(cells);
  }
  csv.save(o.out / "prior_kn.csv");
  auto manifest = base_manifest("prior-kn", config, seed, o.threads);
  manifest["outputs"] = {"prior_kn.csv"};
  save_manifest(o.out / "prior_kn_manifest.json", manifest);
  return 0;
}

int cmd_prior_ekn(const json& config, const RunOptions& o) {
  const auto cfg = parse_prior_ekn(config);
  const auto seed = resolve_seed(o, cfg.seed);
  std::vector<LengthProcessSpec> specs;
  for (std::size_t i = 0; i < cfg.priors.size(); ++i) {
    specs.push_back(require_fixed(cfg.priors[i], fmt::format("$.priors[{}]", i)));
  }
  prepare_output_dir(o.out);
  const auto curves = per_item<KnCurve>(specs.size(), o.threads, seed, [&](Rng& rng, std::size_t i) {
    spdlog::info("prior-ekn: {} (n_max={}, {} replicates)", cfg.priors[i].label, cfg.n_max, cfg.replicates);
    return expected_kn_curve(specs[i], cfg.n_max, cfg.replicates, rng);
  });
  std::vector<std::string> header{"n"};
  for (const auto& p : cfg.priors) {
    header.push_back(p.label + "_mean");
    header.push_back(p.label + "_se");
  }
  CsvWriter csv(header);
  for (std::size_t n = 1; n <= cfg.n_max; ++n) {
    std::vector<std::string> cells{std::to_string(n)};
    for (const auto& c : curves) {
      cells.push_back(format_number(c.mean[n - 1]));
      cells.push_back(format_number(c.std_error[n - 1]));
    }
    csv.row(cells);
  }
  csv.save(o.out / "prior_ekn.csv");
  auto manifest = base_manifest("prior-ekn", config, seed, o.threads);
  manifest["outputs"] = {"prior_ekn.csv"};
  save_manifest(o.out / "prior_ekn_manifest.json", manifest);
  return 0;
}

int cmd_order_prob(const json& config, const RunOptions& o) {
  const auto cfg = parse_order_prob(config);
  const auto seed = resolve_seed(o, cfg.seed);
  struct Row {
    BetaValue beta;
    double theta;
  };
  std::vector<Row> rows;
  for (const auto& b : cfg.betas) {
    for (double t : cfg.thetas) rows.push_back({b, t});
  }
  prepare_output_dir(o.out);
  struct Result {
    double closed;
    McEstimate mc;
  };
  const auto results = per_item<Result>(rows.size(), o.threads, seed, [&](Rng& rng, std::size_t i) {
    const auto& row = rows[i];
    Result r{};
    switch (row.beta.kind) {
      case BetaValue::Kind::finite:
        r.closed = ordering_probability_dsb(row.beta.value, row.theta);
        r.mc = ordering_probability_mc(LengthProcessSpec::dsb(row.beta.value, row.theta), cfg.j, cfg.mc_draws, rng);
        break;
      case BetaValue::Kind::geometric:
        r.closed = ordering_probability_general(EppfModel::identical(), 1.0, row.theta, 0, rng);
        r.mc = ordering_probability_mc(LengthProcessSpec::shared_beta(1.0, row.theta), cfg.j, cfg.mc_draws, rng);
        break;
      case BetaValue::Kind::dirichlet:
        r.closed = ordering_probability_general(EppfModel::iid(), 1.0, row.theta, 0, rng);
        r.mc = ordering_probability_mc(LengthProcessSpec::iid_beta(1.0, row.theta), cfg.j, cfg.mc_draws, rng);
        break;
    }
    return r;
  });
  CsvWriter csv({"beta", "theta", "closed_form", "mc_estimate", "mc_stderr"});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& b = rows[i].beta;
    const std::string beta_cell = b.kind == BetaValue::Kind::finite    ? format_number(b.value)
                                  : b.kind == BetaValue::Kind::geometric ? "0"
                                                                         : "inf";
    csv.row({beta_cell, format_number(rows[i].theta), format_number(results[i].closed),
             format_number(results[i].mc.value), format_number(results[i].mc.std_error)});
  }
  csv.save(o.out / "order_prob.csv");
  auto manifest = base_manifest("order-prob", config, seed, o.threads);
  manifest["outputs"] = {"order_prob.csv"};
  save_manifest(o.out / "order_prob_manifest.json", manifest);
  return 0;
}

int cmd_alloc_prob(const json& config, const RunOptions& o) {
  const auto cfg = parse_alloc_prob(config);
  const auto seed = resolve_seed(o, cfg.seed);
  const auto spec = require_fixed(cfg.prior, "$.prior");
  std::vector<AllocationVector> ds;
  for (const auto& d : cfg.d) ds.emplace_back(d);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds[i].k() > cfg.max_k && !o.mc_fallback) {
      throw ConfigError(fmt::format(
          "$.d[{}]: max d = {} exceeds the exact-enumeration cap {} (Bell({}) partitions); "
          "raise max_k or pass --mc-fallback",
          i, ds[i].k(), cfg.max_k, ds[i].k()));
    }
  }
  prepare_output_dir(o.out);
  const EnumerationLimit limit{cfg.max_k, true};
  struct Result {
    double exact;
    McEstimate mc;
  };
  const auto results = per_item<Result>(ds.size(), o.threads, seed, [&](Rng& rng, std::size_t i) {
    Result r{};
    r.exact = ds[i].k() <= cfg.max_k
                  ? allocation_probability(ds[i], spec.tie_model(), spec.base_a(), spec.base_b(), limit)
                  : std::numeric_limits<double>::quiet_NaN();
    r.mc = allocation_probability_mc(ds[i], spec, cfg.mc_replicates, rng);
    return r;
  });
  CsvWriter csv({"d", "exact_probability", "mc_estimate", "mc_stderr"});
  for (std::size_t i = 0; i < ds.size(); ++i) {
    std::string d_cell;
    for (std::size_t x : ds[i].d()) d_cell += (d_cell.empty() ? "" : " ") + std::to_string(x);
    csv.row({d_cell, format_number(results[i].exact), format_number(results[i].mc.value),
             format_number(results[i].mc.std_error)});
  }
  csv.save(o.out / "alloc_prob.csv");
  auto manifest = base_manifest("alloc-prob", config, seed, o.threads);
  manifest["prior"] = spec.describe();
  manifest["outputs"] = {"alloc_prob.csv"};
  save_manifest(o.out / "alloc_prob_manifest.json", manifest);
  return 0;
}

// --- fit ---------------------------------------------------------------------------------

int cmd_fit(const json& config, const RunOptions& o) {
  const auto file = parse_fit(config);
  const auto data_path = o.data ? o.data : file.data;
  if (!data_path) throw ConfigError("fit: no data file (pass --data or set $.data)");
  const bool header = o.header.value_or(file.header.value_or(false));
  const auto table = read_data_csv(*data_path, header);

  auto type = file.kernel.type;
  if (type == KernelSpec::Type::automatic) {
    type = table.columns == 1 ? KernelSpec::Type::normal_gamma : KernelSpec::Type::normal_inv_wishart;
  }
  const std::size_t expected = type == KernelSpec::Type::normal_gamma ? 1 : 2;
  if (table.columns != expected) {
    throw DataError(fmt::format("{}: {} column(s) found but the {} kernel needs {}", *data_path, table.columns,
                                type == KernelSpec::Type::normal_gamma ? "normal_gamma" : "normal_inv_wishart",
                                expected));
  }
  const FitContext ctx{config, file, o, table, *data_path, resolve_seed(o, file.seed)};
  if (type == KernelSpec::Type::normal_gamma) return run_fit<NormalGammaKernel>(ctx);
  return run_fit<NormalInvWishartKernel>(ctx);
}

// --- verify ------------------------------------------------------------------------------

int cmd_verify(const json& config, const RunOptions& o) {
  std::optional<std::uint64_t> config_seed;
  if (!config.is_null()) {
    ObjectReader r(config, "$");
    if (r.has("seed")) config_seed = r.unsigned_integer("seed");
    r.finish();
  }
  const auto seed = resolve_seed(o, config_seed);
  VerifyOptions vo;
  vo.seed = seed;
  vo.threads = o.threads;
  if (o.inject_fault) {
    if (*o.inject_fault != "ordering_sign") {
      throw ConfigError(fmt::format("--inject-fault: unknown fault \"{}\" (known: ordering_sign)", *o.inject_fault));
    }
    vo.fault = Fault::ordering_sign;
  }
  prepare_output_dir(o.out);
  const auto checks = run_verification_suite(vo);
  bool all = true;
  json report;
  report["seed"] = seed;
  report["threads"] = o.threads;
  report["fault"] = o.inject_fault ? json(*o.inject_fault) : json(nullptr);
  report["checks"] = json::array();
  for (const auto& c : checks) {
    all = all && c.passed;
    report["checks"].push_back({{"name", c.name},
                                {"passed", c.passed},
                                {"statistic", c.statistic},
                                {"threshold", c.threshold},
                                {"detail", c.detail}});
    spdlog::log(c.passed ? spdlog::level::info : spdlog::level::err, "verify: {} {} ({})",
                c.passed ? "PASS" : "FAIL", c.name, c.detail);
  }
  report["passed"] = all;
  write_text_file(o.out / "verify_report.json", report.dump(2) + "\n");
  return all ? 0 : 1;
}

}  // namespace esbmix::cli
