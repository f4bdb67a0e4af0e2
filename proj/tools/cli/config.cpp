#include "config.hpp"

#include <fmt/core.h>

#include <cmath>
#include <fstream>

namespace esbmix::cli {

namespace {

std::string label_number(double x) { return fmt::format("{}", x); }

// Integers parsed from text are stored unsigned, integers built in code signed.
bool is_count(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

void require_positive(double x, const std::string& path) {
  if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError(fmt::format("{}: must be finite and > 0 (got {})", path, x));
}

std::size_t positive_size(ObjectReader& r, const std::string& key, std::size_t fallback) {
  const auto v = r.unsigned_integer(key, fallback);
  if (v < 1) throw ConfigError(fmt::format("{}: must be >= 1", r.child_path(key)));
  return static_cast<std::size_t>(v);
}

std::optional<std::uint64_t> optional_seed(ObjectReader& r) {
  if (!r.has("seed")) return std::nullopt;
  return r.unsigned_integer("seed");
}

std::vector<double> number_list(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(fmt::format("{}: expected an array of numbers", path));
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(fmt::format("{}[{}]: expected a number", path, i));
    out.push_back(j[i].get<double>());
  }
  return out;
}

// Wraps library validation errors so the message carries the config path.
template <class Fn>
auto checked(const std::string& path, Fn fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(fmt::format("{}: {}", path, e.what()));
  }
}

}  // namespace

// --- ObjectReader ----------------------------------------------------------------------

ObjectReader::ObjectReader(const json& object, std::string path) : object_(object), path_(std::move(path)) {
  if (!object_.is_object()) throw ConfigError(fmt::format("{}: expected a JSON object", path_));
}

bool ObjectReader::has(const std::string& key) const { return object_.contains(key); }

const json& ObjectReader::raw(const std::string& key) {
  if (!object_.contains(key)) throw ConfigError(fmt::format("{}: missing required key", child_path(key)));
  used_.insert(key);
  return object_.at(key);
}

double ObjectReader::number(const std::string& key) {
  const json& v = raw(key);
  if (!v.is_number()) throw ConfigError(fmt::format("{}: expected a number", child_path(key)));
  return v.get<double>();
}

double ObjectReader::number(const std::string& key, double fallback) {
  return has(key) ? number(key) : fallback;
}

std::uint64_t ObjectReader::unsigned_integer(const std::string& key) {
  const json& v = raw(key);
  if (!is_count(v)) {
    throw ConfigError(fmt::format("{}: expected a nonnegative integer", child_path(key)));
  }
  return v.get<std::uint64_t>();
}

std::uint64_t ObjectReader::unsigned_integer(const std::string& key, std::uint64_t fallback) {
  return has(key) ? unsigned_integer(key) : fallback;
}

std::string ObjectReader::string(const std::string& key) {
  const json& v = raw(key);
  if (!v.is_string()) throw ConfigError(fmt::format("{}: expected a string", child_path(key)));
  return v.get<std::string>();
}

std::string ObjectReader::string(const std::string& key, const std::string& fallback) {
  return has(key) ? string(key) : fallback;
}

bool ObjectReader::boolean(const std::string& key, bool fallback) {
  if (!has(key)) return fallback;
  const json& v = raw(key);
  if (!v.is_boolean()) throw ConfigError(fmt::format("{}: expected true or false", child_path(key)));
  return v.get<bool>();
}

void ObjectReader::finish() const {
  for (const auto& item : object_.items()) {
    if (!used_.contains(item.key())) throw ConfigError(fmt::format("{}: unknown key", child_path(item.key())));
  }
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path));
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("{}: invalid JSON: {}", path, e.what()));
  }
}

// --- priors ----------------------------------------------------------------------------

BetaValue parse_beta_value(const json& j, const std::string& path) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "geometric") return {BetaValue::Kind::geometric, 0.0};
    if (s == "dirichlet") return {BetaValue::Kind::dirichlet, INFINITY};
    throw ConfigError(fmt::format("{}: expected a number, \"geometric\" or \"dirichlet\" (got \"{}\")", path, s));
  }
  if (!j.is_number()) throw ConfigError(fmt::format("{}: expected a number", path));
  const double v = j.get<double>();
  require_positive(v, path);
  return {BetaValue::Kind::finite, v};
}

EppfModel parse_eppf(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  const auto family = r.string("family");
  EppfModel out = EppfModel::iid();
  if (family == "dirichlet") {
    const double beta = r.number("beta");
    out = checked(path, [&] { return EppfModel::dirichlet(beta); });
  } else if (family == "pitman_yor") {
    const double alpha = r.number("alpha");
    const double beta = r.number("beta");
    out = checked(path, [&] { return EppfModel::pitman_yor(alpha, beta); });
  } else if (family == "iid") {
    out = EppfModel::iid();
  } else if (family == "identical") {
    out = EppfModel::identical();
  } else {
    throw ConfigError(fmt::format("{}.family: unknown EPPF family \"{}\"", path, family));
  }
  r.finish();
  return out;
}

NamedPrior parse_prior(const json& j, const std::string& path, bool allow_random_rho) {
  ObjectReader r(j, path);
  const auto family = r.string("family");
  NamedPrior out{"", LengthProcessSpec::dsb(1.0, 1.0)};
  std::string label;
  if (family == "dsb") {
    const double theta = r.number("theta");
    double beta;
    if (r.has("beta") == r.has("rho")) throw ConfigError(fmt::format("{}: give exactly one of beta or rho", path));
    if (r.has("beta")) {
      beta = r.number("beta");
      label = fmt::format("dsb_beta{}_theta{}", label_number(beta), label_number(theta));
    } else {
      const double rho = r.number("rho");
      if (!(rho > 0.0 && rho < 1.0)) throw ConfigError(fmt::format("{}.rho: must lie in (0,1)", path));
      beta = (1.0 - rho) / rho;
      label = fmt::format("dsb_rho{}_theta{}", label_number(rho), label_number(theta));
    }
    out.prior = checked(path, [&] { return LengthProcessSpec::dsb(beta, theta); });
  } else if (family == "geometric") {
    const double theta = r.number("theta");
    out.prior = checked(path, [&] { return LengthProcessSpec::shared_beta(1.0, theta); });
    label = fmt::format("geometric_theta{}", label_number(theta));
  } else if (family == "dirichlet") {
    const double theta = r.number("theta");
    out.prior = checked(path, [&] { return LengthProcessSpec::iid_beta(1.0, theta); });
    label = fmt::format("dirichlet_theta{}", label_number(theta));
  } else if (family == "iid_beta" || family == "shared_beta") {
    const double a = r.number("a");
    const double b = r.number("b");
    out.prior = checked(path, [&] {
      return family == "iid_beta" ? LengthProcessSpec::iid_beta(a, b) : LengthProcessSpec::shared_beta(a, b);
    });
    label = fmt::format("{}_a{}_b{}", family, label_number(a), label_number(b));
  } else if (family == "pitman_yor") {
    const double alpha = r.number("alpha");
    const double beta = r.number("beta");
    const double base_a = r.number("base_a", 1.0);
    const double base_b = r.number("base_b", 1.0);
    out.prior = checked(path, [&] {
      return LengthProcessSpec::species_driven(EppfModel::pitman_yor(alpha, beta), base_a, base_b);
    });
    label = fmt::format("pitman_yor_alpha{}_beta{}", label_number(alpha), label_number(beta));
  } else if (family == "species") {
    const auto eppf = parse_eppf(r.raw("eppf"), r.child_path("eppf"));
    const double base_a = r.number("base_a");
    const double base_b = r.number("base_b");
    out.prior = checked(path, [&] { return LengthProcessSpec::species_driven(eppf, base_a, base_b); });
    label = "species";
  } else if (family == "random_rho") {
    if (!allow_random_rho) throw ConfigError(fmt::format("{}: random_rho is only available for fit", path));
    RandomRho rr{r.number("theta"), r.number("rho_lower", 0.0), r.number("rho_upper", 1.0)};
    checked(path, [&] {
      rr.validate();
      return 0;
    });
    out.prior = rr;
    label = fmt::format("random_rho_theta{}", label_number(rr.theta));
  } else {
    throw ConfigError(fmt::format("{}.family: unknown prior family \"{}\"", path, family));
  }
  out.label = r.string("label", label);
  if (out.label.empty() || out.label.find_first_of(",\"\n\r") != std::string::npos) {
    throw ConfigError(fmt::format("{}.label: must be nonempty without commas, quotes or newlines", path));
  }
  r.finish();
  return out;
}

std::vector<NamedPrior> parse_prior_list(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(fmt::format("{}: expected a nonempty array of priors", path));
  std::vector<NamedPrior> out;
  std::set<std::string> labels;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(parse_prior(j[i], fmt::format("{}[{}]", path, i), false));
    if (!labels.insert(out.back().label).second) {
      throw ConfigError(fmt::format("{}[{}]: duplicate label \"{}\"", path, i, out.back().label));
    }
  }
  return out;
}

LengthProcessSpec require_fixed(const NamedPrior& p, const std::string& path) {
  if (const auto* spec = std::get_if<LengthProcessSpec>(&p.prior)) return *spec;
  throw ConfigError(fmt::format("{}: a fixed length process is required here", path));
}

// --- subcommand configs -------------------------------------------------------------------

PriorKnConfig parse_prior_kn(const json& j) {
  ObjectReader r(j, "$");
  PriorKnConfig out;
  out.seed = optional_seed(r);
  out.n = positive_size(r, "n", out.n);
  out.replicates = positive_size(r, "replicates", out.replicates);
  out.priors = parse_prior_list(r.raw("priors"), "$.priors");
  r.finish();
  return out;
}

PriorEknConfig parse_prior_ekn(const json& j) {
  ObjectReader r(j, "$");
  PriorEknConfig out;
  out.seed = optional_seed(r);
  out.n_max = positive_size(r, "n_max", out.n_max);
  out.replicates = positive_size(r, "replicates", out.replicates);
  out.priors = parse_prior_list(r.raw("priors"), "$.priors");
  r.finish();
  return out;
}

OrderProbConfig parse_order_prob(const json& j) {
  ObjectReader r(j, "$");
  OrderProbConfig out;
  out.seed = optional_seed(r);
  const json& betas = r.raw("betas");
  if (!betas.is_array() || betas.empty()) throw ConfigError("$.betas: expected a nonempty array");
  for (std::size_t i = 0; i < betas.size(); ++i) out.betas.push_back(parse_beta_value(betas[i], fmt::format("$.betas[{}]", i)));
  out.thetas = number_list(r.raw("thetas"), "$.thetas");
  if (out.thetas.empty()) throw ConfigError("$.thetas: expected a nonempty array");
  for (std::size_t i = 0; i < out.thetas.size(); ++i) require_positive(out.thetas[i], fmt::format("$.thetas[{}]", i));
  out.j = positive_size(r, "j", out.j);
  out.mc_draws = positive_size(r, "mc_draws", out.mc_draws);
  if (out.mc_draws < 2) throw ConfigError("$.mc_draws: must be >= 2");
  r.finish();
  return out;
}

AllocProbConfig parse_alloc_prob(const json& j) {
  ObjectReader r(j, "$");
  AllocProbConfig out;
  out.seed = optional_seed(r);
  out.prior = parse_prior(r.raw("prior"), "$.prior", false);
  const json& ds = r.raw("d");
  if (!ds.is_array() || ds.empty()) throw ConfigError("$.d: expected a nonempty array of allocation vectors");
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto path = fmt::format("$.d[{}]", i);
    if (!ds[i].is_array() || ds[i].empty()) throw ConfigError(fmt::format("{}: expected a nonempty array", path));
    std::vector<std::size_t> d;
    for (std::size_t k = 0; k < ds[i].size(); ++k) {
      if (!is_count(ds[i][k]) || ds[i][k].get<std::uint64_t>() < 1) {
        throw ConfigError(fmt::format("{}[{}]: allocations are integers >= 1", path, k));
      }
      d.push_back(ds[i][k].get<std::size_t>());
    }
    out.d.push_back(std::move(d));
  }
  out.mc_replicates = positive_size(r, "mc_replicates", out.mc_replicates);
  if (out.mc_replicates < 2) throw ConfigError("$.mc_replicates: must be >= 2");
  out.max_k = positive_size(r, "max_k", out.max_k);
  r.finish();
  return out;
}

FitFileConfig parse_fit(const json& j) {
  ObjectReader r(j, "$");
  FitFileConfig out;
  out.seed = optional_seed(r);
  out.prior = parse_prior(r.raw("prior"), "$.prior", true);

  if (r.has("kernel")) {
    ObjectReader k(r.raw("kernel"), "$.kernel");
    const auto type = k.string("type", "auto");
    if (type == "normal_gamma") {
      out.kernel.type = KernelSpec::Type::normal_gamma;
    } else if (type == "normal_inv_wishart") {
      out.kernel.type = KernelSpec::Type::normal_inv_wishart;
    } else if (type != "auto") {
      throw ConfigError(fmt::format("$.kernel.type: unknown kernel \"{}\"", type));
    }
    if (k.has("mu0")) {
      const json& m = k.raw("mu0");
      out.kernel.mu0 = m.is_number() ? std::vector<double>{m.get<double>()} : number_list(m, "$.kernel.mu0");
    }
    out.kernel.lambda = k.number("lambda", out.kernel.lambda);
    out.kernel.a = k.number("a", out.kernel.a);
    out.kernel.b = k.number("b", out.kernel.b);
    out.kernel.nu = k.number("nu", out.kernel.nu);
    if (k.has("psi")) {
      const json& p = k.raw("psi");
      if (!p.is_array() || p.size() != 2) throw ConfigError("$.kernel.psi: expected a 2x2 array");
      out.kernel.psi.clear();
      for (std::size_t i = 0; i < 2; ++i) {
        const auto row = number_list(p[i], fmt::format("$.kernel.psi[{}]", i));
        if (row.size() != 2) throw ConfigError("$.kernel.psi: expected a 2x2 array");
        out.kernel.psi.insert(out.kernel.psi.end(), row.begin(), row.end());
      }
    }
    k.finish();
  }

  if (r.has("schedule")) {
    ObjectReader s(r.raw("schedule"), "$.schedule");
    out.schedule.iterations = s.unsigned_integer("iterations", out.schedule.iterations);
    out.schedule.burn_in = s.unsigned_integer("burn_in", out.schedule.burn_in);
    out.schedule.thin = s.unsigned_integer("thin", out.schedule.thin);
    s.finish();
    checked("$.schedule", [&] {
      out.schedule.validate();
      return 0;
    });
  }
  out.chains = positive_size(r, "chains", out.chains);
  out.min_sticks = positive_size(r, "min_sticks", out.min_sticks);
  out.check_invariants = r.boolean("check_invariants", out.check_invariants);
  out.rho_bins = positive_size(r, "rho_bins", out.rho_bins);

  if (r.has("grid")) {
    ObjectReader g(r.raw("grid"), "$.grid");
    auto bound = [&](const std::string& key) -> std::optional<std::vector<double>> {
      if (!g.has(key)) return std::nullopt;
      const json& v = g.raw(key);
      return v.is_number() ? std::vector<double>{v.get<double>()} : number_list(v, g.child_path(key));
    };
    out.grid.lower = bound("lower");
    out.grid.upper = bound("upper");
    if (g.has("points")) {
      const json& p = g.raw("points");
      if (is_count(p)) {
        out.grid.points = {p.get<std::size_t>()};
      } else if (p.is_array()) {
        for (const auto& x : p) {
          if (!is_count(x)) throw ConfigError("$.grid.points: expected positive integers");
          out.grid.points.push_back(x.get<std::size_t>());
        }
      } else {
        throw ConfigError("$.grid.points: expected an integer or an array of integers");
      }
      for (std::size_t n : out.grid.points) {
        if (n < 2) throw ConfigError("$.grid.points: need at least 2 points per axis");
      }
    }
    g.finish();
  }
  if (r.has("data")) out.data = r.string("data");
  if (r.has("header")) out.header = r.boolean("header", false);
  r.finish();
  return out;
}

}  // namespace esbmix::cli
