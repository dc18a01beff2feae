#include "expertsurv/cli_io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "expertsurv/errors.hpp"

#ifndef EXPERTSURV_VERSION
#define EXPERTSURV_VERSION "0.0.0"
#endif

namespace expertsurv::io {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& path, const std::string& pointer) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(pointer, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json_file(const fs::path& path) {
  const auto text = read_file(path, "");
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", path.string() + ": invalid JSON: " + e.what());
  }
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_int(const std::string& s, int& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return !s.empty() && ec == std::errc() && ptr == s.data() + s.size();
}

std::string csv_text(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

// JSON accessors reporting pointer paths.
std::string at(const std::string& ptr, const std::string& key) { return ptr + "/" + key; }

double number(const json& obj, const std::string& ptr, const std::string& key) {
  if (!obj.contains(key)) throw ConfigError(at(ptr, key), "required number is missing");
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(at(ptr, key), "expected a number");
  return v.get<double>();
}

std::optional<double> optional_number(const json& obj, const std::string& ptr, const std::string& key) {
  if (!obj.contains(key)) return std::nullopt;
  return number(obj, ptr, key);
}

std::optional<long long> optional_integer(const json& obj, const std::string& ptr, const std::string& key) {
  if (!obj.contains(key)) return std::nullopt;
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) throw ConfigError(at(ptr, key), "expected an integer");
  return v.get<long long>();
}

std::string string_field(const json& obj, const std::string& ptr, const std::string& key) {
  if (!obj.contains(key)) throw ConfigError(at(ptr, key), "required string is missing");
  const auto& v = obj.at(key);
  if (!v.is_string()) throw ConfigError(at(ptr, key), "expected a string");
  return v.get<std::string>();
}

void require_object(const json& j, const std::string& ptr) {
  if (!j.is_object()) throw ConfigError(ptr.empty() ? "/" : ptr, "expected an object");
}

void check_keys(const json& obj, const std::string& ptr, std::initializer_list<const char*> allowed) {
  for (const auto& [k, v] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }))
      throw ConfigError(at(ptr, k), "unknown key");
  }
}

std::vector<double> number_array(const json& obj, const std::string& ptr, const std::string& key) {
  const auto& v = obj.at(key);
  if (!v.is_array()) throw ConfigError(at(ptr, key), "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw ConfigError(at(ptr, key) + "/" + std::to_string(i), "expected a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

ExpertJudgment parse_judgment(const json& e, const std::string& ptr, double timepoint, bool probability,
                              const std::string& default_id) {
  ExpertJudgment j;
  j.expert_id = e.contains("id") ? string_field(e, ptr, "id") : default_id;
  j.timepoint = timepoint;
  j.lpl = number(e, ptr, "lpl");
  j.mlv = number(e, ptr, "mlv");
  j.upl = number(e, ptr, "upl");
  if (auto c = optional_number(e, ptr, "coverage")) j.coverage = *c;
  j.probability_scale = probability;
  try {
    validate(j);
  } catch (const Error& ex) {
    throw ConfigError(ptr, ex.what());
  }
  return j;
}

PoolMethod parse_pool(const std::string& s, const std::string& ptr) {
  if (s == "linear") return PoolMethod::Linear;
  if (s == "log" || s == "logarithmic") return PoolMethod::Logarithmic;
  throw ConfigError(ptr, "pool must be \"linear\" or \"log\"");
}

std::vector<double> time_grid(const AnalysisConfig& c, const SurvivalDataset& d) {
  const double hi = c.grid_max > 0 ? c.grid_max : 2.0 * d.max_time();
  std::vector<double> g(c.grid_points);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = hi * static_cast<double>(i) / static_cast<double>(g.size() - 1);
  return g;
}

std::string priors_csv(const std::vector<PenaltyDefinition>& defs) {
  std::ostringstream os;
  os << "penalty,quantity,timepoint,series,x,density\n";
  for (std::size_t k = 0; k < defs.size(); ++k) {
    const auto& def = defs[k];
    const auto pool = def.to_penalty().opinion;
    double lo = 0.0, hi = 1.0;
    if (!def.quantity.is_probability()) {
      lo = std::numeric_limits<double>::infinity();
      hi = -lo;
      for (const auto& e : def.experts) {
        lo = std::min(lo, e.distribution.quantile(0.001));
        hi = std::max(hi, e.distribution.quantile(0.999));
      }
    }
    const int n = 200;
    auto row = [&](const std::string& series, double x, double dens) {
      os << k << ',' << quantity_key(def.quantity.kind) << ',' << format_number(def.quantity.timepoint) << ','
         << csv_text(series) << ',' << format_number(x) << ',' << format_number(dens) << '\n';
    };
    for (int i = 0; i < n; ++i) {
      const double x = lo + (hi - lo) * (i + 0.5) / n;
      row("pooled", x, pool.density(x));
      for (const auto& e : def.experts) row(e.id, x, e.distribution.pdf(x));
    }
  }
  return os.str();
}

}  // namespace

std::string software_version() { return EXPERTSURV_VERSION; }

std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// ---------------------------------------------------------------------------

SurvivalDataset parse_dataset(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) {
    return ConfigError("", source + ":" + std::to_string(line_no) + ": " + msg);
  };
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!trim(line).empty()) {
      header = split_csv(line);
      break;
    }
  }
  if (header.empty()) throw fail("missing header line 'time,status[,arm]'");
  const bool arms = header.size() == 3;
  if (header.size() < 2 || header.size() > 3 || header[0] != "time" || header[1] != "status" ||
      (arms && header[2] != "arm"))
    throw fail("header must be 'time,status' or 'time,status,arm'");

  std::vector<SurvivalRecord> recs;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size())
      throw fail("expected " + std::to_string(header.size()) + " fields, found " + std::to_string(cells.size()));
    SurvivalRecord r;
    if (!parse_double(cells[0], r.time)) throw fail("time '" + cells[0] + "' is not a number");
    if (!(r.time > 0.0) || !std::isfinite(r.time)) throw fail("time must be positive and finite");
    if (!parse_int(cells[1], r.status) || (r.status != 0 && r.status != 1)) throw fail("status must be 0 or 1");
    if (arms) {
      int a = 0;
      if (!parse_int(cells[2], a) || (a != 0 && a != 1)) throw fail("arm must be 0 or 1");
      r.arm = a;
    }
    recs.push_back(r);
  }
  return SurvivalDataset(std::move(recs));
}

SurvivalDataset load_dataset(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open dataset '" + path.string() + "'");
  return parse_dataset(in, path.string());
}

void write_dataset(const fs::path& path, const SurvivalDataset& d) {
  std::ostringstream os;
  os << (d.has_arms() ? "time,status,arm\n" : "time,status\n");
  for (const auto& r : d.records()) {
    os << format_number(r.time) << ',' << r.status;
    if (r.arm) os << ',' << *r.arm;
    os << '\n';
  }
  write_file_atomic(path, os.str());
}

// ---------------------------------------------------------------------------

ExpertPenalty PenaltyDefinition::to_penalty() const {
  std::vector<ElicitedDistribution> comps;
  for (const auto& e : experts) comps.push_back(e.distribution);
  return {quantity, PooledOpinion(std::move(comps), weights, pool, quantity.is_probability()), penalty_weight};
}

std::vector<PenaltyDefinition> parse_expert_config(const json& j, const std::vector<ElicitedFamily>& candidates) {
  if (!j.is_array()) throw ConfigError("/", "expert configuration must be an array of opinions");
  std::vector<PenaltyDefinition> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string ptr = "/" + std::to_string(i);
    const auto& e = j[i];
    require_object(e, ptr);
    check_keys(e, ptr, {"quantity", "timepoint", "arm", "pool", "weights", "weight", "experts"});
    PenaltyDefinition def;
    try {
      def.quantity.kind = parse_quantity(string_field(e, ptr, "quantity"));
    } catch (const InvalidParameter& ex) {
      throw ConfigError(at(ptr, "quantity"), ex.what());
    }
    const bool timed =
        def.quantity.kind == QuantityKind::SurvivalAt || def.quantity.kind == QuantityKind::SurvivalDifferenceAt;
    if (timed) {
      def.quantity.timepoint = number(e, ptr, "timepoint");
      if (!(def.quantity.timepoint > 0.0)) throw ConfigError(at(ptr, "timepoint"), "must be positive");
    } else if (e.contains("timepoint")) {
      def.quantity.timepoint = number(e, ptr, "timepoint");
    }
    if (auto arm = optional_integer(e, ptr, "arm")) {
      if (*arm != 0 && *arm != 1) throw ConfigError(at(ptr, "arm"), "must be 0 or 1");
      def.quantity.arm = static_cast<int>(*arm);
    }
    if (e.contains("pool")) def.pool = parse_pool(string_field(e, ptr, "pool"), at(ptr, "pool"));
    if (auto w = optional_number(e, ptr, "weight")) {
      if (!(*w >= 0.0)) throw ConfigError(at(ptr, "weight"), "must be nonnegative");
      def.penalty_weight = *w;
    }
    if (!e.contains("experts") || !e["experts"].is_array() || e["experts"].empty())
      throw ConfigError(at(ptr, "experts"), "expected a nonempty array of experts");
    const auto& experts = e["experts"];
    for (std::size_t k = 0; k < experts.size(); ++k) {
      const std::string eptr = at(ptr, "experts") + "/" + std::to_string(k);
      const auto& x = experts[k];
      require_object(x, eptr);
      ExpertEntry entry;
      entry.id = x.contains("id") ? string_field(x, eptr, "id") : "expert" + std::to_string(k + 1);
      if (x.contains("family")) {
        check_keys(x, eptr, {"id", "family", "params"});
        if (!x.contains("params")) throw ConfigError(at(eptr, "params"), "required array is missing");
        try {
          entry.distribution =
              ElicitedDistribution(parse_elicited_family(string_field(x, eptr, "family")), number_array(x, eptr, "params"));
        } catch (const ConfigError&) {
          throw;
        } catch (const Error& ex) {
          throw ConfigError(eptr, ex.what());
        }
      } else {
        check_keys(x, eptr, {"id", "lpl", "mlv", "upl", "coverage"});
        entry.judgment = parse_judgment(x, eptr, def.quantity.timepoint, def.quantity.is_probability(), entry.id);
        try {
          entry.distribution = best_fit(*entry.judgment, candidates);
        } catch (const Error& ex) {
          throw ConfigError(eptr, ex.what());
        }
      }
      def.experts.push_back(std::move(entry));
    }
    if (e.contains("weights")) {
      def.weights = number_array(e, ptr, "weights");
      if (def.weights.size() != def.experts.size())
        throw ConfigError(at(ptr, "weights"), "expected one weight per expert");
      double sum = 0.0;
      for (double w : def.weights) {
        if (!(w >= 0.0)) throw ConfigError(at(ptr, "weights"), "weights must be nonnegative");
        sum += w;
      }
      if (std::fabs(sum - 1.0) > 1e-9) {
        std::ostringstream os;
        os << "weights must sum to 1 (sum is " << sum << ")";
        throw ConfigError(at(ptr, "weights"), os.str());
      }
    }
    try {
      (void)def.to_penalty();
    } catch (const Error& ex) {
      throw ConfigError(ptr, std::string("cannot pool opinions: ") + ex.what());
    }
    out.push_back(std::move(def));
  }
  return out;
}

std::vector<PenaltyDefinition> load_expert_config(const fs::path& path) {
  return parse_expert_config(parse_json_file(path));
}

// ---------------------------------------------------------------------------

AnalysisConfig parse_analysis_config(const json& j, const fs::path& base_dir) {
  require_object(j, "");
  check_keys(j, "", {"dataset", "models", "treatment_effect", "expert_opinion", "mcmc", "seed", "output_dir",
                     "time_grid"});
  AnalysisConfig c;
  json canon;

  const auto ds = string_field(j, "", "dataset");
  c.dataset = fs::path(ds).is_absolute() ? fs::path(ds) : base_dir / ds;
  if (!fs::exists(c.dataset)) throw ConfigError("/dataset", "file not found: " + c.dataset.string());
  canon["dataset"] = ds;

  bool treatment = false;
  if (j.contains("treatment_effect")) {
    if (!j["treatment_effect"].is_boolean()) throw ConfigError("/treatment_effect", "expected true or false");
    treatment = j["treatment_effect"].get<bool>();
  }
  canon["treatment_effect"] = treatment;

  if (!j.contains("models") || !j["models"].is_array() || j["models"].empty())
    throw ConfigError("/models", "expected a nonempty array of model names");
  for (std::size_t i = 0; i < j["models"].size(); ++i) {
    const auto& m = j["models"][i];
    const std::string ptr = "/models/" + std::to_string(i);
    if (!m.is_string()) throw ConfigError(ptr, "expected a model name");
    try {
      c.models.emplace_back(ModelFamily::parse(m.get<std::string>()), KnotSet{}, treatment);
    } catch (const Error& ex) {
      throw ConfigError(ptr, ex.what());
    }
    canon["models"].push_back(c.models.back().family.key());
  }

  if (j.contains("expert_opinion")) {
    const auto& eo = j["expert_opinion"];
    if (eo.is_string()) {
      const fs::path p = fs::path(eo.get<std::string>()).is_absolute() ? fs::path(eo.get<std::string>())
                                                                       : base_dir / eo.get<std::string>();
      json inner;
      try {
        inner = parse_json_file(p);
        c.penalties = parse_expert_config(inner);
      } catch (const ConfigError& ex) {
        throw ConfigError("/expert_opinion", ex.what());
      }
      canon["expert_opinion"] = inner;
    } else {
      try {
        c.penalties = parse_expert_config(eo);
      } catch (const ConfigError& ex) {
        throw ConfigError("/expert_opinion" + (ex.pointer() == "/" ? std::string() : ex.pointer()),
                          std::string(ex.what()).substr(ex.pointer().empty() ? 0 : ex.pointer().size() + 2));
      }
      canon["expert_opinion"] = eo;
    }
  } else {
    canon["expert_opinion"] = json::array();
  }

  if (j.contains("mcmc")) {
    const auto& m = j["mcmc"];
    require_object(m, "/mcmc");
    check_keys(m, "/mcmc", {"chains", "iterations", "burnin", "thin"});
    if (auto v = optional_integer(m, "/mcmc", "chains")) c.mcmc.chains = static_cast<int>(*v);
    if (auto v = optional_integer(m, "/mcmc", "iterations")) c.mcmc.iterations = static_cast<int>(*v);
    if (auto v = optional_integer(m, "/mcmc", "burnin")) c.mcmc.burnin = static_cast<int>(*v);
    if (auto v = optional_integer(m, "/mcmc", "thin")) c.mcmc.thin = static_cast<int>(*v);
  }
  if (auto v = optional_integer(j, "", "seed")) {
    if (*v < 0) throw ConfigError("/seed", "must be nonnegative");
    c.seed = static_cast<std::uint64_t>(*v);
  }
  if (j.contains("output_dir")) {
    const auto o = string_field(j, "", "output_dir");
    c.output_dir = fs::path(o).is_absolute() ? fs::path(o) : base_dir / o;
  } else {
    c.output_dir = base_dir / "results";
  }
  if (j.contains("time_grid")) {
    const auto& g = j["time_grid"];
    require_object(g, "/time_grid");
    check_keys(g, "/time_grid", {"max", "points"});
    if (auto v = optional_number(g, "/time_grid", "max")) {
      if (!(*v > 0.0)) throw ConfigError("/time_grid/max", "must be positive");
      c.grid_max = *v;
    }
    if (auto v = optional_integer(g, "/time_grid", "points")) {
      if (*v < 2) throw ConfigError("/time_grid/points", "need at least 2 points");
      c.grid_points = static_cast<std::size_t>(*v);
    }
  }
  canon["time_grid"] = {{"max", c.grid_max}, {"points", c.grid_points}};
  c.canonical = canon;
  apply_overrides(c, {});
  return c;
}

AnalysisConfig load_analysis_config(const fs::path& path) {
  return parse_analysis_config(parse_json_file(path), path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

void apply_overrides(AnalysisConfig& c, const Overrides& o) {
  if (o.seed) c.seed = *o.seed;
  if (o.chains) c.mcmc.chains = *o.chains;
  if (o.iterations) c.mcmc.iterations = *o.iterations;
  if (o.burnin) c.mcmc.burnin = *o.burnin;
  if (o.output_dir) c.output_dir = *o.output_dir;
  if (o.ml_only) c.ml_only = true;
  c.mcmc.seed = c.seed;
  try {
    mcmc::validate(c.mcmc);
  } catch (const Error& ex) {
    throw ConfigError("/mcmc", ex.what());
  }
  c.canonical["seed"] = c.seed;
  c.canonical["ml_only"] = c.ml_only;
  c.canonical["mcmc"] = {{"chains", c.mcmc.chains},
                         {"iterations", c.mcmc.iterations},
                         {"burnin", c.mcmc.burnin},
                         {"thin", c.mcmc.thin}};
}

// ---------------------------------------------------------------------------

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw NumericError("SHA-256 computation failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("", "cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw ConfigError("", "write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

namespace {

struct ModelOutcome {
  ComparisonRow row;
  std::vector<CurveRow> curve;
  ModelStatus status;
};

ModelOutcome fit_one(const AnalysisConfig& c, const ModelSpec& spec, const SurvivalDataset& d,
                     const std::vector<ExpertPenalty>& penalties, const std::vector<double>& grid, int chain_threads) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  ModelOutcome out;
  out.row.model = spec.family.label();
  out.row.key = spec.family.key();
  out.status.model = out.row.model;
  std::vector<std::string> notes;
  try {
    try {
      const auto fit = fit_mle(d, spec);
      out.row.bic = bic(fit, d);
    } catch (const Error& ex) {
      notes.push_back(std::string("BIC unavailable: ") + ex.what());
    }
    if (c.ml_only) {
      const auto fit = fit_mle(d, spec, penalties);
      if (!fit.converged) notes.push_back("penalized fit: " + fit.message);
      for (double t : grid) {
        const double s = t > 0 ? survival(for_arm(fit.params, 0), t) : 1.0;
        out.curve.push_back({t, s, s, std::numeric_limits<double>::quiet_NaN(),
                             std::numeric_limits<double>::quiet_NaN()});
      }
      out.status.ok = std::isfinite(out.row.bic);
    } else {
      auto cfg = c.mcmc;
      cfg.threads = chain_threads;
      const auto post = mcmc_sample(d, spec, penalties, BasePrior(), cfg);
      const auto dd = dic(post, d);
      out.row.dic = dd.dic;
      out.row.pd = dd.pd;
      if (dd.excluded > 0) notes.push_back(std::to_string(dd.excluded) + " draws with non-finite deviance excluded");
      if (!penalties.empty()) out.row.dic_penalized = dic(post, d, penalties, true).dic;
      out.curve = survival_summary(post, grid);
      for (const auto& w : post.warnings) notes.push_back(w);
      out.status.ok = std::isfinite(out.row.dic);
    }
  } catch (const std::exception& ex) {
    notes.push_back(std::string("failed: ") + ex.what());
    out.status.ok = false;
  }
  std::string msg;
  for (const auto& n : notes) msg += (msg.empty() ? "" : "; ") + n;
  out.status.message = msg;
  out.row.status = out.status.ok ? (msg.empty() ? "ok" : "warning: " + msg) : "failed: " + msg;
  out.status.seconds = std::chrono::duration<double>(clock::now() - t0).count();
  return out;
}

}  // namespace

RunResult run_analysis(const AnalysisConfig& c, std::ostream* log) {
  const auto start = std::chrono::steady_clock::now();
  const auto data = load_dataset(c.dataset);
  if (log) *log << "loaded " << c.dataset.string() << ": n=" << data.size() << " events=" << data.events() << '\n';
  std::vector<ExpertPenalty> penalties;
  for (const auto& def : c.penalties) penalties.push_back(def.to_penalty());
  for (const auto& pen : penalties) {
    try {
      check_penalty(pen, c.models.front(), &data);
    } catch (const Error& ex) {
      throw ConfigError("/expert_opinion", ex.what());
    }
  }
  const auto grid = time_grid(c, data);

  const int jobs = static_cast<int>(c.models.size());
  const int workers = mcmc::thread_count(0, jobs);
  const int chain_threads = workers > 1 ? 1 : 0;
  std::vector<ModelOutcome> outcomes(c.models.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < c.models.size(); i = next++)
      outcomes[i] = fit_one(c, c.models[i], data, penalties, grid, chain_threads);
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  RunResult res{ModelComparison(c.ml_only ? RankBy::Bic : RankBy::Dic), {}, c.output_dir, 1};
  for (auto& o : outcomes) {
    if (log) *log << o.status.model << ": " << (o.status.ok ? "ok" : "failed")
                  << (o.status.message.empty() ? "" : " (" + o.status.message + ")") << '\n';
    if (o.status.ok) res.exit_code = 0;
    res.comparison.add(o.row);
    res.status.push_back(o.status);
  }

  std::ostringstream cmp;
  cmp << "model,key,dic,pd,dic_with_penalties,bic,status\n";
  for (const auto& r : res.comparison.rows())
    cmp << csv_text(r.model) << ',' << r.key << ',' << format_number(r.dic) << ',' << format_number(r.pd) << ','
        << format_number(r.dic_penalized) << ',' << format_number(r.bic) << ',' << csv_text(r.status) << '\n';

  std::ostringstream curves;
  curves << "model,time,mean,median,lower,upper\n";
  for (std::size_t i = 0; i < outcomes.size(); ++i)
    for (const auto& row : outcomes[i].curve)
      curves << c.models[i].family.key() << ',' << format_number(row.time) << ',' << format_number(row.mean) << ','
             << format_number(row.median) << ',' << format_number(row.lower) << ',' << format_number(row.upper) << '\n';

  const std::string priors = priors_csv(c.penalties);
  const fs::path dir = c.output_dir;
  write_file_atomic(dir / "comparison.csv", cmp.str());
  write_file_atomic(dir / "curves.csv", curves.str());
  write_file_atomic(dir / "priors.csv", priors);

  json manifest;
  manifest["software"] = "expertsurv";
  manifest["version"] = software_version();
  manifest["config_hash"] = sha256_hex(c.canonical.dump());
  manifest["config"] = c.canonical;
  manifest["seed"] = c.seed;
  manifest["dataset"] = {{"path", c.dataset.string()},
                         {"sha256", sha256_hex(read_file(c.dataset, "/dataset"))},
                         {"records", data.size()},
                         {"events", data.events()}};
  for (const auto& s : res.status)
    manifest["models"].push_back({{"model", s.model}, {"status", s.ok ? "ok" : "failed"}, {"message", s.message},
                                  {"seconds", s.seconds}});
  manifest["outputs"] = {{"comparison.csv", sha256_hex(cmp.str())},
                         {"curves.csv", sha256_hex(curves.str())},
                         {"priors.csv", sha256_hex(priors)}};
  manifest["exit_code"] = res.exit_code;
  manifest["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
  return res;
}

// ---------------------------------------------------------------------------

std::string elicitation_report(const fs::path& path) {
  const json j = parse_json_file(path);
  const json* list = &j;
  std::optional<std::size_t> sample_size;
  std::vector<ElicitedFamily> candidates = default_candidates();
  bool probability = true;
  if (j.is_object()) {
    check_keys(j, "", {"sample_size", "candidates", "judgments", "probability_scale"});
    if (auto n = optional_integer(j, "", "sample_size")) {
      if (*n <= 0) throw ConfigError("/sample_size", "must be positive");
      sample_size = static_cast<std::size_t>(*n);
    }
    if (j.contains("candidates")) {
      if (!j["candidates"].is_array() || j["candidates"].empty())
        throw ConfigError("/candidates", "expected a nonempty array of family names");
      candidates.clear();
      for (std::size_t i = 0; i < j["candidates"].size(); ++i) {
        const std::string ptr = "/candidates/" + std::to_string(i);
        if (!j["candidates"][i].is_string()) throw ConfigError(ptr, "expected a family name");
        try {
          candidates.push_back(parse_elicited_family(j["candidates"][i].get<std::string>()));
        } catch (const Error& ex) {
          throw ConfigError(ptr, ex.what());
        }
      }
    }
    if (j.contains("probability_scale")) {
      if (!j["probability_scale"].is_boolean()) throw ConfigError("/probability_scale", "expected true or false");
      probability = j["probability_scale"].get<bool>();
    }
    if (!j.contains("judgments")) throw ConfigError("/judgments", "required array is missing");
    list = &j["judgments"];
  }
  const std::string base = j.is_object() ? "/judgments" : "";
  if (!list->is_array() || list->empty()) throw ConfigError(base.empty() ? "/" : base, "expected a nonempty array");

  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-12s %9s %-34s %12s %10s\n", "expert", "timepoint", "best fit", "SSE", "ESS");
  os << buf;
  for (std::size_t i = 0; i < list->size(); ++i) {
    const std::string ptr = base + "/" + std::to_string(i);
    const auto& e = (*list)[i];
    require_object(e, ptr);
    check_keys(e, ptr, {"id", "timepoint", "lpl", "mlv", "upl", "coverage"});
    const double t = e.contains("timepoint") ? number(e, ptr, "timepoint") : 0.0;
    const auto jd = parse_judgment(e, ptr, t, probability, "expert" + std::to_string(i + 1));
    ElicitedDistribution fit;
    try {
      fit = best_fit(jd, candidates);
    } catch (const Error& ex) {
      throw ConfigError(ptr, ex.what());
    }
    std::string ess = "-";
    if (fit.family() == ElicitedFamily::Beta) {
      std::ostringstream es;
      es << std::setprecision(4) << ess_beta(fit);
      ess = es.str();
      if (sample_size && ess_report(fit, *sample_size).exceeds_sample_size) ess += " (> n=" + std::to_string(*sample_size) + ")";
    }
    std::snprintf(buf, sizeof buf, "%-12s %9.4g %-34s %12.4g %10s\n", jd.expert_id.c_str(), t, fit.label().c_str(),
                  fit.sse, ess.c_str());
    os << buf;
  }
  return os.str();
}

}  // namespace expertsurv::io
