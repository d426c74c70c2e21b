#include "bhvqe/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cerrno>
#include <climits>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>
#include <utility>

#include <CLI11.hpp>
#include <yaml-cpp/yaml.h>

#include "bhvqe/errors.hpp"
#include "bhvqe/rng.hpp"

namespace bhvqe {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw config_error(path + ": " + msg);
}

// ---------------------------------------------------------------- loading

bool parse_whole_int(const std::string& s, long long& out) {
  if (s.empty()) return false;
  const size_t start = (s[0] == '+' || s[0] == '-') ? 1 : 0;
  if (start == s.size()) return false;
  for (size_t i = start; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtoll(s.c_str(), &end, 10);
  return errno == 0 && end != nullptr && *end == '\0';
}

bool parse_whole_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  for (const char c : s)
    if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '+' ||
          c == '-' || c == '.' || c == 'e' || c == 'E'))
      return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return errno == 0 && end == s.c_str() + s.size();
}

// Scalars stay strings when explicitly quoted; otherwise true/false/null and
// anything that fully parses as a number get their natural JSON type.
json yaml_to_json(const YAML::Node& node, const std::string& path) {
  switch (node.Type()) {
    case YAML::NodeType::Null:
      return nullptr;
    case YAML::NodeType::Scalar: {
      const std::string& s = node.Scalar();
      if (node.Tag() == "!") return s;
      if (s == "true") return true;
      if (s == "false") return false;
      if (s == "null" || s == "~") return nullptr;
      long long i = 0;
      if (parse_whole_int(s, i)) return i;
      double d = 0.0;
      if (parse_whole_double(s, d)) return d;
      return s;
    }
    case YAML::NodeType::Sequence: {
      json arr = json::array();
      int index = 0;
      for (const auto& item : node)
        arr.push_back(
            yaml_to_json(item, path + "[" + std::to_string(index++) + "]"));
      return arr;
    }
    case YAML::NodeType::Map: {
      json obj = json::object();
      for (const auto& kv : node) {
        if (!kv.first.IsScalar()) fail(path, "mapping keys must be scalars");
        const std::string key = kv.first.Scalar();
        if (obj.contains(key)) fail(path, "duplicate key '" + key + "'");
        obj[key] = yaml_to_json(kv.second, path + "." + key);
      }
      return obj;
    }
    default:
      fail(path, "unsupported YAML node");
  }
}

// ---------------------------------------------------------------- schema

const json* find_key(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> required,
                std::initializer_list<const char*> optional) {
  if (!obj.is_object()) fail(path, "expected a mapping");
  const auto known = [&](const std::string& k) {
    for (const char* r : required)
      if (k == r) return true;
    for (const char* o : optional)
      if (k == o) return true;
    return false;
  };
  for (const auto& item : obj.items())
    if (!known(item.key())) fail(path, "unknown key '" + item.key() + "'");
  for (const char* r : required)
    if (!obj.contains(r)) fail(path, "missing required key '" + std::string(r) + "'");
}

const json& need_key(const json& obj, const std::string& path,
                     const char* key) {
  const json* v = find_key(obj, key);
  if (v == nullptr) fail(path, "missing required key '" + std::string(key) + "'");
  return *v;
}

std::string need_string(const json& obj, const std::string& path,
                        const char* key) {
  const json& v = need_key(obj, path, key);
  if (!v.is_string()) fail(path + "." + key, "expected a string");
  return v.get<std::string>();
}

std::string opt_string(const json& obj, const std::string& path,
                       const char* key, const std::string& fallback) {
  const json* v = find_key(obj, key);
  if (v == nullptr) return fallback;
  if (!v->is_string()) fail(path + "." + key, "expected a string");
  return v->get<std::string>();
}

long long integer_value(const json& v, const std::string& where) {
  if (v.is_number_unsigned() &&
      v.get<std::uint64_t>() > static_cast<std::uint64_t>(LLONG_MAX))
    fail(where, "integer out of range");
  if (!v.is_number_integer()) fail(where, "expected an integer");
  return v.get<long long>();
}

long long need_integer(const json& obj, const std::string& path,
                       const char* key, long long lo, long long hi) {
  const long long v = integer_value(need_key(obj, path, key), path + "." + key);
  if (v < lo || v > hi)
    fail(path + "." + key, "must be in [" + std::to_string(lo) + ", " +
                               std::to_string(hi) + "]");
  return v;
}

long long opt_integer(const json& obj, const std::string& path,
                      const char* key, long long fallback, long long lo,
                      long long hi) {
  return find_key(obj, key) == nullptr ? fallback
                                       : need_integer(obj, path, key, lo, hi);
}

double need_number(const json& obj, const std::string& path, const char* key) {
  const json& v = need_key(obj, path, key);
  if (!v.is_number()) fail(path + "." + key, "expected a number");
  return v.get<double>();
}

double opt_number(const json& obj, const std::string& path, const char* key,
                  double fallback) {
  return find_key(obj, key) == nullptr ? fallback
                                       : need_number(obj, path, key);
}

bool opt_bool(const json& obj, const std::string& path, const char* key,
              bool fallback) {
  const json* v = find_key(obj, key);
  if (v == nullptr) return fallback;
  if (!v->is_boolean()) fail(path + "." + key, "expected true or false");
  return v->get<bool>();
}

std::uint64_t opt_seed(const json& obj, const std::string& path,
                       const char* key, std::uint64_t fallback) {
  const json* v = find_key(obj, key);
  if (v == nullptr) return fallback;
  if (v->is_number_unsigned()) return v->get<std::uint64_t>();
  if (v->is_number_integer() && v->get<long long>() >= 0)
    return static_cast<std::uint64_t>(v->get<long long>());
  fail(path + "." + key, "expected a nonnegative integer");
}

// ---------------------------------------------------------------- blocks

struct ParsedModel {
  BHModel model;  // U left 0; n_bosons 0 unless the file set it
  std::string topology;
  bool has_bosons = false;
};

ParsedModel parse_model(const json& doc, const std::string& path) {
  const json& m = need_key(doc, path, "model");
  const std::string mp = path + ".model";
  check_keys(m, mp, {"topology"},
             {"n_sites", "n_bosons", "J", "edges", "mu", "V"});

  ParsedModel out;
  out.topology = need_string(m, mp, "topology");
  BHModel& model = out.model;
  model.J = opt_number(m, mp, "J", 1.0);
  if (!(model.J > 0.0)) fail(mp + ".J", "must be positive");

  if (out.topology == "dimer") {
    if (opt_integer(m, mp, "n_sites", 2, 2, 2) != 2)
      fail(mp + ".n_sites", "a dimer has exactly 2 sites");
    model.n_sites = 2;
    if (find_key(m, "edges") != nullptr)
      fail(mp + ".edges", "only valid for topology 'explicit'");
    model.edges = {{0, 1}};
  } else if (out.topology == "ring") {
    model.n_sites = static_cast<int>(need_integer(m, mp, "n_sites", 2, 4096));
    if (find_key(m, "edges") != nullptr)
      fail(mp + ".edges", "only valid for topology 'explicit'");
    model.edges = BHModel::ring(model.n_sites, 1, 0.0, model.J).edges;
  } else if (out.topology == "explicit") {
    model.n_sites = static_cast<int>(need_integer(m, mp, "n_sites", 2, 4096));
    const json& edges = need_key(m, mp, "edges");
    if (!edges.is_array() || edges.empty())
      fail(mp + ".edges", "expected a non-empty list of [p, q] pairs");
    for (size_t i = 0; i < edges.size(); ++i) {
      const json& e = edges[i];
      const std::string ep = mp + ".edges[" + std::to_string(i) + "]";
      if (!e.is_array() || e.size() != 2) fail(ep, "expected a [p, q] pair");
      const long long p = integer_value(e[0], ep);
      const long long q = integer_value(e[1], ep);
      if (p < 0 || q < 0 || p >= model.n_sites || q >= model.n_sites)
        fail(ep, "mode index out of range");
      model.edges.emplace_back(static_cast<int>(p), static_cast<int>(q));
    }
  } else {
    fail(mp + ".topology", "must be one of dimer|ring|explicit");
  }

  if (const json* bosons = find_key(m, "n_bosons")) {
    const long long v = integer_value(*bosons, mp + ".n_bosons");
    if (v < 1) fail(mp + ".n_bosons", "must be >= 1");
    model.n_bosons = static_cast<int>(std::min<long long>(v, INT_MAX));
    out.has_bosons = true;
  }

  if (const json* mu = find_key(m, "mu")) {
    if (!mu->is_array()) fail(mp + ".mu", "expected a list of numbers");
    for (const auto& v : *mu) {
      if (!v.is_number()) fail(mp + ".mu", "expected a list of numbers");
      model.mu.push_back(v.get<double>());
    }
  }

  if (const json* vmat = find_key(m, "V")) {
    if (!vmat->is_array() || vmat->empty())
      fail(mp + ".V", "expected a square matrix of numbers");
    const size_t rows = vmat->size();
    Eigen::MatrixXd V(rows, rows);
    for (size_t r = 0; r < rows; ++r) {
      const json& row = (*vmat)[r];
      if (!row.is_array() || row.size() != rows)
        fail(mp + ".V", "expected a square matrix of numbers");
      for (size_t c = 0; c < rows; ++c) {
        if (!row[c].is_number())
          fail(mp + ".V", "expected a square matrix of numbers");
        V(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            row[c].get<double>();
      }
    }
    model.V = std::move(V);
  }
  return out;
}

// Per-cell model: n_bosons from the grid axis, U from Lambda = N_B U / J.
BHModel model_for(BHModel base, int n_bosons, double lambda) {
  base.n_bosons = n_bosons;
  base.U = lambda * base.J / n_bosons;
  return base;
}

// The only per-cell degrees of freedom are n_bosons and U, whose config-side
// constraints (>= 1, lambda >= 0) are already enforced, so validating one
// representative cell classifies every structural problem as a config error.
void validate_representative(const BHModel& base, const std::string& path,
                             int n_bosons, double lambda) {
  try {
    model_for(base, n_bosons, lambda).validate();
  } catch (const std::exception& e) {
    fail(path + ".model", e.what());
  }
}

json model_to_json(const ParsedModel& pm, bool include_bosons) {
  json j{{"topology", pm.topology},
         {"n_sites", pm.model.n_sites},
         {"J", pm.model.J}};
  json edges = json::array();
  for (const auto& [p, q] : pm.model.edges)
    edges.push_back(json::array({p, q}));
  j["edges"] = std::move(edges);
  if (include_bosons) j["n_bosons"] = pm.model.n_bosons;
  if (!pm.model.mu.empty()) j["mu"] = pm.model.mu;
  if (pm.model.V.size() != 0) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < pm.model.V.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < pm.model.V.cols(); ++c)
        row.push_back(pm.model.V(r, c));
      rows.push_back(std::move(row));
    }
    j["V"] = std::move(rows);
  }
  return j;
}

std::vector<double> parse_lambda_axis(const json& doc,
                                      const std::string& path) {
  const json* list = find_key(doc, "lambdas");
  const json* grid = find_key(doc, "lambda_grid");
  if ((list != nullptr) == (grid != nullptr))
    fail(path, "provide exactly one of 'lambdas' and 'lambda_grid'");

  std::vector<double> out;
  if (list != nullptr) {
    if (!list->is_array() || list->empty())
      fail(path + ".lambdas", "expected a non-empty list of numbers");
    for (const auto& v : *list) {
      if (!v.is_number())
        fail(path + ".lambdas", "expected a non-empty list of numbers");
      if (v.get<double>() < 0.0)
        fail(path + ".lambdas", "interaction strengths must be nonnegative");
      out.push_back(v.get<double>());
    }
  } else {
    const std::string gp = path + ".lambda_grid";
    check_keys(*grid, gp, {"from", "to", "count"}, {"scale"});
    const double from = need_number(*grid, gp, "from");
    const double to = need_number(*grid, gp, "to");
    const long long count = need_integer(*grid, gp, "count", 1, 100000);
    const std::string scale = opt_string(*grid, gp, "scale", "linear");
    if (from < 0.0) fail(gp + ".from", "must be nonnegative");
    if (to < from) fail(gp + ".to", "must be >= from");
    if (scale == "log") {
      if (from <= 0.0) fail(gp, "log scale requires from > 0");
      const double lf = std::log(from);
      const double lt = std::log(to);
      for (long long i = 0; i < count; ++i)
        out.push_back(count == 1 ? from
                                 : std::exp(lf + (lt - lf) * double(i) /
                                                     double(count - 1)));
    } else if (scale == "linear") {
      for (long long i = 0; i < count; ++i)
        out.push_back(count == 1
                          ? from
                          : from + (to - from) * double(i) / double(count - 1));
    } else {
      fail(gp + ".scale", "must be 'linear' or 'log'");
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> parse_int_axis(const json& v, const std::string& where,
                                int lo) {
  if (!v.is_array() || v.empty())
    fail(where, "expected a non-empty list of integers");
  std::vector<int> out;
  for (const auto& e : v) {
    const long long value = integer_value(e, where);
    if (value < lo || value > 1000000)
      fail(where, "entries must be in [" + std::to_string(lo) + ", 1000000]");
    out.push_back(static_cast<int>(value));
  }
  std::sort(out.begin(), out.end());
  return out;
}

InitialStatePrep parse_prep(const json& v, const std::string& path,
                            int n_sites) {
  InitialStatePrep prep;
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "monomodal") {
      prep.kind = PrepKind::Monomodal;
    } else if (s == "bimodal") {
      prep.kind = PrepKind::Bimodal;
    } else {
      fail(path, "must be 'monomodal', 'bimodal', or an occupation list");
    }
  } else if (v.is_array()) {
    prep.kind = PrepKind::Explicit;
    if (static_cast<int>(v.size()) != n_sites)
      fail(path, "occupation list length must equal n_sites");
    for (const auto& e : v) {
      const long long n = integer_value(e, path);
      if (n < 0) fail(path, "occupations must be nonnegative");
      prep.explicit_config.push_back(static_cast<int>(n));
    }
  } else {
    fail(path, "must be 'monomodal', 'bimodal', or an occupation list");
  }
  return prep;
}

// An explicit preparation fixes the boson total, so every grid entry must
// agree with it.
void check_prep_totals(const InitialStatePrep& prep, const std::string& path,
                       const std::vector<int>& bosons) {
  if (prep.kind != PrepKind::Explicit) return;
  long long total = 0;
  for (const int n : prep.explicit_config) total += n;
  for (const int nb : bosons)
    if (nb != total)
      fail(path, "occupation total " + std::to_string(total) +
                     " does not match bosons entry " + std::to_string(nb));
}

json prep_to_json(const InitialStatePrep& prep) {
  switch (prep.kind) {
    case PrepKind::Monomodal:
      return "monomodal";
    case PrepKind::Bimodal:
      return "bimodal";
    default:
      return json(prep.explicit_config);
  }
}

OptimizerConfig parse_optimizer(const json* obj, const std::string& path,
                                OptimizerKind fallback) {
  OptimizerConfig oc;
  oc.kind = fallback;
  oc.max_evaluations = 20000;
  if (obj != nullptr) {
    check_keys(*obj, path, {},
               {"kind", "max_evaluations", "init_range", "fd_step", "sigma0",
                "tolerance"});
    if (find_key(*obj, "kind") != nullptr) {
      const std::string kind = need_string(*obj, path, "kind");
      if (kind == "bfgs") {
        oc.kind = OptimizerKind::QuasiNewton;
      } else if (kind == "cma_es") {
        oc.kind = OptimizerKind::CmaEs;
      } else {
        fail(path + ".kind", "must be 'bfgs' or 'cma_es'");
      }
    }
    oc.max_evaluations = static_cast<int>(opt_integer(
        *obj, path, "max_evaluations", oc.max_evaluations, 1, INT_MAX));
    oc.init_range = opt_number(*obj, path, "init_range", oc.init_range);
    oc.fd_step = opt_number(*obj, path, "fd_step", oc.fd_step);
    oc.sigma0 = opt_number(*obj, path, "sigma0", oc.sigma0);
    oc.tolerance = opt_number(*obj, path, "tolerance", oc.tolerance);
  }
  try {
    oc.validate();
  } catch (const std::exception& e) {
    fail(path, e.what());
  }
  return oc;
}

json optimizer_to_json(const OptimizerConfig& oc) {
  return json{{"kind", oc.kind == OptimizerKind::QuasiNewton ? "bfgs"
                                                             : "cma_es"},
              {"max_evaluations", oc.max_evaluations},
              {"init_range", oc.init_range},
              {"fd_step", oc.fd_step},
              {"sigma0", oc.sigma0},
              {"tolerance", oc.tolerance}};
}

AnsatzSpec parse_ansatz(const json& doc, const std::string& path,
                        int n_sites) {
  const json& a = need_key(doc, path, "ansatz");
  const std::string ap = path + ".ansatz";
  check_keys(a, ap, {"family"}, {"variant"});
  AnsatzSpec spec;
  spec.n_sites = n_sites;
  spec.n_layers = 1;
  const std::string family = need_string(a, ap, "family");
  if (family == "bs_kerr") {
    spec.family = AnsatzFamily::BsKerr;
    if (find_key(a, "variant") != nullptr)
      fail(ap + ".variant", "only valid for family 'interferometer_kerr'");
  } else if (family == "interferometer_kerr") {
    spec.family = AnsatzFamily::InterferometerKerr;
    const std::string variant = opt_string(a, ap, "variant", "full");
    if (variant == "full") {
      spec.zero_bs_phases = false;
      spec.include_rotations = true;
    } else if (variant == "zero_phases") {
      spec.zero_bs_phases = true;
      spec.include_rotations = true;
    } else if (variant == "no_rotations") {
      spec.zero_bs_phases = false;
      spec.include_rotations = false;
    } else if (variant == "minimal") {
      spec.zero_bs_phases = true;
      spec.include_rotations = false;
    } else {
      fail(ap + ".variant",
           "must be one of full|zero_phases|no_rotations|minimal");
    }
  } else {
    fail(ap + ".family", "must be 'bs_kerr' or 'interferometer_kerr'");
  }
  return spec;
}

std::string family_name(AnsatzFamily family) {
  return family == AnsatzFamily::BsKerr ? "bs_kerr" : "interferometer_kerr";
}

std::string variant_name(const AnsatzSpec& spec) {
  if (spec.family == AnsatzFamily::BsKerr) return "-";
  if (spec.zero_bs_phases && !spec.include_rotations) return "minimal";
  if (spec.zero_bs_phases) return "zero_phases";
  if (!spec.include_rotations) return "no_rotations";
  return "full";
}

json ansatz_to_json(const AnsatzSpec& spec) {
  json j{{"family", family_name(spec.family)}};
  if (spec.family == AnsatzFamily::InterferometerKerr)
    j["variant"] = variant_name(spec);
  return j;
}

struct OutputNames {
  std::string csv;
  std::string json_name;
};

void check_file_name(const std::string& name, const std::string& where) {
  if (name.empty() || name.find('/') != std::string::npos)
    fail(where, "must be a plain file name");
}

OutputNames parse_output(const json& doc, const std::string& path,
                         const char* default_csv, const char* default_json) {
  OutputNames names{default_csv, default_json == nullptr ? "" : default_json};
  if (const json* o = find_key(doc, "output")) {
    const std::string op = path + ".output";
    if (default_json != nullptr) {
      check_keys(*o, op, {}, {"csv", "json"});
      names.json_name = opt_string(*o, op, "json", names.json_name);
      check_file_name(names.json_name, op + ".json");
    } else {
      check_keys(*o, op, {}, {"csv"});
    }
    names.csv = opt_string(*o, op, "csv", names.csv);
    check_file_name(names.csv, op + ".csv");
  }
  return names;
}

int resolve_threads(const json& doc, const std::string& path,
                    const CliOverrides& overrides) {
  if (overrides.threads.has_value()) {
    if (*overrides.threads < 1) fail("--threads", "must be >= 1");
    return *overrides.threads;
  }
  if (find_key(doc, "threads") != nullptr)
    return static_cast<int>(need_integer(doc, path, "threads", 1, 1024));
  if (const char* env = std::getenv("BHVQE_THREADS")) {
    long long v = 0;
    if (!parse_whole_int(env, v) || v < 1 || v > 1024)
      fail("BHVQE_THREADS", "must be a positive integer, got '" +
                                std::string(env) + "'");
    return static_cast<int>(v);
  }
  return 1;
}

// ---------------------------------------------------------------- output

void run_parallel(size_t n, int threads,
                  const std::function<void(size_t)>& work) {
  threads = std::max(1, std::min<int>(threads, static_cast<int>(n)));
  if (threads <= 1) {
    for (size_t i = 0; i < n; ++i) work(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  const auto loop = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        work(i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) pool.emplace_back(loop);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << content;
  out.flush();
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

void require_cost_kind(const VqeConfig& config, CostKind kind,
                       const char* command) {
  if (config.spec.cost != kind)
    throw std::invalid_argument(std::string(command) +
                                ": config was parsed for the other command");
}

}  // namespace

// ---------------------------------------------------------------- parse

json load_config_document(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error(path.string() + ": cannot open config file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  if (path.extension() == ".json") {
    try {
      return json::parse(text);
    } catch (const json::parse_error& e) {
      throw config_error(path.string() + ": " + e.what());
    }
  }
  try {
    const YAML::Node root = YAML::Load(text);
    if (!root.IsMap())
      throw config_error(path.string() + ": top level must be a mapping");
    return yaml_to_json(root, "$");
  } catch (const YAML::ParserException& e) {
    throw config_error(path.string() + ":" + std::to_string(e.mark.line + 1) +
                       ":" + std::to_string(e.mark.column + 1) + ": " + e.msg);
  }
}

EdConfig parse_ed_config(const fs::path& path, const CliOverrides& overrides) {
  if (overrides.seed || overrides.shots || overrides.threads)
    throw config_error("ed takes no --seed/--shots/--threads overrides");
  const json doc = load_config_document(path);
  check_keys(doc, "$", {"model"}, {"lambdas", "lambda_grid", "output"});

  const ParsedModel pm = parse_model(doc, "$");
  if (!pm.has_bosons) fail("$.model", "missing required key 'n_bosons'");

  EdConfig config;
  config.model = pm.model;
  config.lambdas = parse_lambda_axis(doc, "$");
  validate_representative(pm.model, "$", pm.model.n_bosons,
                          config.lambdas.front());

  const OutputNames names =
      parse_output(doc, "$", "ed_sweep.csv", "ed_states.json");
  config.csv_name = names.csv;
  config.json_name = names.json_name;

  config.resolved = json{{"command", "ed"},
                         {"model", model_to_json(pm, true)},
                         {"lambdas", config.lambdas},
                         {"output", {{"csv", names.csv}, {"json", names.json_name}}},
                         {"seed", 0}};
  return config;
}

ScanConfig parse_scan_config(const fs::path& path,
                             const CliOverrides& overrides) {
  if (overrides.shots)
    throw config_error("--shots only applies to vqe-sampled");
  const json doc = load_config_document(path);
  check_keys(doc, "$", {"model", "ansatz", "prep", "bosons", "max_layers"},
             {"lambdas", "lambda_grid", "optimizer", "restarts",
              "success_threshold", "seed", "threads", "output"});

  const ParsedModel pm = parse_model(doc, "$");
  if (pm.has_bosons)
    fail("$.model.n_bosons", "scan takes the boson axis from 'bosons'");

  ScanConfig config;
  config.model = pm.model;
  config.bosons = parse_int_axis(need_key(doc, "$", "bosons"), "$.bosons", 1);
  config.lambdas = parse_lambda_axis(doc, "$");
  config.ansatz = parse_ansatz(doc, "$", pm.model.n_sites);
  config.prep =
      parse_prep(need_key(doc, "$", "prep"), "$.prep", pm.model.n_sites);
  check_prep_totals(config.prep, "$.prep", config.bosons);
  config.optimizer = parse_optimizer(find_key(doc, "optimizer"), "$.optimizer",
                                     OptimizerKind::QuasiNewton);
  config.max_layers =
      static_cast<int>(need_integer(doc, "$", "max_layers", 1, 64));
  config.restarts =
      static_cast<int>(opt_integer(doc, "$", "restarts", 5, 1, 1000));
  config.success_threshold = opt_number(doc, "$", "success_threshold", 0.99);
  if (!(config.success_threshold > 0.0 && config.success_threshold <= 1.0))
    fail("$.success_threshold", "must be in (0, 1]");
  config.seed = overrides.seed.has_value()
                    ? *overrides.seed
                    : opt_seed(doc, "$", "seed", 0);
  config.threads = resolve_threads(doc, "$", overrides);
  validate_representative(pm.model, "$", config.bosons.front(),
                          config.lambdas.front());

  const OutputNames names = parse_output(doc, "$", "scan.csv", nullptr);
  config.csv_name = names.csv;

  config.resolved = json{{"command", "scan"},
                         {"model", model_to_json(pm, false)},
                         {"ansatz", ansatz_to_json(config.ansatz)},
                         {"prep", prep_to_json(config.prep)},
                         {"optimizer", optimizer_to_json(config.optimizer)},
                         {"bosons", config.bosons},
                         {"lambdas", config.lambdas},
                         {"max_layers", config.max_layers},
                         {"restarts", config.restarts},
                         {"success_threshold", config.success_threshold},
                         {"seed", config.seed},
                         {"output", {{"csv", names.csv}}}};
  return config;
}

VqeConfig parse_vqe_config(const fs::path& path, bool sampled,
                           const CliOverrides& overrides) {
  if (!sampled && overrides.shots)
    throw config_error("--shots only applies to vqe-sampled");
  const json doc = load_config_document(path);
  check_keys(doc, "$", {"model", "ansatz", "prep", "layers"},
             {"bosons", "lambdas", "lambda_grid", "optimizer", "restarts",
              "seed", "threads", "output", "shots", "infinite_shots",
              "colored_plan"});
  for (const char* key : {"shots", "infinite_shots", "colored_plan"})
    if (!sampled && find_key(doc, key) != nullptr)
      fail(std::string("$.") + key, "only valid for vqe-sampled");

  const ParsedModel pm = parse_model(doc, "$");

  VqeConfig config;
  if (const json* bosons = find_key(doc, "bosons")) {
    if (pm.has_bosons)
      fail("$.model.n_bosons", "choose one of model.n_bosons and 'bosons'");
    config.bosons = parse_int_axis(*bosons, "$.bosons", 1);
  } else if (pm.has_bosons) {
    config.bosons = {pm.model.n_bosons};
  } else {
    fail("$", "provide 'bosons' or model.n_bosons");
  }
  config.layers =
      parse_int_axis(need_key(doc, "$", "layers"), "$.layers", 0);
  config.lambdas = parse_lambda_axis(doc, "$");

  ExperimentSpec& spec = config.spec;
  spec.model = pm.model;
  spec.ansatz = parse_ansatz(doc, "$", pm.model.n_sites);
  spec.prep = parse_prep(need_key(doc, "$", "prep"), "$.prep", pm.model.n_sites);
  check_prep_totals(spec.prep, "$.prep", config.bosons);
  spec.cost = sampled ? CostKind::EnergySampled : CostKind::EnergyExact;
  spec.optimizer =
      parse_optimizer(find_key(doc, "optimizer"), "$.optimizer",
                      sampled ? OptimizerKind::CmaEs : OptimizerKind::QuasiNewton);
  spec.restarts = static_cast<int>(opt_integer(doc, "$", "restarts", 5, 1, 1000));
  spec.seed = overrides.seed.has_value() ? *overrides.seed
                                         : opt_seed(doc, "$", "seed", 0);
  if (sampled) {
    spec.infinite_shots = opt_bool(doc, "$", "infinite_shots", false);
    spec.colored_plan = opt_bool(doc, "$", "colored_plan", false);
    if (overrides.shots.has_value()) {
      if (*overrides.shots < 1) fail("--shots", "must be >= 1");
      spec.shots = *overrides.shots;
    } else {
      spec.shots = opt_integer(doc, "$", "shots", 0, 1, 1000000000000LL);
    }
    if (!spec.infinite_shots && spec.shots < 1)
      fail("$.shots", "required unless infinite_shots is true");
  }
  config.threads = resolve_threads(doc, "$", overrides);

  // One representative cell exercises the full spec validation up front.
  try {
    ExperimentSpec probe = spec;
    probe.model =
        model_for(pm.model, config.bosons.front(), config.lambdas.front());
    probe.ansatz.n_layers = config.layers.front();
    probe.validate();
  } catch (const config_error&) {
    throw;
  } catch (const std::exception& e) {
    fail("$", e.what());
  }

  const OutputNames names =
      parse_output(doc, "$", "vqe_grid.csv", "vqe_results.json");
  config.csv_name = names.csv;
  config.json_name = names.json_name;

  config.resolved =
      json{{"command", sampled ? "vqe-sampled" : "vqe"},
           {"model", model_to_json(pm, false)},
           {"ansatz", ansatz_to_json(spec.ansatz)},
           {"prep", prep_to_json(spec.prep)},
           {"optimizer", optimizer_to_json(spec.optimizer)},
           {"bosons", config.bosons},
           {"layers", config.layers},
           {"lambdas", config.lambdas},
           {"restarts", spec.restarts},
           {"seed", spec.seed},
           {"output", {{"csv", names.csv}, {"json", names.json_name}}}};
  if (sampled) {
    config.resolved["shots"] = spec.shots;
    config.resolved["infinite_shots"] = spec.infinite_shots;
    config.resolved["colored_plan"] = spec.colored_plan;
  }
  return config;
}

// ---------------------------------------------------------------- commands

std::vector<fs::path> cmd_ed(const EdConfig& config, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const auto basis =
      std::make_shared<FockBasis>(config.model.n_sites, config.model.n_bosons);

  std::ostringstream csv;
  csv << "# config: " << config.resolved.dump() << "\n";
  csv << "lambda,E0,ipr,entropy\n";
  json points = json::array();
  for (const double lambda : config.lambdas) {
    BHModel m = config.model;
    m.U = lambda * m.J / m.n_bosons;
    m.validate();
    const auto h = build_hamiltonian(m, basis);
    const GroundState gs = ground_state(h);
    const double state_ipr = ipr(gs.vector);
    const double state_entropy = entropy(gs.vector, 0);
    csv << fmt(lambda) << ',' << fmt(gs.energy) << ',' << fmt(state_ipr) << ','
        << fmt(state_entropy) << "\n";
    json point = json::parse(ground_state_to_json(gs));
    point["lambda"] = lambda;
    point["ipr"] = state_ipr;
    point["entropy"] = state_entropy;
    points.push_back(std::move(point));
  }

  const fs::path csv_path = out_dir / config.csv_name;
  const fs::path json_path = out_dir / config.json_name;
  write_text_file(csv_path, csv.str());
  const json out{{"config", config.resolved}, {"points", std::move(points)}};
  write_text_file(json_path, out.dump(2) + "\n");
  return {csv_path, json_path};
}

std::vector<fs::path> cmd_scan(const ScanConfig& config,
                               const fs::path& out_dir) {
  fs::create_directories(out_dir);

  struct Cell {
    int n_bosons;
    double lambda;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  const Rng master(config.seed);
  for (const int nb : config.bosons)
    for (const double lambda : config.lambdas)
      cells.push_back(
          {nb, lambda, master.split(cells.size()).seed()});

  std::vector<std::optional<int>> min_layers(cells.size());
  run_parallel(cells.size(), config.threads, [&](size_t i) {
    ExperimentSpec spec;
    spec.model = model_for(config.model, cells[i].n_bosons, cells[i].lambda);
    spec.ansatz = config.ansatz;
    spec.prep = config.prep;
    spec.cost = CostKind::Infidelity;
    spec.optimizer = config.optimizer;
    spec.restarts = config.restarts;
    spec.success_threshold = config.success_threshold;
    spec.seed = cells[i].seed;
    min_layers[i] = scan_layers(spec, config.max_layers);
  });

  std::ostringstream csv;
  csv << "# config: " << config.resolved.dump() << "\n";
  csv << "n_bosons,lambda,ansatz,variant,min_layers,gate_count\n";
  for (size_t i = 0; i < cells.size(); ++i) {
    csv << cells[i].n_bosons << ',' << fmt(cells[i].lambda) << ','
        << family_name(config.ansatz.family) << ','
        << variant_name(config.ansatz) << ',';
    if (min_layers[i].has_value()) {
      AnsatzSpec found = config.ansatz;
      found.n_layers = *min_layers[i];
      csv << *min_layers[i] << ',' << found.gate_count();
    } else {
      csv << "NOT_FOUND,NOT_FOUND";
    }
    csv << "\n";
  }

  const fs::path csv_path = out_dir / config.csv_name;
  write_text_file(csv_path, csv.str());
  return {csv_path};
}

namespace {

std::vector<fs::path> run_vqe_command(const VqeConfig& config,
                                      const fs::path& out_dir) {
  fs::create_directories(out_dir);

  struct Cell {
    int n_bosons;
    int n_layers;
    double lambda;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  const Rng master(config.spec.seed);
  for (const int nb : config.bosons)
    for (const int nl : config.layers)
      for (const double lambda : config.lambdas)
        cells.push_back({nb, nl, lambda, master.split(cells.size()).seed()});

  std::vector<RunResult> results(cells.size());
  run_parallel(cells.size(), config.threads, [&](size_t i) {
    ExperimentSpec spec = config.spec;
    spec.model = model_for(config.spec.model, cells[i].n_bosons,
                           cells[i].lambda);
    spec.ansatz.n_layers = cells[i].n_layers;
    spec.seed = cells[i].seed;
    results[i] = run_experiment(spec);
  });

  const bool finite_shots = config.spec.cost == CostKind::EnergySampled &&
                            !config.spec.infinite_shots;
  std::vector<GridCell> grid;
  json result_list = json::array();
  for (size_t i = 0; i < cells.size(); ++i) {
    grid.push_back({cells[i].n_bosons, cells[i].n_layers, cells[i].lambda,
                    results[i].fidelity, results[i].delta_e,
                    finite_shots ? config.spec.shots : 0, cells[i].seed});
    json entry = json::parse(run_result_to_json(results[i]));
    entry["n_bosons"] = cells[i].n_bosons;
    entry["n_layers"] = cells[i].n_layers;
    entry["lambda"] = cells[i].lambda;
    result_list.push_back(std::move(entry));
  }

  std::ostringstream csv;
  csv << "# config: " << config.resolved.dump() << "\n";
  write_grid_csv(grid, csv);

  const fs::path csv_path = out_dir / config.csv_name;
  const fs::path json_path = out_dir / config.json_name;
  write_text_file(csv_path, csv.str());
  const json out{{"config", config.resolved},
                 {"seed", config.spec.seed},
                 {"results", std::move(result_list)}};
  write_text_file(json_path, out.dump(2) + "\n");
  return {csv_path, json_path};
}

}  // namespace

std::vector<fs::path> cmd_vqe(const VqeConfig& config,
                              const fs::path& out_dir) {
  require_cost_kind(config, CostKind::EnergyExact, "cmd_vqe");
  return run_vqe_command(config, out_dir);
}

std::vector<fs::path> cmd_vqe_sampled(const VqeConfig& config,
                                      const fs::path& out_dir) {
  require_cost_kind(config, CostKind::EnergySampled, "cmd_vqe_sampled");
  return run_vqe_command(config, out_dir);
}

// ---------------------------------------------------------------- front end

int cli_main(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err) {
  CLI::App app{"Bose-Hubbard ground states on a simulated photonic circuit"};
  app.name("bhvqe");
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> shots;
  std::optional<int> threads;

  const auto add_common = [&](CLI::App* sub, bool runs_experiments) {
    sub->add_option("--config", config_path,
                    "config file (.yaml canonical, .json accepted)")
        ->required();
    sub->add_option("--out", out_dir, "output directory (default: .)");
    if (runs_experiments) {
      sub->add_option("--seed", seed, "override the config seed");
      sub->add_option("--threads", threads,
                      "worker threads for grid cells (default: "
                      "BHVQE_THREADS or 1)");
    }
  };

  CLI::App* ed = app.add_subcommand(
      "ed", "exact ground-state sweep over interaction strengths");
  add_common(ed, false);
  CLI::App* scan = app.add_subcommand(
      "scan", "minimal circuit depth per (bosons, interaction) cell");
  add_common(scan, true);
  CLI::App* vqe = app.add_subcommand(
      "vqe", "noiseless variational ground-state search");
  add_common(vqe, true);
  CLI::App* vqe_sampled = app.add_subcommand(
      "vqe-sampled", "variational search on finite-shot energy estimates");
  add_common(vqe_sampled, true);
  vqe_sampled->add_option("--shots", shots,
                          "override shots per cost evaluation");

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  const CliOverrides overrides{seed, shots, threads};
  try {
    std::vector<fs::path> written;
    if (ed->parsed()) {
      written = cmd_ed(parse_ed_config(config_path, {}), out_dir);
    } else if (scan->parsed()) {
      written = cmd_scan(parse_scan_config(config_path, overrides), out_dir);
    } else if (vqe->parsed()) {
      written =
          cmd_vqe(parse_vqe_config(config_path, false, overrides), out_dir);
    } else {
      written = cmd_vqe_sampled(parse_vqe_config(config_path, true, overrides),
                                out_dir);
    }
    for (const auto& p : written) out << p.string() << "\n";
    return kExitOk;
  } catch (const config_error& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace bhvqe
