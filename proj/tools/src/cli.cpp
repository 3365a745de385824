#include "bpi/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bpi/boundary.hpp"
#include "bpi/dataset.hpp"
#include "bpi/density.hpp"
#include "bpi/dimension.hpp"
#include "bpi/error.hpp"
#include "bpi/evaluator.hpp"
#include "bpi/functionals.hpp"
#include "bpi/generators.hpp"
#include "bpi/inference.hpp"
#include "bpi/parallel.hpp"
#include "bpi/structure.hpp"
#include "bpi/tuning.hpp"

namespace bpi::cli {
namespace {

using json = nlohmann::ordered_json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A rendered output destined for a path ("-" is the output stream).
struct Artifact {
  std::string path;
  std::string body;
};
using Artifacts = std::vector<Artifact>;

struct Common {
  unsigned threads = 1;
  std::uint64_t seed = 1;
  std::string output = "-";
};

struct BoundaryFlags {
  double delta = 0.8;
  std::string lipschitz = "auto";
  std::string eps0 = "auto";
  bool no_boundary = false;
};

struct InputFlags {
  std::string input;
  bool header = false;
  double alpha_frac = 0.7;
  std::size_t k = 0;
  std::string k_rule = "rate";
  bool no_bias = false;
  BoundaryFlags boundary;
};

struct GeneratorFlags {
  std::string dist = "beta-uniform";
  std::size_t T = 10000;
  int d = 3;
  double a = 4.0;
  double b = 4.0;
  double eps = 0.2;
  int ambient = 3;
};

void add_common(CLI::App* app, Common& c, bool output = true) {
  app->add_option("--threads", c.threads, "Worker threads (results do not depend on it)")
      ->capture_default_str()
      ->check(CLI::Range(1u, 1024u));
  app->add_option("--seed", c.seed, "Base seed for every random choice")->capture_default_str();
  if (output)
    app->add_option("-o,--output", c.output, "Output path, - for stdout")->capture_default_str();
}

void add_boundary(CLI::App* app, BoundaryFlags& b) {
  app->add_option("--delta", b.delta, "Boundary detector exponent in (2/3, 1)")
      ->capture_default_str();
  app->add_option("--lipschitz", b.lipschitz, "Density Lipschitz constant L, or auto")
      ->capture_default_str();
  app->add_option("--eps0", b.eps0, "Density lower bound eps0, or auto")->capture_default_str();
  app->add_flag("--no-boundary-correction", b.no_boundary, "Use the standard k-NN density");
}

void add_input(CLI::App* app, InputFlags& in, bool with_k = true) {
  app->add_option("-i,--input", in.input, "CSV data file")->required();
  app->add_flag("--header", in.header, "Skip the first non-comment line of the input");
  app->add_option("--alpha-frac", in.alpha_frac, "Reference fraction M / T")
      ->capture_default_str();
  if (with_k) {
    auto* k = app->add_option("--k", in.k, "Fixed neighbor count");
    auto* rule = app->add_option("--k-rule", in.k_rule, "k rule when --k is absent")
                     ->check(CLI::IsMember({"rate"}))
                     ->capture_default_str();
    k->excludes(rule);
    rule->excludes(k);
    app->add_flag("--no-bias-correction", in.no_bias, "Report the uncorrected plug-in estimate");
  }
  add_boundary(app, in.boundary);
}

void add_generator(CLI::App* app, GeneratorFlags& g, bool extra_dists) {
  std::vector<std::string> dists = {"uniform", "beta-uniform", "beta-pair"};
  if (extra_dists) {
    dists.push_back("manifold");
    dists.push_back("uniform-sum");
  }
  app->add_option("--dist", g.dist, "Generator")->check(CLI::IsMember(dists))->capture_default_str();
  app->add_option("--T", g.T, "Sample count")->capture_default_str();
  app->add_option("--d", g.d, "Dimension (intrinsic for manifold)")->capture_default_str();
  app->add_option("--a", g.a, "Beta shape a")->capture_default_str();
  app->add_option("--b", g.b, "Beta shape b")->capture_default_str();
  app->add_option("--eps", g.eps, "Uniform mixing weight")->capture_default_str();
  if (extra_dists)
    app->add_option("--ambient", g.ambient, "Ambient dimension for manifold")
        ->capture_default_str();
}

std::optional<double> real_or_auto(const std::string& s, const char* name) {
  if (s == "auto") return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw UsageError(std::string("--") + name + " must be a real number or auto, got '" + s + "'");
}

BoundaryConfig boundary_config(const BoundaryFlags& b) {
  BoundaryConfig c;
  c.delta = b.delta;
  c.lipschitz = real_or_auto(b.lipschitz, "lipschitz");
  c.eps0 = real_or_auto(b.eps0, "eps0");
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  return c;
}

void check_alpha_frac(double a) {
  if (!(a > 0.0 && a < 1.0)) throw UsageError("--alpha-frac must lie in (0,1)");
}

Dataset read_input(const std::string& path, bool header) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path + "'");
  std::stringstream raw;
  raw << f.rdbuf();
  std::string text = raw.str();
  // Leading '#' lines carry replay records from `bpi generate`.
  std::size_t pos = 0;
  while (pos < text.size() && text[pos] == '#') {
    const std::size_t nl = text.find('\n', pos);
    pos = nl == std::string::npos ? text.size() : nl + 1;
  }
  std::istringstream body(text.substr(pos));
  return parse_csv(body, header);
}

json to_json(const EstimateReport& r) {
  json j;
  j["functional"] = r.functional;
  j["estimate"] = r.estimate;
  j["plain_estimate"] = r.plain_estimate;
  j["variant"] = r.variant;
  j["k"] = r.k;
  j["N"] = r.N;
  j["M"] = r.M;
  j["boundary_corrected"] = r.boundary_corrected;
  j["boundary_points"] = r.boundary_points;
  j["g1"] = r.g1;
  j["g2"] = r.g2;
  j["c4"] = r.c4;
  j["c5"] = r.c5;
  j["variance_estimate"] = r.variance_estimate;
  if (r.ci)
    j["ci"] = {{"lo", r.ci->lo}, {"hi", r.ci->hi}, {"level", r.ci->level}};
  else
    j["ci"] = nullptr;
  j["warnings"] = r.warnings;
  return j;
}

json to_json(const BoundaryConfig& c) {
  json j;
  j["delta"] = c.delta;
  j["lipschitz"] = c.lipschitz ? json(*c.lipschitz) : json("auto");
  j["eps0"] = c.eps0 ? json(*c.eps0) : json("auto");
  return j;
}

json to_json(const TheoryConstants& c) {
  json j;
  j["mode"] = c.mode;
  j["c1"] = c.c1_available ? json(c.c1) : json(nullptr);
  j["c2"] = c.c2;
  j["c3"] = c.c3_available ? json(c.c3) : json(nullptr);
  j["c4"] = c.c4;
  j["c5"] = c.c5;
  j["n_mc"] = c.n_mc;
  j["warnings"] = c.warnings;
  return j;
}

/// Replay fields shared by every JSON document.
json header(const std::string& command, const Common& c, std::size_t k, std::size_t N,
            std::size_t M, const std::string& variant) {
  json j;
  j["schema_version"] = schema_version;
  j["command"] = command;
  j["seed"] = c.seed;
  j["k"] = k;
  j["N"] = N;
  j["M"] = M;
  j["variant"] = variant;
  return j;
}

std::string csv_header(const std::string& command, const Common& c, std::size_t k,
                       std::size_t N, std::size_t M, const std::string& variant) {
  std::ostringstream s;
  s << "# bpi " << command << " schema_version=" << schema_version << " seed=" << c.seed
    << " k=" << k << " N=" << N << " M=" << M << " variant=" << variant << '\n';
  return s.str();
}

std::string render(const json& j) { return j.dump(2) + "\n"; }

std::string estimator_variant(bool bias_correct, bool boundary_correct) {
  std::string v = bias_correct ? "bpi_bias_corrected" : "bpi";
  v += boundary_correct ? "+boundary" : "+standard";
  return v;
}

struct Prepared {
  Dataset data;
  SampleSplit split;
  std::size_t k = 0;
  std::string k_rule;
  BoundaryConfig config;
};

Prepared prepare(const InputFlags& in, const Common& c) {
  check_alpha_frac(in.alpha_frac);
  Prepared p;
  p.config = boundary_config(in.boundary);
  p.data = read_input(in.input, in.header);
  p.split = split(p.data, in.alpha_frac, c.seed);
  if (in.k > 0) {
    p.k = in.k;
    p.k_rule = "fixed";
  } else {
    p.k = rate_matched_k(p.split.M(), p.data.dim());
    p.k_rule = "rate";
  }
  return p;
}

json input_config(const InputFlags& in, const Prepared& p) {
  json j;
  j["input"] = in.input;
  j["header"] = in.header;
  j["alpha_frac"] = in.alpha_frac;
  j["k_rule"] = p.k_rule;
  j["T"] = p.data.count();
  j["d"] = p.data.dim();
  j["boundary"] = to_json(p.config);
  j["boundary_correct"] = !in.boundary.no_boundary;
  j["bias_correct"] = !in.no_bias;
  return j;
}

AnalyticDensity generator_density(const GeneratorFlags& g) {
  if (g.dist == "uniform") return uniform_cube(g.d);
  if (g.dist == "beta-uniform") return beta_uniform_mixture(g.d, g.a, g.b, g.eps);
  if (g.dist == "beta-pair") return beta_pair_mixture(g.d);
  if (g.dist == "uniform-sum") return uniform_sum_pair();
  throw UsageError("no analytic density for --dist " + g.dist);
}

void check_generator(const GeneratorFlags& g) {
  if (g.T < 1) throw UsageError("--T must be positive");
  if (g.d < 1) throw UsageError("--d must be >= 1");
  if (!(g.a > 0.0 && g.b > 0.0)) throw UsageError("--a and --b must be positive");
  if (!(g.eps >= 0.0 && g.eps <= 1.0)) throw UsageError("--eps must lie in [0,1]");
  if (g.dist == "manifold" && g.ambient <= g.d)
    throw UsageError("--ambient must exceed --d for manifold");
}

// ---- subcommands ---------------------------------------------------------

Artifacts cmd_generate(const Common& c, const GeneratorFlags& g) {
  check_generator(g);
  Dataset data;
  if (g.dist == "manifold")
    data = sample_projected_manifold(g.T, g.d, g.ambient, c.seed);
  else
    data = sample_density(generator_density(g), g.T, c.seed);
  std::ostringstream s;
  s << "# bpi generate schema_version=" << schema_version << " dist=" << g.dist
    << " T=" << g.T << " d=" << data.dim() << " seed=" << c.seed;
  if (g.dist == "beta-uniform") s << " a=" << g.a << " b=" << g.b << " eps=" << g.eps;
  if (g.dist == "manifold") s << " intrinsic=" << g.d << " ambient=" << g.ambient;
  s << '\n';
  write_csv(s, data);
  return {{c.output, s.str()}};
}

struct DensityFlags {
  std::string estimator = "corrected";
};

Artifacts cmd_density(const Common& c, const InputFlags& in, const DensityFlags& df) {
  Prepared p = prepare(in, c);
  std::string kind = df.estimator;
  if (in.boundary.no_boundary && kind == "corrected") kind = "standard";
  std::vector<double> values;
  std::vector<unsigned char> flags;
  if (kind == "uniform-kernel") {
    const Dataset eval = p.data.select_rows(p.split.eval_indices);
    const NeighborIndex index(p.data.select_rows(p.split.ref_indices));
    const DensityEstimates e = uniform_kernel_density(index, eval, p.k);
    values = e.values;
    flags = e.zero_flags;
  } else {
    PluginEvaluator ev = PluginEvaluator::from_split(p.data, p.split, p.k, p.config);
    if (kind == "corrected") {
      const DensityEstimates& e = ev.corrected(p.k);
      values = e.values;
      flags = e.labels->is_boundary;
    } else {
      values = ev.standard(p.k).values;
      flags.assign(values.size(), 0);
    }
  }
  std::ostringstream s;
  s << csv_header("density", c, p.k, p.split.N(), p.split.M(), kind);
  s << "row,density," << (kind == "uniform-kernel" ? "empty_ball" : "boundary") << '\n';
  s.precision(17);
  for (std::size_t i = 0; i < values.size(); ++i)
    s << p.split.eval_indices[i] << ',' << values[i] << ',' << int(flags[i]) << '\n';
  return {{c.output, s.str()}};
}

Artifacts estimate_command(const std::string& name, const Common& c, const InputFlags& in,
                           const Functional& f, bool entropy_form, double alpha) {
  Prepared p = prepare(in, c);
  PluginEvaluator ev = PluginEvaluator::from_split(p.data, p.split, p.k, p.config);
  const bool bc = !in.no_bias, bd = !in.boundary.no_boundary;
  EstimateReport r;
  if (entropy_form)
    r = renyi_entropy(ev, alpha, p.k, bd, bc);
  else
    r = bc ? bpi_estimate_bc(ev, f, p.k, bd) : bpi_estimate(ev, f, p.k, bd);
  json j = header(name, c, p.k, p.split.N(), p.split.M(), estimator_variant(bc, bd));
  j["config"] = input_config(in, p);
  if (name == "renyi") {
    j["config"]["alpha"] = alpha;
    j["config"]["entropy"] = entropy_form;
  }
  j["report"] = to_json(r);
  return {{c.output, render(j)}};
}

struct MiFlags {
  std::vector<int> x;
  std::vector<int> y;
};

Artifacts cmd_mi(const Common& c, const InputFlags& in, const MiFlags& m) {
  Prepared p = prepare(in, c);
  for (const auto* cols : {&m.x, &m.y})
    for (int v : *cols)
      if (v < 0 || v >= p.data.dim())
        throw UsageError("column " + std::to_string(v) + " out of range for d = " +
                         std::to_string(p.data.dim()));
  const bool bd = !in.boundary.no_boundary;
  const MutualInformationReport r = mutual_information(p.data, p.split, m.x, m.y, p.k, p.config, bd);
  json j = header("mi", c, p.k, p.split.N(), p.split.M(), estimator_variant(true, bd));
  j["config"] = input_config(in, p);
  j["config"]["x"] = m.x;
  j["config"]["y"] = m.y;
  j["mi"] = to_json(r.mi);
  j["h_x"] = to_json(r.h_x);
  j["h_y"] = to_json(r.h_y);
  j["h_xy"] = to_json(r.h_xy);
  return {{c.output, render(j)}};
}

struct TuneFlags {
  std::string functional = "shannon";
  double alpha = 0.5;
  std::size_t n_mc = 1000000;
};

Functional tune_functional(const TuneFlags& t) {
  if (t.functional == "shannon") return shannon_functional();
  try {
    return renyi_functional(t.alpha);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
}

Artifacts cmd_tune(const Common& c, const InputFlags& in, const GeneratorFlags& g,
                   const TuneFlags& t, bool oracle) {
  const Functional f = tune_functional(t);
  if (oracle) {
    check_generator(g);
    check_alpha_frac(in.alpha_frac);
    if (g.dist == "manifold") throw UsageError("oracle tuning needs an analytic density");
    const AnalyticDensity den = generator_density(g);
    const SampleSplit sp = split(g.T, in.alpha_frac, c.seed);
    const TheoryConstants tc = constants_oracle(den, f, t.n_mc, c.seed);
    const OptimalK ok = optimal_k(tc.c1, tc.c2, den.dim, sp.M());
    const std::size_t k = in.k > 0 ? in.k : ok.k;
    const BiasVariance bv = predict_bias_variance(tc, k, sp.N(), sp.M(), den.dim);
    json j = header("tune", c, k, sp.N(), sp.M(), "oracle");
    j["config"] = {{"dist", g.dist}, {"T", g.T},          {"d", den.dim},
                   {"a", g.a},       {"b", g.b},          {"eps", g.eps},
                   {"alpha_frac", in.alpha_frac}, {"functional", f.id},
                   {"alpha", t.functional == "shannon" ? json(nullptr) : json(t.alpha)},
                   {"n_mc", t.n_mc}};
    j["constants"] = to_json(tc);
    j["optimal_k"] = {{"k", ok.k},           {"k0", ok.k0},       {"continuous", ok.continuous},
                      {"clamped", ok.clamped}, {"fallback", ok.fallback}, {"note", ok.note}};
    j["rate_matched_k"] = rate_matched_k(sp.M(), den.dim);
    j["prediction"] = {{"k", k},
                       {"bias", bv.bias},
                       {"variance", bv.variance},
                       {"c1_term", bv.components.c1_term},
                       {"c2_term", bv.components.c2_term},
                       {"c3_term", bv.components.c3_term}};
    return {{c.output, render(j)}};
  }
  Prepared p = prepare(in, c);
  const bool bd = !in.boundary.no_boundary;
  PluginEvaluator ev = PluginEvaluator::from_split(p.data, p.split, p.k, p.config);
  TheoryConstants tc = constants_empirical(ev, f, p.k, bd);
  if (bd) {
    tc.c3 = estimate_c3(ev, f, p.k);
    tc.c3_available = true;
  }
  const BiasVariance bv = predict_bias_variance(tc, p.k, p.split.N(), p.split.M(), p.data.dim());
  json j = header("tune", c, p.k, p.split.N(), p.split.M(), "empirical");
  j["config"] = input_config(in, p);
  j["config"]["functional"] = f.id;
  j["config"]["alpha"] = t.functional == "shannon" ? json(nullptr) : json(t.alpha);
  j["constants"] = to_json(tc);
  j["rate_matched_k"] = rate_matched_k(p.split.M(), p.data.dim());
  j["prediction"] = {{"k", p.k},
                     {"bias_c2_c3", bv.bias},
                     {"variance", bv.variance},
                     {"note", "c1 needs density Hessians; optimal k needs oracle constants"}};
  return {{c.output, render(j)}};
}

struct ExperimentFlags {
  std::string spec_path;
  std::size_t trials = 100;
  std::string trials_csv;
  std::string functional = "shannon";
  double alpha = 0.5;
  std::string k_rule = "rate";
  std::size_t k = 0;
  double alpha_frac = 0.7;
  double truth = 0.0;
  std::size_t truth_mc = 1000000;
  std::size_t oracle_mc = 1000000;
  double ci_level = 0.95;
  bool ci_oracle = false;
  bool no_bias = false;
  BoundaryFlags boundary;
  GeneratorFlags gen;
};

/// Options explicitly given on the command line override the spec file.
struct Given {
  const CLI::App* app;
  bool operator()(const std::string& name) const { return app->count(name) > 0; }
};

TrialSpec experiment_spec(const ExperimentFlags& e, Common& c, const Given& given,
                          std::size_t& trials) {
  TrialSpec s;
  json file;
  if (!e.spec_path.empty()) {
    std::ifstream f(e.spec_path);
    if (!f) throw UsageError("cannot open spec '" + e.spec_path + "'");
    try {
      file = json::parse(f);
    } catch (const json::exception& ex) {
      throw UsageError("spec '" + e.spec_path + "': " + ex.what());
    }
    if (!file.is_object()) throw UsageError("spec must be a JSON object");
  }
  BoundaryFlags bf = e.boundary;
  try {
    auto pick = [&](const char* key, const std::string& flag, auto flag_value, auto& dest) {
      if (given(flag))
        dest = flag_value;
      else if (file.contains(key))
        dest = file[key].get<std::decay_t<decltype(dest)>>();
      else
        dest = flag_value;
    };
    pick("generator", "--dist", e.gen.dist, s.generator);
    pick("d", "--d", e.gen.d, s.d);
    pick("a", "--a", e.gen.a, s.a);
    pick("b", "--b", e.gen.b, s.b);
    pick("eps", "--eps", e.gen.eps, s.eps);
    pick("T", "--T", e.gen.T, s.T);
    pick("alpha_frac", "--alpha-frac", e.alpha_frac, s.alpha_frac);
    pick("functional", "--functional", e.functional, s.functional);
    pick("alpha", "--alpha", e.alpha, s.alpha);
    pick("truth_n_mc", "--truth-mc", e.truth_mc, s.truth_n_mc);
    pick("oracle_n_mc", "--oracle-mc", e.oracle_mc, s.oracle_n_mc);
    pick("ci_level", "--ci-level", e.ci_level, s.ci_level);
    pick("trials", "--trials", e.trials, trials);
    pick("seed", "--seed", c.seed, c.seed);
    std::string rule;
    pick("k_rule", "--k-rule", e.k_rule, rule);
    std::size_t k = 0;
    pick("k", "--k", e.k, k);
    if (given("--k") || (!given("--k-rule") && file.contains("k") && !file.contains("k_rule")))
      rule = "fixed";
    s.k = k;
    s.k_rule = k_rule_from_string(rule);
    bool ci_oracle = false, no_bias = false, no_boundary = false;
    pick("ci_from_oracle", "--ci-oracle", e.ci_oracle, ci_oracle);
    s.ci_from_oracle = ci_oracle;
    if (given("--no-bias-correction"))
      no_bias = true;
    else if (file.contains("bias_correct"))
      no_bias = !file["bias_correct"].get<bool>();
    if (given("--no-boundary-correction"))
      no_boundary = true;
    else if (file.contains("boundary_correct"))
      no_boundary = !file["boundary_correct"].get<bool>();
    s.bias_correct = !no_bias;
    s.boundary_correct = !no_boundary;
    pick("delta", "--delta", e.boundary.delta, bf.delta);
    auto real_or_auto_field = [&](const char* key, const std::string& flag, std::string& dest) {
      if (given(flag) || !file.contains(key)) return;
      dest = file[key].is_string() ? file[key].get<std::string>()
                                   : std::to_string(file[key].get<double>());
    };
    real_or_auto_field("lipschitz", "--lipschitz", bf.lipschitz);
    real_or_auto_field("eps0", "--eps0", bf.eps0);
    if (given("--truth"))
      s.truth = e.truth;
    else if (file.contains("truth") && !file["truth"].is_null())
      s.truth = file["truth"].get<double>();
  } catch (const json::exception& ex) {
    throw UsageError("spec '" + e.spec_path + "': " + ex.what());
  } catch (const InvalidArgument& ex) {
    throw UsageError(ex.what());
  }
  s.seed = c.seed;
  s.boundary = boundary_config(bf);
  check_alpha_frac(s.alpha_frac);
  if (trials < 1) throw UsageError("--trials must be >= 1");
  if (!(s.ci_level > 0.0 && s.ci_level < 1.0)) throw UsageError("--ci-level must lie in (0,1)");
  if (s.k_rule == KRule::fixed && s.k < 3) throw UsageError("a fixed k must be >= 3");
  if (!s.truth && s.truth_n_mc < 10000) throw UsageError("--truth-mc must be >= 10000");
  try {
    make_density(s);
    make_functional(s);
  } catch (const InvalidArgument& ex) {
    throw UsageError(ex.what());
  }
  return s;
}

json spec_json(const TrialSpec& s, std::size_t trials) {
  json j;
  j["generator"] = s.generator;
  j["d"] = s.d;
  j["a"] = s.a;
  j["b"] = s.b;
  j["eps"] = s.eps;
  j["T"] = s.T;
  j["alpha_frac"] = s.alpha_frac;
  j["k_rule"] = to_string(s.k_rule);
  j["k"] = s.k;
  j["functional"] = s.functional;
  j["alpha"] = s.alpha;
  j["boundary_correct"] = s.boundary_correct;
  j["bias_correct"] = s.bias_correct;
  j["seed"] = s.seed;
  const json b = to_json(s.boundary);
  j["delta"] = b["delta"];
  j["lipschitz"] = b["lipschitz"];
  j["eps0"] = b["eps0"];
  j["ci_level"] = s.ci_level;
  j["ci_from_oracle"] = s.ci_from_oracle;
  j["truth"] = s.truth ? json(*s.truth) : json(nullptr);
  j["truth_n_mc"] = s.truth_n_mc;
  j["oracle_n_mc"] = s.oracle_n_mc;
  j["trials"] = trials;
  return j;
}

Artifacts cmd_experiment(Common& c, const ExperimentFlags& e, const Given& given) {
  std::size_t trials = e.trials;
  const TrialSpec s = experiment_spec(e, c, given, trials);
  const TrialResults r = monte_carlo(s, trials);
  const std::string variant = estimator_variant(s.bias_correct, s.boundary_correct);

  json j = header("experiment", c, r.k, r.N, r.M, variant);
  j["config"] = spec_json(s, trials);
  j["truth"] = r.truth;
  json summary;
  summary["mean"] = r.summary.mean;
  summary["bias"] = r.summary.bias;
  summary["variance"] = r.summary.variance;
  summary["mse"] = r.summary.mse;
  summary["coverage"] = r.summary.coverage;
  std::optional<NormalityDiagnostics> nd;
  if (trials >= 20 && r.summary.variance > 0.0) nd = normality_diagnostics(r.estimates);
  summary["ks_statistic"] = nd ? json(nd->ks_statistic) : json(nullptr);
  summary["ks_p"] = nd ? json(nd->p_value) : json(nullptr);
  j["summary"] = summary;
  j["warnings"] = r.warnings;

  std::ostringstream csv;
  csv << csv_header("experiment", c, r.k, r.N, r.M, variant);
  csv << "trial,estimate,variance_estimate,covered,boundary_points\n";
  csv.precision(17);
  for (std::size_t t = 0; t < r.estimates.size(); ++t)
    csv << t << ',' << r.estimates[t] << ',' << r.variance_estimates[t] << ','
        << int(r.covered[t]) << ',' << r.boundary_points[t] << '\n';

  Artifacts out = {{c.output, render(j)}};
  std::string csv_path = e.trials_csv;
  if (csv_path.empty() && c.output != "-") csv_path = c.output + ".trials.csv";
  if (!csv_path.empty()) out.push_back({csv_path, csv.str()});
  return out;
}

struct DimensionFlags {
  std::string input;
  bool header = false;
  std::size_t k1 = 10;
  std::size_t k2 = 0;
  double gamma = 1.0;
  std::string variant = "independent";
  double alpha_frac = 0.7;
  std::size_t m_per_half = 0;
  std::size_t window = 0;
  std::size_t stride = 0;
};

void check_dimension_flags(const DimensionFlags& f) {
  check_alpha_frac(f.alpha_frac);
  if (f.k1 < 3) throw UsageError("--k1 must be >= 3");
  if (f.k2 != 0 && f.k2 <= f.k1) throw UsageError("--k2 must exceed --k1");
  if (!(f.gamma > 0.0)) throw UsageError("--gamma must be positive");
}

Artifacts cmd_dimension(const Common& c, const DimensionFlags& f) {
  check_dimension_flags(f);
  const Dataset data = read_input(f.input, f.header);
  DimensionOptions o;
  o.k1 = f.k1;
  o.k2 = f.k2;
  o.gamma = f.gamma;
  o.variant = dimension_variant_from_string(f.variant);
  o.alpha_frac = f.alpha_frac;
  if (f.m_per_half > 0) o.M_per_half = f.m_per_half;
  o.seed = c.seed;
  const DimensionEstimate e = estimate_dimension(data, o);
  json j = header("dimension", c, e.k1, e.N, e.M, to_string(e.variant));
  j["config"] = {{"input", f.input},       {"header", f.header},   {"k1", e.k1},
                 {"k2", e.k2},             {"gamma", e.gamma},     {"alpha_frac", f.alpha_frac},
                 {"m_per_half", f.m_per_half > 0 ? json(f.m_per_half) : json(nullptr)},
                 {"T", data.count()},      {"D", data.dim()}};
  j["d_hat"] = e.d_hat;
  j["d_rounded"] = e.d_rounded;
  j["alpha_hat"] = e.alpha_hat;
  j["L_k1"] = e.L_k1;
  j["L_k2"] = e.L_k2;
  j["variance_estimate"] = e.variance_estimate ? json(*e.variance_estimate) : json(nullptr);
  j["variance_note"] = e.variance_note;
  return {{c.output, render(j)}};
}

Artifacts cmd_dimension_scan(const Common& c, const DimensionFlags& f) {
  check_dimension_flags(f);
  const std::size_t k2 = f.k2 == 0 ? 2 * f.k1 : f.k2;
  if (f.stride < 1) throw UsageError("--stride must be >= 1");
  if (f.window < 8 * k2) throw UsageError("--window must be >= 8 * k2");
  const Dataset data = read_input(f.input, f.header);
  if (f.window > data.count())
    throw UsageError("--window exceeds the series length " + std::to_string(data.count()));
  const auto w = anomaly_scan(data, f.window, f.stride, f.k1, k2, f.gamma, c.seed, f.alpha_frac);
  const std::size_t M = static_cast<std::size_t>(std::round(f.alpha_frac * (f.window / 2)));
  std::ostringstream s;
  s << csv_header("dimension-scan", c, f.k1, f.window / 2 - M, M, "correlated");
  s << "start,d_hat,d_rounded,error\n";
  s.precision(17);
  for (const auto& e : w) {
    s << e.start << ',';
    if (e.d_hat) s << *e.d_hat;
    std::string msg = e.error;
    std::replace(msg.begin(), msg.end(), ',', ';');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    s << ',' << e.d_rounded << ',' << msg << '\n';
  }
  return {{c.output, s.str()}};
}

struct StructureFlags {
  std::string models;
  std::size_t N = 2000;
  std::size_t M = 8000;
  std::size_t k = 20;
};

Factorization parse_model(const std::string& label, const json& j) {
  Factorization f;
  f.label = label;
  if (!j.is_array()) throw UsageError("model '" + label + "' must be a list of column lists");
  for (const auto& factor : j) {
    if (!factor.is_array()) throw UsageError("model '" + label + "' factors must be lists");
    std::vector<int> cols;
    for (const auto& v : factor) {
      if (!v.is_number_integer()) throw UsageError("model '" + label + "' has a non-integer column");
      cols.push_back(v.get<int>());
    }
    f.factors.push_back(std::move(cols));
  }
  return f;
}

Artifacts cmd_structure(const Common& c, const InputFlags& in, const StructureFlags& sf) {
  const BoundaryConfig cfg = boundary_config(in.boundary);
  if (sf.k < 3) throw UsageError("--k must be >= 3");
  if (sf.N < 1 || sf.M < 1) throw UsageError("--N and --M must be positive");
  json spec;
  {
    std::ifstream f(sf.models);
    if (!f) throw UsageError("cannot open models '" + sf.models + "'");
    try {
      spec = json::parse(f);
    } catch (const json::exception& e) {
      throw UsageError("models '" + sf.models + "': " + e.what());
    }
  }
  if (!spec.is_object() || !spec.contains("models") || !spec["models"].is_object())
    throw UsageError("models file needs an object field \"models\"");
  std::map<std::string, Factorization> models;
  for (const auto& [label, m] : spec["models"].items()) models[label] = parse_model(label, m);
  std::vector<std::pair<std::string, std::string>> pairs;
  if (spec.contains("pairs")) {
    for (const auto& p : spec["pairs"]) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_string() || !p[1].is_string())
        throw UsageError("each pair must be [label, label]");
      const std::string a = p[0].get<std::string>(), b = p[1].get<std::string>();
      if (!models.count(a) || !models.count(b))
        throw UsageError("pair names an unknown model");
      pairs.emplace_back(a, b);
    }
  } else {
    for (auto i = models.begin(); i != models.end(); ++i)
      for (auto j = std::next(i); j != models.end(); ++j) pairs.emplace_back(i->first, j->first);
  }
  if (pairs.empty()) throw UsageError("no model pairs to compare");

  const Dataset data = read_input(in.input, in.header);
  for (const auto& [label, m] : models) {
    try {
      validate_factorization(m, data.dim());
    } catch (const InvalidArgument& e) {
      throw UsageError("model '" + label + "': " + e.what());
    }
  }
  const SampleBudget budget{sf.N, sf.M};
  json j = header("structure", c, sf.k, sf.N, sf.M, "bpi_bias_corrected+boundary");
  j["config"] = {{"input", in.input}, {"header", in.header}, {"models", sf.models},
                 {"V", data.count()}, {"d", data.dim()},     {"boundary", to_json(cfg)}};
  json out = json::array();
  for (const auto& [a, b] : pairs) {
    ModelComparison m;
    try {
      m = compare_models(data, models[a], models[b], sf.k, budget, c.seed, std::nullopt, cfg);
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
    out.push_back({{"model_n", a},
                   {"model_l", b},
                   {"statistic", m.statistic},
                   {"decision", m.decision},
                   {"cross_entropy_n", m.cross_entropy_n},
                   {"cross_entropy_l", m.cross_entropy_l},
                   {"dimension_vector_n", dimension_vector(models[a], data.dim())},
                   {"dimension_vector_l", dimension_vector(models[b], data.dim())},
                   {"prediction_available", m.prediction_available},
                   {"note", m.note}});
  }
  j["comparisons"] = out;
  return {{c.output, render(j)}};
}

void write_all(const Artifacts& artifacts, std::ostream& out) {
  // Render everything first; files are only touched once the command succeeded.
  for (const auto& a : artifacts) {
    if (a.path == "-") {
      out << a.body;
      continue;
    }
    std::ofstream f(a.path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write '" + a.path + "'");
    f << a.body;
    if (!f) throw Error("write failed for '" + a.path + "'");
  }
  out.flush();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bipartite plug-in k-NN estimators of density functionals", "bpi"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "bpi 0.1.0");

  Common common;
  InputFlags in;
  GeneratorFlags gen;

  auto* generate = app.add_subcommand("generate", "Write samples from a synthetic density as CSV");
  add_common(generate, common);
  add_generator(generate, gen, true);

  DensityFlags dens;
  auto* density = app.add_subcommand("density", "k-NN density at the evaluation points (CSV)");
  add_common(density, common);
  add_input(density, in);
  density->add_option("--estimator", dens.estimator, "standard | corrected | uniform-kernel")
      ->check(CLI::IsMember({"standard", "corrected", "uniform-kernel"}))
      ->capture_default_str();

  auto* entropy = app.add_subcommand("entropy", "Shannon entropy estimate (JSON)");
  add_common(entropy, common);
  add_input(entropy, in);

  double alpha = 0.5;
  bool renyi_entropy_form = false;
  auto* renyi = app.add_subcommand("renyi", "Renyi integral or entropy estimate (JSON)");
  add_common(renyi, common);
  add_input(renyi, in);
  renyi->add_option("--alpha", alpha, "Renyi order in (0,2), not 1")->capture_default_str();
  renyi->add_flag("--entropy", renyi_entropy_form, "Report the Renyi entropy instead of the integral");

  MiFlags mi_flags;
  auto* mi = app.add_subcommand("mi", "Mutual information between two column blocks (JSON)");
  add_common(mi, common);
  add_input(mi, in);
  mi->add_option("--x", mi_flags.x, "Columns of X (0-based, comma separated)")
      ->required()
      ->delimiter(',');
  mi->add_option("--y", mi_flags.y, "Columns of Y (0-based, comma separated)")
      ->required()
      ->delimiter(',');

  TuneFlags tune_flags;
  GeneratorFlags tune_gen;
  auto* tune = app.add_subcommand("tune", "Bias and variance constants and k (JSON)");
  add_common(tune, common);
  auto* tune_input = tune->add_option("-i,--input", in.input, "CSV data file (empirical mode)");
  tune->add_flag("--header", in.header, "Skip the first non-comment line of the input");
  tune->add_option("--alpha-frac", in.alpha_frac, "Reference fraction M / T")->capture_default_str();
  tune->add_option("--k", in.k, "Evaluate constants and predictions at this k");
  add_boundary(tune, in.boundary);
  std::string tune_dist;
  auto* tune_oracle = tune->add_option("--dist", tune_dist, "Analytic density (oracle mode)")
                          ->check(CLI::IsMember({"uniform", "beta-uniform", "beta-pair"}));
  tune->add_option("--T", tune_gen.T, "Sample count (oracle mode)")->capture_default_str();
  tune->add_option("--d", tune_gen.d, "Dimension (oracle mode)")->capture_default_str();
  tune->add_option("--a", tune_gen.a, "Beta shape a (oracle mode)")->capture_default_str();
  tune->add_option("--b", tune_gen.b, "Beta shape b (oracle mode)")->capture_default_str();
  tune->add_option("--eps", tune_gen.eps, "Uniform weight (oracle mode)")->capture_default_str();
  tune->add_option("--n-mc", tune_flags.n_mc, "Oracle Monte Carlo draws")->capture_default_str();
  tune->add_option("--functional", tune_flags.functional, "shannon | renyi")
      ->check(CLI::IsMember({"shannon", "renyi"}))
      ->capture_default_str();
  tune->add_option("--alpha", tune_flags.alpha, "Renyi order")->capture_default_str();
  tune_input->excludes(tune_oracle);
  tune_oracle->excludes(tune_input);

  ExperimentFlags ex;
  auto* experiment = app.add_subcommand("experiment", "Seeded Monte Carlo trials (JSON + CSV)");
  add_common(experiment, common);
  experiment->add_option("--spec", ex.spec_path, "Trial spec JSON; explicit flags override it");
  experiment->add_option("--trials", ex.trials, "Number of trials")->capture_default_str();
  experiment->add_option("--trials-csv", ex.trials_csv,
                         "Per-trial CSV path (default <output>.trials.csv)");
  add_generator(experiment, ex.gen, false);
  experiment->add_option("--alpha-frac", ex.alpha_frac, "Reference fraction")->capture_default_str();
  auto* ex_k = experiment->add_option("--k", ex.k, "Fixed neighbor count");
  auto* ex_rule = experiment->add_option("--k-rule", ex.k_rule, "rate | optimal | fixed")
                      ->check(CLI::IsMember({"rate", "optimal", "fixed"}))
                      ->capture_default_str();
  ex_k->excludes(ex_rule);
  ex_rule->excludes(ex_k);
  experiment->add_option("--functional", ex.functional, "shannon | renyi | renyi_entropy")
      ->check(CLI::IsMember({"shannon", "renyi", "renyi_entropy"}))
      ->capture_default_str();
  experiment->add_option("--alpha", ex.alpha, "Renyi order")->capture_default_str();
  experiment->add_option("--truth", ex.truth, "Known true value (default: Monte Carlo oracle)");
  experiment->add_option("--truth-mc", ex.truth_mc, "Draws for the truth oracle")
      ->capture_default_str();
  experiment->add_option("--oracle-mc", ex.oracle_mc, "Draws for oracle constants")
      ->capture_default_str();
  experiment->add_option("--ci-level", ex.ci_level, "Confidence level")->capture_default_str();
  experiment->add_flag("--ci-oracle", ex.ci_oracle, "Use oracle c4, c5 for the intervals");
  experiment->add_flag("--no-bias-correction", ex.no_bias, "Uncorrected plug-in estimator");
  add_boundary(experiment, ex.boundary);

  DimensionFlags dim;
  auto add_dim = [&](CLI::App* a) {
    add_common(a, common);
    a->add_option("-i,--input", dim.input, "CSV data file")->required();
    a->add_flag("--header", dim.header, "Skip the first non-comment line of the input");
    a->add_option("--k1", dim.k1, "Smaller neighbor count")->capture_default_str();
    a->add_option("--k2", dim.k2, "Larger neighbor count (default 2 k1)");
    a->add_option("--gamma", dim.gamma, "Length exponent")->capture_default_str();
    a->add_option("--alpha-frac", dim.alpha_frac, "Reference fraction within each half")
        ->capture_default_str();
  };
  auto* dimension = app.add_subcommand("dimension", "Intrinsic dimension estimate (JSON)");
  add_dim(dimension);
  dimension->add_option("--variant", dim.variant, "independent | correlated")
      ->check(CLI::IsMember({"independent", "correlated"}))
      ->capture_default_str();
  dimension->add_option("--m-per-half", dim.m_per_half, "Reference rows per half");
  auto* scan = app.add_subcommand("dimension-scan", "Sliding-window dimension trace (CSV)");
  add_dim(scan);
  scan->add_option("--window", dim.window, "Window length")->required();
  scan->add_option("--stride", dim.stride, "Window stride")->required();

  StructureFlags st;
  auto* structure = app.add_subcommand("structure", "Compare factorizations by cross-entropy (JSON)");
  add_common(structure, common);
  structure->add_option("-i,--input", in.input, "CSV data file")->required();
  structure->add_flag("--header", in.header, "Skip the first non-comment line of the input");
  structure->add_option("--models", st.models, "Models JSON")->required();
  structure->add_option("--k", st.k, "Neighbor count")->capture_default_str();
  structure->add_option("--N", st.N, "Evaluation rows per factor slice")->capture_default_str();
  structure->add_option("--M", st.M, "Reference rows per factor slice")->capture_default_str();
  add_boundary(structure, in.boundary);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    if (!rev.empty()) rev.pop_back();
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion& e) {
    out << e.what() << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "bpi: " << e.what() << "\nRun with --help for usage.\n";
    return 2;
  }

  try {
    set_num_threads(common.threads);
    Artifacts artifacts;
    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "generate") {
      artifacts = cmd_generate(common, gen);
    } else if (name == "density") {
      artifacts = cmd_density(common, in, dens);
    } else if (name == "entropy") {
      artifacts = estimate_command("entropy", common, in, shannon_functional(), false, 0.0);
    } else if (name == "renyi") {
      Functional f;
      try {
        f = renyi_functional(alpha);
      } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
      }
      artifacts = estimate_command("renyi", common, in, f, renyi_entropy_form, alpha);
    } else if (name == "mi") {
      artifacts = cmd_mi(common, in, mi_flags);
    } else if (name == "tune") {
      const bool oracle = !tune_dist.empty();
      if (!oracle && in.input.empty()) throw UsageError("tune needs --input or --dist");
      tune_gen.dist = oracle ? tune_dist : tune_gen.dist;
      artifacts = cmd_tune(common, in, tune_gen, tune_flags, oracle);
    } else if (name == "experiment") {
      artifacts = cmd_experiment(common, ex, Given{experiment});
    } else if (name == "dimension") {
      artifacts = cmd_dimension(common, dim);
    } else if (name == "dimension-scan") {
      artifacts = cmd_dimension_scan(common, dim);
    } else if (name == "structure") {
      artifacts = cmd_structure(common, in, st);
    }
    write_all(artifacts, out);
    return 0;
  } catch (const UsageError& e) {
    err << "bpi: usage: " << e.what() << '\n';
    return 2;
  } catch (const DataQualityError& e) {
    err << "bpi: data error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "bpi: error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace bpi::cli
