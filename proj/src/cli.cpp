#include "polymerlab/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "polymerlab/analytics.hpp"
#include "polymerlab/csv.hpp"
#include "polymerlab/error.hpp"
#include "polymerlab/localization.hpp"
#include "polymerlab/parallel.hpp"
#include "polymerlab/percolation.hpp"
#include "polymerlab/spine.hpp"
#include "polymerlab/treesim.hpp"

namespace polymerlab {

using json = nlohmann::json;

namespace {

constexpr const char* kDefaultLaw = "discrete:1@0.25,-1@0.75";

double parse_double(const std::string& s, const std::string& what) {
  const char* begin = s.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') throw UsageError("malformed number in " + what, s);
  return v;
}

std::string real(double x) { return format_real(x); }

template <class T>
std::string integer(T x) {
  return std::to_string(x);
}

json number_or_string(double x) {
  if (std::isfinite(x)) return x;
  return x > 0 ? "inf" : (x < 0 ? "-inf" : "nan");
}

struct Output {
  std::string text;
  bool csv = true;
  json results = json::object();
};

struct Params {
  std::uint64_t salt = 0;
  int workers = 0;
  std::string out = "-";
  int d = 2;
  std::string law = kDefaultLaw;
  std::uint64_t seed = 0;
  int depth = 20;
  std::string beta = "0.5";
  std::string alpha;
  std::string engine = "array";
  double rho = 0.9;
  int rays = 100;
  std::string delta = "default";
  double c = 0.2;
  std::string p = "0.20:0.50:0.02";
  int replicas = 200;
  bool pc_line = false;
  bool running_min = false;
  std::string mode = "h-estimate";
  std::uint64_t walks = 20000;
  std::uint64_t max_steps = 1000000;
  std::string x_grid;
  double spine_p = 0.6;
  bool constant_schedule = false;
  std::string file;
};

Model make_model(const Params& p) { return Model(p.d, WeightLaw::parse(p.law)); }

double single(const std::string& text, const std::string& what) {
  auto v = parse_grid(text);
  if (v.size() != 1) throw UsageError(what + " expects a single value", text);
  return v.front();
}

std::function<double()> stream_fn(UniformStream& s) {
  return [&s] { return s(); };
}

Output run_analytic(const Params& p) {
  const Model model = make_model(p);
  const AnalyticProfile prof = build_profile(model, {}, {}, p.workers);
  std::ostringstream os;
  CsvWriter w(os, {"beta", "lambda", "lambda_prime", "f", "phi"});
  for (std::size_t i = 0; i < prof.free_energy_curve.size(); ++i) {
    const double b = prof.free_energy_curve[i].first;
    w.row({real(b), real(log_mgf(model.law, b)), real(log_mgf_deriv(model.law, b)), real(prof.entropy_curve[i].second),
           real(prof.free_energy_curve[i].second)});
  }
  Output o{os.str()};
  o.results = {{"beta_c", number_or_string(prof.beta_c)},
               {"slope_c", number_or_string(prof.slope_c)},
               {"d", model.d},
               {"law", model.law.to_string()}};
  return o;
}

Output run_threshold(const Params& p) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g\n", rho_percolation_pc(p.d, p.rho));
  return {buf, false};
}

Output run_simulate(const Params& p) {
  const DisorderOracle oracle(make_model(p), p.seed);
  const std::vector<double> betas = p.beta.empty() ? std::vector<double>{} : parse_grid(p.beta);
  const std::vector<double> alphas = p.alpha.empty() ? std::vector<double>{} : parse_grid(p.alpha);
  ScanOptions opts;
  if (p.engine == "stream") {
    opts.engine = Engine::Stream;
    if (!alphas.empty())
      throw UnsupportedError("the streaming engine computes log_Z and max_sum only", "drop --alpha or use --engine array");
  } else if (p.engine != "array") {
    throw UsageError("unknown engine", "array|stream");
  }
  opts.workers = p.workers;
  const auto levels = level_scan(oracle, p.depth, betas, alphas, opts);
  std::ostringstream os;
  CsvWriter w(os, {"n", "beta", "log_Z", "log_M", "max_sum", "alpha", "count"});
  for (const auto& lv : levels) {
    for (std::size_t b = 0; b < betas.size(); ++b)
      w.row({integer(lv.level), real(betas[b]), real(lv.log_Z[b]), real(lv.log_M[b]), real(lv.max_sum), "", ""});
    for (std::size_t a = 0; a < lv.counts.size(); ++a)
      w.row({integer(lv.level), "", "", "", real(lv.max_sum), real(alphas[a]), integer(lv.counts[a])});
  }
  return {os.str()};
}

Output run_gibbs(const Params& p) {
  const DisorderOracle oracle(make_model(p), p.seed);
  const double beta = single(p.beta, "--beta");
  if (p.rays < 1) throw UsageError("--rays must be >= 1");
  const GibbsSampler sampler(oracle, p.depth, beta, p.workers);
  std::vector<RayTrace> traces(p.rays);
  parallel_for(traces.size(), p.workers, [&](std::size_t r) {
    UniformStream s(derive_seed(p.salt, StreamTag::Ray, r));
    traces[r] = sampler.sample(stream_fn(s));
  });
  std::ostringstream os;
  CsvWriter w(os, {"ray_id", "n", "prefix_sum", "log_ball_mass"});
  for (std::size_t r = 0; r < traces.size(); ++r)
    for (int k = 0; k < p.depth; ++k)
      w.row({integer(r), integer(k + 1), real(traces[r].prefix_sums[k]), real(traces[r].log_ball_mass[k])});
  Output o{os.str()};
  o.results = {{"log_Z", sampler.log_partition()}};
  return o;
}

Output run_subtree(const Params& p) {
  const Model model = make_model(p);
  const DisorderOracle oracle(model, p.seed);
  const double beta = single(p.beta, "--beta");
  const DeltaSchedule schedule =
      p.delta == "default" ? DeltaSchedule::default_for(model, beta) : DeltaSchedule::parse(p.delta);
  const SubtreeReport rep = extract_supporting_subtree(oracle, p.depth, beta, schedule, p.workers);
  std::ostringstream os;
  CsvWriter w(os, {"n", "size", "log_restricted_sum", "survivor_fraction"});
  for (const auto& lv : rep.levels)
    w.row({integer(lv.n), integer(lv.size), real(lv.log_restricted_sum), real(lv.survivor_fraction)});
  Output o{os.str()};
  o.results = {{"schedule", schedule.to_string()},
               {"growth_rate", number_or_string(rep.growth.slope)},
               {"growth_rate_stderr", number_or_string(rep.growth.slope_stderr)},
               {"restricted_free_energy", number_or_string(rep.free_energy.slope)},
               {"restricted_free_energy_stderr", number_or_string(rep.free_energy.slope_stderr)},
               {"first_empty_level", rep.first_empty_level},
               {"ball_mass_fraction", rep.ball_mass_fraction},
               {"f_beta", entropy_f(model, beta)},
               {"phi_beta", free_energy(model, beta)}};
  return o;
}

Output run_topk(const Params& p) {
  const DisorderOracle oracle(make_model(p), p.seed);
  const TopKResult r = topk_restricted_energy(oracle, p.depth, single(p.beta, "--beta"), p.c, p.workers);
  std::ostringstream os;
  CsvWriter w(os, {"empirical", "predicted", "phi_beta", "k"});
  w.row({real(r.empirical), real(r.predicted), real(r.phi_beta), integer(r.k)});
  return {os.str()};
}

Output run_percolation(const Params& p) {
  const std::vector<double> grid = parse_grid(p.p);
  const auto runs = percolation_curve(p.d, p.rho, grid, p.depth, p.replicas, p.salt, p.workers,
                                      p.running_min ? Surrogate::RunningMin : Surrogate::Terminal);
  std::vector<std::string> header{"p", "rho", "depth", "replicas", "occurrence_freq", "mean_best_fraction"};
  const double pc = rho_percolation_pc(p.d, p.rho);
  if (p.pc_line) header.push_back("pc");
  std::ostringstream os;
  CsvWriter w(os, header);
  for (const auto& run : runs) {
    std::vector<std::string> row{real(run.p),        real(run.rho),
                                 integer(run.depth), integer(run.replicas),
                                 real(run.occurrence_freq), real(run.mean_best_fraction)};
    if (p.pc_line) row.push_back(real(pc));
    w.row(row);
  }
  Output o{os.str()};
  o.results = {{"pc", pc}};
  return o;
}

void write_spines(std::ostream& os, const std::vector<SpinePath>& paths, int depth) {
  CsvWriter w(os, {"replica", "n", "running_average", "prefix_deviation"});
  const std::vector<int> marks = log_checkpoints(depth);
  for (std::size_t r = 0; r < paths.size(); ++r) {
    double sum = 0.0;
    std::size_t next = 0;
    for (int n = 1; n <= depth && next < marks.size(); ++n) {
      sum += paths[r].weights[n - 1];
      if (n != marks[next]) continue;
      ++next;
      w.row({integer(r), integer(n), real(sum / n), real(paths[r].prefix_deviation[n - 1])});
    }
  }
}

Output run_spine(const Params& p) {
  std::ostringstream os;
  Output o;
  if (p.replicas < 1) throw UsageError("--replicas must be >= 1");
  if (p.mode == "h-estimate") {
    const Model model = make_model(p);
    const std::vector<double> grid = p.x_grid.empty() ? std::vector<double>{} : parse_grid(p.x_grid);
    const RenewalEstimate est = estimate_h(model, grid, p.walks, p.max_steps, p.salt, p.workers);
    CsvWriter w(os, {"x", "h_hat", "stderr", "truncated_fraction"});
    for (std::size_t i = 0; i < est.x_grid.size(); ++i)
      w.row({real(est.x_grid[i]), real(est.h_hat[i]), real(est.std_err[i]), real(est.truncated_fraction)});
    o.results = {{"walks_used", est.walks_used}, {"truncated_fraction", est.truncated_fraction}};
  } else if (p.mode == "conditioned") {
    const Model model = make_model(p);
    const SpineSetup setup = spine_setup(model);
    const RenewalEstimate est = estimate_h(model, {}, p.walks, p.max_steps, p.salt, p.workers);
    const RenewalFunction h = interpolate_h(est, true);
    std::vector<SpinePath> paths(p.replicas);
    parallel_for(paths.size(), p.workers, [&](std::size_t r) {
      UniformStream s(derive_seed(p.salt, StreamTag::Spine, r));
      paths[r] = conditioned_spine(setup, h, p.depth, stream_fn(s));
    });
    write_spines(os, paths, p.depth);
    o.results = {{"beta_c", setup.beta_c}, {"drift", setup.drift}, {"h_truncated_fraction", est.truncated_fraction}};
  } else if (p.mode == "bernoulli") {
    std::vector<SpinePath> paths(p.replicas);
    parallel_for(paths.size(), p.workers, [&](std::size_t r) {
      UniformStream s(derive_seed(p.salt, StreamTag::Spine, r));
      paths[r] = tilted_bernoulli_spine(p.spine_p, p.d, p.depth, stream_fn(s), p.constant_schedule);
    });
    write_spines(os, paths, p.depth);
    if (p.spine_p < 1.0) o.results = {{"crossover", schedule_crossover(p.spine_p)}};
  } else {
    throw UsageError("unknown spine mode", "h-estimate|conditioned|bernoulli");
  }
  o.text = os.str();
  return o;
}

Output run_check(const Params& p) {
  std::string text;
  if (p.file == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    text = ss.str();
  } else {
    std::ifstream in(p.file, std::ios::binary);
    if (!in) throw ResourceError("cannot open file", p.file);
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  const CsvCheck c = check_csv(text);
  if (!c.ok) throw DomainError("csv check failed: " + c.message, p.file);
  return {"ok rows=" + std::to_string(c.rows) + " columns=" + std::to_string(c.columns) + "\n", false};
}

void emit_error(std::ostream& err, const std::string& code, const std::string& message, const std::string& context) {
  err << json{{"code", code}, {"message", message}, {"context", context}}.dump() << "\n";
}

std::string option_key(const CLI::Option* opt) {
  std::string n = opt->get_name();
  while (!n.empty() && n.front() == '-') n.erase(n.begin());
  return n;
}

}  // namespace

std::vector<double> parse_grid(const std::string& text) {
  if (text.empty()) throw UsageError("empty grid");
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() != 3) throw UsageError("range grids take lo:hi:step", text);
    const double lo = parse_double(parts[0], text), hi = parse_double(parts[1], text),
                 step = parse_double(parts[2], text);
    if (!(step > 0.0) || hi < lo) throw UsageError("range grid needs step > 0 and hi >= lo", text);
    const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9)) + 1;
    std::vector<double> v(n);
    for (long k = 0; k < n; ++k) v[k] = lo + k * step;
    return v;
  }
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) v.push_back(parse_double(item, text));
  return v;
}

std::vector<int> log_checkpoints(int depth) {
  std::vector<int> marks;
  for (int k = 0;; ++k) {
    const int n = static_cast<int>(std::lround(std::pow(10.0, k / 10.0)));
    if (n >= depth) break;
    if (marks.empty() || marks.back() != n) marks.push_back(n);
  }
  marks.push_back(depth);
  return marks;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Params p;
  CLI::App app{"Directed polymers on disordered d-ary trees"};
  app.name("polymerlab");
  app.require_subcommand(1);

  std::set<std::string> flag_keys;
  auto common = [&](CLI::App* sub, bool csv_out) {
    sub->option_defaults()->always_capture_default();
    sub->add_option("--salt", p.salt, "run salt for replica, ray, walk and spine streams")->capture_default_str();
    sub->add_option("--workers", p.workers, "worker threads (0: all cores)")->capture_default_str();
    if (csv_out) sub->add_option("--out", p.out, "output CSV path, - for stdout")->capture_default_str();
  };
  auto model_opts = [&](CLI::App* sub) {
    sub->add_option("--d", p.d, "branching number")->capture_default_str();
    sub->add_option("--law", p.law, "weight law")->capture_default_str();
  };
  auto flag = [&](CLI::App* sub, const std::string& name, bool& target, const std::string& help) {
    sub->add_flag(name, target, help);
    flag_keys.insert(name.substr(2));
  };

  auto* analytic = app.add_subcommand("analytic", "free energy, entropy and critical temperature curves");
  common(analytic, true);
  model_opts(analytic);

  auto* threshold = app.add_subcommand("percolation-threshold", "rho-percolation threshold p_c");
  common(threshold, false);
  threshold->add_option("--d", p.d, "branching number")->capture_default_str();
  threshold->add_option("--rho", p.rho, "required open fraction")->capture_default_str();

  auto* simulate = app.add_subcommand("simulate", "per-generation partition functions, maxima and counts");
  common(simulate, true);
  model_opts(simulate);
  simulate->add_option("--seed", p.seed, "disorder seed")->capture_default_str();
  simulate->add_option("--depth", p.depth, "tree depth")->capture_default_str();
  simulate->add_option("--beta", p.beta, "inverse temperatures: a,b,c or lo:hi:step")->capture_default_str();
  simulate->add_option("--alpha", p.alpha, "count levels: a,b,c or lo:hi:step");
  simulate->add_option("--engine", p.engine, "array|stream")->capture_default_str();

  auto* gibbs = app.add_subcommand("gibbs-ray", "exact samples from the finite-volume Gibbs measure");
  common(gibbs, true);
  model_opts(gibbs);
  gibbs->add_option("--seed", p.seed, "disorder seed")->capture_default_str();
  gibbs->add_option("--depth", p.depth, "tree depth")->capture_default_str();
  gibbs->add_option("--beta", p.beta, "inverse temperature")->capture_default_str();
  gibbs->add_option("--rays", p.rays, "number of rays")->capture_default_str();

  auto* subtree = app.add_subcommand("subtree", "prefix-filtered supporting subtree");
  common(subtree, true);
  model_opts(subtree);
  subtree->add_option("--seed", p.seed, "disorder seed")->capture_default_str();
  subtree->add_option("--depth", p.depth, "tree depth")->capture_default_str();
  subtree->add_option("--beta", p.beta, "inverse temperature")->capture_default_str();
  subtree->add_option("--delta", p.delta, "default, inf, const:x or a/sqrt:a")->capture_default_str();

  auto* topk = app.add_subcommand("topk", "partition sum restricted to the exp(cn) best vertices");
  common(topk, true);
  model_opts(topk);
  topk->add_option("--seed", p.seed, "disorder seed")->capture_default_str();
  topk->add_option("--depth", p.depth, "tree depth")->capture_default_str();
  topk->add_option("--beta", p.beta, "inverse temperature")->capture_default_str();
  topk->add_option("--c", p.c, "exponential size of the restricted set")->capture_default_str();

  auto* perc = app.add_subcommand("percolation", "rho-percolation occurrence curve");
  common(perc, true);
  perc->add_option("--d", p.d, "branching number")->capture_default_str();
  perc->add_option("--rho", p.rho, "required open fraction")->capture_default_str();
  perc->add_option("--p", p.p, "open probabilities: a,b,c or lo:hi:step")->capture_default_str();
  perc->add_option("--depth", p.depth, "tree depth")->capture_default_str();
  perc->add_option("--replicas", p.replicas, "replicas per grid point")->capture_default_str();
  flag(perc, "--pc-line", p.pc_line, "append the analytic threshold as a column");
  flag(perc, "--running-min", p.running_min, "use the running-minimum surrogate");

  auto* spine = app.add_subcommand("spine", "renewal function and spine samplers");
  common(spine, true);
  model_opts(spine);
  spine->add_option("--mode", p.mode, "h-estimate|conditioned|bernoulli")->capture_default_str();
  spine->add_option("--depth", p.depth, "spine length")->capture_default_str();
  spine->add_option("--replicas", p.replicas, "number of spines")->capture_default_str();
  spine->add_option("--walks", p.walks, "walks for the renewal estimate")->capture_default_str();
  spine->add_option("--max-steps", p.max_steps, "walk truncation")->capture_default_str();
  spine->add_option("--x-grid", p.x_grid, "renewal grid: a,b,c or lo:hi:step");
  spine->add_option("--p", p.spine_p, "Bernoulli parameter for --mode bernoulli")->capture_default_str();
  flag(spine, "--constant-schedule", p.constant_schedule, "keep p_i = p");

  auto* check = app.add_subcommand("check", "validate a CSV written by this tool");
  check->add_option("file", p.file, "CSV path or -")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    CLI::App* target = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    out << target->help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::string context;
    if (app.get_subcommands().empty()) {
      for (const auto* sub : app.get_subcommands({})) context += (context.empty() ? "" : " ") + sub->get_name();
    } else {
      for (const auto* opt : app.get_subcommands().front()->get_options())
        context += (context.empty() ? "" : " ") + opt->get_name();
    }
    emit_error(err, "usage_error", e.what(), context);
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  try {
    if (const char* env = std::getenv("POLYMERLAB_WORKERS"); env && *env) {
      char* end = nullptr;
      long w = std::strtol(env, &end, 10);
      if (*end != '\0' || w < 0) throw UsageError("POLYMERLAB_WORKERS must be a non-negative integer", env);
      p.workers = static_cast<int>(w);
    }
    if (p.workers < 0) throw UsageError("--workers must be >= 0");
    if (p.workers == 0) p.workers = default_workers();

    static const std::map<std::string, std::function<Output(const Params&)>> runners{
        {"analytic", run_analytic}, {"percolation-threshold", run_threshold}, {"simulate", run_simulate},
        {"gibbs-ray", run_gibbs},   {"subtree", run_subtree},                 {"topk", run_topk},
        {"percolation", run_percolation}, {"spine", run_spine},               {"check", run_check}};
    Output o = runners.at(name)(p);

    if (!o.csv || p.out == "-") {
      out << o.text;
      out.flush();
      return 0;
    }
    std::ofstream file(p.out, std::ios::binary);
    if (!file) throw ResourceError("cannot open output file", p.out);
    file << o.text;
    if (!file) throw ResourceError("failed writing output file", p.out);

    json argv = json::array({name});
    json options = json::object();
    for (const CLI::Option* opt : sub->get_options()) {
      const std::string key = option_key(opt);
      if (key == "help" || key == "out" || key == "workers") continue;
      if (flag_keys.count(key)) {
        options[key] = opt->count() > 0;
        if (opt->count() > 0) argv.push_back(opt->get_name());
        continue;
      }
      if (opt->count() > 0) {
        options[key] = opt->results().size() == 1 ? json(opt->results().front()) : json(opt->results());
        argv.push_back(opt->get_name());
        for (const auto& r : opt->results()) argv.push_back(r);
      } else {
        options[key] = opt->get_default_str();
      }
    }
    json sidecar{{"tool", "polymerlab"}, {"subcommand", name}, {"argv", argv}, {"options", options},
                 {"results", o.results}};
    std::ofstream side(p.out + ".json", std::ios::binary);
    if (!side) throw ResourceError("cannot open sidecar file", p.out + ".json");
    side << sidecar.dump(2) << "\n";
    return 0;
  } catch (const UsageError& e) {
    emit_error(err, e.code(), e.what(), e.context());
    return 2;
  } catch (const Error& e) {
    emit_error(err, e.code(), e.what(), e.context());
    return 1;
  } catch (const std::exception& e) {
    emit_error(err, "internal_inconsistency", e.what(), name);
    return 1;
  }
}

}  // namespace polymerlab
