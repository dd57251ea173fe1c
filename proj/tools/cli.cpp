#include "cli.hpp"

#include "permuap/constructive.hpp"
#include "permuap/harness.hpp"
#include "permuap/json_io.hpp"
#include "permuap/laperm.hpp"
#include "permuap/tracer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

namespace permuap::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// JSON objects or TOML-style key = value lines; '_' and '-' are interchangeable in keys.
class JsonOrKeyValue : public CLI::ConfigTOML
{
public:
  std::vector<CLI::ConfigItem> from_config(std::istream &input) const override
  {
    std::string text((std::istreambuf_iterator<char>(input)), std::istreambuf_iterator<char>());
    const auto first = text.find_first_not_of(" \t\r\n");
    std::vector<CLI::ConfigItem> items;
    if (first != std::string::npos && text[first] == '{') {
      json j;
      try {
        j = json::parse(text);
      } catch (const json::exception &e) {
        throw CLI::ConversionError(std::string("config: ") + e.what());
      }
      for (const auto &[k, v] : j.items()) {
        CLI::ConfigItem item;
        item.name = k;
        if (v.is_array()) {
          for (const auto &e : v) item.inputs.push_back(scalar(e));
        } else {
          item.inputs.push_back(scalar(v));
        }
        items.push_back(std::move(item));
      }
    } else {
      std::istringstream is(text);
      items = CLI::ConfigTOML::from_config(is);
    }
    for (auto &item : items) std::replace(item.name.begin(), item.name.end(), '_', '-');
    return items;
  }

private:
  static std::string scalar(const json &v)
  {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }
};

std::string defaults_footer()
{
  return "Defaults by input dimension (flags override):\n"
         "  1D  k=5   batch=16   train/test=1600/400     T_b=0\n"
         "  2D  k=5   batch=128  train/test=51200/12800  T_b=0.75\n"
         "  3D  k=20  batch=640  train/test=51200/12800  T_b=0.75\n"
         "  all lr=1e-3, lr x0.998 per epoch, k x1.002^(1/10) per epoch,\n"
         "      epochs 6400 (--paper-scale) or 2000 (desk), seeds 2022+1000i, data seed 2022\n";
}

std::string join(const std::vector<std::string> &v)
{
  std::string s;
  for (const auto &e : v) s += (s.empty() ? "" : ", ") + e;
  return s;
}

std::string canonical_strategy(const std::string &s)
{
  static const std::map<std::string, std::string> alias{{"pairwise", "pairwise_random"},
                                                        {"random", "total_random"}};
  const auto it = alias.find(s);
  const std::string name = it == alias.end() ? s : it->second;
  if (!is_strategy(name))
    throw std::invalid_argument("unknown strategy '" + s + "' (valid: " + join(strategy_names()) + ")");
  return name;
}

void write_text(const fs::path &path, const std::string &text)
{
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
  if (text.empty() || text.back() != '\n') os << '\n';
}

void write_manifest(const fs::path &dir, const std::string &tool, const json &config, double wall)
{
  const std::string canon = config.dump();
  json m;
  m["tool"]         = "permuap " + tool;
  m["version"]      = kVersion;
  m["config"]       = config;
  m["config_hash"]  = hex64(fnv1a64(canon));
  m["wall_seconds"] = wall;
  write_text(dir / "manifest.json", m.dump(1));
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct BuilderTarget
{
  ScalarFunction f;  // on the target's own domain
  double lo = 0.0;
  double hi = 1.0;
};

BuilderTarget builder_target(const std::string &name, double value)
{
  using std::numbers::pi;
  if (name == "sin2pi") return {[](double x) { return std::sin(2 * pi * x); }, 0.0, 1.0};
  if (name == "const") return {[value](double) { return value; }, 0.0, 1.0};
  if (name == "identity") return {[](double x) { return x; }, 0.0, 1.0};
  if (name == "legendre3") return {[](double x) { return 0.5 * (5 * x * x * x - 3 * x); }, -1.0, 1.0};
  throw std::invalid_argument("unknown construct target '" + name + "' (valid: sin2pi, const, identity, legendre3)");
}

// ---------------------------------------------------------------------------

struct ConstructArgs
{
  std::string theorem = "1";
  std::string target  = "sin2pi";
  double value        = 0.3;
  double eps          = 0.25;
  double delta        = 0.2;
  std::uint64_t seed  = 2022;
  std::size_t retries = 10;
  std::size_t width_cap   = 1000000;
  std::size_t eval_points = 10001;
  std::string out;
};

void print_budget(std::ostream &out, const Construction &c)
{
  const auto &l = c.ledger;
  const auto &b = l.budget;
  out << "builder        " << l.builder << '\n';
  out << "width n        " << l.n << "  (n_hat " << l.n_hat << ", L " << l.refinement << ")\n";
  out << "steps J        " << c.g.count() << "  (J' " << l.j_prime << ", delta_h " << l.delta_h << ")\n";
  out << "alpha, gamma   " << l.alpha << ", " << l.gamma << '\n';
  if (!l.domain_map.empty()) out << "domain map     " << l.domain_map << '\n';
  out << std::setprecision(6);
  out << "error budget\n";
  out << "  |g - f|      " << b.g_error << '\n';
  out << "  E_use        " << b.e_use << '\n';
  out << "  E_un         " << b.e_un << "  (bound " << b.e_un_bound << ")\n";
  out << "  total        " << b.total << '\n';
  out << "  measured     " << b.measured << "  vs eps " << b.eps << (b.measured <= b.eps ? "  ok" : "  MISSED") << '\n';
}

int cmd_construct(const ConstructArgs &a, std::ostream &out, std::ostream &err)
{
  if (!(a.eps > 0.0)) throw std::invalid_argument("eps must be positive");
  if (a.theorem != "1" && a.theorem != "2" && a.theorem != "random")
    throw std::invalid_argument("theorem must be 1, 2 or random");
  if (a.theorem == "random" && !(a.delta > 0.0 && a.delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  const auto t0            = std::chrono::steady_clock::now();
  const BuilderTarget tgt  = builder_target(a.target, a.value);
  const double w           = tgt.hi - tgt.lo;
  const ScalarFunction on01 = [&](double t) { return tgt.f(tgt.lo + w * t); };

  std::optional<Construction> built;
  RandomOptions opts;
  opts.width_cap   = a.width_cap;
  opts.eval_points = a.eval_points;
  if (a.theorem == "1") {
    built = build_theorem1(on01, a.eps, opts);
  } else if (a.theorem == "2") {
    built = build_theorem2(on01, a.eps, opts);
  } else {
    for (std::size_t attempt = 0; attempt < std::max<std::size_t>(1, a.retries) && !built; ++attempt) {
      RandomOutcome r = build_random(on01, a.eps, a.delta, a.seed + attempt, opts);
      if (r.construction && r.construction->ledger.budget.measured <= a.eps) {
        built = std::move(r.construction);
        built->ledger.notes.push_back("seed " + std::to_string(a.seed + attempt));
      } else if (r.retry) {
        err << "attempt " << attempt + 1 << ": retry (" << r.retry->reason << ")\n";
      } else {
        err << "attempt " << attempt + 1 << ": missed eps\n";
      }
    }
    if (!built) {
      err << "random construction failed after " << a.retries << " attempts\n";
      return kRetryExhausted;
    }
  }
  if (tgt.lo != 0.0 || tgt.hi != 1.0) {
    map_to_domain(*built, tgt.lo, tgt.hi);
    measure(*built, tgt.f, a.eval_points);
  }
  if (!same_multiset(built->net.theta, built->net.initial_multiset)) {
    err << "multiset check failed\n";
    return kFailure;
  }
  print_budget(out, *built);
  out << "multiset       ok\n";
  const double wall = seconds_since(t0);
  out << "wall seconds   " << wall << '\n';

  if (!a.out.empty()) {
    fs::create_directories(a.out);
    write_text(fs::path(a.out) / "net.json", net_to_json(built->net));
    write_text(fs::path(a.out) / "ledger.json", ledger_to_json(built->ledger));
    std::ostringstream report;
    print_budget(report, *built);
    write_text(fs::path(a.out) / "report.txt", report.str());
    json cfg = {{"theorem", a.theorem}, {"target", a.target}, {"value", a.value}, {"eps", a.eps},
                {"delta", a.delta},     {"seed", a.seed},     {"retries", a.retries},
                {"width_cap", a.width_cap}, {"eval_points", a.eval_points}};
    write_manifest(a.out, "construct", cfg, wall);
  }
  return built->ledger.budget.measured <= a.eps ? kOk : kFailure;
}

// ---------------------------------------------------------------------------

struct TrainArgs
{
  std::string target   = "sin1d";
  std::string strategy = "equidistant";
  std::size_t n        = 40;
  std::size_t epochs   = 2000;
  bool full_scale     = false;
  std::uint64_t seed   = 2022;
  std::optional<double> lr;
  std::optional<double> k;
  std::optional<std::size_t> batch_size;
  double data_scale  = 1.0;
  bool free          = false;
  bool adaptive_k    = false;
  bool freeze_affine = false;
  bool leaky         = false;
  std::string out;
};

int cmd_train(const TrainArgs &a, std::ostream &out)
{
  const TargetFunction target = target_by_name(a.target);
  const std::string strategy  = canonical_strategy(a.strategy);
  if (a.n < 2) throw std::invalid_argument("n must be at least 2");
  TrainConfig cfg = table_config(target.dim);
  cfg.epochs      = a.full_scale ? 6400 : a.epochs;
  cfg.seed        = a.seed;
  cfg.permute     = !a.free;
  cfg.adaptive_k  = a.adaptive_k;
  cfg.freeze_affine = a.freeze_affine;
  if (a.lr) cfg.lr = *a.lr;
  if (a.k) cfg.k = *a.k;
  if (a.batch_size) cfg.batch_size = *a.batch_size;
  cfg.validate();

  const auto t0        = std::chrono::steady_clock::now();
  const DataSizes size = default_sizes(target.dim, a.data_scale);
  const DataSplit data = generate_data(target, size.train, size.test, kDataSeed);
  std::mt19937_64 rng(a.seed);
  const ReluNetd net =
    initialize(strategy, make_basis(target.dim, a.n, table_t_b(target.dim)), target.dim, rng, target.domain,
               a.leaky ? Activation::leaky() : Activation::relu());
  const TrainReport report = laperm_train(net, data.train, cfg);
  const TestErrors e       = test_errors(report.net, data.test);
  const double wall        = seconds_since(t0);

  out << "target " << a.target << "  strategy " << strategy << "  n " << a.n << "  epochs " << report.epochs.size()
      << "  projections " << report.events.size() << '\n';
  out << std::setprecision(6) << "test sup " << e.sup << "  test l2 " << e.l2 << "  multiset "
      << (report.multiset_ok ? "ok" : "FAILED") << "  wall " << wall << " s\n";

  if (!a.out.empty()) {
    fs::create_directories(a.out);
    std::ofstream csv(fs::path(a.out) / "train.csv", std::ios::trunc);
    write_report_csv(report, csv);
    json summary      = json::parse(report_summary_json(report));
    summary["test_sup"] = e.sup;
    summary["test_l2"]  = e.l2;
    write_text(fs::path(a.out) / "summary.json", summary.dump(1));
    write_text(fs::path(a.out) / "net.json", net_to_json(report.net));
    json cfgj = {{"target", a.target},    {"strategy", strategy},        {"n", a.n},
                 {"epochs", cfg.epochs},  {"seed", a.seed},              {"lr", cfg.lr},
                 {"k", cfg.k},            {"batch_size", cfg.batch_size}, {"data_scale", a.data_scale},
                 {"permute", cfg.permute}, {"adaptive_k", cfg.adaptive_k}, {"freeze_affine", cfg.freeze_affine},
                 {"activation", a.leaky ? "leaky" : "relu"}};
    write_manifest(a.out, "train", cfgj, wall);
  }
  return report.multiset_ok ? kOk : kFailure;
}

// ---------------------------------------------------------------------------

void print_fits(std::ostream &out, const std::vector<SweepFit> &fits)
{
  out << std::setprecision(4);
  for (const auto &f : fits)
    out << f.target << " / " << f.strategy << ": sup slope " << f.sup.slope << " (+-" << f.sup.stderr_slope
        << "), l2 slope " << f.l2.slope << " (+-" << f.l2.stderr_slope << ")\n";
}

int cmd_sweep(SweepConfig cfg, std::ostream &out)
{
  for (auto &s : cfg.strategies) s = canonical_strategy(s);
  if (cfg.out_dir.empty()) throw std::invalid_argument("--out is required");
  std::size_t finished = 0;
  const SweepResult r  = run_sweep(cfg, [&](const SweepCell &c) {
    ++finished;
    out << "[" << finished << "] " << c.target << " " << c.strategy << " n=" << c.n << " seed=" << run_seed(c.seed)
        << " sup=" << c.sup_error << " l2=" << c.l2_error << '\n'
        << std::flush;
  });
  out << r.cells.size() << " cells (" << finished << " trained this run)\n";
  print_fits(out, r.fits);
  for (const auto &c : r.cells)
    if (!c.multiset_ok) return kFailure;
  return kOk;
}

// ---------------------------------------------------------------------------

struct RateArgs
{
  std::string csv;
  bool step = false;
  std::vector<std::size_t> n_list{10, 20, 40, 80, 160, 320};
  std::vector<std::string> points;
};

int cmd_rate(const RateArgs &a, std::ostream &out)
{
  const int modes = !a.csv.empty() + a.step + !a.points.empty();
  if (modes != 1) throw std::invalid_argument("give exactly one of --csv, --step, --points");
  out << std::setprecision(6);
  if (!a.csv.empty()) {
    print_fits(out, fit_cells(read_sweep_csv(a.csv)));
    return kOk;
  }
  std::vector<std::pair<double, double>> pts;
  if (a.step) {
    for (auto n : a.n_list) {
      pts.emplace_back(static_cast<double>(n), adjacent_step_error(n));
      out << "n " << n << "  step L2 error " << pts.back().second << '\n';
    }
  } else {
    for (const auto &p : a.points) {
      const auto colon = p.find(':');
      if (colon == std::string::npos) throw std::invalid_argument("points are n:error pairs");
      pts.emplace_back(std::stod(p.substr(0, colon)), std::stod(p.substr(colon + 1)));
    }
  }
  const RateFit f = fit_rate(pts);
  out << "slope " << f.slope << "  intercept " << f.intercept << "  stderr " << f.stderr_slope << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------

struct TraceArgs
{
  std::string target   = "sin1d";
  std::string strategy = "equidistant";
  std::size_t n        = 640;
  std::size_t events   = 400;
  std::size_t epochs   = 6400;
  std::size_t window   = 10;
  std::uint64_t seed   = 2022;
  std::string out      = "trace.csv";
};

int cmd_trace(const TraceArgs &a, std::ostream &out)
{
  const TargetFunction target = target_by_name(a.target);
  const std::string strategy  = canonical_strategy(a.strategy);
  if (a.events == 0) throw std::invalid_argument("events must be positive");
  const auto t0 = std::chrono::steady_clock::now();
  TrainConfig cfg = table_config(target.dim);
  cfg.epochs      = a.epochs;
  cfg.seed        = a.seed;
  cfg.max_events  = a.events;
  const DataSizes size = default_sizes(target.dim, 1.0);
  const DataSplit data = generate_data(target, size.train, size.test, kDataSeed);
  std::mt19937_64 rng(a.seed);
  const ReluNetd net =
    initialize(strategy, make_basis(target.dim, a.n, table_t_b(target.dim)), target.dim, rng, target.domain);
  TraceLog log;
  log.n        = a.n;
  log.strategy = strategy;
  log.seed     = a.seed;
  laperm_train(net, data.train, cfg, trace_observer(log, a.events));

  const fs::path path(a.out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  export_csv(log, path.string());
  const auto windows = summarize(log, a.window);
  fs::path summary   = path;
  summary.replace_filename(path.stem().string() + "_summary.csv");
  {
    std::ofstream os(summary, std::ios::trunc);
    export_summary_csv(windows, os);
  }
  out << log.events.size() << " events written to " << path.string() << '\n';
  out << std::setprecision(4);
  for (const auto &w : windows)
    out << "events " << w.first_event << "-" << w.first_event + w.events - 1 << "  epochs " << w.first_epoch << "-"
        << w.last_epoch << "  mean moved " << w.mean_moved << "  mean loss " << w.mean_loss << '\n';
  json cfgj = {{"target", a.target}, {"strategy", strategy}, {"n", a.n},       {"events", a.events},
               {"epochs", a.epochs}, {"window", a.window},   {"seed", a.seed}};
  write_manifest(path.has_parent_path() ? path.parent_path() : fs::path("."), "trace", cfgj, seconds_since(t0));
  return kOk;
}

// Replaces "--config FILE" with "--key=value" tokens for keys not already on the command line.
std::vector<std::string> expand_config(int argc, const char *const *argv)
{
  std::vector<std::string> in(argv + 1, argv + argc);
  std::vector<std::string> rest;
  std::string file;
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] == "--config") {
      if (i + 1 >= in.size()) throw std::invalid_argument("--config needs a file");
      file = in[++i];
    } else if (in[i].rfind("--config=", 0) == 0) {
      file = in[i].substr(9);
    } else {
      rest.push_back(in[i]);
    }
  }
  if (file.empty() || rest.empty()) {
    std::reverse(rest.begin(), rest.end());
    rest.push_back(argc > 0 ? argv[0] : "permuap");
    std::reverse(rest.begin(), rest.end());
    return rest;
  }
  std::ifstream is(file);
  if (!is) throw std::invalid_argument("cannot read config " + file);
  const auto items = JsonOrKeyValue{}.from_config(is);
  auto given = [&](const std::string &key) {
    return std::any_of(rest.begin(), rest.end(), [&](const std::string &t) {
      return t == "--" + key || t.rfind("--" + key + "=", 0) == 0;
    });
  };
  std::vector<std::string> injected;
  for (const auto &item : items) {
    if (item.name.empty() || item.name == "++" || item.name == "--" || given(item.name)) continue;
    std::string value;
    for (const auto &v : item.inputs) value += (value.empty() ? "" : ",") + v;
    injected.push_back("--" + item.name + "=" + value);
  }
  // the subcommand is the first token; file values go right after it
  std::vector<std::string> out{argc > 0 ? argv[0] : "permuap", rest.front()};
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), rest.begin() + 1, rest.end());
  return out;
}

}  // namespace

int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err)
{
  CLI::App app{"Permutation-trained ReLU networks: constructive builders, LaPerm training, sweeps"};
  app.name("permuap");
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string config_unused;
  auto add_config = [&](CLI::App *sub) {
    sub->add_option("--config", config_unused, "JSON object or key = value file; flags override it");
  };

  ConstructArgs ca;
  auto *construct = app.add_subcommand("construct", "Build a network by a constructive theorem");
  add_config(construct);
  construct->add_option("--theorem", ca.theorem, "1 (learned alpha, gamma), 2 (alpha=0, gamma=1) or random")
    ->check(CLI::IsMember({"1", "2", "random"}))
    ->capture_default_str();
  construct->add_option("--target", ca.target, "sin2pi, const, identity or legendre3")->capture_default_str();
  construct->add_option("--value", ca.value, "constant for --target const")->capture_default_str();
  construct->add_option("--eps", ca.eps, "sup-norm tolerance")->capture_default_str();
  construct->add_option("--delta", ca.delta, "failure probability (random)")->capture_default_str();
  construct->add_option("--seed", ca.seed, "RNG seed (random)")->capture_default_str();
  construct->add_option("--retries", ca.retries, "fresh draws before giving up (random)")->capture_default_str();
  construct->add_option("--width-cap", ca.width_cap, "largest n a builder may request")->capture_default_str();
  construct->add_option("--eval-points", ca.eval_points, "grid size for the sup error")->capture_default_str();
  construct->add_option("--out", ca.out, "directory for net.json, ledger.json, report.txt, manifest.json");

  TrainArgs ta;
  auto *train = app.add_subcommand("train", "Train one network with LaPerm");
  add_config(train);
  train->footer(defaults_footer());
  train->add_option("--target", ta.target, "sin1d, legendre3, sin2d or sin3d")->capture_default_str();
  train->add_option("--strategy", ta.strategy, "initialization: " + join(strategy_names()))->capture_default_str();
  train->add_option("--n", ta.n, "basis locations per direction")->capture_default_str();
  train->add_option("--epochs", ta.epochs, "training epochs")->capture_default_str();
  train->add_flag("--paper-scale", ta.full_scale, "6400 epochs");
  train->add_option("--seed", ta.seed, "seed for initialization and shuffling")->capture_default_str();
  train->add_option("--lr", ta.lr, "learning rate (default 1e-3)");
  train->add_option("--k", ta.k, "permutation period (default per dimension)");
  train->add_option("--batch-size", ta.batch_size, "minibatch size (default per dimension)");
  train->add_option("--data-scale", ta.data_scale, "multiplies the train and test sizes")->capture_default_str();
  train->add_flag("--free", ta.free, "plain Adam, no projection");
  train->add_flag("--adaptive-k", ta.adaptive_k, "double k when a projection raises the loss by over 10%");
  train->add_flag("--freeze-affine", ta.freeze_affine, "keep alpha = 0 and gamma = 1 fixed");
  train->add_flag("--leaky", ta.leaky, "leaky ReLU with slope 0.01");
  train->add_option("--out", ta.out, "directory for train.csv, summary.json, net.json, manifest.json");

  SweepConfig sc;
  sc.out_dir = "results";
  std::optional<double> sweep_lr, sweep_k;
  std::optional<std::size_t> sweep_batch;
  auto *sweep = app.add_subcommand("sweep", "Train every (target, strategy, n, seed) cell");
  add_config(sweep);
  sweep->footer(defaults_footer());
  sweep->add_option("--targets", sc.targets, "comma separated targets")->delimiter(',')->capture_default_str();
  sweep->add_option("--strategies", sc.strategies, "comma separated strategies")->delimiter(',')->capture_default_str();
  sweep->add_option("--n", sc.n_list, "comma separated widths")->delimiter(',')->capture_default_str();
  sweep->add_option("--seeds", sc.seeds, "seeds per cell (2022 + 1000 i)")->capture_default_str();
  sweep->add_option("--epochs", sc.epochs, "training epochs")->capture_default_str();
  sweep->add_flag("--paper-scale", sc.full_scale, "6400 epochs and 10 seeds");
  sweep->add_option("--data-scale", sc.data_scale, "multiplies the train and test sizes")->capture_default_str();
  sweep->add_option("--threads", sc.threads, "worker threads, 0 for all cores")->capture_default_str();
  sweep->add_option("--lr", sweep_lr, "learning rate override");
  sweep->add_option("--k", sweep_k, "permutation period override");
  sweep->add_option("--batch-size", sweep_batch, "minibatch size override");
  sweep->add_option("--out", sc.out_dir, "results directory; existing rows are reused")->capture_default_str();

  RateArgs ra;
  auto *rate = app.add_subcommand("rate", "Fit log-log convergence rates");
  add_config(rate);
  rate->add_option("--csv", ra.csv, "sweep.csv to fit per target and strategy");
  rate->add_flag("--step", ra.step, "constructive step-approximator L2 errors over --n");
  rate->add_option("--n", ra.n_list, "widths for --step")->delimiter(',')->capture_default_str();
  rate->add_option("--points", ra.points, "n:error pairs")->delimiter(',');

  TraceArgs tr;
  auto *trace = app.add_subcommand("trace", "Record permutation-active components");
  add_config(trace);
  trace->add_option("--target", tr.target, "regression target")->capture_default_str();
  trace->add_option("--strategy", tr.strategy, "initialization")->capture_default_str();
  trace->add_option("--n", tr.n, "basis locations")->capture_default_str();
  trace->add_option("--events", tr.events, "projections to record")->capture_default_str();
  trace->add_option("--epochs", tr.epochs, "epoch limit")->capture_default_str();
  trace->add_option("--window", tr.window, "events per summary window")->capture_default_str();
  trace->add_option("--seed", tr.seed, "seed")->capture_default_str();
  trace->add_option("--out", tr.out, "trace CSV path; a _summary.csv is written next to it")->capture_default_str();

  std::vector<std::string> args;
  try {
    args = expand_config(argc, argv);
  } catch (const std::exception &e) {
    err << e.what() << '\n';
    return kValidation;
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);  // CLI11 wants them reversed, no argv[0]
    app.parse(reversed);
  } catch (const CLI::CallForHelp &e) {
    out << app.help(app.get_subcommands().empty() ? "" : app.get_subcommands().front()->get_name());
    return kOk;
  } catch (const CLI::CallForAllHelp &e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion &e) {
    out << kVersion << '\n';
    return kOk;
  } catch (const CLI::ParseError &e) {
    err << e.what() << '\n';
    return kValidation;
  }

  try {
    if (*construct) return cmd_construct(ca, out, err);
    if (*train) return cmd_train(ta, out);
    if (*sweep) {
      sc.lr         = sweep_lr;
      sc.k          = sweep_k;
      sc.batch_size = sweep_batch;
      return cmd_sweep(sc, out);
    }
    if (*rate) return cmd_rate(ra, out);
    if (*trace) return cmd_trace(tr, out);
  } catch (const WidthCapExceeded &e) {
    err << e.what() << '\n';
    return kWidthCap;
  } catch (const std::invalid_argument &e) {
    err << e.what() << '\n';
    return kValidation;
  } catch (const std::exception &e) {
    err << e.what() << '\n';
    return kFailure;
  }
  return kValidation;
}

}  // namespace permuap::cli
