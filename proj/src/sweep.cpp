#include "permuap/harness.hpp"
#include "permuap/json_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

namespace permuap {

namespace {

constexpr const char *kSweepHeader = "# permuap sweep v1";
constexpr const char *kSweepColumns = "target,strategy,n,seed,seed_value,sup_error,l2_error,final_loss,multiset_ok,epochs";

std::string format_row(const SweepCell &c)
{
  char buf[512];
  std::snprintf(buf, sizeof buf, "%s,%s,%zu,%zu,%llu,%.17g,%.17g,%.17g,%d,%zu", c.target.c_str(), c.strategy.c_str(),
                c.n, c.seed, static_cast<unsigned long long>(run_seed(c.seed)), c.sup_error, c.l2_error, c.final_loss,
                c.multiset_ok ? 1 : 0, c.epochs);
  return buf;
}

using CellKey = std::tuple<std::string, std::string, std::size_t, std::size_t>;

CellKey key(const SweepCell &c) { return {c.target, c.strategy, c.n, c.seed}; }

double median(std::vector<double> v)
{
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size();
  return m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

std::size_t effective_seeds(const SweepConfig &cfg) { return cfg.full_scale ? 10 : cfg.seeds; }
std::size_t effective_epochs(const SweepConfig &cfg) { return cfg.full_scale ? 6400 : cfg.epochs; }

void validate(const SweepConfig &cfg)
{
  for (const auto &t : cfg.targets) (void)target_by_name(t);
  for (const auto &s : cfg.strategies) {
    if (!is_strategy(s)) {
      std::string valid;
      for (const auto &v : strategy_names()) valid += (valid.empty() ? "" : ", ") + v;
      throw std::invalid_argument("unknown strategy '" + s + "' (valid: " + valid + ")");
    }
  }
  for (auto n : cfg.n_list)
    if (n < 2) throw std::invalid_argument("n must be at least 2");
  if (!(cfg.data_scale > 0.0)) throw std::invalid_argument("data scale must be positive");
}

}  // namespace

SweepCell run_cell(const std::string &target_name, const std::string &strategy, std::size_t n, std::size_t seed_index,
                   const SweepConfig &cfg)
{
  const TargetFunction target = target_by_name(target_name);
  const int dim               = target.dim;
  const DataSizes sizes       = default_sizes(dim, cfg.data_scale);
  const DataSplit data        = generate_data(target, sizes.train, sizes.test, kDataSeed);

  const std::uint64_t seed = run_seed(seed_index);
  std::mt19937_64 rng(seed);
  const Basis basis  = make_basis(dim, n, table_t_b(dim));
  const ReluNetd net = initialize(strategy, basis, dim, rng, target.domain);

  TrainConfig tc = table_config(dim);
  tc.epochs      = effective_epochs(cfg);
  tc.seed        = seed;
  if (cfg.lr) tc.lr = *cfg.lr;
  if (cfg.k) tc.k = *cfg.k;
  if (cfg.batch_size) tc.batch_size = *cfg.batch_size;

  const TrainReport report = laperm_train(net, data.train, tc);
  const TestErrors err     = test_errors(report.net, data.test);

  SweepCell cell;
  cell.target      = target_name;
  cell.strategy    = strategy;
  cell.n           = n;
  cell.seed        = seed_index;
  cell.sup_error   = err.sup;
  cell.l2_error    = err.l2;
  cell.final_loss  = report.events.empty() ? (report.epochs.empty() ? 0.0 : report.epochs.back().loss)
                                           : report.events.back().loss_after;
  cell.multiset_ok = report.multiset_ok && same_multiset(report.net.theta, net.initial_multiset);
  cell.epochs      = report.epochs.size();
  cell.wall_seconds = report.wall_seconds;
  return cell;
}

std::vector<SweepFit> fit_cells(const std::vector<SweepCell> &cells)
{
  std::map<std::pair<std::string, std::string>, std::map<std::size_t, std::pair<std::vector<double>, std::vector<double>>>>
    groups;
  std::vector<std::pair<std::string, std::string>> order;
  for (const auto &c : cells) {
    const auto k = std::make_pair(c.target, c.strategy);
    if (!groups.count(k)) order.push_back(k);
    groups[k][c.n].first.push_back(c.sup_error);
    groups[k][c.n].second.push_back(c.l2_error);
  }
  std::vector<SweepFit> fits;
  for (const auto &k : order) {
    const auto &by_n = groups[k];
    if (by_n.size() < 2) continue;
    std::vector<std::pair<double, double>> sup, l2;
    for (const auto &[n, errs] : by_n) {
      sup.emplace_back(static_cast<double>(n), median(errs.first));
      l2.emplace_back(static_cast<double>(n), median(errs.second));
    }
    try {
      fits.push_back({k.first, k.second, fit_rate(sup), fit_rate(l2)});
    } catch (const std::invalid_argument &) {
      // zero errors cannot be fitted on a log scale
    }
  }
  return fits;
}

void write_sweep_csv(const std::vector<SweepCell> &cells, const std::string &path)
{
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << kSweepHeader << '\n' << kSweepColumns << '\n';
  for (const auto &c : cells) os << format_row(c) << '\n';
}

std::vector<SweepCell> read_sweep_csv(const std::string &path)
{
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  std::vector<SweepCell> cells;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("target,", 0) == 0) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string tok; std::getline(ss, tok, ',');) f.push_back(tok);
    if (f.size() != 10) continue;  // a torn last line from an interrupted run
    try {
      SweepCell c;
      c.target      = f[0];
      c.strategy    = f[1];
      c.n           = std::stoull(f[2]);
      c.seed        = std::stoull(f[3]);
      c.sup_error   = std::stod(f[5]);
      c.l2_error    = std::stod(f[6]);
      c.final_loss  = std::stod(f[7]);
      c.multiset_ok = f[8] == "1";
      c.epochs      = std::stoull(f[9]);
      cells.push_back(std::move(c));
    } catch (const std::exception &) {
      continue;
    }
  }
  return cells;
}

SweepResult run_sweep(const SweepConfig &cfg, const std::function<void(const SweepCell &)> &on_cell)
{
  validate(cfg);
  const auto t0 = std::chrono::steady_clock::now();

  std::vector<SweepCell> todo;
  for (const auto &t : cfg.targets)
    for (const auto &s : cfg.strategies)
      for (auto n : cfg.n_list)
        for (std::size_t i = 0; i < effective_seeds(cfg); ++i) todo.push_back({t, s, n, i});

  std::vector<SweepCell> done;
  std::string csv_path;
  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    csv_path = (std::filesystem::path(cfg.out_dir) / "sweep.csv").string();
    std::set<CellKey> wanted;
    for (const auto &c : todo) wanted.insert(key(c));
    if (std::filesystem::exists(csv_path)) {
      for (auto &c : read_sweep_csv(csv_path))
        if (wanted.count(key(c)) && c.epochs == effective_epochs(cfg)) done.push_back(std::move(c));
    }
    std::set<CellKey> have;
    for (const auto &c : done) have.insert(key(c));
    std::erase_if(todo, [&](const SweepCell &c) { return have.count(key(c)) > 0; });
    // rewrite so the file holds only valid rows before appending
    write_sweep_csv(done, csv_path);
  }

  std::mutex mu;
  std::ofstream append;
  if (!csv_path.empty()) append.open(csv_path, std::ios::app);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= todo.size()) return;
      {
        std::lock_guard lock(mu);
        if (failure) return;
      }
      try {
        SweepCell c = run_cell(todo[i].target, todo[i].strategy, todo[i].n, todo[i].seed, cfg);
        std::lock_guard lock(mu);
        if (append.is_open()) append << format_row(c) << '\n' << std::flush;
        if (on_cell) on_cell(c);
        done.push_back(std::move(c));
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::size_t threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads             = std::min(threads, std::max<std::size_t>(1, todo.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto &t : pool) t.join();
  if (append.is_open()) append.close();
  if (failure) std::rethrow_exception(failure);

  // canonical order: config order of targets and strategies, then n, then seed
  auto rank = [](const std::vector<std::string> &v, const std::string &s) {
    return static_cast<std::size_t>(std::find(v.begin(), v.end(), s) - v.begin());
  };
  std::sort(done.begin(), done.end(), [&](const SweepCell &a, const SweepCell &b) {
    return std::make_tuple(rank(cfg.targets, a.target), rank(cfg.strategies, a.strategy), a.n, a.seed) <
           std::make_tuple(rank(cfg.targets, b.target), rank(cfg.strategies, b.strategy), b.n, b.seed);
  });

  SweepResult result;
  result.cells = std::move(done);
  result.fits  = fit_cells(result.cells);

  if (!cfg.out_dir.empty()) {
    write_sweep_csv(result.cells, csv_path);
    const auto dir = std::filesystem::path(cfg.out_dir);
    {
      std::ofstream os(dir / "fits.csv", std::ios::trunc);
      os << "# permuap fits v1\n";
      os << "target,strategy,sup_slope,sup_intercept,sup_stderr,l2_slope,l2_intercept,l2_stderr\n";
      for (const auto &f : result.fits) {
        char buf[512];
        std::snprintf(buf, sizeof buf, "%s,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", f.target.c_str(),
                      f.strategy.c_str(), f.sup.slope, f.sup.intercept, f.sup.stderr_slope, f.l2.slope,
                      f.l2.intercept, f.l2.stderr_slope);
        os << buf;
      }
    }
    const std::string config = sweep_config_json(cfg);
    nlohmann::json m;
    m["tool"]         = "permuap sweep";
    m["version"]      = kVersion;
    m["config"]       = nlohmann::json::parse(config);
    m["config_hash"]  = hex64(fnv1a64(config));
    m["cells"]        = result.cells.size();
    m["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ofstream os(dir / "manifest.json", std::ios::trunc);
    os << m.dump(1) << '\n';
  }
  return result;
}

}  // namespace permuap
