#include "permuap/harness.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

using namespace permuap;

TEST_SUITE("harness")
{
  TEST_CASE("targets")
  {
    CHECK(regression_targets().size() == 4);
    const auto s = target_by_name("sin1d");
    CHECK(s.eval(Eigen::VectorXd::Constant(1, 0.25)) == doctest::Approx(-1.0));
    const auto l = target_by_name("legendre3");
    CHECK(l.eval(Eigen::VectorXd::Constant(1, 1.0)) == doctest::Approx(1.0));
    const auto t2 = target_by_name("sin2d");
    CHECK(t2.eval(Eigen::Vector2d(0.5, 1.0)) == doctest::Approx(-1.0));
    const auto t3 = target_by_name("sin3d");
    CHECK(t3.eval(Eigen::Vector3d(0.1, 0.2, 0.3)) == doctest::Approx(std::sin(0.3) * std::cos(0.2) * std::sin(0.6)));
    CHECK_THROWS_AS(target_by_name("nope"), std::invalid_argument);
  }

  TEST_CASE("1D basis")
  {
    const auto b = make_basis_1d(2, 0.0, 1.0);
    REQUIRE(b.functions.size() == 4);
    CHECK(b.functions[0].location == 0.0);
    CHECK(b.functions[2].location == 1.0);
    CHECK(b.functions[0].side == 1);
    CHECK(b.functions[1].side == -1);
  }

  TEST_CASE("2D basis: sizes, ranges and coverage")
  {
    const auto b = make_basis_2d(5, 0.75);
    CHECK(b.axes.cols() == 4);
    CHECK(b.functions.size() == 8 * 5);
    CHECK(b.range[2].second == doctest::Approx(std::sqrt(2.0) * 1.75));
    std::mt19937_64 rng(1);
    const auto net = initialize("equidistant", b, 2, rng, Box::cube(2, -1, 1));
    // every grid point has a basis function with nonzero gradient, and all values are nonnegative
    for (int i = 0; i <= 100; ++i)
      for (int j = 0; j <= 100; ++j) {
        const Eigen::Vector2d x(-1 + 0.02 * i, -1 + 0.02 * j);
        const Eigen::VectorXd h = hidden_layer(net, x);
        CHECK(h.minCoeff() >= 0.0);
        CHECK(h.maxCoeff() > 0.0);
      }
  }

  TEST_CASE("3D basis has 13 axes and 26 directions")
  {
    const auto b = make_basis_3d(3, 0.75);
    CHECK(b.axes.cols() == 13);
    CHECK(b.functions.size() == 26 * 3);
    std::set<std::vector<int>> dirs;
    for (const auto &f : b.functions) {
      const Eigen::VectorXd u = b.axes.col(f.axis) * f.side;
      dirs.insert({int(u[0]), int(u[1]), int(u[2])});
    }
    CHECK(dirs.size() == 26);
  }

  TEST_CASE("equidistant on [0, 1] with n = 3")
  {
    std::mt19937_64 rng(1);
    const auto net = initialize("equidistant", make_basis_1d(3, 0.0, 1.0), 1, rng, Box::interval(0, 1));
    Eigen::VectorXd w(6);
    w << 0, -0.0, 0.5, -0.5, 1, -1;
    CHECK(same_multiset(net.initial_multiset, w));
    CHECK(net.initial_multiset == w);
    CHECK(std::signbit(net.initial_multiset[1]));
  }

  TEST_CASE("strategies")
  {
    const std::size_t n = 50;
    const auto basis    = make_basis_1d(n);
    for (const auto &s : strategy_names()) {
      std::mt19937_64 rng(2022);
      const auto net = initialize(s, basis, 1, rng, Box::interval(-1, 1));
      CHECK(net.size() == 2 * n);
      CHECK(net.initial_multiset == net.theta);
      for (std::size_t i = 0; i < n; ++i) CHECK(net.basis[2 * i].location == net.basis[2 * i + 1].location);
      const auto &w = net.initial_multiset;
      if (s != "total_random")
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) CHECK(w[2 * i + 1] == -w[2 * i]);
    }
    std::mt19937_64 rng(2022);
    const auto x      = initialize("xavier_uniform_all", basis, 1, rng, Box::interval(-1, 1));
    const double bound = std::sqrt(6.0 / (1.0 + 2.0 * n));
    CHECK(x.initial_multiset.cwiseAbs().maxCoeff() <= bound);
    for (const auto &f : x.basis) CHECK(std::abs(f.location) <= bound);
    CHECK_THROWS_AS(initialize("bogus", basis, 1, rng, Box::interval(-1, 1)), std::invalid_argument);
  }

  TEST_CASE("he normal spread")
  {
    const std::size_t n = 2000;
    std::mt19937_64 rng(3);
    const auto net = initialize("he_W_only", make_basis_1d(n), 1, rng, Box::interval(-1, 1));
    const double sd = std::sqrt(net.initial_multiset.squaredNorm() / static_cast<double>(2 * n));
    CHECK(sd == doctest::Approx(std::sqrt(2.0 / (2.0 * n))).epsilon(0.05));
  }

  TEST_CASE("data generation")
  {
    const auto t = target_by_name("sin1d");
    const auto a = generate_data(t, 1600, 400, kDataSeed);
    const auto b = generate_data(t, 1600, 400, kDataSeed);
    CHECK(a.train.x.rows() == 1600);
    CHECK(a.test.x.rows() == 400);
    CHECK(a.train.x == b.train.x);
    CHECK(a.train.y == b.train.y);
    CHECK(a.train.x.minCoeff() >= -1.0);
    CHECK(a.train.x.maxCoeff() <= 1.0);
    CHECK(a.test.x(0, 0) == -1.0);
    CHECK(a.test.x(399, 0) == 1.0);
    const auto two = generate_data(target_by_name("sin2d"), 100, 12800, kDataSeed);
    CHECK(two.test.x.rows() == 113 * 113);
    const auto ds = default_sizes(2, 0.5);
    CHECK(ds.train == 25600);
    CHECK(ds.test == 6400);
  }

  TEST_CASE("rate fit")
  {
    std::vector<std::pair<double, double>> pts;
    for (double n : {10.0, 20.0, 40.0, 80.0, 160.0, 320.0}) pts.emplace_back(n, 3.0 * std::pow(n, -0.5));
    const auto f = fit_rate(pts);
    CHECK(f.slope == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(std::exp(f.intercept) == doctest::Approx(3.0));
    CHECK(f.stderr_slope < 1e-12);
    CHECK(std::isnan(fit_rate({{1, 1}, {2, 0.5}}).stderr_slope));
    CHECK_THROWS_AS(fit_rate({{10, 0.1}}), std::invalid_argument);
  }

  TEST_CASE("test errors")
  {
    const auto t = target_by_name("sin1d");
    std::mt19937_64 rng(1);
    auto net  = initialize("equidistant", make_basis_1d(4), 1, rng, t.domain);
    net.gamma = 0.0;
    net.alpha = 0.5;
    Dataset d;
    d.x = Eigen::MatrixXd::Zero(3, 1);
    d.y = Eigen::Vector3d(0.5, 0.0, 1.5);
    const auto e = test_errors(net, d);
    CHECK(e.sup == doctest::Approx(1.0));
    CHECK(e.l2 == doctest::Approx(std::sqrt((0.25 + 1.0) / 3.0)));
  }

  TEST_CASE("table values")
  {
    CHECK(table_config(1).k == 5);
    CHECK(table_config(1).batch_size == 16);
    CHECK(table_config(2).batch_size == 128);
    CHECK(table_config(3).k == 20);
    CHECK(table_config(3).batch_size == 640);
    CHECK(table_t_b(1) == 0.0);
    CHECK(table_t_b(3) == 0.75);
    CHECK(run_seed(0) == 2022);
    CHECK(run_seed(9) == 11022);
  }
}

TEST_SUITE("sweep")
{
  TEST_CASE("empty width list")
  {
    SweepConfig c;
    c.n_list.clear();
    CHECK(run_sweep(c).cells.empty());
  }

  TEST_CASE("persistence, resume and determinism")
  {
    const auto dir = std::filesystem::temp_directory_path() / "permuap_sweep_test";
    std::filesystem::remove_all(dir);
    SweepConfig c;
    c.targets    = {"sin1d"};
    c.strategies = {"equidistant", "pairwise_random"};
    c.n_list     = {6, 12};
    c.seeds      = 2;
    c.epochs     = 20;
    c.threads    = 2;
    c.out_dir    = dir.string();
    std::size_t trained = 0;
    const auto first    = run_sweep(c, [&](const SweepCell &) { ++trained; });
    CHECK(trained == 8);
    CHECK(first.cells.size() == 8);
    for (const auto &cell : first.cells) CHECK(cell.multiset_ok);
    CHECK(std::filesystem::exists(dir / "manifest.json"));

    // reload equals the in-memory result
    const auto reloaded = read_sweep_csv((dir / "sweep.csv").string());
    REQUIRE(reloaded.size() == first.cells.size());
    for (std::size_t i = 0; i < reloaded.size(); ++i) {
      CHECK(reloaded[i].sup_error == first.cells[i].sup_error);
      CHECK(reloaded[i].l2_error == first.cells[i].l2_error);
    }
    const auto refit = fit_cells(reloaded);
    REQUIRE(refit.size() == first.fits.size());
    for (std::size_t i = 0; i < refit.size(); ++i) CHECK(refit[i].sup.slope == first.fits[i].sup.slope);

    // second run trains nothing
    trained           = 0;
    const auto second = run_sweep(c, [&](const SweepCell &) { ++trained; });
    CHECK(trained == 0);
    CHECK(second.cells.size() == 8);

    // a fresh directory reproduces the same bytes
    const auto dir2 = dir.string() + "_b";
    std::filesystem::remove_all(dir2);
    c.out_dir = dir2;
    c.threads = 1;
    run_sweep(c);
    auto slurp = [](const std::filesystem::path &p) {
      std::ifstream is(p);
      return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    };
    CHECK(slurp(dir / "sweep.csv") == slurp(std::filesystem::path(dir2) / "sweep.csv"));
    std::filesystem::remove_all(dir);
    std::filesystem::remove_all(dir2);
  }

  TEST_CASE("unknown names are rejected before training")
  {
    SweepConfig c;
    c.strategies = {"nope"};
    CHECK_THROWS_AS(run_sweep(c), std::invalid_argument);
  }
}
