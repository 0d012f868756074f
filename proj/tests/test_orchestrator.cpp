#include "pvtraj/csv_io.hpp"
#include "pvtraj/orchestrator.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <set>

using namespace pvtraj;
using testutil::date;

namespace {

struct CliResult {
  int code;
  std::string output;
};

CliResult cli(const std::string& args, const std::filesystem::path& log) {
  const std::string cmd = std::string(PVTRAJ_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, testutil::slurp(log)};
}

std::string quick_settings() {
  return "--set gibbs_iters=200 --set gibbs_burn=50 --set samples=100 --set copula_window_days=10";
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const UsageError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("run config parsing and validation name the field") {
  RunConfig c;
  c.set("model", "indep");
  c.set(" window_days ", " 30 ");
  c.set("copula", "ar1");
  c.set("window_sweep", "5, 10,20");
  CHECK(c.variant == ModelVariant::fully_independent());
  CHECK(c.window_days == 30);
  CHECK(c.copula);
  CHECK(c.copula_structure == CopulaStructure::ar1_band);
  CHECK(c.window_sweep == std::vector<int>{5, 10, 20});
  CHECK(c.model_label() == "indep-copula");
  c.set("copula", "off");
  CHECK(c.model_label() == "indep");

  CHECK(message_of([&] { c.set("windw_days", "3"); }).find("windw_days") != std::string::npos);
  CHECK(message_of([&] { c.set("samples", "many"); }).find("samples") != std::string::npos);
  CHECK(message_of([&] { c.set("model", "ar9"); }).find("model") != std::string::npos);

  const auto violation = [](const std::function<void(RunConfig&)>& edit) {
    RunConfig r;
    edit(r);
    return message_of([&] { r.validate(); });
  };
  CHECK(violation([](RunConfig&) {}).empty());
  CHECK(violation([](RunConfig& r) { r.window_days = 0; }).find("window_days") != std::string::npos);
  CHECK(violation([](RunConfig& r) { r.copula_window_days = 0; }).find("copula_window_days") != std::string::npos);
  CHECK(violation([](RunConfig& r) { r.gibbs_iters = 500; }).find("gibbs_iters") != std::string::npos);
  CHECK(violation([](RunConfig& r) { r.gibbs_burn = -1; }).find("gibbs_burn") != std::string::npos);
  CHECK(violation([](RunConfig& r) { r.samples = 0; }).find("samples") != std::string::npos);
  CHECK(violation([](RunConfig& r) {
          r.samples = 1;
          r.copula = true;
        }).find("copula") != std::string::npos);
  CHECK(violation([](RunConfig& r) { r.threads = 0; }).find("threads") != std::string::npos);
  CHECK(violation([](RunConfig& r) { r.precision_prior_df = 2.0; }).find("precision_prior_df") != std::string::npos);
  CHECK(violation([](RunConfig& r) { r.min_training_rows = 0; }).find("min_training_rows") != std::string::npos);
}

TEST_CASE("run config files round-trip") {
  testutil::TempDir dir("config");
  RunConfig c;
  c.set("model", "indep-resid");
  c.set("copula", "full");
  c.set("seed", "99");
  c.set("window_sweep", "3,7");
  open_output(dir / "a.cfg") << "# comment\n\n" << c.to_text();
  const RunConfig back = RunConfig::from_file(dir / "a.cfg");
  CHECK(back.to_text() == c.to_text());
  open_output(dir / "bad.cfg") << "model full\n";
  CHECK(message_of([&] { RunConfig::from_file(dir / "bad.cfg"); }).find("bad.cfg:1") != std::string::npos);
  CHECK_THROWS_AS(RunConfig::from_file(dir / "missing.cfg"), UsageError);
}

TEST_CASE("simulate subcommand") {
  testutil::TempDir dir("cli_sim");
  CHECK(cli("simulate --days 0 --out " + (dir / "zero").string(), dir / "log").code == 1);
  CHECK(cli("simulate --days 5 --set nonsense=1 --out " + (dir / "x").string(), dir / "log").code == 1);
  CHECK(cli("simulate", dir / "log").code == 1);
  REQUIRE(cli("simulate --days 30 --seed 1 --out " + (dir / "a").string(), dir / "log").code == 0);
  REQUIRE(cli("simulate --days 30 --seed 1 --out " + (dir / "b").string(), dir / "log").code == 0);
  for (const char* f : {"forecasts.csv", "production.csv", "mask.csv", "truth.csv"})
    CHECK(testutil::slurp(dir / "a" / f) == testutil::slurp(dir / "b" / f));
  const Dataset ds = load_dataset(dir / "a");
  CHECK(ds.cases.size() == 30);
}

TEST_CASE("forecast and report subcommands") {
  testutil::TempDir dir("cli_forecast");
  const auto data = dir / "data";
  REQUIRE(cli("simulate --days 45 --seed 2 --out " + data.string(), dir / "log").code == 0);
  const std::string common = "forecast --from 2011-02-05 --to 2011-02-08 --model indep --copula --data " +
                             data.string() + " " + quick_settings();
  const auto run1 = cli(common + " --out " + (dir / "r1").string(), dir / "log");
  REQUIRE_MESSAGE(run1.code == 0, run1.output);
  const auto run2 = cli(common + " --out " + (dir / "r2").string(), dir / "log");
  REQUIRE(run2.code == 0);

  for (const char* f : {"trajectories.csv", "trajectories_univariate.csv", "observations.csv", "report.csv",
                        "report_leads.csv", "run.cfg", "archive.csv", "correlation.csv"})
    CHECK(std::filesystem::exists(dir / "r1" / f));
  CHECK(testutil::slurp(dir / "r1" / "report.csv") == testutil::slurp(dir / "r2" / "report.csv"));
  CHECK(testutil::slurp(dir / "r1" / "trajectories.csv") == testutil::slurp(dir / "r2" / "trajectories.csv"));

  {
    CsvReader corr(dir / "r1" / "correlation.csv");
    const auto cr = corr.column("row_lead"), cc = corr.column("col_lead"), cv = corr.column("value");
    long entries = 0;
    while (corr.next()) {
      ++entries;
      if (corr.integer(cr) == corr.integer(cc)) CHECK(corr.number(cv) == 1.0);
    }
    CHECK(entries == kHorizon * kHorizon);
  }

  const auto rows = read_report_csv(dir / "r1" / "report.csv");
  std::set<std::tuple<std::string, std::string, std::string>> keys;
  for (const auto& r : rows) keys.emplace(r.metric, r.block, r.model);
  for (const char* model : {"indep-copula", "indep"}) {
    for (const char* block : {"day1", "day2", "day3"})
      for (const char* metric : {"crps", "mae", "rmse", "width80", "coverage80"}) CHECK(keys.count({metric, block, model}));
    for (const char* block : {"sum", "max"})
      for (const char* metric : {"crps", "mae", "rmse"}) CHECK(keys.count({metric, block, model}));
  }

  const auto traj = read_trajectories_csv(dir / "r1" / "trajectories.csv");
  CHECK(traj.size() == 4);
  CHECK(traj.begin()->first == date(2011, 2, 5));
  CHECK(traj.begin()->second.rows() == 100);
  const auto uni = read_trajectories_csv(dir / "r1" / "trajectories_univariate.csv");
  for (const auto& [d, paths] : traj)
    for (Index j = 0; j < kHorizon; ++j) {
      std::vector<double> a(paths.col(j).begin(), paths.col(j).end()), b(uni.at(d).col(j).begin(), uni.at(d).col(j).end());
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      CHECK(a == b);
    }

  const auto rep = cli("report --in " + (dir / "r1").string() + " --histograms " + (dir / "h").string(), dir / "log");
  REQUIRE_MESSAGE(rep.code == 0, rep.output);
  CHECK(testutil::slurp(dir / "h" / "report.csv") == testutil::slurp(dir / "r1" / "report.csv"));
  CHECK(testutil::slurp(dir / "h" / "report_leads.csv") == testutil::slurp(dir / "r1" / "report_leads.csv"));
  for (const char* f : {"pit_day1", "pit_day2", "pit_day3", "pit_sum", "pit_max", "band_depth", "univariate_pit_day1",
                        "univariate_band_depth"}) {
    CHECK(std::filesystem::exists(dir / "h" / (std::string(f) + ".csv")));
    CHECK(std::filesystem::exists(dir / "h" / (std::string(f) + ".svg")));
  }
}

TEST_CASE("forecast errors map to exit codes") {
  testutil::TempDir dir("cli_errors");
  const auto data = dir / "data";
  REQUIRE(cli("simulate --days 25 --seed 3 --out " + data.string(), dir / "log").code == 0);
  const std::string base = "forecast --data " + data.string() + " --out " + (dir / "o").string() + " " + quick_settings();
  const auto early = cli(base + " --from 2011-01-10 --to 2011-01-11", dir / "log");
  CHECK(early.code == 2);
  CHECK(early.output.find("2011-01-10") != std::string::npos);
  CHECK(cli(base + " --from 2011-01-24 --to 2011-01-24 --model ar9", dir / "log").code == 1);
  CHECK(cli(base + " --from 2011-01-24 --to 2011-01-23", dir / "log").code == 1);
  CHECK(cli(base + " --from 2011-13-01 --to 2011-01-23", dir / "log").code == 1);
  CHECK(cli("forecast --from 2011-01-24 --to 2011-01-24 --data " + (dir / "nowhere").string(), dir / "log").code == 2);
}

TEST_CASE("window sweep writes a curve") {
  testutil::TempDir dir("cli_sweep");
  const auto data = dir / "data";
  REQUIRE(cli("simulate --days 40 --seed 4 --start 2011-05-01 --out " + data.string(), dir / "log").code == 0);
  const auto r = cli("forecast --from 2011-05-28 --to 2011-05-30 --window-sweep 5,10 --data " + data.string() +
                         " --out " + (dir / "o").string() + " " + quick_settings(),
                     dir / "log");
  REQUIRE_MESSAGE(r.code == 0, r.output);
  CsvReader csv(dir / "o" / "window_sweep.csv");
  const auto cw = csv.column("window_days"), cc = csv.column("crps");
  std::vector<int> windows;
  while (csv.next()) {
    windows.push_back(static_cast<int>(csv.integer(cw)));
    CHECK(csv.number(cc) > 0.0);
  }
  CHECK(windows == std::vector<int>{5, 10});
}

TEST_CASE("score_date splits deterministic and probabilistic leads") {
  Rng rng(1);
  MatrixXd paths = (rng.normal_matrix(30, kHorizon).array() * 0.2).exp().matrix();
  paths.col(0).setConstant(0.0);
  paths.col(50).setConstant(4.0);
  VectorXd obs = VectorXd::Ones(kHorizon);
  ScoreAccumulator acc;
  Rng vr(2);
  score_date(acc, paths, obs, vr);
  CHECK(acc.leads()[0].n == 0);
  CHECK(acc.leads()[50].n == 0);
  CHECK(acc.leads()[1].n == 1);
  CHECK(acc.pit_values(0).size() == 23);
  CHECK(acc.pit_values(2).size() == 23);
  CHECK(acc.path_pits(PathStatistic::max).size() == 1);
  CHECK(acc.band_depth_positions().size() == 1);
  obs(70) = kMissing<double>;
  score_date(acc, paths, obs, vr);
  CHECK(acc.path_pits(PathStatistic::sum).size() == 1);
}
