#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "pvpms/cli.hpp"

using namespace pvpms;
namespace fs = std::filesystem;
using Catch::Approx;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("pvpms_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  f << text;
}

std::string slurp(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

template <typename Cmd>
Run run(Cmd cmd, const cli::Options& opt) {
  std::ostringstream out, err;
  const int code = cmd(opt, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("config file parsing", "[config]") {
  std::istringstream in(
      "# panel\n"
      "panel.voc = 45.5\n"
      "panel.temperature = 300   # kelvin\n"
      "\n"
      "pms.hysteresis = 0.25\n"
      "loss.model = analytic\n"
      "controller.load_p = 0\n"
      "profile.source = file\n"
      "profile.file = day.csv\n"
      "stats.alpha = 0.01\n");
  const auto cfg = io::parse_config(in, "test.cfg", "/tmp/base");
  CHECK(cfg.datasheet.voc == 45.5);
  CHECK(cfg.cell_temperature == 300.0);
  CHECK(cfg.pms.hysteresis == 0.25);
  CHECK(cfg.loss_kind == io::LossKind::Analytic);
  CHECK(cfg.controller.load_p == 0.0);
  CHECK(cfg.profile_source == io::ProfileSource::File);
  CHECK(cfg.profile_path == "/tmp/base/day.csv");
  CHECK(cfg.alpha == 0.01);
}

TEST_CASE("config errors name the line", "[config]") {
  auto fails_with = [](const std::string& text, const std::string& needle) {
    std::istringstream in(text);
    try {
      io::parse_config(in, "bad.cfg");
    } catch (const io::ConfigError& e) {
      return std::string(e.what()).find(needle) != std::string::npos;
    }
    return false;
  };
  CHECK(fails_with("panel.voc = 44\npanel.colour = red\n", "bad.cfg:2"));
  CHECK(fails_with("panel.voc 44\n", "bad.cfg:1"));
  CHECK(fails_with("panel.voc = forty\n", "not a number"));
  CHECK(fails_with("loss.model = magic\n", "loss.model"));
  CHECK(fails_with("pms.v_low =\n", "empty value"));
}

TEST_CASE("config invariants are checked", "[config]") {
  io::RunConfig cfg;
  cfg.pms.v_low = 40.0;
  CHECK_THROWS_AS(io::check(cfg), io::ConfigError);
  cfg = {};
  cfg.loss_table = "/nonexistent/table2.csv";
  CHECK_THROWS_AS(io::check(cfg), io::ConfigError);
  cfg = {};
  cfg.profile_source = io::ProfileSource::File;
  CHECK_THROWS_AS(io::check(cfg), io::ConfigError);
  cfg = {};
  CHECK_NOTHROW(io::check(cfg));
}

TEST_CASE("bundled fixtures load", "[io]") {
  CHECK(io::read_verify_rows(io::read_csv_file(io::default_fixture("table1.csv"))).size() == 13);
  const auto bench = io::read_bench_rows(io::read_csv_file(io::default_fixture("table2.csv")));
  REQUIRE(bench.size() == 7);
  const auto builtin = table2_rows();
  for (std::size_t k = 0; k < bench.size(); ++k) {
    CHECK(bench[k].vin == builtin[k].vin);
    CHECK(*bench[k].eta_pct == *builtin[k].eta_pct);
  }
  const auto t3 = io::read_csv_file(io::default_fixture("table3.csv"));
  const auto mppt = io::read_hourly(t3, "mppt_only_w");
  const auto pms = io::read_hourly(t3, "with_pms_w");
  REQUIRE(mppt.size() == 10);
  for (std::size_t k = 0; k < mppt.size(); ++k) {
    CHECK(mppt[k].watts == table3_mppt_only()[k].watts);
    CHECK(pms[k].watts == table3_with_pms()[k].watts);
  }
}

TEST_CASE("csv reader reports bad fields with their line", "[io]") {
  std::istringstream in("# comment\nvin,p_in,p_out\n10,1,x\n");
  const auto t = io::read_csv(in, "bench.csv");
  try {
    io::read_bench_rows(t);
    FAIL("expected an error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("bench.csv:3") != std::string::npos);
  }
  std::istringstream empty("# nothing\n\n");
  CHECK_THROWS_AS(io::read_csv(empty, "empty.csv"), InputError);
}

TEST_CASE("sample and profile csv round trip", "[io]") {
  IrradianceProfile p;
  for (int k = 0; k < 121; ++k) p.samples.push_back(10.0 * k);
  std::ostringstream prof;
  io::write_profile(prof, p);
  std::istringstream prof_in(prof.str());
  const auto back = io::read_profile(io::read_csv(prof_in, "profile.csv"));
  CHECK(back.start_min == 480);
  CHECK(back.step_min == 5);
  CHECK(back.samples == p.samples);

  const SystemModel model;
  const auto day = simulate_day(p, Scenario::WithPms, model);
  std::ostringstream out;
  io::write_samples(out, day);
  std::istringstream in(out.str());
  const auto samples = io::read_samples(io::read_csv(in, "day.csv"));
  REQUIRE(samples.size() == day.samples.size());
  for (std::size_t k = 0; k < samples.size(); ++k) {
    CHECK(samples[k].t == day.samples[k].t);
    CHECK(samples[k].route == day.samples[k].route);
    CHECK(samples[k].p_delivered == Approx(day.samples[k].p_delivered).epsilon(0).margin(1e-6));
    CHECK(samples[k].v_to_mppt == Approx(day.samples[k].v_to_mppt).epsilon(0).margin(1e-6));
  }
}

TEST_CASE("profile on an irregular grid is rejected", "[io]") {
  std::istringstream in("t_min,g\n480,1\n485,2\n495,3\n");
  CHECK_THROWS_AS(io::read_profile(io::read_csv(in, "p.csv")), InputError);
}

TEST_CASE("fixed formatting", "[io]") {
  CHECK(io::fixed(1.23456, 2) == "1.23");
  CHECK(io::fixed(-0.0001, 2) == "0.00");
  CHECK(io::fixed(-1.5, 1) == "-1.5");
}

TEST_CASE("simulate writes well formed outputs and is repeatable", "[cli]") {
  const auto dir = scratch("simulate");
  cli::Options opt;
  opt.out_dir = (dir / "a").string();
  const auto first = run(cli::cmd_simulate, opt);
  REQUIRE(first.code == cli::kOk);
  opt.out_dir = (dir / "b").string();
  REQUIRE(run(cli::cmd_simulate, opt).code == cli::kOk);

  for (const char* name : {"mppt_only.csv", "with_pms.csv", "hourly_summary.csv", "profile.csv", "hourly_power.svg",
                           "comparison.txt"}) {
    INFO(name);
    CHECK(fs::exists(dir / "a" / name));
    CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));
  }

  boost::property_tree::ptree tree;
  std::ifstream svg(dir / "a" / "hourly_power.svg");
  REQUIRE_NOTHROW(boost::property_tree::read_xml(svg, tree));
  const auto& root = tree.get_child("svg");
  int polylines = 0;
  for (const auto& child : root) polylines += child.first == "polyline";
  CHECK(polylines == 2);

  const auto summary = io::read_csv_file((dir / "a" / "hourly_summary.csv").string());
  CHECK(summary.header == std::vector<std::string>{"hour", "avg_w_mppt_only", "avg_w_with_pms", "gain_pct"});
  CHECK(summary.rows.size() == 10);
}

TEST_CASE("zero load config puts all delivered power into the battery", "[cli]") {
  const auto dir = scratch("zero_load");
  write(dir / "run.cfg", "controller.load_p = 0\noutput.dir = out\n");
  cli::Options opt;
  opt.config = (dir / "run.cfg").string();
  REQUIRE(run(cli::cmd_simulate, opt).code == cli::kOk);
  const auto samples = io::read_samples(io::read_csv_file((dir / "out" / "with_pms.csv").string()));
  double total = 0.0;
  for (const auto& s : samples) {
    CHECK(s.p_load == 0.0);
    CHECK(s.p_battery == Approx(s.p_delivered).epsilon(0).margin(1e-6));
    total += s.p_battery;
  }
  CHECK(total > 0.0);
}

TEST_CASE("verify-pms exit codes", "[cli]") {
  const auto dir = scratch("verify");
  cli::Options opt;
  CHECK(run(cli::cmd_verify_pms, opt).code == cli::kOk);

  opt.fixture = (dir / "missing.csv").string();
  CHECK(run(cli::cmd_verify_pms, opt).code == cli::kInputError);

  write(dir / "wrong.csv", "vin,vout_expected\n14,99\n");
  opt.fixture = (dir / "wrong.csv").string();
  CHECK(run(cli::cmd_verify_pms, opt).code == cli::kModelFailure);

  write(dir / "empty.csv", "vin,vout_expected\n");
  opt.fixture = (dir / "empty.csv").string();
  CHECK(run(cli::cmd_verify_pms, opt).code == cli::kInputError);
}

TEST_CASE("bench-boost exit codes", "[cli]") {
  const auto dir = scratch("bench");
  cli::Options opt;
  const auto empirical = run(cli::cmd_bench_boost, opt);
  CHECK(empirical.code == cli::kOk);
  CHECK(empirical.out.find("average efficiency: 89.37 %") != std::string::npos);

  opt.model = "analytic";
  CHECK(run(cli::cmd_bench_boost, opt).code == cli::kOk);

  opt.model = "quantum";
  CHECK(run(cli::cmd_bench_boost, opt).code == cli::kInputError);

  opt.model.reset();
  write(dir / "high.csv", "vin,p_in,p_out\n40,12,11\n");
  opt.fixture = (dir / "high.csv").string();
  CHECK(run(cli::cmd_bench_boost, opt).code == cli::kInputError);
}

TEST_CASE("stats exit codes", "[cli]") {
  const auto dir = scratch("stats");
  write(dir / "a.csv", "t_min,p_delivered\n480,10\n485,12\n490,9\n495,14\n");
  write(dir / "b.csv", "t_min,p_delivered\n480,11\n485,14\n490,10\n495,17\n");
  write(dir / "c.csv", "t_min,p_delivered\n480,11\n490,14\n500,10\n510,17\n");

  cli::Options opt;
  opt.csv_a = (dir / "a.csv").string();
  opt.csv_b = (dir / "a.csv").string();
  CHECK(run(cli::cmd_stats, opt).code == cli::kNotSignificant);

  opt.csv_b = (dir / "c.csv").string();
  CHECK(run(cli::cmd_stats, opt).code == cli::kInputError);

  opt.csv_b = (dir / "b.csv").string();
  opt.out_dir = (dir / "out").string();
  const auto r = run(cli::cmd_stats, opt);
  CHECK((r.code == cli::kOk || r.code == cli::kNotSignificant));
  const auto kv = io::read_csv_file((dir / "out" / "stats.csv").string());
  CHECK(kv.header == std::vector<std::string>{"key", "value"});
  CHECK(kv.find("key") == 0);

  opt.csv_b = (dir / "missing.csv").string();
  CHECK(run(cli::cmd_stats, opt).code == cli::kInputError);
}

TEST_CASE("derive-profile writes a profile the simulator accepts", "[cli]") {
  const auto dir = scratch("derive");
  cli::Options opt;
  opt.out_dir = dir.string();
  REQUIRE(run(cli::cmd_derive_profile, opt).code == cli::kOk);

  write(dir / "run.cfg", "profile.source = file\nprofile.file = profile.csv\noutput.dir = sim\n");
  cli::Options sim;
  sim.config = (dir / "run.cfg").string();
  const auto r = run(cli::cmd_simulate, sim);
  CHECK(r.code == cli::kOk);
  CHECK(fs::exists(dir / "sim" / "with_pms.csv"));
}

TEST_CASE("missing config file is an input error", "[cli]") {
  cli::Options opt;
  opt.config = "/nonexistent/run.cfg";
  CHECK(run(cli::cmd_simulate, opt).code == cli::kInputError);
}
