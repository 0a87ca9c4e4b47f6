#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "aqec/io.hpp"

using namespace aqec;

namespace {

std::vector<ResultRow> synthetic_dephasing() {
  std::vector<ResultRow> rows;
  std::uint64_t id = 0;
  for (double p : {1e-2, 3e-3, 1e-3}) {
    for (int i = 0; i < 40; ++i) {
      ResultRow r;
      r.experiment_id = "dephasing";
      r.code = "15-1-7-3";
      r.trial_id = id++;
      r.seed = mix64(1, r.trial_id);
      r.p = p;
      r.lifetime_cycles = static_cast<std::uint64_t>(std::pow(p, -3.5) * (0.2 + 0.05 * (i % 30)));
      r.estimator_error = 0.01 * (i % 7);
      r.failure_wx = 4;
      r.n_updates = 3 * i;
      rows.push_back(r);
    }
  }
  rows[5].censored = true;
  rows[6].status = "error: boom";
  return rows;
}

std::vector<ResultRow> synthetic_unital() {
  std::vector<ResultRow> rows;
  for (int i = 0; i < 60; ++i) {
    ResultRow r;
    r.experiment_id = "unital";
    r.code = "15-1-7-3";
    r.trial_id = i;
    r.seed = mix64(2, i);
    r.p = 0.003;
    r.lifetime_cycles = 3000 + 250 * (i % 17);
    r.estimator_error = 0.02 + 0.01 * (i % 23);
    r.k1 = 0.7;
    r.baseline_lifetime = 3100.5;
    rows.push_back(r);
  }
  return rows;
}

std::string to_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream o;
  CsvWriter w(o);
  for (const auto& r : rows) w.write(r);
  w.flush();
  return o.str();
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void check_golden(const std::string& name, const std::string& svg) {
  const std::string path = std::string(AQEC_TEST_DATA_DIR) + "/" + name;
  if (std::getenv("AQEC_UPDATE_GOLDEN")) std::ofstream(path) << svg;
  const std::string golden = slurp(path);
  ASSERT_FALSE(golden.empty()) << "missing golden file " << path;
  EXPECT_EQ(svg, golden);
}

}  // namespace

TEST(Io, CsvRoundTrip) {
  const auto rows = synthetic_dephasing();
  const std::string csv = to_csv(rows);
  EXPECT_EQ(csv.rfind(kSchemaLine, 0), 0u);
  std::istringstream in(csv);
  const auto back = read_results_csv(in);
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].trial_id, rows[i].trial_id);
    EXPECT_EQ(back[i].seed, rows[i].seed);
    EXPECT_EQ(back[i].p, rows[i].p);
    EXPECT_EQ(back[i].lifetime_cycles, rows[i].lifetime_cycles);
    EXPECT_EQ(back[i].censored, rows[i].censored);
    EXPECT_EQ(back[i].estimator_error, rows[i].estimator_error);
    EXPECT_EQ(back[i].failure_wx, rows[i].failure_wx);
    EXPECT_EQ(back[i].n_updates, rows[i].n_updates);
    EXPECT_EQ(back[i].status, rows[i].status);
    EXPECT_TRUE(std::isnan(back[i].k1));
  }
  EXPECT_EQ(to_csv(back), csv);
}

TEST(Io, EveryRowHasAllColumns) {
  const std::string csv = to_csv(synthetic_unital());
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) EXPECT_EQ(std::count(line.begin(), line.end(), ','), 15);
}

TEST(Io, MakeRowSanitizesErrors) {
  TrialResult t;
  t.error = "bad, worse\nworst";
  const ResultRow r = make_row(t, "x", "15-1-7-3");
  EXPECT_EQ(r.status, "error: bad; worse worst");
  EXPECT_FALSE(r.ok());
  EXPECT_FALSE(to_trial(r).ok());
}

TEST(Io, SchemaErrors) {
  std::istringstream empty("");
  EXPECT_TRUE(read_results_csv(empty).empty());
  std::istringstream no_version("experiment_id\n");
  EXPECT_THROW(read_results_csv(no_version), SchemaError);
  std::istringstream bad_header(std::string(kSchemaLine) + "\na,b,c\n");
  EXPECT_THROW(read_results_csv(bad_header), SchemaError);
  std::istringstream short_row(std::string(kSchemaLine) + "\n" + kCsvHeader + "\n1,2,3\n");
  EXPECT_THROW(read_results_csv(short_row), SchemaError);
  std::string csv = to_csv(synthetic_unital());
  csv.replace(csv.find(",3000,"), 6, ",x3000,");
  std::istringstream malformed(csv);
  EXPECT_THROW(read_results_csv(malformed, "r.csv"), SchemaError);
}

TEST(Io, SummaryTotalsMatchRows) {
  const auto rows = synthetic_dephasing();
  const nlohmann::json s = summarize_rows(rows);
  EXPECT_EQ(s["rows"].get<std::size_t>(), rows.size());
  std::size_t total = 0;
  for (const auto& e : s["per_p"]) total += e["trials"].get<std::size_t>();
  EXPECT_EQ(total, rows.size());
  EXPECT_EQ(s["per_p"][0]["lifetime"]["censored"].get<std::size_t>() +
                s["per_p"][1]["lifetime"]["censored"].get<std::size_t>() +
                s["per_p"][2]["lifetime"]["censored"].get<std::size_t>(),
            1u);
  ASSERT_TRUE(s.contains("fit"));
  EXPECT_NEAR(s["fit"]["slope"].get<double>(), -3.5, 0.01);

  const nlohmann::json u = summarize_rows(synthetic_unital());
  EXPECT_FALSE(u.contains("fit"));
  EXPECT_TRUE(u["per_p"][0].contains("normalized_lifetime"));
}

TEST(Io, EmptyReportHasAxes) {
  const std::string svg = render_report_svg({});
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("lifetime (cycles)"), std::string::npos);
  EXPECT_EQ(svg.find("<circle"), std::string::npos);
  EXPECT_EQ(svg.find("<polyline"), std::string::npos);
}

TEST(Io, UnitalReportOverlaysPerformanceCurve) {
  const std::string svg = render_report_svg(synthetic_unital());
  EXPECT_NE(svg.find("<polyline"), std::string::npos);
  EXPECT_NE(svg.find("normalized lifetime"), std::string::npos);
}

TEST(Io, MarkerAreaTracksMultiplicity) {
  std::vector<ResultRow> rows(9, synthetic_unital().front());
  const std::string svg = render_report_svg(rows);
  EXPECT_NE(svg.find("r=\"6.00\""), std::string::npos) << svg;  // 2 sqrt(9)
}

TEST(Io, GoldenDephasingReport) { check_golden("golden_dephasing.svg", render_report_svg(synthetic_dephasing())); }

TEST(Io, GoldenUnitalReport) { check_golden("golden_unital.svg", render_report_svg(synthetic_unital())); }
