// End-to-end tests driving the installed binary through a shell, checking
// exit codes, output files, and determinism guarantees.
#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "cxrs/dataset.hpp"
#include "cxrs/image_io.hpp"

#ifndef CXRS_CLI_PATH
#error "CXRS_CLI_PATH must point at the cxrs binary"
#endif

namespace cxrs {
namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

RunResult run_cli(const std::string& args, const std::string& env_prefix = "") {
  static int counter = 0;
  const std::string base = std::string(testing::TempDir()) + "cli_" + std::to_string(counter++);
  const std::string cmd = env_prefix + std::string(CXRS_CLI_PATH) + " " + args + " > " + base +
                          ".out 2> " + base + ".err";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(base + ".out");
  r.err = slurp(base + ".err");
  return r;
}

std::string write_file(const std::string& name, const std::string& content) {
  const std::string path = std::string(testing::TempDir()) + name;
  std::ofstream f(path, std::ios::trunc);
  f << content;
  return path;
}

const char* kTinyConfig = R"({
  "seed": 5,
  "preprocess": {"target_height": 32, "target_width": 32},
  "network": {
    "input_height": 32, "input_width": 32, "stem_channels": 4,
    "stages": [
      {"blocks": 1, "channels": 4, "pool_before": false},
      {"blocks": 1, "channels": 6, "pool_before": true},
      {"blocks": 1, "channels": 8, "pool_before": true}
    ],
    "skip_map": [], "head_hidden": 8
  },
  "training": {"epochs": 1, "batch_size": 4, "lr": 0.001},
  "split": {"train_fraction": 0.75, "n_trials": 2}
})";

const char* kMetadataCsv =
    "image_id,patient_id,age,sex,location,view,position,geo_right,geo_left,opac_right,"
    "opac_left,rater_id\n"
    "img1,p1,34,male,Toronto,PA,upright,2,1,1,1,r1\n"
    "img1,p1,34,male,Toronto,PA,upright,3,1,2,1,r2\n"
    "img2,p2,60,female,Madrid,AP,supine,4,4,3,3,r1\n"
    "img3,p3,,male,,PA,upright,0,0,0,0,r1\n";

TEST(CliSummarize, PrintsTableAndJson) {
  const std::string meta = write_file("summ_meta.csv", kMetadataCsv);
  const std::string json_out = std::string(testing::TempDir()) + "summ.json";
  const auto r = run_cli("summarize --metadata " + meta + " --json " + json_out);
  EXPECT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("Images"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("Patients"), std::string::npos);

  const auto j = nlohmann::json::parse(slurp(json_out));
  EXPECT_EQ(j.at("image_count").get<int>(), 3);
  EXPECT_EQ(j.at("patient_count").get<int>(), 3);
}

TEST(CliSummarize, SchemaErrorsExitTwo) {
  const std::string meta = write_file(
      "summ_bad.csv",
      "image_id,patient_id,age,sex,location,position,geo_right,geo_left,opac_right,"
      "opac_left,rater_id\nimg1,p1,34,male,Toronto,upright,2,1,1,1,r1\n");
  const auto r = run_cli("summarize --metadata " + meta);
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("view"), std::string::npos) << r.err;
}

TEST(CliSummarize, MissingFileExitsFour) {
  const auto r = run_cli("summarize --metadata /nonexistent/meta.csv");
  EXPECT_EQ(r.exit_code, 4);
}

TEST(CliCrossval, DeterministicReports) {
  const std::string cfg = write_file("cv_cfg.json", kTinyConfig);
  const std::string out1 = std::string(testing::TempDir()) + "cv_run1";
  const std::string out2 = std::string(testing::TempDir()) + "cv_run2";

  const auto r1 = run_cli("crossval --config " + cfg + " --synthetic 16 --out " + out1);
  ASSERT_EQ(r1.exit_code, 0) << r1.err;
  const auto r2 = run_cli("crossval --config " + cfg + " --synthetic 16 --out " + out2);
  ASSERT_EQ(r2.exit_code, 0) << r2.err;

  const std::string report1 = slurp(out1 + "/report.json");
  EXPECT_FALSE(report1.empty());
  EXPECT_EQ(report1, slurp(out2 + "/report.json"));
  EXPECT_EQ(slurp(out1 + "/scatter_geographic.csv"), slurp(out2 + "/scatter_geographic.csv"));

  const std::string csv = slurp(out1 + "/scatter_geographic.csv");
  EXPECT_EQ(csv.rfind("predicted,radiologist\n", 0), 0u) << csv;
  EXPECT_TRUE(nlohmann::json::parse(report1).at("targets").contains("opacity"));
}

TEST(CliCrossval, ParallelMatchesSerial) {
  const std::string cfg = write_file("cvp_cfg.json", kTinyConfig);
  const std::string serial = std::string(testing::TempDir()) + "cv_serial";
  const std::string threaded = std::string(testing::TempDir()) + "cv_threaded";

  const auto r1 = run_cli("crossval --config " + cfg + " --synthetic 16 --trials 3 --out " +
                          serial + " --parallel 1");
  ASSERT_EQ(r1.exit_code, 0) << r1.err;
  const auto r2 = run_cli("crossval --config " + cfg + " --synthetic 16 --trials 3 --out " +
                          threaded + " --parallel 3");
  ASSERT_EQ(r2.exit_code, 0) << r2.err;
  EXPECT_EQ(slurp(serial + "/report.json"), slurp(threaded + "/report.json"));
}

TEST(CliCrossval, SeedEnvOverrideChangesResults) {
  const std::string cfg = write_file("cvs_cfg.json", kTinyConfig);
  const std::string a = std::string(testing::TempDir()) + "cv_seed_a";
  const std::string b = std::string(testing::TempDir()) + "cv_seed_b";
  const std::string c = std::string(testing::TempDir()) + "cv_seed_c";

  ASSERT_EQ(run_cli("crossval --config " + cfg + " --synthetic 16 --target geographic --out " + a,
                    "CXRS_SEED=111 ")
                .exit_code,
            0);
  ASSERT_EQ(run_cli("crossval --config " + cfg + " --synthetic 16 --target geographic --out " + b,
                    "CXRS_SEED=111 ")
                .exit_code,
            0);
  ASSERT_EQ(run_cli("crossval --config " + cfg + " --synthetic 16 --target geographic --out " + c,
                    "CXRS_SEED=222 ")
                .exit_code,
            0);
  EXPECT_EQ(slurp(a + "/report.json"), slurp(b + "/report.json"));
  EXPECT_NE(slurp(a + "/report.json"), slurp(c + "/report.json"));
}

TEST(CliCrossval, UnknownConfigKeyExitsTwo) {
  const std::string cfg = write_file("cv_badkey.json", R"({"learning_rate": 0.1})");
  const auto r = run_cli("crossval --config " + cfg + " --synthetic 16 --out /tmp/cv_badkey");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("learning_rate"), std::string::npos) << r.err;
}

TEST(CliCrossval, RequiresExactlyOneDataSource) {
  const std::string cfg = write_file("cv_src.json", kTinyConfig);
  EXPECT_EQ(run_cli("crossval --config " + cfg + " --out /tmp/cv_none").exit_code, 2);
  EXPECT_EQ(run_cli("crossval --config " + cfg + " --synthetic 16 --data /tmp --out /tmp/cv_two")
                .exit_code,
            2);
}

TEST(CliCrossval, AggregationFailureExitsThree) {
  // A single trial can never satisfy the two-successful-trials aggregation
  // floor, so the run ends with the runtime-failure code.
  const std::string cfg = write_file("cv_agg.json", kTinyConfig);
  const auto r = run_cli("crossval --config " + cfg +
                         " --synthetic 16 --trials 1 --target geographic --out /tmp/cv_agg");
  EXPECT_EQ(r.exit_code, 3) << r.err;
  EXPECT_NE(r.err.find("2 successful trials"), std::string::npos) << r.err;
}

TEST(CliTrainPredict, RoundTrip) {
  const std::string cfg = write_file("tp_cfg.json", kTinyConfig);
  const std::string ckpt = std::string(testing::TempDir()) + "model.ckpt";
  const auto train = run_cli("train --config " + cfg +
                             " --synthetic 12 --target geographic --out " + ckpt);
  ASSERT_EQ(train.exit_code, 0) << train.err;
  EXPECT_NE(train.out.find("checkpoint written"), std::string::npos);

  const auto records = generate_synthetic(1, 99, 32, 32);
  const std::string png = std::string(testing::TempDir()) + "probe.png";
  save_png(png, records[0].pixels);

  const auto predict = run_cli("predict --image " + png + " --checkpoint " + ckpt);
  ASSERT_EQ(predict.exit_code, 0) << predict.err;
  EXPECT_EQ(predict.out.rfind("geographic: raw=0.", 0), 0u) << predict.out;
  EXPECT_NE(predict.out.find("/8"), std::string::npos);
}

TEST(CliTrainPredict, TransferWarmStart) {
  const std::string cfg = write_file("tw_cfg.json", kTinyConfig);
  const std::string base = std::string(testing::TempDir()) + "base.ckpt";
  const std::string tuned = std::string(testing::TempDir()) + "tuned.ckpt";
  ASSERT_EQ(run_cli("train --config " + cfg + " --synthetic 12 --target geographic --out " + base)
                .exit_code,
            0);
  const auto r = run_cli("train --config " + cfg + " --synthetic 12 --target opacity --out " +
                         tuned + " --from " + base);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("transfer:"), std::string::npos) << r.out;
}

TEST(CliPredict, TruncatedCheckpointExitsTwoWithNoOutput) {
  const std::string cfg = write_file("pt_cfg.json", kTinyConfig);
  const std::string ckpt = std::string(testing::TempDir()) + "trunc.ckpt";
  ASSERT_EQ(run_cli("train --config " + cfg + " --synthetic 12 --target geographic --out " + ckpt)
                .exit_code,
            0);
  const std::string whole = slurp(ckpt);
  const std::string cut = std::string(testing::TempDir()) + "cut.ckpt";
  {
    std::ofstream f(cut, std::ios::binary | std::ios::trunc);
    f << whole.substr(0, whole.size() / 2);
  }
  const auto records = generate_synthetic(1, 98, 32, 32);
  const std::string png = std::string(testing::TempDir()) + "probe2.png";
  save_png(png, records[0].pixels);

  const auto r = run_cli("predict --image " + png + " --checkpoint " + cut);
  EXPECT_EQ(r.exit_code, 2) << r.err;
  EXPECT_TRUE(r.out.empty()) << r.out;
}

TEST(CliExportScatter, MatchesCrossvalCsv) {
  const std::string cfg = write_file("es_cfg.json", kTinyConfig);
  const std::string out = std::string(testing::TempDir()) + "es_run";
  ASSERT_EQ(run_cli("crossval --config " + cfg + " --synthetic 16 --target opacity --out " + out)
                .exit_code,
            0);
  const std::string csv = std::string(testing::TempDir()) + "es.csv";
  const std::string svg = std::string(testing::TempDir()) + "es.svg";
  const auto r = run_cli("export-scatter --report " + out + "/report.json --target opacity" +
                         " --out " + csv + " --svg " + svg);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(slurp(csv), slurp(out + "/scatter_opacity.csv"));
  EXPECT_NE(slurp(svg).find("<svg"), std::string::npos);
}

TEST(CliExportScatter, MissingSectionExitsTwo) {
  const std::string report = write_file("es_empty.json", R"({"targets": {}})");
  const auto r = run_cli("export-scatter --report " + report +
                         " --target geographic --out /tmp/es_missing.csv");
  EXPECT_EQ(r.exit_code, 2);
}

TEST(CliParse, BadUsageExitsTwo) {
  EXPECT_EQ(run_cli("frobnicate").exit_code, 2);
  EXPECT_EQ(run_cli("predict --image only.png").exit_code, 2);  // missing --checkpoint
  EXPECT_EQ(run_cli("").exit_code, 2);
}

TEST(CliCrossval, ClinicalDataDirectory) {
  // Tiny end-to-end clinical-format run: metadata + PNG files on disk.
  const std::string dir = std::string(testing::TempDir()) + "clinical";
  std::filesystem::create_directories(dir + "/images");
  const auto records = generate_synthetic(12, 7, 32, 32);
  std::string meta =
      "image_id,patient_id,age,sex,location,view,position,geo_right,geo_left,opac_right,"
      "opac_left,rater_id\n";
  for (const auto& rec : records) {
    const int geo_total =
        static_cast<int>(std::lround(rec.label(TargetKind::kGeographic) * 8.0));
    const int opac_total =
        static_cast<int>(std::lround(rec.label(TargetKind::kOpacity) * 6.0));
    const int geo_r = std::min(4, geo_total), geo_l = geo_total - geo_r;
    const int opac_r = std::min(3, opac_total), opac_l = opac_total - opac_r;
    meta += rec.image_id + "," + rec.patient_id + ",50,male,Here,PA,upright," +
            std::to_string(geo_r) + "," + std::to_string(geo_l) + "," +
            std::to_string(opac_r) + "," + std::to_string(opac_l) + ",r1\n";
    save_png(dir + "/images/" + rec.image_id + ".png", rec.pixels);
  }
  {
    std::ofstream f(dir + "/metadata.csv", std::ios::trunc);
    f << meta;
  }
  const std::string cfg = write_file("cd_cfg.json", kTinyConfig);
  const std::string out = std::string(testing::TempDir()) + "cd_run";
  const auto r = run_cli("crossval --config " + cfg + " --data " + dir +
                         " --target geographic --out " + out);
  EXPECT_EQ(r.exit_code, 0) << r.err;
  EXPECT_FALSE(slurp(out + "/report.json").empty());
}

}  // namespace
}  // namespace cxrs
