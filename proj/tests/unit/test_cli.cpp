#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(JNR_CLI_PATH) + " " + args + " 2>&1";
  Run r;
  std::FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::array<char, 4096> buf;
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), p)) r.out.append(buf.data(), n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

bool contains(const std::string& s, const std::string& needle) {
  return s.find(needle) != std::string::npos;
}

class Workspace {
 public:
  explicit Workspace(const std::string& name) : dir_(fs::temp_directory_path() / name) {
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  ~Workspace() { fs::remove_all(dir_); }

  // Small run config rooted in this workspace.
  fs::path config(const std::string& name, const std::string& sub, int n_total = 200,
                  int epochs = 5) const {
    const fs::path root = dir_ / sub;
    const fs::path p = dir_ / name;
    std::ofstream(p) << "{\"seed\": 5, \"gen\": {\"n_total\": " << n_total
                     << ", \"height\": 32, \"width\": 32},"
                     << " \"net\": {\"conv_blocks\": [{\"out_channels\": 8}, {\"out_channels\": 16},"
                     << " {\"out_channels\": 16}], \"feature_dim\": 32},"
                     << " \"train\": {\"epochs\": " << epochs << ", \"batch_size\": 32},"
                     << " \"paths\": {\"dataset_dir\": \"" << (root / "data").string()
                     << "\", \"checkpoint\": \"" << (root / "model.jnrm").string()
                     << "\", \"report_dir\": \"" << (root / "reports").string() << "\"}}";
    return p;
  }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
};

}  // namespace

TEST_CASE("cli: usage errors") {
  CHECK(run("").code == 1);
  CHECK(run("bogus").code == 1);
  CHECK(run("gen").code == 1);
  const Run r = run("gen -c /nonexistent/run.json");
  CHECK(r.code == 1);
  CHECK(contains(r.out, "/nonexistent/run.json"));
}

TEST_CASE("cli: gen writes the splits and is reproducible") {
  Workspace ws("jnr_cli_gen");
  const fs::path cfg = ws.config("a.json", "a", 1000);
  const Run r = run("gen -c " + cfg.string());
  REQUIRE(r.code == 0);
  CHECK(contains(r.out, "770"));
  CHECK(contains(r.out, "145"));
  CHECK(contains(r.out, "85"));
  for (const char* s : {"train", "val", "test"}) {
    CHECK(fs::exists(ws.dir() / "a/data" / (std::string(s) + ".jnrd")));
    CHECK(fs::exists(ws.dir() / "a/data" / (std::string(s) + ".csv")));
  }
  const fs::path cfg_b = ws.config("b.json", "b", 1000);
  REQUIRE(run("gen -c " + cfg_b.string()).code == 0);
  for (const char* f : {"train.jnrd", "val.jnrd", "test.jnrd", "train.csv"}) {
    INFO(f);
    CHECK(slurp(ws.dir() / "a/data" / f) == slurp(ws.dir() / "b/data" / f));
  }

  std::ofstream(ws.dir() / "blocked") << "x";
  std::ofstream(ws.dir() / "bad.json")
      << "{\"paths\": {\"dataset_dir\": \"" << (ws.dir() / "blocked/data").string() << "\"}}";
  CHECK(run("gen -c " + (ws.dir() / "bad.json").string()).code == 2);

  std::ofstream(ws.dir() / "typo.json") << "{\"gen\": {\"n_totl\": 10}}";
  const Run typo = run("gen -c " + (ws.dir() / "typo.json").string());
  CHECK(typo.code == 1);
  CHECK(contains(typo.out, "n_totl"));
}

TEST_CASE("cli: train, eval, checkpoint errors") {
  Workspace ws("jnr_cli_train");
  const fs::path cfg = ws.config("a.json", "a");
  REQUIRE(run("gen -c " + cfg.string()).code == 0);
  const Run t = run("train -c " + cfg.string());
  REQUIRE(t.code == 0);
  CHECK(contains(t.out, "final validation"));
  CHECK(contains(t.out, "saved best epoch"));
  const fs::path ckpt = ws.dir() / "a/model.jnrm";
  CHECK(fs::exists(ckpt));
  CHECK(fs::exists(ws.dir() / "a/reports/history.csv"));

  const fs::path cfg_b = ws.config("b.json", "b");
  REQUIRE(run("gen -c " + cfg_b.string()).code == 0);
  REQUIRE(run("train -c " + cfg_b.string()).code == 0);
  CHECK(slurp(ckpt) == slurp(ws.dir() / "b/model.jnrm"));

  const fs::path cfg_c = ws.config("c.json", "c");
  CHECK(run("train -c " + cfg_c.string()).code == 2);
  REQUIRE(run("gen -c " + cfg_c.string()).code == 0);
  const fs::path train_file = ws.dir() / "c/data/train.jnrd";
  std::string data = slurp(train_file);
  data[1] = 'X';
  std::ofstream(train_file, std::ios::binary | std::ios::trunc) << data;
  const Run corrupt = run("train -c " + cfg_c.string());
  CHECK(corrupt.code == 2);
  CHECK(contains(corrupt.out, train_file.string()));
  CHECK_FALSE(fs::exists(ws.dir() / "c/model.jnrm"));

  const Run e1 = run("eval -c " + cfg.string() + " --mode top1");
  const Run e2 = run("eval -c " + cfg.string() + " --mode top2");
  REQUIRE(e1.code == 0);
  REQUIRE(e2.code == 0);
  CHECK(contains(e1.out, "Top-1"));
  const fs::path reports = ws.dir() / "a/reports";
  CHECK(fs::exists(reports / "eval_model_test_top1.json"));
  CHECK(fs::exists(reports / "eval_model_test_top1.txt"));
  CHECK(fs::exists(reports / "eval_model_test_top2.json"));
  auto accuracy = [&](const char* name) {
    const std::string j = slurp(reports / name);
    const auto at = j.find("\"accuracy\":");
    REQUIRE(at != std::string::npos);
    return std::stod(j.substr(at + 11));
  };
  CHECK(accuracy("eval_model_test_top2.json") >= accuracy("eval_model_test_top1.json"));

  REQUIRE(run("eval -c " + cfg.string() + " --no-adrs").code == 0);
  CHECK(fs::exists(reports / "eval_model_test_top1_noadrs.json"));
  REQUIRE(run("eval -c " + cfg.string() + " --baseline random --split val").code == 0);
  CHECK(fs::exists(reports / "eval_random_val_top1.json"));
  CHECK(run("eval -c " + cfg.string() + " --mode top3").code == 1);

  // Same data dims, different backbone.
  const fs::path other = ws.dir() / "other.json";
  std::ofstream(other) << "{\"gen\": {\"height\": 32, \"width\": 32}, \"paths\": {\"dataset_dir\": \""
                       << (ws.dir() / "a/data").string() << "\", \"checkpoint\": \""
                       << ckpt.string() << "\", \"report_dir\": \""
                       << (ws.dir() / "other").string() << "\"}}";
  const Run mismatch = run("eval -c " + other.string());
  CHECK(mismatch.code == 2);
  CHECK(contains(mismatch.out, ckpt.string()));

  const fs::path broken = ws.dir() / "broken.jnrm";
  std::string bytes = slurp(ckpt);
  bytes[0] = 'X';
  std::ofstream(broken, std::ios::binary) << bytes;
  const Run bad = run("eval -c " + cfg.string() + " --checkpoint " + broken.string());
  CHECK(bad.code == 2);
  CHECK(contains(bad.out, broken.string()));

  const fs::path preds = ws.dir() / "preds.csv";
  std::ofstream(preds) << "a1,p1,a2,p2,a3,p3,a4,orientation_deg,ground_truth\n"
                       << "93,0.9,9,0.5,3,0.5,2,180,93\n17,0.2,1,0.5,7,0.6,1,180,17\n";
  REQUIRE(run("eval -c " + cfg.string() + " --predictions " + preds.string()).code == 0);
  CHECK(contains(slurp(reports / "eval_predictions_top1.json"), "\"accuracy\": 1.0"));
}

TEST_CASE("cli: weights ablation") {
  Workspace ws("jnr_cli_ablate");
  const fs::path cfg = ws.config("a.json", "a", 120, 1);
  REQUIRE(run("gen -c " + cfg.string()).code == 0);
  const Run r = run("ablate -c " + cfg.string() + " --grid weights");
  REQUIRE(r.code == 0);
  const std::string csv = slurp(ws.dir() / "a/reports/ablation_weights.csv");
  int lines = 0;
  for (char ch : csv) lines += ch == '\n';
  CHECK(lines == 6);
  CHECK(contains(csv, "alpha=0.2/0.3/0.3/0.2"));
  CHECK(run("ablate -c " + cfg.string() + " --grid depth").code == 1);
}

TEST_CASE("cli: gradcheck") {
  const Run ok = run("gradcheck");
  CHECK(ok.code == 0);
  CHECK(contains(ok.out, "PASS"));
  CHECK(contains(ok.out, "conv1.weight"));
  CHECK(contains(ok.out, "head_count.bias"));
  const Run bad = run("gradcheck --corrupt-gradient");
  CHECK(bad.code == 4);
  CHECK(contains(bad.out, "FAIL"));
  CHECK(run("gradcheck --probes 10").code == 1);
}

TEST_CASE("cli: random baseline on a balanced set") {
  Workspace ws("jnr_cli_baseline");
  const fs::path cfg = ws.dir() / "run.json";
  std::ofstream(cfg) << "{\"gen\": {\"n_total\": 3000, \"class_skew\": 0.0, \"balance_visibility\": true},"
                     << " \"paths\": {\"dataset_dir\": \"" << (ws.dir() / "data").string()
                     << "\", \"report_dir\": \"" << (ws.dir() / "reports").string() << "\"}}";
  REQUIRE(run("gen -c " + cfg.string()).code == 0);
  // 255 test samples x 400 trials = 102,000 sample-trials.
  REQUIRE(run("eval -c " + cfg.string() + " --baseline random --mode top1 --trials 400").code == 0);
  const fs::path report = ws.dir() / "reports/eval_random_test_top1.json";
  const std::string j = slurp(report);
  const auto at = j.find("\"accuracy\":");
  REQUIRE(at != std::string::npos);
  const double acc = std::stod(j.substr(at + 11));
  CHECK(acc >= 0.0069);
  CHECK(acc <= 0.0129);
  CHECK(contains(j, "\"total\": 102000"));

  REQUIRE(run("eval -c " + cfg.string() + " --baseline random --mode top1 --trials 400").code == 0);
  CHECK(slurp(report) == j);
}

TEST_CASE("cli: backbone ablation grid") {
  Workspace ws("jnr_cli_backbone");
  const fs::path cfg = ws.dir() / "run.json";
  std::ofstream(cfg) << "{\"gen\": {\"n_total\": 60}, \"train\": {\"epochs\": 1},"
                     << " \"paths\": {\"dataset_dir\": \"" << (ws.dir() / "data").string()
                     << "\", \"report_dir\": \"" << (ws.dir() / "reports").string() << "\"}}";
  REQUIRE(run("gen -c " + cfg.string()).code == 0);
  REQUIRE(run("ablate -c " + cfg.string() + " --grid backbone").code == 0);
  std::ifstream in(ws.dir() / "reports/ablation_backbone.csv");
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (std::size_t comma; (comma = line.find(',', start)) != std::string::npos; start = comma + 1)
      cells.push_back(line.substr(start, comma - start));
    cells.push_back(line.substr(start));
    rows.push_back(cells);
  }
  REQUIRE(rows.size() == 12);
  const std::array<const char*, 3> params{"48158", "126014", "419966"};
  for (std::size_t p = 0; p < 3; ++p) {
    for (std::size_t b = 0; b < 4; ++b) {
      CHECK(rows[4 * p + b][6] == params[p]);
      CHECK(rows[4 * p + b].back() == "ok");
    }
    CHECK(std::stoull(rows[4 * p + 1][7]) == 2 * std::stoull(rows[4 * p][7]));
  }
}

TEST_CASE("cli: divergence exits 3") {
  Workspace ws("jnr_cli_diverge");
  const fs::path cfg = ws.dir() / "run.json";
  std::ofstream(cfg) << "{\"gen\": {\"n_total\": 100, \"height\": 32, \"width\": 32},"
                     << " \"net\": {\"conv_blocks\": [{\"out_channels\": 4}], \"feature_dim\": 8},"
                     << " \"train\": {\"epochs\": 3, \"learning_rate\": 1e300},"
                     << " \"paths\": {\"dataset_dir\": \"" << (ws.dir() / "data").string()
                     << "\", \"checkpoint\": \"" << (ws.dir() / "m.jnrm").string()
                     << "\", \"report_dir\": \"" << (ws.dir() / "reports").string() << "\"}}";
  REQUIRE(run("gen -c " + cfg.string()).code == 0);
  const Run r = run("train -c " + cfg.string());
  CHECK(r.code == 3);
  CHECK(contains(r.out, "diverged"));
}
