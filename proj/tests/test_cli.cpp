#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include "mixent/cli.hpp"
#include "mixent/io.hpp"

using namespace mixent;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch() {
  static const fs::path dir = [] {
    const fs::path p = fs::temp_directory_path() / ("mixent_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

std::string write_file(const std::string& name, const std::string& text) {
  const fs::path path = scratch() / name;
  std::ofstream(path) << text;
  return path.string();
}

const std::string& hand4() {
  static const std::string path = write_file("hand4.csv", "x1,y\n0.0,a\n1.0,b\n2.5,a\n10.0,b\n");
  return path;
}

const std::string& constant_labels() {
  static const std::string path =
      write_file("constant_labels.csv", "x1,x2,y\n0,1,c\n1,0.5,c\n2,3,c\n4,1,c\n5,7,c\n-1,2,c\n");
  return path;
}

const std::string& logistic_json() {
  static const std::string path = write_file(
      "logistic.json",
      R"({"schema":"mixent.model/1","type":"logistic-gaussian","weights":[1,-1,0.5],"intercept":0.3})");
  return path;
}

const std::string& null_json() {
  static const std::string path = write_file(
      "null.json", R"({"schema":"mixent.model/1","type":"logistic-gaussian","weights":[0,0],"intercept":0})");
  return path;
}

}  // namespace

TEST_CASE("estimate on the hand fixture") {
  const Run r = run({"estimate", "--input", hand4(), "--label", "y", "--k", "2"});
  CHECK(r.code == kExitSuccess);
  CHECK(r.out == "0.173287\n");
  CHECK(r.err.find("a=0 b=1") != std::string::npos);

  const Run bits = run({"estimate", "--input", hand4(), "--k", "2", "--units", "bits"});
  CHECK(bits.out == "0.25\n");
}

TEST_CASE("estimate on constant labels warns about the negative value") {
  const Run r = run({"estimate", "--input", constant_labels(), "--k", "3"});
  CHECK(r.code == kExitSuccess);
  CHECK(r.out == "-0.287682\n");
  CHECK(r.err.find("negative") != std::string::npos);

  const Run clamped = run({"estimate", "--input", constant_labels(), "--k", "3", "--clamp-nonnegative"});
  CHECK(clamped.out == "0\n");

  const Run mi = run({"mi", "--input", constant_labels(), "--k", "3"});
  CHECK(mi.code == kExitSuccess);
  CHECK(mi.out == "0.287682\n");
}

TEST_CASE("JSON and CSV outputs") {
  const Run json_run = run({"estimate", "--input", hand4(), "--k", "2", "--output", "json"});
  const nlohmann::json doc = nlohmann::json::parse(json_run.out);
  CHECK(doc["schema"] == kEstimateSchema);
  CHECK(doc["value"].get<double>() == std::log(2.0) / 4.0);
  CHECK(doc["labels"][1]["label"] == "b");
  CHECK(doc["labels"][1]["id"] == 1);

  const Run csv = run({"estimate", "--input", hand4(), "--k", "2", "--output", "csv"});
  CHECK(csv.out == "quantity,value,units,k,n,tie_events,negative,clamped\n"
                   "conditional_entropy,0.17328679513998632,nats,2,4,0,false,false\n");
}

TEST_CASE("usage errors exit with 1") {
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"frobnicate"}).code == kExitUsage);
  CHECK(run({"estimate", "--input", hand4(), "--k", "2", "--alpha", "0.5"}).code == kExitUsage);
  CHECK(run({"estimate", "--input", hand4(), "--units", "furlongs"}).code == kExitUsage);
  CHECK(run({"estimate", "--input", hand4(), "--output", "xml"}).code == kExitUsage);
  CHECK(run({"generate", "--model", logistic_json(), "--n", "10"}).code == kExitUsage);
  CHECK(run({"convergence", "--model", logistic_json(), "--n-grid", "50"}).code == kExitUsage);
  CHECK(run({"lemma-check", "--model", null_json(), "--x", "0,0", "--n", "50", "--k", "2", "--replicates", "10"}).code ==
        kExitUsage);
  CHECK(run({"density-check", "--model", null_json(), "--x", "0,0", "--n", "50", "--k", "2"}).code == kExitUsage);
  CHECK(run({"--help"}).code == kExitSuccess);
}

TEST_CASE("input errors exit with 2") {
  const std::string nan_file = write_file("nan.csv", "x1,y\n0,a\nnan,b\n");
  const Run r = run({"estimate", "--input", nan_file});
  CHECK(r.code == kExitInput);
  CHECK(r.err.find("row 2") != std::string::npos);
  CHECK(r.err.find("'x1'") != std::string::npos);
  CHECK(run({"estimate", "--input", hand4(), "--k", "4"}).code == kExitInput);
  CHECK(run({"estimate", "--input", (scratch() / "missing.csv").string()}).code == kExitInput);
  const std::string bad_model = write_file("bad.json", R"({"schema":"mixent.model/1","type":"logistic-gaussian"})");
  CHECK(run({"generate", "--model", bad_model, "--n", "10", "--seed", "1"}).code == kExitInput);
  CHECK(run({"lemma-check", "--model", null_json(), "--x", "0,zero", "--n", "50", "--k", "2", "--replicates", "10",
             "--seed", "1"})
            .code == kExitInput);
}

TEST_CASE("insufficient shell hits exit with 3") {
  const Run r = run({"lemma-check", "--model", null_json(), "--x", "0,0", "--n", "200", "--k", "3", "--replicates",
                     "100", "--seed", "1"});
  CHECK(r.code == kExitNumeric);
  CHECK(r.err.find("shell hits") != std::string::npos);
}

TEST_CASE("generate then estimate is reproducible") {
  const Run a = run({"generate", "--model", logistic_json(), "--n", "300", "--seed", "5"});
  const Run b = run({"generate", "--model", logistic_json(), "--n", "300", "--seed", "5"});
  const Run c = run({"generate", "--model", logistic_json(), "--n", "300", "--seed", "6"});
  CHECK(a.code == kExitSuccess);
  CHECK(a.out == b.out);
  CHECK(a.out != c.out);
  const std::string data = write_file("generated.csv", a.out);
  const Run e1 = run({"estimate", "--input", data});
  const Run e2 = run({"estimate", "--input", data, "--threads", "4"});
  CHECK(e1.out == e2.out);
  const Run ranked = run({"rank-features", "--input", data, "--output", "csv"});
  CHECK(ranked.code == kExitSuccess);
  CHECK(ranked.out.rfind("rank,feature,index,mutual_information,degenerate\n1,", 0) == 0);

  const Run json_data = run({"generate", "--model", logistic_json(), "--n", "3", "--seed", "5", "--output", "json"});
  CHECK(nlohmann::json::parse(json_data.out)["labels"].size() == 3);
}

TEST_CASE("convergence from a run config") {
  const std::string config = write_file("run.json", R"({
    "schema": "mixent.run/1",
    "model": {"type": "logistic-gaussian", "weights": [1, -1, 0.5], "intercept": 0.3},
    "plan": {"n_grid": [100, 200], "replicates": 3, "estimators": ["knn-conditional"]}
  })");
  const Run r = run({"convergence", "--config", config, "--seed", "7", "--output", "json"});
  REQUIRE(r.code == kExitSuccess);
  const nlohmann::json doc = nlohmann::json::parse(r.out);
  CHECK(doc["rows"].size() == 2);
  CHECK(doc["plan"]["base_seed"] == 7);
  CHECK(doc["rows"][1]["n"] == 200);

  const Run flags = run({"convergence", "--model", logistic_json(), "--n-grid", "100,200", "--replicates", "3",
                         "--estimators", "knn-conditional", "--seed", "7", "--output", "json", "--threads", "3"});
  CHECK(flags.out == r.out);
  CHECK(run({"convergence", "--config", config, "--model", logistic_json(), "--seed", "7"}).code == kExitUsage);
}

TEST_CASE("lemma-check and density-check") {
  const Run lemma = run({"lemma-check", "--model", null_json(), "--x", "0,0", "--n", "200", "--k", "1",
                         "--replicates", "20000", "--seed", "3", "--output", "json"});
  REQUIRE(lemma.code == kExitSuccess);
  const nlohmann::json doc = nlohmann::json::parse(lemma.out);
  CHECK(doc["acceptance"] == true);
  CHECK(doc["replicates_used"].get<int>() >= 2000);

  const Run density = run({"density-check", "--model", null_json(), "--x", "0,0", "--n", "50", "--k", "5",
                           "--samples", "5000", "--seed", "3"});
  CHECK(density.code == kExitSuccess);
  CHECK(density.out.find("PASS") != std::string::npos);
}

TEST_CASE("installed binary reports exit codes") {
  const std::string binary = MIXENT_CLI_PATH;
  const std::string quiet = " > /dev/null 2>&1";
  auto status = [&](const std::string& args) {
    const int raw = std::system((binary + " " + args + quiet).c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  CHECK(status("estimate --input " + hand4() + " --k 2") == 0);
  CHECK(status("estimate --input " + hand4() + " --k 2 --alpha 0.3") == 1);
  CHECK(status("estimate --input " + hand4() + " --k 9") == 2);
  CHECK(status("lemma-check --model " + null_json() + " --x 0,0 --n 200 --k 3 --replicates 100 --seed 1") == 3);
  CHECK(status("--version") == 0);
}
