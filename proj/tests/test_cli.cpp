#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qgsm/bitstream.hpp"
#include "qgsm/estimator.hpp"
#include "qgsm/rng.hpp"
#include "qgsm/theory.hpp"

using namespace qgsm;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_all(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out.good());
  out << text;
}

fs::path temp_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("qgsm_cli_test_" + std::to_string(getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

// run the CLI with `args`, capturing stdout, stderr, and the exit code
RunResult run_cli(const std::string& args) {
  static int call = 0;
  const fs::path errfile = temp_dir() / ("stderr_" + std::to_string(call++) + ".txt");
  const std::string cmd =
      std::string("\"") + QGSM_CLI_PATH + "\" " + args + " 2>\"" + errfile.string() + "\"";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult r;
  char buf[4096];
  std::size_t got = 0;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = read_all(errfile);
  return r;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) lines.push_back(line);
  return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) fields.push_back(f);
  return fields;
}

const fs::path kFixtures = QGSM_FIXTURE_DIR;

}  // namespace

TEST_CASE("bounds emits exact closed-form rows") {
  const RunResult r = run_cli("bounds --sigma2 1 --c2 2 --rates \"0,3,inf\"");
  REQUIRE(r.exit_code == 0);
  const auto lines = split_lines(r.out);
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == "rate_b,quantized_bound,pinsker,distortion_rate");

  const auto row0 = split_csv(lines[1]);
  REQUIRE(row0.size() == 4);
  CHECK(std::stod(row0[0]) == 0.0);
  CHECK(std::stod(row0[1]) == 2.0);  // zero-rate risk is c2
  CHECK(std::stod(row0[2]) == pinsker_risk(1.0, 2.0));
  CHECK(std::stod(row0[3]) == 1.0);  // sigma2 * 2^0

  const auto row3 = split_csv(lines[2]);
  CHECK(std::stod(row3[1]) == doctest::Approx(0.6875).epsilon(1e-15));
  CHECK(std::stod(row3[3]) == distortion_rate_gaussian(3.0, 1.0));

  const auto rowinf = split_csv(lines[3]);
  CHECK(std::stod(rowinf[1]) == pinsker_risk(1.0, 2.0));
  CHECK(std::stod(rowinf[3]) == 0.0);
}

TEST_CASE("bounds range syntax and error handling") {
  const RunResult r = run_cli("bounds --rates \"0:0.5:2\"");
  REQUIRE(r.exit_code == 0);
  CHECK(split_lines(r.out).size() == 1 + 5);  // 0, 0.5, 1, 1.5, 2

  const RunResult bad = run_cli("bounds --rates \"-1\"");
  CHECK(bad.exit_code == 1);
  CHECK(bad.err.find("rates") != std::string::npos);
}

TEST_CASE("encode reproduces the golden stream byte for byte") {
  const fs::path out = temp_dir() / "regen.qgsm";
  const RunResult r = run_cli("encode --in \"" + (kFixtures / "golden_input.txt").string() +
                              "\" --out \"" + out.string() + "\" --rate 1 --seed 7");
  REQUIRE(r.exit_code == 0);
  CHECK(read_all(out) == read_all(kFixtures / "golden.qgsm"));

  const nlohmann::json j = nlohmann::json::parse(r.out);
  CHECK(j.at("n") == 8);
  CHECK(j.at("mag_bits") == 2);
  CHECK(j.at("dir_bits") == 8);
  CHECK(j.at("payload_bits") == 10);
  CHECK(j.at("mag_index") == 1);
  CHECK(j.at("achieved_inner").get<double>() > 0.0);
}

TEST_CASE("decode reproduces the golden text output") {
  const fs::path out = temp_dir() / "golden_theta_regen.txt";
  const RunResult r = run_cli("decode --in \"" + (kFixtures / "golden.qgsm").string() +
                              "\" --out \"" + out.string() + "\"");
  REQUIRE(r.exit_code == 0);
  CHECK(read_all(out) == read_all(kFixtures / "golden_theta.txt"));

  // the text file round-trips the in-process decode exactly
  const std::string stream = read_all(kFixtures / "golden.qgsm");
  const std::vector<std::uint8_t> bytes(stream.begin(), stream.end());
  const Unpacked u = unpack(bytes);
  const Vector theta = quantized_decode(u.index, u.header.params());
  const auto lines = split_lines(read_all(out));
  REQUIRE(lines.size() == theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) CHECK(std::stod(lines[i]) == theta[i]);
}

TEST_CASE("cli round trip equals the in-process pipeline") {
  const std::uint32_t n = 12;
  Vector x(n);
  rng::fill_gaussian(x, 777, 0);
  std::string text;
  for (const double v : x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g\n", v);
    text += buf;
  }
  const fs::path in = temp_dir() / "roundtrip_in.txt";
  const fs::path qgsm_file = temp_dir() / "roundtrip.qgsm";
  const fs::path out = temp_dir() / "roundtrip_out.txt";
  write_all(in, text);

  const RunResult enc = run_cli("encode --in \"" + in.string() + "\" --out \"" +
                                qgsm_file.string() +
                                "\" --rate 1/2 --sigma2 1 --c2 2 --seed 11");
  REQUIRE(enc.exit_code == 0);
  const RunResult dec =
      run_cli("decode --in \"" + qgsm_file.string() + "\" --out \"" + out.string() + "\"");
  REQUIRE(dec.exit_code == 0);

  const ModelParams p{n, Rational(1, 2), 1.0, 2.0};
  const Vector want = quantized_decode(quantized_encode(x, p, 11), p);
  const auto lines = split_lines(read_all(out));
  REQUIRE(lines.size() == n);
  for (std::size_t i = 0; i < n; ++i) CHECK(std::stod(lines[i]) == want[i]);
}

TEST_CASE("encode reports zero direction bits at zero rate") {
  const fs::path out = temp_dir() / "zero_rate.qgsm";
  const RunResult r = run_cli("encode --in \"" + (kFixtures / "golden_input.txt").string() +
                              "\" --out \"" + out.string() + "\" --rate 0 --seed 7");
  REQUIRE(r.exit_code == 0);
  const nlohmann::json j = nlohmann::json::parse(r.out);
  CHECK(j.at("dir_bits") == 0);
  CHECK(j.at("dir_index") == 0);
  CHECK(j.at("payload_bits") == j.at("mag_bits"));
}

TEST_CASE("decode rejects corrupted streams with named errors") {
  const std::string good = read_all(kFixtures / "golden.qgsm");

  std::string bad = good;
  bad[0] = 'X';
  const fs::path magic_path = temp_dir() / "bad_magic.qgsm";
  write_all(magic_path, bad);
  RunResult r = run_cli("decode --in \"" + magic_path.string() + "\" --out \"" +
                        (temp_dir() / "junk.txt").string() + "\"");
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("magic") != std::string::npos);

  bad = good;
  bad[4] = 2;
  const fs::path version_path = temp_dir() / "bad_version.qgsm";
  write_all(version_path, bad);
  r = run_cli("decode --in \"" + version_path.string() + "\" --out \"" +
              (temp_dir() / "junk.txt").string() + "\"");
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("unsupported version") != std::string::npos);

  const fs::path cut_path = temp_dir() / "cut.qgsm";
  write_all(cut_path, good.substr(0, 20));
  r = run_cli("decode --in \"" + cut_path.string() + "\" --out \"" +
              (temp_dir() / "junk.txt").string() + "\"");
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("truncated") != std::string::npos);

  r = run_cli("decode --in \"" + (temp_dir() / "does_not_exist.qgsm").string() + "\" --out \"" +
              (temp_dir() / "junk.txt").string() + "\"");
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("cannot open") != std::string::npos);
}

TEST_CASE("encode rejects malformed input vectors") {
  const fs::path in = temp_dir() / "words.txt";
  write_all(in, "1.0 banana 2.0\n");
  const RunResult r = run_cli("encode --in \"" + in.string() + "\" --out \"" +
                              (temp_dir() / "junk.qgsm").string() + "\" --rate 1");
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("not a number list") != std::string::npos);

  const fs::path empty = temp_dir() / "empty.txt";
  write_all(empty, "");
  const RunResult e = run_cli("encode --in \"" + empty.string() + "\" --out \"" +
                              (temp_dir() / "junk.qgsm").string() + "\" --rate 1");
  CHECK(e.exit_code == 1);
  CHECK(e.err.find("empty") != std::string::npos);
}

TEST_CASE("simulate emits identical csv bytes for identical specs") {
  const std::string spec = R"({
    "n_values": [4, 8],
    "rate_b": [1, 2],
    "sigma2": 1.0,
    "c2": 1.0,
    "replicates": 5,
    "master_seed": 3,
    "estimators": ["zero", "quantized"]
  })";
  const fs::path spec_path = temp_dir() / "tiny_spec.json";
  write_all(spec_path, spec);

  const RunResult a = run_cli("simulate --spec \"" + spec_path.string() + "\"");
  REQUIRE(a.exit_code == 0);
  const RunResult b = run_cli("simulate --spec \"" + spec_path.string() + "\" --workers 3");
  REQUIRE(b.exit_code == 0);
  CHECK(a.out == b.out);
  CHECK(split_lines(a.out)[0] == "n,estimator,mean_mse,sd_mse,lower_bound,replicates");

  // --csv writes the same bytes to a file; --svg emits a chart per estimator
  const fs::path csv_path = temp_dir() / "tiny.csv";
  const fs::path svg_path = temp_dir() / "tiny.svg";
  const RunResult c = run_cli("simulate --spec \"" + spec_path.string() + "\" --csv \"" +
                              csv_path.string() + "\" --svg \"" + svg_path.string() + "\"");
  REQUIRE(c.exit_code == 0);
  CHECK(read_all(csv_path) == a.out);
  const std::string svg = read_all(svg_path);
  CHECK(svg.find("data-estimator=\"quantized\"") != std::string::npos);
  CHECK(svg.find("data-estimator=\"zero\"") != std::string::npos);
  CHECK(svg.find("stroke-dasharray") != std::string::npos);
}

TEST_CASE("simulate usage errors name the offending field") {
  const fs::path spec_path = temp_dir() / "bad_spec.json";
  write_all(spec_path, R"({"n_values":[4],"rate_b":[0,1],"sigma2":1.0,"c2":1.0,
    "replicates":1,"master_seed":0,"estimators":["zero"],"nope":1})");
  const RunResult r = run_cli("simulate --spec \"" + spec_path.string() + "\"");
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("unknown field \"nope\"") != std::string::npos);

  const RunResult missing = run_cli("simulate --spec \"" +
                                    (temp_dir() / "no_such_spec.json").string() + "\"");
  CHECK(missing.exit_code == 1);
  CHECK(missing.err.find("cannot open") != std::string::npos);
}

TEST_CASE("simulate desk guard surfaces per cell") {
  const fs::path spec_path = temp_dir() / "big_spec.json";
  write_all(spec_path, R"({"n_values":[16, 56],"rate_b":[1,2],"sigma2":1.0,"c2":1.0,
    "replicates":2,"master_seed":0,"estimators":["zero"]})");
  const RunResult r = run_cli("simulate --spec \"" + spec_path.string() + "\"");
  CHECK(r.exit_code == 1);  // the n=56 cell fails
  CHECK(r.out.find("16,zero") != std::string::npos);  // the n=16 cell still ran
  CHECK(r.err.find("n=56") != std::string::npos);
  CHECK(r.err.find("26 bits") != std::string::npos);

  const RunResult forced =
      run_cli("simulate --spec \"" + spec_path.string() + "\" --allow-large");
  CHECK(forced.exit_code == 0);
}

TEST_CASE("decompose rows satisfy the loss identity") {
  const RunResult r =
      run_cli("decompose --n 24 --rate 1/2 --b2 1 --replicates 8 --seed 5 --workers 1");
  REQUIRE(r.exit_code == 0);
  const auto lines = split_lines(r.out);
  REQUIRE(lines.size() == 1 + 8 + 1);
  CHECK(lines[0] == "replicate,a1,a2,a3,total");

  double sum_a1 = 0.0, sum_total = 0.0;
  for (int i = 1; i <= 8; ++i) {
    const auto f = split_csv(lines[i]);
    REQUIRE(f.size() == 5);
    CHECK(f[0] == std::to_string(i - 1));
    const double a1 = std::stod(f[1]), a2 = std::stod(f[2]), a3 = std::stod(f[3]),
                 total = std::stod(f[4]);
    CHECK(std::fabs(a1 + a2 + a3 - total) <= 1e-10 * std::max(1.0, total));
    sum_a1 += a1;
    sum_total += total;
  }
  const auto mean = split_csv(lines[9]);
  REQUIRE(mean.size() == 5);
  CHECK(mean[0] == "mean");
  CHECK(std::stod(mean[1]) == doctest::Approx(sum_a1 / 8.0).epsilon(1e-12));
  CHECK(std::stod(mean[4]) == doctest::Approx(sum_total / 8.0).epsilon(1e-12));
}

TEST_CASE("verify runs a named suite and reports per suite") {
  const RunResult r = run_cli("verify --suite sphere-density");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("suite sphere-density: PASS") != std::string::npos);

  const RunResult bad = run_cli("verify --suite bogus");
  CHECK(bad.exit_code != 0);
  CHECK(bad.err.find("bogus") != std::string::npos);
}

TEST_CASE("usage errors: unknown flags and missing requireds are rejected") {
  CHECK(run_cli("bounds --nope 3").exit_code != 0);
  CHECK(run_cli("encode --in x.txt --out y.qgsm").exit_code != 0);  // --rate missing
  CHECK(run_cli("").exit_code != 0);                                // subcommand required
  CHECK(run_cli("frobnicate").exit_code != 0);
}
