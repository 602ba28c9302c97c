#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qgsm/bitstream.hpp"
#include "qgsm/codebook.hpp"
#include "qgsm/estimator.hpp"
#include "qgsm/model.hpp"
#include "qgsm/simulate.hpp"
#include "qgsm/theory.hpp"
#include "qgsm/verify.hpp"

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_number(const std::string& token) {
  if (token == "inf") return std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(token, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("rates: bad number \"" + token + "\"");
  }
  if (used != token.size()) throw std::invalid_argument("rates: bad number \"" + token + "\"");
  return v;
}

// comma-separated items; each item is a number, "inf", or an inclusive
// lo:step:hi progression
std::vector<double> expand_rates(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto c1 = item.find(':');
    if (c1 == std::string::npos) {
      out.push_back(parse_number(item));
      continue;
    }
    const auto c2 = item.find(':', c1 + 1);
    if (c2 == std::string::npos)
      throw std::invalid_argument("rates: range needs lo:step:hi, got \"" + item + "\"");
    const double lo = parse_number(item.substr(0, c1));
    const double step = parse_number(item.substr(c1 + 1, c2 - c1 - 1));
    const double hi = parse_number(item.substr(c2 + 1));
    if (!(step > 0.0) || !std::isfinite(step) || !std::isfinite(lo) || !std::isfinite(hi) ||
        hi < lo)
      throw std::invalid_argument("rates: bad range \"" + item + "\"");
    const long long count = static_cast<long long>(std::floor((hi - lo) / step + 1e-9));
    for (long long i = 0; i <= count; ++i) out.push_back(lo + static_cast<double>(i) * step);
  }
  if (out.empty()) throw std::invalid_argument("rates: no values given");
  for (const double r : out)
    if (std::isnan(r) || r < 0.0) throw std::invalid_argument("rates: must be nonnegative");
  return out;
}

qgsm::Vector read_vector_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw qgsm::ParseError("cannot open input file " + path);
  qgsm::Vector v;
  double x = 0.0;
  while (in >> x) v.push_back(x);
  if (!in.eof()) throw qgsm::ParseError("malformed input file " + path + ": not a number list");
  if (v.empty()) throw qgsm::ParseError("malformed input file " + path + ": empty");
  for (const double e : v)
    if (!std::isfinite(e))
      throw qgsm::ParseError("malformed input file " + path + ": entries must be finite");
  return v;
}

std::vector<std::uint8_t> read_binary_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw qgsm::ParseError("cannot open input file " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

void write_file(const std::string& path, const void* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file " + path);
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_text_file(const std::string& path, const std::string& text) {
  write_file(path, text.data(), text.size());
}

struct BoundsOpts {
  double sigma2 = 1.0;
  double c2 = 1.0;
  std::string rates = "0:0.1:3";
};

int run_bounds(const BoundsOpts& o) {
  const std::vector<double> rates = expand_rates(o.rates);
  std::string out = "rate_b,quantized_bound,pinsker,distortion_rate\n";
  for (const double b : rates) {
    out += fmt17(b);
    out += ',';
    out += fmt17(qgsm::quantized_risk_bound(b, o.sigma2, o.c2));
    out += ',';
    out += fmt17(qgsm::pinsker_risk(o.sigma2, o.c2));
    out += ',';
    out += fmt17(qgsm::distortion_rate_gaussian(b, o.sigma2));
    out += '\n';
  }
  std::fputs(out.c_str(), stdout);
  return 0;
}

struct EncodeOpts {
  std::string in;
  std::string out;
  double sigma2 = 1.0;
  double c2 = 1.0;
  std::string rate;
  std::uint64_t seed = 0;
  unsigned workers = 0;
};

int run_encode(const EncodeOpts& o) {
  const qgsm::Vector x = read_vector_file(o.in);
  qgsm::ModelParams params;
  params.n = static_cast<std::uint32_t>(x.size());
  params.rate_b = qgsm::parse_rational(o.rate);
  params.sigma2 = o.sigma2;
  params.c2 = o.c2;
  params.validate();

  const qgsm::EncodeOutcome enc = qgsm::quantized_encode_detail(x, params, o.seed, o.workers);
  const qgsm::StreamHeader header = qgsm::StreamHeader::from(params, o.seed);
  const std::vector<std::uint8_t> bytes = qgsm::pack(header, enc.index);
  write_file(o.out, bytes.data(), bytes.size());

  const unsigned mag_bits = qgsm::width_bits(qgsm::magnitude_grid(params.n, params.c2).size);
  const unsigned dir_bits = qgsm::width_bits(qgsm::codeword_count(params.n, params.rate_b));
  nlohmann::json j;
  j["n"] = params.n;
  j["mag_index"] = enc.index.mag_index;
  j["dir_index"] = enc.index.dir_index;
  j["mag_bits"] = mag_bits;
  j["dir_bits"] = dir_bits;
  j["payload_bits"] = mag_bits + dir_bits;
  j["achieved_inner"] = enc.inner;
  std::fputs((j.dump() + "\n").c_str(), stdout);
  return 0;
}

struct DecodeOpts {
  std::string in;
  std::string out;
};

int run_decode(const DecodeOpts& o) {
  const std::vector<std::uint8_t> bytes = read_binary_file(o.in);
  const qgsm::Unpacked stream = qgsm::unpack(bytes);
  const qgsm::Vector theta = qgsm::quantized_decode(stream.index, stream.header.params());
  std::string text;
  for (const double v : theta) {
    text += fmt17(v);
    text += '\n';
  }
  write_text_file(o.out, text);
  return 0;
}

struct SimulateOpts {
  std::string spec_path;
  std::string csv_path;
  std::string svg_path;
  unsigned workers = 0;
  bool allow_large = false;
};

int run_simulate(const SimulateOpts& o) {
  std::ifstream in(o.spec_path);
  if (!in) throw qgsm::ParseError("cannot open spec file " + o.spec_path);
  std::stringstream buf;
  buf << in.rdbuf();
  const qgsm::ExperimentSpec spec = qgsm::parse_spec(buf.str());

  qgsm::RunOptions options;
  options.workers = o.workers;
  options.allow_large = o.allow_large;
  const qgsm::GridResult grid = qgsm::run_grid(spec, options);

  if (!grid.cells.empty()) {
    const std::string csv = qgsm::emit_csv(grid.cells);
    if (o.csv_path.empty())
      std::fputs(csv.c_str(), stdout);
    else
      write_text_file(o.csv_path, csv);
    if (!o.svg_path.empty()) write_text_file(o.svg_path, qgsm::emit_svg(grid.cells));
  }
  for (const qgsm::CellFailure& f : grid.failures)
    std::fprintf(stderr, "cell n=%u estimator=%s: %s\n", f.n, qgsm::estimator_name(f.estimator),
                 f.message.c_str());
  return grid.failures.empty() ? 0 : 1;
}

struct DecomposeOpts {
  std::uint32_t n = 0;
  std::string rate;
  double sigma2 = 1.0;
  double b2 = 1.0;
  std::optional<double> c2;
  std::uint32_t replicates = 100;
  std::uint64_t seed = 0;
  unsigned workers = 0;
  bool allow_large = false;
};

int run_decompose(const DecomposeOpts& o) {
  qgsm::ModelParams params;
  params.n = o.n;
  params.rate_b = qgsm::parse_rational(o.rate);
  params.sigma2 = o.sigma2;
  params.c2 = o.c2 ? *o.c2 : std::max(o.b2, 1.0);
  params.validate();

  qgsm::RunOptions options;
  options.workers = o.workers;
  options.allow_large = o.allow_large;
  const std::vector<qgsm::LossDecomposition> rows =
      qgsm::run_decomposition(params, o.b2, o.replicates, o.seed, options);

  std::string out = "replicate,a1,a2,a3,total\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out += std::to_string(i);
    out += ',';
    out += fmt17(rows[i].a1);
    out += ',';
    out += fmt17(rows[i].a2);
    out += ',';
    out += fmt17(rows[i].a3);
    out += ',';
    out += fmt17(rows[i].total);
    out += '\n';
  }
  const qgsm::LossDecomposition mean = qgsm::mean_decomposition(rows);
  out += "mean," + fmt17(mean.a1) + ',' + fmt17(mean.a2) + ',' + fmt17(mean.a3) + ',' +
         fmt17(mean.total) + '\n';
  std::fputs(out.c_str(), stdout);
  return 0;
}

struct VerifyOpts {
  std::string suite;
  unsigned workers = 0;
};

int run_verify(const VerifyOpts& o) {
  const std::vector<qgsm::SuiteResult> results = qgsm::run_suites(o.suite, o.workers);
  bool all = true;
  for (const qgsm::SuiteResult& s : results) {
    std::printf("suite %s: %s (%zu checks)\n", s.name.c_str(), s.pass ? "PASS" : "FAIL",
                s.checks.size());
    for (const qgsm::CheckResult& c : s.checks)
      if (!c.pass)
        std::printf("  check %s: observed %s exceeds limit %s\n", c.name.c_str(),
                    fmt17(c.observed).c_str(), fmt17(c.limit).c_str());
    all = all && s.pass;
  }
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quantized estimation toolkit for Gaussian sequence models"};
  app.require_subcommand(1);

  BoundsOpts bounds;
  CLI::App* cmd_bounds =
      app.add_subcommand("bounds", "closed-form risk and rate-distortion curves as CSV");
  cmd_bounds->add_option("--sigma2", bounds.sigma2, "noise variance");
  cmd_bounds->add_option("--c2", bounds.c2, "squared ball radius");
  cmd_bounds->add_option("--rates", bounds.rates,
                         "rate list: numbers, inf, or lo:step:hi (comma separated)");

  EncodeOpts encode;
  CLI::App* cmd_encode = app.add_subcommand("encode", "quantize a vector into a .qgsm stream");
  cmd_encode->add_option("--in", encode.in, "text file of observations")->required();
  cmd_encode->add_option("--out", encode.out, "output .qgsm path")->required();
  cmd_encode->add_option("--sigma2", encode.sigma2, "noise variance");
  cmd_encode->add_option("--c2", encode.c2, "squared ball radius");
  cmd_encode->add_option("--rate", encode.rate, "bits per coordinate, e.g. 1/2 or 0.5")
      ->required();
  cmd_encode->add_option("--seed", encode.seed, "codebook seed");
  cmd_encode->add_option("--workers", encode.workers, "search threads (0 = all cores)");

  DecodeOpts decode;
  CLI::App* cmd_decode = app.add_subcommand("decode", "reconstruct the estimate from a stream");
  cmd_decode->add_option("--in", decode.in, "input .qgsm path")->required();
  cmd_decode->add_option("--out", decode.out, "output text path")->required();

  SimulateOpts simulate;
  CLI::App* cmd_simulate = app.add_subcommand("simulate", "run a Monte Carlo experiment grid");
  cmd_simulate->add_option("--spec", simulate.spec_path, "experiment spec JSON file")->required();
  cmd_simulate->add_option("--csv", simulate.csv_path, "CSV output path (default stdout)");
  cmd_simulate->add_option("--svg", simulate.svg_path, "SVG chart output path");
  cmd_simulate->add_option("--workers", simulate.workers, "replicate threads (0 = all cores)");
  cmd_simulate->add_flag("--allow-large", simulate.allow_large,
                         "permit cells beyond the desk-scale n*B limit");

  DecomposeOpts decompose;
  CLI::App* cmd_decompose =
      app.add_subcommand("decompose", "per-replicate quantization/shrinkage/cross loss terms");
  cmd_decompose->add_option("--n", decompose.n, "dimension")->required();
  cmd_decompose->add_option("--rate", decompose.rate, "bits per coordinate")->required();
  cmd_decompose->add_option("--sigma2", decompose.sigma2, "noise variance");
  cmd_decompose->add_option("--b2", decompose.b2, "true signal energy")->required();
  cmd_decompose->add_option("--c2", decompose.c2, "squared ball radius (default max(b2, 1))");
  cmd_decompose->add_option("--replicates", decompose.replicates, "number of replicates");
  cmd_decompose->add_option("--seed", decompose.seed, "master seed");
  cmd_decompose->add_option("--workers", decompose.workers, "replicate threads (0 = all cores)");
  cmd_decompose->add_flag("--allow-large", decompose.allow_large,
                          "permit runs beyond the desk-scale n*B limit");

  VerifyOpts verify;
  CLI::App* cmd_verify =
      app.add_subcommand("verify", "empirical checks against the analytic bounds");
  std::vector<std::string> allowed = qgsm::suite_names();
  allowed.emplace_back("all");
  cmd_verify->add_option("--suite", verify.suite, "suite name or all")
      ->required()
      ->check(CLI::IsMember(allowed));
  cmd_verify->add_option("--workers", verify.workers, "search threads (0 = all cores)");

  int rc = 0;
  cmd_bounds->callback([&] { rc = run_bounds(bounds); });
  cmd_encode->callback([&] { rc = run_encode(encode); });
  cmd_decode->callback([&] { rc = run_decode(decode); });
  cmd_simulate->callback([&] { rc = run_simulate(simulate); });
  cmd_decompose->callback([&] { rc = run_decompose(decompose); });
  cmd_verify->callback([&] { rc = run_verify(verify); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return rc;
}
