#include "qgsm/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "qgsm/rng.hpp"
#include "qgsm/theory.hpp"

namespace qgsm {

namespace {

using json = nlohmann::json;

unsigned resolve_workers(unsigned workers) {
  if (workers != 0) return workers;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// static contiguous partition; fn(i) must only touch slot i of shared state
void parallel_for(std::uint64_t count, unsigned workers,
                  const std::function<void(std::uint64_t)>& fn) {
  unsigned w = resolve_workers(workers);
  if (static_cast<std::uint64_t>(w) > count) w = count == 0 ? 1 : static_cast<unsigned>(count);
  if (w <= 1) {
    for (std::uint64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(w);
  std::vector<std::exception_ptr> errors(w);
  for (unsigned c = 0; c < w; ++c) {
    const std::uint64_t lo = count * c / w;
    const std::uint64_t hi = count * (c + 1) / w;
    pool.emplace_back([&, lo, hi, c] {
      try {
        for (std::uint64_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// pairwise summation keeps float drift well below 1e-10 relative
double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 16) {
    double acc = 0.0;
    for (const double x : v) acc += x;
    return acc;
  }
  const std::size_t mid = v.size() / 2;
  return pairwise_sum(v.first(mid)) + pairwise_sum(v.subspan(mid));
}

struct Moments {
  double mean;
  double sd;
};

Moments aggregate(std::span<const double> values) {
  const double count = static_cast<double>(values.size());
  const double mean = pairwise_sum(values) / count;
  if (values.size() < 2) return {mean, 0.0};
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - mean;
    sq[i] = d * d;
  }
  return {mean, std::sqrt(pairwise_sum(sq) / (count - 1.0))};
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_coord(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

void require_spec(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument("spec: " + msg);
}

struct ReplicateSeeds {
  std::uint64_t theta;
  std::uint64_t noise;
  std::uint64_t codebook;
};

ReplicateSeeds replicate_seeds(std::uint64_t master, std::uint32_t n, std::uint64_t r) {
  return {rng::derive(master, rng::kDomainSimTheta, n, r),
          rng::derive(master, rng::kDomainSimNoise, n, r),
          rng::derive(master, rng::kDomainSimCodebook, n, r)};
}

}  // namespace

const char* estimator_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::james_stein: return "james_stein";
    case EstimatorKind::linear_shrinkage: return "linear_shrinkage";
    case EstimatorKind::quantized: return "quantized";
    case EstimatorKind::zero: return "zero";
  }
  throw std::logic_error("estimator_name: bad kind");
}

EstimatorKind parse_estimator(const std::string& name) {
  if (name == "james_stein") return EstimatorKind::james_stein;
  if (name == "linear_shrinkage") return EstimatorKind::linear_shrinkage;
  if (name == "quantized") return EstimatorKind::quantized;
  if (name == "zero") return EstimatorKind::zero;
  throw std::invalid_argument("unknown estimator \"" + name + "\"");
}

void ExperimentSpec::validate() const {
  require_spec(!n_values.empty(), "n_values must be nonempty");
  for (const std::uint32_t n : n_values) require_spec(n >= 1, "n_values entries must be >= 1");
  require_spec(rate_b.den != 0, "rate_b denominator must be nonzero");
  require_spec(std::isfinite(sigma2) && sigma2 > 0.0, "sigma2 must be positive");
  require_spec(std::isfinite(c2) && c2 > 0.0, "c2 must be positive");
  if (b2) {
    require_spec(std::isfinite(*b2) && *b2 >= 0.0, "b2 must be nonnegative");
    require_spec(*b2 <= c2, "b2 must not exceed c2");
  }
  require_spec(replicates >= 1, "replicates must be at least 1");
  require_spec(!estimators.empty(), "estimators must be nonempty");
  for (const std::uint32_t n : n_values) codeword_count(n, rate_b);  // 62-bit guard
}

ExperimentSpec parse_spec(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("spec: invalid JSON: ") + e.what());
  }
  require_spec(j.is_object(), "top level must be an object");

  static const char* known[] = {"n_values", "rate_b",      "sigma2",    "c2",
                                "b2",       "replicates",  "master_seed", "estimators"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool ok = false;
    for (const char* k : known) ok |= key == k;
    require_spec(ok, "unknown field \"" + key + "\"");
  }
  for (const char* k : {"n_values", "rate_b", "sigma2", "c2", "replicates", "master_seed",
                        "estimators"})
    require_spec(j.contains(k), std::string("missing field \"") + k + "\"");

  ExperimentSpec spec;
  // json's get<unsigned> silently wraps negatives and overflow, so check the
  // raw values first
  const auto& nv = j.at("n_values");
  bool nv_ok = nv.is_array();
  if (nv_ok)
    for (const auto& e : nv)
      nv_ok = nv_ok && e.is_number_unsigned() && e.get<std::uint64_t>() <= UINT32_MAX;
  require_spec(nv_ok, "field \"n_values\" must be an array of positive integers");
  for (const auto& e : nv) spec.n_values.push_back(e.get<std::uint32_t>());
  const auto& rb = j.at("rate_b");
  require_spec(rb.is_array() && rb.size() == 2 && rb[0].is_number_unsigned() &&
                   rb[1].is_number_unsigned(),
               "field \"rate_b\" must be a [numerator, denominator] pair");
  try {
    spec.rate_b = Rational(rb[0].get<std::uint64_t>(), rb[1].get<std::uint64_t>());
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("spec: field \"rate_b\": ") + e.what());
  }
  require_spec(j.at("sigma2").is_number(), "field \"sigma2\" must be a number");
  spec.sigma2 = j.at("sigma2").get<double>();
  require_spec(j.at("c2").is_number(), "field \"c2\" must be a number");
  spec.c2 = j.at("c2").get<double>();
  if (j.contains("b2")) {
    require_spec(j.at("b2").is_number(), "field \"b2\" must be a number");
    spec.b2 = j.at("b2").get<double>();
  }
  require_spec(j.at("replicates").is_number_unsigned() &&
                   j.at("replicates").get<std::uint64_t>() <= UINT32_MAX,
               "field \"replicates\" must be a positive integer");
  spec.replicates = j.at("replicates").get<std::uint32_t>();
  require_spec(j.at("master_seed").is_number_unsigned(),
               "field \"master_seed\" must be a nonnegative integer");
  spec.master_seed = j.at("master_seed").get<std::uint64_t>();
  require_spec(j.at("estimators").is_array() && !j.at("estimators").empty(),
               "field \"estimators\" must be a nonempty array of names");
  for (const auto& e : j.at("estimators")) {
    require_spec(e.is_string(), "field \"estimators\" must contain strings");
    spec.estimators.push_back(parse_estimator(e.get<std::string>()));
  }
  spec.validate();
  return spec;
}

CellResult run_cell(const ExperimentSpec& spec, std::uint32_t n, EstimatorKind estimator,
                    const RunOptions& options) {
  spec.validate();
  const unsigned __int128 nb_num =
      static_cast<unsigned __int128>(n) * static_cast<unsigned __int128>(spec.rate_b.num);
  if (!options.allow_large &&
      nb_num > static_cast<unsigned __int128>(kDeskRateBits) *
                   static_cast<unsigned __int128>(spec.rate_b.den))
    throw CapacityError("run_cell: n*rate_b exceeds " + std::to_string(kDeskRateBits) +
                        " bits; pass the large-run override to proceed");

  ModelParams params;
  params.n = n;
  params.rate_b = spec.rate_b;
  params.sigma2 = spec.sigma2;
  params.c2 = spec.c2;
  params.validate();
  const double b2 = spec.effective_b2();

  std::vector<double> mse(spec.replicates);
  parallel_for(spec.replicates, options.workers, [&](std::uint64_t r) {
    const ReplicateSeeds seeds = replicate_seeds(spec.master_seed, n, r);
    const Vector theta = sample_mean_on_sphere(n, b2, seeds.theta);
    const Vector x = sample_observation(theta, spec.sigma2, seeds.noise);
    Vector estimate;
    switch (estimator) {
      case EstimatorKind::quantized:
        estimate = quantized_decode(quantized_encode(x, params, seeds.codebook, 1), params);
        break;
      case EstimatorKind::james_stein:
        estimate = james_stein(x, spec.sigma2);
        break;
      case EstimatorKind::linear_shrinkage:
        estimate = linear_shrinkage(x, spec.sigma2);
        break;
      case EstimatorKind::zero:
        estimate.assign(n, 0.0);
        break;
    }
    mse[r] = distortion(theta, estimate);
  });

  const Moments m = aggregate(mse);
  CellResult cell;
  cell.n = n;
  cell.estimator = estimator;
  cell.mean_mse = m.mean;
  cell.sd_mse = m.sd;
  cell.replicates = spec.replicates;
  cell.lower_bound = quantized_risk_bound(spec.rate_b.value(), spec.sigma2, b2);
  return cell;
}

GridResult run_grid(const ExperimentSpec& spec, const RunOptions& options) {
  spec.validate();
  std::vector<std::uint32_t> ns = spec.n_values;
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  std::vector<EstimatorKind> ests = spec.estimators;
  std::sort(ests.begin(), ests.end(), [](EstimatorKind a, EstimatorKind b) {
    return std::string_view(estimator_name(a)) < std::string_view(estimator_name(b));
  });
  ests.erase(std::unique(ests.begin(), ests.end()), ests.end());

  GridResult out;
  for (const std::uint32_t n : ns) {
    for (const EstimatorKind est : ests) {
      try {
        out.cells.push_back(run_cell(spec, n, est, options));
      } catch (const std::exception& e) {
        out.failures.push_back({n, est, e.what()});
      }
    }
  }
  return out;
}

std::string emit_csv(std::span<const CellResult> cells) {
  if (cells.empty()) throw std::invalid_argument("emit_csv: no results");
  std::vector<CellResult> sorted(cells.begin(), cells.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const CellResult& a, const CellResult& b) {
    if (a.n != b.n) return a.n < b.n;
    return std::string_view(estimator_name(a.estimator)) <
           std::string_view(estimator_name(b.estimator));
  });
  std::string out = "n,estimator,mean_mse,sd_mse,lower_bound,replicates\n";
  for (const CellResult& c : sorted) {
    out += std::to_string(c.n);
    out += ',';
    out += estimator_name(c.estimator);
    out += ',';
    out += fmt_double(c.mean_mse);
    out += ',';
    out += fmt_double(c.sd_mse);
    out += ',';
    out += fmt_double(c.lower_bound);
    out += ',';
    out += std::to_string(c.replicates);
    out += '\n';
  }
  return out;
}

std::string emit_svg(std::span<const CellResult> cells) {
  if (cells.empty()) throw std::invalid_argument("emit_svg: no results");
  std::vector<CellResult> sorted(cells.begin(), cells.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const CellResult& a, const CellResult& b) {
    const std::string_view an = estimator_name(a.estimator);
    const std::string_view bn = estimator_name(b.estimator);
    if (an != bn) return an < bn;
    return a.n < b.n;
  });

  struct Series {
    std::string name;
    std::vector<CellResult> points;
  };
  std::vector<Series> series;
  for (const CellResult& c : sorted) {
    if (series.empty() || series.back().name != estimator_name(c.estimator))
      series.push_back({estimator_name(c.estimator), {}});
    series.back().points.push_back(c);
  }

  const double width = 640.0, chart_h = 300.0;
  const double ml = 64.0, mr = 24.0, mt = 36.0, mb = 44.0;
  std::string svg;
  char head[160];
  std::snprintf(head, sizeof head,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
                "font-family=\"sans-serif\" font-size=\"12\">\n",
                static_cast<int>(width), static_cast<int>(chart_h * series.size()));
  svg += head;

  for (std::size_t s = 0; s < series.size(); ++s) {
    const Series& sr = series[s];
    const double top = chart_h * static_cast<double>(s);
    double xmin = sr.points.front().n, xmax = sr.points.front().n;
    double vmax = sr.points.front().lower_bound;
    for (const CellResult& c : sr.points) {
      xmin = std::min(xmin, static_cast<double>(c.n));
      xmax = std::max(xmax, static_cast<double>(c.n));
      vmax = std::max({vmax, c.mean_mse + c.sd_mse, c.lower_bound});
    }
    if (xmin == xmax) {
      xmin -= 1.0;
      xmax += 1.0;
    }
    const double vmin = 0.0;
    vmax *= 1.15;
    if (vmax <= vmin) vmax = vmin + 1.0;

    const double px0 = ml, px1 = width - mr;
    const double py0 = top + mt, py1 = top + chart_h - mb;
    const auto mapx = [&](double v) { return px0 + (v - xmin) / (xmax - xmin) * (px1 - px0); };
    const auto mapy = [&](double v) { return py1 - (v - vmin) / (vmax - vmin) * (py1 - py0); };

    svg += "<g data-estimator=\"" + sr.name + "\" data-bound=\"" +
           fmt_double(sr.points.front().lower_bound) + "\" data-vmin=\"" + fmt_double(vmin) +
           "\" data-vmax=\"" + fmt_double(vmax) + "\" data-px0=\"" + fmt_coord(px0) +
           "\" data-px1=\"" + fmt_coord(px1) + "\" data-py0=\"" + fmt_coord(py0) +
           "\" data-py1=\"" + fmt_coord(py1) + "\">\n";
    svg += "<rect x=\"" + fmt_coord(px0) + "\" y=\"" + fmt_coord(py0) + "\" width=\"" +
           fmt_coord(px1 - px0) + "\" height=\"" + fmt_coord(py1 - py0) +
           "\" fill=\"none\" stroke=\"#888\"/>\n";
    svg += "<text x=\"" + fmt_coord(px0) + "\" y=\"" + fmt_coord(py0 - 10.0) +
           "\" font-weight=\"bold\">mean MSE, " + sr.name + "</text>\n";

    // y ticks
    for (int t = 0; t <= 4; ++t) {
      const double v = vmin + (vmax - vmin) * t / 4.0;
      const double y = mapy(v);
      svg += "<line x1=\"" + fmt_coord(px0 - 4.0) + "\" y1=\"" + fmt_coord(y) + "\" x2=\"" +
             fmt_coord(px0) + "\" y2=\"" + fmt_coord(y) + "\" stroke=\"#888\"/>\n";
      char lbl[48];
      std::snprintf(lbl, sizeof lbl, "%.3g", v);
      svg += "<text x=\"" + fmt_coord(px0 - 8.0) + "\" y=\"" + fmt_coord(y + 4.0) +
             "\" text-anchor=\"end\">" + lbl + "</text>\n";
    }
    // x ticks at the data points
    for (const CellResult& c : sr.points) {
      const double x = mapx(c.n);
      svg += "<line x1=\"" + fmt_coord(x) + "\" y1=\"" + fmt_coord(py1) + "\" x2=\"" +
             fmt_coord(x) + "\" y2=\"" + fmt_coord(py1 + 4.0) + "\" stroke=\"#888\"/>\n";
      svg += "<text x=\"" + fmt_coord(x) + "\" y=\"" + fmt_coord(py1 + 18.0) +
             "\" text-anchor=\"middle\">" + std::to_string(c.n) + "</text>\n";
    }
    svg += "<text x=\"" + fmt_coord((px0 + px1) / 2.0) + "\" y=\"" + fmt_coord(py1 + 34.0) +
           "\" text-anchor=\"middle\">n</text>\n";

    // dashed theory lower bound
    const double by = mapy(sr.points.front().lower_bound);
    svg += "<line class=\"bound\" x1=\"" + fmt_coord(px0) + "\" y1=\"" + fmt_coord(by) +
           "\" x2=\"" + fmt_coord(px1) + "\" y2=\"" + fmt_coord(by) +
           "\" stroke=\"#c33\" stroke-dasharray=\"6 4\"/>\n";

    // mean line, then error bars and markers
    std::string pts;
    for (const CellResult& c : sr.points) {
      if (!pts.empty()) pts += ' ';
      pts += fmt_coord(mapx(c.n)) + "," + fmt_coord(mapy(c.mean_mse));
    }
    svg += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"#226\"/>\n";
    for (const CellResult& c : sr.points) {
      const double x = mapx(c.n);
      const double ylo = mapy(c.mean_mse - c.sd_mse);
      const double yhi = mapy(c.mean_mse + c.sd_mse);
      svg += "<line x1=\"" + fmt_coord(x) + "\" y1=\"" + fmt_coord(ylo) + "\" x2=\"" +
             fmt_coord(x) + "\" y2=\"" + fmt_coord(yhi) + "\" stroke=\"#226\"/>\n";
      svg += "<circle cx=\"" + fmt_coord(x) + "\" cy=\"" + fmt_coord(mapy(c.mean_mse)) +
             "\" r=\"3\" fill=\"#226\"/>\n";
    }
    svg += "</g>\n";
  }
  svg += "</svg>\n";
  return svg;
}

std::vector<LossDecomposition> run_decomposition(const ModelParams& params, double b2,
                                                 std::uint32_t replicates,
                                                 std::uint64_t master_seed,
                                                 const RunOptions& options) {
  params.validate();
  if (!(std::isfinite(b2) && b2 >= 0.0))
    throw std::domain_error("run_decomposition: b2 must be nonnegative");
  if (replicates < 1) throw std::invalid_argument("run_decomposition: replicates must be >= 1");
  const unsigned __int128 nb_num = static_cast<unsigned __int128>(params.n) *
                                   static_cast<unsigned __int128>(params.rate_b.num);
  if (!options.allow_large &&
      nb_num > static_cast<unsigned __int128>(kDeskRateBits) *
                   static_cast<unsigned __int128>(params.rate_b.den))
    throw CapacityError("run_decomposition: n*rate_b exceeds " + std::to_string(kDeskRateBits) +
                        " bits; pass the large-run override to proceed");

  std::vector<LossDecomposition> rows(replicates);
  parallel_for(replicates, options.workers, [&](std::uint64_t r) {
    const ReplicateSeeds seeds = replicate_seeds(master_seed, params.n, r);
    const Vector theta = sample_mean_on_sphere(params.n, b2, seeds.theta);
    const Vector x = sample_observation(theta, params.sigma2, seeds.noise);
    const Vector check = quantized_decode(quantized_encode(x, params, seeds.codebook, 1), params);
    rows[r] = loss_decomposition(theta, x, check, params.sigma2);
  });
  return rows;
}

LossDecomposition mean_decomposition(std::span<const LossDecomposition> rows) {
  if (rows.empty()) throw std::invalid_argument("mean_decomposition: no rows");
  std::vector<double> a1(rows.size()), a2(rows.size()), a3(rows.size()), tt(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    a1[i] = rows[i].a1;
    a2[i] = rows[i].a2;
    a3[i] = rows[i].a3;
    tt[i] = rows[i].total;
  }
  const double count = static_cast<double>(rows.size());
  return {pairwise_sum(a1) / count, pairwise_sum(a2) / count, pairwise_sum(a3) / count,
          pairwise_sum(tt) / count};
}

}  // namespace qgsm
