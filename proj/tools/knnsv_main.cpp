// knnsv: exact and LSH-approximate Data Shapley for KNN models, plus the
// mislabeled-data detection benchmark around it.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "knnsv/csv.hpp"
#include "knnsv/detect.hpp"
#include "knnsv/exact.hpp"
#include "knnsv/lsh.hpp"
#include "knnsv/oracle.hpp"
#include "knnsv/parallel.hpp"
#include "knnsv/rng.hpp"
#include "knnsv/synth.hpp"
#include "knnsv/utilities.hpp"

namespace {

using namespace knnsv;

struct ValuesArgs {
  std::string train, test, label_col = "label", out = "-";
  std::string method = "soft";
  int k = 5;
  int classes = 0;
  bool exact = false, lsh = false;
  int k_star = 0;
  int tables = 0, bits = 0;
  double bucket_width = 0.0;
  std::uint64_t seed = 0;
  int threads = 0;
  bool json = false, normalize = false;
};

struct OracleArgs {
  int n = 8, k = 5, classes = 2, trials = 100;
  std::string method = "soft";
  double tol = 1e-9;
  std::uint64_t seed = 0;
};

struct TuneArgs {
  std::string train, test, label_col = "label";
  int k_star = 10;
  double delta = 0.1, bucket_width = 0.0;
  bool regression = false;
};

struct DetectArgs {
  std::string train, test, label_col = "label";
  std::string method = "soft", rule = "rank";
  double flip_rate = 0.1;
  int k = 5, classes = 0, threads = 0;
  std::uint64_t seed = 0;
};

struct BenchArgs {
  std::string sizes = "100000,200000";
  int repeats = 7, dim = 10, k = 5;
  std::uint64_t seed = 0;
};

void write_values(const ValueVector& values, const ValuesArgs& a) {
  std::string body;
  if (a.json) {
    nlohmann::json j;
    j["method"] = a.method;
    j["k"] = a.k;
    j["n"] = values.size();
    j["values"] = values;
    body = j.dump() + "\n";
  } else {
    body = "index,value\n";
    char buf[64];
    for (std::size_t i = 0; i < values.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, values[i]);
      body += buf;
    }
  }
  if (a.out == "-") {
    std::cout << body;
  } else {
    std::ofstream f(a.out, std::ios::trunc);
    if (!f) throw InputError("cannot open " + a.out + " for writing");
    f << body;
  }
}

int run_values(const ValuesArgs& a) {
  const Method method = parse_method(a.method);
  if (method == Method::OriginalRegression)
    throw UnsupportedError("original-regression has no closed form; see oracle-check");
  const Task task = is_classification(method) ? Task::Classification : Task::Regression;

  CsvOptions opt{a.label_col, task};
  LoadedCsv train = load_csv(a.train, opt);
  LoadedCsv test = load_csv(a.test, opt);
  if (train.data.dim() != test.data.dim())
    throw InputError("train and test feature dimensions differ");
  if (a.normalize) {
    const Normalizer norm = Normalizer::fit(train.data);
    norm.apply(train.data);
    norm.apply(test.data);
  }

  ValuationConfig cfg;
  cfg.method = method;
  cfg.k = a.k;
  if (is_classification(method)) {
    cfg.num_classes = a.classes > 0 ? a.classes : train.data.num_classes();
    for (int i = 0; i < test.data.n(); ++i)
      if (test.data.label_class(i) >= cfg.num_classes)
        throw InputError("test label exceeds the class count; pass --classes");
  }

  ValueVector values;
  const bool use_lsh = a.lsh && !a.exact;
  if (!use_lsh) {
    values = shapley_over_test_set(train.data, test.data, cfg, a.threads);
  } else {
    if (method != Method::SoftClassification)
      throw UnsupportedError("--lsh implements the truncated soft-label approximation only");
    const int n = train.data.n();
    const int k_star = a.k_star > 0 ? a.k_star : std::min(n - 1, std::max(10, 2 * a.k));
    const double r = a.bucket_width > 0 ? a.bucket_width : default_bucket_width(train.data);
    int l = a.tables, m = a.bits;
    if (l <= 0 || m <= 0) {
      const LshTuning tuning = recommend_parameters(train.data, test.data, k_star, 0.1, r);
      if (l <= 0) l = tuning.l;
      if (m <= 0) m = tuning.m;
    }
    const HashFamily family = sample_hash_family(l, m, r, train.data.dim(), a.seed);
    const HashTables tables = build_tables(family, train.data);

    const int n_test = test.data.n();
    std::vector<ApproxSoftOutcome> outcomes(static_cast<std::size_t>(n_test));
    parallel_for(0, n_test, a.threads, [&](int t) {
      const std::vector<int> cand = query_candidates(tables, family, test.data.point(t));
      outcomes[static_cast<std::size_t>(t)] = approx_sv_soft(
          cand, train.data, test.data.point(t), test.data.label(t), k_star, a.k, cfg.num_classes);
    });
    values.assign(static_cast<std::size_t>(n), 0.0);
    bool failed = false;
    for (int t = 0; t < n_test; ++t) {
      const ApproxSoftOutcome& o = outcomes[static_cast<std::size_t>(t)];
      if (!o.ok) {
        std::cerr << "test point " << t << ": " << o.fail_message() << "\n";
        failed = true;
        continue;
      }
      for (std::size_t i = 0; i < values.size(); ++i) values[i] += o.values[i];
    }
    if (failed) {
      std::cerr << "increase --tables/--bits or lower --k-star\n";
      return 1;
    }
  }

  write_values(values, a);
  return 0;
}

int run_oracle_check(const OracleArgs& a) {
  const Method method = parse_method(a.method);
  if (a.n < 1 || a.n > 20) throw InputError("oracle-check supports 1 <= n <= 20");
  const bool regression = !is_classification(method);
  if (method == Method::SoftRegression && a.n <= a.k)
    throw InputError("soft-regression needs n > k");

  Rng rng(a.seed);
  const int dim = 3;
  double worst = 0.0;
  for (int trial = 0; trial < a.trials; ++trial) {
    std::vector<double> xs(static_cast<std::size_t>(a.n) * dim);
    for (double& v : xs) v = rng.uniform(-1.0, 1.0);
    std::vector<Label> labels;
    for (int i = 0; i < a.n; ++i)
      labels.push_back(regression ? Label::real(rng.uniform(-2.0, 2.0))
                                  : Label::cls(static_cast<int>(rng.below(a.classes))));
    const Dataset train(std::move(xs), std::move(labels), dim);
    std::vector<double> q(dim);
    for (double& v : q) v = rng.uniform(-1.0, 1.0);
    const Label y_test = regression ? Label::real(rng.uniform(-2.0, 2.0))
                                    : Label::cls(static_cast<int>(rng.below(a.classes)));

    ValuationConfig cfg;
    cfg.method = method;
    cfg.k = a.k;
    cfg.num_classes = regression ? 0 : a.classes;

    const SubsetUtility utility = bind_utility(train, q, y_test, cfg);
    const ValueVector oracle = shapley_exact_enumeration(utility, a.n);

    if (method == Method::OriginalRegression) {
      // no closed form; report the oracle's efficiency residual instead
      const std::uint32_t full = a.n == 32 ? ~0u : (1u << a.n) - 1;
      double sum = 0.0;
      for (double v : oracle) sum += v;
      worst = std::max(worst, std::abs(sum - (utility(full) - empty_set_utility(y_test, cfg))));
      continue;
    }
    const ValueVector recursion = shapley_for_test_point(train, q, y_test, cfg);
    for (int i = 0; i < a.n; ++i)
      worst = std::max(worst, std::abs(recursion[static_cast<std::size_t>(i)] -
                                       oracle[static_cast<std::size_t>(i)]));
  }
  std::printf("max deviation = %.3e over %d trials (tol %.1e)\n", worst, a.trials, a.tol);
  return worst > a.tol ? 1 : 0;
}

int run_lsh_tune(const TuneArgs& a) {
  CsvOptions opt{a.label_col, a.regression ? Task::Regression : Task::Classification};
  const LoadedCsv train = load_csv(a.train, opt);
  const LoadedCsv test = load_csv(a.test, opt);
  const double r = a.bucket_width > 0 ? a.bucket_width : default_bucket_width(train.data);
  const LshTuning tuning = recommend_parameters(train.data, test.data, a.k_star, a.delta, r);
  nlohmann::json j;
  j["k_star"] = tuning.k_star;
  j["delta"] = tuning.delta;
  j["r"] = tuning.r;
  j["p_max"] = tuning.p_max;
  j["c"] = tuning.contrast_c;
  j["m"] = tuning.m;
  j["l"] = tuning.l;
  j["p1"] = tuning.p1;
  j["p2"] = tuning.p2;
  std::cout << j.dump() << "\n";
  return 0;
}

int run_detect(const DetectArgs& a) {
  const Method method = parse_method(a.method);
  if (!is_classification(method))
    throw UnsupportedError("detection runs on classification datasets");
  CsvOptions opt{a.label_col, Task::Classification};
  const LoadedCsv train = load_csv(a.train, opt);
  const LoadedCsv test = load_csv(a.test, opt);

  auto [flipped, truth] = flip_labels(train.data, a.flip_rate, a.seed);

  ValuationConfig cfg;
  cfg.method = method;
  cfg.k = a.k;
  cfg.num_classes = a.classes > 0 ? a.classes : train.data.num_classes();

  const ValueVector values = shapley_over_test_set(flipped, test.data, cfg, a.threads);

  DetectionReport report;
  report.dataset = std::filesystem::path(a.train).stem().string();
  report.method = a.method;
  report.rule = a.rule;
  report.k = a.k;
  report.seed = a.seed;
  report.n = flipped.n();
  report.n_flipped = static_cast<int>(std::count(truth.begin(), truth.end(), 1));
  report.flags = a.rule == "cluster" ? detect_cluster(values) : detect_ranking(values);
  report.truth = truth;
  report.f1 = f1_score(report.flags, report.truth);
  std::cout << report.to_json_line() << "\n";
  return 0;
}

int run_bench(const BenchArgs& a) {
  std::vector<int> sizes;
  std::stringstream ss(a.sizes);
  std::string tok;
  while (std::getline(ss, tok, ',')) sizes.push_back(std::stoi(tok));
  if (sizes.empty()) throw InputError("--sizes is empty");
  const int n_max = *std::max_element(sizes.begin(), sizes.end());

  const Dataset full = make_blobs(n_max, a.dim, 6.0, a.seed);
  const std::vector<double> query(static_cast<std::size_t>(a.dim), 0.0);
  ValuationConfig cfg;
  cfg.method = Method::SoftClassification;
  cfg.k = a.k;
  cfg.num_classes = 2;

  double prev_ms = 0.0;
  for (int n : sizes) {
    std::vector<double> xs(full.features().begin(),
                           full.features().begin() + static_cast<std::size_t>(n) * a.dim);
    std::vector<Label> labels(full.labels().begin(), full.labels().begin() + n);
    const Dataset train(std::move(xs), std::move(labels), a.dim);

    std::vector<double> times;
    double checksum = 0.0;
    for (int rep = 0; rep < a.repeats; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      const ValueVector v = shapley_for_test_point(train, query, Label::cls(0), cfg);
      const auto t1 = std::chrono::steady_clock::now();
      checksum += v.front();
      times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    std::sort(times.begin(), times.end());
    const double med = times[times.size() / 2];
    std::printf("n=%d median_ms=%.3f per_point_ns=%.1f", n, med, med * 1e6 / n);
    if (prev_ms > 0) std::printf(" ratio_vs_prev=%.3f", med / prev_ms);
    std::printf(" (checksum %.6g)\n", checksum);
    prev_ms = med;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data Shapley for KNN: exact O(N log N) values, LSH approximation, "
               "mislabeled-data detection"};
  app.require_subcommand(1);

  ValuesArgs va;
  CLI::App* values = app.add_subcommand("values", "compute training-point values for a test set");
  values->add_option("--train", va.train, "training CSV")->required();
  values->add_option("--test", va.test, "test/validation CSV")->required();
  values->add_option("--label-col", va.label_col, "label column name");
  values->add_option("--method", va.method, "original | soft | soft-regression");
  values->add_option("--k", va.k, "neighborhood size K");
  values->add_option("--classes", va.classes, "class count C (default: inferred)");
  values->add_flag("--exact", va.exact, "exact recursion (default)");
  values->add_flag("--lsh", va.lsh, "LSH-approximate soft-label values");
  values->add_option("--k-star", va.k_star, "neighbors kept by the approximation");
  values->add_option("--tables", va.tables, "hash table count L (default: recommended)");
  values->add_option("--bits", va.bits, "hash bits per table M (default: recommended)");
  values->add_option("--bucket-width", va.bucket_width, "hash bucket width r");
  values->add_option("--seed", va.seed, "RNG seed");
  values->add_option("--threads", va.threads, "worker threads (or env KNNSV_THREADS)");
  values->add_option("--out", va.out, "output path, '-' for stdout");
  values->add_flag("--json", va.json, "JSON output instead of CSV");
  values->add_flag("--normalize", va.normalize, "z-score features using training statistics");

  OracleArgs oa;
  CLI::App* oracle = app.add_subcommand("oracle-check",
                                        "compare recursions against the enumeration oracle");
  oracle->add_option("--n", oa.n, "instance size (<= 20)");
  oracle->add_option("--k", oa.k, "neighborhood size K");
  oracle->add_option("--classes", oa.classes, "class count C");
  oracle->add_option("--method", oa.method,
                     "original | soft | original-regression | soft-regression");
  oracle->add_option("--trials", oa.trials, "random instances");
  oracle->add_option("--tol", oa.tol, "failure threshold on max deviation");
  oracle->add_option("--seed", oa.seed, "RNG seed");

  TuneArgs ta;
  CLI::App* tune = app.add_subcommand("lsh-tune", "recommend hash parameters M and L");
  tune->add_option("--train", ta.train, "training CSV")->required();
  tune->add_option("--test", ta.test, "test CSV")->required();
  tune->add_option("--label-col", ta.label_col, "label column name");
  tune->add_option("--k-star", ta.k_star, "neighbors the index must retrieve");
  tune->add_option("--delta", ta.delta, "failure probability");
  tune->add_option("--bucket-width", ta.bucket_width, "hash bucket width r (default: 4 x median)");
  tune->add_flag("--regression", ta.regression, "parse labels as reals");

  DetectArgs da;
  CLI::App* detect = app.add_subcommand("detect", "mislabeled-data detection benchmark");
  detect->add_option("--train", da.train, "training CSV")->required();
  detect->add_option("--test", da.test, "test CSV")->required();
  detect->add_option("--label-col", da.label_col, "label column name");
  detect->add_option("--method", da.method, "original | soft");
  detect->add_option("--rule", da.rule, "rank | cluster")
      ->check(CLI::IsMember({"rank", "cluster"}));
  detect->add_option("--flip-rate", da.flip_rate, "fraction of labels to flip");
  detect->add_option("--k", da.k, "neighborhood size K");
  detect->add_option("--classes", da.classes, "class count C (default: inferred)");
  detect->add_option("--seed", da.seed, "RNG seed");
  detect->add_option("--threads", da.threads, "worker threads");

  BenchArgs ba;
  CLI::App* bench = app.add_subcommand("bench", "time exact valuation per test point");
  bench->add_option("--sizes", ba.sizes, "comma-separated training sizes");
  bench->add_option("--repeats", ba.repeats, "repetitions per size (median reported)");
  bench->add_option("--dim", ba.dim, "feature dimension");
  bench->add_option("--k", ba.k, "neighborhood size K");
  bench->add_option("--seed", ba.seed, "RNG seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (values->parsed()) return run_values(va);
    if (oracle->parsed()) return run_oracle_check(oa);
    if (tune->parsed()) return run_lsh_tune(ta);
    if (detect->parsed()) return run_detect(da);
    if (bench->parsed()) return run_bench(ba);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
