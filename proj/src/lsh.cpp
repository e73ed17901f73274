#include "knnsv/lsh.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "knnsv/exact.hpp"
#include "knnsv/rng.hpp"
#include "knnsv/utilities.hpp"

namespace knnsv {

namespace {

// density of |N(0,1)| scaled by the truncation term of the collision integral
double collision_integrand(double t, double dist_over_r) {
  return std::sqrt(2.0 / std::numbers::pi) * std::exp(-0.5 * t * t) * (1.0 - t * dist_over_r);
}

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double fa, double fm, double fb,
                        double whole, double eps, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * eps)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1);
}

template <typename F>
double integrate(const F& f, double a, double b, double eps) {
  // unit-length panels first so a flat tail cannot fool the error estimate
  const int panels = std::max(1, static_cast<int>(std::ceil(b - a)));
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + (b - a) * p / panels;
    const double hi = a + (b - a) * (p + 1) / panels;
    const double flo = f(lo), fhi = f(hi), fmid = f(0.5 * (lo + hi));
    const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    total += adaptive_simpson(f, lo, hi, flo, fmid, fhi, whole, eps / panels, 48);
  }
  return total;
}

}  // namespace

double collision_probability(double distance, double r) {
  if (r <= 0) throw InputError("bucket width r must be positive");
  if (distance < 0) throw InputError("distance must be non-negative");
  if (distance == 0) return 1.0;
  const double ratio = distance / r;
  // substituted form of int_0^r (1/y) f2(z/y) (1 - z/r) dz with t = z/y;
  // the integrand is negligible beyond t = 40
  const double upper = std::min(r / distance, 40.0);
  const auto f = [ratio](double t) { return collision_integrand(t, ratio); };
  return integrate(f, 0.0, upper, 1e-9);
}

double truncation_error_bound(int n, int k, int k_star) {
  double h = 0.0;
  for (int j = 2; j <= k - 1; ++j) h += 1.0 / (j + 1);
  return h / n + 1.0 / std::max(k_star, k);
}

HashFamily::HashFamily(int l, int m, double r, int dim, std::uint64_t seed)
    : l_(l), m_(m), dim_(dim), r_(r), seed_(seed) {
  if (l < 1 || m < 1 || dim < 1) throw InputError("need L >= 1, M >= 1, dim >= 1");
  if (r <= 0) throw InputError("bucket width r must be positive");
  const std::size_t fns = static_cast<std::size_t>(l) * m;
  w_.resize(fns * dim);
  b_.resize(fns);
  Rng rng(seed);
  for (std::size_t f = 0; f < fns; ++f) {
    for (int j = 0; j < dim; ++j) w_[f * dim + j] = rng.normal();
    b_[f] = rng.uniform(0.0, r);
  }
}

std::int64_t HashFamily::hash_bit(int table, int bit, std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim_) throw InputError("hash input dimension mismatch");
  const std::size_t f = fn_index(table, bit);
  const double* w = w_.data() + f * dim_;
  double dot = 0.0;
  for (int j = 0; j < dim_; ++j) dot += w[j] * x[j];
  return static_cast<std::int64_t>(std::floor((dot + b_[f]) / r_));
}

void HashFamily::hash_key(int table, std::span<const double> x, std::int64_t* out) const {
  for (int bit = 0; bit < m_; ++bit) out[bit] = hash_bit(table, bit, x);
}

HashFamily sample_hash_family(int l, int m, double r, int dim, std::uint64_t seed) {
  return HashFamily(l, m, r, dim, seed);
}

std::size_t HashTables::KeyHash::operator()(const std::vector<std::int64_t>& key) const {
  // FNV-1a over the key bytes
  std::size_t h = 14695981039346656037ull;
  for (std::int64_t v : key) {
    for (int byte = 0; byte < 8; ++byte) {
      h ^= static_cast<std::size_t>(static_cast<std::uint64_t>(v) >> (8 * byte) & 0xff);
      h *= 1099511628211ull;
    }
  }
  return h;
}

HashTables build_tables(const HashFamily& family, const Dataset& data) {
  if (data.dim() != family.dim()) throw InputError("dataset dimension does not match hash family");
  HashTables out;
  out.set_n_points(data.n());
  out.mutable_tables().resize(static_cast<std::size_t>(family.tables()));
  std::vector<std::int64_t> key(static_cast<std::size_t>(family.bits()));
  for (int table = 0; table < family.tables(); ++table) {
    auto& buckets = out.mutable_tables()[static_cast<std::size_t>(table)];
    for (int i = 0; i < data.n(); ++i) {
      family.hash_key(table, data.point(i), key.data());
      buckets[key].push_back(i);
    }
  }
  return out;
}

std::vector<int> query_candidates(const HashTables& tables, const HashFamily& family,
                                  std::span<const double> query) {
  std::vector<std::int64_t> key(static_cast<std::size_t>(family.bits()));
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(tables.n_points()), 0);
  std::vector<int> out;
  for (int table = 0; table < family.tables(); ++table) {
    family.hash_key(table, query, key.data());
    const auto& buckets = tables.tables()[static_cast<std::size_t>(table)];
    const auto it = buckets.find(key);
    if (it == buckets.end()) continue;
    for (int idx : it->second)
      if (!seen[static_cast<std::size_t>(idx)]) {
        seen[static_cast<std::size_t>(idx)] = 1;
        out.push_back(idx);
      }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string ApproxSoftOutcome::fail_message() const {
  return "Fail: found " + std::to_string(candidates_found) + " candidates, need K* = " +
         std::to_string(k_star);
}

ApproxSoftOutcome approx_sv_soft(const std::vector<int>& candidates, const Dataset& train,
                                 std::span<const double> x_test, const Label& y_test, int k_star,
                                 int k, int c) {
  const int n = train.n();
  if (k < 1 || c < 2) throw InputError("need k >= 1 and c >= 2");
  if (k_star < 1 || k_star > n) throw InputError("need 1 <= k_star <= n");
  if (n < std::max(2, k))
    throw InputError("truncated approximation requires n >= max(2, k)");
  if (static_cast<int>(x_test.size()) != train.dim()) throw InputError("query dimension mismatch");

  ApproxSoftOutcome out;
  out.k_star = k_star;

  std::vector<int> cand = candidates;
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  for (int idx : cand)
    if (idx < 0 || idx >= n) throw InputError("candidate index out of range");
  out.candidates_found = cand.size();
  if (static_cast<int>(cand.size()) < k_star) return out;  // Fail

  // rank candidates only; everyone else shares the flat tail value
  std::vector<std::pair<double, int>> by_dist;
  by_dist.reserve(cand.size());
  for (int idx : cand) {
    const auto p = train.point(idx);
    double d2 = 0.0;
    for (int j = 0; j < train.dim(); ++j) {
      const double diff = p[j] - x_test[j];
      d2 += diff * diff;
    }
    by_dist.emplace_back(d2, idx);
  }
  std::sort(by_dist.begin(), by_dist.end());

  const int yt = y_test.cls();
  std::vector<std::uint8_t> match(static_cast<std::size_t>(k_star));
  for (int t = 0; t < k_star; ++t)
    match[static_cast<std::size_t>(t)] =
        train.label_class(by_dist[static_cast<std::size_t>(t)].second) == yt;

  const double tail = (0.5 - 1.0 / c) / n;
  out.values.assign(static_cast<std::size_t>(n), tail);

  const SoftIncrementCoeffs coeff(n, k);
  double cur = tail;  // value at rank k_star
  for (int i = k_star - 1; i >= 1; --i) {  // 1-based rank i < k_star
    const double delta = static_cast<double>(match[i - 1]) - match[i];
    cur += delta / (n - 1) * coeff(i);
    out.values[static_cast<std::size_t>(by_dist[static_cast<std::size_t>(i - 1)].second)] = cur;
  }
  out.ok = true;
  return out;
}

LshTuning recommend_parameters(const Dataset& train, const TestSet& test, int k_star, double delta,
                               double r) {
  if (!(delta > 0.0 && delta < 1.0)) throw InputError("delta must lie in (0, 1)");
  if (k_star < 1 || k_star >= train.n()) throw InputError("need 1 <= K* < N");
  if (r <= 0) throw InputError("bucket width r must be positive");
  if (test.dim() != train.dim()) throw InputError("test set dimension mismatch");

  LshTuning tuning;
  tuning.k_star = k_star;
  tuning.delta = delta;
  tuning.r = r;

  const int n = train.n();
  const int n_test = test.n();
  tuning.p1.resize(static_cast<std::size_t>(n_test));
  tuning.p2.resize(static_cast<std::size_t>(n_test));

  double p_max = 0.0, c = 0.0;
  for (int t = 0; t < n_test; ++t) {
    const SortedIndex sorted = sort_by_distance(train, test.point(t));
    const double d1 = sorted.dist[static_cast<std::size_t>(k_star - 1)];
    const double d2 = sorted.dist[static_cast<std::size_t>(k_star)];
    if (d2 == 0.0)
      throw InputError("degenerate contrast: test point " + std::to_string(t) +
                       " has its (K*+1)-th neighbor at distance 0, so p2 = 1 and M diverges");
    const double p2 = collision_probability(d2, r);
    const double p1 = d1 == d2 ? p2 : collision_probability(d1, r);
    tuning.p1[static_cast<std::size_t>(t)] = p1;
    tuning.p2[static_cast<std::size_t>(t)] = p2;
    p_max = std::max(p_max, p2);
    c = std::max(c, p1 >= 1.0 ? 0.0 : std::log(p1) / std::log(p2));
  }
  tuning.p_max = p_max;
  tuning.contrast_c = c;
  tuning.m = std::max(1, static_cast<int>(std::ceil(std::log(static_cast<double>(n)) /
                                                    std::log(1.0 / p_max))));
  tuning.l = std::max(
      1, static_cast<int>(std::ceil(std::pow(static_cast<double>(n), c) *
                                    std::log(static_cast<double>(n_test) * k_star / delta))));
  return tuning;
}

double default_bucket_width(const Dataset& data) {
  const int n = data.n();
  const int take = std::min(n, 1000);
  std::vector<int> idx(static_cast<std::size_t>(take));
  for (int t = 0; t < take; ++t)
    idx[static_cast<std::size_t>(t)] = static_cast<int>(static_cast<long long>(t) * n / take);

  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(take) * (take - 1) / 2);
  for (int a = 0; a < take; ++a) {
    const auto pa = data.point(idx[static_cast<std::size_t>(a)]);
    for (int b = a + 1; b < take; ++b) {
      const auto pb = data.point(idx[static_cast<std::size_t>(b)]);
      double d2 = 0.0;
      for (int j = 0; j < data.dim(); ++j) {
        const double diff = pa[j] - pb[j];
        d2 += diff * diff;
      }
      dists.push_back(std::sqrt(d2));
    }
  }
  if (dists.empty()) throw InputError("need at least two points to estimate a bucket width");
  const std::size_t mid = dists.size() / 2;
  std::nth_element(dists.begin(), dists.begin() + mid, dists.end());
  double median = dists[mid];
  if (dists.size() % 2 == 0) {
    std::nth_element(dists.begin(), dists.begin() + mid - 1, dists.end());
    median = 0.5 * (median + dists[mid - 1]);
  }
  if (median <= 0) throw InputError("median pairwise distance is zero; supply a bucket width");
  return 4.0 * median;
}

// ---------------------------------------------------------------------------
// persistence

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>(v >> (8 * i) & 0xff));
}
void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>(v >> (8 * i) & 0xff));
}
void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;
  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw InputError("truncated index file");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
};

constexpr char kMagic[4] = {'K', 'N', 'S', 'V'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

void save_index(const std::string& path, const HashFamily& family, const HashTables& tables) {
  std::string out;
  out.append(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(family.tables()));
  put_u32(out, static_cast<std::uint32_t>(family.bits()));
  put_f64(out, family.bucket_width());
  put_u32(out, static_cast<std::uint32_t>(family.dim()));
  put_u64(out, family.seed());
  put_u32(out, static_cast<std::uint32_t>(tables.n_points()));

  for (const auto& table : tables.tables()) {
    // canonical bucket order: lexicographic keys, ascending indices
    std::vector<const std::pair<const std::vector<std::int64_t>, std::vector<int>>*> entries;
    entries.reserve(table.size());
    for (const auto& kv : table) entries.push_back(&kv);
    std::sort(entries.begin(), entries.end(),
              [](const auto* a, const auto* b) { return a->first < b->first; });
    put_u64(out, entries.size());
    for (const auto* kv : entries) {
      for (std::int64_t v : kv->first) put_u64(out, static_cast<std::uint64_t>(v));
      std::vector<int> idx = kv->second;
      std::sort(idx.begin(), idx.end());
      put_u32(out, static_cast<std::uint32_t>(idx.size()));
      for (int i : idx) put_u32(out, static_cast<std::uint32_t>(i));
    }
  }

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw InputError("cannot open " + path + " for writing");
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw InputError("short write to " + path);
}

std::pair<HashFamily, HashTables> load_index(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw InputError("cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());

  Reader rd{buf};
  rd.need(4);
  if (std::memcmp(buf.data(), kMagic, 4) != 0) throw InputError("not a KNSV index file");
  rd.pos = 4;
  if (rd.u32() != kVersion) throw InputError("unsupported index version");
  const int l = static_cast<int>(rd.u32());
  const int m = static_cast<int>(rd.u32());
  const double r = rd.f64();
  const int dim = static_cast<int>(rd.u32());
  const std::uint64_t seed = rd.u64();
  const int n_points = static_cast<int>(rd.u32());

  HashFamily family(l, m, r, dim, seed);
  HashTables tables;
  tables.set_n_points(n_points);
  tables.mutable_tables().resize(static_cast<std::size_t>(l));
  for (int t = 0; t < l; ++t) {
    const std::uint64_t buckets = rd.u64();
    auto& table = tables.mutable_tables()[static_cast<std::size_t>(t)];
    table.reserve(buckets);
    for (std::uint64_t bkt = 0; bkt < buckets; ++bkt) {
      std::vector<std::int64_t> key(static_cast<std::size_t>(m));
      for (int bit = 0; bit < m; ++bit)
        key[static_cast<std::size_t>(bit)] = static_cast<std::int64_t>(rd.u64());
      const std::uint32_t count = rd.u32();
      std::vector<int> idx(count);
      for (std::uint32_t i = 0; i < count; ++i) idx[i] = static_cast<int>(rd.u32());
      table.emplace(std::move(key), std::move(idx));
    }
  }
  if (rd.pos != buf.size()) throw InputError("trailing bytes in index file");
  return {std::move(family), std::move(tables)};
}

}  // namespace knnsv
