#include "bhvqe/fock_basis.hpp"

#include <cassert>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

#include "bhvqe/errors.hpp"

namespace bhvqe {

std::uint64_t dimension(int n_sites, int n_bosons) {
  if (n_sites < 1) throw std::domain_error("dimension: n_sites must be >= 1");
  if (n_bosons < 0) throw std::domain_error("dimension: n_bosons must be >= 0");
  // C(n, k) with n = N_B + N_S - 1, k = min(N_B, N_S - 1); dividing by i at
  // every step keeps intermediates exact.
  const std::uint64_t n = static_cast<std::uint64_t>(n_bosons) + n_sites - 1;
  std::uint64_t k = std::min<std::uint64_t>(n_bosons, n_sites - 1);
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    std::uint64_t prod;
    if (__builtin_mul_overflow(r, n - k + i, &prod)) {
      throw capacity_error("dimension: result exceeds 64 bits for N_S=" +
                                std::to_string(n_sites) +
                                ", N_B=" + std::to_string(n_bosons));
    }
    r = prod / i;
  }
  return r;
}

namespace {

// Advance to the next configuration in reverse-lexicographic order.
// Returns false once (0, ..., 0, N_B) has been passed.
bool next_config(std::vector<int>& c) {
  const int s = static_cast<int>(c.size());
  for (int k = s - 2; k >= 0; --k) {
    if (c[k] != 0) {
      --c[k];
      // everything right of k collapses onto k+1, plus the boson moved off k
      int rest = 0;
      for (int i = k + 1; i < s; ++i) {
        rest += c[i];
        c[i] = 0;
      }
      c[k + 1] = rest + 1;
      return true;
    }
  }
  return false;
}

}  // namespace

FockBasis::FockBasis(int n_sites, int n_bosons, std::uint64_t capacity_limit)
    : n_sites_(n_sites), n_bosons_(n_bosons) {
  const std::uint64_t d = dimension(n_sites, n_bosons);
  if (d > capacity_limit) {
    throw capacity_error("FockBasis: dimension " + std::to_string(d) +
                         " exceeds capacity limit " +
                         std::to_string(capacity_limit));
  }
  dim_ = static_cast<std::int64_t>(d);

  dims_.assign(n_sites_ + 1, std::vector<std::uint64_t>(n_bosons_ + 1, 0));
  for (int s = 1; s <= n_sites_; ++s)
    for (int b = 0; b <= n_bosons_; ++b) dims_[s][b] = dimension(s, b);

  flat_.reserve(static_cast<size_t>(dim_) * n_sites_);
  std::vector<int> c(n_sites_, 0);
  c[0] = n_bosons_;
  do {
    flat_.insert(flat_.end(), c.begin(), c.end());
  } while (next_config(c));
  assert(static_cast<std::int64_t>(flat_.size()) == dim_ * n_sites_);

#ifndef NDEBUG
  for (std::int64_t i = 0; i < dim_; ++i) {
    index_check_.emplace(config_copy(i), i);
  }
#endif
}

std::shared_ptr<const FockBasis> FockBasis::create(
    int n_sites, int n_bosons, std::uint64_t capacity_limit) {
  return std::make_shared<const FockBasis>(n_sites, n_bosons, capacity_limit);
}

Configuration FockBasis::config_copy(std::int64_t index) const {
  auto view = config(index);
  return Configuration(view.begin(), view.end());
}

std::int64_t FockBasis::index_of(std::span<const int> config) const {
  if (static_cast<int>(config.size()) != n_sites_) {
    throw std::domain_error("index_of: configuration has wrong mode count");
  }
  int total = 0;
  for (int v : config) {
    if (v < 0) throw std::domain_error("index_of: negative occupation");
    total += v;
  }
  if (total != n_bosons_) {
    throw std::domain_error("index_of: configuration has wrong boson total");
  }
  // rank = number of reverse-lexicographically earlier configurations:
  // sum over prefixes of the count of completions with a larger entry.
  std::uint64_t rank = 0;
  int remaining = n_bosons_;
  for (int j = 0; j + 1 < n_sites_; ++j) {
    const int w = remaining - config[j] - 1;
    if (w >= 0) rank += dims_[n_sites_ - j][w];
    remaining -= config[j];
  }
  const auto idx = static_cast<std::int64_t>(rank);
#ifndef NDEBUG
  auto it = index_check_.find(Configuration(config.begin(), config.end()));
  assert(it != index_check_.end() && it->second == idx);
#endif
  return idx;
}

const PairFibers& FockBasis::fibers(int p, int q) const {
  if (p < 0 || q < 0 || p >= n_sites_ || q >= n_sites_ || p == q) {
    throw std::domain_error("fibers: invalid mode pair");
  }
  std::lock_guard<std::mutex> lock(fiber_mutex_);
  auto key = std::make_pair(p, q);
  auto it = fiber_cache_.find(key);
  if (it != fiber_cache_.end()) return *it->second;

  auto plan = std::make_unique<PairFibers>();
  plan->p = p;
  plan->q = q;
  // Group basis indices by the occupation pattern outside {p, q}. The rest
  // pattern is identified by its rank within this basis after zeroing the
  // pair and parking the pair total on one of the pair modes; that keeps the
  // total at N_B so index_of applies and no hashing is needed.
  std::unordered_map<std::int64_t, size_t> fiber_of_rest;
  std::vector<int> scratch(n_sites_);
  for (std::int64_t i = 0; i < dim_; ++i) {
    auto c = config(i);
    const int np = c[p];
    const int nq = c[q];
    const int pair_total = np + nq;
    for (int m = 0; m < n_sites_; ++m) scratch[m] = c[m];
    scratch[p] = pair_total;
    scratch[q] = 0;
    const std::int64_t rest_key = index_of(scratch);
    auto [pos, inserted] =
        fiber_of_rest.try_emplace(rest_key, plan->fibers.size());
    if (inserted) {
      PairFiber f;
      f.pair_total = pair_total;
      f.indices.assign(pair_total + 1, -1);
      plan->fibers.push_back(std::move(f));
    }
    plan->fibers[pos->second].indices[nq] = i;
  }
  const PairFibers& ref = *plan;
  fiber_cache_.emplace(key, std::move(plan));
  return ref;
}

void FockBasis::write_text(std::ostream& os) const {
  for (std::int64_t i = 0; i < dim_; ++i) {
    auto c = config(i);
    for (int m = 0; m < n_sites_; ++m) {
      if (m) os << ' ';
      os << c[m];
    }
    os << '\n';
  }
}

#ifndef NDEBUG
size_t FockBasis::ConfigHash::operator()(const Configuration& c) const {
  size_t h = 1469598103934665603ull;
  for (int v : c) {
    h ^= static_cast<size_t>(v) + 0x9e3779b97f4a7c15ull;
    h *= 1099511628211ull;
  }
  return h;
}
#endif

}  // namespace bhvqe
