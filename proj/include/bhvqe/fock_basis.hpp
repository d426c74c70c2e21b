#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <unordered_map>
#include <vector>

namespace bhvqe {

// Occupation numbers per mode, |n_0, n_1, ..., n_{S-1}>.
using Configuration = std::vector<int>;

// Number of ways of distributing n_bosons over n_sites,
// (N_B + N_S - 1)! / (N_B! (N_S - 1)!).
// Throws std::domain_error for n_sites < 1 or n_bosons < 0,
// capacity_error if the count does not fit in 64 bits.
std::uint64_t dimension(int n_sites, int n_bosons);

// The index fibers of a basis along one ordered mode pair (p, q).
// Fiber f collects the basis indices of all configurations that share the
// same occupations outside {p, q}; within a fiber, position j corresponds
// to n_q = j (equivalently n_p = pair_total - j, descending).
struct PairFiber {
  int pair_total = 0;
  std::vector<std::int64_t> indices;  // size pair_total + 1
};

struct PairFibers {
  int p = 0;
  int q = 0;
  std::vector<PairFiber> fibers;
};

// Ordered enumeration of the fixed-particle-number bosonic Fock basis.
// Enumeration is reverse-lexicographic on occupation tuples, so
// |N_B, 0, ..., 0> has index 0. Immutable after construction; all queries
// are safe to share across threads.
class FockBasis {
 public:
  static constexpr std::uint64_t kDefaultCapacity = 10'000'000;

  // Throws capacity_error when the dimension exceeds capacity_limit.
  FockBasis(int n_sites, int n_bosons,
            std::uint64_t capacity_limit = kDefaultCapacity);

  static std::shared_ptr<const FockBasis> create(
      int n_sites, int n_bosons,
      std::uint64_t capacity_limit = kDefaultCapacity);

  int n_sites() const { return n_sites_; }
  int n_bosons() const { return n_bosons_; }
  std::int64_t dim() const { return dim_; }

  std::span<const int> config(std::int64_t index) const {
    return {flat_.data() + index * n_sites_, static_cast<size_t>(n_sites_)};
  }
  Configuration config_copy(std::int64_t index) const;

  // Combinatorial rank of a configuration; inverse of config().
  // Throws std::domain_error on wrong mode count, negative occupations or
  // wrong particle total.
  std::int64_t index_of(std::span<const int> config) const;

  // Two bases address the same space iff sites and boson number agree
  // (enumeration order is deterministic).
  bool same_space(const FockBasis& other) const {
    return n_sites_ == other.n_sites_ && n_bosons_ == other.n_bosons_;
  }

  // Fibers along an ordered mode pair, built on first use and cached.
  const PairFibers& fibers(int p, int q) const;

  // One configuration per line, space-separated occupations.
  void write_text(std::ostream& os) const;

 private:
  int n_sites_;
  int n_bosons_;
  std::int64_t dim_;
  std::vector<int> flat_;  // dim * n_sites occupations
  // dims_[s][b] = dimension(s, b); rank lookups never allocate.
  std::vector<std::vector<std::uint64_t>> dims_;

  mutable std::mutex fiber_mutex_;
  mutable std::map<std::pair<int, int>, std::unique_ptr<PairFibers>>
      fiber_cache_;

#ifndef NDEBUG
  struct ConfigHash {
    size_t operator()(const Configuration& c) const;
  };
  std::unordered_map<Configuration, std::int64_t, ConfigHash> index_check_;
#endif
};

}  // namespace bhvqe
