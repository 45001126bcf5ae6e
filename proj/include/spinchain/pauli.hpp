#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "spinchain/errors.hpp"

namespace spinchain {

using Complex = std::complex<double>;

/// Coefficients with modulus below this are dropped when a sum is
/// canonicalized. Structural zeros (commuting strings, traced-out
/// non-identity labels) never reach this path.
inline constexpr double kPruneEps = 1e-14;

/// Largest supported chain length for the symbolic representation.
inline constexpr int kMaxSites = 64;

enum class Pauli : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

inline char pauli_char(Pauli p) {
  switch (p) {
    case Pauli::I: return 'I';
    case Pauli::X: return 'X';
    case Pauli::Y: return 'Y';
    case Pauli::Z: return 'Z';
  }
  throw UsageError("invalid Pauli label");
}

inline Pauli pauli_from_char(char c) {
  switch (c) {
    case 'I': return Pauli::I;
    case 'X': return Pauli::X;
    case 'Y': return Pauli::Y;
    case 'Z': return Pauli::Z;
    default:
      throw UsageError(std::string("invalid Pauli label character '") + c +
                       "'");
  }
}

namespace detail {

inline void check_site_count(int n) {
  if (n < 0 || n > kMaxSites) {
    throw UsageError("site count " + std::to_string(n) +
                     " outside supported range [0, " +
                     std::to_string(kMaxSites) + "]");
  }
}

// Multiplies c by i^e, e taken mod 4. Exact: only sign flips and
// component swaps.
inline Complex times_i_pow(Complex c, int e) {
  switch (((e % 4) + 4) % 4) {
    case 0: return c;
    case 1: return {-c.imag(), c.real()};
    case 2: return -c;
    default: return {c.imag(), -c.real()};
  }
}

// Removes bit `pos` from mask, shifting higher bits down.
inline std::uint64_t drop_bit(std::uint64_t m, int pos) {
  const std::uint64_t low = m & ((std::uint64_t{1} << pos) - 1);
  const std::uint64_t high = (m >> (pos + 1)) << pos;
  return low | high;
}

// Inverse of drop_bit with a zero bit inserted at `pos`.
inline std::uint64_t insert_bit(std::uint64_t m, int pos, bool value) {
  const std::uint64_t low = m & ((std::uint64_t{1} << pos) - 1);
  const std::uint64_t high = (m >> pos) << (pos + 1);
  return low | high | (std::uint64_t{value} << pos);
}

}  // namespace detail

/// A subset of the 1-based chain sites {1..N}, used to name bipartition
/// blocks (system, environment, environment-minus-cut).
class SiteSet {
 public:
  SiteSet() = default;

  static SiteSet of(std::initializer_list<int> sites) {
    SiteSet s;
    for (int site : sites) s.insert(site);
    return s;
  }

  /// Inclusive 1-based range; empty when hi < lo.
  static SiteSet range(int lo, int hi) {
    SiteSet s;
    for (int site = lo; site <= hi; ++site) s.insert(site);
    return s;
  }

  void insert(int site) {
    if (site < 1 || site > kMaxSites) {
      throw UsageError("site " + std::to_string(site) + " out of range");
    }
    mask_ |= std::uint64_t{1} << (site - 1);
  }

  bool contains(int site) const {
    if (site < 1 || site > kMaxSites) return false;
    return (mask_ >> (site - 1)) & 1;
  }

  int size() const { return std::popcount(mask_); }
  bool empty() const { return mask_ == 0; }
  std::uint64_t mask() const { return mask_; }

  int min_site() const {
    if (empty()) throw UsageError("min_site of empty site set");
    return std::countr_zero(mask_) + 1;
  }

  SiteSet complement(int num_sites) const {
    detail::check_site_count(num_sites);
    SiteSet s;
    s.mask_ = ~mask_ & ((num_sites == 64) ? ~std::uint64_t{0}
                                          : ((std::uint64_t{1} << num_sites) - 1));
    return s;
  }

  std::vector<int> sites() const {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(size()));
    for (int s = 1; s <= kMaxSites; ++s) {
      if (contains(s)) out.push_back(s);
    }
    return out;
  }

  bool subset_of(const SiteSet& other) const {
    return (mask_ & ~other.mask_) == 0;
  }

  friend bool operator==(const SiteSet&, const SiteSet&) = default;

 private:
  std::uint64_t mask_ = 0;
};

/// One Pauli string: a complex coefficient times a tensor product of
/// {I,X,Y,Z} over sites 1..N. Encoded as two bitmasks with site s at bit
/// s-1: X = (x,z) = (1,0), Z = (0,1), Y = (1,1) i.e. Y = iXZ, so the
/// label part of every string is Hermitian and phases live in `coeff`.
struct PauliString {
  std::uint64_t x_mask = 0;
  std::uint64_t z_mask = 0;
  int num_sites = 0;
  Complex coeff{1.0, 0.0};

  PauliString() = default;

  /// Identity string on n sites.
  explicit PauliString(int n, Complex c = Complex{1.0, 0.0})
      : num_sites(n), coeff(c) {
    detail::check_site_count(n);
  }

  /// Parses labels like "ZZI" with site 1 leftmost.
  static PauliString from_label(const std::string& labels,
                                Complex c = Complex{1.0, 0.0}) {
    PauliString s(static_cast<int>(labels.size()), c);
    for (int site = 1; site <= s.num_sites; ++site) {
      s.set(site, pauli_from_char(labels[static_cast<std::size_t>(site - 1)]));
    }
    return s;
  }

  /// Unit-coefficient single-site operator padded with identities.
  static PauliString single(int n, int site, Pauli p,
                            Complex c = Complex{1.0, 0.0}) {
    PauliString s(n, c);
    s.set(site, p);
    return s;
  }

  Pauli label_at(int site) const {
    check_site(site);
    const int x = static_cast<int>((x_mask >> (site - 1)) & 1);
    const int z = static_cast<int>((z_mask >> (site - 1)) & 1);
    if (x && z) return Pauli::Y;
    if (x) return Pauli::X;
    if (z) return Pauli::Z;
    return Pauli::I;
  }

  void set(int site, Pauli p) {
    check_site(site);
    const std::uint64_t bit = std::uint64_t{1} << (site - 1);
    x_mask &= ~bit;
    z_mask &= ~bit;
    if (p == Pauli::X || p == Pauli::Y) x_mask |= bit;
    if (p == Pauli::Z || p == Pauli::Y) z_mask |= bit;
  }

  /// Sites carrying a non-identity label.
  std::uint64_t support() const { return x_mask | z_mask; }

  bool is_identity_label() const { return support() == 0; }

  bool identity_on(const SiteSet& block) const {
    return (support() & block.mask()) == 0;
  }

  std::string label_string() const {
    std::string out(static_cast<std::size_t>(num_sites), 'I');
    for (int site = 1; site <= num_sites; ++site) {
      out[static_cast<std::size_t>(site - 1)] = pauli_char(label_at(site));
    }
    return out;
  }

 private:
  void check_site(int site) const {
    if (site < 1 || site > num_sites) {
      throw UsageError("site " + std::to_string(site) +
                       " out of range for string on " +
                       std::to_string(num_sites) + " sites");
    }
  }
};

/// True when the label parts of a and b commute (symplectic product even).
/// Structural: no floating point involved.
inline bool commutes(const PauliString& a, const PauliString& b) {
  const int s = std::popcount(a.x_mask & b.z_mask) +
                std::popcount(a.z_mask & b.x_mask);
  return (s & 1) == 0;
}

/// Product of two strings. The result is a single string; the {1,i,-1,-i}
/// phase is folded into the coefficient exactly.
inline PauliString operator*(const PauliString& a, const PauliString& b) {
  if (a.num_sites != b.num_sites) {
    throw UsageError("Pauli product on mismatched site counts " +
                     std::to_string(a.num_sites) + " vs " +
                     std::to_string(b.num_sites));
  }
  PauliString out(a.num_sites);
  out.x_mask = a.x_mask ^ b.x_mask;
  out.z_mask = a.z_mask ^ b.z_mask;
  // sigma(x,z) = i^{x.z} X^x Z^z; commuting Z^z1 past X^x2 costs
  // (-1)^{z1.x2}.
  const int e = std::popcount(a.x_mask & a.z_mask) +
                std::popcount(b.x_mask & b.z_mask) +
                2 * std::popcount(a.z_mask & b.x_mask) -
                std::popcount(out.x_mask & out.z_mask);
  out.coeff = detail::times_i_pow(a.coeff * b.coeff, e);
  return out;
}

/// Canonical sum of Pauli strings: unique keys, like terms merged, sorted
/// by (z,x) masks. Values are immutable in spirit; all algebra returns new
/// sums. Call pruned() after accumulation to drop round-off dust.
class PauliSum {
 public:
  using Key = std::pair<std::uint64_t, std::uint64_t>;  // (x_mask, z_mask)
  using TermMap = std::map<Key, Complex>;

  PauliSum() = default;

  explicit PauliSum(int num_sites) : num_sites_(num_sites) {
    detail::check_site_count(num_sites);
  }

  static PauliSum zero(int num_sites) { return PauliSum(num_sites); }

  static PauliSum identity(int num_sites, Complex c = Complex{1.0, 0.0}) {
    PauliSum s(num_sites);
    s.add(PauliString(num_sites, c));
    return s;
  }

  static PauliSum from_string(const PauliString& str) {
    PauliSum s(str.num_sites);
    s.add(str);
    return s;
  }

  int num_sites() const { return num_sites_; }
  bool empty() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }
  const TermMap& terms() const { return terms_; }

  /// Merges a term in; exact cancellations to 0.0 are erased immediately,
  /// sub-epsilon residue is left for pruned().
  void add(const PauliString& s) {
    if (s.num_sites != num_sites_) {
      throw UsageError("term on " + std::to_string(s.num_sites) +
                       " sites added to sum on " + std::to_string(num_sites_));
    }
    const Key key{s.x_mask, s.z_mask};
    auto [it, inserted] = terms_.try_emplace(key, s.coeff);
    if (!inserted) {
      it->second += s.coeff;
      if (it->second == Complex{0.0, 0.0}) terms_.erase(it);
    }
  }

  void add_scaled(const PauliSum& other, Complex factor) {
    if (other.num_sites_ != num_sites_) {
      throw UsageError("sum size mismatch in add_scaled");
    }
    for (const auto& [key, c] : other.terms_) {
      PauliString s(num_sites_, factor * c);
      s.x_mask = key.first;
      s.z_mask = key.second;
      add(s);
    }
  }

  /// Canonical form: coefficients with |c| < eps removed.
  PauliSum pruned(double eps = kPruneEps) const {
    PauliSum out(num_sites_);
    for (const auto& [key, c] : terms_) {
      if (std::abs(c) >= eps) out.terms_.emplace(key, c);
    }
    return out;
  }

  Complex coeff(const PauliString& s) const {
    auto it = terms_.find(Key{s.x_mask, s.z_mask});
    return it == terms_.end() ? Complex{0.0, 0.0} : it->second;
  }

  PauliString term(const Key& key, Complex c) const {
    PauliString s(num_sites_, c);
    s.x_mask = key.first;
    s.z_mask = key.second;
    return s;
  }

  double max_abs_coeff() const {
    double m = 0.0;
    for (const auto& [key, c] : terms_) m = std::max(m, std::abs(c));
    return m;
  }

  /// Full trace: 2^N times the all-identity coefficient.
  Complex trace() const {
    auto it = terms_.find(Key{0, 0});
    if (it == terms_.end()) return {0.0, 0.0};
    return it->second * std::ldexp(1.0, num_sites_);
  }

  /// A canonical sum is Hermitian iff every coefficient is real (the label
  /// part of each string is Hermitian). tol = 0 tests exactly.
  bool is_hermitian(double tol = 0.0) const {
    for (const auto& [key, c] : terms_) {
      if (std::abs(c.imag()) > tol) return false;
    }
    return true;
  }

  bool operator==(const PauliSum& other) const {
    return num_sites_ == other.num_sites_ && terms_ == other.terms_;
  }

 private:
  int num_sites_ = 0;
  TermMap terms_;
};

inline PauliSum operator*(Complex factor, const PauliSum& s) {
  PauliSum out(s.num_sites());
  out.add_scaled(s, factor);
  return out.pruned();
}

inline PauliSum operator+(const PauliSum& a, const PauliSum& b) {
  PauliSum out = a;
  out.add_scaled(b, Complex{1.0, 0.0});
  return out.pruned();
}

inline PauliSum operator-(const PauliSum& a, const PauliSum& b) {
  PauliSum out = a;
  out.add_scaled(b, Complex{-1.0, 0.0});
  return out.pruned();
}

/// Full operator product, all cross terms merged.
inline PauliSum operator*(const PauliSum& a, const PauliSum& b) {
  if (a.num_sites() != b.num_sites()) {
    throw UsageError("product of sums on mismatched site counts");
  }
  PauliSum out(a.num_sites());
  for (const auto& [ka, ca] : a.terms()) {
    const PauliString sa = a.term(ka, ca);
    for (const auto& [kb, cb] : b.terms()) {
      out.add(sa * b.term(kb, cb));
    }
  }
  return out.pruned();
}

/// [a, b] = ab - ba. Per string pair this is structurally zero when the
/// strings commute and exactly 2 ab otherwise.
inline PauliSum commutator(const PauliSum& a, const PauliSum& b) {
  if (a.num_sites() != b.num_sites()) {
    throw UsageError("commutator of sums on mismatched site counts");
  }
  PauliSum out(a.num_sites());
  for (const auto& [ka, ca] : a.terms()) {
    const PauliString sa = a.term(ka, ca);
    for (const auto& [kb, cb] : b.terms()) {
      const PauliString sb = b.term(kb, cb);
      if (commutes(sa, sb)) continue;
      PauliString p = sa * sb;
      p.coeff *= 2.0;
      out.add(p);
    }
  }
  return out.pruned();
}

namespace detail {

// Compresses the bits of `mask` selected by `keep` into a contiguous word
// preserving order.
inline std::uint64_t compress_bits(std::uint64_t mask, std::uint64_t keep) {
  std::uint64_t out = 0;
  int pos = 0;
  while (keep != 0) {
    const int bit = std::countr_zero(keep);
    out |= ((mask >> bit) & 1) << pos;
    ++pos;
    keep &= keep - 1;
  }
  return out;
}

}  // namespace detail

/// Symbolic partial trace over `traced`. Keeps exactly the terms whose
/// label is identity on every traced site, scales survivors by 2^|traced|
/// and restricts the labels to the kept sites (order preserved). The
/// drop/keep decision is structural. With prune = false the merged result
/// keeps sub-epsilon coefficients so callers can report residuals.
inline PauliSum partial_trace(const PauliSum& op, const SiteSet& traced,
                              bool prune = true) {
  const int n = op.num_sites();
  const std::uint64_t full =
      (n == 64) ? ~std::uint64_t{0} : ((std::uint64_t{1} << n) - 1);
  if ((traced.mask() & ~full) != 0) {
    throw UsageError("traced sites outside chain of length " +
                     std::to_string(n));
  }
  const std::uint64_t keep = full & ~traced.mask();
  const int kept_count = std::popcount(keep);
  const double scale = std::ldexp(1.0, traced.size());
  PauliSum out(kept_count);
  for (const auto& [key, c] : op.terms()) {
    const auto [x, z] = key;
    if (((x | z) & traced.mask()) != 0) continue;  // traceless Pauli on E
    PauliString s(kept_count, c * scale);
    s.x_mask = detail::compress_bits(x, keep);
    s.z_mask = detail::compress_bits(z, keep);
    out.add(s);
  }
  return prune ? out.pruned() : out;
}

/// The four components of an operator split over one site:
/// op = id ⊗ I_s + x ⊗ X_s + y ⊗ Y_s + z ⊗ Z_s, each component living on
/// the remaining N-1 sites (order preserved).
struct SiteComponents {
  PauliSum id, x, y, z;

  const PauliSum& operator[](Pauli p) const {
    switch (p) {
      case Pauli::I: return id;
      case Pauli::X: return x;
      case Pauli::Y: return y;
      case Pauli::Z: return z;
    }
    throw UsageError("invalid Pauli component");
  }
};

/// Exact block decomposition at `site`; reassembling the four components
/// with the site label re-inserted reproduces the input coefficient by
/// coefficient.
inline SiteComponents decompose_at_site(const PauliSum& op, int site) {
  const int n = op.num_sites();
  if (site < 1 || site > n) {
    throw UsageError("decomposition site " + std::to_string(site) +
                     " out of range");
  }
  SiteComponents out{PauliSum(n - 1), PauliSum(n - 1), PauliSum(n - 1),
                     PauliSum(n - 1)};
  const int pos = site - 1;
  for (const auto& [key, c] : op.terms()) {
    const auto [x, z] = key;
    PauliString s(n - 1, c);
    s.x_mask = detail::drop_bit(x, pos);
    s.z_mask = detail::drop_bit(z, pos);
    const bool xb = (x >> pos) & 1;
    const bool zb = (z >> pos) & 1;
    if (xb && zb) {
      out.y.add(s);
    } else if (xb) {
      out.x.add(s);
    } else if (zb) {
      out.z.add(s);
    } else {
      out.id.add(s);
    }
  }
  return out;
}

/// Inverse of decompose_at_site for a single component: re-inserts `label`
/// at `site`, mapping a sum on N-1 sites to one on N sites.
inline PauliSum insert_site(const PauliSum& op, int site, Pauli label) {
  const int n = op.num_sites() + 1;
  if (site < 1 || site > n) {
    throw UsageError("insertion site " + std::to_string(site) +
                     " out of range");
  }
  const int pos = site - 1;
  const bool xb = (label == Pauli::X || label == Pauli::Y);
  const bool zb = (label == Pauli::Z || label == Pauli::Y);
  PauliSum out(n);
  for (const auto& [key, c] : op.terms()) {
    PauliString s(n, c);
    s.x_mask = detail::insert_bit(key.first, pos, xb);
    s.z_mask = detail::insert_bit(key.second, pos, zb);
    out.add(s);
  }
  return out;
}

inline PauliSum reassemble_at_site(const SiteComponents& parts, int site) {
  PauliSum out = insert_site(parts.id, site, Pauli::I);
  out.add_scaled(insert_site(parts.x, site, Pauli::X), Complex{1.0, 0.0});
  out.add_scaled(insert_site(parts.y, site, Pauli::Y), Complex{1.0, 0.0});
  out.add_scaled(insert_site(parts.z, site, Pauli::Z), Complex{1.0, 0.0});
  return out.pruned();
}

/// Hermitian conjugate: conjugate every coefficient (labels are Hermitian).
inline PauliSum adjoint(const PauliSum& op) {
  PauliSum out(op.num_sites());
  for (const auto& [key, c] : op.terms()) {
    out.add(out.term(key, std::conj(c)));
  }
  return out;
}

}  // namespace spinchain
