#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>

#include "gerbes/fingroup.hpp"
#include "gerbes/poset.hpp"
#include "gerbes/scan.hpp"

namespace gerbes {

// --- 1-cocycles ---------------------------------------------------------------

/// Map Sigma1 -> N subject to u_{d1 c} = u_{d0 c} u_{d2 c} on every 2-simplex.
struct Cocycle1 {
  PosetPtr poset;
  GroupPtr group; // N
  std::vector<Elem> u;

  Elem along(const Path& p) const; // ordered product over a path
};

Report check_z1(const Cocycle1& u);

/// Extend values on nondegenerate nerve edges to all of Sigma1 by
/// b -> u(|b| d0 b)^-1 u(|b| d1 b), constants to 1 (normalized convention).
/// Keys of vals: Sigma1 ids of nondegenerate nerve edges.
Cocycle1 extend_nerve_values(PosetPtr p, GroupPtr n, const std::map<int, Elem>& vals);
Cocycle1 trivial_z1(PosetPtr p, GroupPtr n);

enum class SearchStatus { Verified, Witness, Distinct, BoundExceeded };

struct Z1EquivResult {
  SearchStatus status;
  std::optional<std::vector<Elem>> v; // witness 0-cochain
  std::uint64_t space = 0, bound = 0;
};

Report z1_verify(const Cocycle1& u, const Cocycle1& u2, const std::vector<Elem>& v);
Z1EquivResult z1_search(const Cocycle1& u, const Cocycle1& u2, std::uint64_t bound = 10000000,
                        ScanMode mode = ScanMode::Parallel);

// --- non-abelian 2-cocycles -----------------------------------------------------

struct NonAbCocycle2 {
  PosetPtr poset;
  CrossedModulePtr cm;
  std::vector<Elem> u; // Sigma1 -> N
  std::vector<Elem> g; // Sigma2 -> G

  Elem u_along(const Path& p) const;
};

struct NonAbFlags {
  bool normalized = false;
  bool twisted_connection = false;
  bool sigma3_implied = false; // second condition skipped because i is injective
};

/// Validates both cocycle conditions. When i is injective the degree-3
/// condition is recorded as implied unless force_sigma3 is set.
Report check_nonabelian(const NonAbCocycle2& q, NonAbFlags* flags = nullptr,
                        bool force_sigma3 = false);

NonAbCocycle2 trivial_cocycle2(PosetPtr p, CrossedModulePtr cm);

struct CoboundaryPair {
  std::vector<Elem> v; // Sigma0 -> N
  std::vector<Elem> h; // Sigma1 -> G
};

CoboundaryPair identity_pair(const NonAbCocycle2& q);
CoboundaryPair inverse_pair(const NonAbCocycle2& q, const CoboundaryPair& p);
/// Pair carrying q -> q'' when p01 carries q -> q' and p12 carries q' -> q''.
CoboundaryPair compose_pairs(const NonAbCocycle2& q, const CoboundaryPair& p12,
                             const CoboundaryPair& p01);

NonAbCocycle2 apply_coboundary(const NonAbCocycle2& q, const CoboundaryPair& p);
bool verify_equiv(const NonAbCocycle2& q, const NonAbCocycle2& q2, const CoboundaryPair& p);

/// Coboundary pair (1,h) with i(h) killing the constant-simplex values; the
/// result is normalized.
CoboundaryPair normalization_pair(const NonAbCocycle2& q);
NonAbCocycle2 normalize(const NonAbCocycle2& q);

struct EquivSearchResult {
  SearchStatus status;
  std::optional<CoboundaryPair> witness;
  std::uint64_t space = 0, bound = 0;
};

/// Exhaustive search for (v,h) within the bound. With i injective the
/// h-cochain is forced pointwise by the u-equation, so only v-space is
/// scanned; the certificate is still exhaustive.
EquivSearchResult search_equiv(const NonAbCocycle2& q, const NonAbCocycle2& q2,
                               std::uint64_t bound = 10000000, ScanMode mode = ScanMode::Parallel);

// --- the diagram maps -------------------------------------------------------------

NonAbCocycle2 d_of(const Cocycle1& u, CrossedModulePtr cm); // du = (u, 1)
Cocycle1 mu1(const Cocycle1& v, const QuotientData& qd);    // v mod i(G)
Cocycle1 mu2(const NonAbCocycle2& q, const QuotientData& qd);

/// Section-lift twisted connection over w in Z^1(Delta, N/G); requires i
/// injective. The polarization correction makes u_{rev b} = u_b^-1 exact.
NonAbCocycle2 nu_of_w(const Cocycle1& w, const CrossedModulePtr& cm, const QuotientData& qd,
                      const UnitalSection& us);

// --- abelian cohomology ------------------------------------------------------------

/// Degree-n cochain with values in an abelian coefficient group.
struct AbCochain {
  PosetPtr poset;
  GroupPtr group; // abelian
  int degree = 0;
  std::vector<Elem> values;
};

AbCochain coboundary(const AbCochain& w); // degree n -> n+1, alternating faces
Report check_abelian_cocycle(const AbCochain& u);

struct AbelianHn {
  std::uint64_t z_count = 0, b_count = 0, h_count = 0;
  // materialized only in degree <= 1 and within the bound
  std::vector<AbCochain> cocycles;
  bool list_materialized = false;
};

/// Exact counts via integer Smith reduction of the incidence maps; the
/// degree-1 cocycle list is enumerated through nerve-edge assignments when
/// the space fits the bound.
AbelianHn abelian_hn(PosetPtr p, GroupPtr a, int n, std::uint64_t bound = 10000000,
                     ScanMode mode = ScanMode::Parallel);

/// Membership of a degree-n cocycle in the coboundary subgroup, decided
/// exactly; returns a primitive when one exists.
std::optional<AbCochain> coboundary_preimage(const AbCochain& u);
/// Bounded brute-force variant kept as the independent route.
std::optional<AbCochain> coboundary_preimage_bruteforce(const AbCochain& u,
                                                        std::uint64_t bound = 10000000,
                                                        ScanMode mode = ScanMode::Parallel);

/// Dixmier-Douady class of q (G abelian, N acting trivially).
struct DDClass {
  AbCochain g; // degree-2 representative
  bool trivial = false;
};
DDClass dd_class(const NonAbCocycle2& q);
bool dd_equal(const DDClass& a, const DDClass& b);

// --- group handles and group cocycles ------------------------------------------------

/// Group carrier for Pi: free words, a finite multiplication table, or a
/// poset presentation backend. Elements are normal-form words.
class PiGroup {
public:
  static PiGroup free_group(int rank);
  static PiGroup finite(GroupPtr table);
  static PiGroup from_presentation(std::shared_ptr<const Pi1Presentation> pres);

  Word normal(const Word& w) const;
  Word mul(const Word& a, const Word& b) const;
  Word inv(const Word& a) const;
  bool is_identity(const Word& w) const { return normal(w).empty(); }
  bool is_finite() const;
  /// All elements (finite) or all reduced words of length <= len_bound (free).
  std::vector<Word> elements(int len_bound) const;
  std::string label(const Word& w) const;

  const std::shared_ptr<const Pi1Presentation>& presentation() const { return pres_; }
  const GroupPtr& table() const { return table_; }

private:
  std::shared_ptr<const Pi1Presentation> pres_;
  GroupPtr table_; // finite backend without poset
  int rank_ = 0;
};

/// Non-abelian 2-cocycle over a group Pi with 2-group coefficients; values
/// are produced lazily on normal forms and memoized.
class GroupCocycle2 {
public:
  GroupCocycle2(PiGroup pi, CrossedModulePtr cm, std::function<Elem(const Word&)> nu,
                std::function<Elem(const Word&, const Word&)> gamma);

  const PiGroup& pi() const { return pi_; }
  const CrossedModulePtr& cm() const { return cm_; }
  Elem nu(const Word& l) const;
  Elem gamma(const Word& l, const Word& m) const;

private:
  struct Memo {
    std::mutex mu;
    std::map<Word, Elem> nu;
    std::map<std::pair<Word, Word>, Elem> gamma;
  };

  PiGroup pi_;
  CrossedModulePtr cm_;
  std::function<Elem(const Word&)> nu_fn_;
  std::function<Elem(const Word&, const Word&)> gamma_fn_;
  std::shared_ptr<Memo> memo_ = std::make_shared<Memo>();
};

/// Verifies the three group-cocycle equations on all pairs and triples of
/// the domain (whole group when finite, words up to len_bound when free).
/// The report notes the length bound used.
Report check_group_cocycle(const GroupCocycle2& c, int len_bound = 4);

struct GroupCoboundary {
  Elem w;                                 // element of N
  std::function<Elem(const Word&)> k;     // Pi -> G
};

Report group_equiv(const GroupCocycle2& c, const GroupCocycle2& c2, const GroupCoboundary& wk,
                   int len_bound = 4);

// --- holonomy of non-abelian cocycles ---------------------------------------------------

/// Section pi1 -> loops with s(1) = constant path; an optional detour loop
/// prepended to nonempty realizations yields a genuinely different section.
class LoopSection {
public:
  explicit LoopSection(std::shared_ptr<const Pi1Presentation> pres,
                       std::optional<Path> detour = std::nullopt);
  const std::shared_ptr<const Pi1Presentation>& pres() const { return pres_; }
  Path loop(const Word& w) const;

private:
  std::shared_ptr<const Pi1Presentation> pres_;
  std::optional<Path> detour_;
};

/// Holonomy group cocycle of q at the section's base, with coefficients in
/// (i(G) -> N). Non-normalized inputs are normalized first.
GroupCocycle2 holonomy_cocycle(const NonAbCocycle2& q, const LoopSection& s);

/// The explicit (1,h) pair relating the holonomy cocycles of two sections:
/// h_l = nu'_l ubar_l^-1 in i(G).
GroupCoboundary section_change_witness(const NonAbCocycle2& q, const LoopSection& s,
                                       const LoopSection& s2);

} // namespace gerbes
