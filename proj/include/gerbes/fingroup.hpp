#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gerbes/report.hpp"

namespace gerbes {

using Elem = int; // element id inside one group, 0-based

/// Finite group given by its multiplication table. All axioms are checked
/// eagerly at construction; instances are immutable afterwards.
class FiniteGroup {
public:
  /// table[a][b] = id of a*b. Labels optional (defaults to decimal ids).
  FiniteGroup(std::vector<std::vector<Elem>> table, std::vector<std::string> labels = {});

  int order() const { return n_; }
  Elem mul(Elem a, Elem b) const { return table_[a][b]; }
  Elem inv(Elem a) const { return inv_[a]; }
  Elem identity() const { return e_; }
  bool is_abelian() const { return abelian_; }
  const std::string& label(Elem a) const { return labels_[a]; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::optional<Elem> elem_by_label(const std::string& s) const;

  Elem conj(Elem u, Elem g) const { return mul(mul(u, g), inv(u)); } // u g u^-1

  /// Product over a word, left factor applied last: word {a,b,c} -> a*b*c.
  Elem product(const std::vector<Elem>& word) const;

  // Named constructions used by fixtures and tests.
  static std::shared_ptr<const FiniteGroup> cyclic(int n);
  static std::shared_ptr<const FiniteGroup> trivial();
  static std::shared_ptr<const FiniteGroup> direct_product(const FiniteGroup& a, const FiniteGroup& b);
  static std::shared_ptr<const FiniteGroup> symmetric(int n); // n <= 5

  /// For direct products built above: (xa, xb) -> flat id.
  static Elem pair_id(const FiniteGroup& a, Elem xa, Elem xb) { return xa + a.order() * xb; }

private:
  int n_;
  std::vector<std::vector<Elem>> table_;
  std::vector<Elem> inv_;
  std::vector<std::string> labels_;
  Elem e_ = 0;
  bool abelian_ = true;
};

using GroupPtr = std::shared_ptr<const FiniteGroup>;

/// Verified homomorphism between two multiplication-table groups.
class GroupHom {
public:
  GroupHom(GroupPtr source, GroupPtr target, std::vector<Elem> image);

  const GroupPtr& source() const { return src_; }
  const GroupPtr& target() const { return dst_; }
  Elem operator()(Elem g) const { return img_[g]; }
  const std::vector<Elem>& image_table() const { return img_; }

  bool is_injective() const;
  bool is_surjective() const;
  bool is_automorphism() const { return src_.get() == dst_.get() && is_injective(); }

  /// Composition h2 o h1 (h1 first). Requires h1.target == h2.source.
  static GroupHom compose(const GroupHom& h2, const GroupHom& h1);
  static GroupHom identity(GroupPtr g);
  /// Inverse of a bijective hom.
  GroupHom inverse() const;

  bool operator==(const GroupHom& o) const { return img_ == o.img_; }

private:
  GroupPtr src_, dst_;
  std::vector<Elem> img_;
};

/// All automorphisms of g, by exhaustive search; deterministic order.
std::vector<GroupHom> automorphism_group(const GroupPtr& g);

/// Crossed module i : G -> N, beta : N -> Aut G presenting a 2-group.
/// Construction verifies that each beta_u is an automorphism and stores the
/// inverses; the 2-group equivariance axioms are checked by
/// check_crossed_module (construction calls it and throws on violation
/// unless deferred).
class CrossedModule {
public:
  CrossedModule(GroupPtr G, GroupPtr N, GroupHom i, std::vector<GroupHom> beta,
                bool defer_axiom_check = false);

  const GroupPtr& G() const { return G_; }
  const GroupPtr& N() const { return N_; }
  const GroupHom& i() const { return i_; }
  Elem i_of(Elem g) const { return i_(g); }
  const GroupHom& beta(Elem u) const { return beta_[u]; }
  Elem act(Elem u, Elem g) const { return beta_[u](g); } // beta_u(g)

  bool i_injective() const { return i_.is_injective(); }
  /// Preimage of n under i (smallest id) or -1.
  Elem i_preimage(Elem n) const { return ipre_[n]; }

  /// Identity crossed module ^1G = (G => G) with i = id, beta = ad.
  static std::shared_ptr<const CrossedModule> adjoint(GroupPtr g);
  /// (i(G) -> N) with beta = conjugation; used for holonomy coefficients.
  /// The subgroup i(G) is materialized as its own FiniteGroup.
  static std::shared_ptr<const CrossedModule> image_submodule(const CrossedModule& cm);

private:
  GroupPtr G_, N_;
  GroupHom i_;
  std::vector<GroupHom> beta_;
  std::vector<Elem> ipre_;
};

using CrossedModulePtr = std::shared_ptr<const CrossedModule>;

/// Lists every (u,g) violating either 2-group equivariance equation, plus any
/// failure of beta to be a homomorphism. Empty report certifies a 2-group.
Report check_crossed_module(const CrossedModule& cm);

/// Coset group N / i(G) with canonical projection.
struct QuotientData {
  GroupPtr Q;
  GroupHom proj;                     // N -> Q
  std::vector<Elem> coset_rep;       // Q element -> smallest N representative
};
QuotientData quotient_mod_G(const CrossedModule& cm);

/// Partition of a carrier under a period-2 bijection: zero = fixed points,
/// smallest id of each 2-orbit goes to plus.
struct Polarization {
  std::vector<int> side; // per carrier id: +1, 0, -1
  std::vector<int> plus, zero, minus;
};
Polarization polarize(int carrier_size, const std::vector<int>& conj);

/// Unital section s : Q -> N of an epimorphism eta, with s(e)=1 and
/// s(q^-1)=s(q)^-1 whenever q != q^-1. For q = q^-1 with s(q) not
/// self-inverse, the correction g_q in ker eta with s(q)^-1 = g_q s(q) is
/// recorded.
struct UnitalSection {
  GroupHom eta;                  // N -> Q
  std::vector<Elem> s;           // Q element -> N element
  std::vector<Elem> correction;  // Q element -> g_q (identity when not needed)
};
UnitalSection unital_section(const GroupHom& eta);

/// Subgroup generated by a set of elements (BFS closure), as id list sorted
/// ascending plus membership flags.
std::vector<Elem> generated_subgroup(const FiniteGroup& g, std::vector<Elem> gens);

/// Materialize a subgroup (given by its sorted element list) as a FiniteGroup
/// together with the inclusion hom.
std::pair<GroupPtr, GroupHom> subgroup_as_group(GroupPtr g, const std::vector<Elem>& elems);

} // namespace gerbes
