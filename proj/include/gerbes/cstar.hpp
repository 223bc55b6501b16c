#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>

#include "gerbes/cohomology.hpp"

namespace gerbes {

using Cplx = std::complex<double>;
using Mtx = Eigen::MatrixXcd;

/// Element of a block-diagonal matrix *-algebra.
struct BlockMat {
  std::vector<Mtx> blocks;

  BlockMat operator+(const BlockMat& o) const;
  BlockMat operator-(const BlockMat& o) const;
  BlockMat operator*(const BlockMat& o) const;
  BlockMat operator*(Cplx s) const;
  BlockMat adjoint() const;
  double norm() const; // Frobenius over all blocks
  Mtx dense() const;   // block-diagonal embedding
};

class MatrixAlgebra;
using MatrixAlgebraPtr = std::shared_ptr<const MatrixAlgebra>;

/// Finite-dimensional C*-algebra, a direct sum of full matrix blocks.
class MatrixAlgebra {
public:
  explicit MatrixAlgebra(std::vector<int> dims);

  const std::vector<int>& dims() const { return dims_; }
  int total_dim() const { return total_; }   // Hilbert-space dimension
  int linear_dim() const { return linear_; } // complex dimension of the algebra

  BlockMat zero() const;
  BlockMat identity() const;
  /// Matrix-unit basis, fixed order (block, col, row).
  const std::vector<BlockMat>& basis() const { return basis_; }
  /// Coordinates with respect to basis(); inverse of unvec.
  Eigen::VectorXcd vec(const BlockMat& m) const;
  BlockMat unvec(const Eigen::VectorXcd& v) const;
  bool shape_matches(const BlockMat& m) const;

  static MatrixAlgebraPtr scalars() { return std::make_shared<MatrixAlgebra>(std::vector<int>{1}); }
  static MatrixAlgebraPtr full(int n) { return std::make_shared<MatrixAlgebra>(std::vector<int>{n}); }
  static MatrixAlgebraPtr diagonal(int n) {
    return std::make_shared<MatrixAlgebra>(std::vector<int>(static_cast<std::size_t>(n), 1));
  }

private:
  std::vector<int> dims_;
  int total_ = 0, linear_ = 0;
  std::vector<BlockMat> basis_;
};

/// Unital linear map between block algebras, stored densely on basis
/// coordinates. Used for *-morphisms and *-automorphisms; the inverse of a
/// bijective map is computed once and carried along.
class StarMap {
public:
  StarMap() = default;
  /// Build from images of the source basis; verifies linearity only (use
  /// verify() for the *-morphism axioms).
  StarMap(MatrixAlgebraPtr src, MatrixAlgebraPtr dst,
          const std::function<BlockMat(const BlockMat&)>& fn);

  static StarMap identity(MatrixAlgebraPtr a);
  /// ad u for a unitary u in the algebra.
  static StarMap inner(MatrixAlgebraPtr a, const BlockMat& u);
  /// Block permutation composed with per-block unitaries: result block i is
  /// U_i * x_{pre(i)} * U_i^dagger.
  static StarMap block_permutation(MatrixAlgebraPtr a, const std::vector<int>& pre,
                                   const std::vector<Mtx>& unitaries);
  /// Raw linear action on basis coordinates (used by the file loader).
  static StarMap from_matrix(MatrixAlgebraPtr src, MatrixAlgebraPtr dst, Mtx L);
  const Mtx& matrix() const { return L_; }

  const MatrixAlgebraPtr& source() const { return src_; }
  const MatrixAlgebraPtr& target() const { return dst_; }
  BlockMat operator()(const BlockMat& x) const;

  /// Multiplicative, *-preserving, unital — each to the tolerance.
  Report verify(double tol = 1e-10) const;
  bool is_bijective(double tol = 1e-10) const;
  StarMap inverse() const;

  static StarMap compose(const StarMap& later, const StarMap& first);
  /// Max Frobenius distance of basis images; automorphism equality test.
  static double distance(const StarMap& a, const StarMap& b);

private:
  MatrixAlgebraPtr src_, dst_;
  Mtx L_; // dst.linear x src.linear
};

/// ad u as an automorphism together with the unitary that implements it.
struct InnerAuto {
  BlockMat u;
  StarMap map;
};

// --- twisted systems ----------------------------------------------------------------

enum class SystemClass { Generic, Inner, BusbySmith, Spatial };

/// Structure 2-group data: nu factors through alpha1 applied to a lift into N.
struct StructureTwoGroup {
  CrossedModulePtr cm;
  std::vector<StarMap> alpha1;             // per N element
  std::function<Elem(const Word&)> lift;   // Pi -> N on normal forms
};

/// Twisted C*-dynamical system (A, alpha, nu, gamma) over finite G and a
/// group handle Pi. nu and gamma are evaluated lazily on normal forms.
class TwistedSystem {
public:
  TwistedSystem(MatrixAlgebraPtr A, GroupPtr G, std::vector<StarMap> alpha, PiGroup pi,
                std::function<StarMap(const Word&)> nu,
                std::function<Elem(const Word&, const Word&)> gamma);

  const MatrixAlgebraPtr& algebra() const { return A_; }
  const GroupPtr& group() const { return G_; }
  const StarMap& alpha(Elem g) const { return alpha_[g]; }
  const PiGroup& pi() const { return pi_; }
  const StarMap& nu(const Word& l) const;
  Elem gamma(const Word& l, const Word& m) const;

  /// Unitary embedding phi : G -> U(A) with ad phi = alpha (inner systems).
  void set_embedding(std::vector<BlockMat> phi);
  const std::optional<std::vector<BlockMat>>& embedding() const { return embed_; }
  BlockMat embedded(Elem g) const;

  /// Unital u : Pi -> U(A) implementing nu = ad u, gamma = du (spatial systems).
  void set_spatial_u(std::function<BlockMat(const Word&)> u);
  const std::optional<std::function<BlockMat(const Word&)>>& spatial_u() const { return spat_u_; }

  void set_structure(StructureTwoGroup s) { structure_ = std::move(s); }
  const std::optional<StructureTwoGroup>& structure() const { return structure_; }

private:
  struct Memo {
    std::mutex mu;
    std::map<Word, StarMap> nu;
  };

  MatrixAlgebraPtr A_;
  GroupPtr G_;
  std::vector<StarMap> alpha_;
  PiGroup pi_;
  std::function<StarMap(const Word&)> nu_fn_;
  std::function<Elem(const Word&, const Word&)> gamma_fn_;
  std::optional<std::vector<BlockMat>> embed_;
  std::optional<std::function<BlockMat(const Word&)>> spat_u_;
  std::optional<StructureTwoGroup> structure_;
  std::shared_ptr<Memo> memo_ = std::make_shared<Memo>();
};

struct SystemCheck {
  Report report;
  SystemClass cls = SystemClass::Generic;
  std::optional<std::pair<Word, Word>> first_failure;
};

/// Validates the twisted-action equations and classifies the system. Free Pi
/// is sampled on words up to len_bound.
SystemCheck check_system(const TwistedSystem& s, double tol = 1e-10, int len_bound = 4);

/// Rewrites gamma so that gamma(l,1) = gamma(1,l) = 1; the underlying action
/// is unchanged and the identity map certifies the isomorphism.
TwistedSystem normalize_gamma(const TwistedSystem& s, double tol = 1e-10);

/// Morphism checks: eta with a group morphism phi (first kind) or with a
/// twisting map kappa (second kind).
Report check_morphism_phi(const StarMap& eta, const GroupHom& phi, const TwistedSystem& s,
                          const TwistedSystem& s2, bool strong_gamma = false, double tol = 1e-10,
                          int len_bound = 4);
Report check_morphism_kappa(const StarMap& eta, const std::function<Elem(const Word&)>& kappa,
                            const TwistedSystem& s, const TwistedSystem& s2,
                            bool check_ext_eq = false, double tol = 1e-10, int len_bound = 4);

// --- covariant representations -------------------------------------------------------

struct CovariantRep {
  MatrixAlgebraPtr domain;
  GroupPtr G;
  PiGroup pi;
  int dim = 0;                                   // Hilbert-space dimension
  std::function<Mtx(const BlockMat&)> pi_rep;    // A -> B(H)
  std::vector<Mtx> rho;                          // G -> U(H)
  std::function<Mtx(const Word&)> upsilon;       // Pi -> U(H), upsilon(1) = 1
  bool spatial = false;
};

/// Regular representation of an inner system with finite Pi, on the
/// trace-GNS space of A tensored with l^2(Pi). gamma is normalized first, so
/// upsilon(1) = 1.
CovariantRep regular_representation(const TwistedSystem& s, double tol = 1e-10);

/// Eq.-covrep-style residuals for an arbitrary covariant representation.
Report check_covariant(const CovariantRep& rep, const TwistedSystem& s, double tol = 1e-10);

// --- convolution ------------------------------------------------------------------------

/// Function Pi -> B with B realized as dense matrices; inner systems take
/// B = A, otherwise B is the ordinary crossed product A x G.
struct ConvContext {
  PiGroup pi;
  std::vector<Word> elems;
  int bdim = 0;
  std::function<Mtx(const Word&, const Mtx&)> nu_bar;      // twisted action on B
  std::function<Mtx(const Word&, const Word&)> gamma_bar;  // unitary in B
  std::function<Mtx(const BlockMat&)> embed_a;             // A -> B
  std::function<Mtx(Elem)> phi_b;                          // G -> U(B)
};

ConvContext conv_context(const TwistedSystem& s);

using PiFun = std::vector<Mtx>; // indexed like ConvContext::elems

PiFun conv_multiply(const ConvContext& ctx, const PiFun& f, const PiFun& g);
PiFun conv_involution(const ConvContext& ctx, const PiFun& f);
PiFun conv_delta(const ConvContext& ctx, const Word& at, const Mtx& value);

/// Largest associativity defect over the given triples.
double conv_associativity_residual(const ConvContext& ctx, const std::vector<PiFun>& fs);

/// Integrated form sum_l pi(f(l)) upsilon_l of a covariant representation.
Mtx integrated_rep(const CovariantRep& rep, const ConvContext& ctx, const PiFun& f);
/// Multiplicativity and *-preservation residual over random pairs.
struct StarMorphismCheck {
  double mult_residual = 0, star_residual = 0;
  bool ok(double tol) const { return mult_residual < tol && star_residual < tol; }
};
StarMorphismCheck integrated_is_star_morphism(const CovariantRep& rep, const ConvContext& ctx,
                                              int trials = 100, unsigned seed = 2024);

// --- crossed products ----------------------------------------------------------------------

/// Numerically identified structure of a generated matrix *-algebra.
struct StructureReport {
  int dim = 0;
  int center_dim = 0;
  std::vector<int> blocks; // block sizes d with dim(S P) = d^2, ascending
};

StructureReport identify_structure(const std::vector<Mtx>& generators, double tol = 1e-8);

struct CrossedProductOrdinary {
  int dim_H = 0;
  std::function<Mtx(const BlockMat&)> eta; // A -> B
  std::vector<Mtx> phi;                    // G -> U(B)
  std::vector<Mtx> span_basis;             // orthonormal basis of B
  StructureReport structure;
  Report covariance;
};

/// A x_alpha G realized on the trace-GNS space of A tensored with l^2(G).
CrossedProductOrdinary crossed_product_ordinary(const MatrixAlgebraPtr& A,
                                                const std::vector<StarMap>& alpha,
                                                const GroupPtr& G, double tol = 1e-10);

enum class CrossedProductMode { Plain, Spatial };

struct CrossedProductTwisted {
  bool possibly_trivial = false; // spatial mode without a spatial representation
  int dim_H = 0;
  std::function<Mtx(const BlockMat&)> iota; // A -> B
  std::vector<Mtx> u_g;                     // G images
  std::vector<Mtx> v_l;                     // Pi images (finite Pi)
  std::vector<Mtx> span_basis;
  StructureReport structure;
  Report relations; // (cp1) relation residuals
  std::vector<std::string> notes;
};

/// Crossed product of an inner twisted system with finite Pi, realized on the
/// regular covariant representation (a separating family at this scale).
CrossedProductTwisted crossed_product_twisted(const TwistedSystem& s, CrossedProductMode mode,
                                              double tol = 1e-8);

/// Dimension comparison plus generator-wise intertwiner between the plain and
/// spatial realizations.
Report crossed_product_surjection(const CrossedProductTwisted& plain,
                                  const CrossedProductTwisted& spatial, double tol = 1e-8);

// --- fixture helpers -------------------------------------------------------------------------

/// Seeded random self-adjoint element (deterministic across runs).
BlockMat random_self_adjoint(const MatrixAlgebra& a, unsigned seed);
BlockMat random_element(const MatrixAlgebra& a, unsigned seed);

} // namespace gerbes
