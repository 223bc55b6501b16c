#pragma once

#include "gerbes/gerbe.hpp"

namespace gerbes {

/// Choices entering the holonomy functor: base, frame, presentation-backed
/// section of pi1, and the fiber-section matching tolerance for pulling
/// automorphisms back to G.
struct HolonomyChoices {
  int base = 0;
  PathFrame frame;
  std::shared_ptr<const Pi1Presentation> pres;
  LoopSection section;
  double match_tol = 1e-8;
};

/// Default choices: BFS frame and plain section at the given base; a detour
/// loop may be supplied to realize a second section.
HolonomyChoices make_holonomy_choices(PosetPtr p, int base,
                                      std::optional<Path> detour = std::nullopt);

/// Pull an automorphism of the fibre back to G by matching against the
/// action table (smallest preimage; ambiguous matches between distinct
/// G-images are an error).
Elem fiber_section(const FiberKind& fiber, const FiberMorphism& m, double tol);

/// Twisted holonomy of a bundle C*-gerbe: the system
/// (A_a, alpha_a, j over section loops, matched gamma).
TwistedSystem gerbe_to_twisted(const Gerbe& g, const HolonomyChoices& ch);

/// The Eq.-defbeta product of a gerbe morphism along a path, as a G-element:
/// u'(tail)-twisted product of the beta values over the steps.
Elem defbeta_product(const GerbeMorphism& m, const Path& p);

/// Morphism of twisted systems induced by a gerbe morphism: eta at the base
/// together with kappa(l) = section(beta over the loop of l).
struct InducedMorphism {
  StarMap eta;
  std::function<Elem(const Word&)> kappa;
};
InducedMorphism morphism_to_twisted(const GerbeMorphism& m, const HolonomyChoices& ch,
                                    const HolonomyChoices& ch_target);

/// Pointwise composite of two gerbe morphisms (beta values multiplied in G).
GerbeMorphism compose_gerbe_morphisms(const GerbeMorphism& later, const GerbeMorphism& first);

/// Necessary-condition checker for a system being a twisted holonomy:
/// holonomies preserve inverses, nu(l^-1) = nu(l)^-1.
struct InverseCompatibility {
  bool holonomy_like = false;
  double max_residual = 0;
};
InverseCompatibility inverse_compatibility(const TwistedSystem& s, int len_bound = 4);

// --- reconstruction -----------------------------------------------------------------

/// A C*-bundle of fixed-point algebras: the fixed subalgebra sits inside the
/// ambient algebra through the given basis, and the bundle maps act on its
/// coordinates. Transition data on nondegenerate nerve edges.
struct FixedAlgebraBundle {
  PosetPtr poset;
  MatrixAlgebraPtr F;
  std::vector<BlockMat> fixed_basis;
  std::map<int, Mtx> j; // Sigma1 id of a nondegenerate nerve edge -> map on fixed coords
};

/// The finite symmetry environment: G inside Aut F with a finite overgroup N
/// normalizing it.
struct ReconstructionEnv {
  GroupPtr G;
  std::vector<StarMap> g_action;
  GroupPtr N;
  std::vector<StarMap> n_action;
  GroupHom incl; // G -> N
};

struct Reconstruction {
  bool ok = false;
  Report obstruction;
  CrossedModulePtr cm;
  NonAbCocycle2 tau;
  Gerbe gerbe;
};

/// Lift a bundle of fixed-point algebras to a twisted connection and its
/// associated C*-gerbe; fails with a located obstruction when some loop
/// holonomy is not realized inside N/G.
Reconstruction reconstruct_gerbe(const FixedAlgebraBundle& in, const ReconstructionEnv& env,
                                 int base, const PathFrame& frame, double tol = 1e-8);

/// Extract the fixed-point bundle of an algebra-fiber gerbe in the input
/// format of reconstruct_gerbe.
FixedAlgebraBundle fixed_bundle_of(const Gerbe& g, double tol = 1e-9);

/// Gerbe isomorphism realizing a coefficient-level witness (v,h) between two
/// associated gerbes with transitions in the N-action.
GerbeMorphism reconstruction_iso(GerbePtr src, GerbePtr dst, const CoboundaryPair& vh,
                                 const ReconstructionEnv& env);

} // namespace gerbes
