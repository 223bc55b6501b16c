#pragma once

#include <variant>

#include "gerbes/cstar.hpp"

namespace gerbes {

// --- fibers -----------------------------------------------------------------------

/// Finite group fiber with a G-action by automorphisms.
struct GroupFiber {
  GroupPtr fiber;
  std::vector<GroupHom> action; // per G element
};

/// Hilbert-space fiber with a unitary representation of G.
struct HilbertFiber {
  int dim = 0;
  std::vector<Mtx> rep; // per G element
};

/// Matrix-algebra fiber with a G-action by *-automorphisms; unitaries kept
/// when the action is implemented by a representation.
struct AlgebraFiber {
  MatrixAlgebraPtr alg;
  std::vector<StarMap> action;
  std::optional<std::vector<BlockMat>> unitary_rep;
};

using FiberKind = std::variant<GroupFiber, HilbertFiber, AlgebraFiber>;

/// Inclusion/transition morphism matching the fiber kind.
using FiberMorphism = std::variant<GroupHom, Mtx, StarMap>;

/// Numeric comparison tolerance for Hilbert and algebra fibers; group fibers
/// compare exactly.
inline constexpr double kFiberTol = 1e-9;

// --- gerbes -----------------------------------------------------------------------

struct Gerbe {
  PosetPtr poset;
  CrossedModulePtr cm;
  NonAbCocycle2 q;
  std::vector<FiberKind> fibers;  // per poset element, uniform kind
  std::map<int, FiberMorphism> j; // keyed by Sigma1 id; nerve edges at least
  bool bundle = false;            // j defined (invertibly) on all of Sigma1
};

using GerbePtr = std::shared_ptr<const Gerbe>;

/// Validates both gerbe equations over the domain of j (all of Sigma1/Sigma2
/// for bundles, nerve simplices otherwise).
Report check_gerbe(const Gerbe& g, double tol = kFiberTol);

/// Extend nerve-edge transition maps of an invertible structure to all of
/// Sigma1 via j_b = j(|b| d0 b)^-1 j(|b| d1 b); marks the gerbe as a bundle.
void extend_bundle_structure(Gerbe& g, double tol = kFiberTol);

/// Standard gerbe of a twisted connection: constant group fiber G with the
/// adjoint action, j_b the crossed-module action of u_b.
Gerbe standard_q_gerbe(const NonAbCocycle2& q);

/// Group bundle of a 1-cocycle: constant fiber G, trivial twisting, j_b the
/// crossed-module action of u_b.
Gerbe group_bundle(const Cocycle1& u, const CrossedModulePtr& cm);

/// Holonomy of a group bundle on pi1 generators, with the presentation
/// relations verified on the images.
struct BundleHolonomy {
  std::vector<FiberMorphism> generator_images;
  Report relations;
};
BundleHolonomy bundle_holonomy(const Gerbe& g, const Pi1Presentation& pres, double tol = kFiberTol);

// --- fixed points -------------------------------------------------------------------

struct FixedPoints {
  // group fibers: member lists; hilbert fibers: orthonormal spanning columns;
  // algebra fibers: basis elements inside the ambient algebra
  std::vector<std::vector<Elem>> members;
  std::vector<Mtx> space;
  std::vector<std::vector<BlockMat>> alg_basis;
  Report relations; // precosheaf law of the restricted inclusions
};
FixedPoints fixed_points(const Gerbe& g, double tol = kFiberTol);

// --- transition cocycles ---------------------------------------------------------------

struct TransitionCocycle {
  int base = 0;
  std::vector<FiberMorphism> jmap; // Sigma1 -> Aut(F_a)
  std::vector<FiberMorphism> delta_maps;
  std::vector<Elem> delta_g; // matched G-element per Sigma2 (smallest preimage)
  bool twisted_connection = true;
  Report report;
  // group fibers: materialized holonomy 2-group with the embedded cocycle
  CrossedModulePtr hol_cm;
  std::optional<NonAbCocycle2> as_cocycle;
};

TransitionCocycle transition_cocycle(const Gerbe& g, int base, const PathFrame& frame,
                                     double tol = kFiberTol);

/// Explicit frame-change witness v_o = j(p'_{ao}) j(p_{oa}) making the two
/// transition cocycles cohomologous through (v, 1).
struct FrameChange {
  std::vector<FiberMorphism> v;
  Report verified;
};
FrameChange frame_change_witness(const Gerbe& g, int base, const PathFrame& f1,
                                 const PathFrame& f2, double tol = kFiberTol);

/// Fixed-point transition cocycle over the quotient of the holonomy 2-group
/// (group fibers).
Cocycle1 fixed_point_cocycle(const Gerbe& g, int base, const PathFrame& frame);

// --- gerbe morphisms -------------------------------------------------------------------

struct GerbeMorphism {
  GerbePtr source, target;
  std::vector<FiberMorphism> eta; // per element
  std::map<int, FiberMorphism> beta_maps;
  std::map<int, Elem> beta_g; // G-element form where available
};

Report check_gerbe_morphism(const GerbeMorphism& m, double tol = kFiberTol);
bool is_isomorphism(const GerbeMorphism& m, double tol = kFiberTol);

// --- Hilbert gerbes ----------------------------------------------------------------------

Report check_hilbert_gerbe(const Gerbe& g, double tol = kFiberTol);
/// Conjugation gerbe of a Hilbert gerbe: algebra fibers B(H_o) with the
/// adjoint action and j = ad U.
Gerbe unitary_gerbe(const Gerbe& hilbert_gerbe);

// --- associated gerbes ----------------------------------------------------------------------

struct AssociatedResult {
  bool associated = false;
  SearchStatus status = SearchStatus::Distinct;
  Report detail;
  std::optional<CoboundaryPair> q_witness; // witness at the coefficient level
};

/// Association test against a twisted connection: the transition cocycle must
/// match the pushforward of q, and when the gerbe carries a cocycle over the
/// same 2-group the classes are compared there as well (the action may be
/// far from faithful, so the pushforward alone can be blind).
AssociatedResult is_associated(const Gerbe& g, const NonAbCocycle2& q, int base,
                               const PathFrame& frame, std::uint64_t bound = 10000000,
                               double tol = kFiberTol);

// --- fiber utilities (shared with the holonomy functor) ----------------------------------

FiberMorphism fiber_identity(const FiberKind& f);
FiberMorphism fiber_compose(const FiberMorphism& later, const FiberMorphism& first);
FiberMorphism fiber_invert(const FiberMorphism& m);
double fiber_distance(const FiberMorphism& a, const FiberMorphism& b);
bool fiber_invertible(const FiberMorphism& m, double tol = kFiberTol);
/// alpha_o(g) as a morphism of the fiber.
FiberMorphism fiber_action(const FiberKind& f, Elem g);
/// Transport along a path: composition of the j-maps of its steps.
FiberMorphism fiber_along(const Gerbe& g, const Path& p);

} // namespace gerbes
