#include "gerbes/gerbe.hpp"

#include <algorithm>
#include <stdexcept>

namespace gerbes {

// --- fiber utilities ------------------------------------------------------------

FiberMorphism fiber_identity(const FiberKind& f) {
  return std::visit(
      [](const auto& fib) -> FiberMorphism {
        using T = std::decay_t<decltype(fib)>;
        if constexpr (std::is_same_v<T, GroupFiber>) return GroupHom::identity(fib.fiber);
        else if constexpr (std::is_same_v<T, HilbertFiber>) return Mtx(Mtx::Identity(fib.dim, fib.dim));
        else return StarMap::identity(fib.alg);
      },
      f);
}

FiberMorphism fiber_compose(const FiberMorphism& later, const FiberMorphism& first) {
  if (later.index() != first.index()) throw std::invalid_argument("fiber compose: kind mismatch");
  if (std::holds_alternative<GroupHom>(later))
    return GroupHom::compose(std::get<GroupHom>(later), std::get<GroupHom>(first));
  if (std::holds_alternative<Mtx>(later))
    return Mtx(std::get<Mtx>(later) * std::get<Mtx>(first));
  return StarMap::compose(std::get<StarMap>(later), std::get<StarMap>(first));
}

FiberMorphism fiber_invert(const FiberMorphism& m) {
  if (std::holds_alternative<GroupHom>(m)) return std::get<GroupHom>(m).inverse();
  if (std::holds_alternative<Mtx>(m)) return Mtx(std::get<Mtx>(m).inverse());
  return std::get<StarMap>(m).inverse();
}

double fiber_distance(const FiberMorphism& a, const FiberMorphism& b) {
  if (a.index() != b.index()) return 1e30;
  if (std::holds_alternative<GroupHom>(a))
    return std::get<GroupHom>(a) == std::get<GroupHom>(b) ? 0.0 : 1.0;
  if (std::holds_alternative<Mtx>(a)) return (std::get<Mtx>(a) - std::get<Mtx>(b)).norm();
  return StarMap::distance(std::get<StarMap>(a), std::get<StarMap>(b));
}

bool fiber_invertible(const FiberMorphism& m, double tol) {
  if (std::holds_alternative<GroupHom>(m)) {
    const auto& h = std::get<GroupHom>(m);
    return h.source()->order() == h.target()->order() && h.is_injective();
  }
  if (std::holds_alternative<Mtx>(m)) {
    const Mtx& x = std::get<Mtx>(m);
    if (x.rows() != x.cols()) return false;
    Eigen::JacobiSVD<Mtx> svd(x);
    return svd.singularValues()(svd.singularValues().size() - 1) > tol;
  }
  return std::get<StarMap>(m).is_bijective(tol);
}

FiberMorphism fiber_action(const FiberKind& f, Elem g) {
  return std::visit(
      [g](const auto& fib) -> FiberMorphism {
        using T = std::decay_t<decltype(fib)>;
        if constexpr (std::is_same_v<T, GroupFiber>) return fib.action[g];
        else if constexpr (std::is_same_v<T, HilbertFiber>) return fib.rep[g];
        else return fib.action[g];
      },
      f);
}

namespace {

std::string s1_desc(const Poset& p, int b) {
  const auto& s = p.sigma1()[b];
  return "(" + p.label(s.d0) + "," + p.label(s.d1) + ";" + p.label(s.sup) + ")";
}

/// j-value on a 1-simplex; degenerate nerve edges default to the identity.
FiberMorphism gerbe_j(const Gerbe& g, int b) {
  auto it = g.j.find(b);
  if (it != g.j.end()) return it->second;
  const auto& s = g.poset->sigma1()[b];
  if (s.d0 == s.d1 && s.sup == s.d0) return fiber_identity(g.fibers[s.d0]);
  throw std::invalid_argument("gerbe: missing transition on " + s1_desc(*g.poset, b));
}

bool is_nerve_chain(const Poset& p, int c) {
  const auto& cc = p.sigma2()[c];
  const auto& s1 = p.sigma1();
  int v0 = s1[cc.f2].d1, v1 = s1[cc.f2].d0, v2 = s1[cc.f0].d0;
  return p.leq(v0, v1) && p.leq(v1, v2) && s1[cc.f2].sup == v1 && s1[cc.f1].sup == v2 &&
         s1[cc.f0].sup == v2 && cc.sup == v2;
}

} // namespace

FiberMorphism fiber_along(const Gerbe& g, const Path& p) {
  FiberMorphism r = gerbe_j(g, p.steps.front());
  for (std::size_t k = 1; k < p.steps.size(); ++k) r = fiber_compose(gerbe_j(g, p.steps[k]), r);
  return r;
}

// --- validation ---------------------------------------------------------------------

Report check_gerbe(const Gerbe& g, double tol) {
  Report r;
  const Poset& p = *g.poset;
  if (g.fibers.size() != static_cast<std::size_t>(p.size()))
    throw std::invalid_argument("gerbe: fiber table incomplete");
  if (g.fibers.empty()) return r;
  const std::size_t kind = g.fibers[0].index();
  for (const auto& f : g.fibers)
    if (f.index() != kind) throw std::invalid_argument("gerbe: mixed fiber kinds");

  const FiniteGroup& G = *g.cm->G();
  const auto& s1 = p.sigma1();
  const auto& s2 = p.sigma2();

  // first equation: alpha_{d01 c}(g_c) j(d1 c) = j(d0 c) j(d2 c)
  for (std::size_t c = 0; c < s2.size(); ++c) {
    if (!g.bundle && !is_nerve_chain(p, static_cast<int>(c))) continue;
    const auto& cc = s2[c];
    FiberMorphism lhs = fiber_compose(fiber_action(g.fibers[p.sigma2_d01(static_cast<int>(c))],
                                                   g.q.g[c]),
                                      gerbe_j(g, cc.f1));
    FiberMorphism rhs = fiber_compose(gerbe_j(g, cc.f0), gerbe_j(g, cc.f2));
    double d = fiber_distance(lhs, rhs);
    if (d > tol) r.add("c" + std::to_string(c), "alpha(g_c) j(d1) != j(d0) j(d2)", d);
  }
  // second equation: j_b alpha_{d1 b}(g) = alpha_{d0 b}(u_b(g)) j_b
  for (std::size_t b = 0; b < s1.size(); ++b) {
    const auto& s = s1[b];
    if (!g.bundle && !(s.sup == s.d0 && p.leq(s.d1, s.d0))) continue;
    FiberMorphism jb = gerbe_j(g, static_cast<int>(b));
    for (Elem x = 0; x < G.order(); ++x) {
      FiberMorphism lhs = fiber_compose(jb, fiber_action(g.fibers[s.d1], x));
      FiberMorphism rhs = fiber_compose(
          fiber_action(g.fibers[s.d0], g.cm->beta(g.q.u[b])(x)), jb);
      double d = fiber_distance(lhs, rhs);
      if (d > tol) {
        r.add(s1_desc(p, static_cast<int>(b)), "j alpha(g) != alpha(u_b(g)) j", d);
        break;
      }
    }
  }
  if (g.bundle)
    for (std::size_t b = 0; b < s1.size(); ++b) {
      double d = fiber_distance(gerbe_j(g, p.reverse_id(static_cast<int>(b))),
                                fiber_invert(gerbe_j(g, static_cast<int>(b))));
      if (d > tol) r.add(s1_desc(p, static_cast<int>(b)), "j(rev b) != j(b)^-1", d);
    }
  return r;
}

void extend_bundle_structure(Gerbe& g, double tol) {
  const Poset& p = *g.poset;
  auto nerve_j = [&](int sup, int x) -> FiberMorphism {
    if (x == sup) return fiber_identity(g.fibers[x]);
    int id = p.sigma1_id(sup, x, sup);
    return gerbe_j(g, id);
  };
  std::map<int, FiberMorphism> full;
  const auto& s1 = p.sigma1();
  for (std::size_t b = 0; b < s1.size(); ++b) {
    FiberMorphism up0 = nerve_j(s1[b].sup, s1[b].d0);
    FiberMorphism up1 = nerve_j(s1[b].sup, s1[b].d1);
    if (!fiber_invertible(up0, tol))
      throw std::invalid_argument("bundle: non-invertible inclusion at " +
                                  s1_desc(p, static_cast<int>(b)));
    full.emplace(static_cast<int>(b), fiber_compose(fiber_invert(up0), up1));
  }
  g.j = std::move(full);
  g.bundle = true;
}

// --- constructions -----------------------------------------------------------------------

Gerbe standard_q_gerbe(const NonAbCocycle2& q) {
  NonAbFlags flags;
  Report chk = check_nonabelian(q, &flags);
  if (!chk.ok() || !flags.twisted_connection)
    throw std::invalid_argument("standard gerbe: input must be a twisted connection");
  Gerbe g;
  g.poset = q.poset;
  g.cm = q.cm;
  g.q = q;
  GroupFiber f{q.cm->G(), {}};
  for (Elem x = 0; x < q.cm->G()->order(); ++x) {
    std::vector<Elem> img(q.cm->G()->order());
    for (Elem y = 0; y < q.cm->G()->order(); ++y) img[y] = q.cm->G()->conj(x, y);
    f.action.emplace_back(q.cm->G(), q.cm->G(), std::move(img));
  }
  g.fibers.assign(q.poset->size(), f);
  for (std::size_t b = 0; b < q.poset->sigma1().size(); ++b)
    g.j.emplace(static_cast<int>(b), q.cm->beta(q.u[b]));
  g.bundle = true;
  return g;
}

Gerbe group_bundle(const Cocycle1& u, const CrossedModulePtr& cm) {
  Report chk = check_z1(u);
  if (!chk.ok()) throw std::invalid_argument("group bundle: u is not a 1-cocycle");
  Gerbe g;
  g.poset = u.poset;
  g.cm = cm;
  g.q = d_of(u, cm);
  GroupFiber f{cm->G(), {}};
  for (Elem x = 0; x < cm->G()->order(); ++x) {
    std::vector<Elem> img(cm->G()->order());
    for (Elem y = 0; y < cm->G()->order(); ++y) img[y] = cm->G()->conj(x, y);
    f.action.emplace_back(cm->G(), cm->G(), std::move(img));
  }
  g.fibers.assign(u.poset->size(), f);
  for (std::size_t b = 0; b < u.poset->sigma1().size(); ++b)
    g.j.emplace(static_cast<int>(b), cm->beta(u.u[b]));
  g.bundle = true;
  return g;
}

BundleHolonomy bundle_holonomy(const Gerbe& g, const Pi1Presentation& pres, double tol) {
  if (!g.bundle) throw std::invalid_argument("bundle holonomy: gerbe is not a bundle");
  BundleHolonomy out;
  for (int k = 0; k < pres.rank(); ++k)
    out.generator_images.push_back(fiber_along(g, pres.generator_loop(k)));
  const FiberKind& fib = g.fibers[pres.base()];
  for (std::size_t r = 0; r < pres.relations().size(); ++r) {
    FiberMorphism acc = fiber_identity(fib);
    for (int letter : pres.relations()[r]) {
      const FiberMorphism& img = out.generator_images[std::abs(letter) - 1];
      acc = fiber_compose(letter > 0 ? img : fiber_invert(img), acc);
    }
    double d = fiber_distance(acc, fiber_identity(fib));
    if (d > tol) out.relations.add("relation " + std::to_string(r), "holonomy image violates relation", d);
  }
  return out;
}

// --- fixed points -------------------------------------------------------------------------

FixedPoints fixed_points(const Gerbe& g, double tol) {
  FixedPoints out;
  const Poset& p = *g.poset;
  const FiniteGroup& G = *g.cm->G();
  out.members.resize(p.size());
  out.space.resize(p.size());
  out.alg_basis.resize(p.size());

  for (int o = 0; o < p.size(); ++o) {
    if (const auto* gf = std::get_if<GroupFiber>(&g.fibers[o])) {
      for (Elem x = 0; x < gf->fiber->order(); ++x) {
        bool fixed = true;
        for (Elem e = 0; e < G.order() && fixed; ++e) fixed = gf->action[e](x) == x;
        if (fixed) out.members[o].push_back(x);
      }
    } else if (const auto* hf = std::get_if<HilbertFiber>(&g.fibers[o])) {
      Mtx stack(hf->dim * G.order(), hf->dim);
      for (Elem e = 0; e < G.order(); ++e)
        stack.block(e * hf->dim, 0, hf->dim, hf->dim) =
            hf->rep[e] - Mtx::Identity(hf->dim, hf->dim);
      Eigen::JacobiSVD<Mtx> svd(stack, Eigen::ComputeFullV);
      int rank = 0;
      for (int k = 0; k < svd.singularValues().size(); ++k)
        if (svd.singularValues()(k) > tol) ++rank;
      out.space[o] = svd.matrixV().rightCols(hf->dim - rank);
    } else {
      const auto& af = std::get<AlgebraFiber>(g.fibers[o]);
      const int L = af.alg->linear_dim();
      Mtx stack(static_cast<long>(L) * G.order(), L);
      for (Elem e = 0; e < G.order(); ++e)
        for (int col = 0; col < L; ++col)
          stack.block(static_cast<long>(e) * L, col, L, 1) =
              af.alg->vec(af.action[e](af.alg->basis()[col])) -
              af.alg->vec(af.alg->basis()[col]);
      Eigen::JacobiSVD<Mtx> svd(stack, Eigen::ComputeFullV);
      int rank = 0;
      for (int k = 0; k < svd.singularValues().size(); ++k)
        if (svd.singularValues()(k) > tol) ++rank;
      for (int k = rank; k < L; ++k)
        out.alg_basis[o].push_back(af.alg->unvec(svd.matrixV().col(k)));
    }
  }

  // inclusions restrict to the fixed part and satisfy the precosheaf law
  auto check_maps_into = [&](int b) {
    const auto& s = p.sigma1()[b];
    FiberMorphism jb = gerbe_j(g, b);
    if (std::holds_alternative<GroupHom>(jb)) {
      const auto& h = std::get<GroupHom>(jb);
      for (Elem x : out.members[s.d1])
        if (std::find(out.members[s.d0].begin(), out.members[s.d0].end(), h(x)) ==
            out.members[s.d0].end())
          out.relations.add(s1_desc(p, b), "inclusion leaves the fixed part");
    } else if (std::holds_alternative<Mtx>(jb)) {
      const Mtx& U = std::get<Mtx>(jb);
      const Mtx& V = out.space[s.d0];
      Mtx img = U * out.space[s.d1];
      double res = (img - V * (V.adjoint() * img)).norm();
      if (res > tol) out.relations.add(s1_desc(p, b), "inclusion leaves the fixed subspace", res);
    } else {
      const auto& sm = std::get<StarMap>(jb);
      const auto& af0 = std::get<AlgebraFiber>(g.fibers[s.d0]);
      Mtx V(af0.alg->linear_dim(), static_cast<int>(out.alg_basis[s.d0].size()));
      for (std::size_t k = 0; k < out.alg_basis[s.d0].size(); ++k)
        V.col(static_cast<int>(k)) = af0.alg->vec(out.alg_basis[s.d0][k]);
      for (const auto& x : out.alg_basis[s.d1]) {
        Eigen::VectorXcd img = af0.alg->vec(sm(x));
        Eigen::VectorXcd res = img - V * (V.adjoint() * V).ldlt().solve(V.adjoint() * img);
        if (res.norm() > tol)
          out.relations.add(s1_desc(p, b), "inclusion leaves the fixed subalgebra", res.norm());
      }
    }
  };
  for (int b : p.nerve1())
    if (g.j.count(b) || g.bundle) check_maps_into(b);

  for (int c : p.nerve2_nondeg()) {
    const auto& cc = p.sigma2()[c];
    FiberMorphism lhs = gerbe_j(g, cc.f1);
    FiberMorphism rhs = fiber_compose(gerbe_j(g, cc.f0), gerbe_j(g, cc.f2));
    // the defect is alpha(g_c), which acts trivially on the fixed part; check
    // there rather than on the whole fibre
    const auto& s1 = p.sigma1();
    int o = s1[cc.f2].d1;
    if (std::holds_alternative<GroupHom>(lhs)) {
      for (Elem x : out.members[o])
        if (std::get<GroupHom>(lhs)(x) != std::get<GroupHom>(rhs)(x))
          out.relations.add("c" + std::to_string(c), "precosheaf law fails on fixed members");
    } else if (std::holds_alternative<Mtx>(lhs)) {
      double res = ((std::get<Mtx>(lhs) - std::get<Mtx>(rhs)) * out.space[o]).norm();
      if (res > tol) out.relations.add("c" + std::to_string(c), "precosheaf law fails on the fixed subspace", res);
    } else {
      double worst = 0;
      for (const auto& x : out.alg_basis[o])
        worst = std::max(worst, (std::get<StarMap>(lhs)(x) - std::get<StarMap>(rhs)(x)).norm());
      if (worst > tol)
        out.relations.add("c" + std::to_string(c), "precosheaf law fails on the fixed subalgebra", worst);
    }
  }
  return out;
}

// --- transition cocycles ----------------------------------------------------------------------

TransitionCocycle transition_cocycle(const Gerbe& g, int base, const PathFrame& frame, double tol) {
  if (!g.bundle) throw std::invalid_argument("transition: gerbe is not a bundle");
  if (frame.base != base) throw std::invalid_argument("transition: frame based elsewhere");
  const Poset& p = *g.poset;
  const FiniteGroup& G = *g.cm->G();
  TransitionCocycle out;
  out.base = base;
  const auto& s1 = p.sigma1();

  for (std::size_t b = 0; b < s1.size(); ++b) {
    Path ell = p.compose(p.reverse(frame.to[s1[b].d0]),
                         p.compose(Path{{static_cast<int>(b)}}, frame.to[s1[b].d1]));
    out.jmap.push_back(fiber_along(g, ell));
  }
  const auto& s2 = p.sigma2();
  const FiberKind& fib = g.fibers[base];
  for (std::size_t c = 0; c < s2.size(); ++c) {
    const auto& cc = s2[c];
    FiberMorphism d = fiber_compose(out.jmap[cc.f0],
                                    fiber_compose(out.jmap[cc.f2], fiber_invert(out.jmap[cc.f1])));
    out.delta_maps.push_back(d);
    Elem match = -1;
    for (Elem x = 0; x < G.order() && match < 0; ++x)
      if (fiber_distance(d, fiber_action(fib, x)) <= tol) match = x;
    if (match < 0)
      out.report.add("c" + std::to_string(c), "transition defect escapes the image of G");
    out.delta_g.push_back(match < 0 ? G.identity() : match);
  }
  for (std::size_t b = 0; b < s1.size(); ++b) {
    double d = fiber_distance(out.jmap[p.reverse_id(static_cast<int>(b))],
                              fiber_invert(out.jmap[b]));
    if (d > tol) {
      out.twisted_connection = false;
      out.report.add(s1_desc(p, static_cast<int>(b)), "transition is not a twisted connection", d);
    }
  }

  // group fibers: materialize the holonomy 2-group and embed the cocycle
  if (std::holds_alternative<GroupFiber>(fib)) {
    const auto& gf = std::get<GroupFiber>(fib);
    const int n = gf.fiber->order();
    auto perm_of = [&](const FiberMorphism& m) {
      const auto& h = std::get<GroupHom>(m);
      std::vector<Elem> v(n);
      for (Elem x = 0; x < n; ++x) v[x] = h(x);
      return v;
    };
    std::vector<std::vector<Elem>> elems;
    std::map<std::vector<Elem>, int> index;
    auto add = [&](const std::vector<Elem>& v) {
      if (!index.count(v)) {
        index[v] = static_cast<int>(elems.size());
        elems.push_back(v);
      }
    };
    std::vector<Elem> ident(n);
    for (Elem x = 0; x < n; ++x) ident[x] = x;
    add(ident);
    std::vector<std::vector<Elem>> gens;
    for (Elem e = 0; e < G.order(); ++e) gens.push_back(perm_of(fiber_action(fib, e)));
    for (const auto& m : out.jmap) gens.push_back(perm_of(m));
    for (std::size_t head = 0; head < elems.size(); ++head)
      for (const auto& s : gens) {
        std::vector<Elem> prod(n);
        for (Elem x = 0; x < n; ++x) prod[x] = s[elems[head][x]];
        add(prod);
        std::vector<Elem> prod2(n);
        for (Elem x = 0; x < n; ++x) prod2[x] = elems[head][s[x]];
        add(prod2);
      }
    const int m = static_cast<int>(elems.size());
    std::vector<std::vector<Elem>> table(m, std::vector<Elem>(m));
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        std::vector<Elem> prod(n);
        for (Elem x = 0; x < n; ++x) prod[x] = elems[a][elems[b][x]];
        table[a][b] = index.at(prod);
      }
    auto hol = std::make_shared<FiniteGroup>(std::move(table));
    std::vector<Elem> img_elems;
    {
      std::vector<char> in(m, 0);
      for (Elem e = 0; e < G.order(); ++e) in[index.at(perm_of(fiber_action(fib, e)))] = 1;
      // close the image under products (it is a subgroup already, being an image)
      for (int x = 0; x < m; ++x)
        if (in[x]) img_elems.push_back(x);
    }
    auto [img, incl] = subgroup_as_group(hol, img_elems);
    std::vector<GroupHom> beta;
    std::vector<Elem> back(m, -1);
    for (int k = 0; k < img->order(); ++k) back[incl(k)] = k;
    for (Elem u = 0; u < m; ++u) {
      std::vector<Elem> bimg(img->order());
      for (int k = 0; k < img->order(); ++k) {
        Elem c = hol->conj(u, incl(k));
        if (back[c] < 0) throw std::logic_error("holonomy 2-group: image not normal");
        bimg[k] = back[c];
      }
      beta.emplace_back(img, img, std::move(bimg));
    }
    out.hol_cm = std::make_shared<CrossedModule>(img, hol, incl, std::move(beta));
    NonAbCocycle2 q;
    q.poset = g.poset;
    q.cm = out.hol_cm;
    for (const auto& jm : out.jmap) q.u.push_back(index.at(perm_of(jm)));
    for (std::size_t c = 0; c < s2.size(); ++c) {
      Elem hol_id = index.at(perm_of(out.delta_maps[c]));
      if (back[hol_id] < 0) throw std::logic_error("holonomy 2-group: delta outside the image");
      q.g.push_back(back[hol_id]);
    }
    NonAbFlags flags;
    Report qc = check_nonabelian(q, &flags);
    for (const auto& v : qc.violations()) out.report.add(v.where, "embedded cocycle: " + v.what);
    if (!flags.twisted_connection)
      out.report.add("-", "embedded cocycle is not a twisted connection");
    out.as_cocycle = std::move(q);
  }
  return out;
}

FrameChange frame_change_witness(const Gerbe& g, int base, const PathFrame& f1,
                                 const PathFrame& f2, double tol) {
  TransitionCocycle t1 = transition_cocycle(g, base, f1, tol);
  TransitionCocycle t2 = transition_cocycle(g, base, f2, tol);
  const Poset& p = *g.poset;
  FrameChange out;
  for (int o = 0; o < p.size(); ++o)
    out.v.push_back(fiber_compose(fiber_along(g, p.reverse(f2.to[o])), fiber_along(g, f1.to[o])));
  const auto& s1 = p.sigma1();
  for (std::size_t b = 0; b < s1.size(); ++b) {
    FiberMorphism rhs = fiber_compose(
        out.v[s1[b].d0], fiber_compose(t1.jmap[b], fiber_invert(out.v[s1[b].d1])));
    double d = fiber_distance(t2.jmap[b], rhs);
    if (d > tol) out.verified.add(s1_desc(p, static_cast<int>(b)), "frame change fails on j", d);
  }
  for (std::size_t c = 0; c < p.sigma2().size(); ++c) {
    int at = p.sigma2_d01(static_cast<int>(c));
    FiberMorphism rhs = fiber_compose(
        out.v[at], fiber_compose(t1.delta_maps[c], fiber_invert(out.v[at])));
    double d = fiber_distance(t2.delta_maps[c], rhs);
    if (d > tol) out.verified.add("c" + std::to_string(c), "frame change fails on delta", d);
  }
  return out;
}

Cocycle1 fixed_point_cocycle(const Gerbe& g, int base, const PathFrame& frame) {
  TransitionCocycle t = transition_cocycle(g, base, frame);
  if (!t.as_cocycle) throw std::invalid_argument("fixed-point cocycle: group fibers required");
  QuotientData qd = quotient_mod_G(*t.hol_cm);
  return mu2(*t.as_cocycle, qd);
}

// --- morphisms ------------------------------------------------------------------------------

Report check_gerbe_morphism(const GerbeMorphism& m, double tol) {
  Report r;
  const Gerbe& A = *m.source;
  const Gerbe& B = *m.target;
  if (A.poset.get() != B.poset.get()) throw std::invalid_argument("gerbe morphism: poset mismatch");
  const Poset& p = *A.poset;
  const FiniteGroup& G = *A.cm->G();
  if (B.cm->G().get() != A.cm->G().get())
    throw std::invalid_argument("gerbe morphism: G differs");

  auto beta_of = [&](int b) -> FiberMorphism {
    auto it = m.beta_maps.find(b);
    if (it != m.beta_maps.end()) return it->second;
    auto ig = m.beta_g.find(b);
    const auto& s = p.sigma1()[b];
    if (ig != m.beta_g.end()) return fiber_action(B.fibers[s.d0], ig->second);
    return fiber_identity(B.fibers[s.d0]);
  };

  // beta_b must lie in the image of the target action
  for (const auto& [b, bm] : m.beta_maps) {
    const auto& s = p.sigma1()[b];
    bool found = false;
    for (Elem x = 0; x < G.order() && !found; ++x)
      found = fiber_distance(bm, fiber_action(B.fibers[s.d0], x)) <= tol;
    if (!found) r.add(s1_desc(p, b), "beta_b escapes the image of G");
  }

  for (std::size_t b = 0; b < p.sigma1().size(); ++b) {
    bool have = (A.bundle && B.bundle);
    if (!have) {
      const auto& s = p.sigma1()[b];
      have = A.j.count(static_cast<int>(b)) && B.j.count(static_cast<int>(b));
      if (!have && s.sup == s.d0 && s.d0 == s.d1) have = true; // constant edges default
      if (!have) continue;
    }
    const auto& s = p.sigma1()[b];
    FiberMorphism lhs = fiber_compose(
        beta_of(static_cast<int>(b)),
        fiber_compose(m.eta[s.d0], gerbe_j(A, static_cast<int>(b))));
    FiberMorphism rhs = fiber_compose(gerbe_j(B, static_cast<int>(b)), m.eta[s.d1]);
    double d = fiber_distance(lhs, rhs);
    if (d > tol) r.add(s1_desc(p, static_cast<int>(b)), "beta eta j != j' eta", d);
  }
  for (int o = 0; o < p.size(); ++o)
    for (Elem x = 0; x < G.order(); ++x) {
      double d = fiber_distance(fiber_compose(fiber_action(B.fibers[o], x), m.eta[o]),
                                fiber_compose(m.eta[o], fiber_action(A.fibers[o], x)));
      if (d > tol) {
        r.add(p.label(o), "alpha'(g) eta != eta alpha(g)", d);
        break;
      }
    }
  return r;
}

bool is_isomorphism(const GerbeMorphism& m, double tol) {
  if (!check_gerbe_morphism(m, tol).ok()) return false;
  for (const auto& e : m.eta)
    if (!fiber_invertible(e, tol)) return false;
  return true;
}

// --- Hilbert gerbes -----------------------------------------------------------------------------

Report check_hilbert_gerbe(const Gerbe& g, double tol) {
  Report r;
  const FiniteGroup& G = *g.cm->G();
  for (int o = 0; o < g.poset->size(); ++o) {
    const auto* hf = std::get_if<HilbertFiber>(&g.fibers[o]);
    if (!hf) throw std::invalid_argument("hilbert gerbe: non-Hilbert fiber");
    for (Elem e = 0; e < G.order(); ++e) {
      if ((hf->rep[e] * hf->rep[e].adjoint() - Mtx::Identity(hf->dim, hf->dim)).norm() > tol)
        r.add(g.poset->label(o), "representation not unitary at g=" + G.label(e));
      for (Elem f = 0; f < G.order(); ++f)
        if ((hf->rep[G.mul(e, f)] - hf->rep[e] * hf->rep[f]).norm() > tol)
          r.add(g.poset->label(o), "representation not multiplicative");
    }
  }
  for (const auto& [b, jm] : g.j) {
    const Mtx& U = std::get<Mtx>(jm);
    if (U.rows() == U.cols() &&
        (U * U.adjoint() - Mtx::Identity(U.rows(), U.rows())).norm() > tol)
      r.add(s1_desc(*g.poset, b), "transition not unitary");
  }
  Report base = check_gerbe(g, tol);
  for (const auto& v : base.violations()) r.add(v.where, v.what, v.residual);
  return r;
}

Gerbe unitary_gerbe(const Gerbe& hg) {
  Gerbe g;
  g.poset = hg.poset;
  g.cm = hg.cm;
  g.q = hg.q;
  const FiniteGroup& G = *hg.cm->G();
  for (int o = 0; o < hg.poset->size(); ++o) {
    const auto& hf = std::get<HilbertFiber>(hg.fibers[o]);
    AlgebraFiber af;
    af.alg = MatrixAlgebra::full(hf.dim);
    std::vector<BlockMat> reps;
    for (Elem e = 0; e < G.order(); ++e) {
      BlockMat u{{hf.rep[e]}};
      af.action.push_back(StarMap::inner(af.alg, u));
      reps.push_back(u);
    }
    af.unitary_rep = std::move(reps);
    g.fibers.push_back(std::move(af));
  }
  for (const auto& [b, jm] : hg.j) {
    const auto& s = hg.poset->sigma1()[b];
    const auto& src = std::get<AlgebraFiber>(g.fibers[s.d1]);
    const auto& dst = std::get<AlgebraFiber>(g.fibers[s.d0]);
    const Mtx U = std::get<Mtx>(jm);
    g.j.emplace(b, StarMap(src.alg, dst.alg, [&U](const BlockMat& x) {
                  return BlockMat{{U * x.blocks[0] * U.adjoint()}};
                }));
  }
  g.bundle = hg.bundle;
  return g;
}

// --- associated gerbes -----------------------------------------------------------------------------

AssociatedResult is_associated(const Gerbe& g, const NonAbCocycle2& q, int base,
                               const PathFrame& frame, std::uint64_t bound, double tol) {
  AssociatedResult out;
  NonAbFlags flags;
  Report qc = check_nonabelian(q, &flags);
  if (!qc.ok() || !flags.twisted_connection)
    throw std::invalid_argument("is_associated: q must be a twisted connection");
  const Poset& p = *g.poset;

  // push q forward along the 2-group action on the fibre at the base:
  // u_b acts through the crossed-module action, g_c through alpha
  auto lam = [&](Elem n) -> FiberMorphism {
    if (std::holds_alternative<GroupFiber>(g.fibers[base])) return q.cm->beta(n);
    const auto& af = std::get<AlgebraFiber>(g.fibers[base]);
    if (!af.unitary_rep) throw std::invalid_argument("is_associated: need unitaries on the fibre");
    // N acts through conjugation by the represented image of a preimage; only
    // available when i is surjective onto the needed elements
    Elem pre = q.cm->i_preimage(n);
    if (pre < 0) throw std::invalid_argument("is_associated: N-element outside i(G) on algebra fibres");
    return StarMap::inner(af.alg, (*af.unitary_rep)[pre]);
  };

  TransitionCocycle tau = transition_cocycle(g, base, frame, tol);
  // canonical candidate v_o = Lambda(u along p_{ao})
  std::vector<FiberMorphism> v;
  for (int o = 0; o < p.size(); ++o) v.push_back(lam(q.u_along(p.reverse(frame.to[o]))));
  const auto& s1 = p.sigma1();
  bool part_a = true;
  for (std::size_t b = 0; b < s1.size() && part_a; ++b) {
    FiberMorphism rhs = fiber_compose(
        v[s1[b].d0], fiber_compose(lam(q.u[b]), fiber_invert(v[s1[b].d1])));
    if (fiber_distance(tau.jmap[b], rhs) > tol) part_a = false;
  }
  for (std::size_t c = 0; c < p.sigma2().size() && part_a; ++c) {
    int at = p.sigma2_d01(static_cast<int>(c));
    FiberMorphism rhs = fiber_compose(
        v[at], fiber_compose(fiber_action(g.fibers[base], q.g[c]), fiber_invert(v[at])));
    if (fiber_distance(tau.delta_maps[c], rhs) > tol) part_a = false;
  }
  if (!part_a) out.detail.add("-", "transition cocycle differs from the pushforward of q under (v,1)");

  // compare the carried cocycle inside Z^2(Delta, 2G) when available
  bool part_b = true;
  if (g.cm.get() == q.cm.get() && g.q.u.size() == q.u.size()) {
    EquivSearchResult sr = search_equiv(g.q, q, bound);
    out.status = sr.status;
    if (sr.status == SearchStatus::Witness) {
      out.q_witness = sr.witness;
    } else if (sr.status == SearchStatus::Distinct) {
      part_b = false;
      out.detail.add("-", "carried cocycle lies in a different cohomology class");
    } else {
      part_b = false;
      out.detail.add("-", "equivalence search bound exceeded");
    }
  } else {
    out.status = SearchStatus::Verified;
  }
  out.associated = part_a && part_b;
  return out;
}

} // namespace gerbes
