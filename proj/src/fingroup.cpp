#include "gerbes/fingroup.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

namespace gerbes {

FiniteGroup::FiniteGroup(std::vector<std::vector<Elem>> table, std::vector<std::string> labels)
    : n_(static_cast<int>(table.size())), table_(std::move(table)), labels_(std::move(labels)) {
  if (n_ <= 0) throw std::invalid_argument("group: empty table");
  for (const auto& row : table_)
    if (static_cast<int>(row.size()) != n_) throw std::invalid_argument("group: table not square");
  for (const auto& row : table_)
    for (Elem x : row)
      if (x < 0 || x >= n_) throw std::invalid_argument("group: entry out of range");

  // Latin square
  for (int a = 0; a < n_; ++a) {
    std::vector<char> seen_row(n_, 0), seen_col(n_, 0);
    for (int b = 0; b < n_; ++b) {
      if (seen_row[table_[a][b]]++) throw std::invalid_argument("group: row not a permutation");
      if (seen_col[table_[b][a]]++) throw std::invalid_argument("group: column not a permutation");
    }
  }

  // identity
  e_ = -1;
  for (int a = 0; a < n_ && e_ < 0; ++a) {
    bool ok = true;
    for (int b = 0; b < n_ && ok; ++b) ok = table_[a][b] == b && table_[b][a] == b;
    if (ok) e_ = a;
  }
  if (e_ < 0) throw std::invalid_argument("group: no identity");

  // associativity (n^3, fine at this scale)
  for (int a = 0; a < n_; ++a)
    for (int b = 0; b < n_; ++b)
      for (int c = 0; c < n_; ++c)
        if (table_[table_[a][b]][c] != table_[a][table_[b][c]])
          throw std::invalid_argument("group: not associative");

  inv_.assign(n_, -1);
  for (int a = 0; a < n_; ++a)
    for (int b = 0; b < n_; ++b)
      if (table_[a][b] == e_) inv_[a] = b;
  for (int a = 0; a < n_; ++a)
    if (inv_[a] < 0 || table_[inv_[a]][a] != e_) throw std::invalid_argument("group: missing inverse");

  abelian_ = true;
  for (int a = 0; a < n_ && abelian_; ++a)
    for (int b = 0; b < a; ++b)
      if (table_[a][b] != table_[b][a]) { abelian_ = false; break; }

  if (labels_.empty()) {
    labels_.resize(n_);
    for (int a = 0; a < n_; ++a) labels_[a] = std::to_string(a);
  }
  if (static_cast<int>(labels_.size()) != n_) throw std::invalid_argument("group: label count mismatch");
}

std::optional<Elem> FiniteGroup::elem_by_label(const std::string& s) const {
  for (int a = 0; a < n_; ++a)
    if (labels_[a] == s) return a;
  return std::nullopt;
}

Elem FiniteGroup::product(const std::vector<Elem>& word) const {
  Elem r = e_;
  for (Elem w : word) r = mul(r, w);
  return r;
}

std::shared_ptr<const FiniteGroup> FiniteGroup::cyclic(int n) {
  std::vector<std::vector<Elem>> t(n, std::vector<Elem>(n));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) t[a][b] = (a + b) % n;
  return std::make_shared<FiniteGroup>(std::move(t));
}

std::shared_ptr<const FiniteGroup> FiniteGroup::trivial() { return cyclic(1); }

std::shared_ptr<const FiniteGroup> FiniteGroup::direct_product(const FiniteGroup& a, const FiniteGroup& b) {
  const int n = a.order() * b.order();
  std::vector<std::vector<Elem>> t(n, std::vector<Elem>(n));
  std::vector<std::string> labels(n);
  for (int xa = 0; xa < a.order(); ++xa)
    for (int xb = 0; xb < b.order(); ++xb)
      labels[xa + a.order() * xb] = "(" + a.label(xa) + "," + b.label(xb) + ")";
  for (int xa = 0; xa < a.order(); ++xa)
    for (int xb = 0; xb < b.order(); ++xb)
      for (int ya = 0; ya < a.order(); ++ya)
        for (int yb = 0; yb < b.order(); ++yb)
          t[xa + a.order() * xb][ya + a.order() * yb] =
              a.mul(xa, ya) + a.order() * b.mul(xb, yb);
  return std::make_shared<FiniteGroup>(std::move(t), std::move(labels));
}

std::shared_ptr<const FiniteGroup> FiniteGroup::symmetric(int n) {
  if (n < 1 || n > 5) throw std::invalid_argument("symmetric: n out of range");
  std::vector<std::vector<int>> perms;
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  do perms.push_back(p); while (std::next_permutation(p.begin(), p.end()));
  std::map<std::vector<int>, int> index;
  for (size_t k = 0; k < perms.size(); ++k) index[perms[k]] = static_cast<int>(k);
  const int m = static_cast<int>(perms.size());
  std::vector<std::vector<Elem>> t(m, std::vector<Elem>(m));
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      std::vector<int> c(n);
      for (int i = 0; i < n; ++i) c[i] = perms[a][perms[b][i]]; // a after b
      t[a][b] = index[c];
    }
  std::vector<std::string> labels(m);
  for (int a = 0; a < m; ++a) {
    std::string s;
    for (int i = 0; i < n; ++i) s += std::to_string(perms[a][i]);
    labels[a] = s;
  }
  return std::make_shared<FiniteGroup>(std::move(t), std::move(labels));
}

GroupHom::GroupHom(GroupPtr source, GroupPtr target, std::vector<Elem> image)
    : src_(std::move(source)), dst_(std::move(target)), img_(std::move(image)) {
  if (static_cast<int>(img_.size()) != src_->order())
    throw std::invalid_argument("hom: image size mismatch");
  for (Elem y : img_)
    if (y < 0 || y >= dst_->order()) throw std::invalid_argument("hom: image out of range");
  if (img_[src_->identity()] != dst_->identity())
    throw std::invalid_argument("hom: does not preserve identity");
  for (int a = 0; a < src_->order(); ++a)
    for (int b = 0; b < src_->order(); ++b)
      if (img_[src_->mul(a, b)] != dst_->mul(img_[a], img_[b]))
        throw std::invalid_argument("hom: not multiplicative");
}

bool GroupHom::is_injective() const {
  std::vector<char> seen(dst_->order(), 0);
  for (Elem y : img_)
    if (seen[y]++) return false;
  return true;
}

bool GroupHom::is_surjective() const {
  std::vector<char> seen(dst_->order(), 0);
  for (Elem y : img_) seen[y] = 1;
  return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
}

GroupHom GroupHom::compose(const GroupHom& h2, const GroupHom& h1) {
  if (h1.dst_.get() != h2.src_.get()) throw std::invalid_argument("compose: hom domains mismatch");
  std::vector<Elem> img(h1.src_->order());
  for (int a = 0; a < h1.src_->order(); ++a) img[a] = h2.img_[h1.img_[a]];
  return GroupHom(h1.src_, h2.dst_, std::move(img));
}

GroupHom GroupHom::identity(GroupPtr g) {
  std::vector<Elem> img(g->order());
  std::iota(img.begin(), img.end(), 0);
  auto gc = g;
  return GroupHom(gc, gc, std::move(img));
}

GroupHom GroupHom::inverse() const {
  if (src_->order() != dst_->order() || !is_injective())
    throw std::invalid_argument("inverse: hom is not bijective");
  std::vector<Elem> inv(dst_->order());
  for (int a = 0; a < src_->order(); ++a) inv[img_[a]] = a;
  return GroupHom(dst_, src_, std::move(inv));
}

namespace {

// Backtracking over images of all elements with early multiplicativity
// pruning. Exhaustive; meant for small groups only.
void aut_search(const GroupPtr& g, std::vector<Elem>& img, std::vector<char>& used, int k,
                std::vector<GroupHom>& out) {
  const int n = g->order();
  if (k == n) {
    out.emplace_back(g, g, img);
    return;
  }
  if (k == g->identity()) {
    img[k] = g->identity();
    if (!used[img[k]]) {
      used[img[k]] = 1;
      aut_search(g, img, used, k + 1, out);
      used[img[k]] = 0;
    }
    return;
  }
  for (Elem y = 0; y < n; ++y) {
    if (used[y]) continue;
    img[k] = y;
    bool ok = true;
    for (int a = 0; a <= k && ok; ++a) {
      if (a != k && img[a] < 0) continue;
      // check products that land in the assigned prefix
      Elem ab = g->mul(a, k), ba = g->mul(k, a);
      if (ab <= k && img[ab] >= 0 && img[ab] != g->mul(img[a], y)) ok = false;
      if (ba <= k && img[ba] >= 0 && img[ba] != g->mul(y, img[a])) ok = false;
    }
    if (ok) {
      used[y] = 1;
      aut_search(g, img, used, k + 1, out);
      used[y] = 0;
    }
  }
  img[k] = -1;
}

} // namespace

std::vector<GroupHom> automorphism_group(const GroupPtr& g) {
  // Exhaustive bijection search with pruning; full multiplicativity is
  // re-verified by the GroupHom constructor.
  std::vector<GroupHom> out;
  const int n = g->order();
  std::vector<Elem> img(n, -1);
  std::vector<char> used(n, 0);
  std::vector<GroupHom> raw;
  aut_search(g, img, used, 0, raw);
  for (auto& h : raw)
    if (h.is_injective()) out.push_back(std::move(h));
  return out;
}

CrossedModule::CrossedModule(GroupPtr G, GroupPtr N, GroupHom i, std::vector<GroupHom> beta,
                             bool defer_axiom_check)
    : G_(std::move(G)), N_(std::move(N)), i_(std::move(i)), beta_(std::move(beta)) {
  if (i_.source().get() != G_.get() || i_.target().get() != N_.get())
    throw std::invalid_argument("crossed module: i has wrong domains");
  if (static_cast<int>(beta_.size()) != N_->order())
    throw std::invalid_argument("crossed module: beta size mismatch");
  for (const auto& b : beta_) {
    if (b.source().get() != G_.get() || b.target().get() != G_.get())
      throw std::invalid_argument("crossed module: beta_u not an endomap of G");
    if (!b.is_injective()) throw std::invalid_argument("crossed module: beta_u not bijective");
    b.inverse(); // verified two-sided inverse exists
  }
  ipre_.assign(N_->order(), -1);
  for (Elem g = G_->order() - 1; g >= 0; --g) ipre_[i_(g)] = g; // smallest preimage wins
  if (!defer_axiom_check) {
    Report r = check_crossed_module(*this);
    if (!r.ok()) throw std::invalid_argument("crossed module: axiom violation\n" + r.str());
  }
}

std::shared_ptr<const CrossedModule> CrossedModule::adjoint(GroupPtr g) {
  std::vector<GroupHom> beta;
  beta.reserve(g->order());
  for (Elem u = 0; u < g->order(); ++u) {
    std::vector<Elem> img(g->order());
    for (Elem x = 0; x < g->order(); ++x) img[x] = g->conj(u, x);
    beta.emplace_back(g, g, std::move(img));
  }
  return std::make_shared<CrossedModule>(g, g, GroupHom::identity(g), std::move(beta));
}

std::shared_ptr<const CrossedModule> CrossedModule::image_submodule(const CrossedModule& cm) {
  std::vector<Elem> elems;
  {
    std::vector<char> in(cm.N()->order(), 0);
    for (Elem g = 0; g < cm.G()->order(); ++g) in[cm.i_of(g)] = 1;
    for (Elem n = 0; n < cm.N()->order(); ++n)
      if (in[n]) elems.push_back(n);
  }
  auto [sub, incl] = subgroup_as_group(cm.N(), elems);
  // conjugation action of N on i(G)
  std::vector<Elem> back(cm.N()->order(), -1);
  for (int k = 0; k < sub->order(); ++k) back[incl(k)] = k;
  std::vector<GroupHom> beta;
  beta.reserve(cm.N()->order());
  for (Elem u = 0; u < cm.N()->order(); ++u) {
    std::vector<Elem> img(sub->order());
    for (int k = 0; k < sub->order(); ++k) {
      Elem c = cm.N()->conj(u, incl(k));
      if (back[c] < 0) throw std::logic_error("image submodule: i(G) not normal");
      img[k] = back[c];
    }
    beta.emplace_back(sub, sub, std::move(img));
  }
  return std::make_shared<CrossedModule>(sub, cm.N(), incl, std::move(beta));
}

Report check_crossed_module(const CrossedModule& cm) {
  Report r;
  const auto& G = *cm.G();
  const auto& N = *cm.N();
  // i(beta_u(g)) = u i(g) u^-1
  for (Elem u = 0; u < N.order(); ++u)
    for (Elem g = 0; g < G.order(); ++g)
      if (cm.i_of(cm.act(u, g)) != N.conj(u, cm.i_of(g)))
        r.add("(u=" + N.label(u) + ", g=" + G.label(g) + ")", "i(beta_u(g)) != u i(g) u^-1");
  // beta_{i(g)}(h) = g h g^-1
  for (Elem g = 0; g < G.order(); ++g)
    for (Elem h = 0; h < G.order(); ++h)
      if (cm.act(cm.i_of(g), h) != G.conj(g, h))
        r.add("(g=" + G.label(g) + ", h=" + G.label(h) + ")", "beta_{i(g)} != ad g");
  // beta is a homomorphism N -> Aut G
  for (Elem u = 0; u < N.order(); ++u)
    for (Elem v = 0; v < N.order(); ++v) {
      const auto& buv = cm.beta(N.mul(u, v));
      bool ok = true;
      for (Elem g = 0; g < G.order() && ok; ++g)
        ok = buv(g) == cm.act(u, cm.act(v, g));
      if (!ok) r.add("(u=" + N.label(u) + ", v=" + N.label(v) + ")", "beta_{uv} != beta_u beta_v");
    }
  return r;
}

std::vector<Elem> generated_subgroup(const FiniteGroup& g, std::vector<Elem> gens) {
  std::vector<char> in(g.order(), 0);
  std::vector<Elem> queue{g.identity()};
  in[g.identity()] = 1;
  for (size_t head = 0; head < queue.size(); ++head) {
    for (Elem s : gens) {
      Elem x = g.mul(queue[head], s);
      if (!in[x]) { in[x] = 1; queue.push_back(x); }
      x = g.mul(queue[head], g.inv(s));
      if (!in[x]) { in[x] = 1; queue.push_back(x); }
    }
  }
  std::vector<Elem> out;
  for (Elem x = 0; x < g.order(); ++x)
    if (in[x]) out.push_back(x);
  return out;
}

std::pair<GroupPtr, GroupHom> subgroup_as_group(GroupPtr g, const std::vector<Elem>& elems) {
  std::vector<Elem> back(g->order(), -1);
  for (size_t k = 0; k < elems.size(); ++k) back[elems[k]] = static_cast<Elem>(k);
  const int m = static_cast<int>(elems.size());
  std::vector<std::vector<Elem>> t(m, std::vector<Elem>(m));
  std::vector<std::string> labels(m);
  for (int a = 0; a < m; ++a) {
    labels[a] = g->label(elems[a]);
    for (int b = 0; b < m; ++b) {
      Elem p = g->mul(elems[a], elems[b]);
      if (back[p] < 0) throw std::invalid_argument("subgroup: element list not closed");
      t[a][b] = back[p];
    }
  }
  auto sub = std::make_shared<FiniteGroup>(std::move(t), std::move(labels));
  std::vector<Elem> incl(elems.begin(), elems.end());
  return {sub, GroupHom(sub, std::move(g), std::move(incl))};
}

QuotientData quotient_mod_G(const CrossedModule& cm) {
  const auto& N = *cm.N();
  std::vector<char> in_img(N.order(), 0);
  for (Elem g = 0; g < cm.G()->order(); ++g) in_img[cm.i_of(g)] = 1;

  // left cosets u i(G); i(G) is normal so these form a group
  std::vector<Elem> coset_of(N.order(), -1);
  std::vector<Elem> reps;
  for (Elem u = 0; u < N.order(); ++u) {
    if (coset_of[u] >= 0) continue;
    Elem id = static_cast<Elem>(reps.size());
    reps.push_back(u);
    for (Elem n = 0; n < N.order(); ++n)
      if (in_img[n]) coset_of[N.mul(u, n)] = id;
  }
  const int m = static_cast<int>(reps.size());
  std::vector<std::vector<Elem>> t(m, std::vector<Elem>(m));
  std::vector<std::string> labels(m);
  for (int a = 0; a < m; ++a) {
    labels[a] = "[" + N.label(reps[a]) + "]";
    for (int b = 0; b < m; ++b) t[a][b] = coset_of[N.mul(reps[a], reps[b])];
  }
  auto Q = std::make_shared<FiniteGroup>(std::move(t), std::move(labels));
  GroupHom proj(cm.N(), Q, coset_of);
  if (!proj.is_surjective()) throw std::logic_error("quotient: projection not surjective");
  for (Elem n = 0; n < N.order(); ++n)
    if ((proj(n) == Q->identity()) != (in_img[n] != 0))
      throw std::logic_error("quotient: kernel differs from i(G)");
  return {Q, std::move(proj), std::move(reps)};
}

Polarization polarize(int carrier_size, const std::vector<int>& conj) {
  if (static_cast<int>(conj.size()) != carrier_size)
    throw std::invalid_argument("polarize: conj size mismatch");
  for (int x = 0; x < carrier_size; ++x) {
    if (conj[x] < 0 || conj[x] >= carrier_size)
      throw std::invalid_argument("polarize: conj out of range");
    if (conj[conj[x]] != x) throw std::invalid_argument("polarize: conj is not an involution");
  }
  Polarization p;
  p.side.assign(carrier_size, 0);
  for (int x = 0; x < carrier_size; ++x) {
    if (conj[x] == x) {
      p.side[x] = 0;
      p.zero.push_back(x);
    } else if (x < conj[x]) {
      p.side[x] = +1;
      p.side[conj[x]] = -1;
      p.plus.push_back(x);
      p.minus.push_back(conj[x]);
    }
  }
  std::sort(p.minus.begin(), p.minus.end());
  return p;
}

UnitalSection unital_section(const GroupHom& eta) {
  if (!eta.is_surjective()) throw std::invalid_argument("unital_section: eta not surjective");
  const auto& N = *eta.source();
  const auto& Q = *eta.target();

  // smallest-id preimage per coset
  std::vector<Elem> first(Q.order(), -1);
  for (Elem n = 0; n < N.order(); ++n)
    if (first[eta(n)] < 0) first[eta(n)] = n;

  std::vector<int> qinv(Q.order());
  for (Elem q = 0; q < Q.order(); ++q) qinv[q] = Q.inv(q);
  Polarization pol = polarize(Q.order(), qinv);

  std::vector<Elem> s(Q.order()), corr(Q.order(), N.identity());
  for (Elem q = 0; q < Q.order(); ++q) {
    if (q == Q.identity()) { s[q] = N.identity(); continue; }
    if (pol.side[q] >= 0) s[q] = first[q];
  }
  for (Elem q = 0; q < Q.order(); ++q)
    if (pol.side[q] < 0) s[q] = N.inv(s[Q.inv(q)]);
  for (Elem q : pol.zero) {
    if (q == Q.identity()) continue;
    Elem g = N.mul(N.inv(s[q]), N.inv(s[q])); // s(q)^-1 = g_q s(q)
    corr[q] = g;
    if (eta(g) != Q.identity()) throw std::logic_error("unital_section: correction not in kernel");
  }
  return {eta, std::move(s), std::move(corr)};
}

} // namespace gerbes
