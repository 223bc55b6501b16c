#include "gerbes/cohomology.hpp"

#include <algorithm>
#include <stdexcept>

namespace gerbes {

namespace {

std::string s1_name(const Poset& p, int b) {
  const auto& s = p.sigma1()[b];
  return "b" + std::to_string(b) + "=(" + p.label(s.d0) + "," + p.label(s.d1) + ";" +
         p.label(s.sup) + ")";
}

void require_same_poset(const PosetPtr& a, const PosetPtr& b, const char* what) {
  if (a.get() != b.get()) throw std::invalid_argument(std::string(what) + ": poset mismatch");
}

} // namespace

// --- 1-cocycles -----------------------------------------------------------------

Elem Cocycle1::along(const Path& p) const {
  Elem r = group->identity();
  for (int step : p.steps) r = group->mul(u[step], r);
  return r;
}

Report check_z1(const Cocycle1& u) {
  Report r;
  const Poset& p = *u.poset;
  if (u.u.size() != p.sigma1().size()) throw std::invalid_argument("check_z1: value table incomplete");
  const auto& s2 = p.sigma2();
  for (std::size_t c = 0; c < s2.size(); ++c) {
    const auto& cc = s2[c];
    if (u.u[cc.f1] != u.group->mul(u.u[cc.f0], u.u[cc.f2]))
      r.add("c" + std::to_string(c), "u(d1 c) != u(d0 c) u(d2 c)");
  }
  return r;
}

Cocycle1 trivial_z1(PosetPtr p, GroupPtr n) {
  Cocycle1 u{p, n, std::vector<Elem>(p->sigma1().size(), n->identity())};
  return u;
}

Cocycle1 extend_nerve_values(PosetPtr p, GroupPtr n, const std::map<int, Elem>& vals) {
  auto value = [&](int sup, int x) -> Elem {
    if (x == sup) return n->identity();
    int id = p->sigma1_id(sup, x, sup);
    auto it = vals.find(id);
    if (it == vals.end()) throw std::invalid_argument("extend: missing nerve edge value");
    return it->second;
  };
  const auto& s1 = p->sigma1();
  Cocycle1 out{p, n, std::vector<Elem>(s1.size())};
  for (std::size_t b = 0; b < s1.size(); ++b)
    out.u[b] = n->mul(n->inv(value(s1[b].sup, s1[b].d0)), value(s1[b].sup, s1[b].d1));
  return out;
}

Report z1_verify(const Cocycle1& u, const Cocycle1& u2, const std::vector<Elem>& v) {
  require_same_poset(u.poset, u2.poset, "z1_verify");
  if (u.group.get() != u2.group.get()) throw std::invalid_argument("z1_verify: group mismatch");
  Report r;
  const Poset& p = *u.poset;
  const auto& s1 = p.sigma1();
  for (std::size_t b = 0; b < s1.size(); ++b) {
    Elem lhs = u.group->mul(u.group->mul(v[s1[b].d0], u2.u[b]), u.group->inv(v[s1[b].d1]));
    if (lhs != u.u[b]) r.add(s1_name(p, static_cast<int>(b)), "v(d0) u'(b) v(d1)^-1 != u(b)");
  }
  return r;
}

Z1EquivResult z1_search(const Cocycle1& u, const Cocycle1& u2, std::uint64_t bound, ScanMode mode) {
  require_same_poset(u.poset, u2.poset, "z1_search");
  const Poset& p = *u.poset;
  const FiniteGroup& N = *u.group;
  std::vector<std::uint32_t> radices(p.size(), static_cast<std::uint32_t>(N.order()));
  const std::uint64_t space = mixed_radix_size(radices);
  if (space > bound) return {SearchStatus::BoundExceeded, std::nullopt, space, bound};

  const auto& s1 = p.sigma1();
  auto pred = [&](std::uint64_t idx) {
    std::vector<std::uint32_t> dig;
    decode_mixed_radix(idx, radices, dig);
    for (std::size_t b = 0; b < s1.size(); ++b) {
      Elem lhs = N.mul(N.mul(static_cast<Elem>(dig[s1[b].d0]), u2.u[b]),
                       N.inv(static_cast<Elem>(dig[s1[b].d1])));
      if (lhs != u.u[b]) return false;
    }
    return true;
  };
  ScanResult sr = scan_first(space, pred, mode);
  if (!sr.found) return {SearchStatus::Distinct, std::nullopt, space, bound};
  std::vector<std::uint32_t> dig;
  decode_mixed_radix(sr.index, radices, dig);
  std::vector<Elem> v(dig.begin(), dig.end());
  return {SearchStatus::Witness, v, space, bound};
}

// --- non-abelian 2-cocycles --------------------------------------------------------

Elem NonAbCocycle2::u_along(const Path& p) const {
  Elem r = cm->N()->identity();
  for (int step : p.steps) r = cm->N()->mul(u[step], r);
  return r;
}

NonAbCocycle2 trivial_cocycle2(PosetPtr p, CrossedModulePtr cm) {
  NonAbCocycle2 q;
  q.poset = p;
  q.cm = std::move(cm);
  q.u.assign(p->sigma1().size(), q.cm->N()->identity());
  q.g.assign(p->sigma2().size(), q.cm->G()->identity());
  return q;
}

Report check_nonabelian(const NonAbCocycle2& q, NonAbFlags* flags, bool force_sigma3) {
  Report r;
  const Poset& p = *q.poset;
  const FiniteGroup& N = *q.cm->N();
  const FiniteGroup& G = *q.cm->G();
  if (q.u.size() != p.sigma1().size() || q.g.size() != p.sigma2().size())
    throw std::invalid_argument("check_nonabelian: value tables incomplete");

  const auto& s2 = p.sigma2();
  for (std::size_t c = 0; c < s2.size(); ++c) {
    const auto& cc = s2[c];
    Elem rhs = N.mul(N.mul(q.u[cc.f0], q.u[cc.f2]), N.inv(q.u[cc.f1]));
    if (q.cm->i_of(q.g[c]) != rhs)
      r.add("c" + std::to_string(c), "i(g_c) != u(d0 c) u(d2 c) u(d1 c)^-1");
  }
  for (int a = 0; a < p.size(); ++a)
    if (q.cm->i_preimage(q.u[p.iota_id(a)]) < 0)
      r.add("iota_" + p.label(a), "u on the constant simplex lies outside i(G)");

  const bool implied = q.cm->i_injective() && !force_sigma3;
  if (!implied) {
    const auto& s3 = p.sigma3();
    for (std::size_t d = 0; d < s3.size(); ++d) {
      const auto& dd = s3[d];
      Elem lhs = G.mul(q.g[dd.f0], q.g[dd.f2]);
      Elem u01 = q.u[s2[dd.f1].f0]; // d0 of the face d1
      Elem rhs = G.mul(q.cm->beta(u01)(q.g[dd.f3]), q.g[dd.f1]);
      if (lhs != rhs) r.add("d" + std::to_string(d), "g(d0) g(d2) != beta_{u(d01)}(g(d3)) g(d1)");
    }
  } else {
    r.note("degree-3 condition implied: i is injective");
  }

  if (flags) {
    flags->sigma3_implied = implied;
    flags->normalized = true;
    for (int a = 0; a < p.size(); ++a)
      if (q.u[p.iota_id(a)] != N.identity()) flags->normalized = false;
    flags->twisted_connection = true;
    for (std::size_t b = 0; b < p.sigma1().size(); ++b)
      if (q.u[p.reverse_id(static_cast<int>(b))] != N.inv(q.u[b])) {
        flags->twisted_connection = false;
        break;
      }
  }
  return r;
}

CoboundaryPair identity_pair(const NonAbCocycle2& q) {
  return {std::vector<Elem>(q.poset->size(), q.cm->N()->identity()),
          std::vector<Elem>(q.poset->sigma1().size(), q.cm->G()->identity())};
}

CoboundaryPair inverse_pair(const NonAbCocycle2& q, const CoboundaryPair& p) {
  const Poset& ps = *q.poset;
  const FiniteGroup& N = *q.cm->N();
  CoboundaryPair out;
  out.v.resize(p.v.size());
  for (std::size_t o = 0; o < p.v.size(); ++o) out.v[o] = N.inv(p.v[o]);
  out.h.resize(p.h.size());
  const auto& s1 = ps.sigma1();
  for (std::size_t b = 0; b < p.h.size(); ++b)
    out.h[b] = q.cm->beta(p.v[s1[b].d0]).inverse()(p.h[b]);
  return out;
}

CoboundaryPair compose_pairs(const NonAbCocycle2& q, const CoboundaryPair& p12,
                             const CoboundaryPair& p01) {
  const Poset& ps = *q.poset;
  const FiniteGroup& N = *q.cm->N();
  const FiniteGroup& G = *q.cm->G();
  CoboundaryPair out;
  out.v.resize(p01.v.size());
  for (std::size_t o = 0; o < p01.v.size(); ++o) out.v[o] = N.mul(p12.v[o], p01.v[o]);
  out.h.resize(p01.h.size());
  const auto& s1 = ps.sigma1();
  for (std::size_t b = 0; b < p01.h.size(); ++b)
    out.h[b] = G.mul(p12.h[b], q.cm->beta(p12.v[s1[b].d0])(p01.h[b]));
  return out;
}

NonAbCocycle2 apply_coboundary(const NonAbCocycle2& q, const CoboundaryPair& p) {
  const Poset& ps = *q.poset;
  const FiniteGroup& N = *q.cm->N();
  const FiniteGroup& G = *q.cm->G();
  if (p.v.size() != static_cast<std::size_t>(ps.size()) || p.h.size() != ps.sigma1().size())
    throw std::invalid_argument("apply_coboundary: pair tables incomplete");

  NonAbCocycle2 out = q;
  const auto& s1 = ps.sigma1();
  for (std::size_t b = 0; b < s1.size(); ++b)
    out.u[b] = N.mul(N.mul(N.mul(q.cm->i_of(p.h[b]), p.v[s1[b].d0]), q.u[b]),
                     N.inv(p.v[s1[b].d1]));
  const auto& s2 = ps.sigma2();
  for (std::size_t c = 0; c < s2.size(); ++c) {
    const auto& cc = s2[c];
    Elem t = G.mul(q.cm->beta(out.u[cc.f0])(p.h[cc.f2]), p.h[cc.f0]);
    t = G.mul(t, q.cm->beta(p.v[ps.sigma2_d01(static_cast<int>(c))])(q.g[c]));
    out.g[c] = G.mul(t, G.inv(p.h[cc.f1]));
  }
  return out;
}

bool verify_equiv(const NonAbCocycle2& q, const NonAbCocycle2& q2, const CoboundaryPair& p) {
  NonAbCocycle2 t = apply_coboundary(q, p);
  return t.u == q2.u && t.g == q2.g;
}

CoboundaryPair normalization_pair(const NonAbCocycle2& q) {
  const Poset& ps = *q.poset;
  CoboundaryPair p = identity_pair(q);
  for (int a = 0; a < ps.size(); ++a) {
    Elem ui = q.u[ps.iota_id(a)];
    Elem pre = q.cm->i_preimage(q.cm->N()->inv(ui));
    if (pre < 0) throw std::invalid_argument("normalize: u on a constant simplex is outside i(G)");
    p.h[ps.iota_id(a)] = pre;
  }
  return p;
}

NonAbCocycle2 normalize(const NonAbCocycle2& q) {
  return apply_coboundary(q, normalization_pair(q));
}

EquivSearchResult search_equiv(const NonAbCocycle2& q, const NonAbCocycle2& q2,
                               std::uint64_t bound, ScanMode mode) {
  require_same_poset(q.poset, q2.poset, "search_equiv");
  if (q.cm.get() != q2.cm.get()) throw std::invalid_argument("search_equiv: crossed module mismatch");
  const Poset& ps = *q.poset;
  const FiniteGroup& N = *q.cm->N();
  const FiniteGroup& G = *q.cm->G();
  const auto& s1 = ps.sigma1();

  if (q.cm->i_injective()) {
    // the u-equation forces h pointwise, so scanning v is exhaustive
    std::vector<std::uint32_t> radices(ps.size(), static_cast<std::uint32_t>(N.order()));
    const std::uint64_t space = mixed_radix_size(radices);
    if (space > bound) return {SearchStatus::BoundExceeded, std::nullopt, space, bound};
    auto derive = [&](const std::vector<std::uint32_t>& dig, CoboundaryPair& p) {
      p.v.assign(dig.begin(), dig.end());
      p.h.resize(s1.size());
      for (std::size_t b = 0; b < s1.size(); ++b) {
        Elem t = N.mul(N.mul(N.mul(q2.u[b], p.v[s1[b].d1]), N.inv(q.u[b])), N.inv(p.v[s1[b].d0]));
        Elem pre = q.cm->i_preimage(t);
        if (pre < 0) return false;
        p.h[b] = pre;
      }
      return true;
    };
    auto pred = [&](std::uint64_t idx) {
      std::vector<std::uint32_t> dig;
      decode_mixed_radix(idx, radices, dig);
      CoboundaryPair p;
      return derive(dig, p) && verify_equiv(q, q2, p);
    };
    ScanResult sr = scan_first(space, pred, mode);
    if (!sr.found) return {SearchStatus::Distinct, std::nullopt, space, bound};
    std::vector<std::uint32_t> dig;
    decode_mixed_radix(sr.index, radices, dig);
    CoboundaryPair p;
    derive(dig, p);
    return {SearchStatus::Witness, p, space, bound};
  }

  std::vector<std::uint32_t> radices(ps.size(), static_cast<std::uint32_t>(N.order()));
  radices.insert(radices.end(), s1.size(), static_cast<std::uint32_t>(G.order()));
  const std::uint64_t space = mixed_radix_size(radices);
  if (space > bound) return {SearchStatus::BoundExceeded, std::nullopt, space, bound};
  auto decode = [&](std::uint64_t idx) {
    std::vector<std::uint32_t> dig;
    decode_mixed_radix(idx, radices, dig);
    CoboundaryPair p;
    p.v.assign(dig.begin(), dig.begin() + ps.size());
    p.h.assign(dig.begin() + ps.size(), dig.end());
    return p;
  };
  auto pred = [&](std::uint64_t idx) { return verify_equiv(q, q2, decode(idx)); };
  ScanResult sr = scan_first(space, pred, mode);
  if (!sr.found) return {SearchStatus::Distinct, std::nullopt, space, bound};
  return {SearchStatus::Witness, decode(sr.index), space, bound};
}

// --- diagram maps ---------------------------------------------------------------------

NonAbCocycle2 d_of(const Cocycle1& u, CrossedModulePtr cm) {
  if (cm->N().get() != u.group.get()) throw std::invalid_argument("d: cocycle group is not N");
  NonAbCocycle2 q;
  q.poset = u.poset;
  q.cm = std::move(cm);
  q.u = u.u;
  q.g.assign(u.poset->sigma2().size(), q.cm->G()->identity());
  return q;
}

Cocycle1 mu1(const Cocycle1& v, const QuotientData& qd) {
  Cocycle1 out{v.poset, qd.Q, std::vector<Elem>(v.u.size())};
  for (std::size_t b = 0; b < v.u.size(); ++b) out.u[b] = qd.proj(v.u[b]);
  return out;
}

Cocycle1 mu2(const NonAbCocycle2& q, const QuotientData& qd) {
  Cocycle1 out{q.poset, qd.Q, std::vector<Elem>(q.u.size())};
  for (std::size_t b = 0; b < q.u.size(); ++b) out.u[b] = qd.proj(q.u[b]);
  return out;
}

NonAbCocycle2 nu_of_w(const Cocycle1& w, const CrossedModulePtr& cm, const QuotientData& qd,
                      const UnitalSection& us) {
  if (!cm->i_injective()) throw std::invalid_argument("nu_of_w: i must be injective");
  if (w.group.get() != qd.Q.get()) throw std::invalid_argument("nu_of_w: w not valued in N/G");
  const Poset& ps = *w.poset;
  const FiniteGroup& N = *cm->N();
  const FiniteGroup& Q = *qd.Q;
  const auto& s1 = ps.sigma1();
  const auto& s2 = ps.sigma2();

  // section lift
  NonAbCocycle2 lift;
  lift.poset = w.poset;
  lift.cm = cm;
  lift.u.resize(s1.size());
  for (std::size_t b = 0; b < s1.size(); ++b) lift.u[b] = us.s[w.u[b]];
  lift.g.resize(s2.size());
  for (std::size_t c = 0; c < s2.size(); ++c) {
    const auto& cc = s2[c];
    Elem t = N.mul(N.mul(lift.u[cc.f0], lift.u[cc.f2]), N.inv(lift.u[cc.f1]));
    Elem pre = cm->i_preimage(t);
    if (pre < 0) throw std::logic_error("nu_of_w: section defect escapes i(G)");
    lift.g[c] = pre;
  }

  // polarization correction on 1-simplices of the self-inverse type
  std::vector<int> conj(s1.size());
  for (std::size_t b = 0; b < s1.size(); ++b) conj[b] = ps.reverse_id(static_cast<int>(b));
  Polarization pol = polarize(static_cast<int>(s1.size()), conj);

  CoboundaryPair pair = identity_pair(lift);
  for (std::size_t x = 0; x < s1.size(); ++x) {
    if (pol.side[x] != -1) continue;
    int b = conj[x]; // the plus-side partner
    if (Q.inv(w.u[b]) != w.u[b]) continue;
    Elem t = N.mul(N.inv(us.s[w.u[b]]), N.inv(us.s[w.u[x]]));
    Elem pre = cm->i_preimage(t);
    if (pre < 0) throw std::logic_error("nu_of_w: correction escapes i(G)");
    pair.h[x] = pre;
  }
  return apply_coboundary(lift, pair);
}

// --- abelian machinery ------------------------------------------------------------------

namespace {

// element order and integer scaling inside an abelian group
int elem_order(const FiniteGroup& a, Elem x) {
  int k = 1;
  Elem t = x;
  while (t != a.identity()) {
    t = a.mul(t, x);
    ++k;
  }
  return k;
}

Elem scale(const FiniteGroup& a, long long k, Elem x) {
  int ord = elem_order(a, x);
  long long r = k % ord;
  if (r < 0) r += ord;
  Elem t = a.identity();
  for (long long i = 0; i < r; ++i) t = a.mul(t, x);
  return t;
}

using Mat = std::vector<std::vector<long long>>;

void check_ll(long long v) {
  if (v > (1LL << 58) || v < -(1LL << 58)) throw std::overflow_error("smith: entry overflow");
}

// Diagonalization by integer row/column operations. Row operations are
// mirrored on rhs (entries of the abelian group A); column operations are
// tracked in V so solutions can be pulled back.
struct Diag {
  std::vector<long long> diag;
  int rank = 0;
};

Diag diagonalize(Mat m, const FiniteGroup* A, std::vector<Elem>* rhs, Mat* V) {
  const int rows = static_cast<int>(m.size());
  const int cols = rows ? static_cast<int>(m[0].size()) : 0;
  if (V) {
    V->assign(cols, std::vector<long long>(cols, 0));
    for (int j = 0; j < cols; ++j) (*V)[j][j] = 1;
  }
  auto row_sub = [&](int i, int j, long long k) { // R_i -= k R_j
    for (int c = 0; c < cols; ++c) {
      m[i][c] -= k * m[j][c];
      check_ll(m[i][c]);
    }
    if (rhs) (*rhs)[i] = A->mul((*rhs)[i], scale(*A, -k, (*rhs)[j]));
  };
  auto col_sub = [&](int i, int j, long long k) { // C_i -= k C_j
    for (int r = 0; r < rows; ++r) {
      m[r][i] -= k * m[r][j];
      check_ll(m[r][i]);
    }
    if (V)
      for (int r = 0; r < cols; ++r) {
        (*V)[r][i] -= k * (*V)[r][j];
        check_ll((*V)[r][i]);
      }
  };
  auto row_swap = [&](int i, int j) {
    std::swap(m[i], m[j]);
    if (rhs) std::swap((*rhs)[i], (*rhs)[j]);
  };
  auto col_swap = [&](int i, int j) {
    for (int r = 0; r < rows; ++r) std::swap(m[r][i], m[r][j]);
    if (V)
      for (int r = 0; r < cols; ++r) std::swap((*V)[r][i], (*V)[r][j]);
  };

  Diag out;
  const int steps = std::min(rows, cols);
  for (int t = 0; t < steps; ++t) {
    // smallest nonzero pivot in the trailing block
    int pi = -1, pj = -1;
    long long best = 0;
    for (int i = t; i < rows; ++i)
      for (int j = t; j < cols; ++j)
        if (m[i][j] != 0 && (pi < 0 || std::abs(m[i][j]) < best)) {
          pi = i;
          pj = j;
          best = std::abs(m[i][j]);
        }
    if (pi < 0) break;
    row_swap(t, pi);
    col_swap(t, pj);
    bool clean = false;
    while (!clean) {
      clean = true;
      for (int i = t + 1; i < rows; ++i)
        if (m[i][t] != 0) {
          long long k = m[i][t] / m[t][t];
          row_sub(i, t, k);
          if (m[i][t] != 0) { row_swap(t, i); clean = false; }
        }
      for (int j = t + 1; j < cols; ++j)
        if (m[t][j] != 0) {
          long long k = m[t][j] / m[t][t];
          col_sub(j, t, k);
          if (m[t][j] != 0) { col_swap(t, j); clean = false; }
        }
    }
    out.diag.push_back(std::llabs(m[t][t]));
    ++out.rank;
  }
  if (rhs) rhs->resize(rows); // unchanged, kept for clarity
  (void)rows;
  out.diag.resize(static_cast<std::size_t>(out.rank));
  // expose the transformed rhs rows beyond the rank through rhs itself
  return out;
}

// incidence matrix of the degree-n coboundary (rows: Sigma_{n+1}, cols: Sigma_n)
Mat incidence(const Poset& p, int n) {
  auto zero = [&](std::size_t r, std::size_t c) { return Mat(r, std::vector<long long>(c, 0)); };
  if (n == 0) {
    Mat m = zero(p.sigma1().size(), static_cast<std::size_t>(p.size()));
    for (std::size_t b = 0; b < p.sigma1().size(); ++b) {
      m[b][p.sigma1()[b].d0] += 1;
      m[b][p.sigma1()[b].d1] -= 1;
    }
    return m;
  }
  if (n == 1) {
    Mat m = zero(p.sigma2().size(), p.sigma1().size());
    for (std::size_t c = 0; c < p.sigma2().size(); ++c) {
      const auto& cc = p.sigma2()[c];
      m[c][cc.f0] += 1;
      m[c][cc.f1] -= 1;
      m[c][cc.f2] += 1;
    }
    return m;
  }
  if (n == 2) {
    Mat m = zero(p.sigma3().size(), p.sigma2().size());
    for (std::size_t d = 0; d < p.sigma3().size(); ++d) {
      const auto& dd = p.sigma3()[d];
      m[d][dd.f0] += 1;
      m[d][dd.f1] -= 1;
      m[d][dd.f2] += 1;
      m[d][dd.f3] -= 1;
    }
    return m;
  }
  throw std::invalid_argument("incidence: degree out of range");
}

std::uint64_t kernel_count(const Poset& p, const FiniteGroup& A, int n) {
  Mat m = incidence(p, n);
  const std::size_t cols = m.empty() ? (n == 0 ? p.size() : p.simplex_count(n)) : m[0].size();
  Diag d = diagonalize(std::move(m), nullptr, nullptr, nullptr);
  std::uint64_t count = 1;
  for (long long s : d.diag) {
    std::uint64_t k = 0;
    for (Elem t = 0; t < A.order(); ++t)
      if (scale(A, s, t) == A.identity()) ++k;
    count *= k;
  }
  for (std::size_t j = d.diag.size(); j < cols; ++j) count *= static_cast<std::uint64_t>(A.order());
  return count;
}

std::uint64_t ipow(std::uint64_t b, std::uint64_t e) {
  std::uint64_t r = 1;
  while (e--) r *= b;
  return r;
}

} // namespace

AbCochain coboundary(const AbCochain& w) {
  const Poset& p = *w.poset;
  const FiniteGroup& A = *w.group;
  AbCochain out{w.poset, w.group, w.degree + 1, {}};
  Mat m = incidence(p, w.degree);
  out.values.assign(m.size(), A.identity());
  for (std::size_t r = 0; r < m.size(); ++r)
    for (std::size_t c = 0; c < m[r].size(); ++c)
      if (m[r][c] != 0) out.values[r] = A.mul(out.values[r], scale(A, m[r][c], w.values[c]));
  return out;
}

Report check_abelian_cocycle(const AbCochain& u) {
  Report r;
  if (!u.group->is_abelian()) throw std::invalid_argument("abelian cocycle: group not abelian");
  AbCochain d = coboundary(u);
  for (std::size_t k = 0; k < d.values.size(); ++k)
    if (d.values[k] != u.group->identity())
      r.add("simplex " + std::to_string(k), "alternating face product != 1");
  return r;
}

AbelianHn abelian_hn(PosetPtr p, GroupPtr a, int n, std::uint64_t bound, ScanMode mode) {
  if (!a->is_abelian()) throw std::invalid_argument("abelian_hn: coefficients not abelian");
  if (n < 0 || n > 2) throw std::invalid_argument("abelian_hn: degree out of range");
  // counts that would require Sigma_{n+1} beyond degree 3 are out of scope
  AbelianHn out;
  const FiniteGroup& A = *a;
  out.z_count = kernel_count(*p, A, n);
  if (n == 0) {
    out.b_count = 1;
  } else {
    std::uint64_t ker_prev = kernel_count(*p, A, n - 1);
    out.b_count = ipow(static_cast<std::uint64_t>(A.order()),
                       n == 1 ? static_cast<std::uint64_t>(p->size()) : p->sigma1().size()) /
                  ker_prev;
  }
  out.h_count = out.z_count / out.b_count;

  if (n == 0) {
    if (p->connected()) {
      for (Elem t = 0; t < A.order(); ++t) {
        AbCochain c{p, a, 0, std::vector<Elem>(static_cast<std::size_t>(p->size()), t)};
        out.cocycles.push_back(std::move(c));
      }
      out.list_materialized = true;
    }
  } else if (n == 1) {
    const auto& edges = p->nerve1_nondeg();
    std::vector<std::uint32_t> radices(edges.size(), static_cast<std::uint32_t>(A.order()));
    std::uint64_t space = mixed_radix_size(radices);
    if (space <= bound) {
      std::vector<std::uint32_t> dig;
      for (std::uint64_t idx = 0; idx < space; ++idx) {
        decode_mixed_radix(idx, radices, dig);
        std::map<int, Elem> vals;
        for (std::size_t k = 0; k < edges.size(); ++k) vals[edges[k]] = static_cast<Elem>(dig[k]);
        Cocycle1 cand = extend_nerve_values(p, a, vals);
        if (check_z1(cand).ok())
          out.cocycles.push_back(AbCochain{p, a, 1, cand.u});
      }
      out.list_materialized = true;
      if (out.cocycles.size() != out.z_count)
        throw std::logic_error("abelian_hn: enumeration disagrees with rank computation");
    }
  }
  (void)mode;
  return out;
}

std::optional<AbCochain> coboundary_preimage(const AbCochain& u) {
  const Poset& p = *u.poset;
  const FiniteGroup& A = *u.group;
  if (u.degree < 1 || u.degree > 2) throw std::invalid_argument("coboundary_preimage: degree");
  Mat m = incidence(p, u.degree - 1);
  const std::size_t cols = m.empty() ? 0 : m[0].size();
  std::vector<Elem> rhs = u.values;
  Mat V;
  Diag d = diagonalize(std::move(m), &A, &rhs, &V);
  // solve s_j y_j = rhs_j for j < rank; beyond the rank rhs must vanish
  std::vector<Elem> y(cols, A.identity());
  for (int j = 0; j < d.rank; ++j) {
    bool found = false;
    for (Elem t = 0; t < A.order() && !found; ++t)
      if (scale(A, d.diag[j], t) == rhs[j]) {
        y[j] = t;
        found = true;
      }
    if (!found) return std::nullopt;
  }
  for (std::size_t j = d.rank; j < rhs.size(); ++j)
    if (rhs[j] != A.identity()) return std::nullopt;
  // x = V y
  AbCochain w{u.poset, u.group, u.degree - 1, std::vector<Elem>(cols, A.identity())};
  for (std::size_t i = 0; i < cols; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      if (V[i][j] != 0) w.values[i] = A.mul(w.values[i], scale(A, V[i][j], y[j]));
  AbCochain check = coboundary(w);
  if (check.values != u.values) throw std::logic_error("coboundary_preimage: solver check failed");
  return w;
}

std::optional<AbCochain> coboundary_preimage_bruteforce(const AbCochain& u, std::uint64_t bound,
                                                        ScanMode mode) {
  const Poset& p = *u.poset;
  const FiniteGroup& A = *u.group;
  const std::size_t cols = (u.degree == 1) ? static_cast<std::size_t>(p.size()) : p.sigma1().size();
  std::vector<std::uint32_t> radices(cols, static_cast<std::uint32_t>(A.order()));
  std::uint64_t space = mixed_radix_size(radices);
  if (space > bound) throw std::invalid_argument("coboundary_preimage_bruteforce: bound exceeded");
  auto decode = [&](std::uint64_t idx) {
    std::vector<std::uint32_t> dig;
    decode_mixed_radix(idx, radices, dig);
    AbCochain w{u.poset, u.group, u.degree - 1, std::vector<Elem>(dig.begin(), dig.end())};
    return w;
  };
  auto pred = [&](std::uint64_t idx) { return coboundary(decode(idx)).values == u.values; };
  ScanResult sr = scan_first(space, pred, mode);
  if (!sr.found) return std::nullopt;
  return decode(sr.index);
}

DDClass dd_class(const NonAbCocycle2& q) {
  const FiniteGroup& G = *q.cm->G();
  if (!G.is_abelian()) throw std::invalid_argument("dd_class: G not abelian");
  for (Elem u = 0; u < q.cm->N()->order(); ++u)
    for (Elem g = 0; g < G.order(); ++g)
      if (q.cm->act(u, g) != g)
        throw std::invalid_argument("dd_class: N does not act trivially on G");
  DDClass out{AbCochain{q.poset, q.cm->G(), 2, q.g}, false};
  out.trivial = coboundary_preimage(out.g).has_value();
  return out;
}

bool dd_equal(const DDClass& a, const DDClass& b) {
  if (a.g.poset.get() != b.g.poset.get() || a.g.group.get() != b.g.group.get())
    throw std::invalid_argument("dd_equal: class domains differ");
  const FiniteGroup& G = *a.g.group;
  AbCochain diff = a.g;
  for (std::size_t c = 0; c < diff.values.size(); ++c)
    diff.values[c] = G.mul(a.g.values[c], G.inv(b.g.values[c]));
  return coboundary_preimage(diff).has_value();
}

// --- PiGroup --------------------------------------------------------------------------

PiGroup PiGroup::free_group(int rank) {
  PiGroup g;
  g.rank_ = rank;
  return g;
}

PiGroup PiGroup::finite(GroupPtr table) {
  PiGroup g;
  g.table_ = std::move(table);
  g.rank_ = g.table_->order();
  return g;
}

PiGroup PiGroup::from_presentation(std::shared_ptr<const Pi1Presentation> pres) {
  PiGroup g;
  if (pres->backend() == Pi1Presentation::Backend::Free && !pres->relations().empty())
    throw std::invalid_argument("pi group: free backend with unresolved relations");
  g.pres_ = std::move(pres);
  g.rank_ = g.pres_->rank();
  return g;
}

Word PiGroup::normal(const Word& w) const {
  if (pres_) return pres_->normal_form(w);
  if (table_) {
    Elem x = table_->identity();
    for (int l : w) {
      Elem e = std::abs(l) - 1;
      x = table_->mul(x, l > 0 ? e : table_->inv(e));
    }
    if (x == table_->identity()) return {};
    return {x + 1};
  }
  return free_reduce(w);
}

Word PiGroup::mul(const Word& a, const Word& b) const {
  Word w = a;
  w.insert(w.end(), b.begin(), b.end());
  return normal(w);
}

Word PiGroup::inv(const Word& a) const { return normal(word_inverse(a)); }

bool PiGroup::is_finite() const {
  if (table_) return true;
  if (pres_) return pres_->backend() == Pi1Presentation::Backend::Finite;
  return rank_ == 0;
}

std::vector<Word> PiGroup::elements(int len_bound) const {
  std::vector<Word> out;
  if (table_) {
    for (Elem x = 0; x < table_->order(); ++x)
      out.push_back(x == table_->identity() ? Word{} : Word{x + 1});
    return out;
  }
  if (pres_ && pres_->backend() == Pi1Presentation::Backend::Finite) {
    for (Elem x = 0; x < pres_->finite_group()->order(); ++x) out.push_back(pres_->canonical_word(x));
    return out;
  }
  // free: all reduced words up to the length bound
  out.push_back({});
  std::vector<Word> frontier{{}};
  for (int len = 0; len < len_bound; ++len) {
    std::vector<Word> next;
    for (const auto& w : frontier)
      for (int k = 1; k <= rank_; ++k)
        for (int s : {+1, -1}) {
          if (!w.empty() && w.back() == -s * k) continue;
          Word e = w;
          e.push_back(s * k);
          out.push_back(e);
          next.push_back(std::move(e));
        }
    frontier = std::move(next);
  }
  return out;
}

std::string PiGroup::label(const Word& w) const {
  Word nf = normal(w);
  if (nf.empty()) return "1";
  if (table_) return table_->label(nf[0] - 1);
  std::string s;
  for (int l : nf) {
    if (!s.empty()) s += ".";
    s += (l > 0 ? "g" : "G") + std::to_string(std::abs(l));
  }
  return s;
}

// --- group cocycles ---------------------------------------------------------------------

GroupCocycle2::GroupCocycle2(PiGroup pi, CrossedModulePtr cm, std::function<Elem(const Word&)> nu,
                             std::function<Elem(const Word&, const Word&)> gamma)
    : pi_(std::move(pi)), cm_(std::move(cm)), nu_fn_(std::move(nu)), gamma_fn_(std::move(gamma)) {}

Elem GroupCocycle2::nu(const Word& l) const {
  Word n = pi_.normal(l);
  std::scoped_lock lk(memo_->mu);
  auto it = memo_->nu.find(n);
  if (it != memo_->nu.end()) return it->second;
  Elem v = nu_fn_(n);
  memo_->nu[n] = v;
  return v;
}

Elem GroupCocycle2::gamma(const Word& l, const Word& m) const {
  auto key = std::make_pair(pi_.normal(l), pi_.normal(m));
  std::scoped_lock lk(memo_->mu);
  auto it = memo_->gamma.find(key);
  if (it != memo_->gamma.end()) return it->second;
  Elem v = gamma_fn_(key.first, key.second);
  memo_->gamma[key] = v;
  return v;
}

Report check_group_cocycle(const GroupCocycle2& c, int len_bound) {
  Report r;
  const FiniteGroup& N = *c.cm()->N();
  const FiniteGroup& G = *c.cm()->G();
  const PiGroup& pi = c.pi();
  std::vector<Word> dom = pi.elements(len_bound);
  if (!pi.is_finite())
    r.note("free group: equations sampled on words of length <= " + std::to_string(len_bound));

  for (const auto& l : dom) {
    if (c.gamma(l, {}) != G.identity()) r.add(pi.label(l), "gamma(l,1) != 1");
    if (c.gamma({}, l) != G.identity()) r.add(pi.label(l), "gamma(1,l) != 1");
  }
  for (const auto& l : dom)
    for (const auto& m : dom) {
      Elem lhs = N.mul(c.nu(l), c.nu(m));
      Elem rhs = N.mul(c.cm()->i_of(c.gamma(l, m)), c.nu(pi.mul(l, m)));
      if (lhs != rhs) r.add("(" + pi.label(l) + "," + pi.label(m) + ")",
                            "nu_l nu_m != i(gamma(l,m)) nu_{lm}");
    }
  for (const auto& l : dom)
    for (const auto& m : dom)
      for (const auto& n : dom) {
        Elem lhs = G.mul(c.gamma(l, m), c.gamma(pi.mul(l, m), n));
        Elem rhs = G.mul(c.cm()->beta(c.nu(l))(c.gamma(m, n)), c.gamma(l, pi.mul(m, n)));
        if (lhs != rhs)
          r.add("(" + pi.label(l) + "," + pi.label(m) + "," + pi.label(n) + ")",
                "gamma 2-cocycle equation fails");
      }
  return r;
}

Report group_equiv(const GroupCocycle2& c, const GroupCocycle2& c2, const GroupCoboundary& wk,
                   int len_bound) {
  Report r;
  const FiniteGroup& N = *c.cm()->N();
  const FiniteGroup& G = *c.cm()->G();
  const PiGroup& pi = c.pi();
  std::vector<Word> dom = pi.elements(len_bound);
  if (!pi.is_finite())
    r.note("free group: equations sampled on words of length <= " + std::to_string(len_bound));
  for (const auto& l : dom) {
    Elem lhs = c2.nu(l);
    Elem rhs = N.mul(N.mul(N.mul(c.cm()->i_of(wk.k(l)), wk.w), c.nu(l)), N.inv(wk.w));
    if (lhs != rhs) r.add(pi.label(l), "nu'_l != i(k_l) w nu_l w^-1");
  }
  for (const auto& l : dom)
    for (const auto& m : dom) {
      Elem lhs = c2.gamma(l, m);
      Elem t = G.mul(c.cm()->beta(c2.nu(l))(wk.k(m)), wk.k(l));
      t = G.mul(t, c.cm()->beta(wk.w)(c.gamma(l, m)));
      Elem rhs = G.mul(t, G.inv(wk.k(pi.mul(l, m))));
      if (lhs != rhs)
        r.add("(" + pi.label(l) + "," + pi.label(m) + ")",
              "gamma'(l,m) != nu'_l(k_m) k_l w(gamma(l,m)) k_{lm}^-1");
    }
  return r;
}

// --- holonomy ------------------------------------------------------------------------------

LoopSection::LoopSection(std::shared_ptr<const Pi1Presentation> pres, std::optional<Path> detour)
    : pres_(std::move(pres)), detour_(std::move(detour)) {
  if (detour_) {
    const Poset& p = *pres_->poset();
    if (!p.path_valid(*detour_) || p.path_start(*detour_) != pres_->base() ||
        p.path_end(*detour_) != pres_->base())
      throw std::invalid_argument("loop section: detour must be a loop at the base");
  }
}

Path LoopSection::loop(const Word& w) const {
  Word nf = pres_->normal_form(w);
  if (nf.empty()) return pres_->poset()->constant_path(pres_->base());
  Path p = pres_->loop_of_word(nf);
  if (detour_) p = pres_->poset()->compose(p, *detour_);
  return p;
}

GroupCocycle2 holonomy_cocycle(const NonAbCocycle2& q, const LoopSection& s) {
  NonAbFlags flags;
  Report chk = check_nonabelian(q, &flags);
  if (!chk.ok()) throw std::invalid_argument("holonomy_cocycle: input is not a cocycle");
  auto qn = std::make_shared<NonAbCocycle2>(flags.normalized ? q : normalize(q));

  auto cm_i = CrossedModule::image_submodule(*q.cm);
  // back-map N-element -> subgroup element
  auto back = std::make_shared<std::vector<Elem>>(q.cm->N()->order(), -1);
  for (Elem k = 0; k < cm_i->G()->order(); ++k) (*back)[cm_i->i_of(k)] = k;

  PiGroup pi = PiGroup::from_presentation(s.pres());
  auto nu_fn = [qn, s](const Word& l) { return qn->u_along(s.loop(l)); };
  auto gamma_fn = [qn, s, pi, back](const Word& l, const Word& m) {
    const FiniteGroup& N = *qn->cm->N();
    Elem a = qn->u_along(s.loop(l));
    Elem b = qn->u_along(s.loop(m));
    Elem c = qn->u_along(s.loop(pi.mul(l, m)));
    Elem t = N.mul(N.mul(a, b), N.inv(c));
    Elem pre = (*back)[t];
    if (pre < 0) throw std::logic_error("holonomy_cocycle: gamma escapes i(G)");
    return pre;
  };
  return GroupCocycle2(pi, cm_i, nu_fn, gamma_fn);
}

GroupCoboundary section_change_witness(const NonAbCocycle2& q, const LoopSection& s,
                                       const LoopSection& s2) {
  NonAbFlags flags;
  Report chk = check_nonabelian(q, &flags);
  if (!chk.ok()) throw std::invalid_argument("section_change_witness: input is not a cocycle");
  auto qn = std::make_shared<NonAbCocycle2>(flags.normalized ? q : normalize(q));
  auto cm_i = CrossedModule::image_submodule(*q.cm);
  auto back = std::make_shared<std::vector<Elem>>(q.cm->N()->order(), -1);
  for (Elem k = 0; k < cm_i->G()->order(); ++k) (*back)[cm_i->i_of(k)] = k;

  GroupCoboundary out;
  out.w = q.cm->N()->identity();
  out.k = [qn, s, s2, back](const Word& l) {
    const FiniteGroup& N = *qn->cm->N();
    Elem a = qn->u_along(s2.loop(l)); // nu'_l
    Elem b = qn->u_along(s.loop(l));  // ubar_l
    Elem t = N.mul(a, N.inv(b));
    Elem pre = (*back)[t];
    if (pre < 0) throw std::logic_error("section_change_witness: h escapes i(G)");
    return pre;
  };
  return out;
}

} // namespace gerbes
