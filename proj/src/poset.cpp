#include "gerbes/poset.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <set>
#include <stdexcept>
#include <tuple>

namespace gerbes {

Poset::Poset(std::vector<std::string> labels, const std::vector<std::pair<int, int>>& covers)
    : n_(static_cast<int>(labels.size())), labels_(std::move(labels)) {
  if (n_ <= 0) throw std::invalid_argument("poset: empty");
  leq_.assign(static_cast<std::size_t>(n_) * n_, 0);
  for (int a = 0; a < n_; ++a) leq_[a * n_ + a] = 1;
  for (auto [lo, hi] : covers) {
    if (lo < 0 || lo >= n_ || hi < 0 || hi >= n_) throw std::invalid_argument("poset: cover out of range");
    leq_[lo * n_ + hi] = 1;
  }
  // transitive closure
  for (int k = 0; k < n_; ++k)
    for (int a = 0; a < n_; ++a)
      if (leq_[a * n_ + k])
        for (int b = 0; b < n_; ++b)
          if (leq_[k * n_ + b]) leq_[a * n_ + b] = 1;
  for (int a = 0; a < n_; ++a)
    for (int b = 0; b < a; ++b)
      if (leq_[a * n_ + b] && leq_[b * n_ + a]) throw std::invalid_argument("poset: not antisymmetric");

  // connectedness under the comparability zig-zag
  std::vector<int> comp(n_, -1);
  std::deque<int> q{0};
  comp[0] = 0;
  while (!q.empty()) {
    int x = q.front();
    q.pop_front();
    for (int y = 0; y < n_; ++y)
      if (comp[y] < 0 && (leq(x, y) || leq(y, x))) { comp[y] = 0; q.push_back(y); }
  }
  connected_ = std::all_of(comp.begin(), comp.end(), [](int c) { return c == 0; });
}

std::optional<int> Poset::elem_by_label(const std::string& s) const {
  for (int a = 0; a < n_; ++a)
    if (labels_[a] == s) return a;
  return std::nullopt;
}

void Poset::build_sigma1() const {
  std::call_once(once1_, [this] {
    for (int sup = 0; sup < n_; ++sup)
      for (int d0 = 0; d0 < n_; ++d0) {
        if (!leq(d0, sup)) continue;
        for (int d1 = 0; d1 < n_; ++d1) {
          if (!leq(d1, sup)) continue;
          s1_index_[{d0, d1, sup}] = static_cast<int>(s1_.size());
          s1_.push_back({d0, d1, sup});
        }
      }
    iota_.assign(n_, -1);
    rev_.assign(s1_.size(), -1);
    for (std::size_t b = 0; b < s1_.size(); ++b) {
      const auto& s = s1_[b];
      if (s.d0 == s.d1 && s.d1 == s.sup) iota_[s.sup] = static_cast<int>(b);
      rev_[b] = s1_index_.at({s.d1, s.d0, s.sup});
    }
    for (std::size_t b = 0; b < s1_.size(); ++b) {
      const auto& s = s1_[b];
      if (s.sup == s.d0 && leq(s.d1, s.d0)) {
        nerve1_.push_back(static_cast<int>(b));
        if (s.d1 != s.d0) nerve1_nondeg_.push_back(static_cast<int>(b));
      }
    }
  });
}

void Poset::build_sigma2() const {
  build_sigma1();
  std::call_once(once2_, [this] {
    std::map<std::array<int, 7>, int> index;
    for (int sup = 0; sup < n_; ++sup)
      for (int v0 = 0; v0 < n_; ++v0) {
        if (!leq(v0, sup)) continue;
        for (int v1 = 0; v1 < n_; ++v1) {
          if (!leq(v1, sup)) continue;
          for (int v2 = 0; v2 < n_; ++v2) {
            if (!leq(v2, sup)) continue;
            for (int s01 = 0; s01 < n_; ++s01) {
              if (!(leq(v0, s01) && leq(v1, s01) && leq(s01, sup))) continue;
              for (int s02 = 0; s02 < n_; ++s02) {
                if (!(leq(v0, s02) && leq(v2, s02) && leq(s02, sup))) continue;
                for (int s12 = 0; s12 < n_; ++s12) {
                  if (!(leq(v1, s12) && leq(v2, s12) && leq(s12, sup))) continue;
                  Simplex2 c;
                  c.f2 = s1_index_.at({v1, v0, s01});
                  c.f1 = s1_index_.at({v2, v0, s02});
                  c.f0 = s1_index_.at({v2, v1, s12});
                  c.sup = sup;
                  int id = static_cast<int>(s2_.size());
                  index[{v0, v1, v2, s01, s02, s12, sup}] = id;
                  s2_.push_back(c);
                  auto key = std::make_pair(c.f2, c.f0);
                  if (!pair_to_c_.count(key)) pair_to_c_[key] = id;
                  long_to_c_[c.f1].push_back(id);
                }
              }
            }
          }
        }
      }
    for (std::size_t c = 0; c < s2_.size(); ++c) {
      const auto& cc = s2_[c];
      const int v0 = s1_[cc.f2].d1, v1 = s1_[cc.f2].d0, v2 = s1_[cc.f0].d0;
      if (v0 != v1 && v1 != v2 && leq(v0, v1) && leq(v1, v2) && s1_[cc.f2].sup == v1 &&
          s1_[cc.f1].sup == v2 && s1_[cc.f0].sup == v2 && cc.sup == v2)
        nerve2_nondeg_.push_back(static_cast<int>(c));
    }
  });
}

void Poset::build_sigma3() const {
  build_sigma2();
  std::call_once(once3_, [this] {
    // re-derive the vertex/support key of every 2-simplex for face lookup
    std::map<std::array<int, 7>, int> index;
    for (std::size_t c = 0; c < s2_.size(); ++c) {
      const auto& cc = s2_[c];
      const int v0 = s1_[cc.f2].d1, v1 = s1_[cc.f2].d0, v2 = s1_[cc.f0].d0;
      index[{v0, v1, v2, s1_[cc.f2].sup, s1_[cc.f1].sup, s1_[cc.f0].sup, cc.sup}] =
          static_cast<int>(c);
    }
    // common upper bounds per pair, filtered by <= sup inside the loops
    std::vector<std::vector<int>> ubs(static_cast<std::size_t>(n_) * n_);
    for (int a = 0; a < n_; ++a)
      for (int b = 0; b < n_; ++b)
        for (int s = 0; s < n_; ++s)
          if (leq(a, s) && leq(b, s)) ubs[a * n_ + b].push_back(s);
    auto betw = [&](int a, int b, int top, std::vector<int>& out) {
      out.clear();
      for (int s : ubs[a * n_ + b])
        if (leq(s, top)) out.push_back(s);
    };
    std::vector<int> l01, l02, l03, l12, l13, l23, lt;
    for (int sup = 0; sup < n_; ++sup) {
      std::vector<int> below;
      for (int v = 0; v < n_; ++v)
        if (leq(v, sup)) below.push_back(v);
      for (int v0 : below)
        for (int v1 : below)
          for (int v2 : below) {
            betw(v0, v1, sup, l01);
            betw(v0, v2, sup, l02);
            betw(v1, v2, sup, l12);
            for (int s01 : l01)
              for (int s02 : l02)
                for (int s12 : l12)
                  for (int t012 : below) {
                    if (!(leq(s01, t012) && leq(s02, t012) && leq(s12, t012))) continue;
                    const int f3 = index.at({v0, v1, v2, s01, s02, s12, t012});
                    for (int v3 : below) {
                      betw(v0, v3, sup, l03);
                      betw(v1, v3, sup, l13);
                      betw(v2, v3, sup, l23);
                      for (int s03 : l03)
                        for (int s13 : l13)
                          for (int s23 : l23)
                            for (int t013 : below) {
                              if (!(leq(s01, t013) && leq(s03, t013) && leq(s13, t013))) continue;
                              const int f2 = index.at({v0, v1, v3, s01, s03, s13, t013});
                              for (int t023 : below) {
                                if (!(leq(s02, t023) && leq(s03, t023) && leq(s23, t023))) continue;
                                const int f1 = index.at({v0, v2, v3, s02, s03, s23, t023});
                                for (int t123 : below) {
                                  if (!(leq(s12, t123) && leq(s13, t123) && leq(s23, t123))) continue;
                                  const int f0 = index.at({v1, v2, v3, s12, s13, s23, t123});
                                  s3_.push_back({f0, f1, f2, f3, sup});
                                }
                              }
                            }
                    }
                  }
          }
    }
  });
}

const std::vector<Simplex1>& Poset::sigma1() const { build_sigma1(); return s1_; }
const std::vector<Simplex2>& Poset::sigma2() const { build_sigma2(); return s2_; }
const std::vector<Simplex3>& Poset::sigma3() const { build_sigma3(); return s3_; }

std::size_t Poset::simplex_count(int n) const {
  switch (n) {
    case 0: return static_cast<std::size_t>(n_);
    case 1: return sigma1().size();
    case 2: return sigma2().size();
    case 3: return sigma3().size();
    default: throw std::invalid_argument("simplices: degree > 3 unsupported");
  }
}

int Poset::sigma1_id(int d0, int d1, int sup) const {
  build_sigma1();
  auto it = s1_index_.find({d0, d1, sup});
  return it == s1_index_.end() ? -1 : it->second;
}

int Poset::iota_id(int a) const { build_sigma1(); return iota_[a]; }
int Poset::reverse_id(int b) const { build_sigma1(); return rev_[b]; }

std::array<int, 3> Poset::sigma2_vertices(int c) const {
  const auto& cc = sigma2()[c];
  const auto& e2 = sigma1()[cc.f2]; // v0 -> v1
  const auto& e0 = sigma1()[cc.f0]; // v1 -> v2
  return {e2.d1, e2.d0, e0.d0};
}

int Poset::sigma2_d01(int c) const {
  const auto& cc = sigma2()[c];
  return sigma1()[cc.f1].d0;
}

const std::vector<int>& Poset::nerve1() const { build_sigma1(); return nerve1_; }
const std::vector<int>& Poset::nerve1_nondeg() const { build_sigma1(); return nerve1_nondeg_; }
const std::vector<int>& Poset::nerve2_nondeg() const { build_sigma2(); return nerve2_nondeg_; }

int Poset::path_start(const Path& p) const { return sigma1()[p.steps.front()].d1; }
int Poset::path_end(const Path& p) const { return sigma1()[p.steps.back()].d0; }

bool Poset::path_valid(const Path& p) const {
  if (p.steps.empty()) return false;
  for (std::size_t k = 0; k + 1 < p.steps.size(); ++k)
    if (sigma1()[p.steps[k]].d0 != sigma1()[p.steps[k + 1]].d1) return false;
  return true;
}

Path Poset::compose(const Path& later, const Path& first) const {
  if (path_end(first) != path_start(later)) throw std::invalid_argument("compose: endpoint mismatch");
  Path r = first;
  r.steps.insert(r.steps.end(), later.steps.begin(), later.steps.end());
  return r;
}

Path Poset::reverse(const Path& p) const {
  Path r;
  r.steps.reserve(p.steps.size());
  for (auto it = p.steps.rbegin(); it != p.steps.rend(); ++it) r.steps.push_back(reverse_id(*it));
  return r;
}

std::vector<Path> Poset::elementary_moves(const Path& p) const {
  build_sigma2();
  std::set<std::vector<int>> seen;
  std::vector<Path> out;
  auto push = [&](Path q) {
    if (seen.insert(q.steps).second) out.push_back(std::move(q));
  };
  const auto& s1 = sigma1();
  // (M1) insert a constant simplex at every position
  for (std::size_t k = 0; k <= p.steps.size(); ++k) {
    int at = (k == 0) ? path_start(p) : s1[p.steps[k - 1]].d0;
    Path q = p;
    q.steps.insert(q.steps.begin() + static_cast<std::ptrdiff_t>(k), iota_id(at));
    push(std::move(q));
  }
  // (M1) delete constant steps
  if (p.steps.size() > 1)
    for (std::size_t k = 0; k < p.steps.size(); ++k) {
      const auto& s = s1[p.steps[k]];
      if (s.d0 == s.d1 && s.d1 == s.sup) {
        Path q = p;
        q.steps.erase(q.steps.begin() + static_cast<std::ptrdiff_t>(k));
        push(std::move(q));
      }
    }
  // (M2) collapse a consecutive pair to the long side of a 2-simplex
  for (std::size_t k = 0; k + 1 < p.steps.size(); ++k) {
    for (std::size_t c = 0; c < s2_.size(); ++c) {
      const auto& cc = s2_[c];
      if (cc.f2 == p.steps[k] && cc.f0 == p.steps[k + 1]) {
        Path q = p;
        q.steps.erase(q.steps.begin() + static_cast<std::ptrdiff_t>(k + 1));
        q.steps[k] = cc.f1;
        push(std::move(q));
      }
    }
  }
  // (M2) expand one step into the two short sides
  for (std::size_t k = 0; k < p.steps.size(); ++k) {
    auto it = long_to_c_.find(p.steps[k]);
    if (it == long_to_c_.end()) continue;
    for (int c : it->second) {
      const auto& cc = s2_[c];
      Path q = p;
      q.steps[k] = cc.f2;
      q.steps.insert(q.steps.begin() + static_cast<std::ptrdiff_t>(k + 1), cc.f0);
      push(std::move(q));
    }
  }
  return out;
}

Path Poset::reduce_path(const Path& p) const {
  build_sigma2();
  const auto& s1 = sigma1();
  Path q = p;
  bool changed = true;
  while (changed) {
    changed = false;
    // delete constant steps
    if (q.steps.size() > 1) {
      for (std::size_t k = 0; k < q.steps.size(); ++k) {
        const auto& s = s1[q.steps[k]];
        if (s.d0 == s.d1 && s.d1 == s.sup) {
          q.steps.erase(q.steps.begin() + static_cast<std::ptrdiff_t>(k));
          changed = true;
          break;
        }
      }
      if (changed) continue;
    }
    // collapse the leftmost collapsible pair
    for (std::size_t k = 0; k + 1 < q.steps.size() && !changed; ++k) {
      auto it = pair_to_c_.find({q.steps[k], q.steps[k + 1]});
      if (it != pair_to_c_.end()) {
        const auto& cc = s2_[it->second];
        q.steps.erase(q.steps.begin() + static_cast<std::ptrdiff_t>(k + 1));
        q.steps[k] = cc.f1;
        changed = true;
      }
    }
    if (changed) continue;
    // trade a degenerate loop step for the constant simplex at its element
    for (std::size_t k = 0; k < q.steps.size() && !changed; ++k) {
      const auto& s = s1[q.steps[k]];
      if (s.d0 == s.d1 && s.sup != s.d0) {
        q.steps[k] = iota_id(s.d0);
        changed = true;
      }
    }
  }
  return q;
}

std::optional<bool> Poset::homotopic_bounded(const Path& p, const Path& q, int max_expansions) const {
  if (path_start(p) != path_start(q) || path_end(p) != path_end(q)) return false;
  Path rp = reduce_path(p), rq = reduce_path(q);
  if (rp.steps == rq.steps) return true;
  // bounded bidirectional-ish search from rp toward rq
  std::set<std::vector<int>> visited{rp.steps};
  std::deque<Path> frontier{rp};
  int expansions = 0;
  const std::size_t len_cap = std::max(rp.steps.size(), rq.steps.size()) + 4;
  while (!frontier.empty() && expansions < max_expansions) {
    Path cur = frontier.front();
    frontier.pop_front();
    ++expansions;
    for (auto& nb : elementary_moves(cur)) {
      if (nb.steps.size() > len_cap) continue;
      if (nb.steps == rq.steps || reduce_path(nb).steps == rq.steps) return true;
      if (visited.insert(nb.steps).second) frontier.push_back(std::move(nb));
    }
  }
  return std::nullopt;
}

// --- frames ------------------------------------------------------------------

PathFrame build_path_frame(const Poset& p, int base, int variant) {
  if (!p.connected()) throw std::invalid_argument("path frame: poset not connected");
  const int n = p.size();
  std::vector<int> parent(n, -1), parent_step(n, -1);
  std::deque<int> queue{base};
  std::vector<char> seen(n, 0);
  seen[base] = 1;
  while (!queue.empty()) {
    int x = queue.front();
    queue.pop_front();
    std::vector<int> nbrs;
    for (int y = 0; y < n; ++y)
      if (y != x && (p.leq(x, y) || p.leq(y, x))) nbrs.push_back(y);
    if (variant == 1) std::reverse(nbrs.begin(), nbrs.end());
    for (int y : nbrs) {
      if (seen[y]) continue;
      seen[y] = 1;
      parent[y] = x;
      // step x -> y
      parent_step[y] = p.leq(x, y) ? p.sigma1_id(y, x, y) : p.sigma1_id(y, x, x);
      queue.push_back(y);
    }
  }
  PathFrame f;
  f.base = base;
  f.to.resize(n);
  f.to[base] = Path{{p.iota_id(base)}};
  for (int o = 0; o < n; ++o) {
    if (o == base) continue;
    std::vector<int> steps;
    for (int x = o; x != base; x = parent[x]) steps.push_back(parent_step[x]);
    std::reverse(steps.begin(), steps.end());
    f.to[o] = Path{std::move(steps)};
  }
  return f;
}

// --- words -------------------------------------------------------------------

Word free_reduce(Word w) {
  Word out;
  for (int x : w) {
    if (!out.empty() && out.back() == -x) out.pop_back();
    else out.push_back(x);
  }
  return out;
}

Word word_inverse(const Word& w) {
  Word out;
  out.reserve(w.size());
  for (auto it = w.rbegin(); it != w.rend(); ++it) out.push_back(-*it);
  return out;
}

Word word_concat(const Word& a, const Word& b) {
  Word out = a;
  out.insert(out.end(), b.begin(), b.end());
  return free_reduce(std::move(out));
}

// --- pi1 ----------------------------------------------------------------------

Pi1Presentation pi1_presentation(PosetPtr ptr, int a) {
  const Poset& p = *ptr;
  if (!p.connected()) throw std::invalid_argument("pi1: poset not connected");
  PathFrame frame = build_path_frame(p, a, 0);

  // tree edge set from the frame, keyed (poset-lower, poset-higher)
  std::set<std::pair<int, int>> tree;
  for (int o = 0; o < p.size(); ++o)
    for (int b : frame.to[o].steps) {
      const auto& s = p.sigma1()[b];
      if (s.d0 != s.d1)
        tree.insert(p.leq(s.d1, s.d0) ? std::make_pair(s.d1, s.d0) : std::make_pair(s.d0, s.d1));
    }

  // generator candidates: non-tree nondegenerate nerve edges
  std::vector<std::pair<int, int>> gens; // (lo, hi), lo < hi
  std::map<std::pair<int, int>, int> gen_index;
  for (int b : p.nerve1_nondeg()) {
    const auto& s = p.sigma1()[b];
    std::pair<int, int> key{s.d1, s.d0};
    if (!tree.count(key)) {
      gen_index[key] = static_cast<int>(gens.size());
      gens.push_back(key);
    }
  }

  // relations from nondegenerate nerve triangles x0 < x1 < x2:
  // e(x1,x2) e(x0,x1) e(x0,x2)^-1 with tree edges dropping out
  auto letter = [&](int lo, int hi) -> Word {
    auto it = gen_index.find({lo, hi});
    if (it == gen_index.end()) return {};
    return {it->second + 1};
  };
  std::vector<Word> rels;
  for (int c : p.nerve2_nondeg()) {
    auto [x0, x1, x2] = p.sigma2_vertices(c);
    Word w = word_concat(word_concat(letter(x1, x2), letter(x0, x1)), word_inverse(letter(x0, x2)));
    if (!w.empty()) rels.push_back(std::move(w));
  }

  // single-occurrence elimination (Tietze)
  std::vector<char> alive(gens.size(), 1);
  bool progress = true;
  while (progress) {
    progress = false;
    for (std::size_t r = 0; r < rels.size() && !progress; ++r) {
      const Word& w = rels[r];
      std::map<int, int> occ;
      for (int x : w) occ[std::abs(x)]++;
      for (auto [g, cnt] : occ) {
        if (cnt != 1) continue;
        // solve w = alpha g^eps beta = 1  =>  g^eps = alpha^-1 beta^-1
        std::size_t pos = 0;
        while (std::abs(w[pos]) != g) ++pos;
        Word alpha(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(pos));
        Word beta(w.begin() + static_cast<std::ptrdiff_t>(pos) + 1, w.end());
        Word sol = word_concat(word_inverse(alpha), word_inverse(beta)); // = g^eps
        if (w[pos] < 0) sol = word_inverse(sol);                          // = g
        // substitute into every other relation
        std::vector<Word> next;
        for (std::size_t r2 = 0; r2 < rels.size(); ++r2) {
          if (r2 == r) continue;
          Word nw;
          for (int x : rels[r2]) {
            if (std::abs(x) == g) {
              Word piece = (x > 0) ? sol : word_inverse(sol);
              nw.insert(nw.end(), piece.begin(), piece.end());
            } else nw.push_back(x);
          }
          nw = free_reduce(std::move(nw));
          if (!nw.empty()) next.push_back(std::move(nw));
        }
        rels = std::move(next);
        alive[g - 1] = 0;
        progress = true;
        break;
      }
    }
  }

  // reindex surviving generators
  std::vector<int> newidx(gens.size(), -1);
  std::vector<std::pair<int, int>> kept;
  for (std::size_t k = 0; k < gens.size(); ++k)
    if (alive[k]) {
      newidx[k] = static_cast<int>(kept.size());
      kept.push_back(gens[k]);
    }
  for (auto& w : rels)
    for (int& x : w) {
      int g = std::abs(x) - 1;
      if (newidx[g] < 0) throw std::logic_error("pi1: eliminated generator survived in relation");
      x = (x > 0 ? 1 : -1) * (newidx[g] + 1);
    }

  Pi1Presentation out;
  out.poset_ = ptr;
  out.base_ = a;
  out.gen_edges_ = kept;
  out.relations_ = rels;
  out.backend_ = Pi1Presentation::Backend::Free;
  for (auto [lo, hi] : kept) {
    // tree-completed loop: frame to lo, up-edge lo->hi, frame back from hi
    Path up{{p.sigma1_id(hi, lo, hi)}};
    Path loop = p.compose(p.reverse(frame.to[hi]), p.compose(up, frame.to[lo]));
    out.gen_loops_.push_back(std::move(loop));
  }
  return out;
}

void Pi1Presentation::set_backend_free() {
  if (!relations_.empty())
    throw std::invalid_argument("pi1 backend: free backend requires no surviving relations");
  backend_ = Backend::Free;
}

void Pi1Presentation::set_backend_finite(GroupPtr q, std::vector<Elem> gen_images) {
  if (static_cast<int>(gen_images.size()) != rank())
    throw std::invalid_argument("pi1 backend: image count mismatch");
  // relations must hold under the images
  for (const auto& w : relations_) {
    Elem v = q->identity();
    for (int x : w) {
      Elem g = gen_images[std::abs(x) - 1];
      v = q->mul(v, x > 0 ? g : q->inv(g));
    }
    if (v != q->identity())
      throw std::invalid_argument("pi1 backend: generator images violate a relation");
  }
  // images must generate Q
  if (static_cast<int>(generated_subgroup(*q, gen_images).size()) != q->order())
    throw std::invalid_argument("pi1 backend: images do not generate the group");
  Q_ = std::move(q);
  gen_images_ = std::move(gen_images);
  // canonical words by BFS over the Cayley graph (shortest, generator order)
  canonical_.assign(Q_->order(), Word{});
  std::vector<char> seen(Q_->order(), 0);
  std::deque<Elem> queue{Q_->identity()};
  seen[Q_->identity()] = 1;
  while (!queue.empty()) {
    Elem x = queue.front();
    queue.pop_front();
    for (int k = 0; k < rank(); ++k)
      for (int sgn : {+1, -1}) {
        Elem g = gen_images_[k];
        Elem y = Q_->mul(x, sgn > 0 ? g : Q_->inv(g));
        if (!seen[y]) {
          seen[y] = 1;
          canonical_[y] = canonical_[x];
          canonical_[y].push_back(sgn * (k + 1));
          queue.push_back(y);
        }
      }
  }
  backend_ = Backend::Finite;
}

Word Pi1Presentation::normal_form(const Word& w) const {
  for (int x : w)
    if (x == 0 || std::abs(x) > rank()) throw std::invalid_argument("word: unknown generator");
  if (backend_ == Backend::Free) return free_reduce(w);
  Elem v = Q_->identity();
  for (int x : w) {
    Elem g = gen_images_[std::abs(x) - 1];
    v = Q_->mul(v, x > 0 ? g : Q_->inv(g));
  }
  return canonical_[v];
}

const Word& Pi1Presentation::canonical_word(Elem q) const {
  if (backend_ != Backend::Finite) throw std::logic_error("canonical_word: finite backend only");
  return canonical_[q];
}

Path Pi1Presentation::loop_of_word(const Word& w) const {
  const Poset& p = *poset_;
  Word nf = normal_form(w);
  if (nf.empty()) return p.constant_path(base_);
  Path out;
  bool started = false;
  for (int x : nf) {
    const Path& gl = gen_loops_[std::abs(x) - 1];
    Path piece = (x > 0) ? gl : p.reverse(gl);
    out = started ? p.compose(piece, out) : piece;
    started = true;
  }
  return out;
}

// --- fixtures ------------------------------------------------------------------

PosetPtr chain_poset(int k) {
  std::vector<std::string> labels(k);
  for (int i = 0; i < k; ++i) labels[i] = std::string(1, static_cast<char>('a' + i));
  std::vector<std::pair<int, int>> covers;
  for (int i = 0; i + 1 < k; ++i) covers.push_back({i, i + 1});
  return std::make_shared<Poset>(std::move(labels), covers);
}

PosetPtr circle_poset(int k) {
  std::vector<std::string> labels(2 * k);
  for (int j = 0; j < k; ++j) labels[j] = "u" + std::to_string(j + 1);
  for (int j = 0; j < k; ++j) labels[k + j] = "i" + std::to_string(j + 1);
  std::vector<std::pair<int, int>> covers;
  for (int j = 0; j < k; ++j) {
    covers.push_back({k + j, j});
    covers.push_back({k + j, (j + 1) % k});
  }
  return std::make_shared<Poset>(std::move(labels), covers);
}

} // namespace gerbes
