#pragma once

#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "gerbes/fingroup.hpp"

namespace gerbes {

/// Combinatorial 1-simplex (d0, d1, support): a line from d1 to d0, both
/// below the support element.
struct Simplex1 {
  int d0, d1, sup;
  bool operator==(const Simplex1&) const = default;
  auto operator<=>(const Simplex1&) const = default;
};

/// 2-simplex as faces (indices into the Sigma1 list) plus support.
/// f0/f1/f2 are the sides opposite vertex 0/1/2; f1 is the long side.
struct Simplex2 {
  int f0, f1, f2, sup;
};

/// 3-simplex as faces (indices into the Sigma2 list) plus support.
struct Simplex3 {
  int f0, f1, f2, f3, sup;
};

/// Composable sequence of 1-simplices, stored in travel order
/// (steps.front() is traversed first). Never empty.
struct Path {
  std::vector<int> steps; // Sigma1 ids
};

class Poset;
using PosetPtr = std::shared_ptr<const Poset>;

/// Finite poset with cached simplicial data up to degree 3.
class Poset {
public:
  /// Build from labels and covering relations (pairs lo < hi as indices);
  /// the full order is the reflexive-transitive closure.
  Poset(std::vector<std::string> labels, const std::vector<std::pair<int, int>>& covers);

  int size() const { return n_; }
  bool leq(int a, int b) const { return leq_[a * n_ + b] != 0; }
  const std::string& label(int a) const { return labels_[a]; }
  std::optional<int> elem_by_label(const std::string& s) const;
  bool connected() const { return connected_; }

  // --- simplicial sets -----------------------------------------------------
  const std::vector<Simplex1>& sigma1() const;
  const std::vector<Simplex2>& sigma2() const;
  const std::vector<Simplex3>& sigma3() const;
  /// Degree-n count; n > 3 is rejected.
  std::size_t simplex_count(int n) const;

  int sigma1_id(int d0, int d1, int sup) const; // -1 if absent
  int iota_id(int a) const;                     // id of (a,a,a)
  int reverse_id(int b) const;                  // id of the opposite 1-simplex

  /// Vertices of a 2-simplex (v0, v1, v2); f2 runs v0->v1, f0 runs v1->v2,
  /// f1 runs v0->v2.
  std::array<int, 3> sigma2_vertices(int c) const;
  /// d01 = d0 of face f1 (the common end vertex v2).
  int sigma2_d01(int c) const;

  /// Nerve: ids of Sigma1 elements (d1 <= d0, sup = d0); nondegenerate means
  /// d1 < d0.
  const std::vector<int>& nerve1() const;
  const std::vector<int>& nerve1_nondeg() const;
  /// Nondegenerate nerve triangles as Sigma2 ids (chains x0 < x1 < x2 with
  /// minimal supports).
  const std::vector<int>& nerve2_nondeg() const;

  // --- paths ---------------------------------------------------------------
  int path_start(const Path& p) const;
  int path_end(const Path& p) const;
  bool path_valid(const Path& p) const;
  Path compose(const Path& later, const Path& first) const; // later * first
  Path reverse(const Path& p) const;
  Path constant_path(int a) const { return Path{{iota_id(a)}}; }

  /// One-step homotopy neighbors: insert/delete a constant simplex, or trade
  /// the two short sides of a 2-simplex for the long one (either direction).
  std::vector<Path> elementary_moves(const Path& p) const;

  /// Greedy shrink via constant-step deletion and 2-simplex collapses;
  /// used by homotopy assertions on fixtures.
  Path reduce_path(const Path& p) const;
  /// Decide equivalence by reduction plus a bounded neighbor search; nullopt
  /// when the bound is exhausted without an answer.
  std::optional<bool> homotopic_bounded(const Path& p, const Path& q, int max_expansions = 20000) const;

private:
  void build_sigma1() const;
  void build_sigma2() const;
  void build_sigma3() const;

  int n_;
  std::vector<std::string> labels_;
  std::vector<char> leq_;
  bool connected_ = false;

  mutable std::once_flag once1_, once2_, once3_;
  mutable std::vector<Simplex1> s1_;
  mutable std::map<std::tuple<int, int, int>, int> s1_index_;
  mutable std::vector<int> iota_, rev_;
  mutable std::vector<int> nerve1_, nerve1_nondeg_;
  mutable std::vector<Simplex2> s2_;
  mutable std::vector<int> nerve2_nondeg_;
  // collapse indices: pair (f2, f0) -> smallest c; f1 -> list of c
  mutable std::map<std::pair<int, int>, int> pair_to_c_;
  mutable std::map<int, std::vector<int>> long_to_c_;
  mutable std::vector<Simplex3> s3_;

  friend class PathFrameBuilder;
};

/// Chosen path from the base to every element (Eq-of-frames style data).
struct PathFrame {
  int base = 0;
  std::vector<Path> to; // to[o] : base -> o, to[base] = constant path
};

/// BFS frame; variant flips the neighbor visiting order so tests can compare
/// two genuinely different frames.
PathFrame build_path_frame(const Poset& p, int base, int variant = 0);

// --- fundamental group -----------------------------------------------------

/// Word over presentation generators: letters +k / -k are generator k-1 and
/// its inverse (1-based to keep 0 unused).
using Word = std::vector<int>;

Word free_reduce(Word w);
Word word_inverse(const Word& w);
Word word_concat(const Word& a, const Word& b);

/// Edge-path presentation of pi1 of the nerve, after spanning-tree reduction
/// and single-occurrence generator elimination.
class Pi1Presentation {
public:
  enum class Backend { Free, Finite };

  int base() const { return base_; }
  const PosetPtr& poset() const { return poset_; }
  int rank() const { return static_cast<int>(gen_edges_.size()); }
  const std::vector<std::pair<int, int>>& generator_edges() const { return gen_edges_; }
  const std::vector<Word>& relations() const { return relations_; }

  Backend backend() const { return backend_; }
  /// Free backend is valid only when no relations survive.
  void set_backend_free();
  /// Finite backend: Q with generator images; verified to satisfy all
  /// relations and to generate Q.
  void set_backend_finite(GroupPtr q, std::vector<Elem> gen_images);
  const GroupPtr& finite_group() const { return Q_; }
  const std::vector<Elem>& generator_images() const { return gen_images_; }

  /// Normal form of a word: free reduction, or the canonical word of its
  /// group element under the finite backend.
  Word normal_form(const Word& w) const;
  /// Canonical word of a finite-backend group element.
  const Word& canonical_word(Elem q) const;

  /// Loop at the base realizing a generator (tree-completed edge loop).
  const Path& generator_loop(int k) const { return gen_loops_[k]; }
  /// Loop realizing a word; the empty word gives the constant path.
  Path loop_of_word(const Word& w) const;

  friend Pi1Presentation pi1_presentation(PosetPtr p, int a);

private:
  PosetPtr poset_;
  int base_ = 0;
  std::vector<std::pair<int, int>> gen_edges_;
  std::vector<Path> gen_loops_;
  std::vector<Word> relations_;
  Backend backend_ = Backend::Free;
  GroupPtr Q_;
  std::vector<Elem> gen_images_;
  std::vector<Word> canonical_;
};

/// Presentation of the edge-path group of the nerve based at a; requires a
/// connected poset.
Pi1Presentation pi1_presentation(PosetPtr p, int a);

// --- fixtures --------------------------------------------------------------

/// Chain a0 <= a1 <= ... <= a_{k-1}.
PosetPtr chain_poset(int k);
/// Circle-like poset with k upper and k lower elements, i_j <= u_j, u_{j+1}.
PosetPtr circle_poset(int k);

} // namespace gerbes
