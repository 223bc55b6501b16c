#include "gerbes/cstar.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <random>
#include <stdexcept>

namespace gerbes {

namespace {

Eigen::VectorXcd flatten(const Mtx& m) {
  return Eigen::Map<const Eigen::VectorXcd>(m.data(), m.size());
}

std::string word_str(const PiGroup& pi, const Word& w) { return pi.label(w); }

} // namespace

// --- BlockMat -------------------------------------------------------------------

BlockMat BlockMat::operator+(const BlockMat& o) const {
  BlockMat r = *this;
  for (std::size_t k = 0; k < blocks.size(); ++k) r.blocks[k] += o.blocks[k];
  return r;
}

BlockMat BlockMat::operator-(const BlockMat& o) const {
  BlockMat r = *this;
  for (std::size_t k = 0; k < blocks.size(); ++k) r.blocks[k] -= o.blocks[k];
  return r;
}

BlockMat BlockMat::operator*(const BlockMat& o) const {
  BlockMat r = *this;
  for (std::size_t k = 0; k < blocks.size(); ++k) r.blocks[k] = blocks[k] * o.blocks[k];
  return r;
}

BlockMat BlockMat::operator*(Cplx s) const {
  BlockMat r = *this;
  for (auto& b : r.blocks) b *= s;
  return r;
}

BlockMat BlockMat::adjoint() const {
  BlockMat r = *this;
  for (auto& b : r.blocks) b = b.adjoint().eval();
  return r;
}

double BlockMat::norm() const {
  double s = 0;
  for (const auto& b : blocks) s += b.squaredNorm();
  return std::sqrt(s);
}

Mtx BlockMat::dense() const {
  int n = 0;
  for (const auto& b : blocks) n += static_cast<int>(b.rows());
  Mtx d = Mtx::Zero(n, n);
  int at = 0;
  for (const auto& b : blocks) {
    d.block(at, at, b.rows(), b.cols()) = b;
    at += static_cast<int>(b.rows());
  }
  return d;
}

// --- MatrixAlgebra ---------------------------------------------------------------

MatrixAlgebra::MatrixAlgebra(std::vector<int> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) throw std::invalid_argument("algebra: no blocks");
  for (int d : dims_) {
    if (d <= 0) throw std::invalid_argument("algebra: nonpositive block");
    total_ += d;
    linear_ += d * d;
  }
  for (std::size_t k = 0; k < dims_.size(); ++k)
    for (int j = 0; j < dims_[k]; ++j)
      for (int i = 0; i < dims_[k]; ++i) {
        BlockMat e = zero();
        e.blocks[k](i, j) = 1.0;
        basis_.push_back(std::move(e));
      }
}

BlockMat MatrixAlgebra::zero() const {
  BlockMat m;
  for (int d : dims_) m.blocks.push_back(Mtx::Zero(d, d));
  return m;
}

BlockMat MatrixAlgebra::identity() const {
  BlockMat m;
  for (int d : dims_) m.blocks.push_back(Mtx::Identity(d, d));
  return m;
}

Eigen::VectorXcd MatrixAlgebra::vec(const BlockMat& m) const {
  Eigen::VectorXcd v(linear_);
  int at = 0;
  for (const auto& b : m.blocks) {
    v.segment(at, b.size()) = Eigen::Map<const Eigen::VectorXcd>(b.data(), b.size());
    at += static_cast<int>(b.size());
  }
  return v;
}

BlockMat MatrixAlgebra::unvec(const Eigen::VectorXcd& v) const {
  BlockMat m = zero();
  int at = 0;
  for (auto& b : m.blocks) {
    b = Eigen::Map<const Mtx>(v.data() + at, b.rows(), b.cols());
    at += static_cast<int>(b.size());
  }
  return m;
}

bool MatrixAlgebra::shape_matches(const BlockMat& m) const {
  if (m.blocks.size() != dims_.size()) return false;
  for (std::size_t k = 0; k < dims_.size(); ++k)
    if (m.blocks[k].rows() != dims_[k] || m.blocks[k].cols() != dims_[k]) return false;
  return true;
}

// --- StarMap ----------------------------------------------------------------------

StarMap::StarMap(MatrixAlgebraPtr src, MatrixAlgebraPtr dst,
                 const std::function<BlockMat(const BlockMat&)>& fn)
    : src_(std::move(src)), dst_(std::move(dst)) {
  L_.resize(dst_->linear_dim(), src_->linear_dim());
  for (int j = 0; j < src_->linear_dim(); ++j) L_.col(j) = dst_->vec(fn(src_->basis()[j]));
}

StarMap StarMap::identity(MatrixAlgebraPtr a) {
  return StarMap(a, a, [](const BlockMat& x) { return x; });
}

StarMap StarMap::inner(MatrixAlgebraPtr a, const BlockMat& u) {
  BlockMat us = u.adjoint();
  return StarMap(a, a, [&u, &us](const BlockMat& x) { return u * x * us; });
}

StarMap StarMap::block_permutation(MatrixAlgebraPtr a, const std::vector<int>& pre,
                                   const std::vector<Mtx>& unitaries) {
  for (std::size_t i = 0; i < pre.size(); ++i)
    if (a->dims()[i] != a->dims()[pre[i]])
      throw std::invalid_argument("block permutation: size mismatch");
  return StarMap(a, a, [&](const BlockMat& x) {
    BlockMat r = a->zero();
    for (std::size_t i = 0; i < pre.size(); ++i)
      r.blocks[i] = unitaries[i] * x.blocks[pre[i]] * unitaries[i].adjoint();
    return r;
  });
}

StarMap StarMap::from_matrix(MatrixAlgebraPtr src, MatrixAlgebraPtr dst, Mtx L) {
  if (L.rows() != dst->linear_dim() || L.cols() != src->linear_dim())
    throw std::invalid_argument("star map: matrix shape mismatch");
  StarMap r;
  r.src_ = std::move(src);
  r.dst_ = std::move(dst);
  r.L_ = std::move(L);
  return r;
}

BlockMat StarMap::operator()(const BlockMat& x) const { return dst_->unvec(L_ * src_->vec(x)); }

Report StarMap::verify(double tol) const {
  Report r;
  const auto& B = src_->basis();
  if (((*this)(src_->identity()) - dst_->identity()).norm() > tol) r.add("1", "map is not unital");
  for (std::size_t i = 0; i < B.size(); ++i) {
    BlockMat fi = (*this)(B[i]);
    if (((*this)(B[i].adjoint()) - fi.adjoint()).norm() > tol)
      r.add("basis " + std::to_string(i), "map does not preserve *");
    for (std::size_t j = 0; j < B.size(); ++j) {
      double res = ((*this)(B[i] * B[j]) - fi * (*this)(B[j])).norm();
      if (res > tol)
        r.add("basis (" + std::to_string(i) + "," + std::to_string(j) + ")",
              "map is not multiplicative", res);
    }
  }
  return r;
}

bool StarMap::is_bijective(double tol) const {
  if (L_.rows() != L_.cols()) return false;
  Eigen::JacobiSVD<Mtx> svd(L_);
  return svd.singularValues()(svd.singularValues().size() - 1) > tol;
}

StarMap StarMap::inverse() const {
  if (!is_bijective()) throw std::invalid_argument("star map: not invertible");
  StarMap r;
  r.src_ = dst_;
  r.dst_ = src_;
  r.L_ = L_.inverse();
  return r;
}

StarMap StarMap::compose(const StarMap& later, const StarMap& first) {
  if (later.src_->linear_dim() != first.dst_->linear_dim())
    throw std::invalid_argument("star map compose: domain mismatch");
  StarMap r;
  r.src_ = first.src_;
  r.dst_ = later.dst_;
  r.L_ = later.L_ * first.L_;
  return r;
}

double StarMap::distance(const StarMap& a, const StarMap& b) {
  return (a.L_ - b.L_).norm();
}

// --- TwistedSystem -------------------------------------------------------------------

TwistedSystem::TwistedSystem(MatrixAlgebraPtr A, GroupPtr G, std::vector<StarMap> alpha,
                             PiGroup pi, std::function<StarMap(const Word&)> nu,
                             std::function<Elem(const Word&, const Word&)> gamma)
    : A_(std::move(A)), G_(std::move(G)), alpha_(std::move(alpha)), pi_(std::move(pi)),
      nu_fn_(std::move(nu)), gamma_fn_(std::move(gamma)) {
  if (static_cast<int>(alpha_.size()) != G_->order())
    throw std::invalid_argument("system: alpha table size mismatch");
  // alpha must be a homomorphism into Aut A
  for (Elem g = 0; g < G_->order(); ++g)
    for (Elem h = 0; h < G_->order(); ++h)
      if (StarMap::distance(alpha_[G_->mul(g, h)], StarMap::compose(alpha_[g], alpha_[h])) > 1e-9)
        throw std::invalid_argument("system: alpha is not a homomorphism");
}

const StarMap& TwistedSystem::nu(const Word& l) const {
  Word n = pi_.normal(l);
  std::scoped_lock lk(memo_->mu);
  auto it = memo_->nu.find(n);
  if (it != memo_->nu.end()) return it->second;
  auto [jt, _] = memo_->nu.emplace(n, nu_fn_(n));
  return jt->second;
}

Elem TwistedSystem::gamma(const Word& l, const Word& m) const {
  return gamma_fn_(pi_.normal(l), pi_.normal(m));
}

void TwistedSystem::set_embedding(std::vector<BlockMat> phi) {
  if (static_cast<int>(phi.size()) != G_->order())
    throw std::invalid_argument("embedding: size mismatch");
  for (Elem g = 0; g < G_->order(); ++g) {
    const BlockMat& u = phi[g];
    if ((u * u.adjoint() - A_->identity()).norm() > 1e-10)
      throw std::invalid_argument("embedding: image not unitary");
    for (Elem h = 0; h < G_->order(); ++h)
      if ((phi[G_->mul(g, h)] - phi[g] * phi[h]).norm() > 1e-10)
        throw std::invalid_argument("embedding: not multiplicative");
    if (StarMap::distance(StarMap::inner(A_, u), alpha_[g]) > 1e-9)
      throw std::invalid_argument("embedding: ad phi differs from alpha");
  }
  embed_ = std::move(phi);
}

BlockMat TwistedSystem::embedded(Elem g) const {
  if (!embed_) throw std::logic_error("embedded: no unitary embedding present");
  return (*embed_)[g];
}

void TwistedSystem::set_spatial_u(std::function<BlockMat(const Word&)> u) {
  if ((u({}) - A_->identity()).norm() > 1e-10)
    throw std::invalid_argument("spatial u: not unital");
  spat_u_ = std::move(u);
}

SystemCheck check_system(const TwistedSystem& s, double tol, int len_bound) {
  SystemCheck out;
  Report& r = out.report;
  const PiGroup& pi = s.pi();
  std::vector<Word> dom = pi.elements(len_bound);
  if (!pi.is_finite())
    r.note("free group handle: equations sampled on words of length <= " +
           std::to_string(len_bound));

  if (StarMap::distance(s.nu({}), StarMap::identity(s.algebra())) > tol)
    r.add("1", "nu_1 != id");
  for (const auto& l : dom)
    for (const auto& m : dom) {
      double res = StarMap::distance(StarMap::compose(s.nu(l), s.nu(m)),
                                     StarMap::compose(s.alpha(s.gamma(l, m)), s.nu(pi.mul(l, m))));
      if (res > tol) {
        r.add("(" + word_str(pi, l) + "," + word_str(pi, m) + ")",
              "nu_l nu_m != alpha_gamma(l,m) nu_lm", res);
        if (!out.first_failure) out.first_failure = {l, m};
      }
    }

  if (s.structure()) {
    const auto& st = *s.structure();
    const FiniteGroup& N = *st.cm->N();
    if (st.lift({}) != N.identity()) r.add("1", "structure lift is not unital");
    for (const auto& l : dom) {
      if (StarMap::distance(st.alpha1[st.lift(l)], s.nu(l)) > tol)
        r.add(word_str(pi, l), "alpha1(lift(l)) != nu_l");
      for (const auto& m : dom) {
        Elem lhs = N.mul(st.lift(l), st.lift(m));
        Elem rhs = N.mul(st.cm->i_of(s.gamma(l, m)), st.lift(pi.mul(l, m)));
        if (lhs != rhs) r.add("(" + word_str(pi, l) + "," + word_str(pi, m) + ")",
                              "structure lift violates the cocycle identity");
      }
    }
  }

  // classification ladder
  out.cls = SystemClass::Generic;
  if (s.embedding()) {
    out.cls = SystemClass::Inner;
    bool bs = true;
    for (const auto& l : dom)
      for (const auto& m : dom)
        for (const auto& n : dom) {
          BlockMat lhs = s.embedded(s.gamma(l, m)) * s.embedded(s.gamma(pi.mul(l, m), n));
          BlockMat rhs = s.nu(l)(s.embedded(s.gamma(m, n))) * s.embedded(s.gamma(l, pi.mul(m, n)));
          if ((lhs - rhs).norm() > tol) { bs = false; goto bs_done; }
        }
  bs_done:
    if (bs) out.cls = SystemClass::BusbySmith;
    if (bs && s.spatial_u()) {
      const auto& u = *s.spatial_u();
      bool sp = true;
      for (const auto& l : dom) {
        if (StarMap::distance(s.nu(l), StarMap::inner(s.algebra(), u(l))) > tol) { sp = false; break; }
        for (const auto& m : dom) {
          BlockMat du = u(l) * u(m) * u(pi.mul(l, m)).adjoint();
          if ((du - s.embedded(s.gamma(l, m))).norm() > tol) { sp = false; break; }
        }
        if (!sp) break;
      }
      if (sp) out.cls = SystemClass::Spatial;
    }
  }
  return out;
}

TwistedSystem normalize_gamma(const TwistedSystem& s, double tol) {
  auto base = std::make_shared<TwistedSystem>(s);
  const GroupPtr G = s.group();
  auto gamma2 = [base, G](const Word& l, const Word& m) {
    Elem a = base->gamma(l, {});
    Elem b = base->gamma({}, {});
    Elem c = base->gamma({}, m);
    return G->mul(G->mul(G->mul(G->inv(a), b), G->inv(c)), base->gamma(l, m));
  };
  // the rewritten gamma implements the same family of automorphisms
  std::vector<Word> dom = s.pi().elements(3);
  for (const auto& l : dom)
    for (const auto& m : dom)
      if (StarMap::distance(s.alpha(gamma2(l, m)), s.alpha(s.gamma(l, m))) > tol)
        throw std::logic_error("normalize_gamma: alpha_gamma changed");
  std::vector<StarMap> alpha;
  for (Elem g = 0; g < s.group()->order(); ++g) alpha.push_back(s.alpha(g));
  TwistedSystem out(s.algebra(), s.group(), std::move(alpha), s.pi(),
                    [base](const Word& l) { return base->nu(l); }, gamma2);
  if (s.embedding()) out.set_embedding(*s.embedding());
  return out;
}

Report check_morphism_phi(const StarMap& eta, const GroupHom& phi, const TwistedSystem& s,
                          const TwistedSystem& s2, bool strong_gamma, double tol, int len_bound) {
  Report r;
  Report eta_ok = eta.verify(tol);
  for (const auto& v : eta_ok.violations()) r.add(v.where, "eta: " + v.what, v.residual);
  std::vector<Word> dom = s.pi().elements(len_bound);
  for (const auto& l : dom) {
    double res = StarMap::distance(StarMap::compose(eta, s.nu(l)), StarMap::compose(s2.nu(l), eta));
    if (res > tol) r.add(word_str(s.pi(), l), "eta nu_l != nu'_l eta", res);
  }
  for (Elem g = 0; g < s.group()->order(); ++g) {
    double res = StarMap::distance(StarMap::compose(eta, s.alpha(g)),
                                   StarMap::compose(s2.alpha(phi(g)), eta));
    if (res > tol) r.add("g=" + s.group()->label(g), "eta alpha_g != alpha'_phi(g) eta", res);
  }
  if (strong_gamma)
    for (const auto& l : dom)
      for (const auto& m : dom)
        if (phi(s.gamma(l, m)) != s2.gamma(l, m))
          r.add("(" + word_str(s.pi(), l) + "," + word_str(s.pi(), m) + ")",
                "phi(gamma(l,m)) != gamma'(l,m)");
  return r;
}

Report check_morphism_kappa(const StarMap& eta, const std::function<Elem(const Word&)>& kappa,
                            const TwistedSystem& s, const TwistedSystem& s2, bool check_ext_eq,
                            double tol, int len_bound) {
  Report r;
  if (s.group().get() != s2.group().get()) throw std::invalid_argument("eta_kappa: G differs");
  std::vector<Word> dom = s.pi().elements(len_bound);
  for (Elem g = 0; g < s.group()->order(); ++g) {
    double res = StarMap::distance(StarMap::compose(eta, s.alpha(g)),
                                   StarMap::compose(s2.alpha(g), eta));
    if (res > tol) r.add("g=" + s.group()->label(g), "eta alpha_g != alpha'_g eta", res);
  }
  for (const auto& l : dom) {
    double res = StarMap::distance(
        StarMap::compose(s2.alpha(kappa(l)), StarMap::compose(eta, s.nu(l))),
        StarMap::compose(s2.nu(l), eta));
    if (res > tol) r.add(word_str(s.pi(), l), "alpha'_kappa(l) eta nu_l != nu'_l eta", res);
  }
  if (check_ext_eq) {
    if (!s2.structure()) {
      r.add("-", "ext-eq check requires a structure 2-group on the target");
    } else {
      const auto& st = *s2.structure();
      const FiniteGroup& G = *s.group();
      for (const auto& l : dom)
        for (const auto& m : dom) {
          Elem lhs = s2.gamma(l, m);
          Elem t = G.mul(st.cm->beta(st.lift(l))(kappa(m)), kappa(l));
          t = G.mul(t, s.gamma(l, m));
          Elem rhs = G.mul(t, G.inv(kappa(s.pi().mul(l, m))));
          if (lhs != rhs)
            r.add("(" + word_str(s.pi(), l) + "," + word_str(s.pi(), m) + ")",
                  "gamma'(l,m) != nu'_l(k_m) k_l gamma(l,m) k_lm^-1");
        }
    }
  }
  return r;
}

// --- convolution context ------------------------------------------------------------------

ConvContext conv_context(const TwistedSystem& s) {
  if (!s.pi().is_finite()) throw std::invalid_argument("conv: Pi must be finite");
  ConvContext ctx;
  ctx.pi = s.pi();
  ctx.elems = ctx.pi.elements(0);
  auto sp = std::make_shared<TwistedSystem>(s);
  const auto& A = *s.algebra();

  if (s.embedding()) {
    ctx.bdim = A.total_dim();
    ctx.embed_a = [](const BlockMat& a) { return a.dense(); };
    auto from_dense = [sp](const Mtx& m) {
      BlockMat b = sp->algebra()->zero();
      int at = 0;
      for (auto& blk : b.blocks) {
        blk = m.block(at, at, blk.rows(), blk.cols());
        at += static_cast<int>(blk.rows());
      }
      return b;
    };
    ctx.nu_bar = [sp, from_dense](const Word& l, const Mtx& m) {
      return sp->nu(l)(from_dense(m)).dense();
    };
    ctx.gamma_bar = [sp](const Word& l, const Word& m) {
      return sp->embedded(sp->gamma(l, m)).dense();
    };
    ctx.phi_b = [sp](Elem g) { return sp->embedded(g).dense(); };
    return ctx;
  }

  if (!s.structure()) throw std::invalid_argument("conv: non-inner system needs a structure 2-group");
  // realize B = A x G and transport nu/gamma onto it
  auto co = std::make_shared<CrossedProductOrdinary>(crossed_product_ordinary(
      s.algebra(),
      [&] {
        std::vector<StarMap> a;
        for (Elem g = 0; g < s.group()->order(); ++g) a.push_back(s.alpha(g));
        return a;
      }(),
      s.group()));
  ctx.bdim = co->dim_H;
  ctx.embed_a = co->eta;
  const auto& st = *s.structure();
  const GroupPtr G = s.group();
  // spanning family eta(b_k) phi(g) and its pseudo-inverse for linear extension
  auto span = std::make_shared<std::vector<std::pair<BlockMat, Elem>>>();
  Mtx S(ctx.bdim * ctx.bdim, A.linear_dim() * G->order());
  {
    int col = 0;
    for (Elem g = 0; g < G->order(); ++g)
      for (const auto& b : A.basis()) {
        span->push_back({b, g});
        S.col(col++) = flatten(Mtx(co->eta(b) * co->phi[g]));
      }
  }
  auto pinv = std::make_shared<Mtx>(S.completeOrthogonalDecomposition().pseudoInverse());
  auto Scols = std::make_shared<Mtx>(S);
  ctx.nu_bar = [sp, co, span, pinv, st, G](const Word& l, const Mtx& m) {
    Eigen::VectorXcd coef = (*pinv) * flatten(m);
    Mtx out = Mtx::Zero(m.rows(), m.cols());
    const auto& beta = st.cm->beta(st.lift(l));
    for (std::size_t k = 0; k < span->size(); ++k) {
      if (std::abs(coef(static_cast<int>(k))) < 1e-14) continue;
      const auto& [a, g] = (*span)[k];
      out += coef(static_cast<int>(k)) * Mtx(co->eta(sp->nu(l)(a)) * co->phi[beta(g)]);
    }
    return out;
  };
  ctx.gamma_bar = [sp, co](const Word& l, const Word& m) { return co->phi[sp->gamma(l, m)]; };
  ctx.phi_b = [co](Elem g) { return co->phi[g]; };
  return ctx;
}

namespace {

int pi_index(const ConvContext& ctx, const Word& w) {
  Word n = ctx.pi.normal(w);
  for (std::size_t k = 0; k < ctx.elems.size(); ++k)
    if (ctx.elems[k] == n) return static_cast<int>(k);
  throw std::logic_error("pi_index: element not found");
}

} // namespace

PiFun conv_multiply(const ConvContext& ctx, const PiFun& f, const PiFun& g) {
  PiFun out(ctx.elems.size(), Mtx::Zero(ctx.bdim, ctx.bdim));
  for (std::size_t li = 0; li < ctx.elems.size(); ++li) {
    const Word& l = ctx.elems[li];
    for (std::size_t mi = 0; mi < ctx.elems.size(); ++mi) {
      const Word& m = ctx.elems[mi];
      Word minv_l = ctx.pi.mul(ctx.pi.inv(m), l);
      out[li] += f[mi] * ctx.nu_bar(m, g[pi_index(ctx, minv_l)]) * ctx.gamma_bar(m, minv_l);
    }
  }
  return out;
}

PiFun conv_involution(const ConvContext& ctx, const PiFun& f) {
  PiFun out(ctx.elems.size(), Mtx::Zero(ctx.bdim, ctx.bdim));
  for (std::size_t li = 0; li < ctx.elems.size(); ++li) {
    const Word& l = ctx.elems[li];
    Word linv = ctx.pi.inv(l);
    Mtx t = ctx.nu_bar(l, f[pi_index(ctx, linv)]);
    out[li] = ctx.gamma_bar(l, linv).adjoint() * t.adjoint();
  }
  return out;
}

PiFun conv_delta(const ConvContext& ctx, const Word& at, const Mtx& value) {
  PiFun out(ctx.elems.size(), Mtx::Zero(ctx.bdim, ctx.bdim));
  out[pi_index(ctx, at)] = value;
  return out;
}

double conv_associativity_residual(const ConvContext& ctx, const std::vector<PiFun>& fs) {
  double worst = 0;
  for (const auto& f : fs)
    for (const auto& g : fs)
      for (const auto& h : fs) {
        PiFun lhs = conv_multiply(ctx, conv_multiply(ctx, f, g), h);
        PiFun rhs = conv_multiply(ctx, f, conv_multiply(ctx, g, h));
        for (std::size_t k = 0; k < lhs.size(); ++k)
          worst = std::max(worst, (lhs[k] - rhs[k]).norm());
      }
  return worst;
}

// --- covariant representations ----------------------------------------------------------------

CovariantRep regular_representation(const TwistedSystem& s, double tol) {
  if (!s.pi().is_finite()) throw std::invalid_argument("regular representation: Pi must be finite");
  auto sn = std::make_shared<TwistedSystem>(normalize_gamma(s, tol));
  auto ctx = std::make_shared<ConvContext>(conv_context(*sn));
  const int P = static_cast<int>(ctx->elems.size());
  const int D = ctx->bdim;

  // cached nu_bar inverses: nu_bar_inv[m](x) applied via linear solve on the
  // transported span; here realized by inverting the linear action matrix
  auto nubar_inv = std::make_shared<std::vector<Mtx>>();
  {
    for (int mi = 0; mi < P; ++mi) {
      Mtx Lm(D * D, D * D);
      for (int c = 0; c < D * D; ++c) {
        Mtx e = Mtx::Zero(D, D);
        e(c % D, c / D) = 1.0;
        Lm.col(c) = flatten(ctx->nu_bar(ctx->elems[mi], e));
      }
      nubar_inv->push_back(Lm.inverse());
    }
  }
  auto apply_inv = [nubar_inv, D](int mi, const Mtx& x) {
    Eigen::VectorXcd v = (*nubar_inv)[mi] * flatten(x);
    return Mtx(Eigen::Map<const Mtx>(v.data(), D, D));
  };

  CovariantRep rep;
  rep.domain = s.algebra();
  rep.G = s.group();
  rep.pi = s.pi();
  rep.dim = D * P;
  rep.pi_rep = [ctx, apply_inv, D, P](const BlockMat& a) {
    Mtx out = Mtx::Zero(D * P, D * P);
    for (int mi = 0; mi < P; ++mi)
      out.block(mi * D, mi * D, D, D) = apply_inv(mi, ctx->embed_a(a));
    return out;
  };
  auto ups = std::make_shared<std::map<Word, Mtx>>();
  for (int li = 0; li < P; ++li) {
    const Word& l = ctx->elems[li];
    Mtx u = Mtx::Zero(D * P, D * P);
    for (int mi = 0; mi < P; ++mi) {
      const Word& m = ctx->elems[mi];
      Word lm = ctx->pi.mul(ctx->pi.inv(l), m);
      int src = pi_index(*ctx, lm);
      u.block(mi * D, src * D, D, D) = apply_inv(mi, ctx->gamma_bar(l, lm));
    }
    (*ups)[l] = u;
  }
  auto pig = ctx->pi;
  rep.upsilon = [ups, pig](const Word& w) { return ups->at(pig.normal(w)); };
  rep.rho.resize(s.group()->order());
  for (Elem g = 0; g < s.group()->order(); ++g) {
    Mtx m = Mtx::Zero(D * P, D * P);
    for (int mi = 0; mi < P; ++mi) m.block(mi * D, mi * D, D, D) = apply_inv(mi, ctx->phi_b(g));
    rep.rho[g] = m;
  }
  rep.spatial = true;
  for (int li = 0; li < P && rep.spatial; ++li)
    for (int mi = 0; mi < P; ++mi) {
      const Word &l = ctx->elems[li], &m = ctx->elems[mi];
      Mtx du = rep.upsilon(l) * rep.upsilon(m) * rep.upsilon(ctx->pi.mul(l, m)).adjoint();
      if ((du - rep.rho[sn->gamma(l, m)]).norm() > tol) { rep.spatial = false; break; }
    }
  return rep;
}

Report check_covariant(const CovariantRep& rep, const TwistedSystem& s, double tol) {
  Report r;
  const auto& A = *s.algebra();
  std::vector<Word> dom = s.pi().elements(0);
  if ((rep.upsilon({}) - Mtx::Identity(rep.dim, rep.dim)).norm() > tol)
    r.add("1", "upsilon(1) != 1");
  for (const auto& l : dom) {
    Mtx u = rep.upsilon(l);
    double unit = (u * u.adjoint() - Mtx::Identity(rep.dim, rep.dim)).norm();
    if (unit > tol) r.add(word_str(s.pi(), l), "upsilon not unitary", unit);
    for (const auto& b : A.basis()) {
      double res = (u * rep.pi_rep(b) * u.adjoint() - rep.pi_rep(s.nu(l)(b))).norm();
      if (res > tol) {
        r.add(word_str(s.pi(), l), "ad upsilon_l pi != pi nu_l", res);
        break;
      }
    }
  }
  for (Elem g = 0; g < s.group()->order(); ++g) {
    for (Elem h = 0; h < s.group()->order(); ++h)
      if ((rep.rho[s.group()->mul(g, h)] - rep.rho[g] * rep.rho[h]).norm() > tol)
        r.add("g=" + s.group()->label(g), "rho not multiplicative");
    double unit = (rep.rho[g] * rep.rho[g].adjoint() - Mtx::Identity(rep.dim, rep.dim)).norm();
    if (unit > tol) r.add("g=" + s.group()->label(g), "rho not unitary", unit);
    for (const auto& b : A.basis()) {
      double res =
          (rep.rho[g] * rep.pi_rep(b) * rep.rho[g].adjoint() - rep.pi_rep(s.alpha(g)(b))).norm();
      if (res > tol) {
        r.add("g=" + s.group()->label(g), "ad rho(g) pi != pi alpha_g", res);
        break;
      }
    }
  }
  return r;
}

Mtx integrated_rep(const CovariantRep& rep, const ConvContext& ctx, const PiFun& f) {
  // pi-extension: the linear map on B sending eta(b_k) phi(g) to
  // pi(b_k) rho(g); well-defined on the span because (pi, rho) is covariant
  const auto& A = *rep.domain;
  const int G_order = static_cast<int>(rep.rho.size());
  Mtx S(ctx.bdim * ctx.bdim, A.linear_dim() * G_order);
  std::vector<Mtx> target;
  int col = 0;
  for (Elem g = 0; g < G_order; ++g) {
    Mtx phi_g = ctx.phi_b(g);
    for (const auto& b : A.basis()) {
      S.col(col++) = flatten(Mtx(ctx.embed_a(b) * phi_g));
      target.push_back(rep.pi_rep(b) * rep.rho[g]);
    }
  }
  Mtx pinv = S.completeOrthogonalDecomposition().pseudoInverse();
  Mtx out = Mtx::Zero(rep.dim, rep.dim);
  for (std::size_t li = 0; li < ctx.elems.size(); ++li) {
    Eigen::VectorXcd coef = pinv * flatten(f[li]);
    Mtx op = Mtx::Zero(rep.dim, rep.dim);
    for (std::size_t k = 0; k < target.size(); ++k) op += coef(static_cast<int>(k)) * target[k];
    out += op * rep.upsilon(ctx.elems[li]);
  }
  return out;
}

StarMorphismCheck integrated_is_star_morphism(const CovariantRep& rep, const ConvContext& ctx,
                                              int trials, unsigned seed) {
  StarMorphismCheck out;
  std::mt19937 rng(seed);
  std::normal_distribution<double> dist;
  auto rand_fun = [&] {
    PiFun f(ctx.elems.size(), Mtx::Zero(ctx.bdim, ctx.bdim));
    for (auto& m : f)
      for (int i = 0; i < ctx.bdim; ++i)
        for (int j = 0; j < ctx.bdim; ++j) m(i, j) = Cplx(dist(rng), dist(rng));
    return f;
  };
  for (int t = 0; t < trials; ++t) {
    PiFun f = rand_fun(), g = rand_fun();
    Mtx lhs = integrated_rep(rep, ctx, conv_multiply(ctx, f, g));
    Mtx rhs = integrated_rep(rep, ctx, f) * integrated_rep(rep, ctx, g);
    out.mult_residual = std::max(out.mult_residual, (lhs - rhs).norm());
    Mtx ls = integrated_rep(rep, ctx, conv_involution(ctx, f));
    Mtx rs = integrated_rep(rep, ctx, f).adjoint();
    out.star_residual = std::max(out.star_residual, (ls - rs).norm());
  }
  return out;
}

// --- structure identification -------------------------------------------------------------------

namespace {

// Gram-Schmidt closure of the *-algebra generated by the given matrices.
std::vector<Mtx> algebra_closure(const std::vector<Mtx>& gens, double tol) {
  if (gens.empty()) throw std::invalid_argument("closure: no generators");
  const int n = static_cast<int>(gens[0].rows());
  std::vector<Mtx> basis;
  std::vector<Eigen::VectorXcd> ortho;
  auto add = [&](const Mtx& m) {
    Eigen::VectorXcd v = flatten(m);
    for (const auto& o : ortho) v -= o.dot(v) * o;
    if (v.norm() <= tol) return false;
    v.normalize();
    ortho.push_back(v);
    basis.push_back(Eigen::Map<const Mtx>(v.data(), n, n));
    return true;
  };
  add(Mtx::Identity(n, n));
  for (const auto& g : gens) {
    add(g);
    add(g.adjoint());
  }
  bool grew = true;
  while (grew) {
    grew = false;
    const std::size_t sz = basis.size();
    for (std::size_t i = 0; i < sz && !grew; ++i)
      for (std::size_t j = 0; j < sz && !grew; ++j)
        if (add(basis[i] * basis[j])) grew = true;
  }
  return basis;
}

} // namespace

StructureReport identify_structure(const std::vector<Mtx>& generators, double tol) {
  StructureReport out;
  std::vector<Mtx> basis = algebra_closure(generators, 1e-9);
  const int n = static_cast<int>(generators[0].rows());
  out.dim = static_cast<int>(basis.size());

  // centre: x in span with [x, b_j] = 0 for all j
  const int d = out.dim;
  Mtx M(static_cast<long>(d) * n * n, d);
  for (int k = 0; k < d; ++k)
    for (int j = 0; j < d; ++j)
      M.block(static_cast<long>(j) * n * n, k, n * n, 1) =
          flatten(Mtx(basis[k] * basis[j] - basis[j] * basis[k]));
  Eigen::JacobiSVD<Mtx> svd(M, Eigen::ComputeFullV);
  std::vector<Eigen::VectorXcd> center_coords;
  {
    int rank = 0;
    for (int k = 0; k < svd.singularValues().size(); ++k)
      if (svd.singularValues()(k) > tol * svd.singularValues()(0)) ++rank;
    for (int k = rank; k < d; ++k) center_coords.push_back(svd.matrixV().col(k));
  }
  out.center_dim = static_cast<int>(center_coords.size());

  std::vector<Mtx> center;
  for (const auto& c : center_coords) {
    Mtx z = Mtx::Zero(n, n);
    for (int k = 0; k < d; ++k) z += c(k) * basis[k];
    center.push_back(z);
  }

  // minimal central projections from a generic self-adjoint central element
  for (unsigned attempt = 0; attempt < 5; ++attempt) {
    std::mt19937 rng(12345 + attempt);
    std::normal_distribution<double> dist;
    Mtx z = Mtx::Zero(n, n);
    for (const auto& c : center) {
      Mtx h = (c + c.adjoint()) / 2.0;
      Mtx a = (c - c.adjoint()) * Cplx(0, -0.5);
      z += dist(rng) * h + dist(rng) * a;
    }
    Eigen::SelfAdjointEigenSolver<Mtx> es(z);
    std::vector<std::pair<double, int>> ev;
    for (int k = 0; k < n; ++k) ev.push_back({es.eigenvalues()(k), k});
    std::sort(ev.begin(), ev.end());
    std::vector<std::vector<int>> clusters;
    for (const auto& [val, idx] : ev) {
      if (clusters.empty() || val - es.eigenvalues()(clusters.back().back()) > 1e-6)
        clusters.push_back({});
      clusters.back().push_back(idx);
    }
    if (static_cast<int>(clusters.size()) != out.center_dim) continue;
    std::vector<int> blocks;
    bool ok = true;
    for (const auto& cl : clusters) {
      Mtx P = Mtx::Zero(n, n);
      for (int idx : cl) P += es.eigenvectors().col(idx) * es.eigenvectors().col(idx).adjoint();
      if ((P * P - P).norm() > tol) { ok = false; break; }
      // rank of S*P
      Mtx SP(n * n, d);
      for (int k = 0; k < d; ++k) SP.col(k) = flatten(Mtx(basis[k] * P));
      Eigen::JacobiSVD<Mtx> s2(SP);
      int rk = 0;
      for (int k = 0; k < s2.singularValues().size(); ++k)
        if (s2.singularValues()(k) > tol * s2.singularValues()(0)) ++rk;
      int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(rk))));
      if (side * side != rk) { ok = false; break; }
      blocks.push_back(side);
    }
    if (!ok) continue;
    std::sort(blocks.begin(), blocks.end());
    out.blocks = std::move(blocks);
    return out;
  }
  throw std::runtime_error("identify_structure: could not separate central projections");
}

// --- crossed products ------------------------------------------------------------------------------

CrossedProductOrdinary crossed_product_ordinary(const MatrixAlgebraPtr& A,
                                                const std::vector<StarMap>& alpha,
                                                const GroupPtr& G, double tol) {
  const int D = A->total_dim();
  const int n = G->order();
  CrossedProductOrdinary out;
  out.dim_H = D * n;
  std::vector<StarMap> alpha_inv;
  for (const auto& a : alpha) alpha_inv.push_back(a.inverse());
  auto Ap = A;
  auto ai = std::make_shared<std::vector<StarMap>>(std::move(alpha_inv));
  out.eta = [Ap, ai, D, n](const BlockMat& t) {
    Mtx m = Mtx::Zero(D * n, D * n);
    for (int g = 0; g < n; ++g) m.block(g * D, g * D, D, D) = (*ai)[g](t).dense();
    return m;
  };
  out.phi.resize(n);
  for (Elem h = 0; h < n; ++h) {
    Mtx m = Mtx::Zero(D * n, D * n);
    for (Elem g = 0; g < n; ++g) {
      Elem src = G->mul(G->inv(h), g);
      m.block(g * D, src * D, D, D) = Mtx::Identity(D, D);
    }
    out.phi[h] = m;
  }
  for (Elem h = 0; h < n; ++h)
    for (const auto& b : A->basis()) {
      double res = (out.phi[h] * out.eta(b) * out.phi[h].adjoint() - out.eta(alpha[h](b))).norm();
      if (res > tol) out.covariance.add("h=" + G->label(h), "phi eta phi* != eta alpha", res);
    }
  std::vector<Mtx> gens;
  for (const auto& b : A->basis()) gens.push_back(out.eta(b));
  for (const auto& p : out.phi) gens.push_back(p);
  out.span_basis = algebra_closure(gens, 1e-9);
  out.structure = identify_structure(gens);
  return out;
}

CrossedProductTwisted crossed_product_twisted(const TwistedSystem& s, CrossedProductMode mode,
                                              double tol) {
  CrossedProductTwisted out;
  TwistedSystem sn = normalize_gamma(s);
  CovariantRep rep = regular_representation(sn);
  ConvContext ctx = conv_context(sn);
  out.notes.push_back("realized on the regular covariant representation; for finite groups this "
                      "family is separating, so the universal and regular constructions agree");
  if (mode == CrossedProductMode::Spatial && !rep.spatial) {
    out.possibly_trivial = true;
    out.notes.push_back("no spatial covariant representation available: the spatial crossed "
                        "product may be trivial; nothing is generated");
    return out;
  }
  out.dim_H = rep.dim;
  out.iota = rep.pi_rep;
  out.u_g = rep.rho;
  for (const auto& l : ctx.elems) out.v_l.push_back(rep.upsilon(l));

  for (std::size_t li = 0; li < ctx.elems.size(); ++li)
    for (const auto& b : s.algebra()->basis()) {
      double res = (out.v_l[li] * out.iota(b) * out.v_l[li].adjoint() -
                    out.iota(sn.nu(ctx.elems[li])(b)))
                       .norm();
      if (res > tol) out.relations.add("l=" + ctx.pi.label(ctx.elems[li]),
                                       "ad v_l iota != iota nu_l", res);
    }
  for (Elem g = 0; g < s.group()->order(); ++g)
    for (const auto& b : s.algebra()->basis()) {
      double res =
          (out.u_g[g] * out.iota(b) * out.u_g[g].adjoint() - out.iota(s.alpha(g)(b))).norm();
      if (res > tol)
        out.relations.add("g=" + s.group()->label(g), "ad u_g iota != iota alpha_g", res);
    }
  if (mode == CrossedProductMode::Spatial)
    for (std::size_t li = 0; li < ctx.elems.size(); ++li)
      for (std::size_t mi = 0; mi < ctx.elems.size(); ++mi) {
        const Word &l = ctx.elems[li], &m = ctx.elems[mi];
        Mtx dv = rep.upsilon(l) * rep.upsilon(m) * rep.upsilon(ctx.pi.mul(l, m)).adjoint();
        double res = (dv - rep.rho[sn.gamma(l, m)]).norm();
        if (res > tol)
          out.relations.add("(" + ctx.pi.label(l) + "," + ctx.pi.label(m) + ")",
                            "dv(l,m) != u(gamma(l,m))", res);
      }

  std::vector<Mtx> gens;
  for (const auto& b : s.algebra()->basis()) gens.push_back(out.iota(b));
  for (const auto& r : out.u_g) gens.push_back(r);
  for (const auto& v : out.v_l) gens.push_back(v);
  out.span_basis = algebra_closure(gens, 1e-9);
  out.structure = identify_structure(gens);
  return out;
}

Report crossed_product_surjection(const CrossedProductTwisted& plain,
                                  const CrossedProductTwisted& spatial, double tol) {
  Report r;
  if (spatial.possibly_trivial) {
    r.note("spatial side possibly trivial: surjection onto the zero algebra");
    return r;
  }
  if (plain.structure.dim < spatial.structure.dim)
    r.add("dim", "plain crossed product smaller than spatial quotient");
  if (plain.dim_H == spatial.dim_H) {
    // same regular realization: the identity intertwines the generators
    for (std::size_t k = 0; k < plain.v_l.size(); ++k) {
      double res = (plain.v_l[k] - spatial.v_l[k]).norm();
      if (res > tol) r.add("v_" + std::to_string(k), "generator mismatch under identity", res);
    }
    r.note("identity intertwiner on the shared regular representation");
  }
  return r;
}

// --- randoms -----------------------------------------------------------------------------------------

BlockMat random_element(const MatrixAlgebra& a, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> dist;
  BlockMat m = a.zero();
  for (auto& b : m.blocks)
    for (int i = 0; i < b.rows(); ++i)
      for (int j = 0; j < b.cols(); ++j) b(i, j) = Cplx(dist(rng), dist(rng));
  return m;
}

BlockMat random_self_adjoint(const MatrixAlgebra& a, unsigned seed) {
  BlockMat m = random_element(a, seed);
  return (m + m.adjoint()) * Cplx(0.5, 0);
}

} // namespace gerbes
