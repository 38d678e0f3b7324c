#pragma once
//! \file
//! Brute-force fixed-particle-number reference for small chains.
//!
//! Basis states are occupation bitstrings (bit i = site i) with popcount N,
//! ordered by increasing integer value. A bitstring s with occupied sites
//! s_1 < s_2 < ... < s_N stands for c^dag_{s_1} c^dag_{s_2} ... c^dag_{s_N}|0>.

#include "mff/core.hpp"
#include "mff/gaussian.hpp"
#include "mff/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

namespace mff::oracle {

inline constexpr std::size_t kDefaultDimensionCap = 5000;

class FockBasis {
 public:
  FockBasis(int L, int N, std::size_t cap = kDefaultDimensionCap) : L_(L), N_(N) {
    require(L >= 1 && L <= 30, "oracle supports 1 <= L <= 30");
    require(N >= 0 && N <= L, "particle count must lie in [0, L]");
    double dim = 1.0;
    for (int k = 0; k < N; ++k) dim = dim * (L - k) / (k + 1);
    require(dim <= static_cast<double>(cap), "sector dimension exceeds the configured cap");
    for (std::uint32_t s = 0; s < (1u << L); ++s)
      if (std::popcount(s) == N) states_.push_back(s);
  }

  int sites() const { return L_; }
  int particles() const { return N_; }
  std::size_t dimension() const { return states_.size(); }
  std::uint32_t state(std::size_t k) const { return states_[k]; }

  std::size_t index(std::uint32_t s) const {
    auto it = std::lower_bound(states_.begin(), states_.end(), s);
    return static_cast<std::size_t>(it - states_.begin());
  }

 private:
  int L_;
  int N_;
  std::vector<std::uint32_t> states_;
};

//! Occupied sites strictly below `site`.
inline int occupied_below(std::uint32_t s, int site) {
  return std::popcount(s & ((1u << site) - 1u));
}

struct FockState {
  VectorXc amplitudes;
};

//! Sector matrix of H = sum_ij h_ij c_i^dag c_j.
inline MatrixXr sector_hamiltonian(const FockBasis& basis, const HoppingMatrix& H) {
  require(H.sites() == basis.sites(), "Hamiltonian size does not match the basis");
  const auto dim = static_cast<Eigen::Index>(basis.dimension());
  MatrixXr out = MatrixXr::Zero(dim, dim);
  const int L = basis.sites();
  for (Eigen::Index col = 0; col < dim; ++col) {
    const std::uint32_t s = basis.state(static_cast<std::size_t>(col));
    for (int j = 0; j < L; ++j) {
      if (!(s >> j & 1u)) continue;
      const std::uint32_t removed = s & ~(1u << j);
      const int sign_j = occupied_below(s, j) % 2 ? -1 : 1;
      for (int i = 0; i < L; ++i) {
        const double hij = H.h_mat(i, j);
        if (hij == 0.0 || (removed >> i & 1u)) continue;
        const std::uint32_t t = removed | (1u << i);
        const int sign_i = occupied_below(removed, i) % 2 ? -1 : 1;
        out(static_cast<Eigen::Index>(basis.index(t)), col) += sign_i * sign_j * hij;
      }
    }
  }
  return out;
}

//! e^{-iH dt} restricted to the sector.
class ExactPropagator {
 public:
  ExactPropagator(const FockBasis& basis, const HoppingMatrix& H, double dt) {
    const MatrixXr hs = sector_hamiltonian(basis, H);
    Eigen::SelfAdjointEigenSolver<MatrixXr> eig(hs);
    VectorXc phase(eig.eigenvalues().size());
    for (Eigen::Index k = 0; k < phase.size(); ++k) phase(k) = std::exp(cplx(0.0, -eig.eigenvalues()(k) * dt));
    const MatrixXc v = eig.eigenvectors().cast<cplx>();
    prop_ = v * phase.asDiagonal() * v.adjoint();
  }
  const MatrixXc& matrix() const { return prop_; }

 private:
  MatrixXc prop_;
};

inline FockState neel(const FockBasis& basis) {
  const int L = basis.sites();
  require(L % 2 == 0 && basis.particles() == L / 2, "Neel state needs half filling on an even chain");
  std::uint32_t s = 0;
  for (int i = 0; i < L; i += 2) s |= 1u << i;
  FockState out{VectorXc::Zero(static_cast<Eigen::Index>(basis.dimension()))};
  out.amplitudes(static_cast<Eigen::Index>(basis.index(s))) = 1.0;
  return out;
}

//! Slater determinant of the orbital matrix U: amplitude det(U[occupied rows, :]).
inline FockState from_slater(const FockBasis& basis, const GaussianState& g) {
  require(g.sites() == basis.sites() && g.particles() == basis.particles(), "orbital matrix shape does not match basis");
  const int N = basis.particles();
  FockState out{VectorXc::Zero(static_cast<Eigen::Index>(basis.dimension()))};
  MatrixXc sub(N, N);
  for (std::size_t k = 0; k < basis.dimension(); ++k) {
    const std::uint32_t s = basis.state(k);
    int row = 0;
    for (int i = 0; i < basis.sites(); ++i)
      if (s >> i & 1u) sub.row(row++) = g.orbitals.row(i);
    out.amplitudes(static_cast<Eigen::Index>(k)) = N == 0 ? cplx(1.0) : sub.determinant();
  }
  return out;
}

inline VectorXr occupations(const FockBasis& basis, const FockState& psi) {
  VectorXr n = VectorXr::Zero(basis.sites());
  for (std::size_t k = 0; k < basis.dimension(); ++k) {
    const double p = std::norm(psi.amplitudes(static_cast<Eigen::Index>(k)));
    const std::uint32_t s = basis.state(k);
    for (int i = 0; i < basis.sites(); ++i)
      if (s >> i & 1u) n(i) += p;
  }
  return n;
}

inline void normalize(FockState& psi) {
  const double nrm = psi.amplitudes.norm();
  if (!(nrm > 0.0) || !std::isfinite(nrm)) throw NumericalDegeneracyError("many-body state has vanishing norm");
  psi.amplitudes /= nrm;
}

//! Same trotterized update as apply_step, on the full sector wavefunction.
inline FockState exact_step(const FockBasis& basis, const FockState& psi, const ExactPropagator& prop,
                            const VectorXr& noise, double gamma, double dt) {
  require(noise.size() == basis.sites(), "noise vector length does not match L");
  const VectorXr n = occupations(basis, psi);
  const VectorXr m = noise.array() + (2.0 * n.array() - 1.0) * gamma * dt;
  FockState out{prop.matrix() * psi.amplitudes};
  for (std::size_t k = 0; k < basis.dimension(); ++k) {
    const std::uint32_t s = basis.state(k);
    double expo = 0.0;
    for (int i = 0; i < basis.sites(); ++i)
      if (s >> i & 1u) expo += m(i);
    out.amplitudes(static_cast<Eigen::Index>(k)) *= std::exp(expo);
  }
  normalize(out);
  return out;
}

inline FockState exact_step(const FockBasis& basis, const FockState& psi, const HoppingMatrix& H,
                            const VectorXr& noise, double gamma, double dt) {
  return exact_step(basis, psi, ExactPropagator(basis, H, dt), noise, gamma, dt);
}

struct ExactObservables {
  //! (i, j) entry is <c_j^dag c_i>, matching CorrelationMatrix.
  MatrixXc D;
  //! S(l) of the prefix {0..l-1} for l = 1..L-1, from the reduced density matrix.
  std::vector<double> entropy;
  //! <n_i n_j>
  MatrixXr density_density;
};

inline ExactObservables exact_observables(const FockBasis& basis, const FockState& psi) {
  const int L = basis.sites();
  ExactObservables out;
  out.D = MatrixXc::Zero(L, L);
  out.density_density = MatrixXr::Zero(L, L);
  for (std::size_t k = 0; k < basis.dimension(); ++k) {
    const std::uint32_t s = basis.state(k);
    const cplx a = psi.amplitudes(static_cast<Eigen::Index>(k));
    for (int i = 0; i < L; ++i) {
      if (!(s >> i & 1u)) continue;
      for (int j = 0; j < L; ++j)
        if (s >> j & 1u) out.density_density(i, j) += std::norm(a);
    }
    // c_j^dag c_i |s>: contributes conj(psi(t)) psi(s) to <c_j^dag c_i>
    for (int i = 0; i < L; ++i) {
      if (!(s >> i & 1u)) continue;
      const std::uint32_t removed = s & ~(1u << i);
      const int sign_i = occupied_below(s, i) % 2 ? -1 : 1;
      for (int j = 0; j < L; ++j) {
        if (removed >> j & 1u) continue;
        const std::uint32_t t = removed | (1u << j);
        const int sign_j = occupied_below(removed, j) % 2 ? -1 : 1;
        out.D(i, j) += static_cast<double>(sign_i * sign_j) *
                       std::conj(psi.amplitudes(static_cast<Eigen::Index>(basis.index(t)))) * a;
      }
    }
  }
  // Prefix sites are the low bits, and their creation operators stand to the
  // left of the suffix ones, so psi(a, b) is a plain tensor reshaping.
  for (int l = 1; l < L; ++l) {
    const Eigen::Index dimA = Eigen::Index{1} << l;
    const Eigen::Index dimB = Eigen::Index{1} << (L - l);
    MatrixXc m = MatrixXc::Zero(dimA, dimB);
    for (std::size_t k = 0; k < basis.dimension(); ++k) {
      const std::uint32_t s = basis.state(k);
      m(s & static_cast<std::uint32_t>(dimA - 1), s >> l) = psi.amplitudes(static_cast<Eigen::Index>(k));
    }
    const MatrixXc rho = m * m.adjoint();
    Eigen::SelfAdjointEigenSolver<MatrixXc> eig(rho, Eigen::EigenvaluesOnly);
    double S = 0.0;
    for (Eigen::Index q = 0; q < eig.eigenvalues().size(); ++q) {
      const double p = eig.eigenvalues()(q);
      if (p > 1e-300) S -= p * std::log(p);
    }
    out.entropy.push_back(S);
  }
  return out;
}

}  // namespace mff::oracle
