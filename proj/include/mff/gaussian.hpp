#pragma once
//! \file
//! Pure fermionic Gaussian states (Slater determinants) described by an
//! L x N orbital matrix U, |psi> = prod_k (sum_j U_jk c_j^dag) |0>, and
//! the observables computed from it.

#include "mff/core.hpp"
#include "mff/model.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

namespace mff {

struct GaussianState {
  //! Rows are sites, columns are occupied orbitals.
  MatrixXc orbitals;

  int sites() const { return static_cast<int>(orbitals.rows()); }
  int particles() const { return static_cast<int>(orbitals.cols()); }
};

//! D = U U^dag. Entry (i, j) is <c_j^dag c_i>; D is Hermitian, so all
//! quantities used here (|D_ij|^2, spectra of diagonal blocks) coincide with
//! those of <c_i^dag c_j>.
struct CorrelationMatrix {
  MatrixXc d;
  int sites() const { return static_cast<int>(d.rows()); }
};

//! (subsystem length l, entropy in nats)
using EntropyProfile = std::vector<std::pair<int, double>>;

//! Which state supplies <n_i> in the measurement factor. Only pre_step is
//! physical; post_unitary exists as a negative control for oracle checks.
enum class MeasurementConvention { pre_step, post_unitary };

inline constexpr double kEntropyClip = 1e-14;

//! Odd sites (1, 3, 5, ... in one-based labels) occupied.
inline GaussianState neel_state(int L) {
  require(L >= 2 && L % 2 == 0, "Neel state needs an even L");
  GaussianState s{MatrixXc::Zero(L, L / 2)};
  for (int k = 0; k < L / 2; ++k) s.orbitals(2 * k, k) = 1.0;
  return s;
}

inline CorrelationMatrix correlation_matrix(const GaussianState& s) {
  return CorrelationMatrix{s.orbitals * s.orbitals.adjoint()};
}

//! Site occupations <n_i>, the squared row norms of U.
inline VectorXr occupations(const GaussianState& s) { return s.orbitals.rowwise().squaredNorm(); }

//! Binary entropy summed over eigenvalues. Eigenvalues within kEntropyClip
//! of 0 or 1 contribute exactly 0 (the 0 ln 0 = 0 limit).
inline double entropy_from_spectrum(const VectorXr& lambda) {
  double S = 0.0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    const double x = lambda(i);
    if (!(x > kEntropyClip && x < 1.0 - kEntropyClip)) continue;
    S -= x * std::log(x) + (1.0 - x) * std::log1p(-x);
  }
  return std::max(S, 0.0);
}

inline double entanglement_entropy(const CorrelationMatrix& D, std::span<const int> sites) {
  const int L = D.sites();
  require(!sites.empty(), "subsystem must be non-empty");
  require(static_cast<int>(sites.size()) < L, "subsystem must be a proper subset of the chain");
  const auto n = static_cast<Eigen::Index>(sites.size());
  MatrixXc block(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    require(sites[static_cast<std::size_t>(a)] >= 0 && sites[static_cast<std::size_t>(a)] < L,
            "subsystem site index out of range");
    for (Eigen::Index b = 0; b < n; ++b)
      block(a, b) = D.d(sites[static_cast<std::size_t>(a)], sites[static_cast<std::size_t>(b)]);
  }
  Eigen::SelfAdjointEigenSolver<MatrixXc> eig(block, Eigen::EigenvaluesOnly);
  return entropy_from_spectrum(eig.eigenvalues());
}

//! Sites {start, start+1, ..., start+len-1} modulo L.
inline std::vector<int> contiguous_block(int start, int len, int L) {
  std::vector<int> out(static_cast<std::size_t>(len));
  for (int a = 0; a < len; ++a) out[static_cast<std::size_t>(a)] = ((start + a) % L + L) % L;
  return out;
}

//! Entropy of the prefix block {0, ..., l-1}.
inline double cut_entropy(const CorrelationMatrix& D, int l) {
  require(l >= 1 && l < D.sites(), "cut must satisfy 1 <= l < L");
  Eigen::SelfAdjointEigenSolver<MatrixXc> eig(D.d.topLeftCorner(l, l), Eigen::EigenvaluesOnly);
  return entropy_from_spectrum(eig.eigenvalues());
}

//! S(l) for l = 1..L-1.
inline EntropyProfile entropy_profile(const CorrelationMatrix& D) {
  const int L = D.sites();
  EntropyProfile out;
  out.reserve(static_cast<std::size_t>(L - 1));
  for (int l = 1; l < L; ++l) out.emplace_back(l, cut_entropy(D, l));
  return out;
}

//! |D_{i+r,i}|^2 averaged over reference sites i.
inline double connected_correlation(const CorrelationMatrix& D, int r, Boundary boundary = Boundary::periodic) {
  const int L = D.sites();
  require(r >= 1 && r <= L - 1, "distance r must satisfy 1 <= r <= L-1");
  double acc = 0.0;
  int count = 0;
  for (int i = 0; i < L; ++i) {
    int j = i + r;
    if (j >= L) {
      if (boundary == Boundary::open) break;
      j -= L;
    }
    acc += std::norm(D.d(j, i));
    ++count;
  }
  return acc / count;
}

//! C(r) for r = 1..max_r.
inline std::vector<double> correlation_profile(const CorrelationMatrix& D, int max_r, Boundary boundary = Boundary::periodic) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(max_r));
  for (int r = 1; r <= max_r; ++r) out.push_back(connected_correlation(D, r, boundary));
  return out;
}

//! |[U(t+tau) U^dag(t)]_ii|^2 averaged over sites.
inline double autocorrelation(const GaussianState& early, const GaussianState& late) {
  require(early.sites() == late.sites() && early.particles() == late.particles(),
          "autocorrelation needs states of equal shape");
  const auto& a = late.orbitals;
  const auto& b = early.orbitals;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) acc += std::norm(a.row(i).dot(b.row(i)));
  // dot() conjugates its first argument; |.|^2 is insensitive to that.
  return acc / static_cast<double>(a.rows());
}

//! Per-orbital densities |U_{.,k}|^2, each cyclically shifted so that its
//! (first) maximum lands on site floor(L/2).
inline std::vector<VectorXr> orbital_densities(const GaussianState& s) {
  const int L = s.sites();
  const int centre = L / 2;
  std::vector<VectorXr> out;
  out.reserve(static_cast<std::size_t>(s.particles()));
  for (int k = 0; k < s.particles(); ++k) {
    const VectorXr dens = s.orbitals.col(k).cwiseAbs2();
    Eigen::Index peak = 0;
    dens.maxCoeff(&peak);
    VectorXr shifted(L);
    for (int j = 0; j < L; ++j) shifted(((j - static_cast<int>(peak) + centre) % L + L) % L) = dens(j);
    out.push_back(std::move(shifted));
  }
  return out;
}

//! Thin QR with the phase convention diag(R) > 0, which makes Q unique and
//! leaves an already orthonormal U unchanged.
inline GaussianState renormalize(GaussianState s) {
  const auto L = s.orbitals.rows();
  const auto N = s.orbitals.cols();
  require(N >= 1 && N <= L, "orbital matrix must have 1 <= N <= L columns");
  if (!s.orbitals.allFinite()) throw NumericalDegeneracyError("orbital matrix has non-finite entries");
  Eigen::HouseholderQR<MatrixXc> qr(s.orbitals);
  const MatrixXc& packed = qr.matrixQR();
  double rmax = 0.0;
  for (Eigen::Index k = 0; k < N; ++k) rmax = std::max(rmax, std::abs(packed(k, k)));
  MatrixXc q = MatrixXc::Identity(L, N);
  q.applyOnTheLeft(qr.householderQ());
  for (Eigen::Index k = 0; k < N; ++k) {
    const cplx r = packed(k, k);
    const double mag = std::abs(r);
    if (!(mag > 1e-13 * rmax)) throw NumericalDegeneracyError("orbital matrix lost full column rank");
    q.col(k) *= r / mag;
  }
  s.orbitals = std::move(q);
  return s;
}

//! One trotterized step: U <- e^M e^{-ih dt} U, then renormalize, with
//! M_ii = eta_i + (2<n_i> - 1) gamma dt.
inline GaussianState apply_step(const GaussianState& s, const StepPropagator& p, const VectorXr& noise, double gamma,
                                double dt, MeasurementConvention conv = MeasurementConvention::pre_step) {
  require(noise.size() == s.orbitals.rows(), "noise vector length does not match L");
  require(p.prop.rows() == s.orbitals.rows(), "propagator size does not match L");
  GaussianState next{p.prop * s.orbitals};
  const VectorXr n = conv == MeasurementConvention::pre_step ? occupations(s) : occupations(next);
  const VectorXr weight = (noise.array() + (2.0 * n.array() - 1.0) * gamma * dt).exp();
  next.orbitals = weight.asDiagonal() * next.orbitals;
  return renormalize(std::move(next));
}

}  // namespace mff
