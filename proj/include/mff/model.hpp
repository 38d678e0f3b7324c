#pragma once
//! \file
//! Single-particle model: disordered tight-binding chain with optional
//! next-nearest-neighbour hopping, and its fixed step propagator.

#include "mff/core.hpp"
#include "mff/random.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mff {

enum class Boundary { periodic, open };

inline std::string_view to_string(Boundary b) { return b == Boundary::periodic ? "periodic" : "open"; }

inline Boundary parse_boundary(std::string_view s) {
  if (s == "periodic") return Boundary::periodic;
  if (s == "open") return Boundary::open;
  throw ParameterError("boundary must be 'periodic' or 'open', got '" + std::string(s) + "'");
}

struct ModelSpec {
  int L = 0;
  double W = 0.0;
  double gamma = 0.0;
  double dt = 0.05;
  Boundary boundary = Boundary::periodic;
  bool nnn = false;
  //! Particle count; half filling when unset.
  std::optional<int> filling;

  int particles() const { return filling ? *filling : L / 2; }

  void validate() const {
    require(L >= 1, "L must be positive");
    require(dt > 0.0 && std::isfinite(dt), "dt must be positive");
    require(W >= 0.0 && std::isfinite(W), "W must be non-negative");
    require(gamma >= 0.0 && std::isfinite(gamma), "gamma must be non-negative");
    if (!filling) require(L % 2 == 0, "half filling needs an even L");
    const int n = particles();
    require(n >= 1 && n <= L, "particle count must lie in [1, L]");
  }
};

//! One frozen sample of the on-site potential.
struct DisorderRealization {
  std::vector<double> h;
};

//! Real symmetric single-particle Hamiltonian.
struct HoppingMatrix {
  MatrixXr h_mat;
  int sites() const { return static_cast<int>(h_mat.rows()); }
};

//! e^{-i h dt}; built once per disorder realization.
struct StepPropagator {
  MatrixXc prop;
  int sites() const { return static_cast<int>(prop.rows()); }
};

//! L independent draws, uniform on [-W, W].
inline DisorderRealization sample_disorder(double W, int L, std::uint64_t seed) {
  require(W >= 0.0 && std::isfinite(W), "disorder strength W must be non-negative");
  require(L >= 1, "L must be positive");
  const rng::CounterRng gen(rng::derive_key({static_cast<std::uint64_t>(rng::Tag::disorder), seed}));
  DisorderRealization out;
  out.h.resize(static_cast<std::size_t>(L));
  for (int i = 0; i < L; ++i) out.h[static_cast<std::size_t>(i)] = W * (2.0 * gen.uniform(static_cast<std::uint64_t>(i)) - 1.0);
  return out;
}

inline HoppingMatrix build_hamiltonian(const ModelSpec& spec, const DisorderRealization& dis) {
  require(spec.L >= 1, "L must be positive");
  require(static_cast<int>(dis.h.size()) == spec.L, "disorder length does not match L");
  const int L = spec.L;
  HoppingMatrix H{MatrixXr::Zero(L, L)};
  auto link = [&](int i, int j) {
    if (i == j) return;
    H.h_mat(i, j) = 1.0;
    H.h_mat(j, i) = 1.0;
  };
  auto hop = [&](int range) {
    for (int i = 0; i < L; ++i) {
      const int j = i + range;
      if (j < L)
        link(i, j);
      else if (spec.boundary == Boundary::periodic)
        link(i, j % L);
    }
  };
  hop(1);
  if (spec.nnn) hop(2);
  for (int i = 0; i < L; ++i) H.h_mat(i, i) = dis.h[static_cast<std::size_t>(i)];
  return H;
}

inline StepPropagator make_propagator(const HoppingMatrix& H, double dt) {
  const auto& h = H.h_mat;
  require(h.rows() == h.cols() && h.rows() > 0, "Hamiltonian must be square and non-empty");
  require(std::isfinite(dt), "dt must be finite");
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  require((h - h.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale, "Hamiltonian is not Hermitian");
  Eigen::SelfAdjointEigenSolver<MatrixXr> eig(h);
  require(eig.info() == Eigen::Success, "eigendecomposition of the Hamiltonian failed");
  const VectorXr& e = eig.eigenvalues();
  const MatrixXr& v = eig.eigenvectors();
  VectorXc phase(e.size());
  for (Eigen::Index k = 0; k < e.size(); ++k) phase(k) = std::exp(cplx(0.0, -e(k) * dt));
  StepPropagator out;
  out.prop = v.cast<cplx>() * phase.asDiagonal() * v.transpose().cast<cplx>();
  return out;
}

}  // namespace mff
