#pragma once

#include <complex>
#include <memory>
#include <span>
#include <stdexcept>

#include <Eigen/Dense>

#include "bhvqe/fock_basis.hpp"

namespace bhvqe {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;

// A normalized-or-not amplitude vector tied to a fixed-number Fock basis.
class StateVector {
 public:
  explicit StateVector(std::shared_ptr<const FockBasis> basis)
      : basis_(std::move(basis)),
        amps_(Vector::Zero(static_cast<Eigen::Index>(basis_->dim()))) {}

  StateVector(std::shared_ptr<const FockBasis> basis, Vector amps)
      : basis_(std::move(basis)), amps_(std::move(amps)) {
    if (amps_.size() != static_cast<Eigen::Index>(basis_->dim()))
      throw std::invalid_argument("StateVector: amplitude length != basis dimension");
  }

  // |n_0, n_1, ...> basis state.
  static StateVector fock(std::shared_ptr<const FockBasis> basis,
                          std::span<const int> occupations) {
    StateVector psi(std::move(basis));
    psi.amps_[static_cast<Eigen::Index>(psi.basis_->index_of(occupations))] = 1.0;
    return psi;
  }

  static StateVector fock(std::shared_ptr<const FockBasis> basis,
                          std::initializer_list<int> occupations) {
    return fock(std::move(basis), std::span<const int>(occupations.begin(), occupations.size()));
  }

  const FockBasis& basis() const { return *basis_; }
  std::shared_ptr<const FockBasis> basis_ptr() const { return basis_; }

  Eigen::Index size() const { return amps_.size(); }
  Complex& operator[](Eigen::Index i) { return amps_[i]; }
  const Complex& operator[](Eigen::Index i) const { return amps_[i]; }
  Vector& amplitudes() { return amps_; }
  const Vector& amplitudes() const { return amps_; }

  double norm() const { return amps_.norm(); }

  void normalize() {
    const double n = norm();
    if (n == 0.0) throw std::domain_error("StateVector::normalize: zero vector");
    amps_ /= n;
  }

  // Rotate the global phase so the largest-modulus amplitude is real positive.
  void phase_fix() {
    Eigen::Index imax = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < amps_.size(); ++i) {
      const double a = std::abs(amps_[i]);
      if (a > best) {
        best = a;
        imax = i;
      }
    }
    if (best <= 0.0) return;
    const Complex rot = std::conj(amps_[imax]) / std::abs(amps_[imax]);
    amps_ *= rot;
  }

 private:
  std::shared_ptr<const FockBasis> basis_;
  Vector amps_;
};

inline Complex inner(const StateVector& a, const StateVector& b) {
  if (!a.basis().same_space(b.basis()))
    throw std::invalid_argument("inner: states live in different Fock spaces");
  return a.amplitudes().dot(b.amplitudes());
}

}  // namespace bhvqe
