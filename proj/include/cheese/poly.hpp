#pragma once

#include <span>
#include <vector>

#include "cheese/common.hpp"

namespace cheese {

/// Sparse multivariate polynomial over complex coefficients in z1..z_arity.
class Polynomial {
 public:
  struct Term {
    Complex coef;
    std::vector<unsigned> exps;  // length == arity
  };

  Polynomial() = default;
  explicit Polynomial(unsigned arity) : arity_(arity) {}

  static Polynomial constant(Complex c, unsigned arity);
  /// var is 0-based: variable(0, n) is z1 viewed in arity n.
  static Polynomial variable(unsigned var, unsigned arity);

  unsigned arity() const { return arity_; }
  const std::vector<Term>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  unsigned total_degree() const;

  /// Same polynomial viewed with extra (unused) trailing variables.
  Polynomial promoted(unsigned new_arity) const;

  Complex eval(std::span<const Complex> z) const;
  /// Value and all partial derivatives at z.
  void eval_grad(std::span<const Complex> z, Complex& value, CVec& grad) const;

  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator-(const Polynomial& o) const;
  Polynomial operator*(const Polynomial& o) const;
  Polynomial operator*(Complex s) const;
  Polynomial partial(unsigned var) const;

  void add_term(Complex coef, std::vector<unsigned> exps);
  void normalize();

 private:
  unsigned arity_ = 0;
  std::vector<Term> terms_;  // sorted by exponent vector, no zero coefficients
};

/// Quotient of polynomials; denominator defaults to 1.
class RationalFunction {
 public:
  RationalFunction() = default;
  explicit RationalFunction(Polynomial num)
      : num_(std::move(num)), den_(Polynomial::constant(1.0, num_.arity())) {}
  RationalFunction(Polynomial num, Polynomial den);

  static RationalFunction constant(Complex c, unsigned arity);

  unsigned arity() const { return num_.arity(); }
  const Polynomial& num() const { return num_; }
  const Polynomial& den() const { return den_; }
  bool den_is_one() const;

  RationalFunction promoted(unsigned new_arity) const;

  Complex eval(std::span<const Complex> z) const;
  /// Throws Error("pole-proximity") when |den| < den_floor.
  Complex eval_checked(std::span<const Complex> z, double den_floor) const;
  /// Value and gradient of num/den at z.
  void eval_grad(std::span<const Complex> z, Complex& value, CVec& grad) const;
  /// |den(z)|, for pole-distance certificates.
  double den_abs(std::span<const Complex> z) const;

 private:
  Polynomial num_;
  Polynomial den_;
};

}  // namespace cheese
