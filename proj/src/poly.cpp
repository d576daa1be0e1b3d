#include "cheese/poly.hpp"

#include <algorithm>
#include <map>

namespace cheese {

Polynomial Polynomial::constant(Complex c, unsigned arity) {
  Polynomial p(arity);
  if (c != 0.0) p.terms_.push_back(Term{c, std::vector<unsigned>(arity, 0u)});
  return p;
}

Polynomial Polynomial::variable(unsigned var, unsigned arity) {
  Polynomial p(arity);
  std::vector<unsigned> e(arity, 0u);
  e.at(var) = 1;
  p.terms_.push_back(Term{Complex(1.0, 0.0), std::move(e)});
  return p;
}

unsigned Polynomial::total_degree() const {
  unsigned d = 0;
  for (const auto& t : terms_) {
    unsigned s = 0;
    for (unsigned e : t.exps) s += e;
    d = std::max(d, s);
  }
  return d;
}

Polynomial Polynomial::promoted(unsigned new_arity) const {
  if (new_arity < arity_) throw Error("invalid-arity", "cannot demote a polynomial");
  Polynomial p(new_arity);
  for (const auto& t : terms_) {
    std::vector<unsigned> e = t.exps;
    e.resize(new_arity, 0u);
    p.terms_.push_back(Term{t.coef, std::move(e)});
  }
  return p;
}

Complex Polynomial::eval(std::span<const Complex> z) const {
  Complex acc = 0.0;
  for (const auto& t : terms_) {
    Complex m = t.coef;
    for (unsigned v = 0; v < arity_; ++v) {
      Complex zp = z[v];
      for (unsigned e = 0; e < t.exps[v]; ++e) m *= zp;
    }
    acc += m;
  }
  return acc;
}

void Polynomial::eval_grad(std::span<const Complex> z, Complex& value, CVec& grad) const {
  value = 0.0;
  grad.assign(arity_, Complex(0.0, 0.0));
  for (const auto& t : terms_) {
    // powers per variable
    Complex m = t.coef;
    for (unsigned v = 0; v < arity_; ++v)
      for (unsigned e = 0; e < t.exps[v]; ++e) m *= z[v];
    value += m;
    for (unsigned v = 0; v < arity_; ++v) {
      if (t.exps[v] == 0) continue;
      Complex g = t.coef * static_cast<double>(t.exps[v]);
      for (unsigned u = 0; u < arity_; ++u) {
        unsigned e = t.exps[u] - (u == v ? 1u : 0u);
        for (unsigned i = 0; i < e; ++i) g *= z[u];
      }
      grad[v] += g;
    }
  }
}

void Polynomial::add_term(Complex coef, std::vector<unsigned> exps) {
  if (exps.size() != arity_) throw Error("invalid-arity", "term arity mismatch");
  terms_.push_back(Term{coef, std::move(exps)});
  normalize();
}

void Polynomial::normalize() {
  std::map<std::vector<unsigned>, Complex> acc;
  for (auto& t : terms_) acc[t.exps] += t.coef;
  terms_.clear();
  for (auto& [e, c] : acc)
    if (c != 0.0) terms_.push_back(Term{c, e});
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  unsigned ar = std::max(arity_, o.arity_);
  Polynomial a = promoted(ar), b = o.promoted(ar);
  for (auto& t : b.terms_) a.terms_.push_back(std::move(t));
  a.normalize();
  return a;
}

Polynomial Polynomial::operator-(const Polynomial& o) const {
  return *this + o * Complex(-1.0, 0.0);
}

Polynomial Polynomial::operator*(const Polynomial& o) const {
  unsigned ar = std::max(arity_, o.arity_);
  Polynomial a = promoted(ar), b = o.promoted(ar);
  Polynomial out(ar);
  for (const auto& s : a.terms_) {
    for (const auto& t : b.terms_) {
      std::vector<unsigned> e(ar);
      for (unsigned v = 0; v < ar; ++v) e[v] = s.exps[v] + t.exps[v];
      out.terms_.push_back(Term{s.coef * t.coef, std::move(e)});
    }
  }
  out.normalize();
  return out;
}

Polynomial Polynomial::operator*(Complex s) const {
  Polynomial p(arity_);
  if (s == 0.0) return p;
  for (const auto& t : terms_) p.terms_.push_back(Term{t.coef * s, t.exps});
  return p;
}

Polynomial Polynomial::partial(unsigned var) const {
  Polynomial p(arity_);
  for (const auto& t : terms_) {
    if (t.exps[var] == 0) continue;
    std::vector<unsigned> e = t.exps;
    double k = e[var];
    e[var] -= 1;
    p.terms_.push_back(Term{t.coef * k, std::move(e)});
  }
  p.normalize();
  return p;
}

RationalFunction::RationalFunction(Polynomial num, Polynomial den)
    : num_(std::move(num)), den_(std::move(den)) {
  if (den_.is_zero()) throw Error("invalid-rational", "denominator is identically zero");
  unsigned ar = std::max(num_.arity(), den_.arity());
  num_ = num_.promoted(ar);
  den_ = den_.promoted(ar);
}

RationalFunction RationalFunction::constant(Complex c, unsigned arity) {
  return RationalFunction(Polynomial::constant(c, arity));
}

bool RationalFunction::den_is_one() const {
  const auto& t = den_.terms();
  if (t.size() != 1 || t[0].coef != Complex(1.0, 0.0)) return false;
  for (unsigned e : t[0].exps)
    if (e != 0) return false;
  return true;
}

RationalFunction RationalFunction::promoted(unsigned new_arity) const {
  return RationalFunction(num_.promoted(new_arity), den_.promoted(new_arity));
}

Complex RationalFunction::eval(std::span<const Complex> z) const {
  return num_.eval(z) / den_.eval(z);
}

Complex RationalFunction::eval_checked(std::span<const Complex> z, double den_floor) const {
  Complex d = den_.eval(z);
  if (std::abs(d) < den_floor)
    throw Error("pole-proximity", "denominator modulus " + std::to_string(std::abs(d)) +
                                      " below floor");
  return num_.eval(z) / d;
}

void RationalFunction::eval_grad(std::span<const Complex> z, Complex& value,
                                 CVec& grad) const {
  Complex p, q;
  CVec gp, gq;
  num_.eval_grad(z, p, gp);
  den_.eval_grad(z, q, gq);
  value = p / q;
  grad.assign(arity(), Complex(0.0, 0.0));
  for (unsigned v = 0; v < arity(); ++v) grad[v] = (gp[v] * q - p * gq[v]) / (q * q);
}

double RationalFunction::den_abs(std::span<const Complex> z) const {
  return std::abs(den_.eval(z));
}

}  // namespace cheese
