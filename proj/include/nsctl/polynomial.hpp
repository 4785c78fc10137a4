#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "nsctl/error.hpp"

namespace nsctl {

using Rational = boost::multiprecision::cpp_rational;
using Exponents = std::vector<int>;

inline int total_degree(const Exponents& e) {
  return std::accumulate(e.begin(), e.end(), 0);
}

// Sparse multivariate polynomial over a fixed number of variables.
// Terms with an exactly zero coefficient are never stored.
template <typename T>
class Polynomial {
 public:
  using Terms = std::map<Exponents, T>;

  explicit Polynomial(std::size_t nvars = 0) : nvars_(nvars) {}

  static Polynomial constant(std::size_t nvars, const T& c) {
    Polynomial p(nvars);
    p.add_term(Exponents(nvars, 0), c);
    return p;
  }

  static Polynomial variable(std::size_t nvars, std::size_t index) {
    Exponents e(nvars, 0);
    e.at(index) = 1;
    return monomial(std::move(e), T(1));
  }

  static Polynomial monomial(Exponents e, const T& c) {
    Polynomial p(e.size());
    p.add_term(e, c);
    return p;
  }

  std::size_t nvars() const { return nvars_; }
  const Terms& terms() const { return terms_; }
  std::size_t term_count() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }

  // -1 for the zero polynomial.
  int degree() const {
    int d = -1;
    for (const auto& [e, c] : terms_) d = std::max(d, total_degree(e));
    return d;
  }

  bool is_homogeneous() const {
    if (terms_.empty()) return true;
    const int d = total_degree(terms_.begin()->first);
    return std::all_of(terms_.begin(), terms_.end(),
                       [d](const auto& t) { return total_degree(t.first) == d; });
  }

  T coefficient(const Exponents& e) const {
    auto it = terms_.find(e);
    return it == terms_.end() ? T(0) : it->second;
  }

  void add_term(const Exponents& e, const T& c) {
    if (e.size() != nvars_)
      throw Error(ErrorKind::invalid_argument, "monomial arity does not match polynomial");
    if (c == T(0)) return;
    auto [it, inserted] = terms_.try_emplace(e, c);
    if (!inserted) {
      it->second += c;
      if (it->second == T(0)) terms_.erase(it);
    }
  }

  // Homogeneous component of the given total degree.
  Polynomial homogeneous_part(int d) const {
    Polynomial out(nvars_);
    for (const auto& [e, c] : terms_)
      if (total_degree(e) == d) out.terms_.emplace(e, c);
    return out;
  }

  Polynomial derivative(std::size_t var) const {
    Polynomial out(nvars_);
    for (const auto& [e, c] : terms_) {
      if (e[var] == 0) continue;
      Exponents f = e;
      f[var] -= 1;
      out.add_term(f, c * T(e[var]));
    }
    return out;
  }

  // Multiply by the monomial x^shift.
  Polynomial shifted(const Exponents& shift, const T& scale = T(1)) const {
    Polynomial out(nvars_);
    if (scale == T(0)) return out;
    for (const auto& [e, c] : terms_) {
      Exponents f = e;
      for (std::size_t i = 0; i < nvars_; ++i) f[i] += shift[i];
      out.terms_.emplace(std::move(f), c * scale);
    }
    return out;
  }

  template <typename U>
  U evaluate(std::span<const U> x) const {
    U sum = U(0);
    for (const auto& [e, c] : terms_) {
      U term = static_cast<U>(c);
      for (std::size_t i = 0; i < nvars_; ++i)
        for (int p = 0; p < e[i]; ++p) term *= x[i];
      sum += term;
    }
    return sum;
  }

  template <typename U, typename Convert>
  Polynomial<U> map_coefficients(Convert convert) const {
    Polynomial<U> out(nvars_);
    for (const auto& [e, c] : terms_) out.add_term(e, convert(c));
    return out;
  }

  Polynomial& operator+=(const Polynomial& o) {
    check_arity(o);
    for (const auto& [e, c] : o.terms_) add_term(e, c);
    return *this;
  }
  Polynomial& operator-=(const Polynomial& o) {
    check_arity(o);
    for (const auto& [e, c] : o.terms_) add_term(e, -c);
    return *this;
  }
  Polynomial& operator*=(const T& s) {
    if (s == T(0)) {
      terms_.clear();
      return *this;
    }
    for (auto& [e, c] : terms_) c *= s;
    return *this;
  }

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, const T& s) { return a *= s; }
  friend Polynomial operator*(const T& s, Polynomial a) { return a *= s; }
  friend Polynomial operator-(Polynomial a) { return a *= T(-1); }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    a.check_arity(b);
    Polynomial out(a.nvars_);
    for (const auto& [ea, ca] : a.terms_)
      for (const auto& [eb, cb] : b.terms_) {
        Exponents e = ea;
        for (std::size_t i = 0; i < e.size(); ++i) e[i] += eb[i];
        out.add_term(e, ca * cb);
      }
    return out;
  }

  friend bool operator==(const Polynomial& a, const Polynomial& b) {
    return a.nvars_ == b.nvars_ && a.terms_ == b.terms_;
  }

 private:
  void check_arity(const Polynomial& o) const {
    if (o.nvars_ != nvars_)
      throw Error(ErrorKind::invalid_argument, "polynomial arity mismatch");
  }

  std::size_t nvars_;
  Terms terms_;
};

inline double to_double(const Rational& r) { return static_cast<double>(r); }
inline double to_double(double d) { return d; }

}  // namespace nsctl
