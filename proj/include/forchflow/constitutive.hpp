#pragma once

// Forchheimer polynomials g(s) = sum_j a_j s^{alpha_j} and the conductivity
// kernel K(xi) = 1 / g(s(xi)) where s(xi) solves s g(s) = xi.

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace forchflow {

class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
public:
    NumericError(const std::string& what, double lo, double hi)
        : std::runtime_error(what), bracketLo(lo), bracketHi(hi) {}
    double bracketLo;
    double bracketHi;
};

/// Small dense vector used for pressure gradients (n <= 3).
struct Vec {
    std::array<double, 3> v{0.0, 0.0, 0.0};
    int dim = 1;

    Vec() = default;
    Vec(double x) : v{x, 0.0, 0.0}, dim(1) {}
    Vec(double x, double y) : v{x, y, 0.0}, dim(2) {}
    Vec(double x, double y, double z) : v{x, y, z}, dim(3) {}

    double operator[](int i) const { return v[static_cast<std::size_t>(i)]; }
    double& operator[](int i) { return v[static_cast<std::size_t>(i)]; }
    double norm() const;
    double dot(const Vec& o) const;
};

Vec operator-(const Vec& x, const Vec& y);
Vec operator*(double c, const Vec& x);

/// Symmetric n x n tensor, row-major in a 3x3 buffer.
struct SymTensor {
    std::array<double, 9> m{};
    int dim = 1;
    double operator()(int i, int j) const { return m[static_cast<std::size_t>(3 * i + j)]; }
    double& operator()(int i, int j) { return m[static_cast<std::size_t>(3 * i + j)]; }
    /// Eigenvalues in ascending order (closed form for n <= 2, Jacobi sweeps for n = 3).
    std::vector<double> eigenvalues() const;
};

class ForchheimerPolynomial {
public:
    /// Throws DomainError unless alpha_0 = 0, exponents strictly increase,
    /// a_0 > 0, a_N > 0 and every coefficient is non-negative.
    ForchheimerPolynomial(std::vector<double> exponents, std::vector<double> coefficients);

    static ForchheimerPolynomial darcy(double a0);
    static ForchheimerPolynomial twoTerm(double alpha, double beta);
    static ForchheimerPolynomial threeTerm(double alpha, double beta, double gamma);
    static ForchheimerPolynomial powerLaw(double alpha, double gammaM, double m);

    std::span<const double> exponents() const { return exponents_; }
    std::span<const double> coefficients() const { return coefficients_; }
    std::size_t termCount() const { return exponents_.size(); }
    /// N, the index of the leading term.
    std::size_t order() const { return exponents_.size() - 1; }
    double degree() const { return exponents_.back(); }
    bool isDarcy() const { return exponents_.size() == 1; }
    bool sameExponents(const ForchheimerPolynomial& other) const;

    ForchheimerPolynomial withCoefficients(std::vector<double> coefficients) const;

    double operator()(double s) const;
    /// s * g'(s), finite at s = 0 for every admissible exponent.
    double sTimesDerivative(double s) const;

private:
    std::vector<double> exponents_;
    std::vector<double> coefficients_;
};

struct DegeneracyExponents {
    double a;
    double b;
    double chi;
};

DegeneracyExponents degeneracyExponents(const ForchheimerPolynomial& poly);

struct KernelEvaluation {
    double xi = 0.0;
    double s = 0.0;
    double K = 0.0;
    double Kprime = 0.0;
    double xiKprime = 0.0;
};

struct DegreeCondition {
    bool satisfiesDC;
    bool satisfiesSDC;
};

struct MonotonicityGap {
    double lhs;
    double rhsCoercive;
    double rhsPerturb;
};

double evalG(const ForchheimerPolynomial& poly, double s);
double solveS(const ForchheimerPolynomial& poly, double xi);
KernelEvaluation evalK(const ForchheimerPolynomial& poly, double xi);

/// H(xi) = int_0^{xi^2} K(sqrt(s)) ds, evaluated through the velocity
/// substitution u = s g(s) which turns the integral into a polynomial in s(xi).
double evalH(const ForchheimerPolynomial& poly, double xi);

/// The same integral by adaptive Simpson quadrature in u = sqrt(s).
double evalHQuadrature(const ForchheimerPolynomial& poly, double xi, double relTol = 1e-9);

SymTensor fluxJacobian(const ForchheimerPolynomial& poly, const Vec& y);

DegreeCondition degreeCondition(const ForchheimerPolynomial& poly, int n);

MonotonicityGap monotonicityGap(const ForchheimerPolynomial& poly1, const ForchheimerPolynomial& poly2,
                                const Vec& y, const Vec& yp);

/// Componentwise max / min of two coefficient vectors over shared exponents.
ForchheimerPolynomial coefficientMax(const ForchheimerPolynomial& p, const ForchheimerPolynomial& q);
ForchheimerPolynomial coefficientMin(const ForchheimerPolynomial& p, const ForchheimerPolynomial& q);

/// Max-norm distance between the coefficient vectors.
double coefficientDistance(const ForchheimerPolynomial& p, const ForchheimerPolynomial& q);

}  // namespace forchflow
