#include "forchflow/constitutive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace forchflow {

double Vec::norm() const { return std::sqrt(dot(*this)); }

double Vec::dot(const Vec& o) const {
    double acc = 0.0;
    for (int i = 0; i < std::max(dim, o.dim); ++i) acc += (*this)[i] * o[i];
    return acc;
}

Vec operator-(const Vec& x, const Vec& y) {
    Vec r;
    r.dim = std::max(x.dim, y.dim);
    for (int i = 0; i < 3; ++i) r[i] = x[i] - y[i];
    return r;
}

Vec operator*(double c, const Vec& x) {
    Vec r = x;
    for (int i = 0; i < 3; ++i) r[i] *= c;
    return r;
}

std::vector<double> SymTensor::eigenvalues() const {
    if (dim == 1) return {(*this)(0, 0)};
    if (dim == 2) {
        const double p = 0.5 * ((*this)(0, 0) + (*this)(1, 1));
        const double q = 0.5 * ((*this)(0, 0) - (*this)(1, 1));
        const double r = std::hypot(q, (*this)(0, 1));
        return {p - r, p + r};
    }
    // cyclic Jacobi
    std::array<double, 9> a = m;
    auto at = [&](int i, int j) -> double& { return a[static_cast<std::size_t>(3 * i + j)]; };
    for (int sweep = 0; sweep < 50; ++sweep) {
        const double off = at(0, 1) * at(0, 1) + at(0, 2) * at(0, 2) + at(1, 2) * at(1, 2);
        if (off < 1e-30) break;
        for (int p = 0; p < 2; ++p) {
            for (int q = p + 1; q < 3; ++q) {
                if (std::abs(at(p, q)) < 1e-300) continue;
                const double theta = (at(q, q) - at(p, p)) / (2.0 * at(p, q));
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < 3; ++k) {
                    const double akp = at(k, p);
                    const double akq = at(k, q);
                    at(k, p) = c * akp - s * akq;
                    at(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < 3; ++k) {
                    const double apk = at(p, k);
                    const double aqk = at(q, k);
                    at(p, k) = c * apk - s * aqk;
                    at(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> ev{at(0, 0), at(1, 1), at(2, 2)};
    std::sort(ev.begin(), ev.end());
    return ev;
}

// ---------------------------------------------------------------------------

ForchheimerPolynomial::ForchheimerPolynomial(std::vector<double> exponents, std::vector<double> coefficients)
    : exponents_(std::move(exponents)), coefficients_(std::move(coefficients)) {
    if (exponents_.empty() || exponents_.size() != coefficients_.size())
        throw DomainError("exponent and coefficient vectors must be non-empty and of equal length");
    if (exponents_.front() != 0.0) throw DomainError("first exponent must be 0");
    for (std::size_t j = 1; j < exponents_.size(); ++j) {
        if (!(exponents_[j] > exponents_[j - 1]))
            throw DomainError("exponents must be strictly increasing");
    }
    for (double e : exponents_)
        if (!std::isfinite(e)) throw DomainError("exponents must be finite");
    if (!(coefficients_.front() > 0.0)) throw DomainError("a₀ must be positive");
    if (!(coefficients_.back() > 0.0)) throw DomainError("leading coefficient aN must be positive");
    for (double c : coefficients_) {
        if (!std::isfinite(c) || c < 0.0) throw DomainError("coefficients must be finite and non-negative");
    }
}

ForchheimerPolynomial ForchheimerPolynomial::darcy(double a0) { return {{0.0}, {a0}}; }

ForchheimerPolynomial ForchheimerPolynomial::twoTerm(double alpha, double beta) {
    return {{0.0, 1.0}, {alpha, beta}};
}

ForchheimerPolynomial ForchheimerPolynomial::threeTerm(double alpha, double beta, double gamma) {
    return {{0.0, 1.0, 2.0}, {alpha, beta, gamma}};
}

ForchheimerPolynomial ForchheimerPolynomial::powerLaw(double alpha, double gammaM, double m) {
    if (!(m > 1.0)) throw DomainError("power law exponent m must exceed 1");
    return {{0.0, m - 1.0}, {alpha, gammaM}};
}

bool ForchheimerPolynomial::sameExponents(const ForchheimerPolynomial& other) const {
    return exponents_ == other.exponents_;
}

ForchheimerPolynomial ForchheimerPolynomial::withCoefficients(std::vector<double> coefficients) const {
    return {exponents_, std::move(coefficients)};
}

namespace {

// 0^alpha = 0 for alpha > 0 and 1 for alpha = 0.
inline double spow(double s, double alpha) {
    if (alpha == 0.0) return 1.0;
    if (s == 0.0) return 0.0;
    if (alpha == 1.0) return s;
    if (alpha == 2.0) return s * s;
    return std::pow(s, alpha);
}

}  // namespace

double ForchheimerPolynomial::operator()(double s) const {
    double acc = 0.0;
    for (std::size_t j = 0; j < exponents_.size(); ++j) acc += coefficients_[j] * spow(s, exponents_[j]);
    return acc;
}

double ForchheimerPolynomial::sTimesDerivative(double s) const {
    double acc = 0.0;
    for (std::size_t j = 1; j < exponents_.size(); ++j)
        acc += coefficients_[j] * exponents_[j] * spow(s, exponents_[j]);
    return acc;
}

DegeneracyExponents degeneracyExponents(const ForchheimerPolynomial& poly) {
    const double deg = poly.degree();
    const auto c = poly.coefficients();
    double chi = std::max(1.0 / c.front(), 1.0 / c.back());
    for (double cj : c) chi = std::max(chi, cj);
    return {deg / (1.0 + deg), deg / (2.0 + deg), chi};
}

double evalG(const ForchheimerPolynomial& poly, double s) {
    if (!(s >= 0.0)) throw DomainError("g(s) requires s >= 0");
    return poly(s);
}

double solveS(const ForchheimerPolynomial& poly, double xi) {
    if (!(xi >= 0.0)) throw DomainError("s(xi) requires xi >= 0");
    if (xi == 0.0) return 0.0;
    if (std::isinf(xi)) return xi;
    const auto c = poly.coefficients();
    const double a0 = c.front();
    if (poly.isDarcy()) return xi / a0;

    // s g(s) >= a0 s and s g(s) >= aN s^{1+alphaN}, so both roots bound s from above.
    double hi = std::max(1.0, xi / a0);
    double s = std::min(xi / a0, std::pow(xi / c.back(), 1.0 / (1.0 + poly.degree())));
    s = std::min(s, hi);
    double lo = 0.0;

    auto phi = [&](double x) { return x * poly(x) - xi; };

    // s g(s) - xi is convex and increasing, so Newton from above descends monotonically.
    bool converged = false;
    for (int it = 0; it < 100; ++it) {
        const double g = poly(s);
        const double f = s * g - xi;
        if (f == 0.0) {
            converged = true;
            break;
        }
        if (f > 0.0)
            hi = s;
        else
            lo = s;
        const double dphi = g + poly.sTimesDerivative(s);
        double next = s - f / dphi;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - s) <= 4.0 * std::numeric_limits<double>::epsilon() * s) {
            s = next;
            converged = true;
            break;
        }
        s = next;
    }
    if (!converged) {
        for (int it = 0; it < 2000 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (phi(mid) > 0.0)
                hi = mid;
            else
                lo = mid;
        }
        s = 0.5 * (lo + hi);
    }
    const double rel = std::abs(phi(s)) / std::max(xi, 1.0);
    if (!(rel <= 1e-12)) {
        std::ostringstream os;
        os << "root solve for s(xi) did not converge at xi=" << xi << " (relative residual " << rel << ")";
        throw NumericError(os.str(), lo, hi);
    }
    return s;
}

KernelEvaluation evalK(const ForchheimerPolynomial& poly, double xi) {
    if (!(xi >= 0.0)) throw DomainError("K(xi) requires xi >= 0");
    KernelEvaluation e;
    e.xi = xi;
    e.s = solveS(poly, xi);
    const double g = poly(e.s);
    const double sg1 = poly.sTimesDerivative(e.s);
    e.K = 1.0 / g;
    // xi K'(xi) = -s g'(s) / (g (g + s g'(s))), using xi = s g(s)
    e.xiKprime = -sg1 / (g * (g + sg1));
    if (xi > 0.0) {
        e.Kprime = e.xiKprime / xi;
    } else {
        // limit of -g'(s) / g^3 at s = 0
        const auto ex = poly.exponents();
        const auto co = poly.coefficients();
        if (poly.isDarcy()) {
            e.Kprime = 0.0;
        } else {
            std::size_t j = 1;
            while (j < co.size() && co[j] == 0.0) ++j;
            if (ex[j] < 1.0)
                e.Kprime = -std::numeric_limits<double>::infinity();
            else if (ex[j] == 1.0)
                e.Kprime = -co[j] / (g * g * g);
            else
                e.Kprime = 0.0;
        }
    }
    return e;
}

double evalH(const ForchheimerPolynomial& poly, double xi) {
    if (!(xi >= 0.0)) throw DomainError("H(xi) requires xi >= 0");
    if (xi == 0.0) return 0.0;
    // With u = s g(s): H = int_0^{s(xi)} 2 s (g + s g') ds = sum_j 2 a_j (1+alpha_j)/(2+alpha_j) s^{2+alpha_j}
    const double s = solveS(poly, xi);
    const auto ex = poly.exponents();
    const auto co = poly.coefficients();
    double acc = 0.0;
    for (std::size_t j = 0; j < ex.size(); ++j)
        acc += 2.0 * co[j] * (1.0 + ex[j]) / (2.0 + ex[j]) * std::pow(s, 2.0 + ex[j]);
    return acc;
}

namespace {

template <class F>
double adaptiveSimpson(const F& f, double a, double b, double fa, double fm, double fb, double whole, double eps,
                       int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * eps) return left + right + delta / 15.0;
    return adaptiveSimpson(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
           adaptiveSimpson(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
}

}  // namespace

double evalHQuadrature(const ForchheimerPolynomial& poly, double xi, double relTol) {
    if (!(xi >= 0.0)) throw DomainError("H(xi) requires xi >= 0");
    if (xi == 0.0) return 0.0;
    auto f = [&](double u) { return 2.0 * u * evalK(poly, u).K; };
    const double fa = f(0.0);
    const double fm = f(0.5 * xi);
    const double fb = f(xi);
    const double whole = xi / 6.0 * (fa + 4.0 * fm + fb);
    // K(xi) xi^2 <= H bounds the magnitude from below, which fixes the absolute target.
    const double scale = evalK(poly, xi).K * xi * xi;
    return adaptiveSimpson(f, 0.0, xi, fa, fm, fb, whole, relTol * scale, 50);
}

SymTensor fluxJacobian(const ForchheimerPolynomial& poly, const Vec& y) {
    SymTensor J;
    J.dim = y.dim;
    const double xi = y.norm();
    if (xi < 1e-12) {
        const double k0 = 1.0 / poly.coefficients().front();
        for (int i = 0; i < y.dim; ++i) J(i, i) = k0;
        return J;
    }
    const KernelEvaluation e = evalK(poly, xi);
    for (int i = 0; i < y.dim; ++i) {
        for (int j = 0; j < y.dim; ++j) {
            J(i, j) = e.xiKprime * (y[i] / xi) * (y[j] / xi);
        }
        J(i, i) += e.K;
    }
    return J;
}

DegreeCondition degreeCondition(const ForchheimerPolynomial& poly, int n) {
    if (n < 1) throw DomainError("spatial dimension must be >= 1");
    if (n <= 2) return {true, true};
    const double cap = 4.0 / (n - 2.0);
    return {poly.degree() <= cap, poly.degree() < cap};
}

ForchheimerPolynomial coefficientMax(const ForchheimerPolynomial& p, const ForchheimerPolynomial& q) {
    if (!p.sameExponents(q)) throw DomainError("polynomials must share exponent vectors");
    std::vector<double> c(p.termCount());
    for (std::size_t j = 0; j < c.size(); ++j) c[j] = std::max(p.coefficients()[j], q.coefficients()[j]);
    return p.withCoefficients(std::move(c));
}

ForchheimerPolynomial coefficientMin(const ForchheimerPolynomial& p, const ForchheimerPolynomial& q) {
    if (!p.sameExponents(q)) throw DomainError("polynomials must share exponent vectors");
    std::vector<double> c(p.termCount());
    for (std::size_t j = 0; j < c.size(); ++j) c[j] = std::min(p.coefficients()[j], q.coefficients()[j]);
    return p.withCoefficients(std::move(c));
}

double coefficientDistance(const ForchheimerPolynomial& p, const ForchheimerPolynomial& q) {
    if (!p.sameExponents(q)) throw DomainError("polynomials must share exponent vectors");
    double d = 0.0;
    for (std::size_t j = 0; j < p.termCount(); ++j)
        d = std::max(d, std::abs(p.coefficients()[j] - q.coefficients()[j]));
    return d;
}

MonotonicityGap monotonicityGap(const ForchheimerPolynomial& poly1, const ForchheimerPolynomial& poly2,
                                const Vec& y, const Vec& yp) {
    if (!poly1.sameExponents(poly2)) throw DomainError("polynomials must share exponent vectors");
    const double ny = y.norm();
    const double nyp = yp.norm();
    const double big = std::max(ny, nyp);
    const Vec d = y - yp;
    const Vec flux = (evalK(poly1, ny).K * y) - (evalK(poly2, nyp).K * yp);

    const double a = degeneracyExponents(poly1).a;
    const double chi = std::max(degeneracyExponents(poly1).chi, degeneracyExponents(poly2).chi);
    const double dist = coefficientDistance(poly1, poly2);
    const double dn = d.norm();

    MonotonicityGap gap;
    gap.lhs = flux.dot(d);
    gap.rhsCoercive = (1.0 - a) * evalK(coefficientMax(poly1, poly2), big).K * dn * dn;
    gap.rhsPerturb = static_cast<double>(poly1.order()) * chi * dist * evalK(coefficientMin(poly1, poly2), big).K *
                     big * dn;
    return gap;
}

}  // namespace forchflow
