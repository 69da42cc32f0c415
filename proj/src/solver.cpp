#include "priorpose/solver.hpp"
#include "priorpose/geometry.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace priorpose {

namespace {

// Cubic monomials in the elimination order: the first ten are eliminated,
// the last ten are x*{z^2,z,1}, y*{z^2,z,1}, {z^3,z^2,z,1}.
constexpr std::array<std::array<int, 3>, 20> kMonomials{{
    {3, 0, 0}, {0, 3, 0}, {2, 1, 0}, {1, 2, 0}, {2, 0, 1}, {2, 0, 0}, {0, 2, 1},
    {0, 2, 0}, {1, 1, 1}, {1, 1, 0}, {1, 0, 2}, {1, 0, 1}, {1, 0, 0}, {0, 1, 2},
    {0, 1, 1}, {0, 1, 0}, {0, 0, 3}, {0, 0, 2}, {0, 0, 1}, {0, 0, 0},
}};

constexpr int monomial_index(int a, int b, int c) {
    for (int i = 0; i < 20; ++i) {
        if (kMonomials[static_cast<size_t>(i)][0] == a && kMonomials[static_cast<size_t>(i)][1] == b &&
            kMonomials[static_cast<size_t>(i)][2] == c)
            return i;
    }
    return -1;
}

// Monomials of degree <= 1 and <= 2, as slots of the 20-entry layout.
constexpr std::array<int, 4> kLinear{monomial_index(1, 0, 0), monomial_index(0, 1, 0), monomial_index(0, 0, 1),
                                     monomial_index(0, 0, 0)};
constexpr std::array<int, 10> kQuadratic{
    monomial_index(2, 0, 0), monomial_index(0, 2, 0), monomial_index(1, 1, 0), monomial_index(1, 0, 1),
    monomial_index(0, 1, 1), monomial_index(0, 0, 2), monomial_index(1, 0, 0), monomial_index(0, 1, 0),
    monomial_index(0, 0, 1), monomial_index(0, 0, 0)};

constexpr std::array<std::array<int, 20>, 20> make_product_table() {
    std::array<std::array<int, 20>, 20> t{};
    for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 20; ++j) {
            const auto &a = kMonomials[static_cast<size_t>(i)];
            const auto &b = kMonomials[static_cast<size_t>(j)];
            t[static_cast<size_t>(i)][static_cast<size_t>(j)] = monomial_index(a[0] + b[0], a[1] + b[1], a[2] + b[2]);
        }
    return t;
}
constexpr auto kProduct = make_product_table();

// Trivariate polynomial of total degree <= 3 in the kMonomials layout.
using Poly3 = std::array<double, 20>;

Poly3 &operator+=(Poly3 &a, const Poly3 &b) {
    for (size_t i = 0; i < 20; ++i)
        a[i] += b[i];
    return a;
}

Poly3 axpy(double s, const Poly3 &a, const Poly3 &b) {
    Poly3 r;
    for (size_t i = 0; i < 20; ++i)
        r[i] = s * a[i] + b[i];
    return r;
}

// Product of a polynomial supported on `lhs_support` with a linear one.
template <size_t N>
Poly3 mul_linear(const Poly3 &p, const std::array<int, N> &lhs_support, const Poly3 &linear) {
    Poly3 r{};
    for (int i : lhs_support) {
        const double v = p[static_cast<size_t>(i)];
        for (int j : kLinear)
            r[static_cast<size_t>(kProduct[static_cast<size_t>(i)][static_cast<size_t>(j)])] += v * linear[static_cast<size_t>(j)];
    }
    return r;
}

Poly3 mul11(const Poly3 &a, const Poly3 &b) { return mul_linear(a, kLinear, b); }
Poly3 mul21(const Poly3 &a, const Poly3 &b) { return mul_linear(a, kQuadratic, b); }

Polynomial poly_mul(const Polynomial &a, const Polynomial &b) {
    Polynomial r(a.size() + b.size() - 1, 0.0);
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < b.size(); ++j)
            r[i + j] += a[i] * b[j];
    return r;
}

Polynomial poly_add(const Polynomial &a, const Polynomial &b, double sb = 1.0) {
    Polynomial r(std::max(a.size(), b.size()), 0.0);
    for (size_t i = 0; i < a.size(); ++i)
        r[i] += a[i];
    for (size_t i = 0; i < b.size(); ++i)
        r[i] += sb * b[i];
    return r;
}

double poly_eval(const Polynomial &p, double x) {
    double r = 0.0;
    for (auto it = p.rbegin(); it != p.rend(); ++it)
        r = r * x + *it;
    return r;
}

double poly_eval_derivative(const Polynomial &p, double x) {
    double r = 0.0;
    for (size_t i = p.size(); i-- > 1;)
        r = r * x + static_cast<double>(i) * p[i];
    return r;
}

double epipolar_residual_sq(std::span<const Correspondence> m, const EssentialMatrix &e) {
    double s = 0.0;
    for (const auto &c : m) {
        const double r = c.q.homogeneous().dot(e * c.p.homogeneous());
        s += r * r;
    }
    return s;
}

bool lexicographic_less(const EssentialMatrix &a, const EssentialMatrix &b) {
    for (int i = 0; i < 9; ++i) {
        if (a.data()[i] != b.data()[i])
            return a.data()[i] < b.data()[i];
    }
    return false;
}

}  // namespace

std::vector<double> real_roots(const Polynomial &coeffs) {
    Polynomial p = coeffs;
    double scale = 0.0;
    for (double v : p)
        scale = std::max(scale, std::abs(v));
    if (!(scale > 0.0) || !std::isfinite(scale))
        return {};
    while (p.size() > 1 && std::abs(p.back()) <= 1e-14 * scale)
        p.pop_back();
    const size_t n = p.size() - 1;
    if (n == 0)
        return {};

    using CompanionMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 10, 10>;
    if (n > 10)
        throw Error(ErrorCode::InvalidArgument, "real_roots: degree above 10");
    CompanionMatrix companion = CompanionMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (size_t i = 1; i < n; ++i)
        companion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
    // Substitute z = s w with s = |p0 / pn|^(1/n) to balance the companion matrix.
    double s = 1.0;
    if (p[0] != 0.0)
        s = std::pow(std::abs(p[0] / p[n]), 1.0 / static_cast<double>(n));
    if (!(s > 0.0) || !std::isfinite(s))
        s = 1.0;
    double sk = 1.0;  // s^(n - i)
    for (size_t i = n; i-- > 0;) {
        sk *= s;
        companion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n - 1)) = -p[i] / (p[n] * sk);
    }

    const Eigen::EigenSolver<CompanionMatrix> es(companion, false);
    if (es.info() != Eigen::Success)
        return {};

    std::vector<double> roots;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const std::complex<double> ev = es.eigenvalues()(i) * s;
        if (std::abs(ev.imag()) >= tol::kRealRoot * (1.0 + std::abs(ev.real())))
            continue;
        double z = ev.real();
        const double d = poly_eval_derivative(p, z);
        if (d != 0.0 && std::isfinite(d)) {
            const double step = poly_eval(p, z) / d;
            if (std::isfinite(step))
                z -= step;
        }
        roots.push_back(z);
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

std::vector<EssentialMatrix> five_point(std::span<const Correspondence> sample) {
    if (sample.size() < 5)
        throw Error(ErrorCode::TooFewCorrespondences, "five_point: needs exactly 5 correspondences");
    if (sample.size() != 5)
        throw Error(ErrorCode::InvalidArgument, "five_point: needs exactly 5 correspondences");
    for (const auto &c : sample) {
        if (!c.p.allFinite() || !c.q.allFinite())
            throw Error(ErrorCode::InvalidArgument, "five_point: non-finite coordinates");
    }

    // Epipolar constraint rows: q^T E p = sum_ij q_i p_j E_ij, E row-major.
    // The null space of the 5x9 system is read off a full QR of its transpose.
    Eigen::Matrix<double, 9, 5> qt;
    for (int k = 0; k < 5; ++k) {
        const Eigen::Vector3d ph = sample[static_cast<size_t>(k)].p.homogeneous().normalized();
        const Eigen::Vector3d qh = sample[static_cast<size_t>(k)].q.homogeneous().normalized();
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                qt(3 * i + j, k) = qh(i) * ph(j);
    }
    const Eigen::ColPivHouseholderQR<Eigen::Matrix<double, 9, 5>> qr(qt);
    const auto &rdiag = qr.matrixQR().diagonal();
    if (!(std::abs(rdiag(0)) > 0.0) || std::abs(rdiag(4)) / std::abs(rdiag(0)) < 1e-10)
        return {};
    const Eigen::Matrix<double, 9, 9> qfull = qr.householderQ();

    std::array<Eigen::Matrix3d, 4> basis;
    for (int b = 0; b < 4; ++b) {
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                basis[static_cast<size_t>(b)](i, j) = qfull(3 * i + j, 5 + b);
    }

    // E(x, y, z) = x X + y Y + z Z + W, entries linear in (x, y, z).
    std::array<Poly3, 9> e{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            Poly3 &p = e[static_cast<size_t>(3 * i + j)];
            p[static_cast<size_t>(kLinear[0])] = basis[0](i, j);
            p[static_cast<size_t>(kLinear[1])] = basis[1](i, j);
            p[static_cast<size_t>(kLinear[2])] = basis[2](i, j);
            p[static_cast<size_t>(kLinear[3])] = basis[3](i, j);
        }
    auto E = [&](int i, int j) -> const Poly3 & { return e[static_cast<size_t>(3 * i + j)]; };

    std::array<Poly3, 10> constraints{};
    {
        const Poly3 c0 = axpy(-1.0, mul11(E(1, 2), E(2, 1)), mul11(E(1, 1), E(2, 2)));
        const Poly3 c1 = axpy(-1.0, mul11(E(1, 2), E(2, 0)), mul11(E(1, 0), E(2, 2)));
        const Poly3 c2 = axpy(-1.0, mul11(E(1, 1), E(2, 0)), mul11(E(1, 0), E(2, 1)));
        constraints[0] = mul21(c0, E(0, 0));
        constraints[0] = axpy(-1.0, mul21(c1, E(0, 1)), constraints[0]);
        constraints[0] += mul21(c2, E(0, 2));
    }

    // 2 E E^T E - trace(E E^T) E = 0
    std::array<Poly3, 9> eet{};
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
            for (int k = 0; k < 3; ++k)
                eet[static_cast<size_t>(3 * i + j)] += mul11(E(i, k), E(j, k));
            eet[static_cast<size_t>(3 * j + i)] = eet[static_cast<size_t>(3 * i + j)];
        }
    Poly3 trace = eet[0];
    trace += eet[4];
    trace += eet[8];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            Poly3 acc{};
            for (int k = 0; k < 3; ++k)
                acc += mul21(eet[static_cast<size_t>(3 * i + k)], E(k, j));
            constraints[static_cast<size_t>(1 + 3 * i + j)] = axpy(2.0, acc, axpy(-1.0, mul21(trace, E(i, j)), Poly3{}));
        }

    Eigen::Matrix<double, 10, 20> a;
    for (int r = 0; r < 10; ++r)
        for (int col = 0; col < 20; ++col)
            a(r, col) = constraints[static_cast<size_t>(r)][static_cast<size_t>(col)];

    const Eigen::FullPivLU<Eigen::Matrix<double, 10, 10>> lu(a.leftCols<10>());
    if (!lu.isInvertible())
        return {};
    const Eigen::Matrix<double, 10, 10> b = lu.solve(a.rightCols<10>());

    // Row pairs (x^2 z, x^2), (y^2 z, y^2), (xyz, xy): row_r - z row_s leaves
    // polynomials in z multiplying x, y and 1.
    using PolyRow = std::array<Polynomial, 3>;
    auto hidden_row = [&](int r, int s) {
        PolyRow row;
        row[0] = {b(r, 2), b(r, 1) - b(s, 2), b(r, 0) - b(s, 1), -b(s, 0)};
        row[1] = {b(r, 5), b(r, 4) - b(s, 5), b(r, 3) - b(s, 4), -b(s, 3)};
        row[2] = {b(r, 9), b(r, 8) - b(s, 9), b(r, 7) - b(s, 8), b(r, 6) - b(s, 7), -b(s, 6)};
        return row;
    };
    const std::array<PolyRow, 3> m{hidden_row(4, 5), hidden_row(6, 7), hidden_row(8, 9)};

    auto minor = [&](int r0, int r1, int c0, int c1) {
        return poly_add(poly_mul(m[static_cast<size_t>(r0)][static_cast<size_t>(c0)], m[static_cast<size_t>(r1)][static_cast<size_t>(c1)]),
                        poly_mul(m[static_cast<size_t>(r0)][static_cast<size_t>(c1)], m[static_cast<size_t>(r1)][static_cast<size_t>(c0)]), -1.0);
    };
    Polynomial det = poly_mul(m[0][0], minor(1, 2, 1, 2));
    det = poly_add(det, poly_mul(m[0][1], minor(1, 2, 0, 2)), -1.0);
    det = poly_add(det, poly_mul(m[0][2], minor(1, 2, 0, 1)));

    std::vector<EssentialMatrix> solutions;
    for (double z : real_roots(det)) {
        Eigen::Matrix3d mz;
        for (int r = 0; r < 3; ++r)
            for (int col = 0; col < 3; ++col)
                mz(r, col) = poly_eval(m[static_cast<size_t>(r)][static_cast<size_t>(col)], z);

        // [x, y, 1] spans the null space of M(z); take the best-conditioned
        // row cross product.
        const std::array<Eigen::Vector3d, 3> crosses{
            Eigen::Vector3d(mz.row(0).cross(mz.row(1))),
            Eigen::Vector3d(mz.row(0).cross(mz.row(2))),
            Eigen::Vector3d(mz.row(1).cross(mz.row(2))),
        };
        const auto best = std::max_element(crosses.begin(), crosses.end(),
                                           [](const auto &l, const auto &r) { return l.norm() < r.norm(); });
        const Eigen::Vector3d &v = *best;
        if (!(std::abs(v(2)) > tol::kDegenerateNorm * v.norm()))
            continue;
        const double x = v(0) / v(2);
        const double y = v(1) / v(2);

        EssentialMatrix sol = x * basis[0] + y * basis[1] + z * basis[2] + basis[3];
        const double n = sol.norm();
        if (!(n > 0.0) || !sol.allFinite())
            continue;
        sol /= n;

        bool ok = is_essential(sol);
        for (const auto &c : sample)
            ok = ok && std::abs(c.q.homogeneous().dot(sol * c.p.homogeneous())) < tol::kMinimalResidual;
        if (ok)
            solutions.push_back(sol);
    }

    std::vector<std::pair<double, EssentialMatrix>> keyed;
    keyed.reserve(solutions.size());
    for (const auto &s : solutions)
        keyed.emplace_back(epipolar_residual_sq(sample, s), s);
    std::sort(keyed.begin(), keyed.end(), [](const auto &l, const auto &r) {
        if (l.first != r.first)
            return l.first < r.first;
        return lexicographic_less(l.second, r.second);
    });
    solutions.clear();
    for (auto &k : keyed)
        solutions.push_back(k.second);
    return solutions;
}

namespace {

// Similarity taking points to zero centroid and mean distance sqrt(2).
Eigen::Matrix3d hartley_normalization(std::span<const Correspondence> m, bool second) {
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    for (const auto &c : m)
        centroid += second ? c.q : c.p;
    centroid /= static_cast<double>(m.size());
    double mean_dist = 0.0;
    for (const auto &c : m)
        mean_dist += ((second ? c.q : c.p) - centroid).norm();
    mean_dist /= static_cast<double>(m.size());
    if (!(mean_dist > tol::kDegenerateNorm))
        throw Error(ErrorCode::DegenerateInput, "eight_point_normalized: coincident points");
    const double s = std::sqrt(2.0) / mean_dist;
    Eigen::Matrix3d t;
    t << s, 0.0, -s * centroid(0), 0.0, s, -s * centroid(1), 0.0, 0.0, 1.0;
    return t;
}

}  // namespace

EssentialMatrix eight_point_normalized(std::span<const Correspondence> m) {
    if (m.size() < 8)
        throw Error(ErrorCode::TooFewCorrespondences, "eight_point_normalized: needs at least 8 correspondences");

    const Eigen::Matrix3d t1 = hartley_normalization(m, false);
    const Eigen::Matrix3d t2 = hartley_normalization(m, true);

    Eigen::MatrixXd a(static_cast<Eigen::Index>(m.size()), 9);
    for (size_t k = 0; k < m.size(); ++k) {
        const Eigen::Vector3d ph = t1 * m[k].p.homogeneous();
        const Eigen::Vector3d qh = t2 * m[k].q.homogeneous();
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                a(static_cast<Eigen::Index>(k), 3 * i + j) = qh(i) * ph(j);
    }

    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const auto sv = svd.singularValues();
    if (sv.size() < 9 || !(sv(0) > 0.0) || sv(7) / sv(0) < 1e-10)
        throw Error(ErrorCode::DegenerateInput, "eight_point_normalized: rank-deficient design matrix");

    Eigen::Matrix3d en;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            en(i, j) = svd.matrixV()(3 * i + j, 8);

    Eigen::Matrix3d e = t2.transpose() * en * t1;
    const Eigen::JacobiSVD<Eigen::Matrix3d> esvd(e, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double s = 0.5 * (esvd.singularValues()(0) + esvd.singularValues()(1));
    e = esvd.matrixU() * Eigen::Vector3d(s, s, 0.0).asDiagonal() * esvd.matrixV().transpose();
    return e / e.norm();
}

}  // namespace priorpose
