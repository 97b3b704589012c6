// Characteristic roots of z' = A z + B z(t-1): zeros of
//     f(lambda) = det(lambda I - A - B e^{-lambda}).
// Roots with Re >= re_lo satisfy |lambda| <= ||A|| + ||B|| e^{-re_lo}, so a
// box of that size holds all of them. The argument principle gives their
// number; a seeded Newton scan finds them.

#include "rdde/spectrum.hpp"

#include "rdde/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

namespace rdde {

namespace {

using cd = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

struct Char {
    CMatrix A, B;
    int N;

    CMatrix M(cd lam) const {
        return lam * CMatrix::Identity(N, N) - A - B * std::exp(-lam);
    }
    CMatrix dM(cd lam) const { return CMatrix::Identity(N, N) + B * std::exp(-lam); }

    cd det(cd lam) const { return M(lam).partialPivLu().determinant(); }

    // f / f' = 1 / tr(M^{-1} M')
    std::optional<cd> newton_step(cd lam) const {
        Eigen::PartialPivLU<CMatrix> lu(M(lam));
        const cd tr = lu.solve(dM(lam)).trace();
        if (!std::isfinite(tr.real()) || !std::isfinite(tr.imag()) || std::abs(tr) == 0.0)
            return std::nullopt;
        return 1.0 / tr;
    }

    double residual(cd lam) const {
        Eigen::JacobiSVD<CMatrix> svd(M(lam));
        const double scale = std::max(1.0, std::abs(lam) + A.norm() + B.norm() * std::exp(-lam.real()));
        return svd.singularValues()(N - 1) / scale;
    }
};

// Net change of arg f along the segment a -> b, subdividing until every
// increment is well below pi. e^{-lambda} turns once per 2 pi of Im lambda,
// so pieces are also kept short enough to resolve that.
double arg_change(const Char& ch, cd a, cd b, cd fa, cd fb, int depth) {
    const double d = std::arg(fb / fa);
    if (depth > 60) throw NumericalError("characteristic_root_oracle: root on the integration contour");
    if (std::abs(d) < 0.5 && std::abs(b - a) <= 0.25) return d;
    const cd m = 0.5 * (a + b);
    const cd fm = ch.det(m);
    if (fm == 0.0) throw NumericalError("characteristic_root_oracle: root on the integration contour");
    return arg_change(ch, a, m, fa, fm, depth + 1) + arg_change(ch, m, b, fm, fb, depth + 1);
}

int winding(const Char& ch, const std::vector<cd>& polygon) {
    double total = 0.0;
    for (std::size_t i = 0; i < polygon.size(); ++i) {
        const cd a = polygon[i], b = polygon[(i + 1) % polygon.size()];
        total += arg_change(ch, a, b, ch.det(a), ch.det(b), 0);
    }
    return static_cast<int>(std::lround(total / (2.0 * std::numbers::pi)));
}

std::vector<cd> circle(cd c, double r, int n = 16) {
    std::vector<cd> pts;
    for (int i = 0; i < n; ++i) pts.push_back(c + std::polar(r, 2.0 * std::numbers::pi * i / n));
    return pts;
}

struct Root {
    cd value;
    int multiplicity;
};

std::optional<cd> newton(const Char& ch, cd lam, double bound) {
    for (int it = 0; it < 200; ++it) {
        const auto step = ch.newton_step(lam);
        if (!step) return std::nullopt;
        lam -= *step;
        if (std::abs(lam) > 4.0 * bound + 10.0) return std::nullopt;
        if (std::abs(*step) < 1e-15 * std::max(1.0, std::abs(lam))) break;
    }
    return lam;
}

// Roots in the box [re_lo, hi] x [-hi, hi], found from a seed grid of the
// given spacing in the upper half.
std::vector<Root> scan(const Char& ch, double re_lo, double hi, double spacing) {
    std::vector<cd> found;
    auto known = [&](cd z) {
        for (const cd& f : found)
            if (std::abs(f - z) < 1e-7 * std::max(1.0, std::abs(z))) return true;
        return false;
    };
    for (double re = re_lo; re <= hi; re += spacing) {
        for (double im = 0.0; im <= hi; im += spacing) {
            const auto r = newton(ch, cd(re, im), hi);
            if (!r || r->real() < re_lo || r->real() > hi || std::abs(r->imag()) > hi) continue;
            cd z = *r;
            if (std::abs(z.imag()) < 1e-9 * std::max(1.0, std::abs(z))) z = cd(z.real(), 0.0);
            if (ch.residual(z) > 1e-6) continue;
            if (!known(z)) found.push_back(z);
            if (z.imag() != 0.0 && !known(std::conj(z))) found.push_back(std::conj(z));
        }
    }

    std::vector<Root> roots;
    for (std::size_t i = 0; i < found.size(); ++i) {
        double nearest = 1e-2 * std::max(1.0, std::abs(found[i]));
        for (std::size_t j = 0; j < found.size(); ++j)
            if (j != i) nearest = std::min(nearest, 0.4 * std::abs(found[i] - found[j]));
        const int m = winding(ch, circle(found[i], nearest));
        if (m < 1) continue;
        // multiplicity-aware polishing
        cd z = found[i];
        for (int it = 0; it < 20; ++it) {
            const auto step = ch.newton_step(z);
            if (!step) break;
            const cd next = z - static_cast<double>(m) * *step;
            if (ch.residual(next) >= ch.residual(z)) break;
            z = next;
        }
        if (found[i].imag() == 0.0) z = cd(z.real(), 0.0);
        roots.push_back({z, m});
    }
    return roots;
}

}  // namespace

std::vector<std::complex<double>> characteristic_root_oracle(const Matrix& A, const Matrix& B,
                                                             int count) {
    const auto N = A.rows();
    if (N < 1 || A.cols() != N || B.rows() != N || B.cols() != N)
        throw ConfigError("characteristic_root_oracle: A and B must be square of equal size");
    if (!A.allFinite() || !B.allFinite())
        throw ConfigError("characteristic_root_oracle: non-finite coefficients");
    if (count < 1) throw ConfigError("characteristic_root_oracle: count must be >= 1");

    auto by_real_part = [](const cd& a, const cd& b) {
        if (a.real() != b.real()) return a.real() > b.real();
        return a.imag() > b.imag();
    };

    if (B.isZero(0.0)) {
        if (count > N) throw NumericalError("characteristic_root_oracle: only N roots without delay");
        Eigen::EigenSolver<Matrix> es(A);
        std::vector<cd> ev(es.eigenvalues().data(), es.eigenvalues().data() + N);
        std::sort(ev.begin(), ev.end(), by_real_part);
        ev.resize(static_cast<std::size_t>(count));
        return ev;
    }

    Char ch{A.cast<cd>(), B.cast<cd>(), static_cast<int>(N)};
    const double a = A.norm(), b = B.norm();  // Frobenius bounds the 2-norm
    Eigen::EigenSolver<Matrix> es(A);
    double re_lo = std::min(0.0, es.eigenvalues().real().minCoeff()) - 1.5;

    for (int attempt = 0; attempt < 2; ++attempt) {
        const double hi = a + b * std::exp(-re_lo) + 1.0;
        const std::vector<cd> box{cd(re_lo, -hi), cd(hi, -hi), cd(hi, hi), cd(re_lo, hi)};
        const int total = winding(ch, box);
        if (total >= count) {
            double spacing = std::max(0.5, hi / 40.0);
            for (int refine = 0; refine < 4; ++refine, spacing *= 0.5) {
                const auto roots = scan(ch, re_lo, hi, spacing);
                int got = 0;
                for (const auto& r : roots) got += r.multiplicity;
                if (got != total) continue;
                std::vector<cd> out;
                for (const auto& r : roots)
                    for (int m = 0; m < r.multiplicity; ++m) out.push_back(r.value);
                std::sort(out.begin(), out.end(), by_real_part);
                out.resize(static_cast<std::size_t>(count));
                for (const cd& z : out)
                    if (ch.residual(z) > 1e-10)
                        throw NumericalError("characteristic_root_oracle: root residual above 1e-10");
                return out;
            }
            throw NumericalError("characteristic_root_oracle: scan missed roots counted in the box");
        }
        re_lo -= 2.5;
    }
    throw NumericalError("characteristic_root_oracle: requested root count not reached in the scan box");
}

}  // namespace rdde
