#pragma once

// Primal active-set method for bound- and row-constrained least squares
//
//     minimize 0.5 * |E x - f|^2  subject to  row_lo <= C x <= row_hi,
//                                             x_lo <= x <= x_hi
//
// E may be rank deficient, so subproblems over the working set are solved
// for the minimum-norm step. The caller supplies a feasible start; rows
// with row_lo == row_hi are kept as equalities for the whole run.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "cefbounds/core.hpp"

namespace cefb::qp {

struct Problem {
    Eigen::MatrixXd e;
    Eigen::VectorXd f;
    Eigen::MatrixXd c;
    Eigen::VectorXd row_lo, row_hi;
    Eigen::VectorXd x_lo, x_hi;
};

struct Result {
    Eigen::VectorXd x;
    double objective = 0.0;
    int iterations = 0;
};

namespace detail {

// One side of one constraint, written as normal . x >= rhs.
struct Side {
    int row;        // row of C, or -1 - variable index for a bound
    double sign;    // +1 for a lower side, -1 for an upper side
    double rhs;
    bool equality;
};

inline double dot(const Problem& p, const Side& s, const Eigen::VectorXd& x) {
    double v = s.row >= 0 ? p.c.row(s.row).dot(x) : x(-1 - s.row);
    return s.sign * v;
}

inline Eigen::VectorXd normal(const Problem& p, const Side& s, Eigen::Index n) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    if (s.row >= 0) out = p.c.row(s.row).transpose();
    else out(-1 - s.row) = 1.0;
    return s.sign * out;
}

}  // namespace detail

[[nodiscard]] inline Result solve(const Problem& p, Eigen::VectorXd x, double feasibility_tol = 1e-9) {
    using detail::Side;
    const Eigen::Index n = x.size();
    std::vector<Side> sides;
    for (Eigen::Index i = 0; i < n; ++i) {
        bool eq = p.x_lo(i) == p.x_hi(i);
        sides.push_back({static_cast<int>(-1 - i), 1.0, p.x_lo(i), eq});
        if (!eq) sides.push_back({static_cast<int>(-1 - i), -1.0, -p.x_hi(i), false});
    }
    for (Eigen::Index r = 0; r < p.c.rows(); ++r) {
        bool eq = p.row_lo(r) == p.row_hi(r);
        sides.push_back({static_cast<int>(r), 1.0, p.row_lo(r), eq});
        if (!eq) sides.push_back({static_cast<int>(r), -1.0, -p.row_hi(r), false});
    }
    for (const auto& s : sides)
        if (detail::dot(p, s, x) < s.rhs - feasibility_tol)
            throw SolverError("active-set start point violates a constraint");

    std::vector<char> active(sides.size(), 0);
    std::vector<std::size_t> work;
    for (std::size_t j = 0; j < sides.size(); ++j)
        if (sides[j].equality) {
            active[j] = 1;
            work.push_back(j);
        }

    const int max_iter = static_cast<int>(20 * (n + static_cast<Eigen::Index>(sides.size()))) + 1000;
    for (int iter = 0; iter < max_iter; ++iter) {
        Eigen::VectorXd resid = p.e * x - p.f;
        Eigen::MatrixXd nw(n, static_cast<Eigen::Index>(work.size()));
        for (std::size_t w = 0; w < work.size(); ++w)
            nw.col(static_cast<Eigen::Index>(w)) = detail::normal(p, sides[work[w]], n);

        // Null space of the working-set normals.
        Eigen::MatrixXd z;
        if (work.empty()) {
            z = Eigen::MatrixXd::Identity(n, n);
        } else {
            Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(nw);
            qr.setThreshold(1e-12);
            Eigen::Index rank = qr.rank();
            Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
            z = q.rightCols(n - rank);
        }

        Eigen::VectorXd step = Eigen::VectorXd::Zero(n);
        if (z.cols() > 0) {
            Eigen::MatrixXd ez = p.e * z;
            Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(ez);
            cod.setThreshold(1e-12);
            step = z * cod.solve(-resid);
        }

        if (step.lpNorm<Eigen::Infinity>() <= 1e-13) {
            if (work.empty()) return {x, 0.5 * resid.squaredNorm(), iter};
            Eigen::VectorXd grad = p.e.transpose() * resid;
            Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(nw);
            Eigen::VectorXd lambda = cod.solve(grad);
            std::size_t drop = work.size();
            double most = -1e-12;
            for (std::size_t w = 0; w < work.size(); ++w) {
                if (sides[work[w]].equality) continue;
                if (lambda(static_cast<Eigen::Index>(w)) < most) {
                    most = lambda(static_cast<Eigen::Index>(w));
                    drop = w;
                }
            }
            if (drop == work.size()) return {x, 0.5 * resid.squaredNorm(), iter};
            active[work[drop]] = 0;
            work.erase(work.begin() + static_cast<std::ptrdiff_t>(drop));
            continue;
        }

        double alpha = 1.0;
        std::size_t blocking = sides.size();
        for (std::size_t j = 0; j < sides.size(); ++j) {
            if (active[j]) continue;
            Eigen::VectorXd nj = detail::normal(p, sides[j], n);
            double slope = nj.dot(step);
            if (slope >= -1e-14) continue;
            double room = std::max(detail::dot(p, sides[j], x) - sides[j].rhs, 0.0);
            double a = room / -slope;
            if (a < alpha) {
                alpha = a;
                blocking = j;
            }
        }
        x += alpha * step;
        if (blocking < sides.size()) {
            active[blocking] = 1;
            work.push_back(blocking);
        }
    }
    throw SolverError("active-set iteration limit reached");
}

}  // namespace cefb::qp
