#pragma once

// Dense bounded-variable primal simplex for small linear programs
//
//     minimize c'x  subject to  row_lo <= A x <= row_hi,  x_lo <= x <= x_hi
//
// with all variable bounds finite. Each row gets a slack s = A x bounded by
// [row_lo, row_hi]; equality rows have a fixed slack. Phase one runs once at
// construction; every minimize() call starts from that feasible basis (or
// from a caller-supplied warm basis) so results do not depend on call order.
// Pricing is Dantzig with lowest-index tie-breaks, falling back to Bland's
// rule after a run of degenerate pivots; the whole solver is deterministic.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "cefbounds/core.hpp"

namespace cefb::lp {

struct Problem {
    Eigen::MatrixXd a;  // m x n
    Eigen::VectorXd row_lo, row_hi;
    Eigen::VectorXd x_lo, x_hi;
};

struct Tolerances {
    double feasibility = 1e-9;
    double optimality = 1e-10;
    double pivot = 1e-9;
    int refactor_every = 100;
    int degenerate_before_bland = 50;
};

struct Solution {
    Eigen::VectorXd x;
    double objective = 0.0;
    int iterations = 0;
};

class Simplex {
public:
    explicit Simplex(Problem p, Tolerances tol = {}) : p_(std::move(p)), tol_(tol) {
        m_ = static_cast<int>(p_.a.rows());
        n_ = static_cast<int>(p_.a.cols());
        total_ = n_ + 2 * m_;
        build();
        phase_one();
    }

    [[nodiscard]] bool feasible() const { return feasible_; }
    [[nodiscard]] double infeasibility() const { return infeasibility_; }
    [[nodiscard]] int rows() const { return m_; }
    [[nodiscard]] int cols() const { return n_; }

    // Feasible point found by phase one.
    [[nodiscard]] Eigen::VectorXd phase_one_point() const { return start_.primal(n_); }

    // Minimizes c'x over the feasible set. `warm`, when given, must come from
    // a previous call on this instance and is updated to the final basis.
    struct Basis;
    [[nodiscard]] Solution minimize(const Eigen::VectorXd& c, Basis* warm = nullptr) const {
        if (!feasible_) throw InfeasibleError("linear program is infeasible");
        State s = (warm && warm->valid) ? warm->state : start_;
        Eigen::VectorXd cost = Eigen::VectorXd::Zero(total_);
        cost.head(n_) = c;
        int iters = optimize(s, cost, true);
        refactor(s);
        Solution sol;
        sol.x = s.primal(n_);
        sol.objective = c.dot(sol.x);
        sol.iterations = iters;
        if (warm) {
            warm->state = std::move(s);
            warm->valid = true;
        }
        return sol;
    }

    [[nodiscard]] Solution maximize(const Eigen::VectorXd& c, Basis* warm = nullptr) const {
        Solution s = minimize(-c, warm);
        s.objective = -s.objective;
        return s;
    }

private:
    enum class Status : unsigned char { basic, at_lower, at_upper };

    struct State {
        Eigen::MatrixXd tab;          // B^{-1} [A | -I | D], m x total
        Eigen::VectorXd xb;           // basic values
        std::vector<int> basis;       // variable index per row
        std::vector<Status> status;   // per variable
        Eigen::VectorXd lo, hi;       // bounds per variable (artificials change)
        int pivots_since_refactor = 0;

        [[nodiscard]] double value(int j) const {
            return status[static_cast<std::size_t>(j)] == Status::at_upper ? hi(j) : lo(j);
        }

        [[nodiscard]] Eigen::VectorXd primal(int n) const {
            Eigen::VectorXd x(n);
            for (int j = 0; j < n; ++j)
                if (status[static_cast<std::size_t>(j)] != Status::basic) x(j) = value(j);
            for (std::size_t r = 0; r < basis.size(); ++r)
                if (basis[r] < n) x(basis[r]) = std::clamp(xb(static_cast<int>(r)), lo(basis[r]), hi(basis[r]));
            return x;
        }
    };

public:
    struct Basis {
        State state;
        bool valid = false;
    };

private:
    Problem p_;
    Tolerances tol_;
    int m_ = 0, n_ = 0, total_ = 0;
    Eigen::MatrixXd full_;  // [A | -I | D]
    State start_;
    bool feasible_ = false;
    double infeasibility_ = 0.0;

    [[nodiscard]] bool is_artificial(int j) const { return j >= n_ + m_; }

    void build() {
        full_ = Eigen::MatrixXd::Zero(m_, total_);
        full_.leftCols(n_) = p_.a;
        full_.middleCols(n_, m_) = -Eigen::MatrixXd::Identity(m_, m_);

        State& s = start_;
        s.lo.resize(total_);
        s.hi.resize(total_);
        s.status.assign(static_cast<std::size_t>(total_), Status::at_lower);
        for (int j = 0; j < n_; ++j) {
            if (!std::isfinite(p_.x_lo(j)) || !std::isfinite(p_.x_hi(j)) || p_.x_lo(j) > p_.x_hi(j))
                throw SolverError("simplex requires finite, ordered variable bounds");
            s.lo(j) = p_.x_lo(j);
            s.hi(j) = p_.x_hi(j);
        }
        for (int i = 0; i < m_; ++i) {
            s.lo(n_ + i) = p_.row_lo(i);
            s.hi(n_ + i) = p_.row_hi(i);
            if (!std::isfinite(p_.row_lo(i)) || !std::isfinite(p_.row_hi(i)) || p_.row_lo(i) > p_.row_hi(i))
                throw SolverError("simplex requires finite, ordered row bounds");
        }
        // Nonbasic structurals and slacks start at the bound nearer zero.
        for (int j = 0; j < n_ + m_; ++j)
            if (std::abs(s.hi(j)) < std::abs(s.lo(j))) s.status[static_cast<std::size_t>(j)] = Status::at_upper;

        Eigen::VectorXd resid = Eigen::VectorXd::Zero(m_);
        for (int j = 0; j < n_ + m_; ++j) resid -= full_.col(j) * s.value(j);
        s.basis.resize(static_cast<std::size_t>(m_));
        for (int i = 0; i < m_; ++i) {
            int art = n_ + m_ + i;
            full_(i, art) = resid(i) >= 0.0 ? 1.0 : -1.0;
            s.lo(art) = 0.0;
            s.hi(art) = std::numeric_limits<double>::infinity();
            s.status[static_cast<std::size_t>(art)] = Status::basic;
            s.basis[static_cast<std::size_t>(i)] = art;
        }
        s.tab = full_;
        for (int i = 0; i < m_; ++i) s.tab.row(i) *= full_(i, n_ + m_ + i);
        s.xb = resid.cwiseAbs();
    }

    void phase_one() {
        Eigen::VectorXd cost = Eigen::VectorXd::Zero(total_);
        cost.tail(m_).setOnes();
        optimize(start_, cost, false);
        refactor(start_);
        infeasibility_ = 0.0;
        for (std::size_t r = 0; r < start_.basis.size(); ++r)
            if (is_artificial(start_.basis[r])) infeasibility_ += std::abs(start_.xb(static_cast<int>(r)));
        double scale = 1.0 + p_.row_lo.cwiseAbs().maxCoeff() + p_.row_hi.cwiseAbs().maxCoeff();
        feasible_ = infeasibility_ <= 10.0 * tol_.feasibility * scale;
        // Artificials are pinned at zero from here on.
        for (int j = n_ + m_; j < total_; ++j) start_.hi(j) = 0.0;
        if (feasible_) drive_out_artificials(start_);
    }

    void drive_out_artificials(State& s) const {
        for (int r = 0; r < m_; ++r) {
            if (!is_artificial(s.basis[static_cast<std::size_t>(r)])) continue;
            int best = -1;
            double best_abs = 1e-7;
            for (int j = 0; j < n_ + m_; ++j) {
                if (s.status[static_cast<std::size_t>(j)] == Status::basic) continue;
                if (std::abs(s.tab(r, j)) > best_abs) {
                    best_abs = std::abs(s.tab(r, j));
                    best = j;
                }
            }
            if (best < 0) continue;  // redundant row; artificial stays basic at zero
            s.xb(r) = s.value(best);
            pivot(s, r, best, false);
        }
        refactor(s);
    }

    // Swaps nonbasic `enter` into the basis at row r; the leaving variable
    // becomes nonbasic at the bound selected by `leave_to_upper`. xb(r) must
    // already hold the entering variable's new value.
    void pivot(State& s, int r, int enter, bool leave_to_upper) const {
        int leave = s.basis[static_cast<std::size_t>(r)];
        s.tab.row(r) /= s.tab(r, enter);
        Eigen::VectorXd col = s.tab.col(enter);
        col(r) = 0.0;
        s.tab.noalias() -= col * s.tab.row(r);
        s.basis[static_cast<std::size_t>(r)] = enter;
        s.status[static_cast<std::size_t>(enter)] = Status::basic;
        s.status[static_cast<std::size_t>(leave)] = leave_to_upper ? Status::at_upper : Status::at_lower;
        ++s.pivots_since_refactor;
    }

    // Recomputes the tableau and basic values from the basis via LU.
    void refactor(State& s) const {
        Eigen::MatrixXd bmat(m_, m_);
        for (int r = 0; r < m_; ++r) bmat.col(r) = full_.col(s.basis[static_cast<std::size_t>(r)]);
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(bmat);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m_);
        for (int j = 0; j < total_; ++j)
            if (s.status[static_cast<std::size_t>(j)] != Status::basic) {
                double v = s.value(j);
                if (v != 0.0) rhs -= full_.col(j) * v;
            }
        s.tab = lu.solve(full_);
        s.xb = lu.solve(rhs);
        // One step of iterative refinement on the basic values.
        Eigen::VectorXd resid = rhs - bmat * s.xb;
        s.xb += lu.solve(resid);
        s.pivots_since_refactor = 0;
    }

    // Primal simplex on `cost`. Returns the iteration count.
    int optimize(State& s, const Eigen::VectorXd& cost, bool skip_artificials) const {
        const int max_iter = 50 * (m_ + total_) + 1000;
        int degenerate_run = 0;
        for (int iter = 0; iter < max_iter; ++iter) {
            if (s.pivots_since_refactor >= tol_.refactor_every) refactor(s);

            Eigen::RowVectorXd cb(m_);
            for (int r = 0; r < m_; ++r) cb(r) = cost(s.basis[static_cast<std::size_t>(r)]);
            Eigen::RowVectorXd reduced = cost.transpose() - cb * s.tab;

            bool bland = degenerate_run >= tol_.degenerate_before_bland;
            int enter = -1;
            double best = 0.0;
            for (int j = 0; j < total_; ++j) {
                auto st = s.status[static_cast<std::size_t>(j)];
                if (st == Status::basic) continue;
                if (skip_artificials && is_artificial(j)) continue;
                if (s.hi(j) - s.lo(j) <= 0.0) continue;
                double d = reduced(j);
                double gain = 0.0;
                if (st == Status::at_lower && d < -tol_.optimality) gain = -d;
                if (st == Status::at_upper && d > tol_.optimality) gain = d;
                if (gain <= 0.0) continue;
                if (bland) {
                    enter = j;
                    break;
                }
                if (gain > best) {
                    best = gain;
                    enter = j;
                }
            }
            if (enter < 0) return iter;

            // Direction: +1 when the entering variable increases.
            double dir = s.status[static_cast<std::size_t>(enter)] == Status::at_lower ? 1.0 : -1.0;
            double step = s.hi(enter) - s.lo(enter);
            int leave_row = -1;
            bool leave_to_upper = false;
            double leave_abs = 0.0;
            for (int r = 0; r < m_; ++r) {
                double a = s.tab(r, enter) * dir;  // basic r changes by -a * t
                if (std::abs(a) <= tol_.pivot) continue;
                int bvar = s.basis[static_cast<std::size_t>(r)];
                double ratio;
                bool to_upper;
                if (a > 0.0) {
                    ratio = (s.xb(r) - s.lo(bvar)) / a;
                    to_upper = false;
                } else {
                    if (!std::isfinite(s.hi(bvar))) continue;
                    ratio = (s.hi(bvar) - s.xb(r)) / (-a);
                    to_upper = true;
                }
                ratio = std::max(ratio, 0.0);
                bool take = ratio < step - 1e-12;
                if (!take && leave_row >= 0 && ratio <= step + 1e-12) {
                    // Tie: Bland takes the lowest variable index, otherwise the larger pivot.
                    int cur = s.basis[static_cast<std::size_t>(leave_row)];
                    take = bland ? bvar < cur : std::abs(a) > leave_abs;
                }
                if (take) {
                    step = std::min(step, ratio);
                    leave_row = r;
                    leave_to_upper = to_upper;
                    leave_abs = std::abs(a);
                }
            }
            if (!std::isfinite(step)) throw SolverError("linear program is unbounded");

            degenerate_run = step <= 1e-12 ? degenerate_run + 1 : 0;
            s.xb -= s.tab.col(enter) * (dir * step);
            if (leave_row < 0) {
                // Bound flip.
                s.status[static_cast<std::size_t>(enter)] =
                    dir > 0 ? Status::at_upper : Status::at_lower;
                continue;
            }
            s.xb(leave_row) = s.value(enter) + dir * step;
            pivot(s, leave_row, enter, leave_to_upper);
        }
        throw SolverError("simplex iteration limit reached");
    }
};

}  // namespace cefb::lp
