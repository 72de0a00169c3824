#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

namespace mrcp {

// Centered moment evaluations over complete cases: rows are complete cases,
// columns are the J propensity moments followed by the K score moments.
struct MomentMatrix {
    Eigen::MatrixXd v;  // m x d

    Eigen::Index rows() const { return v.rows(); }
    Eigen::Index cols() const { return v.cols(); }
};

struct ELSolution {
    Eigen::VectorXd rho;      // length d; zero on dropped columns
    Eigen::VectorXd weights;  // length m; strictly positive, sums to 1
    double objective = 0.0;   // final value of F_m
    int iterations = 0;
    std::vector<Eigen::Index> dropped_columns;  // collinear columns removed pre-solve
    std::vector<double> objective_trace;        // F_m after each accepted step
};

// Empirical-likelihood balancing weights over complete cases.
//
// Minimizes the strictly convex
//     F_m(rho) = -(1/m) sum_i log(1 + rho . v_i)
// over the feasible region { 1 + rho . v_i > 0 } by a damped Newton method:
// full Newton step, halved until it is feasible and satisfies the Armijo
// condition (c = 1e-4). The weights are w_i = (1/m) / (1 + rho . v_i); at a
// stationary point they satisfy sum_i w_i v_i = 0 (the balancing equations)
// and sum_i w_i = 1.
//
// Exactly collinear columns (detected by pivoted Gram-Schmidt at relative
// tolerance 1e-12; trailing duplicates dropped) are removed before solving
// and reported in the solution. When the Newton system's factorization
// fails, the Hessian diagonal is boosted Levenberg-style by 1e-10*trace/d.
//
// Throws solver_error when no feasible descent step exists after 60 halvings
// and convergence_error when max_iter is exceeded.
ELSolution solve_el(const MomentMatrix& moments, double tol = 1e-8, int max_iter = 200,
                    const Eigen::VectorXd* start = nullptr);

}  // namespace mrcp
