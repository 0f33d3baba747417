#pragma once

// Primal-dual interior-point method for
//
//   minimize    c' x
//   subject to  A x  = b
//               G x <= h
//               q_k(x) <= 0,   q_k(x) = sum_i w_ki (f_ki' x)^2 + l_k' x + c_k,  w_ki >= 0
//
// Inequalities carry explicit slacks, so the start point need not be
// feasible. Each Newton system is the sparse quasi-definite KKT matrix of
// the linear part; the (dense) gradients of the quadratic rows enter as a
// low-rank update resolved with the Woodbury identity.

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace dcdr::cvx {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

struct QuadraticConstraint {
    SparseMatrix forms;  // one linear form f_ki per row
    Vector weights;      // w_ki >= 0
    Vector linear;       // l_k, dense
    double constant = 0.0;
    // Multiplier applied to the whole row before solving; only conditioning changes.
    double scale = 1.0;

    double value(const Vector& x) const;
    Vector gradient(const Vector& x) const;
};

struct Problem {
    Vector objective;
    SparseMatrix eq_matrix;
    Vector eq_rhs;
    SparseMatrix ineq_matrix;
    Vector ineq_rhs;
    std::vector<QuadraticConstraint> quadratic;

    // Optional. The solver works in units x / variable_scale and multiplies the
    // objective by objective_scale; results are reported in the original units.
    Vector variable_scale;
    double objective_scale = 1.0;
    Vector start;

    Eigen::Index variables() const { return objective.size(); }
    // Throws DimensionError / InvalidArgument on malformed input.
    void validate() const;
};

struct Options {
    double tolerance = 1e-6;       // relative dual residual and gap
    double feasibility_tolerance = 1e-8;  // relative primal residual
    // When the iteration breaks down or runs out of budget, the last iterate
    // that was feasible with dual residual and gap below this is returned as optimal.
    double acceptable_tolerance = 1e-6;
    int max_iterations = 200;
    double step_fraction = 0.99;
    double regularization = 1e-8;
};

enum class Status { optimal, infeasible, iteration_limit, numerical_error };

const char* to_string(Status s);

enum class RowKind { equality, inequality, quadratic };

struct Result {
    Status status = Status::numerical_error;
    Vector x;
    Vector eq_dual;
    Vector ineq_dual;
    Vector quad_dual;
    double objective = 0.0;
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double gap = 0.0;
    // Row with the largest scaled primal residual at exit.
    RowKind worst_kind = RowKind::equality;
    Eigen::Index worst_row = -1;
};

Result solve(const Problem& problem, const Options& options = {});

}  // namespace dcdr::cvx
