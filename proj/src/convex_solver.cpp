#include "dcdr/convex_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include <Eigen/OrderingMethods>

#include "dcdr/error.hpp"

namespace dcdr::cvx {

namespace {

using Index = Eigen::Index;
using Triplet = Eigen::Triplet<double>;

constexpr double kInfeasibleResidual = 1e-6;
constexpr double kDivergentDual = 1e8;
constexpr int kStallIterations = 10;

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

// Largest step in (0, 1] keeping v + a dv >= 0.
double max_step(const Vector& v, const Vector& dv) {
    double a = 1.0;
    for (Index i = 0; i < v.size(); ++i) {
        if (dv[i] < 0.0) a = std::min(a, -v[i] / dv[i]);
    }
    return a;
}

// Row infinity norms of a column-major sparse matrix.
Vector row_norms(const SparseMatrix& m) {
    Vector r = Vector::Zero(m.rows());
    for (Index k = 0; k < m.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
            r[it.row()] = std::max(r[it.row()], std::abs(it.value()));
        }
    }
    return r;
}

// The problem after column, objective and row scaling.
struct ScaledProblem {
    Vector c;
    SparseMatrix A;
    Vector b;
    SparseMatrix G;
    Vector h;
    std::vector<QuadraticConstraint> quad;
    Vector col;       // physical x = col .* scaled x
    Vector eq_row;    // scaled row = eq_row .* physical row
    Vector ineq_row;
    Vector quad_row;
    double obj_scale = 1.0;
};

ScaledProblem scale(const Problem& p) {
    ScaledProblem s;
    const Index n = p.variables();
    s.col = p.variable_scale.size() == n ? p.variable_scale : Vector::Ones(n);
    s.obj_scale = p.objective_scale;
    const auto D = s.col.asDiagonal();

    s.c = s.obj_scale * p.objective.cwiseProduct(s.col);

    s.A = p.eq_matrix * D;
    s.eq_row = row_norms(s.A);
    for (Index i = 0; i < s.eq_row.size(); ++i) s.eq_row[i] = s.eq_row[i] > 0.0 ? 1.0 / s.eq_row[i] : 1.0;
    s.A = s.eq_row.asDiagonal() * s.A;
    s.b = p.eq_rhs.cwiseProduct(s.eq_row);

    s.G = p.ineq_matrix * D;
    s.ineq_row = row_norms(s.G);
    for (Index i = 0; i < s.ineq_row.size(); ++i) {
        s.ineq_row[i] = s.ineq_row[i] > 0.0 ? 1.0 / s.ineq_row[i] : 1.0;
    }
    s.G = s.ineq_row.asDiagonal() * s.G;
    s.h = p.ineq_rhs.cwiseProduct(s.ineq_row);

    s.quad_row.resize(static_cast<Index>(p.quadratic.size()));
    for (std::size_t k = 0; k < p.quadratic.size(); ++k) {
        const auto& q = p.quadratic[k];
        QuadraticConstraint sq;
        sq.forms = q.forms * D;
        sq.weights = q.weights * q.scale;
        sq.linear = q.linear.cwiseProduct(s.col) * q.scale;
        sq.constant = q.constant * q.scale;
        s.quad_row[static_cast<Index>(k)] = q.scale;
        s.quad.push_back(std::move(sq));
    }
    return s;
}

// LDL' factorization of a symmetric quasi-definite matrix (positive block
// first, negative block last) after a fill-reducing permutation. Pivots whose
// sign or size is wrong are replaced by +-delta, which keeps the factorization
// defined however badly the interior-point weights are scaled; the caller
// recovers accuracy by iterative refinement.
class QuasiDefiniteLdl {
public:
    // `upper` holds the upper triangle of the matrix, `positive` the size of
    // the positive definite block.
    // False when the factor overflowed.
    bool factor(const SparseMatrix& upper, Index positive, double eps, double delta) {
        const Index n = upper.rows();
        if (perm_.size() != n) {
            const SparseMatrix full = upper.selfadjointView<Eigen::Upper>();
            Eigen::AMDOrdering<int> amd;
            Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> pinv;
            amd(full, pinv);
            perm_ = pinv.inverse();
            perm_inv_ = pinv;
        }
        SparseMatrix a(n, n);
        a.selfadjointView<Eigen::Upper>() = upper.selfadjointView<Eigen::Upper>().twistedBy(perm_);
        a.makeCompressed();

        sign_.resize(n);
        for (Index i = 0; i < n; ++i) sign_[perm_.indices()[i]] = i < positive ? 1.0 : -1.0;

        symbolic(a);
        numeric(a, eps, delta);
        return dinv_.allFinite() && std::all_of(lx_.begin(), lx_.end(), [](double v) { return std::isfinite(v); });
    }

    Vector solve(const Vector& b) const {
        Vector x = perm_ * b;
        const Index n = x.size();
        for (Index i = 0; i < n; ++i) {
            for (Index p = lp_[i]; p < lp_[i + 1]; ++p) x[li_[p]] -= lx_[p] * x[i];
        }
        x = x.cwiseProduct(dinv_);
        for (Index i = n - 1; i >= 0; --i) {
            for (Index p = lp_[i]; p < lp_[i + 1]; ++p) x[i] -= lx_[p] * x[li_[p]];
        }
        return perm_inv_ * x;
    }

private:
    void symbolic(const SparseMatrix& a) {
        const Index n = a.rows();
        parent_.assign(n, -1);
        std::vector<Index> mark(n, -1), count(n, 0);
        for (Index j = 0; j < n; ++j) {
            mark[j] = j;
            for (SparseMatrix::InnerIterator it(a, j); it; ++it) {
                Index i = it.row();
                if (i >= j) continue;
                while (mark[i] != j) {
                    if (parent_[i] == -1) parent_[i] = j;
                    ++count[i];
                    mark[i] = j;
                    i = parent_[i];
                }
            }
        }
        lp_.assign(n + 1, 0);
        for (Index i = 0; i < n; ++i) lp_[i + 1] = lp_[i] + count[i];
        li_.resize(lp_[n]);
        lx_.resize(lp_[n]);
    }

    void numeric(const SparseMatrix& a, double eps, double delta) {
        const Index n = a.rows();
        Vector d = Vector::Zero(n);
        dinv_.resize(n);
        std::vector<Index> next(lp_.begin(), lp_.end() - 1), pattern, stack;
        std::vector<char> used(n, 0);
        Vector y = Vector::Zero(n);
        pattern.reserve(n);
        stack.reserve(n);
        for (Index k = 0; k < n; ++k) {
            pattern.clear();
            for (SparseMatrix::InnerIterator it(a, k); it; ++it) {
                const Index i = it.row();
                if (i == k) {
                    d[k] = it.value();
                    continue;
                }
                if (i > k) continue;
                y[i] = it.value();
                // Walk up the elimination tree to collect the row pattern of L.
                stack.clear();
                for (Index e = i; e != -1 && e < k && !used[e]; e = parent_[e]) {
                    used[e] = 1;
                    stack.push_back(e);
                }
                while (!stack.empty()) {
                    pattern.push_back(stack.back());
                    stack.pop_back();
                }
            }
            for (auto r = pattern.rbegin(); r != pattern.rend(); ++r) {
                const Index c = *r;
                const double yc = y[c];
                const Index end = next[c];
                for (Index p = lp_[c]; p < end; ++p) y[li_[p]] -= lx_[p] * yc;
                li_[end] = k;
                lx_[end] = yc * dinv_[c];
                d[k] -= yc * lx_[end];
                ++next[c];
                y[c] = 0.0;
                used[c] = 0;
            }
            if (!(sign_[k] * d[k] > eps)) d[k] = sign_[k] * delta;
            dinv_[k] = 1.0 / d[k];
        }
    }

    Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> perm_, perm_inv_;
    Vector sign_;
    std::vector<Index> parent_, lp_, li_;
    std::vector<double> lx_;
    Vector dinv_;
};

// Newton system of one iteration:
//   [ M + U C U'  A' ] [dx]   [rx]
//   [ A           0  ] [dy] = [ry]
// with M sparse (Hessian of the Lagrangian plus G' diag(z/s) G) and U the
// dense quadratic-row gradients.
class NewtonSystem {
public:
    NewtonSystem(const ScaledProblem& sp, double reg) : sp_(sp), reg_(reg) {
        // Dense inequality rows would fill G' W G completely; they join the
        // low-rank part instead.
        const Index n = sp.G.cols();
        std::vector<Index> nnz(static_cast<std::size_t>(sp.G.rows()), 0);
        for (Index c = 0; c < sp.G.outerSize(); ++c) {
            for (SparseMatrix::InnerIterator it(sp.G, c); it; ++it) ++nnz[static_cast<std::size_t>(it.row())];
        }
        const Index limit = std::max<Index>(64, n / 8);
        std::vector<Index> slot(nnz.size(), -1);
        for (Index i = 0; i < sp.G.rows(); ++i) {
            if (nnz[static_cast<std::size_t>(i)] > limit) {
                slot[static_cast<std::size_t>(i)] = static_cast<Index>(dense_.size());
                dense_.push_back(i);
            } else {
                slot[static_cast<std::size_t>(i)] = static_cast<Index>(sparse_.size());
                sparse_.push_back(i);
            }
        }
        if (dense_.empty()) return;
        std::vector<Triplet> trip;
        dense_rows_.setZero(n, static_cast<Index>(dense_.size()));
        for (Index c = 0; c < sp.G.outerSize(); ++c) {
            for (SparseMatrix::InnerIterator it(sp.G, c); it; ++it) {
                const Index r = slot[static_cast<std::size_t>(it.row())];
                if (nnz[static_cast<std::size_t>(it.row())] > limit) {
                    dense_rows_(c, r) = it.value();
                } else {
                    trip.emplace_back(r, c, it.value());
                }
            }
        }
        sparse_g_.resize(static_cast<Index>(sparse_.size()), n);
        sparse_g_.setFromTriplets(trip.begin(), trip.end());
    }

    // Builds and factors the system. A factor that overflows is retried with
    // stronger static regularization; false when that also fails.
    bool factor(const Vector& lin_weight, const Vector& quad_dual,
                const std::vector<Vector>& quad_grad, const Vector& quad_weight) {
        const Index n = sp_.c.size();
        const Index p = sp_.A.rows();
        const Index k = static_cast<Index>(quad_grad.size());

        SparseMatrix wg;
        if (dense_.empty()) {
            wg = lin_weight.cwiseSqrt().asDiagonal() * sp_.G;
        } else {
            Vector root(static_cast<Index>(sparse_.size()));
            for (std::size_t i = 0; i < sparse_.size(); ++i) root[static_cast<Index>(i)] = std::sqrt(lin_weight[sparse_[i]]);
            wg = root.asDiagonal() * sparse_g_;
        }
        SparseMatrix M = SparseMatrix(wg.transpose()) * wg;
        for (Index j = 0; j < k; ++j) {
            const auto& q = sp_.quad[static_cast<std::size_t>(j)];
            Vector wroot = (2.0 * quad_dual[j] * q.weights).cwiseSqrt();
            SparseMatrix wf = wroot.asDiagonal() * q.forms;
            M += SparseMatrix(wf.transpose()) * wf;
        }
        M_ = M;

        std::vector<Triplet> trip;
        trip.reserve(static_cast<std::size_t>(M.nonZeros() + sp_.A.nonZeros() + n + p));
        for (Index c = 0; c < M.outerSize(); ++c) {
            for (SparseMatrix::InnerIterator it(M, c); it; ++it) {
                if (it.row() <= it.col()) trip.emplace_back(it.row(), it.col(), it.value());
            }
        }
        const std::size_t base = trip.size();
        for (double reg = reg_;; reg *= 100.0) {
            trip.resize(base);
            for (Index i = 0; i < n; ++i) trip.emplace_back(i, i, reg);
            for (Index c = 0; c < sp_.A.outerSize(); ++c) {
                for (SparseMatrix::InnerIterator it(sp_.A, c); it; ++it) {
                    trip.emplace_back(it.col(), n + it.row(), it.value());
                }
            }
            for (Index i = 0; i < p; ++i) trip.emplace_back(n + i, n + i, -reg);
            SparseMatrix K(n + p, n + p);
            K.setFromTriplets(trip.begin(), trip.end());
            if (ldl_.factor(K, n, kPivotEps, kPivotDelta)) break;
            if (reg > 1e-4) return false;
        }

        const Index kd = static_cast<Index>(dense_.size());
        U_.setZero(n + p, k + kd);
        C_.resize(k + kd);
        for (Index j = 0; j < k; ++j) U_.col(j).head(n) = quad_grad[static_cast<std::size_t>(j)];
        C_.head(k) = quad_weight;
        for (Index j = 0; j < kd; ++j) {
            U_.col(k + j).head(n) = dense_rows_.col(j);
            C_[k + j] = lin_weight[dense_[static_cast<std::size_t>(j)]];
        }
        const Index m = k + kd;
        if (m > 0) {
            KiU_.resize(n + p, m);
            for (Index j = 0; j < m; ++j) KiU_.col(j) = refine(U_.col(j), false);
            Eigen::MatrixXd small = U_.transpose() * KiU_;
            for (Index j = 0; j < m; ++j) small(j, j) += 1.0 / C_[j];
            small_ = small.ldlt();
            if (!KiU_.allFinite()) return false;
        }
        return true;
    }

    Vector solve(const Vector& rhs) const { return refine(rhs, true); }

private:
    static constexpr double kPivotEps = 1e-13;
    static constexpr double kPivotDelta = 2e-7;

    // Iterative refinement against the unregularized operator, stopped when
    // the residual no longer shrinks.
    Vector refine(const Vector& rhs, bool low_rank) const {
        Vector sol = apply_inverse(rhs, low_rank);
        Vector res = rhs - multiply(sol, low_rank);
        double norm = inf_norm(res);
        const double target = 1e-14 * (1.0 + inf_norm(rhs));
        for (int r = 0; r < 20 && norm > target; ++r) {
            const Vector trial = sol + apply_inverse(res, low_rank);
            const Vector trial_res = rhs - multiply(trial, low_rank);
            const double trial_norm = inf_norm(trial_res);
            if (!(trial_norm < 0.9 * norm)) {
                if (trial_norm < norm) sol = trial;
                break;
            }
            sol = trial;
            res = trial_res;
            norm = trial_norm;
        }
        return sol;
    }

    Vector apply_inverse(const Vector& rhs, bool low_rank) const {
        Vector u = ldl_.solve(rhs);
        if (low_rank && U_.cols() > 0) u -= KiU_ * small_.solve(U_.transpose() * u);
        return u;
    }

    Vector multiply(const Vector& v, bool low_rank) const {
        const Index n = sp_.c.size();
        const Index p = sp_.A.rows();
        Vector out(n + p);
        out.head(n) = M_ * v.head(n) + sp_.A.transpose() * v.tail(p);
        out.tail(p) = sp_.A * v.head(n);
        if (low_rank && U_.cols() > 0) out += U_ * (C_.cwiseProduct(U_.transpose() * v));
        return out;
    }

    const ScaledProblem& sp_;
    double reg_;
    SparseMatrix M_;
    QuasiDefiniteLdl ldl_;
    Eigen::MatrixXd U_;
    Eigen::MatrixXd KiU_;
    Vector C_;
    Eigen::LDLT<Eigen::MatrixXd> small_;
    std::vector<Index> dense_, sparse_;
    SparseMatrix sparse_g_;
    Eigen::MatrixXd dense_rows_;
};

}  // namespace

double QuadraticConstraint::value(const Vector& x) const {
    const Vector fx = forms * x;
    return weights.dot(fx.cwiseAbs2()) + linear.dot(x) + constant;
}

Vector QuadraticConstraint::gradient(const Vector& x) const {
    const Vector fx = forms * x;
    return 2.0 * (forms.transpose() * weights.cwiseProduct(fx)) + linear;
}

void Problem::validate() const {
    const Index n = variables();
    if (n == 0) throw InvalidArgument("convex problem has no variables");
    if (eq_matrix.cols() != n || ineq_matrix.cols() != n) {
        throw DimensionError("constraint matrix column count differs from variable count");
    }
    if (eq_matrix.rows() != eq_rhs.size() || ineq_matrix.rows() != ineq_rhs.size()) {
        throw DimensionError("constraint right-hand side length mismatch");
    }
    if (variable_scale.size() != 0 &&
        (variable_scale.size() != n || (variable_scale.array() <= 0.0).any())) {
        throw InvalidArgument("variable scale must be positive, one entry per variable");
    }
    if (!(objective_scale > 0.0)) throw InvalidArgument("objective scale must be positive");
    if (start.size() != 0 && start.size() != n) throw DimensionError("start point length mismatch");
    for (const auto& q : quadratic) {
        if (q.forms.cols() != n || q.linear.size() != n || q.weights.size() != q.forms.rows()) {
            throw DimensionError("quadratic constraint shape mismatch");
        }
        if ((q.weights.array() < 0.0).any()) throw InvalidArgument("quadratic weights must be >= 0");
        if (!(q.scale > 0.0)) throw InvalidArgument("quadratic row scale must be positive");
    }
}

const char* to_string(Status s) {
    switch (s) {
        case Status::optimal: return "optimal";
        case Status::infeasible: return "infeasible";
        case Status::iteration_limit: return "iteration_limit";
        case Status::numerical_error: return "numerical_error";
    }
    return "unknown";
}

Result solve(const Problem& problem, const Options& options) {
    problem.validate();
    const ScaledProblem sp = scale(problem);

    const Index n = sp.c.size();
    const Index p = sp.A.rows();
    const Index ml = sp.G.rows();
    const Index mq = static_cast<Index>(sp.quad.size());
    const Index m = ml + mq;

    Vector x = problem.start.size() == n ? Vector(problem.start.cwiseQuotient(sp.col)) : Vector::Zero(n);
    Vector y = Vector::Zero(p);
    Vector s(m), z = Vector::Ones(m);

    auto constraint_values = [&](const Vector& xv, std::vector<Vector>& grads) {
        Vector g(m);
        g.head(ml) = sp.G * xv - sp.h;
        grads.resize(static_cast<std::size_t>(mq));
        for (Index k = 0; k < mq; ++k) {
            const auto& q = sp.quad[static_cast<std::size_t>(k)];
            g[ml + k] = q.value(xv);
            grads[static_cast<std::size_t>(k)] = q.gradient(xv);
        }
        return g;
    };

    std::vector<Vector> grads;
    {
        const Vector g0 = constraint_values(x, grads);
        for (Index i = 0; i < m; ++i) s[i] = std::max(-g0[i], 1.0);
    }

    double rhs_norm = std::max(inf_norm(sp.b), inf_norm(sp.h));
    for (const auto& q : sp.quad) rhs_norm = std::max(rhs_norm, std::abs(q.constant));
    const double c_norm = inf_norm(sp.c);

    Result result;
    NewtonSystem kkt(sp, options.regularization);
    Vector last_x = x;
    double last_pres = std::numeric_limits<double>::infinity();

    struct Snapshot {
        Vector x, y, s, z;
        int iterations;
        double pres, dres, gap;
    };
    std::optional<Snapshot> acceptable;

    for (int iter = 0;; ++iter) {
        const Vector g = constraint_values(x, grads);

        Vector rd = sp.c + sp.A.transpose() * y + sp.G.transpose() * z.head(ml);
        for (Index k = 0; k < mq; ++k) rd += z[ml + k] * grads[static_cast<std::size_t>(k)];
        const Vector rp = sp.A * x - sp.b;
        const Vector ri = g + s;
        const double mu = m > 0 ? s.dot(z) / static_cast<double>(m) : 0.0;

        const double pres = std::max(inf_norm(rp), inf_norm(ri)) / (1.0 + rhs_norm);
        const double dres = inf_norm(rd) / (1.0 + c_norm);
        const double gap = s.dot(z) / (1.0 + std::abs(sp.c.dot(x)));

        result.iterations = iter;
        result.primal_residual = pres;
        result.dual_residual = dres;
        result.gap = gap;

        if (!std::isfinite(pres) || !std::isfinite(dres) || !std::isfinite(gap)) {
            // Report the last finite iterate.
            x = last_x;
            result.primal_residual = last_pres;
            result.status = last_pres > kInfeasibleResidual ? Status::infeasible : Status::numerical_error;
            break;
        }
        // Multipliers running off to infinity while the residual stalls is the
        // usual signature of an empty feasible set.
        if (pres > kInfeasibleResidual && std::max(inf_norm(y), inf_norm(z)) > kDivergentDual) {
            result.status = Status::infeasible;
            break;
        }
        last_x = x;
        last_pres = pres;
        if (pres <= options.feasibility_tolerance && dres <= options.acceptable_tolerance &&
            gap <= options.acceptable_tolerance &&
            (!acceptable || std::max(dres, gap) <= std::max(acceptable->dres, acceptable->gap))) {
            acceptable = Snapshot{x, y, s, z, iter, pres, dres, gap};
        }
        if (pres <= options.feasibility_tolerance && dres <= options.tolerance &&
            gap <= options.tolerance) {
            result.status = Status::optimal;
            break;
        }
        // Near the solution the Newton systems lose accuracy; once acceptable,
        // give the iteration a few more steps to reach full tolerance.
        if (acceptable && iter - acceptable->iterations > kStallIterations) {
            result.status = Status::iteration_limit;
            break;
        }
        if (iter >= options.max_iterations) {
            result.status = pres > options.feasibility_tolerance ? Status::infeasible
                                                                 : Status::iteration_limit;
            break;
        }

        const Vector w = z.cwiseQuotient(s);
        if (!kkt.factor(w.head(ml), z.tail(mq), grads, w.tail(mq))) {
            result.status = pres > kInfeasibleResidual ? Status::infeasible : Status::numerical_error;
            break;
        }

        // `rr` is the constraint residual to cancel; the corrector adds the
        // curvature the predictor step would pick up on the quadratic rows.
        auto direction = [&](const Vector& rc, const Vector& rr, Vector& dx, Vector& dy, Vector& ds,
                             Vector& dz) {
            const Vector v = (rc + z.cwiseProduct(rr)).cwiseQuotient(s);
            Vector rhs(n + p);
            rhs.head(n) = -rd - sp.G.transpose() * v.head(ml);
            for (Index k = 0; k < mq; ++k) rhs.head(n) -= v[ml + k] * grads[static_cast<std::size_t>(k)];
            rhs.tail(p) = -rp;
            const Vector sol = kkt.solve(rhs);
            dx = sol.head(n);
            dy = sol.tail(p);
            Vector jdx(m);
            jdx.head(ml) = sp.G * dx;
            for (Index k = 0; k < mq; ++k) jdx[ml + k] = grads[static_cast<std::size_t>(k)].dot(dx);
            ds = -rr - jdx;
            dz = (rc - z.cwiseProduct(ds)).cwiseQuotient(s);
        };

        Vector dx, dy, ds, dz;
        const Vector sz = s.cwiseProduct(z);
        direction(-sz, ri, dx, dy, ds, dz);
        const double a_aff = std::min(max_step(s, ds), max_step(z, dz));
        double sigma = 0.0;
        if (mu > 0.0) {
            const double mu_aff = (s + a_aff * ds).dot(z + a_aff * dz) / static_cast<double>(m);
            sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 0.0, 1.0);
        }

        const Vector target = Vector::Constant(m, sigma * mu);
        const Vector ds_aff = ds, dz_aff = dz;
        const Vector rc = target - sz - ds_aff.cwiseProduct(dz_aff);
        // Curvature a step of length `step` along `dir` adds to the quadratic rows.
        auto curved = [&](const Vector& dir, double step) {
            Vector rr = ri;
            for (Index k = 0; k < mq; ++k) {
                const auto& q = sp.quad[static_cast<std::size_t>(k)];
                rr[ml + k] += step * q.weights.dot((q.forms * dir).cwiseAbs2());
            }
            return rr;
        };
        direction(rc, curved(dx, 1.0), dx, dy, ds, dz);
        double a = std::min(max_step(s, ds), max_step(z, dz));
        // The second-order term can wreck the step near a curved row; fall
        // back to the plain centered direction when it does.
        if (a < 0.1) {
            Vector cx, cy, cs, cz;
            direction(target - sz, ri, cx, cy, cs, cz);
            const double b = std::min(max_step(s, cs), max_step(z, cz));
            if (b > a) {
                dx = std::move(cx); dy = std::move(cy); ds = std::move(cs); dz = std::move(cz);
                a = b;
            }
        }
        a = std::min(1.0, options.step_fraction * a);
        // Re-linearize the quadratic rows around the step actually taken so
        // their residual falls in proportion to the step.
        for (int pass = 0; pass < 2 && mq > 0; ++pass) {
            Vector cx, cy, cs, cz;
            direction(rc, curved(dx, a), cx, cy, cs, cz);
            const double b = std::min(1.0, options.step_fraction *
                                               std::min(max_step(s, cs), max_step(z, cz)));
            if (b < 0.5 * a) break;
            dx = std::move(cx); dy = std::move(cy); ds = std::move(cs); dz = std::move(cz);
            a = b;
        }
        x += a * dx;
        y += a * dy;
        s += a * ds;
        z += a * dz;
    }

    // A feasible near-optimal iterate also rules out an infeasibility verdict.
    if (acceptable && result.status != Status::optimal) {
        x = acceptable->x;
        y = acceptable->y;
        s = acceptable->s;
        z = acceptable->z;
        result.status = Status::optimal;
        result.iterations = acceptable->iterations;
        result.primal_residual = acceptable->pres;
        result.dual_residual = acceptable->dres;
        result.gap = acceptable->gap;
    }

    // Locate the row to blame: the largest primal residual, or for an empty
    // feasible set the largest multiplier of the diverging dual ray.
    {
        const Vector g = constraint_values(x, grads);
        const Vector rp = sp.A * x - sp.b;
        const bool by_dual = result.status == Status::infeasible &&
                             std::max(inf_norm(y), inf_norm(z)) > kDivergentDual;
        double worst = -1.0;
        for (Index i = 0; i < p; ++i) {
            const double v = by_dual ? std::abs(y[i]) : std::abs(rp[i]);
            if (v > worst) {
                worst = v;
                result.worst_kind = RowKind::equality;
                result.worst_row = i;
            }
        }
        for (Index i = 0; i < m; ++i) {
            const double v = by_dual ? z[i] : g[i];
            if (v > worst) {
                worst = v;
                result.worst_kind = i < ml ? RowKind::inequality : RowKind::quadratic;
                result.worst_row = i < ml ? i : i - ml;
            }
        }
    }

    result.x = x.cwiseProduct(sp.col);
    result.objective = problem.objective.dot(result.x);
    result.eq_dual = y.cwiseProduct(sp.eq_row) / sp.obj_scale;
    result.ineq_dual = z.head(ml).cwiseProduct(sp.ineq_row) / sp.obj_scale;
    result.quad_dual = z.tail(mq).cwiseProduct(sp.quad_row) / sp.obj_scale;
    return result;
}

}  // namespace dcdr::cvx
