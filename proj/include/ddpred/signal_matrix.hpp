#pragma once

#include <vector>

#include "ddpred/state_space.hpp"

namespace ddpred {

enum class Construction { Page, Hankel, Independent };

/// Horizontal rows-first split of a signal matrix: Z = col(U_p, U_f, Y_p, Y_f).
struct Partition {
    Matrix U_p, U_f, Y_p, Y_f;
};

/// Column-stacked trajectory data matrix. Each column holds one length-L
/// input-output window, inputs first, both blocks time ordered:
///   rows [0, n_u*L)          inputs u_t
///   rows [n_u*L, (n_u+n_y)*L) outputs y_t
/// The past/future split point L0 is fixed at construction so that every
/// downstream consumer sees one consistent (L0, Lp) pair.
///
/// Note on constructions: the i.i.d.-columns noise assumption behind the
/// stochastic predictors holds for Page and independent-experiment matrices
/// only. A Hankel matrix built from noisy data has correlated columns; the
/// CLI requires an explicit override to pair one with a nonzero noise model.
class SignalMatrix {
public:
    SignalMatrix(Matrix Z, Index L, Index L0, Index n_u, Index n_y,
                 Construction construction, Index discarded_samples = 0);

    Index L() const { return L_; }
    Index L0() const { return L0_; }
    Index Lp() const { return L_ - L0_; }
    Index n_u() const { return n_u_; }
    Index n_y() const { return n_y_; }
    Index M() const { return Z_.cols(); }
    Construction construction() const { return construction_; }
    /// Trailing samples dropped by the Page floor(T/L) policy.
    Index discarded_samples() const { return discarded_; }

    const Matrix& Z() const { return Z_; }

    auto u_past() const { return Z_.topRows(n_u_ * L0_); }
    auto u_future() const { return Z_.middleRows(n_u_ * L0_, n_u_ * Lp()); }
    auto u_block() const { return Z_.topRows(n_u_ * L_); }
    auto y_past() const { return Z_.middleRows(n_u_ * L_, n_y_ * L0_); }
    auto y_future() const { return Z_.bottomRows(n_y_ * Lp()); }

    Partition partition() const;

private:
    Matrix Z_;
    Index L_, L0_, n_u_, n_y_;
    Construction construction_;
    Index discarded_;
};

/// Page construction: M = floor(T/L) disjoint windows; trailing samples
/// beyond M*L are discarded (count retrievable via discarded_samples()).
SignalMatrix build_page(const Trajectory& traj, Index L, Index L0);

/// Mosaic Hankel construction: M = T - L + 1 unit-shifted windows.
SignalMatrix build_hankel(const Trajectory& traj, Index L, Index L0);

/// One column per independent experiment; every trajectory must have
/// length exactly L.
SignalMatrix from_trajectories(const std::vector<Trajectory>& trajs, Index L,
                               Index L0);

/// True iff the numerical rank of Z equals n_u * L + n_x (the exact
/// data-driven prediction condition).
bool check_rank(const SignalMatrix& sm, Index n_x);

}  // namespace ddpred
