#include "ddpred/signal_matrix.hpp"

#include <string>

#include "ddpred/errors.hpp"

namespace ddpred {

namespace {

// Writes window [start, start + L) of traj into column col of Z.
void fill_column(Matrix& Z, Index col, const Trajectory& traj, Index start,
                 Index L) {
    const Index n_u = traj.n_u();
    const Index n_y = traj.n_y();
    for (Index t = 0; t < L; ++t) {
        Z.block(t * n_u, col, n_u, 1) = traj.inputs().col(start + t);
        Z.block(n_u * L + t * n_y, col, n_y, 1) = traj.outputs().col(start + t);
    }
}

}  // namespace

SignalMatrix::SignalMatrix(Matrix Z, Index L, Index L0, Index n_u, Index n_y,
                           Construction construction, Index discarded_samples)
    : Z_(std::move(Z)),
      L_(L),
      L0_(L0),
      n_u_(n_u),
      n_y_(n_y),
      construction_(construction),
      discarded_(discarded_samples) {
    if (L0_ < 1 || L_ - L0_ < 1)
        throw InvalidArgument("need L0 >= 1 and Lp = L - L0 >= 1");
    if (n_u_ < 1 || n_y_ < 1) throw InvalidArgument("channel counts must be positive");
    if (Z_.rows() != L_ * (n_u_ + n_y_))
        throw DimensionError("Z must have L * (n_u + n_y) rows");
    if (Z_.cols() < 1) throw DimensionError("Z must have at least one column");
}

Partition SignalMatrix::partition() const {
    return Partition{u_past(), u_future(), y_past(), y_future()};
}

SignalMatrix build_page(const Trajectory& traj, Index L, Index L0) {
    const Index T = traj.length();
    if (T < L)
        throw TrajectoryTooShort("trajectory length " + std::to_string(T) +
                                 " is below window length " + std::to_string(L));
    const Index M = T / L;
    Matrix Z(L * (traj.n_u() + traj.n_y()), M);
    for (Index i = 0; i < M; ++i) fill_column(Z, i, traj, i * L, L);
    return SignalMatrix(std::move(Z), L, L0, traj.n_u(), traj.n_y(),
                        Construction::Page, T - M * L);
}

SignalMatrix build_hankel(const Trajectory& traj, Index L, Index L0) {
    const Index T = traj.length();
    if (T < L)
        throw TrajectoryTooShort("trajectory length " + std::to_string(T) +
                                 " is below window length " + std::to_string(L));
    const Index M = T - L + 1;
    Matrix Z(L * (traj.n_u() + traj.n_y()), M);
    for (Index i = 0; i < M; ++i) fill_column(Z, i, traj, i, L);
    return SignalMatrix(std::move(Z), L, L0, traj.n_u(), traj.n_y(),
                        Construction::Hankel);
}

SignalMatrix from_trajectories(const std::vector<Trajectory>& trajs, Index L,
                               Index L0) {
    if (trajs.empty()) throw LengthMismatch("need at least one trajectory");
    const Index n_u = trajs.front().n_u();
    const Index n_y = trajs.front().n_y();
    Matrix Z(L * (n_u + n_y), Index(trajs.size()));
    for (std::size_t i = 0; i < trajs.size(); ++i) {
        const Trajectory& traj = trajs[i];
        if (traj.length() != L)
            throw LengthMismatch("trajectory " + std::to_string(i) + " has length " +
                                 std::to_string(traj.length()) + ", expected " +
                                 std::to_string(L));
        if (traj.n_u() != n_u || traj.n_y() != n_y)
            throw DimensionError("trajectories must share channel counts");
        fill_column(Z, Index(i), traj, 0, L);
    }
    return SignalMatrix(std::move(Z), L, L0, n_u, n_y, Construction::Independent);
}

bool check_rank(const SignalMatrix& sm, Index n_x) {
    if (n_x < 1) throw InvalidArgument("n_x must be positive");
    return linalg::numerical_rank(sm.Z()) == sm.n_u() * sm.L() + n_x;
}

}  // namespace ddpred
