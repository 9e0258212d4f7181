#pragma once

#include <optional>

#include "ddpred/linalg.hpp"
#include "ddpred/rng.hpp"

namespace ddpred {

/// Discrete-time LTI system
///   x_{t+1} = A x_t + B u_t
///   y_t     = C x_t + D u_t + w_t
/// with output noise w_t. Immutable after construction; construction
/// validates shapes and finiteness of every entry.
class StateSpaceModel {
public:
    StateSpaceModel(Matrix A, Matrix B, Matrix C, Matrix D);

    Index n_x() const { return A_.rows(); }
    Index n_u() const { return B_.cols(); }
    Index n_y() const { return C_.rows(); }

    const Matrix& A() const { return A_; }
    const Matrix& B() const { return B_; }
    const Matrix& C() const { return C_; }
    const Matrix& D() const { return D_; }

private:
    Matrix A_, B_, C_, D_;
};

/// Input-output record of one experiment, one column per time step.
class Trajectory {
public:
    Trajectory(Matrix inputs, Matrix outputs);

    Index length() const { return inputs_.cols(); }
    Index n_u() const { return inputs_.rows(); }
    Index n_y() const { return outputs_.rows(); }

    const Matrix& inputs() const { return inputs_; }
    const Matrix& outputs() const { return outputs_; }

private:
    Matrix inputs_, outputs_;
};

/// Simulates the model from state x0 over the given input columns;
/// per-step output noise columns are added when provided.
Trajectory simulate(const StateSpaceModel& model, const Vector& x0,
                    const Matrix& inputs,
                    const std::optional<Matrix>& noise = std::nullopt);

/// State reached after feeding all input columns from x0.
Vector advance_state(const StateSpaceModel& model, const Vector& x0,
                     const Matrix& inputs);

/// Smallest k such that col(C, CA, ..., CA^{k-1}) has full column rank.
/// Throws UnobservableSystem when even k = n_x is rank deficient.
Index observability_index(const StateSpaceModel& model);

/// col(C, CA, ..., CA^{k-1}), shape (n_y * k) x n_x.
Matrix extended_observability(const StateSpaceModel& model, Index k);

/// Free-response map col(CA^{L0},...,CA^{L0+Lp-1}) * pinv(col(C,...,CA^{L0-1})).
/// Requires L0 at least the observability index (else the past window does
/// not pin down the state); throws LagTooShort otherwise.
Matrix gamma_model_based(const StateSpaceModel& model, Index L0, Index Lp);

/// Controllability Gramian Wc solving A Wc A^T - Wc + B B^T = 0; this is
/// also the stationary state covariance under unit white-noise inputs.
/// Throws UnstableSystem when the spectral radius is not below 1 - 1e-6.
Matrix controllability_gramian(const StateSpaceModel& model);

/// H2 norm sqrt(tr(C Wc C^T) + tr(D D^T)) with Wc the controllability
/// Gramian. Throws UnstableSystem for unstable models.
double h2_norm(const StateSpaceModel& model);

struct IndexInterval {
    Index lo;
    Index hi;
};

/// Draws an observable, Schur-stable model with n_x uniform on the given
/// interval and unit H2 norm (C and D rescaled jointly). Eigenvalues of A
/// have magnitudes uniform on [0.1, 0.95] with complex pairs allowed; B, C,
/// D entries are standard normal, D present with probability one half.
/// Resamples up to 100 times before throwing GenerationFailed.
StateSpaceModel random_system(IndexInterval n_x_range, Index n_u, Index n_y,
                              Rng& rng);

}  // namespace ddpred
