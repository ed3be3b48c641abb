#pragma once

// Seeded generators for the two synthetic benchmarks: a five-predictor
// regression with one persistent, one vanishing and one intermittent
// coefficient, and a recursive (Cholesky-style) system whose lower-triangular
// coefficients follow a four-process menu.

#include <cstdint>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "dynss/dists.hpp"
#include "dynss/errors.hpp"

namespace dynss {

struct Dataset {
    Eigen::VectorXd y;
    Eigen::MatrixXd X;
    std::optional<Eigen::MatrixXd> truth; // T x q coefficient paths when synthetic
    std::string generator;
    std::uint64_t seed = 0;

    void validate() const {
        if (X.rows() == 0 || X.cols() == 0 || y.size() != X.rows())
            throw DataError("Dataset: design and response shapes disagree");
        if (!y.allFinite() || !X.allFinite()) throw DataError("Dataset: non-finite values");
        if (truth && (truth->rows() != X.rows() || truth->cols() != X.cols()))
            throw DataError("Dataset: truth shape must match the design");
    }
};

// Five predictors, T = 200, unit observation noise, iid standard normal
// design. Coefficient 1 is a stationary AR(1) around 2 with stationary
// variance 0.25; coefficient 2 runs the same zero-mean recursion (but is
// initialized from N(2, 0.25), as specified) and is switched off after
// t = 100; coefficient 3 is -2 on [21,50] and [121,150]; 4 and 5 are zero.
inline Dataset generate_example1(std::uint64_t seed) {
    const int T = 200, q = 5;
    Rng rng(seed);
    Eigen::MatrixXd truth = Eigen::MatrixXd::Zero(T, q);

    const double phi = 0.97;
    const double innov_sd = std::sqrt(0.25 * (1.0 - phi * phi));
    truth(0, 0) = 2.0 + 0.5 * rng.normal();
    for (int t = 1; t < T; ++t)
        truth(t, 0) = 2.0 + phi * (truth(t - 1, 0) - 2.0) + innov_sd * rng.normal();

    truth(0, 1) = 2.0 + 0.5 * rng.normal();
    for (int t = 1; t < 100; ++t) truth(t, 1) = phi * truth(t - 1, 1) + innov_sd * rng.normal();

    for (int t = 0; t < T; ++t) {
        const int time = t + 1;
        if ((time >= 21 && time <= 50) || (time >= 121 && time <= 150)) truth(t, 2) = -2.0;
    }

    Eigen::MatrixXd X(T, q);
    for (int t = 0; t < T; ++t)
        for (int j = 0; j < q; ++j) X(t, j) = rng.normal();
    Eigen::VectorXd y(T);
    for (int t = 0; t < T; ++t) y[t] = X.row(t).dot(truth.row(t)) + rng.normal();

    Dataset d;
    d.y = std::move(y);
    d.X = std::move(X);
    d.truth = std::move(truth);
    d.generator = "example1";
    d.seed = seed;
    return d;
}

struct CholeskySystem {
    std::vector<Eigen::MatrixXd> B; // per t: q x q, strictly lower triangular
    Eigen::MatrixXd series;         // T x q generated variables
    Eigen::MatrixXd eps;            // T x q innovations, kept so (I-B_t) y_t = eps_t is checkable

    void validate() const {
        const int T = static_cast<int>(B.size());
        if (T == 0 || series.rows() != T || eps.rows() != T || series.cols() != eps.cols())
            throw DataError("CholeskySystem: inconsistent shapes");
        for (const Eigen::MatrixXd& Bt : B) {
            if (Bt.rows() != series.cols() || Bt.cols() != series.cols())
                throw DataError("CholeskySystem: coefficient matrix shape");
            for (int i = 0; i < Bt.rows(); ++i)
                for (int j = i; j < Bt.cols(); ++j)
                    if (Bt(i, j) != 0.0)
                        throw DataError("CholeskySystem: B must be strictly lower triangular");
        }
    }
};

struct Example2 {
    CholeskySystem system;
    std::vector<Dataset> equations; // equation i regresses series i on all earlier ones
};

// The deterministic step process of the recursive benchmark: -0.5 on
// (T/8, 3T/8] and (5T/8, 7T/8], zero elsewhere (1-based time, half-open
// on the left as printed).
inline Eigen::VectorXd example2_step_path(int T) {
    Eigen::VectorXd path = Eigen::VectorXd::Zero(T);
    for (int time = 1; time <= T; ++time) {
        const bool on = (8 * time > T && 8 * time <= 3 * T) || (8 * time > 5 * T && 8 * time <= 7 * T);
        if (on) path[time - 1] = -0.5;
    }
    return path;
}

// Recursive system of q variables over T = 240: each strictly-lower
// coefficient path is drawn uniformly from four processes -- (1) stationary
// AR(1) with phi = 0.98 and innovation variance (1-phi)*0.15, (2) the same
// but zeroed for t > T/2, (3) the step path above, (4) identically zero.
// Variables build up recursively, y_i = sum_{j<i} B_{ij,t} y_j + eps_i with
// eps ~ N(0, 0.0625), giving q-1 regression datasets with known truth.
inline Example2 generate_example2(std::uint64_t seed, int q = 10) {
    const int T = 240;
    if (q < 2) throw DomainError("generate_example2: need at least two variables");
    Rng rng(seed);

    const double phi = 0.98;
    const double innov_sd = std::sqrt((1.0 - phi) * 0.15);
    const double stat_sd = innov_sd / std::sqrt(1.0 - phi * phi);
    const Eigen::VectorXd step = example2_step_path(T);

    std::vector<Eigen::MatrixXd> B(static_cast<size_t>(T), Eigen::MatrixXd::Zero(q, q));
    for (int i = 1; i < q; ++i) {
        for (int j = 0; j < i; ++j) {
            const int proc = std::min(3, static_cast<int>(rng.uniform() * 4.0));
            Eigen::VectorXd path = Eigen::VectorXd::Zero(T);
            if (proc == 0 || proc == 1) {
                path[0] = stat_sd * rng.normal();
                for (int t = 1; t < T; ++t) path[t] = phi * path[t - 1] + innov_sd * rng.normal();
                if (proc == 1)
                    for (int t = T / 2; t < T; ++t) path[t] = 0.0; // times T/2+1 .. T
            } else if (proc == 2) {
                path = step;
            }
            for (int t = 0; t < T; ++t) B[static_cast<size_t>(t)](i, j) = path[t];
        }
    }

    Eigen::MatrixXd eps(T, q);
    for (int t = 0; t < T; ++t)
        for (int i = 0; i < q; ++i) eps(t, i) = 0.25 * rng.normal();
    Eigen::MatrixXd series(T, q);
    for (int t = 0; t < T; ++t) {
        for (int i = 0; i < q; ++i) {
            double v = eps(t, i);
            for (int j = 0; j < i; ++j) v += B[static_cast<size_t>(t)](i, j) * series(t, j);
            series(t, i) = v;
        }
    }

    Example2 out;
    out.system.B = std::move(B);
    out.system.series = series;
    out.system.eps = std::move(eps);
    out.equations.reserve(static_cast<size_t>(q - 1));
    for (int i = 1; i < q; ++i) {
        Dataset d;
        d.y = series.col(i);
        d.X = series.leftCols(i);
        Eigen::MatrixXd truth(T, i);
        for (int t = 0; t < T; ++t)
            truth.row(t) = out.system.B[static_cast<size_t>(t)].row(i).head(i);
        d.truth = std::move(truth);
        d.generator = "example2-eq" + std::to_string(i + 1);
        d.seed = seed;
        out.equations.push_back(std::move(d));
    }
    return out;
}

// Independent seeded replications via the seed-derivation stream.
template <typename Gen>
auto replicate(Gen&& gen, int n_rep, std::uint64_t base_seed)
    -> std::vector<std::invoke_result_t<Gen&, std::uint64_t>> {
    if (n_rep < 1) throw DomainError("replicate: need at least one replication");
    std::vector<std::invoke_result_t<Gen&, std::uint64_t>> out;
    out.reserve(static_cast<size_t>(n_rep));
    for (int rep = 0; rep < n_rep; ++rep) out.push_back(gen(derive_seed(base_seed, rep)));
    return out;
}

} // namespace dynss
