#include "miirl/em.hpp"

#include <cmath>
#include <limits>

namespace miirl {

namespace {

void require_distribution(const Eigen::Ref<const Vector>& v, const char* what) {
    if (!v.allFinite() || (v.array() < 0.0).any() || std::abs(v.sum() - 1.0) > 1e-9) {
        throw std::invalid_argument(std::string(what) + " is not a probability distribution");
    }
}

}  // namespace

HmmPosteriors forward_backward(const Matrix& log_emissions, const Vector& pi0,
                               const Matrix& trans) {
    const Eigen::Index K = pi0.size();
    if (K == 0 || trans.rows() != K || trans.cols() != K || log_emissions.cols() != K) {
        throw std::invalid_argument("forward_backward: inconsistent intention counts");
    }
    require_distribution(pi0, "initial intention distribution");
    for (Eigen::Index k = 0; k < K; ++k) {
        require_distribution(trans.row(k).transpose(), "intention transition row");
    }

    const Eigen::Index N = log_emissions.rows();
    HmmPosteriors out;
    out.gamma = Matrix::Zero(N, K);
    if (N == 0) return out;

    constexpr double neg_inf = -std::numeric_limits<double>::infinity();

    // Emissions are shifted by their row maximum; the shift is added back to the
    // log-likelihood. A row that is -inf everywhere carries no information.
    Matrix emis(N, K);
    double shift_total = 0.0;
    bool impossible = false;
    for (Eigen::Index i = 0; i < N; ++i) {
        const double m = log_emissions.row(i).maxCoeff();
        if (m == neg_inf || std::isnan(m)) {
            emis.row(i).setOnes();
            impossible = true;
        } else {
            emis.row(i) = (log_emissions.row(i).array() - m).exp();
            shift_total += m;
        }
    }

    Matrix alpha(N, K);
    Vector scale(N);
    Eigen::RowVectorXd pred = pi0.transpose();
    for (Eigen::Index i = 0; i < N; ++i) {
        if (i > 0) pred = alpha.row(i - 1) * trans;
        Eigen::RowVectorXd a = pred.cwiseProduct(emis.row(i));
        double c = a.sum();
        if (!(c > 0.0)) {
            a = pred;
            c = a.sum();
            impossible = true;
        }
        scale(i) = c;
        alpha.row(i) = a / c;
    }

    Matrix beta(N, K);
    beta.row(N - 1).setOnes();
    for (Eigen::Index i = N - 2; i >= 0; --i) {
        Eigen::RowVectorXd tmp = emis.row(i + 1).cwiseProduct(beta.row(i + 1));
        beta.row(i) = (trans * tmp.transpose()).transpose() / scale(i + 1);
    }

    for (Eigen::Index i = 0; i < N; ++i) {
        Eigen::RowVectorXd g = alpha.row(i).cwiseProduct(beta.row(i));
        out.gamma.row(i) = g / g.sum();
    }

    out.xi.reserve(static_cast<std::size_t>(N > 0 ? N - 1 : 0));
    for (Eigen::Index i = 1; i < N; ++i) {
        Eigen::RowVectorXd right = emis.row(i).cwiseProduct(beta.row(i)) / scale(i);
        Matrix x = (alpha.row(i - 1).transpose() * right).cwiseProduct(trans);
        out.xi.push_back(x / x.sum());
    }

    out.total_ll = impossible ? neg_inf : scale.array().log().sum() + shift_total;
    return out;
}

}  // namespace miirl
