#include "bslab/linalg.hpp"

#include <algorithm>
#include <atomic>
#include <complex>
#include <thread>

#include "bslab/errors.hpp"

#define LAPACK_COMPLEX_CPP
#include <lapacke.h>

extern "C" void openblas_set_num_threads(int);

namespace bslab::linalg {

namespace {

std::atomic<int> g_threads{0};

int default_threads() {
    unsigned hw = std::thread::hardware_concurrency();
    return static_cast<int>(std::clamp(hw, 1u, 8u));
}

void require_finite(const Eigen::MatrixXd& a, const char* who) {
    if (!a.allFinite()) throw numerical_failure(std::string(who) + ": non-finite input");
}

void require_finite(const Eigen::MatrixXcd& a, const char* who) {
    if (!a.allFinite()) throw numerical_failure(std::string(who) + ": non-finite input");
}

void require_square(Eigen::Index rows, Eigen::Index cols, const char* who) {
    if (rows != cols) throw invalid_parameter(std::string(who) + ": matrix must be square");
}

[[noreturn]] void lapack_fail(const char* who, int info) {
    throw numerical_failure(std::string(who) + ": LAPACK info " + std::to_string(info));
}

}  // namespace

void set_num_threads(int n) {
    n = std::max(1, n);
    g_threads.store(n);
    openblas_set_num_threads(n);
}

int num_threads() {
    int n = g_threads.load();
    if (n == 0) {
        n = default_threads();
        set_num_threads(n);
    }
    return n;
}

SymEig sym_eig(const Eigen::MatrixXd& a) {
    require_square(a.rows(), a.cols(), "sym_eig");
    require_finite(a, "sym_eig");
    num_threads();
    const lapack_int n = static_cast<lapack_int>(a.rows());
    SymEig out;
    out.vectors = a;
    out.values.resize(n);
    if (n == 0) return out;
    int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, out.vectors.data(), n,
                              out.values.data());
    if (info != 0) lapack_fail("sym_eig", info);
    return out;
}

Eigen::VectorXd sym_eigvalues(const Eigen::MatrixXd& a) {
    require_square(a.rows(), a.cols(), "sym_eigvalues");
    require_finite(a, "sym_eigvalues");
    num_threads();
    const lapack_int n = static_cast<lapack_int>(a.rows());
    Eigen::MatrixXd work = a;
    Eigen::VectorXd w(n);
    if (n == 0) return w;
    int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'N', 'L', n, work.data(), n, w.data());
    if (info != 0) lapack_fail("sym_eigvalues", info);
    return w;
}

HermEig herm_eig(const Eigen::MatrixXcd& a) {
    require_square(a.rows(), a.cols(), "herm_eig");
    require_finite(a, "herm_eig");
    num_threads();
    const lapack_int n = static_cast<lapack_int>(a.rows());
    HermEig out;
    out.vectors = a;
    out.values.resize(n);
    if (n == 0) return out;
    int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n,
                              reinterpret_cast<lapack_complex_double*>(out.vectors.data()), n,
                              out.values.data());
    if (info != 0) lapack_fail("herm_eig", info);
    return out;
}

Eigen::VectorXd herm_eigvalues(const Eigen::MatrixXcd& a) {
    require_square(a.rows(), a.cols(), "herm_eigvalues");
    require_finite(a, "herm_eigvalues");
    num_threads();
    const lapack_int n = static_cast<lapack_int>(a.rows());
    Eigen::MatrixXcd work = a;
    Eigen::VectorXd w(n);
    if (n == 0) return w;
    int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'N', 'L', n,
                              reinterpret_cast<lapack_complex_double*>(work.data()), n, w.data());
    if (info != 0) lapack_fail("herm_eigvalues", info);
    return w;
}

Eigen::VectorXd singular_values(const Eigen::MatrixXd& a) {
    require_finite(a, "singular_values");
    num_threads();
    const lapack_int mr = static_cast<lapack_int>(a.rows());
    const lapack_int mc = static_cast<lapack_int>(a.cols());
    Eigen::MatrixXd work = a;
    Eigen::VectorXd s(std::min(mr, mc));
    if (s.size() == 0) return s;
    int info = LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'N', mr, mc, work.data(), std::max<lapack_int>(1, mr),
                              s.data(), nullptr, 1, nullptr, 1);
    if (info != 0) lapack_fail("singular_values", info);
    return s;
}

Eigen::VectorXd singular_values(const Eigen::MatrixXcd& a) {
    require_finite(a, "singular_values");
    num_threads();
    const lapack_int mr = static_cast<lapack_int>(a.rows());
    const lapack_int mc = static_cast<lapack_int>(a.cols());
    Eigen::MatrixXcd work = a;
    Eigen::VectorXd s(std::min(mr, mc));
    if (s.size() == 0) return s;
    int info = LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'N', mr, mc,
                              reinterpret_cast<lapack_complex_double*>(work.data()),
                              std::max<lapack_int>(1, mr), s.data(), nullptr, 1, nullptr, 1);
    if (info != 0) lapack_fail("singular_values", info);
    return s;
}

Eigen::VectorXcd general_eigenvalues(const Eigen::MatrixXcd& a) {
    require_square(a.rows(), a.cols(), "general_eigenvalues");
    require_finite(a, "general_eigenvalues");
    num_threads();
    const lapack_int n = static_cast<lapack_int>(a.rows());
    Eigen::MatrixXcd work = a;
    Eigen::VectorXcd ev(n);
    if (n == 0) return ev;
    int info = LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'N', n,
                             reinterpret_cast<lapack_complex_double*>(work.data()), n,
                             reinterpret_cast<lapack_complex_double*>(ev.data()), nullptr, 1,
                             nullptr, 1);
    if (info != 0) lapack_fail("general_eigenvalues", info);
    return ev;
}

}  // namespace bslab::linalg
