#include "bslab/weight.hpp"

#include <cmath>
#include <memory>

#include "bslab/csv.hpp"
#include "bslab/errors.hpp"

namespace bslab {

namespace {

using Cmat = Eigen::MatrixXcd;

Eigen::SelfAdjointEigenSolver<Cmat> hermitian_eig(const Cmat& h, const char* who) {
    Eigen::SelfAdjointEigenSolver<Cmat> es(h);
    if (es.info() != Eigen::Success) throw numerical_failure(std::string(who) + ": eig failed");
    return es;
}

double hermitian_defect(const Cmat& v) {
    return (v - v.adjoint()).norm();
}

}  // namespace

const char* preset_name(WeightPreset p) {
    switch (p) {
        case WeightPreset::scalar_const: return "scalar_const";
        case WeightPreset::scalar_profile: return "scalar_profile";
        case WeightPreset::hermitian_rotated: return "hermitian_rotated";
        case WeightPreset::nilpotent: return "nilpotent";
        case WeightPreset::custom: return "custom";
    }
    return "custom";
}

Eigen::MatrixXcd abs_matrix(const Cmat& v) {
    if (v.rows() != v.cols()) throw invalid_parameter("abs_matrix: matrix must be square");
    const Cmat h = v.adjoint() * v;
    auto es = hermitian_eig(h, "abs_matrix");
    Eigen::VectorXd roots = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().adjoint();
}

HermitianSplit hermitian_split(const Cmat& v) {
    if (v.rows() != v.cols()) throw invalid_parameter("hermitian_split: matrix must be square");
    if (hermitian_defect(v) > 1e-12 * std::max(1.0, v.norm()))
        throw invalid_parameter("hermitian_split: input is not Hermitian");
    const Cmat h = (v + v.adjoint()) / 2.0;
    auto es = hermitian_eig(h, "hermitian_split");
    const Eigen::VectorXd lam = es.eigenvalues();
    HermitianSplit out;
    out.absV = es.eigenvectors() * lam.cwiseAbs().asDiagonal() * es.eigenvectors().adjoint();
    out.Vplus = (out.absV + v) / 2.0;
    out.Vminus = (out.absV - v) / 2.0;
    return out;
}

double trace_power(const Cmat& p, double theta) {
    if (p.rows() != p.cols()) throw invalid_parameter("trace_power: matrix must be square");
    if (!(theta > 0.0)) throw invalid_parameter("trace_power: theta must be > 0");
    if (hermitian_defect(p) > 1e-12 * std::max(1.0, p.norm()))
        throw invalid_parameter("trace_power: input is not Hermitian");
    auto es = hermitian_eig((p + p.adjoint()) / 2.0, "trace_power");
    const Eigen::VectorXd lam = es.eigenvalues();
    const double scale = std::max(lam.cwiseAbs().maxCoeff(), 0.0);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
        if (lam(i) < -1e-10 * std::max(1e-300, scale))
            throw invalid_parameter("trace_power: matrix is not PSD (eigenvalue " +
                                    csv::fmt(lam(i)) + ")");
        if (lam(i) > 0.0) sum += std::pow(lam(i), theta);
    }
    return sum;
}

double weight_norm_theta(const MatrixWeightField& v, const DiscreteMeasure& mu, double theta) {
    if (!(theta > 1.0))
        throw unsupported_branch("weight_norm_theta: only the theta > 1 branch is implemented");
    double acc = 0.0;
    for (const Atom& a : mu.atoms) {
        const Cmat m = v.eval(a.point);
        const double op = m.jacobiSvd().singularValues()(0);
        acc += a.weight * std::pow(op, theta);
    }
    return std::pow(acc, 1.0 / theta);
}

Factorization factorize(const Cmat& v) {
    if (v.rows() != v.cols()) throw invalid_parameter("factorize: matrix must be square");
    const Cmat h = v.adjoint() * v;
    auto es = hermitian_eig(h, "factorize");
    const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
    const double lam_max = lam.size() ? lam.maxCoeff() : 0.0;
    const double tol = 1e-12 * std::max(1e-300, lam_max);
    Eigen::VectorXd w(lam.size()), winv(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
        // W = |V|^{1/2} has eigenvalues lam^{1/4}.
        const double r = std::pow(lam(i), 0.25);
        w(i) = lam(i) <= tol ? 0.0 : r;
        winv(i) = lam(i) <= tol ? 0.0 : 1.0 / r;
    }
    Factorization f;
    f.W = es.eigenvectors() * w.asDiagonal() * es.eigenvectors().adjoint();
    const Cmat wplus = es.eigenvectors() * winv.asDiagonal() * es.eigenvectors().adjoint();
    f.U = wplus * v * wplus;
    return f;
}

namespace {

struct SampledField {
    std::shared_ptr<std::vector<Atom>> atoms;
    std::shared_ptr<std::vector<Cmat>> values;
};

SampledField sample_field(const MatrixWeightField& v, const DiscreteMeasure& mu) {
    SampledField s;
    s.atoms = std::make_shared<std::vector<Atom>>(mu.atoms);
    s.values = std::make_shared<std::vector<Cmat>>();
    s.values->reserve(mu.atoms.size());
    for (const Atom& a : mu.atoms) s.values->push_back(v.eval(a.point));
    return s;
}

}  // namespace

MollifiedField mollify(const MatrixWeightField& v, const DiscreteMeasure& mu, double eps) {
    if (!(eps > 0.0)) throw invalid_parameter("mollify: eps must be > 0");
    SampledField s = sample_field(v, mu);
    const int m = v.m;
    auto smoothed = [s, eps, m](const Eigen::VectorXd& x) -> Cmat {
        Cmat num = Cmat::Zero(m, m);
        double den = 0.0;
        const auto& atoms = *s.atoms;
        const auto& vals = *s.values;
        for (std::size_t j = 0; j < atoms.size(); ++j) {
            const double d = (x - atoms[j].point).norm();
            const double g = atoms[j].weight * std::exp(-d * d / (2.0 * eps * eps));
            num += g * vals[j];
            den += g;
        }
        return num / den;
    };
    MollifiedField out;
    out.field.m = m;
    out.field.preset = WeightPreset::custom;
    out.field.hermitian_flag = v.hermitian_flag;
    out.field.eval = smoothed;
    out.y_eps.m = m;
    out.y_eps.preset = WeightPreset::custom;
    out.y_eps.hermitian_flag = true;
    out.y_eps.eval = [smoothed, eps, m](const Eigen::VectorXd& x) -> Cmat {
        const Cmat ve = smoothed(x);
        const Cmat h = ve.adjoint() * ve + eps * eps * Cmat::Identity(m, m);
        Eigen::SelfAdjointEigenSolver<Cmat> es(h);
        if (es.info() != Eigen::Success) throw numerical_failure("mollify: y_eps eig failed");
        return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
               es.eigenvectors().adjoint();
    };
    return out;
}

MatrixWeightField scalar_const(double c) {
    MatrixWeightField f;
    f.m = 1;
    f.preset = WeightPreset::scalar_const;
    f.hermitian_flag = true;
    f.eval = [c](const Eigen::VectorXd&) { return Cmat::Constant(1, 1, c); };
    return f;
}

MatrixWeightField scalar_profile(std::function<double(const Eigen::VectorXd&)> v) {
    MatrixWeightField f;
    f.m = 1;
    f.preset = WeightPreset::scalar_profile;
    f.hermitian_flag = true;
    f.eval = [v = std::move(v)](const Eigen::VectorXd& x) { return Cmat::Constant(1, 1, v(x)); };
    return f;
}

MatrixWeightField hermitian_rotated(std::function<double(const Eigen::VectorXd&)> a,
                                    std::function<double(const Eigen::VectorXd&)> b,
                                    std::function<double(const Eigen::VectorXd&)> angle) {
    MatrixWeightField f;
    f.m = 2;
    f.preset = WeightPreset::hermitian_rotated;
    f.hermitian_flag = true;
    f.eval = [a = std::move(a), b = std::move(b),
              angle = std::move(angle)](const Eigen::VectorXd& x) -> Cmat {
        const double av = a(x), bv = b(x), th = angle(x);
        const double c = std::cos(th), s = std::sin(th);
        Eigen::Matrix2d r;
        r << c, -s, s, c;
        Eigen::Matrix2d d = Eigen::Vector2d(av, -bv).asDiagonal();
        return (r * d * r.transpose()).cast<std::complex<double>>();
    };
    return f;
}

MatrixWeightField nilpotent(std::function<std::complex<double>(const Eigen::VectorXd&)> v) {
    MatrixWeightField f;
    f.m = 2;
    f.preset = WeightPreset::nilpotent;
    f.hermitian_flag = false;
    f.eval = [v = std::move(v)](const Eigen::VectorXd& x) -> Cmat {
        Cmat m = Cmat::Zero(2, 2);
        m(0, 1) = v(x);
        return m;
    };
    return f;
}

MatrixWeightField custom_field(int m, std::function<Cmat(const Eigen::VectorXd&)> eval,
                               bool hermitian) {
    if (m < 1) throw invalid_parameter("custom_field: m must be >= 1");
    MatrixWeightField f;
    f.m = m;
    f.preset = WeightPreset::custom;
    f.hermitian_flag = hermitian;
    f.eval = std::move(eval);
    return f;
}

MatrixWeightField difference_field(const MatrixWeightField& a, const MatrixWeightField& b) {
    if (a.m != b.m) throw invalid_parameter("difference_field: size mismatch");
    MatrixWeightField f;
    f.m = a.m;
    f.preset = WeightPreset::custom;
    f.hermitian_flag = a.hermitian_flag && b.hermitian_flag;
    f.eval = [ea = a.eval, eb = b.eval](const Eigen::VectorXd& x) -> Cmat {
        return ea(x) - eb(x);
    };
    return f;
}

void export_weight_csv(const MatrixWeightField& v, const DiscreteMeasure& mu,
                       const std::string& path) {
    csv::Writer w(path);
    w.line("# preset=" + std::string(preset_name(v.preset)) + ",m=" + std::to_string(v.m) +
           ",hermitian=" + csv::fmt(v.hermitian_flag));
    std::string header = "atom_index";
    for (int i = 1; i <= v.m; ++i)
        for (int j = 1; j <= v.m; ++j) {
            header += ",re(V_" + std::to_string(i) + std::to_string(j) + ")";
            header += ",im(V_" + std::to_string(i) + std::to_string(j) + ")";
        }
    w.line(header);
    for (int idx = 0; idx < mu.size(); ++idx) {
        const Cmat m = v.eval(mu.atoms[idx].point);
        std::string row = std::to_string(idx);
        for (int i = 0; i < v.m; ++i)
            for (int j = 0; j < v.m; ++j) {
                row += "," + csv::fmt(m(i, j).real());
                row += "," + csv::fmt(m(i, j).imag());
            }
        w.line(row);
    }
}

}  // namespace bslab
