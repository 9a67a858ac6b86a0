#pragma once

// Single-hidden-layer regression network with tanh activation and min-max
// [0,1] normalization on both inputs and targets. Training is full-batch
// Adam with an L2 penalty and a geometric learning-rate decay; everything is
// deterministic for a given seed.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "heliquad/errors.hpp"

namespace heliquad {

struct MLPModel {
    Eigen::MatrixXd W1;  // hidden x in
    Eigen::VectorXd b1;
    Eigen::MatrixXd W2;  // out x hidden
    Eigen::VectorXd b2;
    Eigen::VectorXd in_min, in_max;    // per input feature
    Eigen::VectorXd out_min, out_max;  // per target

    int inputs() const { return static_cast<int>(W1.cols()); }
    int outputs() const { return static_cast<int>(W2.rows()); }
    int hidden() const { return static_cast<int>(W1.rows()); }

    Eigen::VectorXd normalize_in(const Eigen::VectorXd& x, bool* clamped) const {
        Eigen::VectorXd n(x.size());
        for (int i = 0; i < x.size(); ++i) {
            const double span = in_max(i) - in_min(i);
            double f = (x(i) - in_min(i)) / span;
            if (f < 0.0 || f > 1.0) {
                if (clamped) *clamped = true;
                f = std::clamp(f, 0.0, 1.0);
            }
            n(i) = f;
        }
        return n;
    }

    Eigen::VectorXd denormalize_out(const Eigen::VectorXd& y) const {
        Eigen::VectorXd o(y.size());
        for (int i = 0; i < y.size(); ++i) {
            const double span = out_max(i) - out_min(i);
            o(i) = out_min(i) + y(i) * (span > 0.0 ? span : 1.0);
        }
        return o;
    }

    // Forward pass in normalized space.
    Eigen::VectorXd forward_normalized(const Eigen::VectorXd& xn) const {
        return W2 * (W1 * xn + b1).array().tanh().matrix() + b2;
    }

    // Physical units in, physical units out. Inputs outside the training box
    // are clamped; *clamped reports that.
    Eigen::VectorXd infer(const Eigen::VectorXd& x, bool* clamped = nullptr) const {
        if (!x.allFinite()) throw NonFinite("mlp input");
        return denormalize_out(forward_normalized(normalize_in(x, clamped)));
    }
};

struct TrainHyper {
    int hidden = 15;
    int epochs = 60000;
    double lr = 0.01;
    double lr_end = 1e-3;  // geometric decay target over the run
    double beta1 = 0.9;
    double beta2 = 0.999;
    double l2 = 1e-6;
    double train_fraction = 0.7;
    std::uint64_t seed = 1;
};

struct TrainReport {
    double train_mse = 0;  // on normalized targets
    double test_mse = 0;
    int n_train = 0;
    int n_test = 0;
};

// X: n_in x n_samples, Y: n_out x n_samples (physical units).
inline MLPModel train_mlp(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                          const TrainHyper& hyper, TrainReport* report = nullptr) {
    const int n = static_cast<int>(X.cols());
    if (n < 100) throw OutOfRange("training needs at least 100 samples");
    if (Y.cols() != n) throw OutOfRange("X and Y sample counts differ");
    if (!X.allFinite() || !Y.allFinite()) throw NonFinite("training data");

    MLPModel m;
    m.in_min = X.rowwise().minCoeff();
    m.in_max = X.rowwise().maxCoeff();
    for (int i = 0; i < X.rows(); ++i)
        if (m.in_max(i) - m.in_min(i) <= 0.0)
            throw DegenerateNormalization("input feature " + std::to_string(i));
    m.out_min = Y.rowwise().minCoeff();
    m.out_max = Y.rowwise().maxCoeff();

    Eigen::MatrixXd Xn(X.rows(), n), Yn(Y.rows(), n);
    for (int i = 0; i < X.rows(); ++i)
        Xn.row(i) = (X.row(i).array() - m.in_min(i)) / (m.in_max(i) - m.in_min(i));
    for (int i = 0; i < Y.rows(); ++i) {
        const double span = m.out_max(i) - m.out_min(i);
        Yn.row(i) = (Y.row(i).array() - m.out_min(i)) / (span > 0.0 ? span : 1.0);
    }

    std::mt19937_64 rng(hyper.seed);

    // seeded 70:30 split
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    const int n_train = std::max(1, static_cast<int>(std::lround(hyper.train_fraction * n)));
    const int n_test = n - n_train;
    Eigen::MatrixXd Xtr(X.rows(), n_train), Ytr(Y.rows(), n_train);
    Eigen::MatrixXd Xte(X.rows(), std::max(1, n_test)), Yte(Y.rows(), std::max(1, n_test));
    for (int i = 0; i < n_train; ++i) {
        Xtr.col(i) = Xn.col(idx[i]);
        Ytr.col(i) = Yn.col(idx[i]);
    }
    for (int i = 0; i < n_test; ++i) {
        Xte.col(i) = Xn.col(idx[n_train + i]);
        Yte.col(i) = Yn.col(idx[n_train + i]);
    }

    const int h = hyper.hidden;
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto init = [&](Eigen::MatrixXd& w, double fan_in, double fan_out) {
        const double a = std::sqrt(6.0 / (fan_in + fan_out));
        for (int r = 0; r < w.rows(); ++r)
            for (int c = 0; c < w.cols(); ++c) w(r, c) = a * u(rng);
    };
    m.W1.resize(h, X.rows());
    m.W2.resize(Y.rows(), h);
    init(m.W1, X.rows(), h);
    init(m.W2, h, Y.rows());
    m.b1 = Eigen::VectorXd::Zero(h);
    m.b2 = Eigen::VectorXd::Zero(Y.rows());

    // Adam moments
    Eigen::MatrixXd mW1 = Eigen::MatrixXd::Zero(h, X.rows()), vW1 = mW1;
    Eigen::MatrixXd mW2 = Eigen::MatrixXd::Zero(Y.rows(), h), vW2 = mW2;
    Eigen::VectorXd mb1 = Eigen::VectorXd::Zero(h), vb1 = mb1;
    Eigen::VectorXd mb2 = Eigen::VectorXd::Zero(Y.rows()), vb2 = mb2;
    constexpr double kAdamEps = 1e-8;

    const double inv_n = 1.0 / n_train;
    const double lr_ratio = hyper.lr > 0.0 ? hyper.lr_end / hyper.lr : 1.0;
    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        const double lr =
            hyper.lr * std::pow(lr_ratio, hyper.epochs > 1
                                              ? static_cast<double>(epoch) / (hyper.epochs - 1)
                                              : 0.0);
        const Eigen::MatrixXd z1 = (m.W1 * Xtr).colwise() + m.b1;
        const Eigen::MatrixXd a1 = z1.array().tanh();
        const Eigen::MatrixXd out = (m.W2 * a1).colwise() + m.b2;
        const Eigen::MatrixXd err = out - Ytr;  // n_out x n_train

        const Eigen::MatrixXd gW2 = 2.0 * inv_n * err * a1.transpose() + 2.0 * hyper.l2 * m.W2;
        const Eigen::VectorXd gb2 = 2.0 * inv_n * err.rowwise().sum();
        const Eigen::MatrixXd d1 =
            (m.W2.transpose() * err).array() * (1.0 - a1.array().square());
        const Eigen::MatrixXd gW1 = 2.0 * inv_n * d1 * Xtr.transpose() + 2.0 * hyper.l2 * m.W1;
        const Eigen::VectorXd gb1 = 2.0 * inv_n * d1.rowwise().sum();

        const double bc1 = 1.0 - std::pow(hyper.beta1, epoch + 1);
        const double bc2 = 1.0 - std::pow(hyper.beta2, epoch + 1);
        auto adam = [&](auto& w, auto& mom, auto& vel, const auto& grad) {
            mom = hyper.beta1 * mom + (1.0 - hyper.beta1) * grad;
            vel = hyper.beta2 * vel + (1.0 - hyper.beta2) * grad.array().square().matrix();
            w -= lr * ((mom / bc1).array() / ((vel / bc2).array().sqrt() + kAdamEps))
                     .matrix();
        };
        adam(m.W1, mW1, vW1, gW1);
        adam(m.W2, mW2, vW2, gW2);
        adam(m.b1, mb1, vb1, gb1);
        adam(m.b2, mb2, vb2, gb2);
    }

    auto mse = [&](const Eigen::MatrixXd& Xs, const Eigen::MatrixXd& Ys, int cols) {
        if (cols == 0) return 0.0;
        const Eigen::MatrixXd out =
            ((m.W2 * ((m.W1 * Xs.leftCols(cols)).colwise() + m.b1).array().tanh().matrix())
                 .colwise() + m.b2);
        return (out - Ys.leftCols(cols)).squaredNorm() / (cols * Ys.rows());
    };
    if (report) {
        report->train_mse = mse(Xtr, Ytr, n_train);
        report->test_mse = mse(Xte, Yte, n_test);
        report->n_train = n_train;
        report->n_test = n_test;
    }
    return m;
}

// --- model file I/O (versioned text format) --------------------------------

inline void save_mlp(const MLPModel& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write model file: " + path);
    out.precision(17);
    out << "heliquad-mlp v1\n";
    out << "inputs " << m.inputs() << "\noutputs " << m.outputs() << "\nhidden "
        << m.hidden() << "\nactivation tanh\n";
    auto vec = [&](const char* tag, const Eigen::VectorXd& v) {
        out << tag;
        for (int i = 0; i < v.size(); ++i) out << ' ' << v(i);
        out << '\n';
    };
    auto mat = [&](const char* tag, const Eigen::MatrixXd& w) {
        out << tag;
        for (int r = 0; r < w.rows(); ++r)
            for (int c = 0; c < w.cols(); ++c) out << ' ' << w(r, c);
        out << '\n';
    };
    vec("in_min", m.in_min);
    vec("in_max", m.in_max);
    vec("out_min", m.out_min);
    vec("out_max", m.out_max);
    mat("W1", m.W1);
    vec("b1", m.b1);
    mat("W2", m.W2);
    vec("b2", m.b2);
}

inline MLPModel load_mlp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open model file: " + path);
    std::string header;
    std::getline(in, header);
    if (header != "heliquad-mlp v1") throw ParseError(path, 1, "bad model header");
    int n_in = 0, n_out = 0, n_hidden = 0;
    std::string key, act;
    in >> key >> n_in >> key >> n_out >> key >> n_hidden >> key >> act;
    if (act != "tanh") throw ParseError(path, 0, "unsupported activation: " + act);
    MLPModel m;
    auto vec = [&](Eigen::VectorXd& v, int len) {
        in >> key;
        v.resize(len);
        for (int i = 0; i < len; ++i) in >> v(i);
    };
    auto mat = [&](Eigen::MatrixXd& w, int r, int c) {
        in >> key;
        w.resize(r, c);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) in >> w(i, j);
    };
    vec(m.in_min, n_in);
    vec(m.in_max, n_in);
    vec(m.out_min, n_out);
    vec(m.out_max, n_out);
    mat(m.W1, n_hidden, n_in);
    vec(m.b1, n_hidden);
    mat(m.W2, n_out, n_hidden);
    vec(m.b2, n_out);
    if (!in) throw ParseError(path, 0, "truncated model file");
    return m;
}

}  // namespace heliquad
